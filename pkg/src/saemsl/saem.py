"""Exponential-family SAEM machinery and the particle-filter SAEM driver.

The stochastic-approximation step averages complete-model sufficient
statistics with a step schedule that stays at 1 for a warmup block and then
decays as (k - K1)^(-beta); the M-steps for the two state-space models are
closed form (variance ratios for the nonlinear Gaussian model, a fine-grid
regression for the pharmacokinetic SDE).
"""

from __future__ import annotations

import logging
from dataclasses import dataclass

import numpy as np

from .smc import bootstrap_filter, sample_genealogy_indices

logger = logging.getLogger(__name__)

VARIANCE_FLOOR = 1e-8


@dataclass(frozen=True)
class StepSchedule:
    """gamma_k = 1 for k <= k1, (k - k1)^(-beta) afterwards (k is 1-based)."""

    k1: int
    total: int
    beta: float = 1.0

    def __post_init__(self):
        if not 0.5 < self.beta <= 1.0:
            raise ValueError(f"beta must be in (0.5, 1], got {self.beta}")
        if self.k1 < 0 or self.total < 1:
            raise ValueError("need k1 >= 0 and total >= 1")

    def gamma(self, k: int) -> float:
        if k <= self.k1:
            return 1.0
        return float(k - self.k1) ** (-self.beta)


def sa_update(s_prev, s_new, gamma: float):
    """Robbins-Monro step s + gamma (S - s); works for vectors and matrices."""
    if not 0.0 <= gamma <= 1.0:
        raise ValueError(f"gamma must be in [0,1], got {gamma}")
    s_prev = np.asarray(s_prev, dtype=float)
    s_new = np.asarray(s_new, dtype=float)
    if s_prev.shape != s_new.shape:
        raise ValueError(f"shape mismatch {s_prev.shape} vs {s_new.shape}")
    return s_prev + gamma * (s_new - s_prev)


# ---------------------------------------------------------------------------
# nonlinear Gaussian model: statistics and closed-form M-step


def nlg_suffstats(y: np.ndarray, x_full: np.ndarray) -> np.ndarray:
    """(sum (X_j - 2 sin(exp(X_{j-1})))^2, sum (Y_j - X_j)^2); x_full includes X_0."""
    y = np.asarray(y, dtype=float)
    x_full = np.asarray(x_full, dtype=float)
    if x_full.shape[0] != y.shape[0] + 1:
        raise ValueError("latent path must carry X_0 plus one state per observation")
    x_prev, x = x_full[:-1], x_full[1:]
    s_x = np.sum((x - 2.0 * np.sin(np.exp(x_prev))) ** 2)
    s_y = np.sum((y - x) ** 2)
    return np.array([s_x, s_y])


def nlg_mstep(s: np.ndarray, n: int) -> np.ndarray:
    """Variance maximizers S/n, floored; returned on the (sigma_x, sigma_y) scale."""
    var = np.maximum(np.asarray(s, dtype=float) / n, VARIANCE_FLOOR)
    return np.sqrt(var)


# ---------------------------------------------------------------------------
# pharmacokinetic SDE: regression statistics and M-step


def theo_suffstats(y, fine_path, grid_times, obs_times, dose, ka, h, t0) -> np.ndarray:
    """(beta1_hat, beta2_hat, S_sigma2, S_sigma_eps2) from a fine-grid path.

    Normalized increments V_i = (x_i - x_{i-1})/sqrt(x_{i-1}) regress on the
    absorption input C1 and the linear-loss term C2; the residual sum of
    squares over h supplies the diffusion statistic, and the interpolated
    path at the sampling times supplies the measurement-error statistic.
    """
    x = np.asarray(fine_path, dtype=float)
    y = np.asarray(y, dtype=float)
    x_prev = x[:-1]
    sqrt_prev = np.sqrt(x_prev)
    v = (x[1:] - x_prev) / sqrt_prev
    c1 = dose * ka * np.exp(-ka * np.asarray(grid_times)[:-1]) * h / sqrt_prev
    c2 = -sqrt_prev * h
    C = np.column_stack([c1, c2])
    ctc = C.T @ C
    try:
        beta = np.linalg.solve(ctc, C.T @ v)
    except np.linalg.LinAlgError:
        raise ValueError("singular regression (constant latent path)") from None
    resid = v - C @ beta
    s_sigma2 = float(np.sum(resid * resid) / h)
    x_at_obs = np.interp(np.asarray(obs_times, dtype=float),
                         np.asarray(grid_times, dtype=float), x)
    s_eps2 = float(np.sum((y - x_at_obs) ** 2))
    return np.array([beta[0], beta[1], s_sigma2, s_eps2])


def theo_mstep(s: np.ndarray, n: int, n_steps: int):
    """(K_e, Cl, sigma, sigma_eps) update; None rejects the iteration when the
    regression coefficients leave the admissible region."""
    b1, b2, s_sigma2, s_eps2 = (float(v) for v in s)
    if b1 <= 0.0 or b2 <= 0.0:
        logger.warning("M-step rejected: regression gave beta1=%.3g beta2=%.3g", b1, b2)
        return None
    sigma = np.sqrt(max(s_sigma2 / n_steps, VARIANCE_FLOOR))
    sigma_eps = np.sqrt(max(s_eps2 / n, VARIANCE_FLOOR))
    return np.array([b2, b2 / b1, sigma, sigma_eps])


# ---------------------------------------------------------------------------
# driver


@dataclass
class SaemResult:
    thetas: np.ndarray       # (K+1, P) natural scale, row 0 = start
    logliks: np.ndarray      # (K,) filter log-likelihood estimates

    @property
    def final(self) -> np.ndarray:
        return self.thetas[-1]


def saem_smc_run(model, obs, theta0, schedule: StepSchedule, M: int,
                 M_bar: int, rng: np.random.Generator) -> SaemResult:
    """SAEM with a bootstrap-filter S-step.

    Each iteration filters at the current parameters, samples one latent
    path through the genealogy of a final-time particle, averages the
    complete-model sufficient statistics, and applies the closed-form
    M-step. Filter degeneracy propagates to the caller.
    """
    theta = np.asarray(theta0, dtype=float).copy()
    K = schedule.total
    thetas = np.empty((K + 1, theta.shape[0]))
    thetas[0] = theta
    logliks = np.empty(K)
    s = None
    for k in range(1, K + 1):
        ensemble, loglik = bootstrap_filter(model, theta, obs, M, M_bar, rng)
        idx = sample_genealogy_indices(ensemble, rng)
        path = model.genealogy_latent_path(ensemble, idx)
        s_new = model.complete_suffstats(obs, path)
        s = s_new if s is None else sa_update(s, s_new, schedule.gamma(k))
        theta = np.asarray(model.complete_mstep(s, theta), dtype=float)
        thetas[k] = theta
        logliks[k - 1] = loglik
    return SaemResult(thetas=thetas, logliks=logliks)
