"""Synthetic-likelihood engine.

A Gaussian "complete synthetic likelihood" is placed on the joint summary
vector s = (S(Y), S(X)); its mean/covariance, estimated from R model
simulations, are jointly sufficient, so the SAEM recursion averages the
moment pair directly. One outer iteration conditions the latent block on
the observed summaries, samples S(X) from the conditional Gaussian
(Cholesky when positive definite, nearest-PSD repair otherwise), and runs
a fixed budget of Nelder-Mead iterations over the parameters, where every
objective call re-simulates R datasets and re-estimates the moments.

Direct maximization of the data synthetic likelihood (observed block only)
is the same evaluation path restricted to the Y block.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass

import numpy as np

from . import linalg
from .linalg import MomentPair, SingularCovarianceError
from .models.base import JointSummaryLayout, SummaryError
from .optim import nelder_mead
from .saem import sa_update

logger = logging.getLogger(__name__)

INIT_COV_DIAG = 1e-12


@dataclass
class SLState:
    """Stochastic-approximation state: current joint moment estimates."""

    mean: np.ndarray
    cov: np.ndarray
    k: int = 0

    @property
    def moments(self) -> MomentPair:
        return MomentPair(self.mean, self.cov)


def init_sl_state(dim: int) -> SLState:
    """Zero mean and a delta * I covariance, delta = 1e-12."""
    return SLState(mean=np.zeros(dim), cov=INIT_COV_DIAG * np.eye(dim), k=0)


def conditional_moments(mp: MomentPair, layout: JointSummaryLayout,
                        s_y: np.ndarray) -> MomentPair:
    """Moments of the latent block given observed summaries.

    mu_{x|y} = mu_x + S_xy S_y^{-1} (s_y - mu_y);
    cov_{x|y} = S_x - S_xy S_y^{-1} S_yx. The observed block is inverted
    through a (jitter-retried) Cholesky factor; singularity raises.
    """
    s_y = np.asarray(s_y, dtype=float)
    if s_y.shape[0] != layout.dim_y:
        raise ValueError(f"observed block has dim {s_y.shape[0]}, expected {layout.dim_y}")
    mu_y = layout.y_block(mp.mean)
    mu_x = layout.x_block(mp.mean)
    sig_y, sig_x, sig_xy, sig_yx = layout.split_cov(mp.cov)
    L, _ = linalg.jittered_cholesky(sig_y)
    from scipy.linalg import cho_solve

    gain = cho_solve((L, True), sig_xy.T, check_finite=False).T  # S_xy S_y^{-1}
    mean = mu_x + gain @ (s_y - mu_y)
    cov = sig_x - gain @ sig_yx
    return MomentPair(mean, 0.5 * (cov + cov.T))


def sample_latent_summaries(mp_cond: MomentPair, rng: np.random.Generator) -> np.ndarray:
    """Draw S(X) | S(Y); delegates repair-then-factor policy to mvn_sample."""
    return linalg.mvn_sample(mp_cond, rng)


def simulate_joint_summaries(model, theta, R: int, rng: np.random.Generator) -> np.ndarray:
    """R joint summary rows in (S(Y), S(X)) order."""
    if R < 2:
        raise ValueError(f"need R >= 2 simulations, got {R}")
    return model.joint_summaries_batch(np.asarray(theta, dtype=float), R, rng)


def estimate_moments(rows: np.ndarray, robust: bool) -> MomentPair:
    return linalg.robust_moments(rows) if robust else linalg.sample_moments(rows)


def sl_logdensity(s, model, theta, R: int, robust: bool,
                  rng: np.random.Generator, obs_only: bool = False):
    """Synthetic log density of s at theta with freshly simulated moments.

    Returns (logpdf, MomentPair); logpdf is -inf when the evaluation fails
    (unusable covariance, non-finite summaries, summary domain errors), in
    which case the moment pair may be None.
    """
    s = np.asarray(s, dtype=float)
    try:
        rows = simulate_joint_summaries(model, theta, R, rng)
    except SummaryError as exc:
        logger.debug("summary failure at theta=%s: %s", theta, exc)
        return -math.inf, None
    if obs_only:
        rows = rows[:, : model.layout.dim_y]
    if not np.all(np.isfinite(rows)):
        return -math.inf, None
    mp = estimate_moments(rows, robust)
    try:
        lp = linalg.mvn_logpdf(s, mp)
    except SingularCovarianceError:
        return -math.inf, mp
    return (lp if math.isfinite(lp) else -math.inf), mp


def internal_sl_maximize(s_k, theta_start, model, R: int, L: int, robust: bool,
                         rng: np.random.Generator):
    """Fixed-budget Nelder-Mead ascent of the synthetic log density in theta.

    The target vector s_k is held fixed; every objective call re-simulates.
    Returns (theta_star, MomentPair at theta_star, logpdf at theta_star);
    if nothing evaluates, theta_start and its (possibly None) moments.
    """
    space = model.space
    best = {"f": math.inf, "phi": None, "mp": None}
    first = {"mp": None}

    def objective(phi):
        theta = space.to_natural(phi)
        lp, mp = sl_logdensity(s_k, model, theta, R, robust, rng)
        if first["mp"] is None and mp is not None:
            first["mp"] = mp
        f = -lp
        if f < best["f"]:
            best.update(f=f, phi=phi.copy(), mp=mp)
        return f

    nelder_mead(objective, space.to_working(theta_start), L)
    if best["phi"] is None:
        return np.asarray(theta_start, dtype=float), first["mp"], -math.inf
    return space.to_natural(best["phi"]), best["mp"], -best["f"]


@dataclass
class SlTrace:
    thetas: np.ndarray     # (K+1, P) natural scale, row 0 = start
    logsl: np.ndarray      # (K,) best internal objective per iteration
    state: SLState         # final moment state

    @property
    def final(self) -> np.ndarray:
        return self.thetas[-1]


def saem_sl_run(model, s_obs, theta0, schedule, R: int, L: int, robust: bool,
                rng: np.random.Generator) -> SlTrace:
    """SAEM with a synthetic complete likelihood.

    Per iteration: condition the moment state on the observed summaries,
    sample latent summaries, maximize the synthetic log density of the
    joint vector with a fresh-simulation Nelder-Mead budget, then average
    the optimal moments into the state with the schedule weight.
    """
    layout = model.layout
    s_obs = np.asarray(s_obs, dtype=float)
    theta = np.asarray(theta0, dtype=float).copy()
    K = schedule.total
    state = init_sl_state(layout.dim)
    thetas = np.empty((K + 1, theta.shape[0]))
    thetas[0] = theta
    logsl = np.full(K, -math.inf)
    for k in range(1, K + 1):
        mp_cond = conditional_moments(state.moments, layout, s_obs)
        s_x = sample_latent_summaries(mp_cond, rng)
        s_k = np.concatenate([s_obs, s_x])
        theta_new, mp_star, lp = internal_sl_maximize(
            s_k, theta, model, R, L, robust, rng)
        if mp_star is None:
            logger.warning("iteration %d: no evaluable candidate, keeping theta", k)
        else:
            gamma = schedule.gamma(k)
            state.mean = sa_update(state.mean, mp_star.mean, gamma)
            state.cov = sa_update(state.cov, mp_star.cov, gamma)
            state.k = k
            theta = theta_new
        thetas[k] = theta
        logsl[k - 1] = lp
    return SlTrace(thetas=thetas, logsl=logsl, state=state)


def data_sl_maximize(model, s_y, theta_start, R: int, iters: int,
                     rng: np.random.Generator) -> np.ndarray:
    """Direct maximization of the data synthetic likelihood (observed block
    only) with a fixed Nelder-Mead budget and fresh simulations per call."""
    space = model.space
    s_y = np.asarray(s_y, dtype=float)
    best = {"f": math.inf, "phi": None}

    def objective(phi):
        theta = space.to_natural(phi)
        lp, _ = sl_logdensity(s_y, model, theta, R, False, rng, obs_only=True)
        f = -lp
        if f < best["f"]:
            best.update(f=f, phi=phi.copy())
        return f

    nelder_mead(objective, space.to_working(theta_start), iters)
    if best["phi"] is None:
        return np.asarray(theta_start, dtype=float)
    return space.to_natural(best["phi"])
