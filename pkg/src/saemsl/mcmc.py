"""Adaptive random-walk Metropolis samplers: pseudo-marginal synthetic
likelihood and ABC-MCMC with a weighted Gaussian kernel.

Chains live on the working (log / shifted-log) scale with the transform
Jacobian folded into the target, so positivity is automatic and the
Haario-style covariance adaptation is unconstrained. Out-of-support
proposals are rejected before any model simulation. The pseudo-marginal
discipline keeps the stored likelihood estimate of the retained state
untouched between acceptances.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field

import numpy as np

from .models.base import SummaryError
from .synlik import sl_logdensity

logger = logging.getLogger(__name__)


# ---------------------------------------------------------------------------
# priors


@dataclass(frozen=True)
class Prior1D:
    """uniform(a, b) or gamma(shape, rate) marginal prior."""

    kind: str
    a: float
    b: float

    def __post_init__(self):
        if self.kind == "uniform":
            if not self.a < self.b:
                raise ValueError(f"uniform needs a < b, got ({self.a}, {self.b})")
        elif self.kind == "gamma":
            if self.a <= 0.0 or self.b <= 0.0:
                raise ValueError("gamma needs shape, rate > 0")
        else:
            raise ValueError(f"unknown prior kind '{self.kind}'")

    def logpdf(self, x: float) -> float:
        if self.kind == "uniform":
            if self.a <= x <= self.b:
                return -math.log(self.b - self.a)
            return -math.inf
        if x <= 0.0:
            return -math.inf
        shape, rate = self.a, self.b
        return (shape * math.log(rate) - math.lgamma(shape)
                + (shape - 1.0) * math.log(x) - rate * x)


@dataclass(frozen=True)
class PriorSpec:
    priors: tuple

    def logpdf(self, theta) -> float:
        return float(sum(p.logpdf(float(x)) for p, x in zip(self.priors, theta)))

    def in_support(self, theta) -> bool:
        return math.isfinite(self.logpdf(theta))


# ---------------------------------------------------------------------------
# Haario-style adaptive random-walk proposal


class AdaptiveRWProposal:
    """Gaussian random walk whose covariance tracks the chain history.

    For the first `warmup` pushes the proposal keeps the configured
    diagonal; afterwards it is (2.38^2/p) * Cov(history) + eps * I,
    recomputed from running first/second moments each push. Adaptation can
    be frozen after a configured number of draws.
    """

    def __init__(self, dim: int, scale0, warmup: int = 500, eps: float = 1e-10,
                 freeze_after: int | None = None):
        self.dim = dim
        scale0 = np.asarray(scale0, dtype=float)
        if scale0.ndim == 0:
            scale0 = np.full(dim, float(scale0))
        self.diag0 = scale0 ** 2
        self.warmup = int(warmup)
        self.eps = float(eps)
        self.freeze_after = freeze_after
        self.count = 0
        self._sum = np.zeros(dim)
        self._outer = np.zeros((dim, dim))
        self._frozen_cov = None

    def push(self, phi: np.ndarray) -> None:
        if self.freeze_after is not None and self.count >= self.freeze_after:
            return
        self._sum += phi
        self._outer += np.outer(phi, phi)
        self.count += 1

    def covariance(self) -> np.ndarray:
        if self.count <= max(self.warmup, 1):
            return np.diag(self.diag0)
        if self._frozen_cov is not None:
            return self._frozen_cov
        mean = self._sum / self.count
        cov = self._outer / self.count - np.outer(mean, mean)
        cov = (2.38 ** 2 / self.dim) * cov + self.eps * np.eye(self.dim)
        if self.freeze_after is not None and self.count >= self.freeze_after:
            self._frozen_cov = cov
        return cov

    def propose(self, phi: np.ndarray, rng: np.random.Generator) -> np.ndarray:
        cov = self.covariance()
        try:
            L = np.linalg.cholesky(cov)
        except np.linalg.LinAlgError:
            L = np.diag(np.sqrt(np.maximum(np.diag(cov), self.eps)))
        return phi + L @ rng.standard_normal(self.dim)


# ---------------------------------------------------------------------------
# chains


@dataclass
class Chain:
    """MCMC output on the working scale, with per-iteration stored targets."""

    space: object
    draws_w: np.ndarray          # (T+1, P) including the start
    log_targets: np.ndarray      # (T+1,) stored target of the retained state
    accepted: np.ndarray         # (T,) acceptance flags
    segments: list = field(default_factory=list)  # (label, start, end) slices

    @property
    def acceptance_rate(self) -> float:
        return float(np.mean(self.accepted)) if len(self.accepted) else 0.0

    def natural(self) -> np.ndarray:
        return np.vstack([self.space.to_natural(w) for w in self.draws_w])


def posterior_summary(chain: Chain, burn_in: int) -> dict:
    """Posterior means and central 95% intervals on the natural scale."""
    draws = chain.natural()
    if burn_in >= draws.shape[0]:
        raise ValueError(f"burn_in={burn_in} leaves no draws (chain has {draws.shape[0]})")
    kept = draws[burn_in:]
    from .linalg import percentile

    out = {}
    for i, name in enumerate(chain.space.names):
        col = kept[:, i]
        out[name] = {
            "mean": float(np.mean(col)),
            "lo95": percentile(col, 2.5),
            "hi95": percentile(col, 97.5),
        }
    return out


# ---------------------------------------------------------------------------
# pseudo-marginal synthetic-likelihood MCMC


def pm_bsl_run(model, s_y, prior: PriorSpec, theta0, R: int, iters: int,
               robust: bool, rng: np.random.Generator,
               proposal_scale0=0.1, proposal_warmup: int = 500) -> Chain:
    """Metropolis-Hastings on the summary posterior with an unbiased-in-spirit
    synthetic-likelihood estimate that is never refreshed for the retained
    state. Proposals failing the prior support or the SL evaluation are
    rejected outright."""
    space = model.space
    s_y = np.asarray(s_y, dtype=float)
    theta0 = np.asarray(theta0, dtype=float)
    if not prior.in_support(theta0):
        raise ValueError("starting point outside prior support")
    phi = space.to_working(theta0)
    lp0, _ = sl_logdensity(s_y, model, theta0, R, robust, rng, obs_only=True)
    if not math.isfinite(lp0):
        raise ValueError("synthetic likelihood unusable at the starting point")
    log_target = lp0 + prior.logpdf(theta0) + space.log_jacobian(theta0)

    proposal = AdaptiveRWProposal(space.dim, proposal_scale0, proposal_warmup)
    draws = np.empty((iters + 1, space.dim))
    targets = np.empty(iters + 1)
    accepted = np.zeros(iters, dtype=bool)
    draws[0] = phi
    targets[0] = log_target
    proposal.push(phi)

    for t in range(iters):
        phi_prop = proposal.propose(phi, rng)
        theta_prop = space.to_natural(phi_prop)
        log_prior = prior.logpdf(theta_prop)
        if math.isfinite(log_prior):
            lp, _ = sl_logdensity(s_y, model, theta_prop, R, robust, rng,
                                  obs_only=True)
            if math.isfinite(lp):
                cand = lp + log_prior + space.log_jacobian(theta_prop)
                if math.log(rng.uniform()) < cand - log_target:
                    phi, log_target = phi_prop, cand
                    accepted[t] = True
        draws[t + 1] = phi
        targets[t + 1] = log_target
        proposal.push(phi)

    return Chain(space=space, draws_w=draws, log_targets=targets,
                 accepted=accepted)


# ---------------------------------------------------------------------------
# ABC-MCMC


@dataclass(frozen=True)
class AbcKernelSpec:
    """Gaussian comparison kernel: exp(-d' Omega^{-1} d / (2 delta^2)) with a
    diagonal Omega = diag(weights^2) and a decreasing delta schedule."""

    delta_schedule: tuple        # ((delta, iterations), ...)
    weights: np.ndarray          # (d_s,) omega (std-dev units)

    def __post_init__(self):
        if not self.delta_schedule:
            raise ValueError("empty delta schedule")
        for d, it in self.delta_schedule:
            if d <= 0.0 or it <= 0:
                raise ValueError("deltas and iteration budgets must be positive")
        if np.any(np.asarray(self.weights, dtype=float) <= 0.0):
            raise ValueError("kernel weights must be positive")


@dataclass
class AbcResult:
    chain: Chain
    summary_store: np.ndarray     # state summaries at the smallest delta
    segment_rates: list           # (delta, iters, acceptance rate)


def abc_mcmc_run(model, s_y, prior: PriorSpec, kernel: AbcKernelSpec, theta0,
                 rng: np.random.Generator, proposal_scale0=0.1,
                 proposal_warmup: int = 500) -> AbcResult:
    """ABC-MCMC with one synthetic dataset per iteration.

    The acceptance ratio multiplies the kernel ratio at proposed/current
    synthetic summaries by the prior ratio (working-scale Jacobians
    included). Every iteration of the smallest-delta segment records the
    current state's synthetic summaries for weight calibration.
    """
    space = model.space
    s_y = np.asarray(s_y, dtype=float)
    theta0 = np.asarray(theta0, dtype=float)
    if not prior.in_support(theta0):
        raise ValueError("starting point outside prior support")
    w2 = np.asarray(kernel.weights, dtype=float) ** 2

    def distance2(s_z) -> float:
        d = s_z - s_y
        return float(np.sum(d * d / w2))

    phi = space.to_working(theta0)
    _, obs0 = model.simulate(theta0, rng)
    s_z = model.obs_summaries(obs0.values)
    rho2 = distance2(s_z)

    total = sum(it for _, it in kernel.delta_schedule)
    draws = np.empty((total + 1, space.dim))
    targets = np.empty(total + 1)
    accepted = np.zeros(total, dtype=bool)
    draws[0] = phi
    smallest_delta = min(d for d, _ in kernel.delta_schedule)
    store_rows = []
    proposal = AdaptiveRWProposal(space.dim, proposal_scale0, proposal_warmup)
    proposal.push(phi)

    segments = []
    segment_rates = []
    t = 0
    targets[0] = -rho2 / (2.0 * kernel.delta_schedule[0][0] ** 2)
    for delta, iters in kernel.delta_schedule:
        seg_start = t
        two_d2 = 2.0 * delta * delta
        for _ in range(iters):
            phi_prop = proposal.propose(phi, rng)
            theta_prop = space.to_natural(phi_prop)
            log_prior_prop = prior.logpdf(theta_prop)
            if math.isfinite(log_prior_prop):
                theta_cur = space.to_natural(phi)
                _, obs_prop = model.simulate(theta_prop, rng)
                try:
                    s_prop = model.obs_summaries(obs_prop.values)
                    rho2_prop = distance2(s_prop)
                except SummaryError:
                    rho2_prop = math.inf
                log_ratio = ((rho2 - rho2_prop) / two_d2
                             + log_prior_prop + space.log_jacobian(theta_prop)
                             - prior.logpdf(theta_cur) - space.log_jacobian(theta_cur))
                if math.log(rng.uniform()) < log_ratio:
                    phi, s_z, rho2 = phi_prop, s_prop, rho2_prop
                    accepted[t] = True
            draws[t + 1] = phi
            targets[t + 1] = -rho2 / two_d2
            proposal.push(phi)
            if delta == smallest_delta:
                store_rows.append(s_z.copy())
            t += 1
        # draw-row coordinates: rows start+1..end of chain.draws_w belong here
        segments.append((f"delta={delta:g}", seg_start + 1, t + 1))
        rate = float(np.mean(accepted[seg_start:t]))
        segment_rates.append((delta, iters, rate))
        logger.info("ABC segment delta=%g: acceptance %.2f%%", delta, 100 * rate)

    chain = Chain(space=space, draws_w=draws, log_targets=targets,
                  accepted=accepted, segments=segments)
    return AbcResult(chain=chain, summary_store=np.asarray(store_rows),
                     segment_rates=segment_rates)


def calibrate_weights(accepted_summaries) -> np.ndarray:
    """Per-coordinate MAD of the accepted-summary store; zero MADs fall back
    to the smallest positive MAD across coordinates."""
    from .linalg import mad

    rows = np.atleast_2d(np.asarray(accepted_summaries, dtype=float))
    mads = np.array([mad(rows[:, i]) for i in range(rows.shape[1])])
    if np.all(mads == 0.0):
        raise ValueError("all summary coordinates have zero MAD; cannot calibrate")
    if np.any(mads == 0.0):
        floor = float(np.min(mads[mads > 0.0]))
        logger.warning("zero MADs in %d coordinates, replaced with %.3g",
                       int(np.sum(mads == 0.0)), floor)
        mads = np.where(mads == 0.0, floor, mads)
    return mads
