"""Bootstrap particle filter with ESS-triggered multinomial resampling,
ancestry tracking and genealogy-based single-path extraction.

Weights are maintained in log space with max-subtraction; the returned
log-likelihood estimate is sum_j log sum_m W_j^(m) under the convention
that parent weights are normalized (and reset to 1/M by resampling), which
makes exp(loglik) an unbiased estimate of the data likelihood.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .models.base import LatentPath


class FilterDegeneracyError(RuntimeError):
    """All particle weights vanished at some step."""

    def __init__(self, step: int):
        super().__init__(f"all particle weights zero at step {step}")
        self.step = step


@dataclass
class ParticleEnsemble:
    """Full filter history: states, normalized weights and ancestry per step."""

    times: np.ndarray           # (n,) observation times
    states: np.ndarray          # (n, M)
    weights: np.ndarray         # (n, M) normalized per step
    ancestors: np.ndarray       # (n, M) parent index at the previous step
    resampled: np.ndarray       # (n,) True where resampling preceded the step
    extras: list | None         # optional per-step payload (fine sub-paths)
    M: int
    M_bar: int


def ess(weights) -> float:
    """Effective sample size 1 / sum(w^2) of normalized weights."""
    w = np.asarray(weights, dtype=float)
    return float(1.0 / np.sum(w * w))


def multinomial_resample(weights, rng: np.random.Generator) -> np.ndarray:
    """Parent indices drawn iid from the weight distribution."""
    w = np.asarray(weights, dtype=float)
    return rng.choice(w.shape[0], size=w.shape[0], p=w)


def resample(states, weights, rng: np.random.Generator):
    """Multinomial resampling of a weighted particle set.

    Returns (resampled states, uniform weights, parent indices); the expected
    offspring count of particle m is M * w_m.
    """
    states = np.asarray(states)
    parents = multinomial_resample(weights, rng)
    M = states.shape[0]
    return states[parents], np.full(M, 1.0 / M), parents


def bootstrap_filter(model, theta, obs, M: int, M_bar: int,
                     rng: np.random.Generator):
    """Run the filter; returns (ParticleEnsemble, loglik_estimate).

    The model supplies init_particles / transition (vectorized latent
    samplers, optionally returning a per-step extra payload) and
    log_obs_density. Resampling fires only when ESS(w) < M_bar.
    """
    y = np.asarray(obs.values, dtype=float)
    n = y.shape[0]
    if M_bar > M:
        raise ValueError(f"M_bar={M_bar} must be <= M={M}")

    states = np.empty((n, M))
    weights = np.empty((n, M))
    ancestors = np.empty((n, M), dtype=np.int64)
    resampled = np.zeros(n, dtype=bool)
    extras: list = [None] * n

    loglik = 0.0
    log_w_prev = np.full(M, -np.log(M))
    for j in range(n):
        if j == 0:
            st, extra = model.init_particles(theta, M, rng)
            parents = np.arange(M)
        else:
            if ess(weights[j - 1]) < M_bar:
                parents = multinomial_resample(weights[j - 1], rng)
                log_w_prev = np.full(M, -np.log(M))
                resampled[j] = True
            else:
                parents = np.arange(M)
                with np.errstate(divide="ignore"):
                    log_w_prev = np.log(weights[j - 1])
            st, extra = model.transition(states[j - 1][parents], j, theta, rng)
        log_dens = np.asarray(model.log_obs_density(y[j], st, theta), dtype=float)
        log_dens = np.where(np.isnan(log_dens), -np.inf, log_dens)
        log_W = log_w_prev + log_dens
        top = np.max(log_W)
        if not np.isfinite(top):
            raise FilterDegeneracyError(j)
        lse = top + np.log(np.sum(np.exp(log_W - top)))
        loglik += lse
        states[j] = st
        weights[j] = np.exp(log_W - lse)
        ancestors[j] = parents
        extras[j] = extra

    ens = ParticleEnsemble(
        times=np.asarray(obs.times, dtype=float), states=states,
        weights=weights, ancestors=ancestors, resampled=resampled,
        extras=extras if any(e is not None for e in extras) else None,
        M=M, M_bar=M_bar,
    )
    return ens, float(loglik)


def sample_genealogy_indices(ensemble: ParticleEnsemble,
                             rng: np.random.Generator) -> np.ndarray:
    """Draw a final-time index from the last weights and trace its ancestry."""
    n = ensemble.states.shape[0]
    idx = np.empty(n, dtype=np.int64)
    idx[n - 1] = rng.choice(ensemble.M, p=ensemble.weights[n - 1])
    for j in range(n - 1, 0, -1):
        idx[j - 1] = ensemble.ancestors[j, idx[j]]
    return idx


def sample_genealogy_path(ensemble: ParticleEnsemble,
                          rng: np.random.Generator) -> LatentPath:
    """The latent path (at observation times) selected by one genealogy draw."""
    idx = sample_genealogy_indices(ensemble, rng)
    values = ensemble.states[np.arange(idx.shape[0]), idx]
    return LatentPath(ensemble.times.copy(), values)
