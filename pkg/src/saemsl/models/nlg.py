"""Nonlinear Gaussian state-space model.

    X_j = 2 sin(exp(X_{j-1})) + sigma_x * tau_j,   X_0 = 0
    Y_j = X_j + sigma_y * nu_j

with iid standard-normal shocks. Summaries for each series are the median,
the MAD and the 10/20/75/90th percentiles (six per block, latent block
over the stochastic states X_{1:n}).
"""

from __future__ import annotations

import numpy as np

from .. import kernels
from .base import LOG, JointSummaryLayout, LatentPath, ObsSeries, ParamSpace

_SUMMARY_NAMES = ("median", "mad", "p10", "p20", "p75", "p90")


class NlgModel:
    name = "nlg"

    def __init__(self, n_obs: int = 50, x0: float = 0.0):
        self.n_obs = int(n_obs)
        self.x0 = float(x0)
        self.space = ParamSpace(("sigma_x", "sigma_y"), (LOG, LOG))
        self.layout = JointSummaryLayout(
            dim_y=6, dim_x=6,
            labels_y=tuple(f"y_{s}" for s in _SUMMARY_NAMES),
            labels_x=tuple(f"x_{s}" for s in _SUMMARY_NAMES),
        )
        self.obs_times = np.arange(1, self.n_obs + 1, dtype=float)

    # -- simulation ---------------------------------------------------------

    def simulate_batch(self, theta, R: int, rng: np.random.Generator):
        sig_x, sig_y = float(theta[0]), float(theta[1])
        zx = rng.standard_normal((R, self.n_obs))
        zy = rng.standard_normal((R, self.n_obs))
        return kernels.nlg_paths(self.x0, sig_x, sig_y, zx, zy)

    def simulate(self, theta, rng: np.random.Generator):
        X, Y = self.simulate_batch(theta, 1, rng)
        times = np.arange(0, self.n_obs + 1, dtype=float)
        lat = LatentPath(times, np.concatenate(([self.x0], X[0])))
        return lat, ObsSeries(self.obs_times, Y[0])

    # -- summaries ----------------------------------------------------------

    def obs_summaries(self, y) -> np.ndarray:
        return kernels.series_summaries6(np.atleast_2d(np.asarray(y, dtype=float)))[0]

    def joint_summaries_batch(self, theta, R: int, rng: np.random.Generator) -> np.ndarray:
        X, Y = self.simulate_batch(theta, R, rng)
        return np.hstack([kernels.series_summaries6(Y), kernels.series_summaries6(X)])

    # -- particle-filter hooks ----------------------------------------------

    def init_particles(self, theta, M: int, rng: np.random.Generator):
        z = rng.standard_normal(M)
        return kernels.nlg_step(np.full(M, self.x0), z, float(theta[0])), None

    def transition(self, states, j, theta, rng: np.random.Generator):
        z = rng.standard_normal(states.shape[0])
        return kernels.nlg_step(states, z, float(theta[0])), None

    def log_obs_density(self, y_j, states, theta) -> np.ndarray:
        sig_y = float(theta[1])
        resid = (y_j - states) / sig_y
        return -0.5 * resid * resid - np.log(sig_y) - 0.5 * np.log(2.0 * np.pi)

    def genealogy_latent_path(self, ensemble, indices) -> LatentPath:
        states = ensemble.states[np.arange(len(indices)), indices]
        times = np.arange(0, len(indices) + 1, dtype=float)
        return LatentPath(times, np.concatenate(([self.x0], states)))

    # -- complete-model sufficient statistics --------------------------------

    def complete_suffstats(self, obs: ObsSeries, path: LatentPath) -> np.ndarray:
        from ..saem import nlg_suffstats

        return nlg_suffstats(obs.values, path.values)

    def complete_mstep(self, s, prev_theta) -> np.ndarray:
        from ..saem import nlg_mstep

        return nlg_mstep(s, self.n_obs)
