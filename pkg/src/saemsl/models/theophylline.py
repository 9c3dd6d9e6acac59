"""Pharmacokinetic one-compartment SDE with absorption forcing.

    dX_t = (Dose*Ka*Ke/Cl * exp(-Ka t) - Ke X_t) dt + sigma sqrt(X_t) dW_t

simulated by Euler-Maruyama on a fine grid of step h, linearly interpolated
at the sampling times, with additive Gaussian measurement error. States
crossing zero during a step are clamped to 1e-6.

Latent summaries: median and MAD of the fine-grid path, the quadratic-
variation statistic for sigma, and the RMS of the observation residuals.
Observed summaries: median, MAD, first-to-last slope.
"""

from __future__ import annotations

import numpy as np

from .. import kernels
from .base import LOG, JointSummaryLayout, LatentPath, ObsSeries, ParamSpace


class TheophyllineModel:
    name = "theophylline"

    def __init__(self, n_obs: int = 30, delta: float = 1.0, h: float = 0.05,
                 dose: float = 4.0, ka: float = 1.492, x0: float = 8.0,
                 t0: float = 0.0):
        self.n_obs = int(n_obs)
        self.delta = float(delta)
        self.h = float(h)
        self.dose = float(dose)
        self.ka = float(ka)
        self.x0 = float(x0)
        self.t0 = float(t0)
        self.substeps = int(round(delta / h))
        if abs(self.substeps * h - delta) > 1e-9:
            raise ValueError(f"step h={h} must divide the sampling interval {delta}")
        self.n_steps = self.substeps * self.n_obs
        self.grid_times = self.t0 + self.h * np.arange(self.n_steps + 1)
        self.obs_times = self.t0 + self.delta * np.arange(1, self.n_obs + 1)
        # exp(-Ka t) at left endpoints, shared by every path at any theta
        self._expfac = np.exp(-self.ka * self.grid_times[:-1])
        self._seg_expfac = self._expfac.reshape(self.n_obs, self.substeps)
        self.space = ParamSpace(("K_e", "Cl", "sigma", "sigma_eps"),
                                (LOG, LOG, LOG, LOG))
        self.layout = JointSummaryLayout(
            dim_y=3, dim_x=4,
            labels_y=("y_median", "y_mad", "y_slope"),
            labels_x=("x_median", "x_mad", "x_sigma_qv", "x_resid_rms"),
        )

    # -- simulation ---------------------------------------------------------

    def simulate_paths(self, theta, R: int, rng: np.random.Generator) -> np.ndarray:
        ke, cl, sigma = float(theta[0]), float(theta[1]), float(theta[2])
        z = rng.standard_normal((R, self.n_steps))
        return kernels.theo_paths(self.x0, ke, cl, sigma, self.dose * self.ka,
                                  self.h, self._expfac, z)

    def observe(self, fine: np.ndarray, theta, rng: np.random.Generator):
        x_obs = kernels.interp_rows(fine, self.t0, self.h, self.obs_times)
        y = x_obs + float(theta[3]) * rng.standard_normal(x_obs.shape)
        return x_obs, y

    def simulate_batch(self, theta, R: int, rng: np.random.Generator):
        fine = self.simulate_paths(theta, R, rng)
        x_obs, y = self.observe(fine, theta, rng)
        return fine, x_obs, y

    def simulate(self, theta, rng: np.random.Generator):
        fine, _, y = self.simulate_batch(theta, 1, rng)
        return (LatentPath(self.grid_times.copy(), fine[0]),
                ObsSeries(self.obs_times.copy(), y[0]))

    # -- summaries ----------------------------------------------------------

    def obs_summaries(self, y) -> np.ndarray:
        y2 = np.atleast_2d(np.asarray(y, dtype=float))
        return kernels.theo_obs_summaries(y2, self.obs_times)[0]

    def joint_summaries_batch(self, theta, R: int, rng: np.random.Generator) -> np.ndarray:
        fine, x_obs, y = self.simulate_batch(theta, R, rng)
        s_y = kernels.theo_obs_summaries(y, self.obs_times)
        s_x = kernels.theo_latent_summaries(fine, x_obs, y, self.h)
        return np.hstack([s_y, s_x])

    # -- particle-filter hooks ----------------------------------------------

    def init_particles(self, theta, M: int, rng: np.random.Generator):
        return self._propagate(np.full(M, self.x0), 0, theta, rng)

    def transition(self, states, j, theta, rng: np.random.Generator):
        return self._propagate(states, j, theta, rng)

    def _propagate(self, states, j, theta, rng):
        ke, cl, sigma = float(theta[0]), float(theta[1]), float(theta[2])
        z = rng.standard_normal((states.shape[0], self.substeps))
        seg = kernels.theo_segment(states, z, ke, cl, sigma,
                                   self.dose * self.ka, self.h,
                                   self._seg_expfac[j])
        return seg[:, -1].copy(), seg

    def log_obs_density(self, y_j, states, theta) -> np.ndarray:
        sig_eps = float(theta[3])
        resid = (y_j - states) / sig_eps
        return -0.5 * resid * resid - np.log(sig_eps) - 0.5 * np.log(2.0 * np.pi)

    def genealogy_latent_path(self, ensemble, indices) -> LatentPath:
        segs = [ensemble.extras[j][indices[j]] for j in range(len(indices))]
        values = np.concatenate([[self.x0], np.concatenate(segs)])
        return LatentPath(self.grid_times.copy(), values)

    # -- complete-model sufficient statistics --------------------------------

    def complete_suffstats(self, obs: ObsSeries, path: LatentPath) -> np.ndarray:
        from ..saem import theo_suffstats

        return theo_suffstats(obs.values, path.values, self.grid_times,
                              self.obs_times, self.dose, self.ka, self.h,
                              self.t0)

    def complete_mstep(self, s, prev_theta) -> np.ndarray:
        from ..saem import theo_mstep

        new = theo_mstep(s, self.n_obs, self.n_steps)
        return prev_theta if new is None else new


def sigma_hat_qv(path: LatentPath) -> float:
    """Noise-scale statistic sqrt(sum dx^2 / sum x * dt) on a fine-grid path."""
    values = np.atleast_2d(np.asarray(path.values, dtype=float))
    h = float(path.times[1] - path.times[0])
    return float(kernels.sigma_qv_rows(values, h)[0])
