"""Noisy g-and-k distribution (a static model).

Draws x_j = F^{-1}(z_j) through the quantile function

    A + B [1 + c tanh(g r/2)] (1 + r^2)^k r,    r = r(z) ~ N(0,1)

with B > 0, k > -0.5 and c, g held fixed; observations add Gaussian noise,
y_j = x_j + eps_j. The "latent series" is the noise-free x vector.

Both blocks use the same eight summaries: quantile-based location, scale,
skewness and octile-kurtosis statistics plus the 20/30/70/80th percentiles,
each passed through s -> log(s + nu) with a shared shift nu so the summary
distributions are closer to Gaussian.
"""

from __future__ import annotations

import numpy as np

from .. import kernels
from .base import (LOG, JointSummaryLayout, LatentPath, ObsSeries, ParamSpace,
                   SummaryError, Transform, shifted_log)

_SUMMARY_NAMES = ("loc", "scale", "skew", "kurt", "p20", "p30", "p70", "p80")


class GkModel:
    name = "gk"

    def __init__(self, n_obs: int = 500, c: float = 0.8, g: float = 2.0,
                 nu: float = 50.0):
        self.n_obs = int(n_obs)
        self.c = float(c)
        self.g = float(g)
        self.nu = float(nu)
        self.space = ParamSpace(
            ("A", "B", "k", "sigma_eps"),
            (Transform(), LOG, shifted_log(0.5), LOG),
        )
        self.layout = JointSummaryLayout(
            dim_y=8, dim_x=8,
            labels_y=tuple(f"y_{s}" for s in _SUMMARY_NAMES),
            labels_x=tuple(f"x_{s}" for s in _SUMMARY_NAMES),
        )
        self.obs_times = np.arange(1, self.n_obs + 1, dtype=float)

    # -- simulation ---------------------------------------------------------

    def simulate_batch(self, theta, R: int, rng: np.random.Generator):
        a, b, k, sig_eps = (float(v) for v in theta)
        r = rng.standard_normal((R, self.n_obs))
        x = kernels.gk_quantile(r, a, b, self.c, self.g, k)
        y = x + sig_eps * rng.standard_normal((R, self.n_obs))
        return x, y

    def simulate(self, theta, rng: np.random.Generator):
        x, y = self.simulate_batch(theta, 1, rng)
        return (LatentPath(self.obs_times.copy(), x[0]),
                ObsSeries(self.obs_times.copy(), y[0]))

    # -- summaries ----------------------------------------------------------

    def raw_summaries_batch(self, values: np.ndarray) -> np.ndarray:
        return kernels.gk_raw_summaries(np.atleast_2d(np.asarray(values, dtype=float)))

    def log_shift(self, raw: np.ndarray, labels) -> np.ndarray:
        shifted = raw + self.nu
        if np.any(shifted <= 0.0) or not np.all(np.isfinite(shifted)):
            bad = np.where(~(shifted > 0.0))
            coord = labels[bad[-1][0]] if len(bad[-1]) else "?"
            raise SummaryError(
                f"log-shift argument not positive for summary '{coord}' "
                f"(shift nu={self.nu} too small for this data)"
            )
        return np.log(shifted)

    def obs_summaries(self, y) -> np.ndarray:
        raw = self.raw_summaries_batch(y)
        return self.log_shift(raw, self.layout.labels_y)[0]

    def joint_summaries_batch(self, theta, R: int, rng: np.random.Generator) -> np.ndarray:
        x, y = self.simulate_batch(theta, R, rng)
        s_y = self.log_shift(self.raw_summaries_batch(y), self.layout.labels_y)
        s_x = self.log_shift(self.raw_summaries_batch(x), self.layout.labels_x)
        return np.hstack([s_y, s_x])
