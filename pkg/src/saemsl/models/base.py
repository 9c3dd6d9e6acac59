"""Shared model-facing types: parameter transforms, series containers,
and the joint summary layout used by the synthetic-likelihood machinery."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np


class SummaryError(ValueError):
    """A summary statistic could not be computed (e.g. log-shift domain)."""


@dataclass(frozen=True)
class Transform:
    """Scalar reparameterization between natural and working scale.

    kind 'log' maps x -> log(x + offset) (offset 0 for plain positivity,
    0.5 for the g-and-k kurtosis parameter k > -0.5); 'identity' is a no-op.
    """

    kind: str = "identity"
    offset: float = 0.0

    def to_working(self, x: float) -> float:
        if self.kind == "log":
            return float(np.log(x + self.offset))
        return float(x)

    def to_natural(self, w: float) -> float:
        if self.kind == "log":
            return float(np.exp(w) - self.offset)
        return float(w)

    def log_jacobian(self, x: float) -> float:
        """log |d natural / d working| at natural value x."""
        if self.kind == "log":
            return float(np.log(x + self.offset))
        return 0.0


LOG = Transform("log")


def shifted_log(offset: float) -> Transform:
    return Transform("log", offset)


@dataclass(frozen=True)
class ParamSpace:
    """Named parameter vector layout with per-parameter transforms."""

    names: tuple
    transforms: tuple

    @property
    def dim(self) -> int:
        return len(self.names)

    def to_working(self, theta) -> np.ndarray:
        theta = np.asarray(theta, dtype=float)
        return np.array([t.to_working(x) for t, x in zip(self.transforms, theta)])

    def to_natural(self, phi) -> np.ndarray:
        phi = np.asarray(phi, dtype=float)
        return np.array([t.to_natural(w) for t, w in zip(self.transforms, phi)])

    def log_jacobian(self, theta) -> float:
        theta = np.asarray(theta, dtype=float)
        return float(sum(t.log_jacobian(x) for t, x in zip(self.transforms, theta)))

    def as_dict(self, theta) -> dict:
        return {n: float(v) for n, v in zip(self.names, np.asarray(theta, dtype=float))}

    def from_dict(self, d: dict) -> np.ndarray:
        missing = [n for n in self.names if n not in d]
        if missing:
            raise KeyError(f"missing parameters {missing}")
        return np.array([float(d[n]) for n in self.names])


@dataclass
class LatentPath:
    """Latent trajectory on its simulation grid (includes the initial state
    where the model has one)."""

    times: np.ndarray
    values: np.ndarray


@dataclass
class ObsSeries:
    """Observations at the sampling times."""

    times: np.ndarray
    values: np.ndarray

    def __len__(self) -> int:
        return len(self.values)


@dataclass(frozen=True)
class JointSummaryLayout:
    """Index bookkeeping for the joint summary vector s = (S(Y), S(X))."""

    dim_y: int
    dim_x: int
    labels_y: tuple = field(default=())
    labels_x: tuple = field(default=())

    @property
    def dim(self) -> int:
        return self.dim_y + self.dim_x

    @property
    def labels(self) -> tuple:
        return tuple(self.labels_y) + tuple(self.labels_x)

    def y_block(self, v: np.ndarray) -> np.ndarray:
        return v[..., : self.dim_y]

    def x_block(self, v: np.ndarray) -> np.ndarray:
        return v[..., self.dim_y:]

    def split_cov(self, cov: np.ndarray):
        """Blocks (sigma_y, sigma_x, sigma_xy, sigma_yx) of the joint covariance."""
        dy = self.dim_y
        s_y = cov[:dy, :dy]
        s_x = cov[dy:, dy:]
        s_yx = cov[:dy, dy:]
        s_xy = cov[dy:, :dy]
        return s_y, s_x, s_xy, s_yx
