"""Dense linear-algebra and statistics kernels shared by every estimator.

All routines are pure: matrices in, matrices out, RNG always explicit.
Covariance handling follows one policy everywhere: try a Cholesky factor,
retry once with a trace-scaled diagonal jitter, then either repair to the
nearest positive semi-definite matrix (sampling paths) or raise
``SingularCovarianceError`` (density paths, treated as a -inf objective by
callers).
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass

import numpy as np
from scipy.stats import chi2

logger = logging.getLogger(__name__)

SYMMETRY_TOL = 1e-10
JITTER_REL = 1e-10
PSD_DIAG_FLOOR = 1e-12


class SingularCovarianceError(RuntimeError):
    """Covariance not usable even after jitter/repair."""


@dataclass(frozen=True)
class MomentPair:
    """Mean vector and covariance matrix of a joint summary vector."""

    mean: np.ndarray
    cov: np.ndarray

    @property
    def dim(self) -> int:
        return self.mean.shape[0]


def _check_symmetric(m: np.ndarray, what: str = "matrix") -> None:
    if m.ndim != 2 or m.shape[0] != m.shape[1]:
        raise ValueError(f"{what} must be square, got shape {m.shape}")
    asym = np.max(np.abs(m - m.T)) if m.size else 0.0
    if asym > SYMMETRY_TOL:
        raise ValueError(f"{what} not symmetric: max |m - m.T| = {asym:.3e}")


def cholesky(m: np.ndarray):
    """Lower-triangular factor L with L L' = m, or None if m is not
    numerically positive definite. Raises on asymmetric input."""
    m = np.asarray(m, dtype=float)
    _check_symmetric(m, "cholesky input")
    try:
        return np.linalg.cholesky(m)
    except np.linalg.LinAlgError:
        return None


def jittered_cholesky(m: np.ndarray) -> tuple[np.ndarray, float]:
    """Cholesky with one jitter retry (+JITTER_REL * trace/d on the diagonal).

    Returns (L, jitter_used); raises SingularCovarianceError if both fail.
    """
    L = cholesky(m)
    if L is not None:
        return L, 0.0
    d = m.shape[0]
    jitter = JITTER_REL * np.trace(m) / max(d, 1)
    if jitter > 0.0:
        L = cholesky(m + jitter * np.eye(d))
        if L is not None:
            return L, jitter
    raise SingularCovarianceError(
        f"matrix of dim {d} not positive definite after jitter {jitter:.3e}"
    )


def nearest_psd(m: np.ndarray) -> np.ndarray:
    """Nearest (Frobenius) positive semi-definite matrix by eigenvalue clamping.

    PSD input is returned unchanged; otherwise negative eigenvalues are set to
    zero, the matrix is rebuilt and its diagonal floored at PSD_DIAG_FLOOR.
    """
    m = np.asarray(m, dtype=float)
    _check_symmetric(m, "nearest_psd input")
    w, v = np.linalg.eigh(m)
    if w.size == 0 or w[0] >= 0.0:
        return m
    out = (v * np.clip(w, 0.0, None)) @ v.T
    out = 0.5 * (out + out.T)
    idx = np.arange(out.shape[0])
    out[idx, idx] = np.maximum(out[idx, idx], PSD_DIAG_FLOOR)
    return out


def mvn_logpdf(x: np.ndarray, mp: MomentPair) -> float:
    """Log density of N(mean, cov) at x. Raises SingularCovarianceError if the
    covariance is unusable even after the jitter retry."""
    x = np.asarray(x, dtype=float)
    if x.shape != mp.mean.shape:
        raise ValueError(f"dim mismatch: x {x.shape} vs mean {mp.mean.shape}")
    L, _ = jittered_cholesky(mp.cov)
    d = x.shape[0]
    z = _solve_lower(L, x - mp.mean)
    logdet = 2.0 * np.sum(np.log(np.diag(L)))
    return float(-0.5 * d * math.log(2.0 * math.pi) - 0.5 * logdet - 0.5 * z @ z)


def _solve_lower(L: np.ndarray, b: np.ndarray) -> np.ndarray:
    # forward substitution; L is lower triangular
    from scipy.linalg import solve_triangular

    return solve_triangular(L, b, lower=True, check_finite=False)


def mvn_sample(mp: MomentPair, rng: np.random.Generator) -> np.ndarray:
    """One draw mean + M z with z iid standard normal.

    M is the Cholesky factor when the covariance is PD; otherwise the
    nearest-PSD repair is applied, a jittered Cholesky attempted, and as a
    last resort (singular but valid PSD, e.g. the zero matrix) an
    eigenvalue square-root factor is used. The standard-normal vector is
    drawn before branching, so a fixed seed gives the same draw on every
    path.
    """
    d = mp.dim
    z = rng.standard_normal(d)
    L = cholesky(mp.cov)
    if L is None:
        repaired = nearest_psd(mp.cov)
        try:
            L, _ = jittered_cholesky(repaired)
        except SingularCovarianceError:
            w, v = np.linalg.eigh(repaired)
            L = v * np.sqrt(np.clip(w, 0.0, None))
    return mp.mean + L @ z


def sample_moments(rows) -> MomentPair:
    """Classical mean and unbiased (1/(R-1)) covariance of R stacked vectors."""
    rows = np.atleast_2d(np.asarray(rows, dtype=float))
    R = rows.shape[0]
    if R < 2:
        raise ValueError(f"need at least 2 rows, got {R}")
    mean = rows.mean(axis=0)
    dev = rows - mean
    cov = dev.T @ dev / (R - 1)
    cov = 0.5 * (cov + cov.T)
    return MomentPair(mean, cov)


def _sq_mahalanobis(rows: np.ndarray, mp: MomentPair) -> np.ndarray:
    L, _ = jittered_cholesky(mp.cov)
    from scipy.linalg import solve_triangular

    z = solve_triangular(L, (rows - mp.mean).T, lower=True, check_finite=False)
    return np.sum(z * z, axis=0)


def robust_moments(rows) -> MomentPair:
    """Chi-square-trimmed reweighted moments, downweighting tail rows.

    One pass: classical moments, squared Mahalanobis distances, drop rows
    beyond the 97.5% chi2(d) quantile, recompute on the survivors, then
    rescale the covariance by median(d^2)/chi2_median(d) with distances
    recomputed against the trimmed moments (consistency correction).
    Falls back to the classical moments when trimming is impossible.
    """
    rows = np.atleast_2d(np.asarray(rows, dtype=float))
    R, d = rows.shape
    if R < 2 * (d + 1):
        raise ValueError(f"need at least 2(d+1)={2 * (d + 1)} rows, got {R}")
    mp0 = sample_moments(rows)
    try:
        d2 = _sq_mahalanobis(rows, mp0)
    except SingularCovarianceError:
        logger.warning("robust_moments: singular classical covariance, no trimming")
        return mp0
    keep = d2 <= chi2.ppf(0.975, d)
    if keep.sum() < d + 1:
        logger.warning(
            "robust_moments: only %d of %d rows survive trimming, falling back",
            int(keep.sum()), R,
        )
        return mp0
    mp1 = sample_moments(rows[keep])
    try:
        d2_new = _sq_mahalanobis(rows, mp1)
    except SingularCovarianceError:
        logger.warning("robust_moments: singular trimmed covariance, skipping rescale")
        return mp1
    factor = float(np.median(d2_new)) / chi2.ppf(0.5, d)
    return MomentPair(mp1.mean, mp1.cov * factor)


def normal_cdf(x: float) -> float:
    """Standard normal CDF via erfc (accurate in both tails)."""
    return 0.5 * math.erfc(-x / math.sqrt(2.0))


_NQ_A = (-3.969683028665376e+01, 2.209460984245205e+02, -2.759285104469687e+02,
         1.383577518672690e+02, -3.066479806614716e+01, 2.506628277459239e+00)
_NQ_B = (-5.447609879822406e+01, 1.615858368580409e+02, -1.556989798598866e+02,
         6.680131188771972e+01, -1.328068155288572e+01)
_NQ_C = (-7.784894002430293e-03, -3.223964580411365e-01, -2.400758277161838e+00,
         -2.549732539343734e+00, 4.374664141464968e+00, 2.938163982698783e+00)
_NQ_D = (7.784695709041462e-03, 3.224671290700398e-01, 2.445134137142996e+00,
         3.754408661907416e+00)


def normal_quantile(p: float) -> float:
    """Inverse standard-normal CDF: rational approximation plus one Newton step."""
    if not 0.0 < p < 1.0:
        raise ValueError(f"p must be in (0,1), got {p}")
    p_low = 0.02425
    if p < p_low:
        q = math.sqrt(-2.0 * math.log(p))
        x = ((((((_NQ_C[0] * q + _NQ_C[1]) * q + _NQ_C[2]) * q + _NQ_C[3]) * q
              + _NQ_C[4]) * q + _NQ_C[5])
             / ((((_NQ_D[0] * q + _NQ_D[1]) * q + _NQ_D[2]) * q + _NQ_D[3]) * q + 1.0))
    elif p <= 1.0 - p_low:
        q = p - 0.5
        r = q * q
        x = ((((((_NQ_A[0] * r + _NQ_A[1]) * r + _NQ_A[2]) * r + _NQ_A[3]) * r
              + _NQ_A[4]) * r + _NQ_A[5]) * q
             / (((((_NQ_B[0] * r + _NQ_B[1]) * r + _NQ_B[2]) * r + _NQ_B[3]) * r
                 + _NQ_B[4]) * r + 1.0))
    else:
        q = math.sqrt(-2.0 * math.log(1.0 - p))
        x = -((((((_NQ_C[0] * q + _NQ_C[1]) * q + _NQ_C[2]) * q + _NQ_C[3]) * q
               + _NQ_C[4]) * q + _NQ_C[5])
              / ((((_NQ_D[0] * q + _NQ_D[1]) * q + _NQ_D[2]) * q + _NQ_D[3]) * q + 1.0))
    pdf = math.exp(-0.5 * x * x) / math.sqrt(2.0 * math.pi)
    return x - (normal_cdf(x) - p) / pdf


def percentile(xs, q: float) -> float:
    """Type-7 (linear interpolation) empirical quantile, q in [0, 100]."""
    xs = np.asarray(xs, dtype=float)
    if xs.size == 0:
        raise ValueError("empty sample")
    if not 0.0 <= q <= 100.0:
        raise ValueError(f"q must be in [0,100], got {q}")
    s = np.sort(xs)
    h = (s.size - 1) * q / 100.0
    i = int(math.floor(h))
    if i >= s.size - 1:
        return float(s[-1])
    return float(s[i] + (s[i + 1] - s[i]) * (h - i))


def mad(xs) -> float:
    """Median absolute deviation, unscaled: median(|x - median(x)|)."""
    xs = np.asarray(xs, dtype=float)
    if xs.size == 0:
        raise ValueError("empty sample")
    med = percentile(xs, 50.0)
    return percentile(np.abs(xs - med), 50.0)
