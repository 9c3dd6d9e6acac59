"""Pure-numpy implementations of the hot numeric kernels.

Every function takes pre-drawn standard-normal / uniform arrays instead of
an RNG so that results are a deterministic function of the inputs and the
numba backend can reproduce them. Summary kernels share one type-7
quantile formula (a + (b-a)*frac on the sorted row) across backends.
"""

from __future__ import annotations

import math

import numpy as np

NAME = "numpy"


def _rowq(sorted_rows: np.ndarray, q: float) -> np.ndarray:
    """Type-7 quantile of each (pre-sorted) row; q in [0, 100]."""
    n = sorted_rows.shape[1]
    h = (n - 1) * q / 100.0
    i = int(math.floor(h))
    if i >= n - 1:
        return sorted_rows[:, n - 1].copy()
    frac = h - i
    a = sorted_rows[:, i]
    return a + (sorted_rows[:, i + 1] - a) * frac


def _row_median_mad(values: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    s = np.sort(values, axis=1)
    med = _rowq(s, 50.0)
    dev = np.sort(np.abs(values - med[:, None]), axis=1)
    return med, _rowq(dev, 50.0)


# ---------------------------------------------------------------------------
# nonlinear Gaussian state-space model


def nlg_paths(x0: float, sig_x: float, sig_y: float,
              zx: np.ndarray, zy: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Iterate X_j = 2 sin(exp(X_{j-1})) + sig_x z; Y = X + sig_y z'."""
    R, n = zx.shape
    X = np.empty((R, n))
    prev = np.full(R, float(x0))
    with np.errstate(over="ignore", invalid="ignore"):
        for j in range(n):
            prev = 2.0 * np.sin(np.exp(prev)) + sig_x * zx[:, j]
            X[:, j] = prev
        Y = X + sig_y * zy
    return X, Y


def nlg_step(states: np.ndarray, z: np.ndarray, sig_x: float) -> np.ndarray:
    """One latent transition for a particle set."""
    with np.errstate(over="ignore", invalid="ignore"):
        return 2.0 * np.sin(np.exp(states)) + sig_x * z


def series_summaries6(values: np.ndarray) -> np.ndarray:
    """Per row: median, MAD, P10, P20, P75, P90."""
    s = np.sort(values, axis=1)
    med, m = _row_median_mad(values)
    out = np.empty((values.shape[0], 6))
    out[:, 0] = med
    out[:, 1] = m
    out[:, 2] = _rowq(s, 10.0)
    out[:, 3] = _rowq(s, 20.0)
    out[:, 4] = _rowq(s, 75.0)
    out[:, 5] = _rowq(s, 90.0)
    return out


# ---------------------------------------------------------------------------
# pharmacokinetic SDE (Euler-Maruyama on a fine grid)


def theo_paths(x0: float, ke: float, cl: float, sigma: float,
               dose_ka: float, h: float, expfac: np.ndarray,
               z: np.ndarray) -> np.ndarray:
    """Euler paths of dX = (dose*Ka*Ke/Cl * e^{-Ka t} - Ke X)dt + sigma sqrt(X) dW.

    expfac[i] = exp(-Ka * tau_i) at the left grid endpoints; z is (R, N)
    standard normal. States crossing zero are clamped to 1e-6.
    Returns the (R, N+1) grid including X_0.
    """
    R, N = z.shape
    out = np.empty((R, N + 1))
    out[:, 0] = x0
    x = np.full(R, float(x0))
    sqrt_h = math.sqrt(h)
    with np.errstate(over="ignore", invalid="ignore"):
        for i in range(N):
            drift = (dose_ka * ke / cl) * expfac[i] - ke * x
            x = x + drift * h + sigma * np.sqrt(x) * sqrt_h * z[:, i]
            x = np.where(x <= 0.0, 1e-6, x)
            out[:, i + 1] = x
    return out


def theo_segment(states: np.ndarray, z: np.ndarray, ke: float, cl: float,
                 sigma: float, dose_ka: float, h: float,
                 expfac: np.ndarray) -> np.ndarray:
    """Propagate particles through one inter-observation block of G substeps.

    z is (M, G); expfac[g] at the substep left endpoints. Returns (M, G)
    with the G intermediate states; final column is the next particle state.
    """
    M, G = z.shape
    seg = np.empty((M, G))
    x = states.astype(float, copy=True)
    sqrt_h = math.sqrt(h)
    with np.errstate(over="ignore", invalid="ignore"):
        for g in range(G):
            drift = (dose_ka * ke / cl) * expfac[g] - ke * x
            x = x + drift * h + sigma * np.sqrt(x) * sqrt_h * z[:, g]
            x = np.where(x <= 0.0, 1e-6, x)
            seg[:, g] = x
    return seg


def interp_rows(fine: np.ndarray, t0: float, h: float,
                obs_times: np.ndarray) -> np.ndarray:
    """Linear interpolation of each row of a uniform-grid path at obs_times."""
    pos = (np.asarray(obs_times, dtype=float) - t0) / h
    n_grid = fine.shape[1]
    i0 = np.clip(np.floor(pos).astype(np.int64), 0, n_grid - 2)
    frac = pos - i0
    return fine[:, i0] * (1.0 - frac) + fine[:, i0 + 1] * frac


def sigma_qv_rows(fine: np.ndarray, h: float) -> np.ndarray:
    """Quadratic-variation noise-scale statistic per path:
    sqrt(sum dx^2 / sum x_left * h)."""
    num = np.sum(np.diff(fine, axis=1) ** 2, axis=1)
    den = np.sum(fine[:, :-1], axis=1) * h
    return np.sqrt(num / den)


def theo_latent_summaries(fine: np.ndarray, x_obs: np.ndarray, y: np.ndarray,
                          h: float) -> np.ndarray:
    """Per row: median, MAD of the fine path; QV sigma; residual RMS."""
    med, m = _row_median_mad(fine)
    out = np.empty((fine.shape[0], 4))
    out[:, 0] = med
    out[:, 1] = m
    out[:, 2] = sigma_qv_rows(fine, h)
    out[:, 3] = np.sqrt(np.mean((y - x_obs) ** 2, axis=1))
    return out


def theo_obs_summaries(y: np.ndarray, obs_times: np.ndarray) -> np.ndarray:
    """Per row: median, MAD, first-to-last slope."""
    med, m = _row_median_mad(y)
    out = np.empty((y.shape[0], 3))
    out[:, 0] = med
    out[:, 1] = m
    out[:, 2] = (y[:, -1] - y[:, 0]) / (obs_times[-1] - obs_times[0])
    return out


# ---------------------------------------------------------------------------
# g-and-k quantile distribution


def gk_quantile(r: np.ndarray, a: float, b: float, c: float, g: float,
                k: float) -> np.ndarray:
    """Quantile function at normal scores r; tanh form keeps large |r| stable."""
    with np.errstate(over="ignore", invalid="ignore"):
        return a + b * (1.0 + c * np.tanh(0.5 * g * r)) * (1.0 + r * r) ** k * r


def gk_raw_summaries(values: np.ndarray) -> np.ndarray:
    """Per row, before the log-shift: location, scale, skew and octile-kurtosis
    quantile statistics plus the 20/30/70/80th percentiles."""
    s = np.sort(values, axis=1)
    q12 = _rowq(s, 12.5)
    q25 = _rowq(s, 25.0)
    q37 = _rowq(s, 37.5)
    q50 = _rowq(s, 50.0)
    q62 = _rowq(s, 62.5)
    q75 = _rowq(s, 75.0)
    q87 = _rowq(s, 87.5)
    sb = q75 - q25
    out = np.empty((values.shape[0], 8))
    out[:, 0] = q50
    out[:, 1] = sb
    out[:, 2] = (q75 + q25 - 2.0 * q50) / sb
    out[:, 3] = (q87 - q62 + q37 - q12) / sb
    out[:, 4] = _rowq(s, 20.0)
    out[:, 5] = _rowq(s, 30.0)
    out[:, 6] = _rowq(s, 70.0)
    out[:, 7] = _rowq(s, 80.0)
    return out
