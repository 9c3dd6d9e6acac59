"""Numba-compiled twins of the numpy kernels.

Same signatures, same arithmetic, same pre-drawn RNG arrays; the only
difference is tight scalar loops under @njit. Compiled artifacts are
cached on disk so forked replication workers do not recompile.
"""

from __future__ import annotations

import math

import numpy as np
from numba import njit

NAME = "numba"


@njit(cache=True)
def _q_sorted(s, q):
    n = s.shape[0]
    h = (n - 1) * q / 100.0
    i = int(math.floor(h))
    if i >= n - 1:
        return s[n - 1]
    return s[i] + (s[i + 1] - s[i]) * (h - i)


@njit(cache=True)
def _median_mad(row):
    s = np.sort(row.copy())
    med = _q_sorted(s, 50.0)
    dev = np.sort(np.abs(row - med))
    return med, _q_sorted(dev, 50.0)


@njit(cache=True)
def nlg_paths(x0, sig_x, sig_y, zx, zy):
    R, n = zx.shape
    X = np.empty((R, n))
    Y = np.empty((R, n))
    for r in range(R):
        prev = x0
        for j in range(n):
            prev = 2.0 * math.sin(math.exp(prev)) + sig_x * zx[r, j]
            X[r, j] = prev
            Y[r, j] = prev + sig_y * zy[r, j]
    return X, Y


@njit(cache=True)
def nlg_step(states, z, sig_x):
    M = states.shape[0]
    out = np.empty(M)
    for m in range(M):
        out[m] = 2.0 * math.sin(math.exp(states[m])) + sig_x * z[m]
    return out


@njit(cache=True)
def series_summaries6(values):
    R = values.shape[0]
    out = np.empty((R, 6))
    for r in range(R):
        row = values[r]
        s = np.sort(row.copy())
        med, m = _median_mad(row)
        out[r, 0] = med
        out[r, 1] = m
        out[r, 2] = _q_sorted(s, 10.0)
        out[r, 3] = _q_sorted(s, 20.0)
        out[r, 4] = _q_sorted(s, 75.0)
        out[r, 5] = _q_sorted(s, 90.0)
    return out


@njit(cache=True)
def theo_paths(x0, ke, cl, sigma, dose_ka, h, expfac, z):
    R, N = z.shape
    out = np.empty((R, N + 1))
    sqrt_h = math.sqrt(h)
    coef = dose_ka * ke / cl
    for r in range(R):
        x = x0
        out[r, 0] = x
        for i in range(N):
            drift = coef * expfac[i] - ke * x
            x = x + drift * h + sigma * math.sqrt(x) * sqrt_h * z[r, i]
            if x <= 0.0:
                x = 1e-6
            out[r, i + 1] = x
    return out


@njit(cache=True)
def theo_segment(states, z, ke, cl, sigma, dose_ka, h, expfac):
    M, G = z.shape
    seg = np.empty((M, G))
    sqrt_h = math.sqrt(h)
    coef = dose_ka * ke / cl
    for m in range(M):
        x = states[m]
        for g in range(G):
            drift = coef * expfac[g] - ke * x
            x = x + drift * h + sigma * math.sqrt(x) * sqrt_h * z[m, g]
            if x <= 0.0:
                x = 1e-6
            seg[m, g] = x
    return seg


@njit(cache=True)
def interp_rows(fine, t0, h, obs_times):
    R = fine.shape[0]
    n_grid = fine.shape[1]
    n = obs_times.shape[0]
    out = np.empty((R, n))
    for j in range(n):
        pos = (obs_times[j] - t0) / h
        i0 = int(math.floor(pos))
        if i0 < 0:
            i0 = 0
        if i0 > n_grid - 2:
            i0 = n_grid - 2
        frac = pos - i0
        for r in range(R):
            a = fine[r, i0]
            out[r, j] = a * (1.0 - frac) + fine[r, i0 + 1] * frac
    return out


@njit(cache=True)
def sigma_qv_rows(fine, h):
    R, n_grid = fine.shape
    out = np.empty(R)
    for r in range(R):
        num = 0.0
        den = 0.0
        for i in range(n_grid - 1):
            d = fine[r, i + 1] - fine[r, i]
            num += d * d
            den += fine[r, i]
        out[r] = math.sqrt(num / (den * h))
    return out


@njit(cache=True)
def theo_latent_summaries(fine, x_obs, y, h):
    R = fine.shape[0]
    n = y.shape[1]
    out = np.empty((R, 4))
    qv = sigma_qv_rows(fine, h)
    for r in range(R):
        med, m = _median_mad(fine[r])
        out[r, 0] = med
        out[r, 1] = m
        out[r, 2] = qv[r]
        acc = 0.0
        for j in range(n):
            d = y[r, j] - x_obs[r, j]
            acc += d * d
        out[r, 3] = math.sqrt(acc / n)
    return out


@njit(cache=True)
def theo_obs_summaries(y, obs_times):
    R, n = y.shape
    out = np.empty((R, 3))
    span = obs_times[n - 1] - obs_times[0]
    for r in range(R):
        med, m = _median_mad(y[r])
        out[r, 0] = med
        out[r, 1] = m
        out[r, 2] = (y[r, n - 1] - y[r, 0]) / span
    return out


@njit(cache=True)
def gk_quantile(r, a, b, c, g, k):
    R, n = r.shape
    out = np.empty((R, n))
    for i in range(R):
        for j in range(n):
            ri = r[i, j]
            out[i, j] = (a + b * (1.0 + c * math.tanh(0.5 * g * ri))
                         * (1.0 + ri * ri) ** k * ri)
    return out


@njit(cache=True)
def gk_raw_summaries(values):
    R = values.shape[0]
    out = np.empty((R, 8))
    for r in range(R):
        s = np.sort(values[r].copy())
        q12 = _q_sorted(s, 12.5)
        q25 = _q_sorted(s, 25.0)
        q37 = _q_sorted(s, 37.5)
        q50 = _q_sorted(s, 50.0)
        q62 = _q_sorted(s, 62.5)
        q75 = _q_sorted(s, 75.0)
        q87 = _q_sorted(s, 87.5)
        sb = q75 - q25
        out[r, 0] = q50
        out[r, 1] = sb
        out[r, 2] = (q75 + q25 - 2.0 * q50) / sb
        out[r, 3] = (q87 - q62 + q37 - q12) / sb
        out[r, 4] = _q_sorted(s, 20.0)
        out[r, 5] = _q_sorted(s, 30.0)
        out[r, 6] = _q_sorted(s, 70.0)
        out[r, 7] = _q_sorted(s, 80.0)
    return out
