"""Nelder-Mead simplex minimizer tolerant of noisy and failing objectives.

The synthetic-likelihood M-step fixes an exact iteration budget, so there
is no convergence-tolerance stopping: the search runs `max_iters` passes
and returns the best point seen across *all* evaluations, never a centroid.
An objective may signal failure by returning None/NaN or raising
EvaluationFailure; failed points are treated as +inf and dominated by any
finite vertex.
"""

from __future__ import annotations

import math

import numpy as np

# standard coefficients: reflection, expansion, contraction, shrink
ALPHA, GAMMA, RHO, SIGMA = 1.0, 2.0, 0.5, 0.5

REL_STEP = 0.05
ABS_STEP = 0.00025


class EvaluationFailure(Exception):
    """Raised by objectives to signal an unusable evaluation."""


def initial_simplex(x0: np.ndarray) -> np.ndarray:
    """fminsearch-style start: x0 plus per-coordinate 5% steps (0.00025 if 0)."""
    p = x0.shape[0]
    simplex = np.tile(x0, (p + 1, 1))
    for i in range(p):
        step = REL_STEP * x0[i] if x0[i] != 0.0 else ABS_STEP
        simplex[i + 1, i] += step
    return simplex


def nelder_mead(f, x0, max_iters: int):
    """Minimize f from x0 with an exact iteration budget.

    Returns (best_x, best_f, eval_count). best is tracked over every
    evaluation (including rejected trial points), with strict-improvement
    first-seen tie-breaking, so callers with noisy objectives get the
    lowest value actually observed.
    """
    x0 = np.asarray(x0, dtype=float)
    if not np.all(np.isfinite(x0)):
        raise ValueError("non-finite starting point")
    p = x0.shape[0]

    state = {"best_x": x0.copy(), "best_f": math.inf, "evals": 0}

    def ev(x):
        state["evals"] += 1
        try:
            val = f(x)
        except EvaluationFailure:
            val = None
        val = math.inf if val is None or not math.isfinite(val) else float(val)
        if val < state["best_f"]:
            state["best_f"] = val
            state["best_x"] = np.array(x, dtype=float)
        return val

    f0 = ev(x0)
    if max_iters <= 0:
        return x0.copy(), f0, state["evals"]

    simplex = initial_simplex(x0)
    values = np.empty(p + 1)
    values[0] = f0
    for i in range(1, p + 1):
        values[i] = ev(simplex[i])

    for _ in range(max_iters):
        order = np.argsort(values, kind="stable")
        simplex, values = simplex[order], values[order]
        centroid = simplex[:-1].mean(axis=0)
        worst = simplex[-1]

        xr = centroid + ALPHA * (centroid - worst)
        fr = ev(xr)
        if fr < values[0]:
            xe = centroid + GAMMA * (xr - centroid)
            fe = ev(xe)
            if fe < fr:
                simplex[-1], values[-1] = xe, fe
            else:
                simplex[-1], values[-1] = xr, fr
        elif fr < values[-2]:
            simplex[-1], values[-1] = xr, fr
        else:
            if fr < values[-1]:
                xc = centroid + RHO * (xr - centroid)  # outside contraction
                fc = ev(xc)
                accept = fc <= fr
            else:
                xc = centroid - RHO * (centroid - worst)  # inside contraction
                fc = ev(xc)
                accept = fc < values[-1]
            if accept:
                simplex[-1], values[-1] = xc, fc
            else:
                for i in range(1, p + 1):
                    simplex[i] = simplex[0] + SIGMA * (simplex[i] - simplex[0])
                    values[i] = ev(simplex[i])

    return state["best_x"], state["best_f"], state["evals"]
