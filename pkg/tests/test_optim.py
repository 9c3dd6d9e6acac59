"""Nelder-Mead contract tests."""

import math

import numpy as np
import pytest

from saemsl.optim import EvaluationFailure, initial_simplex, nelder_mead


def test_quadratic_minimum():
    x, f, evals = nelder_mead(lambda v: float(np.sum((v - 1.0) ** 2)),
                              np.zeros(3), 200)
    assert np.all(np.abs(x - 1.0) <= 1e-4)
    assert evals > 200


def test_rosenbrock():
    def rosen(v):
        return float(100.0 * (v[1] - v[0] ** 2) ** 2 + (1.0 - v[0]) ** 2)

    x, f, _ = nelder_mead(rosen, np.array([-1.2, 1.0]), 500)
    assert f < 1e-6
    assert np.allclose(x, [1.0, 1.0], atol=1e-2)


def test_zero_iterations_returns_start():
    calls = []

    def f(v):
        calls.append(v.copy())
        return float(v @ v)

    x0 = np.array([2.0, -3.0])
    x, fval, evals = nelder_mead(f, x0, 0)
    assert np.array_equal(x, x0)
    assert fval == 13.0
    assert evals == 1 and len(calls) == 1


def test_nonfinite_start_raises():
    with pytest.raises(ValueError):
        nelder_mead(lambda v: 0.0, np.array([np.nan, 1.0]), 5)


def test_best_so_far_monotone():
    history = []

    def f(v):
        val = float((v[0] - 3.0) ** 2 + (v[1] + 1.0) ** 2)
        history.append(val)
        return val

    _, best, _ = nelder_mead(f, np.zeros(2), 100)
    assert best == min(history)
    running = math.inf
    mins = []
    for v in history:
        running = min(running, v)
        mins.append(running)
    assert mins == sorted(mins, reverse=True)


def test_failures_do_not_crash_search():
    def f(v):
        if v[0] < 0.0:
            raise EvaluationFailure("left half-plane unusable")
        if v[1] > 5.0:
            return None
        return float((v[0] - 1.0) ** 2 + v[1] ** 2)

    x, fval, _ = nelder_mead(f, np.array([2.0, 1.0]), 200)
    assert math.isfinite(fval)
    assert fval <= 1e-3


def test_all_failures_returns_start_value_inf():
    x, fval, _ = nelder_mead(lambda v: None, np.array([1.0, 2.0]), 10)
    assert fval == math.inf
    assert np.array_equal(x, [1.0, 2.0])


def test_initial_simplex_shape():
    s = initial_simplex(np.array([2.0, 0.0]))
    assert s.shape == (3, 2)
    assert np.array_equal(s[0], [2.0, 0.0])
    assert s[1, 0] == pytest.approx(2.0 * 1.05)
    assert s[2, 1] == pytest.approx(0.00025)
