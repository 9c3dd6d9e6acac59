"""Backend equivalence: the numba kernels must reproduce the numpy kernels
on identical pre-drawn RNG arrays, and a few direct value checks."""

import numpy as np
import pytest

from saemsl.kernels import numpy_backend as npk

try:
    from saemsl.kernels import numba_backend as nbk
    HAVE_NUMBA = True
except ImportError:  # pragma: no cover
    HAVE_NUMBA = False

needs_numba = pytest.mark.skipif(not HAVE_NUMBA, reason="numba unavailable")

RTOL = 1e-12


@pytest.fixture(scope="module")
def rng():
    return np.random.default_rng(1234)


@needs_numba
def test_nlg_paths_equivalent_short_horizon(rng):
    # the sin(exp(.)) map is chaotic: last-ulp libm differences between the
    # backends amplify exponentially, so exact agreement is only meaningful
    # over a few steps
    zx = rng.standard_normal((50, 3))
    zy = rng.standard_normal((50, 3))
    X1, Y1 = npk.nlg_paths(0.0, 2.0, 1.5, zx, zy)
    X2, Y2 = nbk.nlg_paths(0.0, 2.0, 1.5, zx, zy)
    np.testing.assert_allclose(X2, X1, rtol=1e-9)
    np.testing.assert_allclose(Y2, Y1, rtol=1e-9)


@needs_numba
def test_nlg_paths_equivalent_in_distribution(rng):
    # long horizons: same seed draws keep the two backends statistically
    # indistinguishable even where trajectories decorrelate
    zx = rng.standard_normal((400, 50))
    zy = rng.standard_normal((400, 50))
    X1, _ = npk.nlg_paths(0.0, 2.0, 1.5, zx, zy)
    X2, _ = nbk.nlg_paths(0.0, 2.0, 1.5, zx, zy)
    assert abs(np.mean(X1) - np.mean(X2)) < 0.05
    assert abs(np.std(X1) - np.std(X2)) < 0.05


@needs_numba
def test_nlg_step_equivalent(rng):
    st = rng.normal(size=300)
    z = rng.standard_normal(300)
    np.testing.assert_allclose(nbk.nlg_step(st, z, 2.2), npk.nlg_step(st, z, 2.2),
                               rtol=RTOL)


@needs_numba
def test_series_summaries6_equivalent(rng):
    V = rng.normal(size=(80, 50))
    np.testing.assert_allclose(nbk.series_summaries6(V), npk.series_summaries6(V),
                               rtol=RTOL, atol=1e-13)


@needs_numba
def test_theo_paths_and_summaries_equivalent(rng):
    N = 200
    h = 0.05
    grid = h * np.arange(N + 1)
    expfac = np.exp(-1.492 * grid[:-1])
    z = rng.standard_normal((30, N))
    f1 = npk.theo_paths(8.0, 0.05, 0.04, 0.1, 4.0 * 1.492, h, expfac, z)
    f2 = nbk.theo_paths(8.0, 0.05, 0.04, 0.1, 4.0 * 1.492, h, expfac, z)
    np.testing.assert_allclose(f2, f1, rtol=1e-10)

    obs_t = np.arange(1.0, 10.0)
    x1 = npk.interp_rows(f1, 0.0, h, obs_t)
    x2 = nbk.interp_rows(f1, 0.0, h, obs_t)
    np.testing.assert_allclose(x2, x1, rtol=RTOL)

    y = x1 + 0.3 * rng.standard_normal(x1.shape)
    s1 = npk.theo_latent_summaries(f1, x1, y, h)
    s2 = nbk.theo_latent_summaries(f1, x1, y, h)
    np.testing.assert_allclose(s2, s1, rtol=1e-10)
    o1 = npk.theo_obs_summaries(y, obs_t)
    o2 = nbk.theo_obs_summaries(y, obs_t)
    np.testing.assert_allclose(o2, o1, rtol=RTOL)


@needs_numba
def test_theo_segment_equivalent(rng):
    states = 8.0 + rng.normal(size=100) ** 2
    z = rng.standard_normal((100, 20))
    expfac = np.exp(-1.492 * (3.0 + 0.05 * np.arange(20)))
    s1 = npk.theo_segment(states, z, 0.05, 0.04, 0.1, 4.0 * 1.492, 0.05, expfac)
    s2 = nbk.theo_segment(states, z, 0.05, 0.04, 0.1, 4.0 * 1.492, 0.05, expfac)
    np.testing.assert_allclose(s2, s1, rtol=1e-10)


@needs_numba
def test_gk_equivalent(rng):
    r = rng.standard_normal((60, 100))
    x1 = npk.gk_quantile(r, 3.0, 1.0, 0.8, 2.0, 0.5)
    x2 = nbk.gk_quantile(r, 3.0, 1.0, 0.8, 2.0, 0.5)
    np.testing.assert_allclose(x2, x1, rtol=1e-11)
    np.testing.assert_allclose(nbk.gk_raw_summaries(x1), npk.gk_raw_summaries(x1),
                               rtol=RTOL, atol=1e-13)


@needs_numba
def test_sigma_qv_rows_equivalent(rng):
    fine = 8.0 + np.cumsum(0.1 * rng.standard_normal((20, 400)), axis=1)
    fine = np.abs(fine) + 0.1
    np.testing.assert_allclose(nbk.sigma_qv_rows(fine, 0.05),
                               npk.sigma_qv_rows(fine, 0.05), rtol=RTOL)


# -- direct value checks (backend-independent semantics) ---------------------


def test_nlg_noise_free_recursion():
    zx = np.zeros((1, 3))
    zy = np.zeros((1, 3))
    X, Y = npk.nlg_paths(0.0, 0.0, 0.0, zx, zy)
    x1 = 2.0 * np.sin(np.exp(0.0))
    assert X[0, 0] == pytest.approx(x1)
    assert X[0, 1] == pytest.approx(2.0 * np.sin(np.exp(x1)))
    np.testing.assert_array_equal(X, Y)


def test_nlg_paths_bounded_drift(rng):
    zx = rng.standard_normal((200, 50))
    zy = rng.standard_normal((200, 50))
    sig = 2.0
    X, _ = npk.nlg_paths(0.0, sig, 1.0, zx, zy)
    assert np.all(np.abs(X) <= 2.0 + sig * np.max(np.abs(zx)) + 1e-12)


def test_theo_clamp_keeps_paths_positive():
    # huge noise forces zero crossings
    rng = np.random.default_rng(5)
    z = rng.standard_normal((20, 100))
    expfac = np.exp(-1.492 * 0.05 * np.arange(100))
    fine = npk.theo_paths(0.5, 0.05, 0.04, 25.0, 4.0 * 1.492, 0.05, expfac, z)
    assert np.all(fine > 0.0)


def test_interp_rows_on_grid_is_exact():
    fine = np.arange(11.0)[None, :] ** 2
    got = npk.interp_rows(fine, 0.0, 0.5, np.array([1.0, 2.5, 5.0]))
    np.testing.assert_allclose(got[0], [4.0, 25.0, 100.0])


def test_interp_rows_midpoint():
    fine = np.array([[0.0, 2.0]])
    got = npk.interp_rows(fine, 0.0, 1.0, np.array([0.5]))
    assert got[0, 0] == pytest.approx(1.0)


def test_gk_median_is_location():
    r = np.zeros((1, 1))
    x = npk.gk_quantile(r, 3.0, 1.0, 0.8, 2.0, 0.5)
    assert x[0, 0] == 3.0


def test_gk_b_to_zero_collapses_to_location(rng):
    r = rng.standard_normal((1, 50))
    x = npk.gk_quantile(r, 3.0, 1e-12, 0.8, 2.0, 0.5)
    np.testing.assert_allclose(x, 3.0, atol=1e-9)


def test_gk_monotone_in_r():
    # monotone for any k > -0.5 when g = 0 (derivative (1+r^2)^(k-1) *
    # (1 + (2k+1) r^2) > 0), and for k >= 0 with the fixed c = 0.8; for
    # k < 0 with c, g > 0 the quantile function is genuinely non-monotone
    # (e.g. c=0.8, g=2, k=-0.4 dips between r=-2 and r=-1.5)
    r = np.linspace(-6.0, 6.0, 200)[None, :]
    for c in (0.0, 0.4, 0.8):
        for k in (0.0, 0.5, 2.0):
            for g in (0.0, 1.0, 2.0):
                x = npk.gk_quantile(r, 0.0, 1.0, c, g, k)
                assert np.all(np.diff(x[0]) > 0.0), (c, k, g)
    for k in (-0.4, -0.2):
        x = npk.gk_quantile(r, 0.0, 1.0, 0.8, 0.0, k)
        assert np.all(np.diff(x[0]) > 0.0)


def test_gk_nonmonotone_counterexample():
    # documents the restriction above
    x = npk.gk_quantile(np.array([[-2.0, -1.5]]), 0.0, 1.0, 0.8, 2.0, -0.4)
    assert x[0, 1] < x[0, 0]
