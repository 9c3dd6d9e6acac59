"""Unit and oracle tests for the dense linear-algebra/statistics kernels."""

import math

import numpy as np
import pytest

from saemsl import linalg
from saemsl.linalg import (MomentPair, SingularCovarianceError, cholesky, mad,
                           mvn_logpdf, mvn_sample, nearest_psd, normal_cdf,
                           normal_quantile, percentile, robust_moments,
                           sample_moments)


# ---------------------------------------------------------------------------
# cholesky


def test_cholesky_identity():
    assert np.allclose(cholesky(np.eye(3)), np.eye(3))


def test_cholesky_2x2_by_hand():
    L = cholesky(np.array([[4.0, 2.0], [2.0, 3.0]]))
    assert np.allclose(L, [[2.0, 0.0], [1.0, math.sqrt(2.0)]])
    assert np.allclose(L @ L.T, [[4.0, 2.0], [2.0, 3.0]])


def test_cholesky_indefinite_returns_none():
    # eigenvalues 3 and -1
    assert cholesky(np.array([[1.0, 2.0], [2.0, 1.0]])) is None


def test_cholesky_asymmetric_raises():
    with pytest.raises(ValueError, match="symmetric"):
        cholesky(np.array([[1.0, 0.5], [0.0, 1.0]]))


def test_cholesky_reconstructs_random_factors():
    rng = np.random.default_rng(7)
    for d in (2, 4, 7):
        M = np.tril(rng.normal(size=(d, d)))
        np.fill_diagonal(M, np.abs(np.diag(M)) + 0.5)
        A = M @ M.T
        L = cholesky(A)
        rel = np.linalg.norm(L @ L.T - A) / np.linalg.norm(A)
        assert rel <= 1e-8
        assert np.allclose(L, M, rtol=1e-8, atol=1e-10)


# ---------------------------------------------------------------------------
# nearest_psd


def test_nearest_psd_returns_psd_input_unchanged():
    A = np.array([[2.0, 0.3], [0.3, 1.0]])
    assert nearest_psd(A) is A or np.array_equal(nearest_psd(A), A)


def test_nearest_psd_clamps_tiny_negative_eigenvalue():
    v = np.array([1.0, -1.0]) / math.sqrt(2.0)
    A = np.eye(2) - (1.0 + 1e-15) * np.outer(v, v)  # eigenvalues 1, -1e-15
    out = nearest_psd(0.5 * (A + A.T))
    assert np.min(np.linalg.eigvalsh(out)) >= 0.0


def test_nearest_psd_idempotent():
    rng = np.random.default_rng(3)
    B = rng.normal(size=(5, 5))
    A = 0.5 * (B + B.T)  # indefinite
    out = nearest_psd(A)
    again = nearest_psd(out)
    assert np.allclose(out, again, atol=1e-12)
    assert np.min(np.linalg.eigvalsh(out)) >= -1e-12


def test_nearest_psd_matches_eigenvalue_clamping_oracle():
    # oracle: clamp the eigenvalues directly; Frobenius distance must match
    rng = np.random.default_rng(11)
    B = rng.normal(size=(5, 5))
    A = 0.5 * (B + B.T)
    w, v = np.linalg.eigh(A)
    oracle = (v * np.clip(w, 0.0, None)) @ v.T
    out = nearest_psd(A)
    assert abs(np.linalg.norm(out - A) - np.linalg.norm(oracle - A)) <= 1e-10
    assert np.allclose(out, oracle, atol=1e-10)


# ---------------------------------------------------------------------------
# mvn logpdf / sampling


def test_mvn_logpdf_standard_normal_origin():
    mp = MomentPair(np.zeros(2), np.eye(2))
    assert mvn_logpdf(np.zeros(2), mp) == pytest.approx(-math.log(2 * math.pi))


def test_mvn_logpdf_1d():
    mp = MomentPair(np.zeros(1), np.eye(1))
    expect = -0.5 * math.log(2 * math.pi) - 0.5
    assert mvn_logpdf(np.array([1.0]), mp) == pytest.approx(expect)


def test_mvn_logpdf_matches_explicit_inverse_oracle():
    rng = np.random.default_rng(5)
    for _ in range(10):
        d = 4
        B = rng.normal(size=(d, d))
        cov = B @ B.T + 0.5 * np.eye(d)
        mean = rng.normal(size=d)
        x = rng.normal(size=d)
        mp = MomentPair(mean, cov)
        dev = x - mean
        oracle = (-0.5 * d * math.log(2 * math.pi)
                  - 0.5 * math.log(np.linalg.det(cov))
                  - 0.5 * dev @ np.linalg.inv(cov) @ dev)
        got = mvn_logpdf(x, mp)
        assert abs(got - oracle) <= 1e-10 * max(1.0, abs(oracle))


def test_mvn_logpdf_integrates_to_one_1d():
    mp = MomentPair(np.array([0.7]), np.array([[2.3]]))
    xs = np.linspace(0.7 - 12 * math.sqrt(2.3), 0.7 + 12 * math.sqrt(2.3), 20001)
    dens = np.array([math.exp(mvn_logpdf(np.array([x]), mp)) for x in xs])
    integral = np.trapezoid(dens, xs)
    assert integral == pytest.approx(1.0, abs=1e-6)


def test_mvn_logpdf_singular_raises():
    mp = MomentPair(np.zeros(2), np.zeros((2, 2)))
    with pytest.raises(SingularCovarianceError):
        mvn_logpdf(np.zeros(2), mp)


def test_mvn_sample_zero_cov_returns_mean():
    mp = MomentPair(np.array([1.5, -2.0]), np.zeros((2, 2)))
    out = mvn_sample(mp, np.random.default_rng(0))
    assert np.array_equal(out, mp.mean)


def test_mvn_sample_reproducible():
    mp = MomentPair(np.zeros(3), np.diag([1.0, 2.0, 3.0]))
    a = mvn_sample(mp, np.random.default_rng(42))
    b = mvn_sample(mp, np.random.default_rng(42))
    assert np.array_equal(a, b)


def test_mvn_sample_moments_match():
    rng = np.random.default_rng(9)
    mean = np.array([1.0, -2.0])
    cov = np.array([[2.0, 0.8], [0.8, 1.0]])
    mp = MomentPair(mean, cov)
    R = 100_000
    draws = np.vstack([mvn_sample(mp, rng) for _ in range(R)])
    se_mean = np.sqrt(np.diag(cov) / R)
    assert np.all(np.abs(draws.mean(axis=0) - mean) <= 3 * se_mean)
    emp = np.cov(draws.T)
    for i in range(2):
        for j in range(2):
            se = math.sqrt((cov[i, i] * cov[j, j] + cov[i, j] ** 2) / R)
            assert abs(emp[i, j] - cov[i, j]) <= 3 * se + 1e-12


def test_mvn_sample_repaired_covariance():
    v = np.array([1.0, -1.0]) / math.sqrt(2.0)
    cov = np.eye(2) - (1.0 + 1e-15) * np.outer(v, v)
    mp = MomentPair(np.zeros(2), 0.5 * (cov + cov.T))
    out = mvn_sample(mp, np.random.default_rng(1))
    assert np.all(np.isfinite(out))


# ---------------------------------------------------------------------------
# moments


def test_sample_moments_two_point():
    mp = sample_moments([[0.0, 0.0], [2.0, 2.0]])
    assert np.allclose(mp.mean, [1.0, 1.0])
    assert np.allclose(mp.cov, [[2.0, 2.0], [2.0, 2.0]])


def test_sample_moments_identical_rows():
    mp = sample_moments([[1.0, 2.0]] * 5)
    assert np.allclose(mp.mean, [1.0, 2.0])
    assert np.allclose(mp.cov, 0.0)


def test_sample_moments_requires_two_rows():
    with pytest.raises(ValueError):
        sample_moments([[1.0, 2.0]])


def test_sample_moments_recovers_known_gaussian():
    rng = np.random.default_rng(21)
    mean = np.array([0.5, -1.0])
    cov = np.array([[1.5, 0.6], [0.6, 0.9]])
    L = np.linalg.cholesky(cov)
    R = 1000
    rows = mean + rng.standard_normal((R, 2)) @ L.T
    mp = sample_moments(rows)
    se_mean = np.sqrt(np.diag(cov) / R)
    assert np.all(np.abs(mp.mean - mean) <= 3 * se_mean)
    for i in range(2):
        for j in range(2):
            se = math.sqrt((cov[i, i] * cov[j, j] + cov[i, j] ** 2) / R)
            assert abs(mp.cov[i, j] - cov[i, j]) <= 3 * se


def test_robust_moments_close_to_classical_on_clean_data():
    rng = np.random.default_rng(13)
    cov = np.array([[2.0, 0.9, 0.5], [0.9, 1.5, 0.7], [0.5, 0.7, 1.2]])
    L = np.linalg.cholesky(cov)
    rows = rng.standard_normal((4000, 3)) @ L.T + np.array([1.0, 2.0, 3.0])
    classical = sample_moments(rows)
    robust = robust_moments(rows)
    assert np.all(np.abs(robust.mean - classical.mean)
                  <= 0.1 * np.abs(classical.mean))
    assert np.all(np.abs(robust.cov - classical.cov) <= 0.1 * np.abs(classical.cov))


def test_robust_moments_resists_extreme_outlier():
    rng = np.random.default_rng(17)
    rows = rng.standard_normal((400, 2))
    clean_mean = robust_moments(rows).mean
    contaminated = np.vstack([rows, [[100.0, 100.0]]])  # one point at 100 sigma
    cont_mean = robust_moments(contaminated).mean
    assert np.all(np.abs(cont_mean - clean_mean) <= 0.01 * 100.0)
    # and the classical mean does move noticeably more
    assert np.linalg.norm(sample_moments(contaminated).mean - clean_mean) \
        > 5 * np.linalg.norm(cont_mean - clean_mean)


def test_robust_moments_identical_rows():
    mp = robust_moments([[3.0, 4.0]] * 10)
    assert np.allclose(mp.mean, [3.0, 4.0])
    assert np.allclose(mp.cov, 0.0)


def test_robust_moments_requires_enough_rows():
    with pytest.raises(ValueError):
        robust_moments(np.zeros((5, 2)))  # needs 2*(d+1) = 6


# ---------------------------------------------------------------------------
# scalar statistics


def _bisect_quantile(p, lo=-12.0, hi=12.0):
    for _ in range(200):
        mid = 0.5 * (lo + hi)
        if normal_cdf(mid) < p:
            lo = mid
        else:
            hi = mid
    return 0.5 * (lo + hi)


def test_normal_quantile_examples():
    assert normal_quantile(0.5) == pytest.approx(0.0, abs=1e-12)
    # frozen from the bisection oracle on the erf-based CDF
    assert normal_quantile(0.975) == pytest.approx(1.959964, abs=1e-6)
    assert normal_quantile(0.1) == pytest.approx(-1.281552, abs=1e-6)


@pytest.mark.parametrize("p", [1e-10, 1e-6, 0.001, 0.02425, 0.1, 0.3, 0.5,
                               0.7, 0.9, 0.97575, 0.999, 1 - 1e-6])
def test_normal_quantile_vs_bisection_oracle(p):
    assert abs(normal_quantile(p) - _bisect_quantile(p)) <= 1e-9


def test_normal_quantile_roundtrip():
    for x in np.linspace(-5.0, 5.0, 41):
        assert abs(normal_quantile(normal_cdf(x)) - x) <= 1e-8


def test_normal_quantile_domain():
    for bad in (0.0, 1.0, -0.1, 1.1):
        with pytest.raises(ValueError):
            normal_quantile(bad)


def test_percentile_examples():
    assert percentile([1, 2, 3, 4, 5], 50) == 3.0
    assert percentile([1, 2, 3, 4], 50) == 2.5
    # type-7 by hand: h = (5-1)*25/100 = 1 -> x[1]
    assert percentile([1, 2, 3, 4, 5], 25) == 2.0
    assert percentile([5], 80) == 5.0


def test_percentile_validation():
    with pytest.raises(ValueError):
        percentile([], 50)
    with pytest.raises(ValueError):
        percentile([1.0], 101)


def test_percentile_matches_numpy_type7():
    rng = np.random.default_rng(23)
    xs = rng.normal(size=37)
    for q in (0, 10, 12.5, 25, 50, 62.5, 87.5, 100):
        assert percentile(xs, q) == pytest.approx(np.percentile(xs, q), abs=1e-12)


def test_mad_examples():
    assert mad([1, 1, 1]) == 0.0
    assert mad([1, 2, 3, 4, 5]) == 1.0  # by hand: devs {2,1,0,1,2} -> median 1


def test_mad_shift_invariant():
    rng = np.random.default_rng(29)
    xs = rng.normal(size=101)
    assert mad(xs + 17.3) == pytest.approx(mad(xs), abs=1e-12)
