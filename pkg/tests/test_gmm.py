import json

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy.stats import norm

from geocloud.errors import CovarianceError, InsufficientData
from geocloud.gmm import (EmConfig, GmmParams, bic, canonicalize, fit_em, gaussian_pdf,
                          gmm_logpdf, gmm_pdf, param_space_dim, sample_gmm, select_k_bic)


def _random_gmm(rng, K=3, m=2, mode="diagonal"):
    w = rng.dirichlet(np.ones(K))
    mu = rng.normal(0, 3, size=(K, m))
    if mode == "diagonal":
        cov = rng.uniform(0.2, 2.0, size=(K, m))
    else:
        A = rng.normal(size=(K, m, m))
        cov = A @ np.swapaxes(A, 1, 2) + 0.3 * np.eye(m)
    return GmmParams(w, mu, cov, mode=mode)


def test_gaussian_pdf_known_values():
    assert gaussian_pdf([0.0, 0.0], [0.0, 0.0], np.eye(2)) == pytest.approx(1 / (2 * np.pi), abs=1e-12)
    assert gaussian_pdf(1.0, 0.0, 1.0) == pytest.approx(np.exp(-0.5) / np.sqrt(2 * np.pi), abs=1e-12)


def test_gaussian_pdf_factorizes_for_diagonal(rng):
    for _ in range(20):
        m = rng.integers(1, 5)
        mu = rng.normal(size=m)
        var = rng.uniform(0.1, 3.0, size=m)
        x = rng.normal(size=m)
        expected = np.prod(norm.pdf(x, mu, np.sqrt(var)))
        assert gaussian_pdf(x, mu, np.diag(var)) == pytest.approx(expected, rel=1e-12)


def test_gaussian_pdf_rejects_non_pd():
    with pytest.raises(CovarianceError):
        gaussian_pdf([0.0, 0.0], [0.0, 0.0], [[1.0, 2.0], [2.0, 1.0]])


def test_single_component_equals_gaussian(rng):
    x = rng.normal(size=(10, 2))
    p = GmmParams([1.0], [[0.5, -1.0]], [[[2.0, 0.3], [0.3, 1.0]]], mode="full")
    np.testing.assert_allclose(gmm_pdf(x, p), gaussian_pdf(x, p.means[0], p.covariances[0]),
                               rtol=1e-13)


def test_symmetric_pair_order_invariant():
    a = GmmParams([0.5, 0.5], [[-2.0], [2.0]], [1.5, 1.5])
    b = GmmParams([0.5, 0.5], [[2.0], [-2.0]], [1.5, 1.5])
    assert gmm_pdf(0.0, a) == gmm_pdf(0.0, b)


def test_1d_density_integrates_to_one(rng):
    x = np.arange(-20.0, 20.0 + 1e-9, 0.001)
    for _ in range(5):
        K = int(rng.integers(1, 4))
        p = GmmParams(rng.dirichlet(np.ones(K)), rng.uniform(-3, 3, K),
                      rng.uniform(0.3, 2.0, K) ** 2)
        assert abs(np.sum(gmm_pdf(x, p)) * 0.001 - 1.0) < 1e-4


def test_logpdf_survives_far_tails():
    p = GmmParams([0.5, 0.5], [[0.0], [1.0]], [1e-4, 1e-4])
    lp = gmm_logpdf(np.array([[50.0]]), p)
    assert np.isfinite(lp).all() and lp[0] < -1e6


def test_params_validation():
    with pytest.raises(ValueError):
        GmmParams([0.6, 0.6], [[0.0], [1.0]], [1.0, 1.0])
    with pytest.raises(CovarianceError):
        GmmParams([1.0], [[0.0, 0.0]], [[[1.0, 0.1], [0.1, 1.0]]], mode="diagonal")
    with pytest.raises(CovarianceError):
        GmmParams([1.0], [[0.0, 0.0]], [[[1.0, 0.1], [0.2, 1.0]]], mode="full")


def test_json_round_trip(tmp_path, rng):
    p = _random_gmm(rng, mode="full")
    path = tmp_path / "g.json"
    p.to_json(path)
    doc = json.loads(path.read_text())
    assert set(doc) >= {"K", "mode", "weights", "means", "covariances"}
    q = GmmParams.from_json(path)
    np.testing.assert_array_equal(q.covariances, p.covariances)
    np.testing.assert_array_equal(q.means, p.means)
    assert q.mode == "full"


# -- canonical order ---------------------------------------------------------

def test_canonicalize_variance_first():
    p = GmmParams([0.3, 0.7], [[0.0], [5.0]], [2.0, 1.0])
    c = canonicalize(p)
    np.testing.assert_array_equal(c.means.ravel(), [5.0, 0.0])
    np.testing.assert_array_equal(c.covariances.ravel(), [1.0, 2.0])
    np.testing.assert_array_equal(c.weights, [0.7, 0.3])


def test_canonicalize_mean_breaks_ties():
    p = GmmParams([0.5, 0.5], [[3.0], [1.0]], [1.0, 1.0])
    np.testing.assert_array_equal(canonicalize(p).means.ravel(), [1.0, 3.0])


@settings(max_examples=40, deadline=None)
@given(st.integers(0, 2**32 - 1), st.integers(1, 5), st.sampled_from(["diagonal", "full"]))
def test_canonicalize_idempotent_and_density_preserving(seed, K, mode):
    rng = np.random.default_rng(seed)
    p = _random_gmm(rng, K=K, mode=mode)
    c = canonicalize(p)
    cc = canonicalize(c)
    np.testing.assert_array_equal(cc.means, c.means)
    np.testing.assert_array_equal(cc.weights, c.weights)
    x = rng.normal(0, 4, size=(100, 2))
    np.testing.assert_allclose(gmm_pdf(x, c), gmm_pdf(x, p), rtol=1e-12, atol=0)


def test_param_space_dim_table():
    assert param_space_dim(1, 1, "full") == 2
    assert param_space_dim(3, 2, "full") == 17
    assert param_space_dim(2, 3, "diagonal") == 13
    for K in range(1, 6):
        for m in range(1, 5):
            assert param_space_dim(K, m, "full") == K * (m + m * (m + 1) // 2) + K - 1


# -- EM ----------------------------------------------------------------------

def test_em_single_component_is_mle(rng):
    X = rng.normal(size=(300, 2)) @ np.array([[1.0, 0.4], [0.0, 0.7]]) + [2.0, -1.0]
    p, rep = fit_em(X, 1, mode="full")
    np.testing.assert_allclose(p.means[0], X.mean(axis=0), rtol=0, atol=1e-12)
    np.testing.assert_allclose(p.covariances[0], np.cov(X.T, bias=True), rtol=0, atol=1e-12)
    assert rep.iterations <= 2


def test_em_recovers_separated_mixture():
    rng = np.random.default_rng(3)
    X = np.concatenate([rng.normal(0, 1, 1000), rng.normal(10, 1, 1000)])
    p, rep = fit_em(X, 2)
    c = canonicalize(p)
    means = np.sort(c.means.ravel())
    np.testing.assert_allclose(means, [0.0, 10.0], atol=0.15)
    np.testing.assert_allclose(c.weights, [0.5, 0.5], atol=0.05)
    assert rep.converged


@pytest.mark.parametrize("mode", ["diagonal", "full"])
def test_em_trace_monotone(mode):
    for seed in range(50):
        rng = np.random.default_rng(seed)
        K = int(rng.integers(1, 6))
        X = sample_gmm(_random_gmm(rng, K=int(rng.integers(1, 5))), 300, seed=seed)
        _, rep = fit_em(X, K, mode=mode, seed=seed)
        assert np.all(np.diff(rep.trace) >= -1e-8)


def test_em_deterministic(rng):
    X = rng.normal(size=(200, 2))
    a, ra = fit_em(X, 3, seed=5)
    b, rb = fit_em(X, 3, seed=5)
    np.testing.assert_array_equal(a.means, b.means)
    assert ra.trace == rb.trace


def test_em_seeds_agree_after_canonicalize():
    truth = GmmParams([0.3, 0.7], [[-4.0, 0.0], [4.0, 2.0]], [[1.0, 0.5], [0.7, 1.2]])
    X = sample_gmm(truth, 2000, seed=11)
    a = canonicalize(fit_em(X, 2, seed=1)[0])
    b = canonicalize(fit_em(X, 2, seed=99, init="random")[0])
    np.testing.assert_allclose(a.means, b.means, atol=0.2)
    np.testing.assert_allclose(a.weights, b.weights, atol=0.05)


def test_em_collapsed_data_respects_floor():
    X = np.zeros((50, 2))
    X[:, 0] = np.linspace(0, 1, 50)  # second axis is constant
    p, _ = fit_em(X, 3)
    assert np.all(np.diagonal(p.covariances, axis1=1, axis2=2) >= 1e-6)
    assert np.all(np.isfinite(p.means))


def test_em_duplicate_points_never_error():
    X = np.repeat([[0.0, 0.0], [1.0, 1.0]], 20, axis=0)
    p, _ = fit_em(X, 5)
    assert abs(p.weights.sum() - 1.0) < 1e-9


def test_em_needs_k_points():
    with pytest.raises(InsufficientData):
        fit_em(np.zeros((2, 2)), 3)


def test_bic_prefers_true_k():
    truth = GmmParams([0.5, 0.5], [[-5.0], [5.0]], [1.0, 1.0])
    X = sample_gmm(truth, 800, seed=2)
    p, _ = select_k_bic(X, [1, 2, 3, 4])
    assert p.K == 2
    assert bic(p, X) < bic(fit_em(X, 1)[0], X)


def test_config_object_and_overrides_match(rng):
    X = rng.normal(size=(100, 1))
    a, _ = fit_em(X, 2, EmConfig(seed=3, tol=1e-8))
    b, _ = fit_em(X, 2, seed=3, tol=1e-8)
    np.testing.assert_array_equal(a.means, b.means)
