import warnings

import numpy as np
import pytest

from corrlayers import (
    BlockPartition,
    CorrDCSBMParams,
    EdgeDomain,
    NormalizedDegrees,
    bundle_cooccurrence,
    degree_correction_sums,
    fit_corr_dcsbm_approx,
    fit_corr_dcsbm_full,
    fit_corr_sbm,
    fit_mono_dcsbm,
    normalized_degrees,
    pair_correlation,
    sample_corr_dcsbm,
)
from corrlayers.dcsbm import approx_jacobian, approx_loglik, approx_residual
from corrlayers.errors import DegeneratePairVariance, PairProbabilityOverflow

from conftest import random_network


def planted_params(K, theta1, theta2, partition, p=0.08, rho=0.5):
    from corrlayers import q_from_rho

    P1 = np.full((K, K), p / 2) + np.eye(K) * p
    P2 = P1 * 0.9
    Q = q_from_rho(P1, P2, np.full((K, K), rho))
    mk = lambda M: np.ma.masked_array(M, mask=np.zeros((K, K), bool))  # noqa: E731
    return CorrDCSBMParams(mk(P1), mk(P2), mk(Q), theta1, theta2, partition, True)


@pytest.fixture(scope="module")
def dc_instance():
    rng = np.random.default_rng(7)
    n, K = 300, 3
    part = BlockPartition(np.repeat(np.arange(K), n // K), K)
    k = rng.uniform(0.8, 1.25, n)
    theta = NormalizedDegrees(k / k.mean())
    truth = planted_params(K, theta, theta, part)
    net = sample_corr_dcsbm(truth, part, EdgeDomain(), seed=3)
    return net, part, truth, theta


def test_residual_is_gradient_and_jacobian_is_hessian():
    counts = (40, 60, 50, 3000)
    sums = (3.0, -2.5, 12.0, -8.0)
    x = np.array([0.035, 0.03, 0.012])
    h = 1e-7
    F = approx_residual(x, counts, sums)
    J = approx_jacobian(x, counts, sums)
    for k in range(3):
        e = np.eye(3)[k] * h
        fd = (approx_loglik(x + e, counts, sums) - approx_loglik(x - e, counts, sums)) / (2 * h)
        assert F[k] == pytest.approx(fd, rel=1e-5)
        dF = (approx_residual(x + e, counts, sums) - approx_residual(x - e, counts, sums)) / (2 * h)
        np.testing.assert_allclose(J[:, k], dF, rtol=1e-5, atol=1e-3)


def test_unit_degrees_reduce_to_sbm(backend, rng):
    n = 40
    net = random_network(rng, n, (0.2, 0.25))
    part = BlockPartition(rng.integers(0, 2, n), 2)
    ones = NormalizedDegrees.ones(n)
    bundles = bundle_cooccurrence(net, part)
    sbm = fit_corr_sbm(bundles)
    approx = fit_corr_dcsbm_approx(bundles, degree_correction_sums(net, part, ones, ones), part)
    full = fit_corr_dcsbm_full(net, part, ones, ones)
    for M in ("P1", "P2", "Q"):
        np.testing.assert_allclose(getattr(approx, M), getattr(sbm, M), atol=1e-12)
        np.testing.assert_allclose(getattr(full, M), getattr(sbm, M), atol=1e-8)


def test_full_fit_is_a_maximum(backend, dc_instance):
    from corrlayers.dcsbm import full_bundle_pairs, full_loglik

    net, part, _, theta = dc_instance
    fit = fit_corr_dcsbm_full(net, part, theta, theta)
    pairs = full_bundle_pairs(net, part, theta, theta)
    rng = np.random.default_rng(0)
    for (r, s), bundle in pairs.items():
        x = np.array([fit.P1[r, s], fit.P2[r, s], fit.Q[r, s]])
        best = full_loglik(bundle, x)
        for _ in range(10):
            assert full_loglik(bundle, x * (1 + rng.normal(0, 1e-3, 3))) <= best + 1e-9


def test_fits_recover_planted_parameters(dc_instance):
    net, part, truth, theta = dc_instance
    full = fit_corr_dcsbm_full(net, part, theta, theta)
    approx = fit_corr_dcsbm_approx(bundle_cooccurrence(net, part),
                                   degree_correction_sums(net, part, theta, theta), part)
    for fit in (full, approx):
        np.testing.assert_allclose(fit.P1, truth.P1, rtol=0.15)
        np.testing.assert_allclose(fit.Q, truth.Q, rtol=0.3)
    np.testing.assert_allclose(approx.P1, full.P1, rtol=0.02)
    assert set(full.status.values()) == {"converged"}


def test_full_fit_respects_mask(backend, dc_instance):
    from corrlayers import PairMask

    net, part, _, theta = dc_instance
    keys = net.layer_keys(1)
    mask = PairMask(keys[::4])
    a = fit_corr_dcsbm_full(net, part, theta, theta, mask)
    altered = net.with_layer(1, np.setdiff1d(keys, keys[::4]))
    b = fit_corr_dcsbm_full(altered, part, theta, theta, mask)
    np.testing.assert_allclose(a.P2, b.P2, rtol=1e-10)


def test_degenerate_bundle_keeps_zeroth_order():
    # layer 2 has no edges outside layer 1: the (0,1) class is empty
    net = random_network(np.random.default_rng(1), 30, (0.3, 0.0))
    keys = net.layer_keys(0)
    net = net.with_layer(1, keys[::2])
    part = BlockPartition.single(30)
    theta1 = normalized_degrees(net, 0)
    theta2 = normalized_degrees(net, 1)
    bundles = bundle_cooccurrence(net, part)
    fit = fit_corr_dcsbm_approx(bundles, degree_correction_sums(net, part, theta1, theta2), part)
    assert fit.status[(0, 0)] == "degenerate"
    assert float(fit.P1[0, 0]) == pytest.approx(bundles[0, 0].m1 / bundles[0, 0].total)


def test_failed_bundles_warn_once():
    from corrlayers.counts import BundleCounts, DegreeCorrectionSums
    from corrlayers.errors import NonConvergenceWarning

    one = lambda v: np.array([[v]], dtype=np.int64)  # noqa: E731
    bundles = BundleCounts(one(5), one(20), one(20), one(955), True)
    theta = NormalizedDegrees.ones(2)
    sums = DegreeCorrectionSums(np.array([[-400.0]]), np.array([[-400.0]]),
                                np.array([[0.0]]), np.array([[0.0]]), theta, theta, True)
    with warnings.catch_warnings(record=True) as caught:
        warnings.simplefilter("always")
        fit = fit_corr_dcsbm_approx(bundles, sums, BlockPartition.single(2))
    # a strongly negative g term leaves the first-order system without a root
    relevant = [w for w in caught if issubclass(w.category, NonConvergenceWarning)]
    assert fit.status[(0, 0)] == "not_converged"
    assert len(relevant) == 1
    assert float(fit.P1[0, 0]) == pytest.approx(25 / 1000)


def test_pair_correlation_unit_degrees_equals_bundle_rho(dc_instance):
    _, part, truth, _ = dc_instance
    ones = NormalizedDegrees.ones(part.n)
    params = CorrDCSBMParams(truth.P1, truth.P2, truth.Q, ones, ones, part, True)
    rho = pair_correlation(params, 0, 150)
    assert rho == pytest.approx(0.5, abs=1e-12)
    assert pair_correlation(params, 0, 150, mode="first_order") == pytest.approx(0.5, abs=1e-12)


def test_first_order_close_to_exact_for_small_perturbations(dc_instance):
    _, part, truth, _ = dc_instance
    rng = np.random.default_rng(5)
    theta = NormalizedDegrees(rng.uniform(0.95, 1.05, part.n))
    params = CorrDCSBMParams(truth.P1, truth.P2, truth.Q, theta, theta, part, True)
    i = rng.integers(0, part.n, 500)
    j = rng.integers(0, part.n, 500)
    keep = i != j
    exact = pair_correlation(params, i[keep], j[keep])
    approx = pair_correlation(params, i[keep], j[keep], mode="first_order",
                              route_exceptional=False)
    assert np.abs(exact - approx).max() <= 5e-3


def test_independent_case_formula(dc_instance):
    _, part, truth, _ = dc_instance
    rng = np.random.default_rng(6)
    theta1 = NormalizedDegrees(rng.uniform(0.97, 1.03, part.n))
    theta2 = NormalizedDegrees(rng.uniform(0.97, 1.03, part.n))
    Q = truth.P1 * truth.P2
    params = CorrDCSBMParams(truth.P1, truth.P2, Q, theta1, theta2, part, True)
    i, j = np.arange(0, 100), np.arange(100, 200)
    exact = pair_correlation(params, i, j)
    approx = pair_correlation(params, i, j, mode="independent_case")
    assert np.abs(exact - approx).max() <= 1e-3
    # the first-order mode routes q = p1 p2 to the exact value
    np.testing.assert_allclose(pair_correlation(params, i, j, mode="first_order"), exact)


def test_pair_correlation_rejects_zero_variance(dc_instance):
    _, part, truth, _ = dc_instance
    theta = NormalizedDegrees(np.r_[0.0, np.ones(part.n - 1)])
    params = CorrDCSBMParams(truth.P1, truth.P2, truth.Q, theta, theta, part, True)
    with pytest.raises(DegeneratePairVariance):
        pair_correlation(params, 0, 1)


def test_sampler_detects_overflow(dc_instance):
    _, part, truth, _ = dc_instance
    theta = NormalizedDegrees(np.r_[40.0, np.ones(part.n - 1)])
    params = CorrDCSBMParams(truth.P1, truth.P2, truth.Q, theta, theta, part, True)
    with pytest.raises(PairProbabilityOverflow) as info:
        sample_corr_dcsbm(params, part, EdgeDomain(), seed=0)
    assert 0 in info.value.pair
    assert params.invalid_pairs(np.array([0, 1]), np.array([1, 2]), EdgeDomain()).tolist() == [0]


def test_mono_dcsbm_unit_degrees_is_density(rng):
    n = 30
    net = random_network(rng, n, (0.2, 0.3))
    part = BlockPartition(rng.integers(0, 3, n), 3)
    mono = fit_mono_dcsbm(net, part, NormalizedDegrees.ones(n), 1)
    sbm = fit_corr_sbm(bundle_cooccurrence(net, part))
    np.testing.assert_allclose(mono, sbm.P2, atol=1e-12)


def test_mono_dcsbm_preserves_expected_edges(rng):
    n = 30
    net = random_network(rng, n, (0.2, 0.3))
    part = BlockPartition(rng.integers(0, 2, n), 2)
    theta = normalized_degrees(net, 1)
    P = fit_mono_dcsbm(net, part, theta, 1)
    i, j = np.triu_indices(n, 1)
    expected = (theta.products(i, j) * np.asarray(P)[part.labels[i], part.labels[j]]).sum()
    assert expected == pytest.approx(net.n_edges(1))
