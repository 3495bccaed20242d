import numpy as np
import pytest

from corrlayers import kernels

from conftest import BACKENDS


def pair_data(rng, n=500):
    a = rng.uniform(0.7, 1.4, n)
    b = rng.uniform(0.7, 1.4, n)
    code = rng.choice(4, n, p=[0.05, 0.08, 0.07, 0.8]).astype(np.int8)
    return a, b, code


def direct_loglik(a, b, code, p1, p2, q):
    """Sum of log outcome probabilities, written out pair by pair."""
    total = 0.0
    for ai, bi, c in zip(a, b, code):
        both = np.sqrt(ai * bi) * q
        prob = [both, ai * p1 - both, bi * p2 - both, 1 - ai * p1 - bi * p2 + both][c]
        total += np.log(prob)
    return total


def test_loglik_matches_direct_sum_up_to_constant(backend, rng):
    a, b, code = pair_data(rng)
    x0, x1 = (0.1, 0.12, 0.05), (0.09, 0.1, 0.04)
    v0 = kernels.full_loglik_derivs(a, b, code, *x0)[0]
    v1 = kernels.full_loglik_derivs(a, b, code, *x1)[0]
    d0, d1 = direct_loglik(a, b, code, *x0), direct_loglik(a, b, code, *x1)
    assert v1 - v0 == pytest.approx(d1 - d0, rel=1e-10)


def test_gradient_and_hessian_match_finite_differences(backend, rng):
    a, b, code = pair_data(rng)
    x = np.array([0.1, 0.12, 0.05])
    value, g, H, ok = kernels.full_loglik_derivs(a, b, code, *x)
    assert ok
    h = 1e-6
    for k in range(3):
        e = np.eye(3)[k] * h
        vp, gp, _, _ = kernels.full_loglik_derivs(a, b, code, *(x + e))
        vm, gm, _, _ = kernels.full_loglik_derivs(a, b, code, *(x - e))
        assert g[k] == pytest.approx((vp - vm) / (2 * h), rel=1e-5)
        np.testing.assert_allclose(H[:, k], (gp - gm) / (2 * h), rtol=1e-5)
    assert (np.linalg.eigvalsh(H) < 0).all()


def test_infeasible_point_flagged(backend, rng):
    a, b, code = pair_data(rng)
    value, _, _, ok = kernels.full_loglik_derivs(a, b, code, 0.1, 0.12, 0.2)
    assert not ok and value == -np.inf


def test_conditional_probs_reduce_to_er_formula(backend):
    x1 = np.array([1, 0], dtype=np.uint8)
    probs, clamped = kernels.dcsbm_conditional_probs(np.ones(2), np.ones(2), x1,
                                                     0.1, 0.085, 0.05)
    np.testing.assert_allclose(probs, [0.5, 0.035 / 0.9], rtol=1e-14)
    assert clamped == 0


def test_conditional_probs_clamp_and_count(backend):
    probs, clamped = kernels.dcsbm_conditional_probs(
        np.array([0.1]), np.array([3.0]), np.array([1], np.uint8), 0.2, 0.5, 0.2)
    assert probs[0] == 1.0 and clamped == 1


@pytest.mark.skipif(len(BACKENDS) < 2, reason="compiled backend not built")
def test_backends_agree(rng):
    a, b, code = pair_data(rng, 2000)
    cy, py = kernels.get_backend("cython"), kernels.get_backend("python")
    x = (0.1, 0.12, 0.05)
    vc, gc, Hc, _ = cy.full_loglik_derivs(a, b, code, *x)
    vp, gp, Hp, _ = py.full_loglik_derivs(a, b, code, *x)
    assert vc == pytest.approx(vp, rel=1e-12)
    np.testing.assert_allclose(gc, gp, rtol=1e-10)
    np.testing.assert_allclose(Hc, Hp, rtol=1e-10)
    x1 = (code <= 1).astype(np.uint8)
    p = [np.full(a.size, v) for v in x]
    pc, nc = cy.dcsbm_conditional_probs(a, b, x1, *p, 1e-12)
    pp, npy = py.dcsbm_conditional_probs(a, b, x1, *p, 1e-12)
    np.testing.assert_allclose(pc, pp, rtol=1e-14)
    assert nc == npy


def test_backend_selection_reports_active():
    assert kernels.BACKEND in kernels.available_backends()
    assert "python" in kernels.available_backends()
