# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True
"""Compiled per-pair loops. Semantics must match ``_pykernels``."""

import numpy as np
from libc.math cimport log, sqrt, INFINITY

# outcome codes shared with the Python side
cdef enum:
    C11 = 0
    C10 = 1
    C01 = 2
    C00 = 3


def full_loglik_derivs(const double[::1] a, const double[::1] b,
                       const signed char[::1] code,
                       double p1, double p2, double q):
    """Value, gradient and Hessian of the pair-level correlated DCSBM
    log-likelihood in ``(p1, p2, q)``; ``ok`` is False outside the domain."""
    cdef Py_ssize_t k, n = a.shape[0]
    cdef double w0, w1, w2, arg, inv, inv2, c, value = 0.0
    cdef double g0 = 0.0, g1 = 0.0, g2 = 0.0
    cdef double h00 = 0.0, h01 = 0.0, h02 = 0.0, h11 = 0.0, h12 = 0.0, h22 = 0.0
    cdef signed char cc
    for k in range(n):
        cc = code[k]
        if cc == C11:
            w0 = 0.0; w1 = 0.0; w2 = 1.0
            arg = q
        elif cc == C10:
            c = sqrt(b[k] / a[k])
            w0 = 1.0; w1 = 0.0; w2 = -c
            arg = p1 - c * q
        elif cc == C01:
            c = sqrt(a[k] / b[k])
            w0 = 0.0; w1 = 1.0; w2 = -c
            arg = p2 - c * q
        else:
            c = sqrt(a[k] * b[k])
            w0 = -a[k]; w1 = -b[k]; w2 = c
            arg = 1.0 - a[k] * p1 - b[k] * p2 + c * q
        if arg <= 0.0:
            return -INFINITY, None, None, False
        value += log(arg)
        inv = 1.0 / arg
        inv2 = inv * inv
        g0 += w0 * inv; g1 += w1 * inv; g2 += w2 * inv
        h00 -= w0 * w0 * inv2; h01 -= w0 * w1 * inv2; h02 -= w0 * w2 * inv2
        h11 -= w1 * w1 * inv2; h12 -= w1 * w2 * inv2; h22 -= w2 * w2 * inv2
    grad = np.array([g0, g1, g2])
    hess = np.array([[h00, h01, h02], [h01, h11, h12], [h02, h12, h22]])
    return value, grad, hess, True


def dcsbm_conditional_probs(const double[::1] a, const double[::1] b,
                            const unsigned char[::1] x1,
                            const double[::1] p1, const double[::1] p2,
                            const double[::1] q, double tol=1e-12):
    """P(A2=1 | A1) per pair, clamped into [0, 1]; returns the number of
    probabilities that had to be moved by more than ``tol``."""
    cdef Py_ssize_t k, n = a.shape[0]
    out = np.empty(n, dtype=np.float64)
    cdef double[::1] o = out
    cdef double c, num, den, prob
    cdef Py_ssize_t clamped = 0
    for k in range(n):
        c = sqrt(a[k] * b[k])
        if x1[k]:
            num = c * q[k]
            den = a[k] * p1[k]
        else:
            num = b[k] * p2[k] - c * q[k]
            den = 1.0 - a[k] * p1[k]
        if den > 0.0:
            prob = num / den
        else:
            prob = b[k] * p2[k]
        if prob < 0.0:
            if prob < -tol:
                clamped += 1
            prob = 0.0
        elif prob > 1.0:
            if prob > 1.0 + tol:
                clamped += 1
            prob = 1.0
        o[k] = prob
    return out, clamped
