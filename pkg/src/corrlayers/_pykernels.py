"""Pure-numpy versions of the compiled per-pair loops in ``_ckernels.pyx``."""

import numpy as np

C11, C10, C01, C00 = 0, 1, 2, 3


def full_loglik_derivs(a, b, code, p1, p2, q):
    a = np.asarray(a, dtype=np.float64)
    b = np.asarray(b, dtype=np.float64)
    code = np.asarray(code)
    value = 0.0
    grad = np.zeros(3)
    hess = np.zeros((3, 3))
    for cls in (C11, C10, C01, C00):
        sel = code == cls
        if not sel.any():
            continue
        aa, bb = a[sel], b[sel]
        if cls == C11:
            W = np.zeros((aa.size, 3))
            W[:, 2] = 1.0
            arg = np.full(aa.size, q)
        elif cls == C10:
            c = np.sqrt(bb / aa)
            W = np.column_stack([np.ones_like(c), np.zeros_like(c), -c])
            arg = p1 - c * q
        elif cls == C01:
            c = np.sqrt(aa / bb)
            W = np.column_stack([np.zeros_like(c), np.ones_like(c), -c])
            arg = p2 - c * q
        else:
            c = np.sqrt(aa * bb)
            W = np.column_stack([-aa, -bb, c])
            arg = 1.0 - aa * p1 - bb * p2 + c * q
        if (arg <= 0.0).any():
            return -np.inf, None, None, False
        inv = 1.0 / arg
        value += np.log(arg).sum()
        grad += W.T @ inv
        hess -= (W * (inv * inv)[:, None]).T @ W
    return value, grad, hess, True


def dcsbm_conditional_probs(a, b, x1, p1, p2, q, tol=1e-12):
    a = np.asarray(a, dtype=np.float64)
    b = np.asarray(b, dtype=np.float64)
    x1 = np.asarray(x1).astype(bool)
    c = np.sqrt(a * b)
    num = np.where(x1, c * q, b * p2 - c * q)
    den = np.where(x1, a * p1, 1.0 - a * p1)
    with np.errstate(divide="ignore", invalid="ignore"):
        prob = np.where(den > 0.0, num / np.where(den > 0.0, den, 1.0), b * p2)
    clamped = int(((prob < -tol) | (prob > 1.0 + tol)).sum())
    return np.clip(prob, 0.0, 1.0), clamped
