"""Correlated degree-corrected SBM: fitting and per-pair correlations.

Pair probabilities are ``P(A1=1) = a p1``, ``P(A2=1) = b p2`` and
``P(A1=1, A2=1) = sqrt(a b) q`` with ``a = theta1_i theta1_j`` and
``b = theta2_i theta2_j``; ``(p1, p2, q)`` are per-bundle propensities.

Two estimators are provided. :func:`fit_corr_dcsbm_approx` solves the
first-order (small degree perturbation) stationarity equations from bundle
sums only. :func:`fit_corr_dcsbm_full` maximises the exact pair-level
log-likelihood, which is concave in ``(p1, p2, q)`` because every term is
the log of an affine function.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass, field

import numpy as np

from . import kernels
from .counts import (
    BundleCounts,
    DegreeCorrectionSums,
    bundle_pair_totals,
    bundle_sum,
)
from .errors import (
    DegeneratePairVariance,
    DimensionMismatch,
    InfeasibleBundle,
    InfeasibleStart,
    NonConvergence,
    NonConvergenceWarning,
)
from .network import (
    BlockPartition,
    MultilayerNetwork,
    NormalizedDegrees,
    PairMask,
    domain_keys,
)

__all__ = [
    "CorrDCSBMParams",
    "fit_corr_dcsbm_approx",
    "fit_corr_dcsbm_full",
    "approx_loglik",
    "approx_residual",
    "approx_jacobian",
    "full_bundle_pairs",
    "full_loglik",
    "pair_correlation",
    "fit_mono_dcsbm",
]

MAX_NEWTON_ITER = 100
RESIDUAL_TOL = 1e-10


@dataclass(frozen=True, eq=False)
class CorrDCSBMParams:
    """Fitted propensities with the normalized degrees they refer to.

    ``status`` maps each fitted bundle to ``"converged"``, ``"degenerate"``
    (an outcome class is empty, zeroth-order values kept) or
    ``"not_converged"``.
    """

    P1: np.ma.MaskedArray
    P2: np.ma.MaskedArray
    Q: np.ma.MaskedArray
    theta1: NormalizedDegrees
    theta2: NormalizedDegrees
    partition: BlockPartition
    symmetric: bool = False
    status: dict = field(default_factory=dict)

    @property
    def K(self) -> int:
        return self.P1.shape[0]

    @property
    def Rho(self) -> np.ma.MaskedArray:
        """Propensity-level correlation per bundle (masked when undefined)."""
        P1, P2, Q = (np.ma.filled(M, np.nan) for M in (self.P1, self.P2, self.Q))
        var = P1 * (1 - P1) * P2 * (1 - P2)
        ok = np.isfinite(var) & (var > 0)
        rho = np.zeros_like(P1)
        rho[ok] = (Q[ok] - P1[ok] * P2[ok]) / np.sqrt(var[ok])
        return np.ma.masked_array(np.clip(rho, -1, 1), mask=~ok)

    def bundle_params(self, i, j, domain) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
        r, s = self.partition.bundle_of(i, j, domain)
        return (np.ma.filled(self.P1, np.nan)[r, s],
                np.ma.filled(self.P2, np.nan)[r, s],
                np.ma.filled(self.Q, np.nan)[r, s])

    def pair_probabilities(self, i, j, domain):
        """``(P(A1=1), P(A2=1), P(A1=1, A2=1))`` for each pair."""
        p1, p2, q = self.bundle_params(i, j, domain)
        a = self.theta1.products(i, j)
        b = self.theta2.products(i, j)
        return a * p1, b * p2, np.sqrt(a * b) * q

    def invalid_pairs(self, i, j, domain, tol=1e-12) -> np.ndarray:
        """Pairs whose four outcome probabilities are not all in ``[0, 1]``."""
        x1, x2, x12 = self.pair_probabilities(i, j, domain)
        joint = np.stack([x12, x1 - x12, x2 - x12, 1 - x1 - x2 + x12])
        return np.flatnonzero(((joint < -tol) | (joint > 1 + tol)).any(axis=0))


# --- first-order approximate likelihood ------------------------------------

def _unpack(x):
    p1, p2, q = x
    return p1, p2, q, p1 - q, p2 - q, 1 - p1 - p2 + q


def approx_loglik(x, counts, sums) -> float:
    """Approximate log-likelihood whose gradient is :func:`approx_residual`."""
    e11, e10, e01, e00 = counts
    g10, g01, f1, f2 = sums
    p1, p2, q, u, v, D = _unpack(x)
    N = f1 * (p1 - q / 2) + f2 * (p2 - q / 2)
    value = -(g10 / 2) * q / u - (g01 / 2) * q / v - N / D
    for n, arg in ((e11, q), (e10, u), (e01, v), (e00, D)):
        if n:
            value += n * np.log(arg)
    return float(value)


def approx_residual(x, counts, sums) -> np.ndarray:
    """Left-hand sides of the three first-order stationarity equations."""
    e11, e10, e01, e00 = counts
    g10, g01, f1, f2 = sums
    p1, p2, q, u, v, D = _unpack(x)
    D2 = D * D
    F1 = (e10 / u - e00 / D + (g10 / 2) * q / u**2
          - f1 * (1 - p2 + q / 2) / D2 - f2 * (p2 - q / 2) / D2)
    F2 = (e01 / v - e00 / D + (g01 / 2) * q / v**2
          - f1 * (p1 - q / 2) / D2 - f2 * (1 - p1 + q / 2) / D2)
    F3 = ((e11 / q if e11 else 0.0) - e10 / u - e01 / v + e00 / D
          - (g10 / 2) * p1 / u**2 - (g01 / 2) * p2 / v**2
          + 0.5 * (f1 * (1 + p1 - p2) + f2 * (1 - p1 + p2)) / D2)
    return np.array([F1, F2, F3])


_DU = np.array([1.0, 0.0, -1.0])
_DV = np.array([0.0, 1.0, -1.0])
_DD = np.array([-1.0, -1.0, 1.0])
_E3 = np.array([0.0, 0.0, 1.0])


def approx_jacobian(x, counts, sums) -> np.ndarray:
    """Jacobian of :func:`approx_residual` (the Hessian of the approximation)."""
    e11, e10, e01, e00 = counts
    g10, g01, f1, f2 = sums
    p1, p2, q, u, v, D = _unpack(x)
    o = np.outer
    H = -(e11 / q**2 if e11 else 0.0) * o(_E3, _E3)
    H -= e10 / u**2 * o(_DU, _DU) + e01 / v**2 * o(_DV, _DV) + e00 / D**2 * o(_DD, _DD)
    # -(g/2) * q / w for w in (u, v)
    for g, w, dw in ((g10, u, _DU), (g01, v, _DV)):
        cross = -1.0 / w**2 * (o(_E3, dw) + o(dw, _E3))
        H -= (g / 2) * (cross + 2 * q / w**3 * o(dw, dw))
    # -N / D with N linear in x
    N = f1 * (p1 - q / 2) + f2 * (p2 - q / 2)
    dN = np.array([f1, f2, -(f1 + f2) / 2])
    H -= -1.0 / D**2 * (o(dN, _DD) + o(_DD, dN)) + 2 * N / D**3 * o(_DD, _DD)
    return H


def _interior(x, fix_q) -> bool:
    p1, p2, q, u, v, D = _unpack(x)
    return u > 0 and v > 0 and D > 0 and (q > 0 or (fix_q and q == 0))


def _solve_bundle_approx(counts, sums, max_iter, tol):
    e11, e10, e01, e00 = counts
    T = float(sum(counts))
    x = np.array([e11 + e10, e11 + e01, e11], dtype=np.float64) / T
    if min(e10, e01, e00) == 0:
        return x, "degenerate"
    fix_q = e11 == 0
    active = slice(0, 2) if fix_q else slice(0, 3)
    if not _interior(x, fix_q):
        raise InfeasibleBundle(f"zeroth-order start {x} is not interior")
    F = approx_residual(x, counts, sums)[active]
    norm = np.linalg.norm(F) / T
    for _ in range(max_iter):
        if norm <= tol:
            return x, "converged"
        J = approx_jacobian(x, counts, sums)[active, active]
        try:
            step = np.linalg.solve(J, -F)
        except np.linalg.LinAlgError:
            break
        t = 1.0
        for _ in range(60):
            x_new = x.copy()
            x_new[active] += t * step
            if _interior(x_new, fix_q):
                F_new = approx_residual(x_new, counts, sums)[active]
                norm_new = np.linalg.norm(F_new) / T
                if norm_new < norm:
                    break
            t *= 0.5
        else:
            break
        x, F, norm = x_new, F_new, norm_new
    if norm <= tol:
        return x, "converged"
    return None, "not_converged"


def _masked(values, fitted):
    return np.ma.masked_array(values, mask=~fitted)


def _mirror_params(P, symmetric):
    if not symmetric:
        return P
    return np.triu(P) + np.triu(P, 1).T


def fit_corr_dcsbm_approx(bundles: BundleCounts, dcsums: DegreeCorrectionSums,
                          partition: BlockPartition | None = None,
                          max_iter: int = MAX_NEWTON_ITER,
                          tol: float = RESIDUAL_TOL) -> CorrDCSBMParams:
    """Solve the first-order ML equations bundle by bundle.

    Newton iterations start from the SBM estimates and halve the step until
    the iterate stays feasible and the residual (scaled by the bundle's pair
    count) decreases. Bundles that fail keep the SBM estimates and raise a
    :class:`NonConvergenceWarning`.
    """
    K = bundles.K
    if dcsums.K != K:
        raise DimensionMismatch("bundle counts and degree sums differ in K")
    if partition is None:
        partition = BlockPartition(np.zeros(len(dcsums.theta1), np.int64), K)
    P = np.zeros((3, K, K))
    fitted = np.zeros((K, K), dtype=bool)
    status = {}
    for r, s in bundles.bundles():
        counts = bundles[r, s].as_tuple()
        if sum(counts) == 0:
            continue
        x, st = _solve_bundle_approx(counts, dcsums[r, s], max_iter, tol)
        if x is None:
            T = sum(counts)
            x = np.array([counts[0] + counts[1], counts[0] + counts[2], counts[0]]) / T
        P[:, r, s] = x
        fitted[r, s] = True
        status[(r, s)] = st
    failed = [rs for rs, st in status.items() if st == "not_converged"]
    if failed:
        warnings.warn(f"{len(failed)} bundle(s) {failed} did not converge; keeping "
                      "their zeroth-order estimates", NonConvergenceWarning)
    if bundles.symmetric:
        P = np.stack([_mirror_params(M, True) for M in P])
        fitted = fitted | fitted.T
    return CorrDCSBMParams(_masked(P[0], fitted), _masked(P[1], fitted),
                           _masked(P[2], fitted), dcsums.theta1, dcsums.theta2,
                           partition, bundles.symmetric, status)


# --- full pair-level likelihood --------------------------------------------

@dataclass(frozen=True, eq=False)
class _BundlePairs:
    a: np.ndarray
    b: np.ndarray
    code: np.ndarray

    def class_counts(self) -> tuple[int, int, int, int]:
        counts = np.bincount(self.code, minlength=4)
        return tuple(int(c) for c in counts)


def full_bundle_pairs(net: MultilayerNetwork, partition: BlockPartition,
                      theta1: NormalizedDegrees, theta2: NormalizedDegrees,
                      mask: PairMask | None = None, layer_a: int = 0,
                      layer_b: int = 1) -> dict:
    """Per-bundle arrays ``(a, b, outcome code)`` over all observed pairs."""
    partition.check(net)
    n = net.n
    keys = domain_keys(net.domain, n)
    if mask is not None and mask.n_hidden:
        keys = mask.observed(keys)
    i, j = keys // n, keys % n
    x1 = net.has_edge(layer_a, keys)
    x2 = net.has_edge(layer_b, keys)
    code = np.where(x1, np.where(x2, kernels.C11, kernels.C10),
                    np.where(x2, kernels.C01, kernels.C00)).astype(np.int8)
    r, s = partition.bundle_of(i, j, net.domain)
    flat = r * partition.K + s
    order = np.argsort(flat, kind="stable")
    flat, i, j, code = flat[order], i[order], j[order], code[order]
    a = theta1.products(i, j)
    b = theta2.products(i, j)
    bounds = np.searchsorted(flat, np.arange(partition.K**2 + 1))
    out = {}
    for idx in range(partition.K**2):
        lo, hi = bounds[idx], bounds[idx + 1]
        if hi > lo:
            out[divmod(idx, partition.K)] = _BundlePairs(a[lo:hi], b[lo:hi], code[lo:hi])
    return out


def full_loglik(pairs: _BundlePairs, x) -> float:
    value, _, _, ok = kernels.full_loglik_derivs(pairs.a, pairs.b, pairs.code, *x)
    return value if ok else -np.inf


def _feasible_start(pairs: _BundlePairs, x0, fix_q):
    """A point with every observed log argument positive, near ``x0``."""
    sel10 = pairs.code == kernels.C10
    sel01 = pairs.code == kernels.C01
    r10 = np.sqrt(pairs.b[sel10] / pairs.a[sel10]).max() if sel10.any() else 0.0
    r01 = np.sqrt(pairs.a[sel01] / pairs.b[sel01]).max() if sel01.any() else 0.0
    p1, p2, q = x0
    for k in range(80):
        lam = 0.5**k
        x = np.array([lam * p1, lam * p2, lam * q])
        if fix_q:
            x[2] = 0.0
        else:
            caps = [x[2]]
            if r10 > 0:
                caps.append(0.5 * x[0] / r10)
            if r01 > 0:
                caps.append(0.5 * x[1] / r01)
            x[2] = min(caps)
        if np.isfinite(full_loglik(pairs, x)):
            return x
    raise InfeasibleStart("no strictly feasible starting point found")


def _maximize_full(pairs: _BundlePairs, x0, fix_q, max_iter, tol):
    x = _feasible_start(pairs, x0, fix_q)
    active = slice(0, 2) if fix_q else slice(0, 3)
    for _ in range(max_iter):
        value, g, H, _ = kernels.full_loglik_derivs(pairs.a, pairs.b, pairs.code, *x)
        g, H = g[active], H[active, active]
        try:
            step = np.linalg.solve(H, -g)
        except np.linalg.LinAlgError as exc:
            raise NonConvergence(f"singular Hessian: {exc}") from exc
        slope = float(g @ step)
        if slope <= 0:
            raise NonConvergence("Hessian is not negative definite")
        # the decrement estimates the remaining gain; its round-off floor
        # grows with the number of summed terms, hence the relative test
        if slope / 2 <= tol * max(1.0, abs(value)):
            return x
        t = 1.0
        for _ in range(60):
            x_new = x.copy()
            x_new[active] += t * step
            if full_loglik(pairs, x_new) >= value + 0.25 * t * slope:
                break
            t *= 0.5
        else:
            return x  # no further ascent possible at machine precision
        x = x_new
    raise NonConvergence(f"no convergence after {max_iter} Newton steps")


def fit_corr_dcsbm_full(net: MultilayerNetwork, partition: BlockPartition,
                        theta1: NormalizedDegrees, theta2: NormalizedDegrees,
                        mask: PairMask | None = None, layer_a: int = 0,
                        layer_b: int = 1, start: CorrDCSBMParams | None = None,
                        max_iter: int = MAX_NEWTON_ITER, tol: float = 1e-12
                        ) -> CorrDCSBMParams:
    """Maximise the exact pair-level log-likelihood in every bundle.

    Damped Newton ascent with backtracking that keeps every observed pair's
    log argument positive. Iteration stops when the Newton decrement falls
    below ``tol`` relative to the log-likelihood. ``start`` defaults to the approximate fit.
    Bundles with an empty (1,0), (0,1) or (0,0) class keep the starting
    values and are reported as ``"degenerate"``; an empty (1,1) class pins
    ``q = 0``.
    """
    pairs_by_bundle = full_bundle_pairs(net, partition, theta1, theta2, mask,
                                        layer_a, layer_b)
    if start is None:
        from .counts import bundle_cooccurrence, degree_correction_sums

        bundles = bundle_cooccurrence(net, partition, layer_a, layer_b, mask)
        sums = degree_correction_sums(net, partition, theta1, theta2, mask,
                                      layer_a, layer_b)
        with warnings.catch_warnings():
            warnings.simplefilter("ignore", NonConvergenceWarning)
            start = fit_corr_dcsbm_approx(bundles, sums, partition)
    K = partition.K
    P = np.zeros((3, K, K))
    fitted = np.zeros((K, K), dtype=bool)
    status = {}
    for (r, s), pairs in pairs_by_bundle.items():
        e11, e10, e01, e00 = pairs.class_counts()
        x0 = np.array([start.P1[r, s], start.P2[r, s], start.Q[r, s]], dtype=float)
        if min(e10, e01, e00) == 0:
            x, st = x0, "degenerate"
        else:
            x, st = _maximize_full(pairs, x0, e11 == 0, max_iter, tol), "converged"
        P[:, r, s] = x
        fitted[r, s] = True
        status[(r, s)] = st
    symmetric = net.domain.symmetric
    if symmetric:
        P = np.stack([_mirror_params(M, True) for M in P])
        fitted = fitted | fitted.T
    return CorrDCSBMParams(_masked(P[0], fitted), _masked(P[1], fitted),
                           _masked(P[2], fitted), theta1, theta2, partition,
                           symmetric, status)


# --- per-pair correlations -------------------------------------------------

def pair_correlation(params: CorrDCSBMParams, i, j, mode: str = "exact",
                     domain=None, route_exceptional: bool = True):
    """Correlation of the two edge indicators of pair(s) ``(i, j)``.

    ``mode`` is ``"exact"``, ``"first_order"`` (linear in the degree
    perturbations) or ``"independent_case"`` (first order, for bundles with
    ``q = p1 p2``). In first-order mode, pairs whose expansion denominators
    are as small as the perturbations themselves are evaluated exactly.
    """
    from .network import EdgeDomain

    domain = domain or EdgeDomain(directed=not params.symmetric)
    scalar = np.ndim(i) == 0 and np.ndim(j) == 0
    i, j = np.atleast_1d(i), np.atleast_1d(j)
    p1, p2, q = params.bundle_params(i, j, domain)
    a = params.theta1.products(i, j)
    b = params.theta2.products(i, j)
    e1, e2 = a - 1, b - 1

    def exact(sel):
        var = a[sel] * p1[sel] * (1 - a[sel] * p1[sel]) * b[sel] * p2[sel] * (1 - b[sel] * p2[sel])
        if (~(var > 0)).any():
            raise DegeneratePairVariance("a pair has a zero edge variance")
        num = np.sqrt(a[sel] * b[sel]) * q[sel] - a[sel] * b[sel] * p1[sel] * p2[sel]
        return num / np.sqrt(var)

    everything = np.ones(i.shape, dtype=bool)
    if mode == "exact":
        out = exact(everything)
    elif mode == "independent_case":
        out = -(e1 + e2) / 2 * np.sqrt(p1 / (1 - p1)) * np.sqrt(p2 / (1 - p2))
    elif mode == "first_order":
        var = p1 * (1 - p1) * p2 * (1 - p2)
        if (~(var > 0)).any():
            raise DegeneratePairVariance("bundle marginal is 0 or 1")
        dep = q - p1 * p2
        rho = dep / np.sqrt(var)
        scale = np.abs(e1) + np.abs(e2)
        if route_exceptional:
            special = ((np.abs(dep) <= scale * p1 * p2) | (1 - p1 <= np.abs(e1))
                       | (1 - p2 <= np.abs(e2)))
        else:
            special = np.zeros(i.shape, dtype=bool)
        out = np.empty(i.shape)
        ok = ~special
        out[ok] = rho[ok] * (1 + e1[ok] / 2 * p1[ok] / (1 - p1[ok])
                             + e2[ok] / 2 * p2[ok] / (1 - p2[ok])
                             - (e1[ok] + e2[ok]) / 2 * p1[ok] * p2[ok] / dep[ok])
        if special.any():
            out[special] = exact(special)
    else:
        raise ValueError(f"unknown mode {mode!r}")
    return float(out[0]) if scalar else out


# --- monolayer DCSBM -------------------------------------------------------

def fit_mono_dcsbm(net: MultilayerNetwork, partition: BlockPartition,
                   theta: NormalizedDegrees, layer: int,
                   mask: PairMask | None = None) -> np.ma.MaskedArray:
    """Propensities ``m_rs / sum(theta_i theta_j)`` over observed pairs."""
    partition.check(net)
    n, domain = net.n, net.domain
    keys = net.layer_keys(layer)
    hidden = np.empty(0, np.int64)
    if mask is not None:
        keys = mask.observed(keys)
        hidden = mask.hidden
    m = bundle_sum(keys, 1, partition, domain, n)
    weight = bundle_pair_totals(partition, domain, theta.values)
    if hidden.size:
        weight = weight - bundle_sum(hidden, theta.products(hidden // n, hidden % n),
                                     partition, domain, n)
    if domain.symmetric:
        m, weight = _mirror_params(m, True), _mirror_params(weight, True)
    fitted = weight > 0
    P = np.where(fitted, m / np.where(fitted, weight, 1.0), 0.0)
    return np.ma.masked_array(P, mask=~fitted)
