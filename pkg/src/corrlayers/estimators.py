"""Maximum-likelihood estimators for correlated ER and SBM layer pairs.

The correlated ER model draws each pair's outcome in the two layers from
``P(1,1) = q``, ``P(1,0) = p1 - q``, ``P(0,1) = p2 - q`` and
``P(0,0) = 1 - p1 - p2 + q``. The SBM version has one such triple per edge
bundle. Correlations that are undefined (an empty or complete layer or
bundle) are ``None`` for scalars and masked entries for matrices.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .counts import BundleCounts, PairCounts
from .errors import (
    DegenerateMarginal,
    EmptyInput,
    InfeasibleParams,
    SingularInformation,
)

__all__ = [
    "FEASIBILITY_TOL",
    "CorrERParams",
    "CorrSBMParams",
    "FisherReport",
    "is_feasible",
    "check_feasible",
    "pearson_from_params",
    "rho_from_counts",
    "fit_corr_er",
    "fit_corr_sbm",
    "effective_correlation",
    "er_loglik",
    "sbm_loglik",
    "er_fisher_information",
    "er_fisher_variance",
]

FEASIBILITY_TOL = 1e-12
Z95 = 1.96


def is_feasible(p1, p2, q, tol=FEASIBILITY_TOL) -> bool:
    """Whether the four joint outcome probabilities are valid."""
    return (-tol <= q <= min(p1, p2) + tol and p1 <= 1 + tol and p2 <= 1 + tol
            and p1 + p2 <= 1 + q + tol)


def check_feasible(p1, p2, q, tol=FEASIBILITY_TOL) -> None:
    if not is_feasible(p1, p2, q, tol):
        raise InfeasibleParams(
            f"(p1, p2, q) = ({p1}, {p2}, {q}) outside the feasible region "
            "0 <= q <= min(p1, p2), p1 + p2 <= 1 + q")


def pearson_from_params(p1: float, p2: float, q: float) -> float:
    """Pearson correlation of the two edge indicators of a pair."""
    check_feasible(p1, p2, q)
    var = p1 * (1 - p1) * p2 * (1 - p2)
    if var <= 0:
        raise DegenerateMarginal(f"p1={p1}, p2={p2}: a marginal is 0 or 1")
    return float(np.clip((q - p1 * p2) / math.sqrt(var), -1.0, 1.0))


def rho_from_counts(e11: int, e10: int, e01: int, e00: int) -> float | None:
    """ML correlation from co-occurrence counts, ``None`` when undefined."""
    e11, e10, e01, e00 = int(e11), int(e10), int(e01), int(e00)
    den = (e11 + e10) * (e11 + e01) * (e10 + e00) * (e01 + e00)
    if den == 0:
        return None
    num = e00 * e11 - e10 * e01
    rho = num / math.sqrt(den)
    return max(-1.0, min(1.0, rho))


@dataclass(frozen=True)
class CorrERParams:
    """Correlated ER parameters; ``rho`` is ``None`` when undefined."""

    p1: float
    p2: float
    q: float
    rho: float | None = None

    def __post_init__(self):
        check_feasible(self.p1, self.p2, self.q)

    @classmethod
    def from_rho(cls, p1: float, p2: float, rho: float) -> "CorrERParams":
        from .generators import q_from_rho

        return cls(p1, p2, q_from_rho(p1, p2, rho), rho)

    @property
    def rho_defined(self) -> bool:
        return self.rho is not None

    @property
    def joint(self) -> np.ndarray:
        """Probabilities of outcomes (1,1), (1,0), (0,1), (0,0)."""
        p1, p2, q = self.p1, self.p2, self.q
        return np.array([q, p1 - q, p2 - q, 1 - p1 - p2 + q])

    def as_array(self) -> np.ndarray:
        return np.array([self.p1, self.p2, self.q])


def fit_corr_er(counts: PairCounts) -> CorrERParams:
    """Closed-form ML estimates: edge and co-edge densities of the pairs."""
    T = counts.total
    if T <= 0:
        raise EmptyInput("no observed pairs")
    return CorrERParams(counts.m1 / T, counts.m2 / T, counts.e11 / T,
                        rho_from_counts(*counts.as_tuple()))


def effective_correlation(counts: PairCounts | BundleCounts) -> float | None:
    """Layer correlation of a uniformly random pair.

    Given bundle counts it aggregates them first, so the value never depends
    on the partition.
    """
    if isinstance(counts, BundleCounts):
        counts = counts.global_counts()
    if counts.total <= 0:
        raise EmptyInput("no observed pairs")
    return rho_from_counts(*counts.as_tuple())


@dataclass(frozen=True, eq=False)
class CorrSBMParams:
    """Per-bundle correlated SBM parameters as ``K x K`` masked arrays.

    Bundles without observed pairs are masked in every matrix; ``Rho`` is
    additionally masked where the correlation is undefined.
    """

    P1: np.ma.MaskedArray
    P2: np.ma.MaskedArray
    Q: np.ma.MaskedArray
    Rho: np.ma.MaskedArray
    symmetric: bool = False

    @property
    def K(self) -> int:
        return self.P1.shape[0]

    def bundle(self, r: int, s: int) -> CorrERParams | None:
        if self.P1.mask[r, s]:
            return None
        rho = None if self.Rho.mask[r, s] else float(self.Rho[r, s])
        return CorrERParams(float(self.P1[r, s]), float(self.P2[r, s]),
                            float(self.Q[r, s]), rho)

    def permuted(self, perm) -> "CorrSBMParams":
        """Parameters after renaming block ``k`` to ``perm[k]``."""
        inv = np.argsort(np.asarray(perm))
        ix = np.ix_(inv, inv)
        return CorrSBMParams(self.P1[ix], self.P2[ix], self.Q[ix], self.Rho[ix],
                             self.symmetric)


def _mirror(M: np.ndarray) -> np.ndarray:
    upper = np.triu(M)
    return upper + np.triu(M, 1).T


def fit_corr_sbm(bundles: BundleCounts) -> CorrSBMParams:
    total = bundles.total
    if not (total > 0).any():
        raise EmptyInput("no bundle has observed pairs")
    K = bundles.K
    e11, e10, e01, e00 = (np.asarray(x, dtype=np.int64) for x in
                          (bundles.e11, bundles.e10, bundles.e01, bundles.e00))
    if bundles.symmetric:
        e11, e10, e01, e00, total = map(_mirror, (e11, e10, e01, e00, total))
    empty = total <= 0
    safe = np.where(empty, 1, total)
    P1 = np.ma.masked_array((e11 + e10) / safe, mask=empty)
    P2 = np.ma.masked_array((e11 + e01) / safe, mask=empty)
    Q = np.ma.masked_array(e11 / safe, mask=empty)
    rho = np.zeros((K, K))
    undefined = np.ones((K, K), dtype=bool)
    for r in range(K):
        for s in range(K):
            value = rho_from_counts(e11[r, s], e10[r, s], e01[r, s], e00[r, s])
            if value is not None:
                rho[r, s] = value
                undefined[r, s] = False
    Rho = np.ma.masked_array(rho, mask=undefined)
    return CorrSBMParams(P1, P2, Q, Rho, bundles.symmetric)


def er_loglik(counts: PairCounts, p1: float, p2: float, q: float) -> float:
    """Log-likelihood of co-occurrence counts; ``-inf`` outside the domain."""
    terms = ((counts.e11, q), (counts.e10, p1 - q), (counts.e01, p2 - q),
             (counts.e00, 1 - p1 - p2 + q))
    total = 0.0
    for n, prob in terms:
        if n == 0:
            continue
        if prob <= 0:
            return -math.inf
        total += n * math.log(prob)
    return total


def sbm_loglik(bundles: BundleCounts, P1, P2, Q) -> float:
    total = 0.0
    for r, s in bundles.bundles():
        c = bundles[r, s]
        if c.total:
            total += er_loglik(c, P1[r, s], P2[r, s], Q[r, s])
    return total


# gradient of each joint outcome probability with respect to (p1, p2, q)
_JOINT_GRADIENTS = np.array([[0, 0, 1], [1, 0, -1], [0, 1, -1], [-1, -1, 1]],
                            dtype=np.float64)


def er_fisher_information(params: CorrERParams, num_pairs: int = 1) -> np.ndarray:
    """Expected Fisher information of ``(p1, p2, q)`` for ``num_pairs`` pairs."""
    probs = params.joint
    if (probs <= 0).any():
        raise SingularInformation(
            "parameters on the boundary of the feasible region")
    G = _JOINT_GRADIENTS
    return num_pairs * (G.T / probs) @ G


@dataclass(frozen=True, eq=False)
class FisherReport:
    """Asymptotic variances and 95% intervals for ``(p1, p2, q)``."""

    estimates: np.ndarray
    variances: np.ndarray
    ci95: np.ndarray
    information: np.ndarray
    names: tuple = ("p1", "p2", "q")

    @property
    def std(self) -> np.ndarray:
        return np.sqrt(self.variances)

    @property
    def ci_width(self) -> np.ndarray:
        return self.ci95[:, 1] - self.ci95[:, 0]

    def as_dict(self) -> dict:
        return {name: {"estimate": float(est), "variance": float(var),
                       "ci95": [float(lo), float(hi)]}
                for name, est, var, (lo, hi) in
                zip(self.names, self.estimates, self.variances, self.ci95)}


def er_fisher_variance(params: CorrERParams, num_pairs: int) -> FisherReport:
    if num_pairs <= 0:
        raise SingularInformation("need at least one pair")
    info = er_fisher_information(params, num_pairs)
    try:
        cov = np.linalg.inv(info)
    except np.linalg.LinAlgError as exc:
        raise SingularInformation(str(exc)) from exc
    var = np.diag(cov).copy()
    if (var <= 0).any():
        raise SingularInformation("non-positive variance")
    est = params.as_array()
    half = Z95 * np.sqrt(var)
    ci = np.column_stack([est - half, est + half])
    return FisherReport(est, var, ci, info)
