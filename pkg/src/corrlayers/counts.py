"""Co-occurrence statistics for pairs of layers.

Counts are computed from the edge lists only. Non-edge counts come from
block-size combinatorics minus hidden pairs, so nothing here scales with the
number of node pairs.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import DimensionMismatch
from .network import (
    BlockPartition,
    EdgeDomain,
    MultilayerNetwork,
    NormalizedDegrees,
    PairMask,
)

__all__ = [
    "PairCounts",
    "BundleCounts",
    "DegreeCorrectionSums",
    "global_cooccurrence",
    "bundle_cooccurrence",
    "degree_correction_sums",
    "bundle_pair_totals",
    "bundle_sum",
]


@dataclass(frozen=True)
class PairCounts:
    """Numbers of pairs with outcome (1,1), (1,0), (0,1) and (0,0)."""

    e11: int
    e10: int
    e01: int
    e00: int

    def __post_init__(self):
        for name in ("e11", "e10", "e01", "e00"):
            value = int(getattr(self, name))
            if value < 0:
                raise ValueError(f"{name} must be non-negative, got {value}")
            object.__setattr__(self, name, value)

    @property
    def total(self) -> int:
        return self.e11 + self.e10 + self.e01 + self.e00

    @property
    def m1(self) -> int:
        return self.e11 + self.e10

    @property
    def m2(self) -> int:
        return self.e11 + self.e01

    def swapped(self) -> "PairCounts":
        return PairCounts(self.e11, self.e01, self.e10, self.e00)

    def as_tuple(self) -> tuple[int, int, int, int]:
        return self.e11, self.e10, self.e01, self.e00


@dataclass(frozen=True, eq=False)
class BundleCounts:
    """Per-bundle :class:`PairCounts` as four ``K x K`` integer arrays.

    For symmetric (undirected unipartite) domains only the upper triangle
    ``r <= s`` is populated.
    """

    e11: np.ndarray
    e10: np.ndarray
    e01: np.ndarray
    e00: np.ndarray
    symmetric: bool

    @property
    def K(self) -> int:
        return self.e11.shape[0]

    @property
    def total(self) -> np.ndarray:
        return self.e11 + self.e10 + self.e01 + self.e00

    @property
    def m1(self) -> np.ndarray:
        return self.e11 + self.e10

    @property
    def m2(self) -> np.ndarray:
        return self.e11 + self.e01

    def __getitem__(self, rs) -> PairCounts:
        r, s = rs
        if self.symmetric and r > s:
            r, s = s, r
        return PairCounts(self.e11[r, s], self.e10[r, s], self.e01[r, s],
                          self.e00[r, s])

    def bundles(self):
        """Stored bundle indices in row-major order."""
        for r in range(self.K):
            for s in range(r if self.symmetric else 0, self.K):
                yield r, s

    def global_counts(self) -> PairCounts:
        return PairCounts(int(self.e11.sum()), int(self.e10.sum()),
                          int(self.e01.sum()), int(self.e00.sum()))

    def swapped(self) -> "BundleCounts":
        return BundleCounts(self.e11, self.e01, self.e10, self.e00, self.symmetric)


@dataclass(frozen=True, eq=False)
class DegreeCorrectionSums:
    """Degree-perturbation sums per bundle used by the approximate DCSBM fit.

    With ``eps^l_ij = theta^l_i theta^l_j - 1``:
    ``g10`` sums ``eps^2 - eps^1`` over (1,0) pairs, ``g01`` sums
    ``eps^1 - eps^2`` over (0,1) pairs, ``f1``/``f2`` sum ``eps^1``/``eps^2``
    over (0,0) pairs.
    """

    g10: np.ndarray
    g01: np.ndarray
    f1: np.ndarray
    f2: np.ndarray
    theta1: NormalizedDegrees
    theta2: NormalizedDegrees
    symmetric: bool

    @property
    def K(self) -> int:
        return self.g10.shape[0]

    def __getitem__(self, rs) -> tuple[float, float, float, float]:
        r, s = rs
        if self.symmetric and r > s:
            r, s = s, r
        return (float(self.g10[r, s]), float(self.g01[r, s]),
                float(self.f1[r, s]), float(self.f2[r, s]))


def _split(keys: np.ndarray, n: int):
    return keys // n, keys % n


def bundle_sum(keys: np.ndarray, values, partition: BlockPartition,
               domain: EdgeDomain, n: int) -> np.ndarray:
    """Sum ``values`` (scalar or one per key) into a ``K x K`` bundle array."""
    K = partition.K
    i, j = _split(np.asarray(keys, dtype=np.int64), n)
    r, s = partition.bundle_of(i, j, domain)
    weights = None if np.isscalar(values) else np.asarray(values, dtype=np.float64)
    flat = np.bincount(r * K + s, weights=weights, minlength=K * K)
    if np.isscalar(values) and values != 1:
        flat = flat * values
    return flat.reshape(K, K)


def bundle_pair_totals(partition: BlockPartition, domain: EdgeDomain,
                       weights: np.ndarray | None = None) -> np.ndarray:
    """Per-bundle sum over all domain pairs of ``w_i * w_j``.

    With ``weights=None`` this is the exact integer number of pairs ``e_rs``.
    """
    g = partition.labels
    K = partition.K
    if weights is None:
        w = np.ones(g.size, dtype=np.int64)
    else:
        w = np.asarray(weights, dtype=np.float64)
        if w.size != g.size:
            raise DimensionMismatch("one weight per node required")

    def sums(sl):
        S = np.bincount(g[sl], weights=w[sl], minlength=K)
        Q = np.bincount(g[sl], weights=w[sl] * w[sl], minlength=K)
        if weights is None:
            S, Q = np.rint(S).astype(np.int64), np.rint(Q).astype(np.int64)
        return S, Q

    if domain.bipartite is not None:
        left = domain.bipartite[0]
        S_left, _ = sums(slice(0, left))
        S_right, _ = sums(slice(left, None))
        return np.outer(S_left, S_right)
    S, Q = sums(slice(None))
    M = np.outer(S, S)
    diag = np.diag_indices(K)
    if domain.directed:
        if not domain.self_edges:
            M[diag] -= Q
        return M
    M = np.triu(M)
    if domain.self_edges:
        M[diag] = (S * S + Q) // 2 if weights is None else (S * S + Q) / 2
    else:
        M[diag] = (S * S - Q) // 2 if weights is None else (S * S - Q) / 2
    return M


def _observed_layer_keys(net, layer, mask):
    keys = net.layer_keys(layer)
    return keys if mask is None else mask.observed(keys)


def global_cooccurrence(net: MultilayerNetwork, layer_a: int = 0, layer_b: int = 1,
                        mask: PairMask | None = None) -> PairCounts:
    ka = _observed_layer_keys(net, layer_a, mask)
    kb = _observed_layer_keys(net, layer_b, mask)
    e11 = int(np.intersect1d(ka, kb, assume_unique=True).size)
    e10 = int(ka.size) - e11
    e01 = int(kb.size) - e11
    total = net.n_pairs - (0 if mask is None else mask.n_hidden)
    return PairCounts(e11, e10, e01, total - e11 - e10 - e01)


def bundle_cooccurrence(net: MultilayerNetwork, partition: BlockPartition,
                        layer_a: int = 0, layer_b: int = 1,
                        mask: PairMask | None = None) -> BundleCounts:
    partition.check(net)
    n, domain = net.n, net.domain
    ka = _observed_layer_keys(net, layer_a, mask)
    kb = _observed_layer_keys(net, layer_b, mask)
    both = np.intersect1d(ka, kb, assume_unique=True)

    def count(keys):
        return np.rint(bundle_sum(keys, 1, partition, domain, n)).astype(np.int64)

    e11 = count(both)
    e10 = count(ka) - e11
    e01 = count(kb) - e11
    e_rs = bundle_pair_totals(partition, domain).astype(np.int64)
    if mask is not None and mask.n_hidden:
        e_rs = e_rs - count(mask.hidden)
    e00 = e_rs - e11 - e10 - e01
    return BundleCounts(e11, e10, e01, e00, domain.symmetric)


def degree_correction_sums(net: MultilayerNetwork, partition: BlockPartition,
                           theta_a: NormalizedDegrees, theta_b: NormalizedDegrees,
                           mask: PairMask | None = None,
                           layer_a: int = 0, layer_b: int = 1) -> DegreeCorrectionSums:
    partition.check(net)
    if len(theta_a) != net.n or len(theta_b) != net.n:
        raise DimensionMismatch("theta vectors must have one entry per node")
    n, domain = net.n, net.domain
    ka = _observed_layer_keys(net, layer_a, mask)
    kb = _observed_layer_keys(net, layer_b, mask)
    only_a = np.setdiff1d(ka, kb, assume_unique=True)
    only_b = np.setdiff1d(kb, ka, assume_unique=True)
    touched = np.union1d(ka, kb)

    def eps(keys, theta):
        i, j = _split(keys, n)
        return theta.epsilon(i, j)

    def bsum(keys, values):
        return bundle_sum(keys, values, partition, domain, n)

    g10 = bsum(only_a, eps(only_a, theta_b) - eps(only_a, theta_a))
    g01 = bsum(only_b, eps(only_b, theta_a) - eps(only_b, theta_b))

    n_pairs = bundle_pair_totals(partition, domain).astype(np.float64)
    hidden = mask.hidden if mask is not None else np.empty(0, np.int64)
    f = []
    for theta in (theta_a, theta_b):
        # sum over (0,0) pairs = all pairs - hidden pairs - pairs touching an edge
        total = bundle_pair_totals(partition, domain, theta.values) - n_pairs
        total -= bsum(hidden, eps(hidden, theta))
        total -= bsum(touched, eps(touched, theta))
        f.append(total)
    return DegreeCorrectionSums(g10, g01, f[0], f[1], theta_a, theta_b,
                                domain.symmetric)
