"""Node-aligned multilayer networks, edge domains, partitions and degrees.

Node pairs are stored as int64 keys ``i * n + j`` in canonical orientation:
``i < j`` (or ``i <= j`` with self-edges) for undirected unipartite domains,
``(left, right)`` for bipartite domains, and as given for directed domains.
Sorting keys therefore enumerates a domain in row-major order.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .errors import (
    BipartiteViolation,
    DimensionMismatch,
    EmptyLayer,
    LayerIndexOutOfRange,
    OutOfRangeNode,
    PartitionMismatch,
    SelfEdgeForbidden,
    ValidationError,
)

__all__ = [
    "EdgeDomain",
    "MultilayerNetwork",
    "BlockPartition",
    "NormalizedDegrees",
    "PairMask",
    "build_network",
    "edge_domain_size",
    "domain_pairs",
    "domain_keys",
    "canonical_keys",
    "normalized_degrees",
    "observed_normalized_degrees",
]


@dataclass(frozen=True)
class EdgeDomain:
    """The set of node pairs that may carry an edge.

    ``bipartite=(left, right)`` puts nodes ``0..left-1`` on the left side and
    the remaining ``right`` nodes on the right; pairs always join the sides.
    """

    directed: bool = False
    self_edges: bool = False
    bipartite: tuple[int, int] | None = None

    def __post_init__(self):
        if self.bipartite is not None:
            left, right = self.bipartite
            if left < 1 or right < 1:
                raise ValidationError("bipartite sides must both be non-empty")
            if self.self_edges:
                raise ValidationError("bipartite domains cannot have self-edges")
            # sides are unordered pairs of left/right nodes
            object.__setattr__(self, "directed", False)
            object.__setattr__(self, "bipartite", (int(left), int(right)))

    @property
    def symmetric(self) -> bool:
        """True when pair (i, j) and (j, i) are the same unipartite pair."""
        return not self.directed and self.bipartite is None

    def check_size(self, n: int) -> None:
        if n < 1:
            raise ValidationError(f"node count must be >= 1, got {n}")
        if self.bipartite is not None and sum(self.bipartite) != n:
            raise ValidationError(
                f"bipartite sides {self.bipartite} do not add up to n={n}")


def edge_domain_size(domain: EdgeDomain, n: int) -> int:
    domain.check_size(n)
    if domain.bipartite is not None:
        left, right = domain.bipartite
        return left * right
    if domain.directed:
        return n * n if domain.self_edges else n * (n - 1)
    return n * (n + 1) // 2 if domain.self_edges else n * (n - 1) // 2


def domain_pairs(domain: EdgeDomain, n: int) -> tuple[np.ndarray, np.ndarray]:
    """All pairs of the domain as ``(i, j)`` arrays in canonical key order."""
    domain.check_size(n)
    if domain.bipartite is not None:
        left, right = domain.bipartite
        i = np.repeat(np.arange(left, dtype=np.int64), right)
        j = np.tile(np.arange(left, n, dtype=np.int64), left)
        return i, j
    if domain.directed:
        i = np.repeat(np.arange(n, dtype=np.int64), n)
        j = np.tile(np.arange(n, dtype=np.int64), n)
        if not domain.self_edges:
            keep = i != j
            i, j = i[keep], j[keep]
        return i, j
    i, j = np.triu_indices(n, 0 if domain.self_edges else 1)
    return i.astype(np.int64), j.astype(np.int64)


def domain_keys(domain: EdgeDomain, n: int) -> np.ndarray:
    i, j = domain_pairs(domain, n)
    return i * n + j


def canonical_keys(i, j, domain: EdgeDomain, n: int) -> np.ndarray:
    """Validate pairs against ``domain`` and return sorted unique keys."""
    i = np.asarray(i, dtype=np.int64).ravel()
    j = np.asarray(j, dtype=np.int64).ravel()
    if i.shape != j.shape:
        raise DimensionMismatch("source and target arrays differ in length")
    if i.size == 0:
        return np.empty(0, dtype=np.int64)
    bad = (i < 0) | (i >= n) | (j < 0) | (j >= n)
    if bad.any():
        k = int(np.flatnonzero(bad)[0])
        raise OutOfRangeNode(f"pair ({i[k]}, {j[k]}) outside 0..{n - 1}")
    if domain.bipartite is not None:
        left = domain.bipartite[0]
        i_left, j_left = i < left, j < left
        bad = i_left == j_left
        if bad.any():
            k = int(np.flatnonzero(bad)[0])
            raise BipartiteViolation(
                f"pair ({i[k]}, {j[k]}) does not join the two sides")
        i, j = np.where(i_left, i, j), np.where(i_left, j, i)
    else:
        loops = i == j
        if loops.any() and not domain.self_edges:
            k = int(np.flatnonzero(loops)[0])
            raise SelfEdgeForbidden(f"self-edge at node {i[k]}")
        if not domain.directed:
            i, j = np.minimum(i, j), np.maximum(i, j)
    return np.unique(i * n + j)


@dataclass(frozen=True, eq=False)
class PairMask:
    """Pairs of the domain hidden from training.

    Only the hidden set is stored (sorted keys); every other domain pair is
    observed.
    """

    hidden: np.ndarray = field(default_factory=lambda: np.empty(0, np.int64))

    def __post_init__(self):
        hidden = np.unique(np.asarray(self.hidden, dtype=np.int64))
        hidden.flags.writeable = False
        object.__setattr__(self, "hidden", hidden)

    @classmethod
    def full(cls) -> "PairMask":
        return cls()

    @property
    def n_hidden(self) -> int:
        return int(self.hidden.size)

    def is_hidden(self, keys) -> np.ndarray:
        keys = np.asarray(keys, dtype=np.int64)
        if self.hidden.size == 0:
            return np.zeros(keys.shape, dtype=bool)
        pos = np.searchsorted(self.hidden, keys)
        pos[pos == self.hidden.size] = 0
        return self.hidden[pos] == keys

    def observed(self, keys) -> np.ndarray:
        """Subset of ``keys`` that are not hidden."""
        keys = np.asarray(keys, dtype=np.int64)
        return keys[~self.is_hidden(keys)]


@dataclass(frozen=True, eq=False)
class MultilayerNetwork:
    """Binary layers over a shared node set.

    ``layers`` holds one sorted array of canonical pair keys per layer.
    Use :func:`build_network` to construct from edge lists.
    """

    n: int
    layers: tuple
    domain: EdgeDomain = EdgeDomain()
    layer_names: tuple = ()
    node_names: tuple = ()

    def __post_init__(self):
        self.domain.check_size(self.n)
        layers = []
        for keys in self.layers:
            keys = np.asarray(keys, dtype=np.int64)
            keys.flags.writeable = False
            layers.append(keys)
        object.__setattr__(self, "layers", tuple(layers))
        if not self.layer_names:
            names = tuple(str(k + 1) for k in range(len(layers)))
            object.__setattr__(self, "layer_names", names)
        if len(self.layer_names) != len(layers):
            raise DimensionMismatch("one name per layer required")

    @property
    def n_layers(self) -> int:
        return len(self.layers)

    @property
    def n_pairs(self) -> int:
        return edge_domain_size(self.domain, self.n)

    def layer_keys(self, layer: int) -> np.ndarray:
        if not -self.n_layers <= layer < self.n_layers:
            raise LayerIndexOutOfRange(
                f"layer {layer} not in network with {self.n_layers} layers")
        return self.layers[layer]

    def n_edges(self, layer: int) -> int:
        return int(self.layer_keys(layer).size)

    def edges(self, layer: int) -> tuple[np.ndarray, np.ndarray]:
        keys = self.layer_keys(layer)
        return keys // self.n, keys % self.n

    def has_edge(self, layer: int, keys) -> np.ndarray:
        """Vectorised membership test for canonical keys."""
        layer_keys = self.layer_keys(layer)
        keys = np.asarray(keys, dtype=np.int64)
        if layer_keys.size == 0:
            return np.zeros(keys.shape, dtype=bool)
        pos = np.searchsorted(layer_keys, keys)
        pos[pos == layer_keys.size] = 0
        return layer_keys[pos] == keys

    def degrees(self, layer: int) -> np.ndarray:
        """Edge-endpoint counts per node (total degree when directed)."""
        i, j = self.edges(layer)
        return (np.bincount(i, minlength=self.n)
                + np.bincount(j, minlength=self.n)).astype(np.float64)

    def adjacency(self, layer: int):
        """The layer as a scipy CSR matrix (symmetrised when undirected)."""
        from scipy import sparse

        i, j = self.edges(layer)
        if not self.domain.directed:
            off = i != j
            i, j = np.concatenate([i, j[off]]), np.concatenate([j, i[off]])
        data = np.ones(i.size, dtype=np.int8)
        return sparse.csr_matrix((data, (i, j)), shape=(self.n, self.n))

    def edge_list(self, layer: int) -> list[tuple[int, int]]:
        i, j = self.edges(layer)
        return list(zip(i.tolist(), j.tolist()))

    def with_layer(self, layer: int, keys) -> "MultilayerNetwork":
        """Copy of the network with one layer's keys replaced."""
        layers = list(self.layers)
        layers[layer] = np.unique(np.asarray(keys, dtype=np.int64))
        return MultilayerNetwork(self.n, tuple(layers), self.domain,
                                 self.layer_names, self.node_names)

    def select_layers(self, indices: Sequence[int]) -> "MultilayerNetwork":
        layers = tuple(self.layer_keys(k) for k in indices)
        names = tuple(self.layer_names[k] for k in indices)
        return MultilayerNetwork(self.n, layers, self.domain, names,
                                 self.node_names)


def build_network(edge_lists, domain: EdgeDomain | None = None, n: int | None = None,
                  layer_names=(), node_names=()) -> MultilayerNetwork:
    """Build a network from one ``[(src, dst), ...]`` list per layer.

    Nodes are 0-based indices. Undirected input is symmetrised and
    deduplicated; layer order is preserved.
    """
    domain = domain or EdgeDomain()
    if n is None:
        if domain.bipartite is not None:
            n = sum(domain.bipartite)
        else:
            top = [max(max(p) for p in pairs) for pairs in edge_lists if len(pairs)]
            n = (max(top) + 1) if top else 1
    layers = []
    for pairs in edge_lists:
        arr = np.asarray(list(pairs), dtype=np.int64).reshape(-1, 2)
        layers.append(canonical_keys(arr[:, 0], arr[:, 1], domain, n))
    return MultilayerNetwork(n, tuple(layers), domain, tuple(layer_names),
                             tuple(node_names))


@dataclass(frozen=True, eq=False)
class BlockPartition:
    """Block labels ``0..K-1``, one per node."""

    labels: np.ndarray
    K: int | None = None

    def __post_init__(self):
        labels = np.asarray(self.labels, dtype=np.int64).copy()
        if labels.ndim != 1 or labels.size == 0:
            raise ValidationError("partition needs one label per node")
        if labels.min() < 0:
            raise ValidationError("block labels must be non-negative")
        K = int(labels.max()) + 1 if self.K is None else int(self.K)
        if K < 1 or labels.max() >= K:
            raise ValidationError(f"labels exceed K={K}")
        labels.flags.writeable = False
        object.__setattr__(self, "labels", labels)
        object.__setattr__(self, "K", K)

    @classmethod
    def single(cls, n: int) -> "BlockPartition":
        return cls(np.zeros(n, dtype=np.int64), 1)

    @property
    def n(self) -> int:
        return int(self.labels.size)

    def sizes(self) -> np.ndarray:
        return np.bincount(self.labels, minlength=self.K)

    def check(self, net: MultilayerNetwork) -> None:
        if self.n != net.n:
            raise PartitionMismatch(
                f"partition covers {self.n} nodes, network has {net.n}")

    def bundle_of(self, i, j, domain: EdgeDomain) -> tuple[np.ndarray, np.ndarray]:
        """Bundle ``(r, s)`` of each pair; ``r <= s`` for symmetric domains."""
        r = self.labels[np.asarray(i)]
        s = self.labels[np.asarray(j)]
        if domain.symmetric:
            r, s = np.minimum(r, s), np.maximum(r, s)
        return r, s

    def relabel(self, permutation) -> "BlockPartition":
        """Partition with label ``k`` renamed to ``permutation[k]``."""
        permutation = np.asarray(permutation, dtype=np.int64)
        return BlockPartition(permutation[self.labels], self.K)


@dataclass(frozen=True, eq=False)
class NormalizedDegrees:
    """Degrees divided by the mean degree (per side for bipartite domains).

    Nodes isolated in the layer keep ``theta == 0``; see :attr:`isolated`.
    """

    values: np.ndarray

    def __post_init__(self):
        values = np.asarray(self.values, dtype=np.float64).copy()
        if (values < 0).any():
            raise ValidationError("normalized degrees must be non-negative")
        values.flags.writeable = False
        object.__setattr__(self, "values", values)

    @classmethod
    def ones(cls, n: int) -> "NormalizedDegrees":
        return cls(np.ones(n))

    def __len__(self):
        return self.values.size

    @property
    def isolated(self) -> np.ndarray:
        return np.flatnonzero(self.values == 0)

    def products(self, i, j) -> np.ndarray:
        return self.values[np.asarray(i)] * self.values[np.asarray(j)]

    def epsilon(self, i, j) -> np.ndarray:
        """Pair perturbation ``theta_i * theta_j - 1``."""
        return self.products(i, j) - 1.0


def _normalize(deg: np.ndarray, domain: EdgeDomain) -> np.ndarray:
    if domain.bipartite is None:
        groups = [slice(None)]
    else:
        left = domain.bipartite[0]
        groups = [slice(0, left), slice(left, None)]
    theta = np.zeros_like(deg)
    for g in groups:
        mean = deg[g].mean()
        if mean <= 0:
            raise EmptyLayer("layer has no edges; mean degree is zero")
        theta[g] = deg[g] / mean
    return theta


def normalized_degrees(net: MultilayerNetwork, layer: int) -> NormalizedDegrees:
    if net.n_edges(layer) == 0:
        raise EmptyLayer(f"layer {layer} has no edges")
    return NormalizedDegrees(_normalize(net.degrees(layer), net.domain))


def _incident_pair_counts(domain: EdgeDomain, n: int) -> np.ndarray:
    """Domain pair endpoints at each node (self pairs count twice)."""
    if domain.bipartite is not None:
        left, right = domain.bipartite
        return np.concatenate([np.full(left, right), np.full(right, left)]).astype(float)
    per_side = n + 1 if domain.self_edges else n - 1
    if domain.directed:
        per_side = 2 * n if domain.self_edges else 2 * (n - 1)
    return np.full(n, float(per_side))


def observed_normalized_degrees(net: MultilayerNetwork, layer: int,
                                mask: PairMask | None) -> NormalizedDegrees:
    """Normalized degrees estimated from the observed pairs only.

    Each node's observed degree is divided by the fraction of its domain
    pairs that are observed, then normalized as usual.
    """
    if mask is None or mask.n_hidden == 0:
        return normalized_degrees(net, layer)
    n = net.n
    keys = mask.observed(net.layer_keys(layer))
    if keys.size == 0:
        raise EmptyLayer(f"layer {layer} has no observed edges")
    i, j = keys // n, keys % n
    deg = (np.bincount(i, minlength=n) + np.bincount(j, minlength=n)).astype(float)
    hi, hj = mask.hidden // n, mask.hidden % n
    hidden_ends = np.bincount(hi, minlength=n) + np.bincount(hj, minlength=n)
    total = _incident_pair_counts(net.domain, n)
    frac = 1.0 - hidden_ends / total
    with np.errstate(divide="ignore", invalid="ignore"):
        deg = np.where(frac > 0, deg / frac, 0.0)
    return NormalizedDegrees(_normalize(deg, net.domain))
