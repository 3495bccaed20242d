"""Reading and writing multilayer edge lists and partitions.

Canonical edge-list format, one edge per line::

    # comment
    layer<TAB>source<TAB>target[<TAB>weight]

Any whitespace separates fields. Layer and node identifiers are arbitrary
tokens, numbered in order of first appearance. Partition files hold
``node<TAB>block`` lines.

:func:`read_multiplex_edges` converts the public multiplex dataset layout
(``layerID node node weight`` plus a ``layerID layerLabel`` table) into the
same in-memory network.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import (
    DimensionMismatch,
    EmptyInput,
    PartitionMismatch,
    ValidationError,
)
from .network import BlockPartition, EdgeDomain, MultilayerNetwork, canonical_keys

__all__ = [
    "NodeIndex",
    "read_edge_list",
    "write_edge_list",
    "read_partition_pairs",
    "read_partition",
    "write_partition",
    "read_multiplex_edges",
    "threshold_by_quantile",
]


@dataclass
class NodeIndex:
    """Mapping between node tokens and indices ``0..n-1``.

    Bipartite networks keep separate namespaces for the two sides; right
    side nodes are numbered after all left side nodes.
    """

    left: dict
    right: dict | None = None

    @property
    def n(self) -> int:
        return len(self.left) + (len(self.right) if self.right is not None else 0)

    def names(self) -> list[str]:
        names = list(self.left)
        if self.right is not None:
            names += list(self.right)
        return names

    def index(self, token: str) -> int:
        if token in self.left:
            return self.left[token]
        if self.right is not None and token in self.right:
            return len(self.left) + self.right[token]
        raise PartitionMismatch(f"unknown node {token!r}")


def _records(path):
    with open(path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, 1):
            line = line.split("#", 1)[0].strip()
            if line:
                yield lineno, line.split()


def threshold_by_quantile(weights: np.ndarray, quantile: float) -> np.ndarray:
    """Mask of weights at or above the given quantile."""
    if not 0 <= quantile <= 1:
        raise ValidationError("weight threshold quantile must lie in [0, 1]")
    if weights.size == 0:
        return np.zeros(0, dtype=bool)
    return weights >= np.quantile(weights, quantile)


def _assemble(rows, domain, weight_quantile, extra_nodes, layer_order=None):
    """Build a network from ``(layer, src, dst, weight)`` token rows.

    ``domain`` is ``(directed, self_edges, bipartite)``.
    """
    directed, self_edges, bipartite = domain
    left, right = {}, ({} if bipartite else None)
    layer_ids = dict.fromkeys(layer_order or [])
    per_layer = {}
    for layer, src, dst, weight in rows:
        layer_ids.setdefault(layer, None)
        for token, side in ((src, left), (dst, right if bipartite else left)):
            side.setdefault(token, len(side))
        per_layer.setdefault(layer, []).append((src, dst, weight))
    for token in extra_nodes:
        if token not in left and (right is None or token not in right):
            left.setdefault(token, len(left))
    index = NodeIndex(left, right)
    if bipartite:
        domain = EdgeDomain(bipartite=(len(left), len(right)))
    else:
        domain = EdgeDomain(directed=directed, self_edges=self_edges)
    n = index.n
    layers = []
    for layer in layer_ids:
        entries = per_layer.get(layer, [])
        i = np.array([left[s] for s, _, _ in entries], dtype=np.int64)
        if bipartite:
            j = np.array([len(left) + right[d] for _, d, _ in entries], dtype=np.int64)
        else:
            j = np.array([left[d] for _, d, _ in entries], dtype=np.int64)
        if weight_quantile is not None and entries:
            w = np.array([1.0 if x is None else x for _, _, x in entries])
            keep = threshold_by_quantile(w, weight_quantile)
            i, j = i[keep], j[keep]
        if not self_edges:
            loop = i == j
            i, j = i[~loop], j[~loop]
        layers.append(canonical_keys(i, j, domain, n))
    net = MultilayerNetwork(n, tuple(layers), domain, tuple(str(x) for x in layer_ids),
                            tuple(index.names()))
    return net, index


def _parse_weight(fields, path, lineno):
    if len(fields) < 4:
        return None
    try:
        return float(fields[3])
    except ValueError as exc:
        raise ValidationError(f"{path}:{lineno}: bad weight {fields[3]!r}") from exc


def read_edge_list(path, directed: bool = False, self_edges: bool = False,
                   bipartite: bool = False,
                   weight_threshold_quantile: float | None = None,
                   extra_nodes=()) -> tuple[MultilayerNetwork, NodeIndex]:
    """Read the canonical multilayer edge-list format.

    Self-edges in the file are dropped unless ``self_edges`` is set. With
    ``bipartite`` the sources form the left side and the targets the right
    side. ``extra_nodes`` adds nodes that have no edges (for example from a
    partition file); they join the left side.
    """
    domain = (directed, self_edges, bipartite)
    rows = []
    for lineno, fields in _records(path):
        if len(fields) < 3:
            raise ValidationError(f"{path}:{lineno}: expected 'layer source target [weight]'")
        rows.append((fields[0], fields[1], fields[2], _parse_weight(fields, path, lineno)))
    if not rows:
        raise EmptyInput(f"{path}: no edges")
    return _assemble(rows, domain, weight_threshold_quantile, extra_nodes)


def write_edge_list(net: MultilayerNetwork, path, node_names=None) -> None:
    names = list(node_names or net.node_names or range(net.n))
    with open(path, "w", encoding="utf-8") as fh:
        fh.write("# layer\tsource\ttarget\n")
        for layer, lname in enumerate(net.layer_names):
            i, j = net.edges(layer)
            for a, b in zip(i.tolist(), j.tolist()):
                fh.write(f"{lname}\t{names[a]}\t{names[b]}\n")


def read_partition_pairs(path) -> list[tuple[str, str]]:
    pairs = []
    for lineno, fields in _records(path):
        if len(fields) != 2:
            raise ValidationError(f"{path}:{lineno}: expected 'node block'")
        pairs.append((fields[0], fields[1]))
    if not pairs:
        raise EmptyInput(f"{path}: empty partition")
    return pairs


def _block_order(tokens):
    unique = list(dict.fromkeys(tokens))
    try:
        return sorted(unique, key=int)
    except ValueError:
        return sorted(unique)


def read_partition(path, index: NodeIndex) -> BlockPartition:
    """Block labels for every node of ``index``.

    Block names are numbered in sorted order (numerically when they are all
    integers).
    """
    pairs = read_partition_pairs(path)
    blocks = {b: k for k, b in enumerate(_block_order(b for _, b in pairs))}
    labels = np.full(index.n, -1, dtype=np.int64)
    for node, block in pairs:
        k = index.index(node)
        if labels[k] >= 0 and labels[k] != blocks[block]:
            raise PartitionMismatch(f"node {node!r} assigned to two blocks")
        labels[k] = blocks[block]
    missing = np.flatnonzero(labels < 0)
    if missing.size:
        names = index.names()
        raise PartitionMismatch(f"{missing.size} nodes have no block, e.g. {names[missing[0]]!r}")
    return BlockPartition(labels, len(blocks))


def write_partition(partition: BlockPartition, path, node_names=None) -> None:
    names = list(node_names or range(partition.n))
    if len(names) != partition.n:
        raise DimensionMismatch("one name per node required")
    with open(path, "w", encoding="utf-8") as fh:
        fh.write("# node\tblock\n")
        for name, label in zip(names, partition.labels.tolist()):
            fh.write(f"{name}\t{label}\n")


def read_multiplex_edges(edges_path, layers_path=None, directed: bool = False,
                         weight_threshold_quantile: float | None = None,
                         extra_nodes=()) -> tuple[MultilayerNetwork, NodeIndex]:
    """Read a ``layerID node node weight`` multiplex file.

    ``layers_path`` names the layers (a ``layerID layerLabel`` table with a
    header line); layers are ordered by ID.
    """
    rows = []
    for lineno, fields in _records(edges_path):
        if len(fields) < 3:
            raise ValidationError(f"{edges_path}:{lineno}: expected 'layer node node [weight]'")
        rows.append((fields[0], fields[1], fields[2], _parse_weight(fields, edges_path, lineno)))
    if not rows:
        raise EmptyInput(f"{edges_path}: no edges")
    labels = {}
    if layers_path is not None:
        for _, fields in _records(layers_path):
            if fields[0].lower().startswith("layerid"):
                continue
            labels[fields[0]] = " ".join(fields[1:]) or fields[0]
    order = _block_order([r[0] for r in rows] + list(labels))
    net, index = _assemble(rows, (directed, False, False), weight_threshold_quantile,
                           extra_nodes, layer_order=order)
    names = tuple(labels.get(layer, layer) for layer in order)
    net = MultilayerNetwork(net.n, net.layers, net.domain, names, net.node_names)
    return net, index


