"""Layer-correlation matrices and JSON/CSV serialization of results.

Numbers are written with 12 significant digits and undefined values as
the token ``"n/a"``. Reports carry no timestamps, so identical inputs give
byte-identical files.
"""

from __future__ import annotations

import csv
import json
import math
from dataclasses import dataclass

import numpy as np

from .counts import bundle_cooccurrence, global_cooccurrence
from .errors import FewerThanTwoLayers
from .estimators import effective_correlation, fit_corr_sbm
from .metrics import Curve
from .network import BlockPartition, MultilayerNetwork

__all__ = [
    "SCHEMA_VERSION",
    "UNDEFINED",
    "LayerCorrelationMatrix",
    "layer_correlation_matrix",
    "bundle_correlations",
    "to_jsonable",
    "dump_json",
    "write_curve_csv",
]

SCHEMA_VERSION = "1.0"
UNDEFINED = "n/a"
SIG_DIGITS = 12


@dataclass(frozen=True, eq=False)
class LayerCorrelationMatrix:
    """Effective correlations between all layer pairs.

    ``values`` is a masked ``L x L`` array; masked entries are undefined
    (a layer that is empty or complete).
    """

    values: np.ma.MaskedArray
    names: tuple

    @property
    def n_layers(self) -> int:
        return self.values.shape[0]

    def _upper(self):
        r, c = np.triu_indices(self.n_layers, 1)
        keep = ~np.ma.getmaskarray(self.values)[r, c]
        return r[keep], c[keep]

    @property
    def mean_offdiagonal(self) -> float | None:
        r, c = self._upper()
        return float(self.values.data[r, c].mean()) if r.size else None

    @property
    def top_pair(self) -> tuple[str, str, float] | None:
        """Layer pair with the largest correlation (first in row-major order)."""
        r, c = self._upper()
        if not r.size:
            return None
        k = int(np.argmax(self.values.data[r, c]))
        return self.names[r[k]], self.names[c[k]], float(self.values.data[r[k], c[k]])

    def as_dict(self) -> dict:
        top = self.top_pair
        return {"layers": list(self.names), "matrix": self.values,
                "mean_offdiagonal": self.mean_offdiagonal,
                "top_pair": None if top is None else
                {"layers": [top[0], top[1]], "correlation": top[2]}}


def layer_correlation_matrix(net: MultilayerNetwork) -> LayerCorrelationMatrix:
    """Effective correlation for every pair of layers, without any partition."""
    L = net.n_layers
    if L < 2:
        raise FewerThanTwoLayers(f"need at least two layers, got {L}")
    values = np.zeros((L, L))
    undefined = np.zeros((L, L), dtype=bool)
    for a in range(L):
        for b in range(a, L):
            rho = effective_correlation(global_cooccurrence(net, a, b))
            if rho is None:
                undefined[a, b] = undefined[b, a] = True
            else:
                values[a, b] = values[b, a] = rho
    for a in range(L):
        if not undefined[a, a]:
            values[a, a] = 1.0
    return LayerCorrelationMatrix(np.ma.masked_array(values, mask=undefined), net.layer_names)


def bundle_correlations(net: MultilayerNetwork, partition: BlockPartition) -> dict:
    """Per-bundle correlation matrices for every layer pair ``(a, b)``, a < b."""
    out = {}
    for a in range(net.n_layers):
        for b in range(a + 1, net.n_layers):
            out[(a, b)] = fit_corr_sbm(bundle_cooccurrence(net, partition, a, b)).Rho
    return out


def _number(x):
    if x is None:
        return UNDEFINED
    x = float(x)
    if math.isnan(x):
        return UNDEFINED
    if math.isinf(x):
        return "inf" if x > 0 else "-inf"
    return float(f"{x:.{SIG_DIGITS}g}")


def to_jsonable(obj):
    """Convert results into JSON-ready values (masked or NaN become ``"n/a"``)."""
    if isinstance(obj, np.ma.MaskedArray):
        data = np.asarray(obj.data, dtype=np.float64)
        mask = np.ma.getmaskarray(obj)
        return to_jsonable(np.where(mask, np.nan, data))
    if isinstance(obj, np.ndarray):
        return [to_jsonable(x) for x in obj.tolist()] if obj.ndim else to_jsonable(obj.item())
    if isinstance(obj, dict):
        return {str(k): to_jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [to_jsonable(x) for x in obj]
    if isinstance(obj, (bool, np.bool_)):
        return bool(obj)
    if isinstance(obj, (int, np.integer)):
        return int(obj)
    if isinstance(obj, (float, np.floating)) or obj is None:
        return _number(obj)
    return obj


def dump_json(document: dict, path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(to_jsonable(document), fh, indent=2)
        fh.write("\n")


def write_curve_csv(curve: Curve, path, columns: tuple[str, str]) -> None:
    with open(path, "w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(["threshold", *columns])
        for t, x, y in zip(curve.thresholds, curve.x, curve.y):
            writer.writerow([_number(t), _number(x), _number(y)])
