"""Edge prediction in one layer from another, with K-fold cross-validation.

Each model turns a fit on the observed pairs into a probability for every
hidden pair of the target layer. Correlated models condition on the pair's
state in the source layer; monolayer models ignore it.
"""

from __future__ import annotations

import logging
import warnings
from dataclasses import dataclass, field
from enum import Enum

import numpy as np

from . import kernels
from .counts import (
    bundle_cooccurrence,
    degree_correction_sums,
    global_cooccurrence,
)
from .dcsbm import fit_corr_dcsbm_approx, fit_mono_dcsbm
from .errors import (
    DegenerateFoldWarning,
    EmptyInput,
    EmptyLayer,
    MissingBundleFit,
    MissingBundleFitWarning,
    MissingPartition,
    OneClassOnly,
    TooFewPairs,
    UndefinedRho,
    ValidationError,
)
from .estimators import CorrERParams, CorrSBMParams, fit_corr_er, fit_corr_sbm
from .generators import STREAMS, philox_generator
from .metrics import Curve, pr_auc, roc_auc
from .network import (
    BlockPartition,
    EdgeDomain,
    MultilayerNetwork,
    NormalizedDegrees,
    PairMask,
    domain_keys,
    edge_domain_size,
    normalized_degrees,
    observed_normalized_degrees,
)

__all__ = [
    "ModelKind",
    "FittedModel",
    "PredictionReport",
    "fit_model",
    "conditional_probs",
    "positive_rho_ordering_check",
    "kfold_split",
    "cross_validate",
]

log = logging.getLogger(__name__)


class ModelKind(str, Enum):
    CorrER = "CorrER"
    CorrSBM = "CorrSBM"
    CorrCM = "CorrCM"
    CorrDCSBM = "CorrDCSBM"
    MonoSBM = "MonoSBM"
    MonoDCSBM = "MonoDCSBM"

    @property
    def uses_partition(self) -> bool:
        return self in (ModelKind.CorrSBM, ModelKind.CorrDCSBM,
                        ModelKind.MonoSBM, ModelKind.MonoDCSBM)

    @property
    def degree_corrected(self) -> bool:
        return self in (ModelKind.CorrCM, ModelKind.CorrDCSBM, ModelKind.MonoDCSBM)

    @property
    def correlated(self) -> bool:
        return self.value.startswith("Corr")

    @classmethod
    def parse(cls, name) -> "ModelKind":
        if isinstance(name, cls):
            return name
        for kind in cls:
            if kind.value.lower() == str(name).lower():
                return kind
        raise ValidationError(f"unknown model {name!r}; choose from "
                              f"{', '.join(k.value for k in cls)}")


@dataclass(frozen=True, eq=False)
class FittedModel:
    """Bundle propensities of any model kind as plain ``K x K`` arrays.

    Unfitted bundles hold NaN. Models without degree correction have
    ``theta1 = theta2 = None``; monolayer models only use ``P2``.
    """

    kind: ModelKind
    partition: BlockPartition
    P1: np.ndarray
    P2: np.ndarray
    Q: np.ndarray
    theta1: NormalizedDegrees | None = None
    theta2: NormalizedDegrees | None = None
    fallback: CorrERParams | None = None
    source: object = None

    @property
    def fitted(self) -> np.ndarray:
        return np.isfinite(self.P2)


def _filled(M):
    return np.ma.filled(np.ma.asarray(M, dtype=np.float64), np.nan)


def fit_model(kind, net: MultilayerNetwork, partition: BlockPartition | None = None,
              mask: PairMask | None = None, layers=(0, 1)) -> FittedModel:
    """Fit one model on the observed pairs of ``net``.

    The source layer ``layers[0]`` is always fully observed; ``mask`` hides
    pairs of the target layer ``layers[1]`` and, for the likelihoods, the
    pair as a whole.
    """
    kind = ModelKind.parse(kind)
    la, lb = layers
    if net.n_layers < 2 and kind.correlated:
        from .errors import FewerThanTwoLayers

        raise FewerThanTwoLayers("correlated models need two layers")
    if kind.uses_partition:
        if partition is None:
            raise MissingPartition(f"{kind.value} needs a block partition")
        partition.check(net)
    else:
        partition = BlockPartition.single(net.n)
    fallback = fit_corr_er(global_cooccurrence(net, la, lb, mask))
    nan = np.full((partition.K, partition.K), np.nan)

    if kind in (ModelKind.CorrER, ModelKind.CorrSBM, ModelKind.MonoSBM):
        params = fit_corr_sbm(bundle_cooccurrence(net, partition, la, lb, mask))
        P1, P2, Q = (_filled(M) for M in (params.P1, params.P2, params.Q))
        if kind == ModelKind.MonoSBM:
            P1, Q = nan, nan
        return FittedModel(kind, partition, P1, P2, Q, fallback=fallback, source=params)

    theta2 = observed_normalized_degrees(net, lb, mask)
    if kind == ModelKind.MonoDCSBM:
        P2 = _filled(fit_mono_dcsbm(net, partition, theta2, lb, mask))
        return FittedModel(kind, partition, nan, P2, nan, None, theta2, fallback)

    theta1 = normalized_degrees(net, la)
    bundles = bundle_cooccurrence(net, partition, la, lb, mask)
    sums = degree_correction_sums(net, partition, theta1, theta2, mask, la, lb)
    params = fit_corr_dcsbm_approx(bundles, sums, partition)
    return FittedModel(kind, partition, _filled(params.P1), _filled(params.P2),
                       _filled(params.Q), theta1, theta2, fallback, params)


def conditional_probs(model: FittedModel, net: MultilayerNetwork, keys,
                      source_layer: int = 0, strict: bool = False) -> np.ndarray:
    """Probability that each pair in ``keys`` is an edge of the target layer.

    Correlated models use ``P(A2 = 1 | A1)``, monolayer models the marginal.
    Results are clamped into ``[0, 1]``. Pairs in a bundle without a fit use
    the global correlated ER fit and trigger a
    :class:`MissingBundleFitWarning` (or :class:`MissingBundleFit` when
    ``strict``).
    """
    keys = np.asarray(keys, dtype=np.int64)
    n = net.n
    i, j = keys // n, keys % n
    r, s = model.partition.bundle_of(i, j, net.domain)
    p1, p2, q = model.P1[r, s], model.P2[r, s], model.Q[r, s]
    ones = np.ones(keys.size)
    a = model.theta1.products(i, j) if model.theta1 is not None else ones
    b = model.theta2.products(i, j) if model.theta2 is not None else ones

    missing = ~np.isfinite(p2) | (model.kind.correlated & ~(np.isfinite(p1) & np.isfinite(q)))
    if missing.any():
        msg = f"{int(missing.sum())} pairs fall in bundles without a fit"
        if strict or model.fallback is None:
            raise MissingBundleFit(msg)
        warnings.warn(msg + "; using the global correlated ER fit", MissingBundleFitWarning)
        fb = model.fallback
        p1, p2, q = p1.copy(), p2.copy(), q.copy()
        p1[missing], p2[missing], q[missing] = fb.p1, fb.p2, fb.q
        a, b = a.copy(), b.copy()
        a[missing] = b[missing] = 1.0

    if not model.kind.correlated:
        return np.clip(b * p2, 0.0, 1.0)
    x1 = net.has_edge(source_layer, keys).astype(np.uint8)
    probs, n_clamped = kernels.dcsbm_conditional_probs(a, b, x1, p1, p2, q)
    if n_clamped:
        log.debug("%s: clamped %d probabilities into [0, 1]", model.kind.value, n_clamped)
    return probs


def _ordering_holds(p1, p2, q) -> bool:
    rho = q - p1 * p2
    given1 = q / p1
    given0 = (p2 - q) / (1 - p1)
    if rho > 0:
        return given1 > p2 > given0
    if rho < 0:
        return given1 < p2 < given0
    return bool(np.isclose(given1, p2) and np.isclose(given0, p2))


def positive_rho_ordering_check(params) -> bool:
    """Whether conditioning on an edge in layer 1 moves the layer-2 score in
    the direction of the correlation, for one bundle or all bundles."""
    if isinstance(params, CorrSBMParams):
        checked = False
        for r in range(params.K):
            for s in range(params.K):
                bundle = params.bundle(r, s)
                if bundle is not None and bundle.rho is not None:
                    checked = True
                    if not _ordering_holds(bundle.p1, bundle.p2, bundle.q):
                        return False
        if not checked:
            raise UndefinedRho("no bundle has a defined correlation")
        return True
    p1, p2, q = params.p1, params.p2, params.q
    if not (0 < p1 < 1 and 0 < p2 < 1):
        raise UndefinedRho("correlation undefined for degenerate marginals")
    return _ordering_holds(p1, p2, q)


def kfold_split(domain: EdgeDomain, n: int, k_folds: int, seed: int) -> list[PairMask]:
    """Uniformly random partition of the pair domain into ``k_folds`` holdouts."""
    if k_folds < 2:
        raise ValidationError("need at least two folds")
    size = edge_domain_size(domain, n)
    if size < k_folds:
        raise TooFewPairs(f"{size} pairs cannot fill {k_folds} folds")
    keys = domain_keys(domain, n)
    perm = philox_generator(seed, STREAMS["folds"]).permutation(size)
    return [PairMask(keys[part]) for part in np.array_split(perm, k_folds)]


@dataclass(frozen=True, eq=False)
class PredictionReport:
    """Cross-validated predictions of one model.

    ``auc`` and ``aupr`` are computed on the scores of all folds pooled;
    ``fold_auc`` and ``fold_aupr`` hold the per-fold values (NaN for skipped
    folds).
    """

    model: ModelKind
    fold_keys: list
    fold_scores: list
    fold_labels: list
    roc: Curve
    pr: Curve
    auc: float
    aupr: float
    fold_auc: np.ndarray
    fold_aupr: np.ndarray
    skipped_folds: tuple = ()
    seed: int = 0
    extra: dict = field(default_factory=dict)

    @property
    def k_folds(self) -> int:
        return len(self.fold_keys)

    def as_dict(self) -> dict:
        return {"model": self.model.value, "auc": self.auc, "aupr": self.aupr,
                "fold_auc": self.fold_auc.tolist(), "fold_aupr": self.fold_aupr.tolist(),
                "skipped_folds": list(self.skipped_folds), "k_folds": self.k_folds,
                "n_scored": int(sum(k.size for k in self.fold_keys))}


def cross_validate(net: MultilayerNetwork, partition: BlockPartition | None, model,
                   k_folds: int = 5, seed: int = 0, layers=(0, 1),
                   strict: bool = False) -> PredictionReport:
    """Hide each fold of the target layer in turn, fit, and score it.

    The source layer stays fully observed. Folds whose holdout contains a
    single class, or whose observed data cannot be fitted, are skipped with
    a :class:`DegenerateFoldWarning`.
    """
    kind = ModelKind.parse(model)
    la, lb = layers
    if kind.uses_partition and partition is None:
        raise MissingPartition(f"{kind.value} needs a block partition")
    masks = kfold_split(net.domain, net.n, k_folds, seed)
    keys_out, scores_out, labels_out, skipped = [], [], [], []
    fold_auc = np.full(k_folds, np.nan)
    fold_aupr = np.full(k_folds, np.nan)
    for f, mask in enumerate(masks):
        hidden = mask.hidden
        labels = net.has_edge(lb, hidden)
        try:
            fitted = fit_model(kind, net, partition, mask, layers)
        except (EmptyLayer, EmptyInput) as exc:
            warnings.warn(f"fold {f} skipped: {exc}", DegenerateFoldWarning)
            skipped.append(f)
            continue
        scores = conditional_probs(fitted, net, hidden, la, strict)
        keys_out.append(hidden)
        scores_out.append(scores)
        labels_out.append(labels)
        try:
            fold_auc[f] = roc_auc(scores, labels)[1]
            fold_aupr[f] = pr_auc(scores, labels)[1]
        except OneClassOnly:
            warnings.warn(f"fold {f} holdout has a single class", DegenerateFoldWarning)
    if not scores_out:
        raise OneClassOnly("every fold was skipped")
    pooled_scores = np.concatenate(scores_out)
    pooled_labels = np.concatenate(labels_out)
    roc, auc = roc_auc(pooled_scores, pooled_labels)
    pr, aupr = pr_auc(pooled_scores, pooled_labels)
    return PredictionReport(kind, keys_out, scores_out, labels_out, roc, pr, auc, aupr,
                            fold_auc, fold_aupr, tuple(skipped), seed)
