"""Samplers for correlated layers and the planted-partition benchmarks.

Randomness comes from numpy's counter-based Philox generator. The 128-bit
key is ``seed + (stream << 64)``, with one stream per purpose (community
sizes, degrees, layer 1, layer 2, ...). Within a layer stream the ``k``-th
uniform belongs to the ``k``-th domain pair in key order, so any chunk of
pairs can be regenerated independently with ``Philox.advance``.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass

import numpy as np

from . import kernels
from .dcsbm import CorrDCSBMParams, fit_mono_dcsbm
from .errors import (
    InfeasibleParams,
    InfeasibleRho,
    NegativeRhoDCSBM,
    PairProbabilityOverflow,
    ValidationError,
)
from .estimators import FEASIBILITY_TOL, CorrSBMParams, check_feasible
from .network import (
    BlockPartition,
    EdgeDomain,
    MultilayerNetwork,
    domain_pairs,
    edge_domain_size,
    normalized_degrees,
)

__all__ = [
    "STREAMS",
    "philox_generator",
    "pair_uniforms",
    "q_from_rho",
    "sample_corr_er",
    "sample_corr_er_sequential",
    "sample_corr_sbm",
    "sample_corr_dcsbm",
    "BenchmarkConfig",
    "GeneratedInstance",
    "make_benchmark",
    "truncated_power_law",
]

log = logging.getLogger(__name__)

STREAMS = {"layer": 1, "communities": 100, "degrees": 101, "folds": 102}
_UINT64 = 2**64


def _check_seed(seed) -> int:
    seed = int(seed)
    if not 0 <= seed < _UINT64:
        raise ValidationError(f"seed must be a 64-bit unsigned integer, got {seed}")
    return seed


def philox_generator(seed: int, stream: int = 0) -> np.random.Generator:
    """Generator for one named stream of a seed."""
    return np.random.Generator(np.random.Philox(key=_check_seed(seed) + (stream << 64)))


def pair_uniforms(seed: int, stream: int, n_pairs: int, start: int = 0) -> np.ndarray:
    """Uniforms for pairs ``start .. start + n_pairs - 1`` of a stream.

    ``pair_uniforms(s, t, n, start=k)`` equals the slice ``[k:k+n]`` of
    ``pair_uniforms(s, t, k + n)``.
    """
    bits = np.random.Philox(key=_check_seed(seed) + (stream << 64))
    # a Philox block holds four 64-bit words; random() uses one word per draw
    block, offset = divmod(start, 4)
    bits.advance(block)
    u = np.random.Generator(bits).random(n_pairs + offset)
    return u[offset:]


def _layer_stream(layer: int) -> int:
    return STREAMS["layer"] + layer


def q_from_rho(p1, p2, rho, tol: float = FEASIBILITY_TOL):
    """Joint probability with Pearson correlation ``rho`` given marginals.

    Works elementwise on arrays. Values within ``tol`` of the feasible
    region are moved onto its boundary.
    """
    p1, p2, rho = (np.asarray(x, dtype=np.float64) for x in (p1, p2, rho))
    if ((p1 <= 0) | (p1 >= 1) | (p2 <= 0) | (p2 >= 1)).any():
        raise InfeasibleRho("marginals must lie strictly inside (0, 1)")
    if (np.abs(rho) > 1 + tol).any():
        raise InfeasibleRho("correlation must lie in [-1, 1]")
    q = p1 * p2 + rho * np.sqrt(p1 * (1 - p1) * p2 * (1 - p2))
    lo = np.maximum(0.0, p1 + p2 - 1)
    hi = np.minimum(p1, p2)
    if ((q < lo - tol) | (q > hi + tol)).any():
        raise InfeasibleRho(f"rho={rho} is not attainable for p1={p1}, p2={p2}")
    q = np.clip(q, lo, hi)
    return float(q) if q.ndim == 0 else q


def _joint_outcomes(u, p1, p2, q):
    """Layer indicators from one uniform per pair.

    The unit interval is cut into [0, q) -> (1,1), [q, p1) -> (1,0),
    [p1, p1 + p2 - q) -> (0,1) and the rest -> (0,0).
    """
    x1 = u < p1
    x2 = (u < q) | ((u >= p1) & (u < p1 + p2 - q))
    return x1, x2


def _keys_from(i, j, n, sel):
    return (i[sel] * n + j[sel]).astype(np.int64)


def sample_corr_er(p1: float, p2: float, q: float, domain: EdgeDomain, n: int,
                   seed: int) -> MultilayerNetwork:
    """Two layers with independent pairs and joint outcome probabilities
    ``q, p1 - q, p2 - q, 1 - p1 - p2 + q``."""
    check_feasible(p1, p2, q)
    i, j = domain_pairs(domain, n)
    u = pair_uniforms(seed, _layer_stream(0), i.size)
    x1, x2 = _joint_outcomes(u, p1, p2, q)
    return MultilayerNetwork(n, (_keys_from(i, j, n, x1), _keys_from(i, j, n, x2)),
                             domain)


def sample_corr_er_sequential(p, q, domain: EdgeDomain, n: int,
                              seed: int) -> MultilayerNetwork:
    """Markov chain of layers: each layer drawn given the previous one.

    ``p`` has one edge probability per layer and ``q`` one joint
    probability per consecutive layer pair.
    """
    p = np.asarray(p, dtype=np.float64)
    q = np.asarray(q, dtype=np.float64)
    if p.ndim != 1 or q.shape != (p.size - 1,) or p.size < 1:
        raise ValidationError("need L edge probabilities and L - 1 joint probabilities")
    for l in range(q.size):
        check_feasible(p[l], p[l + 1], q[l])
        if not 0 < p[l] < 1:
            raise InfeasibleParams(f"layer {l} probability must be in (0, 1) to condition on it")
    if not 0 <= p[-1] <= 1:
        raise InfeasibleParams("edge probabilities must lie in [0, 1]")
    i, j = domain_pairs(domain, n)
    x = pair_uniforms(seed, _layer_stream(0), i.size) < p[0]
    layers = [_keys_from(i, j, n, x)]
    for l in range(q.size):
        given1 = q[l] / p[l]
        given0 = (p[l + 1] - q[l]) / (1 - p[l])
        u = pair_uniforms(seed, _layer_stream(l + 1), i.size)
        x = u < np.where(x, given1, given0)
        layers.append(_keys_from(i, j, n, x))
    return MultilayerNetwork(n, tuple(layers), domain)


def _bundle_arrays(params, partition, i, j, domain):
    r, s = partition.bundle_of(i, j, domain)
    masked = np.ma.getmaskarray(params.P1)[r, s]
    if masked.any():
        k = int(np.flatnonzero(masked)[0])
        raise InfeasibleParams(f"no parameters for bundle ({r[k]}, {s[k]})")
    return tuple(np.ma.filled(M, np.nan)[r, s] for M in (params.P1, params.P2, params.Q))


def _check_sbm_params(params):
    for r in range(params.K):
        for s in range(params.K):
            if not np.ma.getmaskarray(params.P1)[r, s]:
                check_feasible(float(params.P1[r, s]), float(params.P2[r, s]),
                               float(params.Q[r, s]))


def sample_corr_sbm(params: CorrSBMParams, partition: BlockPartition,
                    domain: EdgeDomain, seed: int) -> MultilayerNetwork:
    """Correlated ER sampling with bundle-specific ``(p1, p2, q)``."""
    if params.K != partition.K:
        raise ValidationError("parameters and partition differ in K")
    _check_sbm_params(params)
    n = partition.n
    i, j = domain_pairs(domain, n)
    p1, p2, q = _bundle_arrays(params, partition, i, j, domain)
    u = pair_uniforms(seed, _layer_stream(0), i.size)
    x1, x2 = _joint_outcomes(u, p1, p2, q)
    return MultilayerNetwork(n, (_keys_from(i, j, n, x1), _keys_from(i, j, n, x2)),
                             domain)


def sample_corr_dcsbm(params: CorrDCSBMParams, partition: BlockPartition | None,
                      domain: EdgeDomain, seed: int,
                      tol: float = FEASIBILITY_TOL) -> MultilayerNetwork:
    """Pair outcomes with ``P(A1) = a p1``, ``P(A2) = b p2`` and
    ``P(A1, A2) = sqrt(a b) q``.

    Every pair is checked before sampling; the first pair with an outcome
    probability outside ``[0, 1]`` raises :class:`PairProbabilityOverflow`.
    """
    partition = partition or params.partition
    n = partition.n
    i, j = domain_pairs(domain, n)
    p1, p2, q = _bundle_arrays(params, partition, i, j, domain)
    a = params.theta1.products(i, j)
    b = params.theta2.products(i, j)
    x1p, x2p, x12 = a * p1, b * p2, np.sqrt(a * b) * q
    joint = np.stack([x12, x1p - x12, x2p - x12, 1 - x1p - x2p + x12])
    bad = ((joint < -tol) | (joint > 1 + tol)).any(axis=0)
    if bad.any():
        k = int(np.flatnonzero(bad)[0])
        pair = (int(i[k]), int(j[k]))
        raise PairProbabilityOverflow(
            f"pair {pair} has outcome probabilities {joint[:, k]}", pair=pair)
    u = pair_uniforms(seed, _layer_stream(0), i.size)
    x1, x2 = _joint_outcomes(u, x1p, x2p, x12)
    return MultilayerNetwork(n, (_keys_from(i, j, n, x1), _keys_from(i, j, n, x2)),
                             domain)


# --- benchmarks --------------------------------------------------------------

VARIANTS = ("CorrSBM", "CorrDCSBM")


@dataclass(frozen=True)
class BenchmarkConfig:
    """Planted-partition benchmark settings.

    ``mu`` is the fraction of each node's expected edges placed without
    regard to communities; ``eta_k`` is the exponent of the truncated power
    law the expected degrees are drawn from on ``[k_min, k_max]``.
    """

    N: int
    n_c: int
    mu: float
    rho: float
    eta_k: float = -2.0
    k_min: float = 10.0
    k_max: float = 50.0
    dirichlet_concentration: float = 1.0
    variant: str = "CorrSBM"
    seed: int = 0

    def __post_init__(self):
        if self.N < 2 or self.n_c < 1 or self.n_c > self.N:
            raise ValidationError("need 1 <= n_c <= N and N >= 2")
        if 2 * self.n_c > self.N:
            raise ValidationError("every community needs at least two nodes")
        if not 0 < self.k_min <= self.k_max < self.N:
            raise ValidationError("need 0 < k_min <= k_max < N")
        if not 0 <= self.mu <= 1:
            raise ValidationError("mu must lie in [0, 1]")
        if not -1 <= self.rho <= 1:
            raise ValidationError("rho must lie in [-1, 1]")
        if self.dirichlet_concentration <= 0:
            raise ValidationError("dirichlet_concentration must be positive")
        if self.variant not in VARIANTS:
            raise ValidationError(f"variant must be one of {VARIANTS}")
        if self.variant == "CorrDCSBM" and self.rho < 0:
            raise NegativeRhoDCSBM("the degree-corrected benchmark supports rho >= 0 only")
        _check_seed(self.seed)

    def as_dict(self) -> dict:
        return {name: getattr(self, name) for name in self.__dataclass_fields__}


@dataclass(frozen=True, eq=False)
class GeneratedInstance:
    network: MultilayerNetwork
    partition: BlockPartition
    truth: CorrSBMParams | CorrDCSBMParams
    seed: int
    config: BenchmarkConfig | None = None
    n_clamped: int = 0


def truncated_power_law(rng: np.random.Generator, size: int, eta: float,
                        k_min: float, k_max: float) -> np.ndarray:
    """Inverse-CDF draws from the density ``k**eta`` on ``[k_min, k_max]``."""
    u = rng.random(size)
    if k_min == k_max:
        return np.full(size, float(k_min))
    if math.isclose(eta, -1.0):
        return k_min * (k_max / k_min) ** u
    e = eta + 1.0
    return (k_min**e + u * (k_max**e - k_min**e)) ** (1.0 / e)


def _community_sizes(cfg: BenchmarkConfig) -> np.ndarray:
    rng = philox_generator(cfg.seed, STREAMS["communities"])
    alpha = np.full(cfg.n_c, float(cfg.dirichlet_concentration))
    for _ in range(10_000):
        sizes = rng.multinomial(cfg.N, rng.dirichlet(alpha))
        if sizes.min() >= 2:
            return sizes
    raise ValidationError("could not draw community sizes with at least two nodes each")


def _planted_probabilities(labels, k, mu, i, j):
    """Expected-degree preserving mixture of within-community and global
    wiring: node ``i`` expects ``(1 - mu) k_i`` edges inside its community
    and ``mu k_i`` spread over all nodes."""
    K_total = k.sum()
    K_group = np.bincount(labels, weights=k)
    kk = k[i] * k[j]
    same = labels[i] == labels[j]
    P = mu * kk / K_total
    P[same] += (1 - mu) * kk[same] / K_group[labels[i[same]]]
    return np.minimum(P, 1.0)


def _mono_sbm(net, partition, layer):
    from .counts import bundle_pair_totals, bundle_sum

    m = bundle_sum(net.layer_keys(layer), 1, partition, net.domain, net.n)
    e = bundle_pair_totals(partition, net.domain).astype(np.float64)
    m, e = np.triu(m) + np.triu(m, 1).T, np.triu(e) + np.triu(e, 1).T
    return np.where(e > 0, m / np.where(e > 0, e, 1), 0.0)


def _bundle_q(P1, P2, rho):
    Q = P1 * P2
    inner = (P1 > 0) & (P1 < 1) & (P2 > 0) & (P2 < 1)
    Q[inner] = q_from_rho(P1[inner], P2[inner], np.full(inner.sum(), rho))
    return Q


def make_benchmark(cfg: BenchmarkConfig) -> GeneratedInstance:
    """Two-layer planted-partition benchmark with tunable ``mu`` and ``rho``.

    Layer 1 is drawn from the planted partition; the monolayer (DC)SBM
    fitted to it gives ``P1``; ``P2`` is ``P1`` (``rho >= 0``) or
    ``1 - P1``; ``Q`` has correlation ``rho`` in every bundle, and layer 2 is
    drawn conditionally on layer 1.
    """
    domain = EdgeDomain()
    N = cfg.N
    sizes = _community_sizes(cfg)
    labels = np.repeat(np.arange(cfg.n_c), sizes)
    partition = BlockPartition(labels, cfg.n_c)
    k = truncated_power_law(philox_generator(cfg.seed, STREAMS["degrees"]), N,
                            cfg.eta_k, cfg.k_min, cfg.k_max)

    i, j = domain_pairs(domain, N)
    P = _planted_probabilities(labels, k, cfg.mu, i, j)
    x1 = pair_uniforms(cfg.seed, _layer_stream(0), i.size) < P
    del P
    layer1 = MultilayerNetwork(N, (_keys_from(i, j, N, x1),), domain)

    if cfg.variant == "CorrSBM":
        P1 = _mono_sbm(layer1, partition, 0)
        theta = None
        a = b = np.ones(i.size)
    else:
        theta = normalized_degrees(layer1, 0)
        P1 = np.ma.filled(fit_mono_dcsbm(layer1, partition, theta, 0), 0.0)
        a = b = theta.products(i, j)
    P2 = P1.copy() if cfg.rho >= 0 else 1.0 - P1
    Q = _bundle_q(P1, P2, cfg.rho)

    r, s = partition.bundle_of(i, j, domain)
    probs, n_clamped = kernels.dcsbm_conditional_probs(
        a, b, x1.astype(np.uint8), P1[r, s], P2[r, s], Q[r, s])
    if n_clamped:
        log.info("clamped %d conditional probabilities into [0, 1]", n_clamped)
    x2 = pair_uniforms(cfg.seed, _layer_stream(1), i.size) < probs
    net = MultilayerNetwork(N, (layer1.layer_keys(0), _keys_from(i, j, N, x2)), domain)

    unmasked = np.zeros((cfg.n_c, cfg.n_c), dtype=bool)
    if cfg.variant == "CorrSBM":
        var = P1 * (1 - P1) * P2 * (1 - P2)
        defined = var > 0
        rho = np.where(defined, cfg.rho, 0.0)
        truth = CorrSBMParams(*(np.ma.masked_array(M, mask=unmasked) for M in (P1, P2, Q)),
                              np.ma.masked_array(rho, mask=~defined), True)
    else:
        truth = CorrDCSBMParams(*(np.ma.masked_array(M, mask=unmasked) for M in (P1, P2, Q)),
                                theta, theta, partition, True)
    return GeneratedInstance(net, partition, truth, cfg.seed, cfg, int(n_clamped))
