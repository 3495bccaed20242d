import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from corrlayers import (
    BlockPartition,
    PairMask,
    build_network,
    bundle_cooccurrence,
    degree_correction_sums,
    global_cooccurrence,
    normalized_degrees,
)
from corrlayers.counts import PairCounts
from corrlayers.network import domain_pairs

from conftest import DOMAINS, brute_counts, random_network


def test_three_node_example():
    # layer 1: 0-1, 1-2; layer 2: 0-1, 0-2
    net = build_network([[(0, 1), (1, 2)], [(0, 1), (0, 2)]], n=3)
    assert global_cooccurrence(net).as_tuple() == (1, 1, 1, 0)


def test_four_node_example_with_empty_class():
    net = build_network([[(0, 1), (1, 2)], [(0, 1), (0, 2)]], n=4)
    assert global_cooccurrence(net).as_tuple() == (1, 1, 1, 3)


@pytest.mark.parametrize("domain", DOMAINS)
def test_global_counts_match_brute_force(domain, rng):
    net = random_network(rng, 11, (0.3, 0.4), domain)
    counts = global_cooccurrence(net)
    assert counts.as_tuple() == brute_counts(net)
    assert counts.total == net.n_pairs


@pytest.mark.parametrize("domain", DOMAINS)
def test_bundle_counts_match_brute_force(domain, rng):
    n = 13
    net = random_network(rng, n, (0.35, 0.25), domain)
    labels = rng.integers(0, 3, n)
    part = BlockPartition(labels, 3)
    bundles = bundle_cooccurrence(net, part)
    i, j = domain_pairs(domain, n)
    for r, s in bundles.bundles():
        ri, sj = labels[i], labels[j]
        if domain.symmetric:
            sel = (np.minimum(ri, sj) == r) & (np.maximum(ri, sj) == s)
        else:
            sel = (ri == r) & (sj == s)
        pairs = list(zip(i[sel].tolist(), j[sel].tolist()))
        assert bundles[r, s].as_tuple() == brute_counts(net, pairs=pairs)


def test_masked_counts_match_brute_force(rng):
    n = 14
    net = random_network(rng, n, (0.3, 0.3))
    i, j = domain_pairs(net.domain, n)
    keys = i * n + j
    hidden = rng.choice(keys, 20, replace=False)
    mask = PairMask(hidden)
    keep = ~np.isin(keys, hidden)
    pairs = list(zip(i[keep].tolist(), j[keep].tolist()))
    assert global_cooccurrence(net, mask=mask).as_tuple() == brute_counts(net, pairs=pairs)
    part = BlockPartition(rng.integers(0, 2, n), 2)
    assert bundle_cooccurrence(net, part, mask=mask).global_counts().as_tuple() == \
        brute_counts(net, pairs=pairs)


@settings(max_examples=40, deadline=None)
@given(seed=st.integers(0, 2**32 - 1), n=st.integers(2, 15), K=st.integers(1, 4),
       directed=st.booleans())
def test_bundle_sum_identity_and_swap_symmetry(seed, n, K, directed):
    from corrlayers import EdgeDomain

    rng = np.random.default_rng(seed)
    net = random_network(rng, n, rng.uniform(0, 1, 2), EdgeDomain(directed=directed))
    part = BlockPartition(rng.integers(0, K, n), K)
    bundles = bundle_cooccurrence(net, part)
    assert bundles.global_counts() == global_cooccurrence(net)
    swapped = bundle_cooccurrence(net, part, 1, 0)
    np.testing.assert_array_equal(swapped.e10, bundles.e01)
    np.testing.assert_array_equal(swapped.e01, bundles.e10)
    np.testing.assert_array_equal(swapped.e11, bundles.e11)
    assert global_cooccurrence(net, 1, 0) == global_cooccurrence(net).swapped()
    for counts in (bundles.e11, bundles.e10, bundles.e01, bundles.e00):
        assert (counts >= 0).all()


def test_degree_correction_sums_match_brute_force(rng):
    n = 12
    net = random_network(rng, n, (0.4, 0.35))
    part = BlockPartition(rng.integers(0, 3, n), 3)
    t1, t2 = normalized_degrees(net, 0), normalized_degrees(net, 1)
    hidden = rng.choice(n * n, 10, replace=False)
    hidden = hidden[hidden // n < hidden % n]
    mask = PairMask(hidden)
    sums = degree_correction_sums(net, part, t1, t2, mask)
    A, B = set(net.edge_list(0)), set(net.edge_list(1))
    expect = np.zeros((4, 3, 3))
    i, j = domain_pairs(net.domain, n)
    for x, y in zip(i.tolist(), j.tolist()):
        if mask.is_hidden([x * n + y])[0]:
            continue
        r, s = sorted((part.labels[x], part.labels[y]))
        e1 = t1.values[x] * t1.values[y] - 1
        e2 = t2.values[x] * t2.values[y] - 1
        a, b = (x, y) in A, (x, y) in B
        if a and not b:
            expect[0, r, s] += e2 - e1
        elif b and not a:
            expect[1, r, s] += e1 - e2
        elif not a and not b:
            expect[2, r, s] += e1
            expect[3, r, s] += e2
    for k, got in enumerate((sums.g10, sums.g01, sums.f1, sums.f2)):
        np.testing.assert_allclose(np.triu(got), expect[k], atol=1e-10)


def test_pair_counts_reject_negative():
    with pytest.raises(ValueError):
        PairCounts(1, -1, 0, 0)
