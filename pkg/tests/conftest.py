import numpy as np
import pytest

from corrlayers import kernels
from corrlayers.network import EdgeDomain

BACKENDS = kernels.available_backends()

DOMAINS = [
    EdgeDomain(),
    EdgeDomain(self_edges=True),
    EdgeDomain(directed=True),
    EdgeDomain(directed=True, self_edges=True),
]


@pytest.fixture(params=BACKENDS)
def backend(request, monkeypatch):
    """Run the test once per available kernel backend."""
    monkeypatch.setattr(kernels, "_impl", kernels.get_backend(request.param))
    return request.param


def random_network(rng, n, p=(0.3, 0.3), domain=None):
    """Independent Bernoulli layers, built pair by pair as a test oracle."""
    from corrlayers import build_network
    from corrlayers.network import domain_pairs

    domain = domain or EdgeDomain()
    i, j = domain_pairs(domain, n)
    layers = []
    for prob in p:
        keep = rng.random(i.size) < prob
        layers.append(list(zip(i[keep].tolist(), j[keep].tolist())))
    return build_network(layers, domain, n)


def brute_counts(net, a=0, b=1, pairs=None):
    """(e11, e10, e01, e00) by looping over every domain pair."""
    from corrlayers.network import domain_pairs

    set_a, set_b = set(net.edge_list(a)), set(net.edge_list(b))
    if pairs is None:
        i, j = domain_pairs(net.domain, net.n)
        pairs = zip(i.tolist(), j.tolist())
    out = [0, 0, 0, 0]
    for pair in pairs:
        x, y = pair in set_a, pair in set_b
        out[0 if x and y else 1 if x else 2 if y else 3] += 1
    return tuple(out)


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


ACCEPTANCE_LINES = []


@pytest.fixture
def acceptance():
    """Record one pass/fail line per criterion; printed in the summary."""

    def record(number, ok, detail):
        line = f"{'PASS' if ok else 'FAIL'} criterion {number}: {detail}"
        ACCEPTANCE_LINES.append(line)
        print(line)
        return ok

    return record


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in sorted(ACCEPTANCE_LINES, key=lambda s: int(s.split()[2].rstrip(":"))):
            terminalreporter.write_line(line)
