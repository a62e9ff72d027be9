import itertools
import math

import numpy as np
import pytest

from randcomp.netmodel import NetworkSpec, PartySpec, SourceSpec, validate_network


def random_structured(rng, n_parties=2, n_sources=2, max_x=2, max_a=2, max_r=3,
                      deterministic=False):
    """Random structured network; every source is seen by at least one party."""
    sizes = [int(rng.integers(1, max_r + 1)) for _ in range(n_sources)]
    sources = []
    for k, size in enumerate(sizes):
        vis = {int(i) for i in rng.choice(n_parties, size=rng.integers(1, n_parties + 1),
                                          replace=False)}
        sources.append(SourceSpec(f"s{k}", rng.dirichlet(np.ones(size)), frozenset(vis)))
    parties = []
    for i in range(n_parties):
        x, a = int(rng.integers(1, max_x + 1)), int(rng.integers(1, max_a + 1))
        n_tuples = math.prod(sizes[k] for k, s in enumerate(sources) if i in s.visible_to)
        if deterministic:
            out = rng.integers(0, a, size=(x, n_tuples))
            strat = (out[..., None] == np.arange(a)).astype(float)
        else:
            strat = rng.dirichlet(np.ones(a), size=(x, n_tuples))
        parties.append(PartySpec(f"P{i}", x, a, strat))
    return validate_network(NetworkSpec(sources, parties=parties))


def brute_force_evaluate(net):
    """p(a|x) by explicit loops over every (x, r, a); no numpy contraction."""
    sizes = net.source_sizes
    table = np.zeros((net.input_size, net.output_size))
    if net.is_blackbox:
        for r_idx, r in enumerate(itertools.product(*(range(n) for n in sizes))):
            w = math.prod(net.sources[k].pmf[v] for k, v in enumerate(r))
            table += w * net.kernel[:, r_idx, :]
        return table
    xs = list(itertools.product(*(range(p.input_size) for p in net.parties)))
    as_ = list(itertools.product(*(range(p.output_size) for p in net.parties)))
    for r in itertools.product(*(range(n) for n in sizes)):
        w = math.prod(net.sources[k].pmf[v] for k, v in enumerate(r))
        if w == 0:
            continue
        locals_ = []
        for i in range(len(net.parties)):
            idx = 0
            for k in net.visible_positions(i):
                idx = idx * sizes[k] + r[k]
            locals_.append(idx)
        for xi, x in enumerate(xs):
            for ai, a in enumerate(as_):
                prod = w
                for i, p in enumerate(net.parties):
                    prod *= p.strategy[x[i], locals_[i], a[i]]
                table[xi, ai] += prod
    return table


@pytest.fixture
def rng():
    return np.random.default_rng(20261018)
