"""Constructors for concrete networks and their target distributions."""

import numpy as np

from .errors import InvalidParams
from .netmodel import (
    ConditionalDistribution,
    NetworkSpec,
    PartySpec,
    SourceSpec,
    as_pmf,
    validate_network,
)
from .prng import make_rng


def _one_hot(outputs, size):
    """Strategy table from an integer array of deterministic outputs."""
    outputs = np.asarray(outputs, dtype=int)
    return (outputs[..., None] == np.arange(size)).astype(float)


def build_correlated_no_input(h, q):
    """h parties that all output the value of one shared source.

    The source ranges over ``supp(q)`` with weights ``q``; value ``j`` of the
    source is the ``j``-th supported output.  Every party has a single
    dummy input and ``len(q)`` outputs.

    Returns
    -------
    (ValidatedNetwork, ConditionalDistribution)
        The network and the target ``p(a_1..a_h) = q(a_1)`` on the diagonal.
    """
    if int(h) != h or h < 2:
        raise InvalidParams(f"h must be an integer >= 2, got {h!r}")
    h = int(h)
    try:
        q = as_pmf(q, "q")
    except ValueError as exc:
        raise InvalidParams(str(exc)) from exc
    support = np.flatnonzero(q > 0)
    k = len(q)
    strategy = _one_hot(support, k)[None, :, :]
    parties = [PartySpec(f"P{i}", 1, k, strategy) for i in range(h)]
    source = SourceSpec("R", q[support], frozenset(range(h)))
    net = validate_network(NetworkSpec([source], parties=parties))

    target = np.zeros(k**h)
    diagonal = sum(k**j for j in range(h))
    target[support * diagonal] = q[support]
    return net, ConditionalDistribution(target[None, :], (1,) * h, (k,) * h)


def target_matching_distribution(x_size):
    """Two-party table: equal fair bits on equal inputs, uniform otherwise."""
    if int(x_size) != x_size or x_size < 1:
        raise InvalidParams(f"x_size must be a positive integer, got {x_size!r}")
    x_size = int(x_size)
    table = np.full((x_size * x_size, 4), 0.25)
    for x in range(x_size):
        table[x * x_size + x] = [0.5, 0.0, 0.0, 0.5]
    return ConditionalDistribution(table, (x_size, x_size), (2, 2))


def xor_bits(x_size):
    """Number of shared bits the parity strategy uses for ``x_size`` inputs."""
    return int(x_size).bit_length()


def parity_outputs(x_size):
    """``out[x, r]``: parity of the bits of ``r`` selected by input ``x``.

    Input ``x`` (0-based) selects the subset whose characteristic vector
    has binary value ``x + 1``, so subsets are taken in ascending order of
    that value.
    """
    k = xor_bits(x_size)
    r = np.arange(2**k)
    masks = np.arange(1, x_size + 1)
    both = masks[:, None] & r[None, :]
    return np.array([[bin(v).count("1") & 1 for v in row] for row in both])


def xor_strategy_network(x_size):
    """Parity strategy that reproduces ``target_matching_distribution`` exactly."""
    if int(x_size) != x_size or x_size < 1:
        raise InvalidParams(f"x_size must be a positive integer, got {x_size!r}")
    x_size = int(x_size)
    k = xor_bits(x_size)
    strategy = _one_hot(parity_outputs(x_size), 2)
    parties = [PartySpec("A", x_size, 2, strategy), PartySpec("B", x_size, 2, strategy)]
    source = SourceSpec("R", np.full(2**k, 2.0**-k), frozenset({0, 1}))
    return validate_network(NetworkSpec([source], parties=parties))


def random_strategy(rng, input_size, n_tuples, output_size):
    return rng.dirichlet(np.ones(output_size), size=(input_size, n_tuples))


def random_triangle_network(seed, source_size=32, x_size=2, a_size=2):
    """Triangle network: three uniform sources, each shared by two parties.

    Party ``i`` sees sources ``r{i}`` and ``r{i-1}``; strategies are random
    stochastic tables drawn from ``seed``.
    """
    rng = make_rng(seed)
    sources = [
        SourceSpec("r1", np.full(source_size, 1 / source_size), frozenset({0, 1})),
        SourceSpec("r2", np.full(source_size, 1 / source_size), frozenset({1, 2})),
        SourceSpec("r3", np.full(source_size, 1 / source_size), frozenset({2, 0})),
    ]
    parties = [PartySpec(name, x_size, a_size,
                         random_strategy(rng, x_size, source_size**2, a_size))
               for name in ("A", "B", "C")]
    return validate_network(NetworkSpec(sources, parties=parties))


def random_bell_network(seed, source_size, x_size=2, a_size=2, pmf=None):
    """Bell network with one shared source and random local strategies."""
    rng = make_rng(seed)
    if pmf is None:
        pmf = rng.dirichlet(np.ones(source_size))
    sources = [SourceSpec("R", pmf, frozenset({0, 1}))]
    parties = [PartySpec(name, x_size, a_size,
                         random_strategy(rng, x_size, source_size, a_size))
               for name in ("A", "B")]
    return validate_network(NetworkSpec(sources, parties=parties))


def parse_q(text):
    """Parse ``uniform:K`` or a comma separated list of weights."""
    text = text.strip()
    if text.startswith("uniform:"):
        try:
            k = int(text.split(":", 1)[1])
        except ValueError as exc:
            raise InvalidParams(f"bad q {text!r}") from exc
        if k < 1:
            raise InvalidParams(f"bad q {text!r}")
        return np.full(k, 1.0 / k)
    try:
        return np.array([float(v) for v in text.split(",")])
    except ValueError as exc:
        raise InvalidParams(f"bad q {text!r}") from exc
