"""Replace randomness sources by empirical sources of bounded cardinality.

A source is compressed by drawing ``n`` i.i.d. values from it and using
the empirical distribution of those draws instead.  One draw is an
*attempt*; attempts are repeated with fresh seeds until the outcome
distribution moves by less than the tolerance in infinity norm.

Seeds: attempt ``t`` (1-based) of a compression seeded with ``s`` samples
with ``derive_seed(s, t)``.  Stage ``i`` (1-based) of ``compress_many``
runs with stage seed ``derive_seed(seed, i)``.  Trial ``t`` of
``estimate_success_probability`` uses ``derive_seed(seed, t)``.
"""

import json
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass

import numpy as np

from . import bounds
from .errors import AttemptsExhausted, InvalidParams, InvalidSplit
from .netmodel import (
    DEFAULT_ENUMERATION_CAP,
    SourceSpec,
    evaluate,
    infinity_distance,
    prune_source,
    validate_network,
)
from .prng import GENERATOR_NAME, derive_seed, make_rng

_MASK64 = (1 << 64) - 1


@dataclass(frozen=True)
class CompressionConfig:
    epsilon: float
    n: int
    max_attempts: int = 100
    seed: int = 0

    def __post_init__(self):
        if not (self.epsilon > 0):
            raise InvalidParams(f"epsilon must be positive, got {self.epsilon!r}")
        if int(self.n) != self.n or self.n < 1:
            raise InvalidParams(f"n must be a positive integer, got {self.n!r}")
        if int(self.max_attempts) != self.max_attempts or self.max_attempts < 1:
            raise InvalidParams(f"max_attempts must be >= 1, got {self.max_attempts!r}")
        if not (0 <= int(self.seed) <= _MASK64):
            raise InvalidParams(f"seed must fit in 64 unsigned bits, got {self.seed!r}")


@dataclass(frozen=True)
class DeltaSplit:
    deltas: tuple

    def __post_init__(self):
        object.__setattr__(self, "deltas", tuple(bounds.check_split(self.deltas)))

    @classmethod
    def equal(cls, m):
        return cls(tuple(bounds.equal_split(m)))


@dataclass
class CompressionReport:
    source_id: str
    attempts_used: int
    achieved_deviation: float
    result_cardinality: int
    seed_used: int
    skipped: bool
    succeeded: bool = True
    tolerance: float = None
    n: int = None
    prng: str = GENERATOR_NAME

    def to_dict(self):
        return asdict(self)


def reports_to_json(reports):
    return json.dumps([r.to_dict() for r in reports], indent=1) + "\n"


def sample_empirical(source, n, seed):
    """Empirical source of ``n`` i.i.d. draws from ``source``.

    The result keeps the original alphabet (unsampled values get weight 0)
    and the original visibility, so it can be swapped into the network
    without touching any strategy table.
    """
    if int(n) != n or n < 1:
        raise InvalidParams(f"n must be a positive integer, got {n!r}")
    pmf = np.asarray(source.pmf, dtype=float)
    rng = make_rng(seed)
    draws = rng.choice(len(pmf), size=int(n), p=pmf / pmf.sum())
    counts = np.bincount(draws, minlength=len(pmf))
    return SourceSpec(source.id, counts / n, source.visible_to)


def _attempt(net, source, n, seed, baseline, cap):
    q = sample_empirical(source, n, seed)
    p_hat = evaluate(net.with_source(q), cap=cap)
    return infinity_distance(p_hat, baseline), q


def _run_attempts(net, source, cfg, baseline, cap, jobs):
    """Yield (t, seed, deviation, q) in attempt order."""
    seeds = [derive_seed(cfg.seed, t) for t in range(1, cfg.max_attempts + 1)]
    if jobs <= 1:
        for t, s in enumerate(seeds, start=1):
            dev, q = _attempt(net, source, cfg.n, s, baseline, cap)
            yield t, s, dev, q
        return
    with ThreadPoolExecutor(max_workers=jobs) as pool:
        for start in range(0, len(seeds), jobs):
            batch = seeds[start:start + jobs]
            results = pool.map(
                lambda s: _attempt(net, source, cfg.n, s, baseline, cap), batch)
            for offset, (s, (dev, q)) in enumerate(zip(batch, results)):
                yield start + offset + 1, s, dev, q


def compress_single(net, source_id, cfg, *, baseline=None,
                    cap=DEFAULT_ENUMERATION_CAP, jobs=1):
    """Compress one source to at most ``cfg.n`` values.

    Returns the network with the empirical source substituted (and pruned
    to its support) together with a ``CompressionReport``.  When ``cfg.n``
    is at least the source's support size the network is returned as is
    with ``skipped=True``.

    ``baseline`` is the distribution deviations are measured against; it
    defaults to ``evaluate(net)``.

    Raises
    ------
    SourceNotFound
    AttemptsExhausted
        Carries the smallest deviation seen.
    """
    net = validate_network(net)
    source = net.source(source_id)
    support = len(source.support)
    if cfg.n >= support:
        report = CompressionReport(source_id, 0, 0.0, support, int(cfg.seed),
                                   True, True, cfg.epsilon, int(cfg.n))
        return net, report
    if baseline is None:
        baseline = evaluate(net, cap=cap)

    best = math.inf
    for t, s, dev, q in _run_attempts(net, source, cfg, baseline, cap, jobs):
        best = min(best, dev)
        if dev < cfg.epsilon:
            out = prune_source(net.with_source(q), source_id)
            report = CompressionReport(
                source_id, t, dev, len(q.support), s, False, True,
                cfg.epsilon, int(cfg.n))
            return out, report
    report = CompressionReport(source_id, cfg.max_attempts, best, support,
                               int(cfg.seed), False, False, cfg.epsilon,
                               int(cfg.n))
    raise AttemptsExhausted(
        f"source {source_id!r}: no sampling of n={cfg.n} reached deviation "
        f"< {cfg.epsilon} in {cfg.max_attempts} attempts (best {best:.6g})",
        best, [report])


def compress_many(net, source_ids, epsilon, split=None, seed=0, max_attempts=100,
                  ns=None, *, cap=DEFAULT_ENUMERATION_CAP, jobs=1):
    """Compress several sources one after another.

    Stage ``i`` compresses ``source_ids[i]`` with tolerance
    ``epsilon * split.deltas[i]`` measured against the distribution left by
    the previous stage, so the final deviation from the original is below
    ``epsilon``.  ``ns`` gives the per-stage sample counts and defaults to
    ``bounds.multi_source_bound``.
    """
    net = validate_network(net)
    source_ids = list(source_ids)
    if split is None:
        split = DeltaSplit.equal(len(source_ids))
    elif not isinstance(split, DeltaSplit):
        split = DeltaSplit(tuple(split))
    if len(split.deltas) != len(source_ids):
        raise InvalidSplit(
            f"{len(split.deltas)} deltas for {len(source_ids)} sources")
    if len(set(source_ids)) != len(source_ids):
        raise InvalidParams(f"repeated source ids in {source_ids}")
    for sid in source_ids:
        net.source(sid)
    if ns is None:
        ns = bounds.multi_source_bound(net.input_size, net.output_size,
                                       epsilon, split.deltas)
    if len(ns) != len(source_ids):
        raise InvalidParams(f"{len(ns)} sample counts for {len(source_ids)} sources")

    reports = []
    current = evaluate(net, cap=cap)
    for i, (sid, delta, n) in enumerate(zip(source_ids, split.deltas, ns), start=1):
        cfg = CompressionConfig(epsilon * delta, int(n), max_attempts,
                                derive_seed(seed, i))
        try:
            net, rep = compress_single(net, sid, cfg, baseline=current,
                                       cap=cap, jobs=jobs)
        except AttemptsExhausted as exc:
            raise AttemptsExhausted(str(exc), exc.best_deviation,
                                    reports + exc.reports) from None
        reports.append(rep)
        if not rep.skipped:
            current = evaluate(net, cap=cap)
    return net, reports


def estimate_success_probability(net, source_id, n, epsilon, trials, seed=0,
                                 *, cap=DEFAULT_ENUMERATION_CAP):
    """Fraction of single samplings whose deviation is below ``epsilon``."""
    if int(trials) != trials or trials < 1:
        raise InvalidParams(f"trials must be >= 1, got {trials!r}")
    net = validate_network(net)
    source = net.source(source_id)
    baseline = evaluate(net, cap=cap)
    hits = 0
    for t in range(1, int(trials) + 1):
        dev, _ = _attempt(net, source, n, derive_seed(seed, t), baseline, cap)
        hits += dev < epsilon
    return hits / trials


def hoeffding_success_floor(x_size, a_size, n, epsilon):
    """Lower bound ``1 - 2|A||X| exp(-2 n eps^2)`` on the per-attempt success rate."""
    return 1.0 - 2 * a_size * x_size * math.exp(-2 * n * epsilon * epsilon)
