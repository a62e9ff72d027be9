"""Exhaustive search for exact realizations with a small shared source.

Targets considered here are reproducible only by deterministic local
strategies (perfectly correlated outputs force determinism), so a target
is realizable with a source of cardinality ``m`` iff some tuple of
deterministic strategies admits source weights reproducing it.  For a
fixed tuple the target is linear in the ``m`` weights; we solve the
least-squares system and accept on small residual and nonnegative
weights.

It is the caller's job to ensure the determinism argument applies to the
target; nothing here checks it.

Enumeration order
-----------------
Party ``i``'s strategy is the base-``|A_i|`` integer whose ``|X_i| * m``
digits are its outputs on ``(x, r)`` in row-major order (x major, r
minor, most significant first).  Tuples are enumerated lexicographically
with party 0 most significant, and the first accepted tuple is returned.
"""

import math
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np

from .errors import InvalidParams, SearchCapExceeded, ShapeMismatch
from .netmodel import (
    ConditionalDistribution,
    NetworkSpec,
    PartySpec,
    SourceSpec,
    evaluate,
    infinity_distance,
    validate_network,
)

DEFAULT_SEARCH_CAP = 10**9
DEFAULT_TOLERANCE = 1e-9
BATCH = 8192
_GRAM_RCOND = 1e-10


def search_cap_from_env():
    value = os.environ.get("RANDCOMP_SEARCH_CAP")
    if value is None:
        return DEFAULT_SEARCH_CAP
    try:
        return int(float(value))
    except ValueError as exc:
        raise InvalidParams(f"bad RANDCOMP_SEARCH_CAP {value!r}") from exc


@dataclass(frozen=True, eq=False)
class FeasibilityProblem:
    target: ConditionalDistribution
    party_alphabets: tuple
    m: int
    tolerance: float = DEFAULT_TOLERANCE

    def __post_init__(self):
        alph = tuple((int(x), int(a)) for x, a in self.party_alphabets)
        object.__setattr__(self, "party_alphabets", alph)
        if not alph or any(x < 1 or a < 1 for x, a in alph):
            raise InvalidParams(f"bad party alphabets {self.party_alphabets}")
        if int(self.m) != self.m or self.m < 1:
            raise InvalidParams(f"m must be a positive integer, got {self.m!r}")
        want = (math.prod(x for x, _ in alph), math.prod(a for _, a in alph))
        if self.target.table.shape != want:
            raise ShapeMismatch(
                f"target shape {self.target.table.shape} != {want} for {alph}")

    @property
    def n_tuples(self):
        return math.prod(a ** (x * self.m) for x, a in self.party_alphabets)

    @property
    def search_steps(self):
        """Elementary steps: one per unknown weight per strategy tuple."""
        return self.n_tuples * self.m


@dataclass(frozen=True, eq=False)
class Realization:
    """Source weights plus deterministic strategies ``strategies[i][x, r]``."""

    source_pmf: np.ndarray
    strategies: tuple
    party_alphabets: tuple
    codes: tuple = None

    @property
    def m(self):
        return len(self.source_pmf)

    def to_network(self):
        parties = []
        for i, (out, (x_size, a_size)) in enumerate(
                zip(self.strategies, self.party_alphabets)):
            table = (np.asarray(out)[..., None] == np.arange(a_size)).astype(float)
            parties.append(PartySpec(f"P{i}", x_size, a_size, table))
        source = SourceSpec("R", self.source_pmf,
                            frozenset(range(len(self.strategies))))
        return validate_network(NetworkSpec([source], parties=parties))

    def padded(self):
        """Same realization with an extra zero-weight source value."""
        pmf = np.append(self.source_pmf, 0.0)
        strategies = tuple(np.pad(np.asarray(s), ((0, 0), (0, 1)))
                           for s in self.strategies)
        return Realization(pmf, strategies, self.party_alphabets)

    def to_dict(self):
        return {
            "source_pmf": [float(v) for v in self.source_pmf],
            "strategies": [np.asarray(s).ravel().tolist() for s in self.strategies],
            "symmetry_pruning": False,
        }

    @classmethod
    def from_dict(cls, doc, party_alphabets):
        pmf = np.asarray(doc["source_pmf"], dtype=float)
        m = len(pmf)
        strategies = tuple(np.asarray(s, dtype=int).reshape(x, m)
                           for s, (x, _) in zip(doc["strategies"], party_alphabets))
        return cls(pmf, strategies, tuple(party_alphabets))


def realization_from_network(net):
    """Read a single-source network with 0/1 strategies as a Realization."""
    net = validate_network(net)
    if net.is_blackbox or len(net.sources) != 1:
        raise ShapeMismatch("need a structured network with exactly one source")
    strategies = []
    for p in net.parties:
        s = p.strategy
        if not np.all((s == 0) | (s == 1)):
            raise ShapeMismatch(f"party {p.name!r} is not deterministic")
        strategies.append(s.argmax(axis=-1))
    alph = tuple((p.input_size, p.output_size) for p in net.parties)
    return Realization(np.array(net.sources[0].pmf), tuple(strategies), alph)


def _decode(codes, base, n_digits):
    powers = base ** np.arange(n_digits - 1, -1, -1, dtype=np.int64)
    return (codes[:, None] // powers) % base


class _Searcher:
    def __init__(self, problem):
        self.problem = problem
        alph = problem.party_alphabets
        self.m = problem.m
        self.x_sizes = [x for x, _ in alph]
        self.a_sizes = [a for _, a in alph]
        self.n_strats = [a ** (x * self.m) for x, a in alph]
        self.X = math.prod(self.x_sizes)
        self.A = math.prod(self.a_sizes)
        self.x_digits = np.array(np.unravel_index(np.arange(self.X), self.x_sizes)).T
        self.out_weights = [math.prod(self.a_sizes[i + 1:]) for i in range(len(alph))]
        self.target = problem.target.table
        self.target_flat = self.target.ravel()

    def joint_outputs(self, start, stop):
        """``a[b, x, r]`` for the tuples with flat indices in [start, stop)."""
        flat = np.arange(start, stop, dtype=np.int64)
        codes = np.array(np.unravel_index(flat, self.n_strats)).T
        a = np.zeros((stop - start, self.X, self.m), dtype=np.int64)
        for i, (xs, base) in enumerate(zip(self.x_sizes, self.a_sizes)):
            outs = _decode(codes[:, i], base, xs * self.m).reshape(-1, xs, self.m)
            a += outs[:, self.x_digits[:, i], :] * self.out_weights[i]
        return codes, a

    def solve(self, a):
        """Least-squares weights, residual and acceptance mask for a batch."""
        B, X, m, A = a.shape[0], self.X, self.m, self.A
        gram = (a[:, :, :, None] == a[:, :, None, :]).sum(axis=1) + 1.0
        tv = self.target_flat[np.arange(X)[None, :, None] * A + a]
        rhs = tv.sum(axis=1) + 1.0
        # pinv(A^T A) A^T b is the min-norm least-squares solution
        p = np.einsum("brs,bs->br",
                      np.linalg.pinv(gram, rcond=_GRAM_RCOND, hermitian=True), rhs)
        idx = (np.arange(B)[:, None, None] * X + np.arange(X)[None, :, None]) * A + a
        weights = np.broadcast_to(p[:, None, :], a.shape)
        pred = np.bincount(idx.ravel(), weights=weights.ravel(),
                           minlength=B * X * A).reshape(B, X, A)
        resid = np.abs(pred - self.target[None]).max(axis=(1, 2))
        resid = np.maximum(resid, np.abs(p.sum(axis=1) - 1.0))
        tol = self.problem.tolerance
        ok = (resid <= tol) & (p.min(axis=1) >= -tol)
        return p, ok

    def first_in(self, start, stop):
        """First accepted tuple in [start, stop), or None."""
        for lo in range(start, stop, BATCH):
            hi = min(lo + BATCH, stop)
            codes, a = self.joint_outputs(lo, hi)
            p, ok = self.solve(a)
            if ok.any():
                b = int(np.argmax(ok))
                return lo + b, codes[b], a[b], p[b]
        return None

    def realization(self, codes, p):
        p = np.clip(p, 0.0, None)
        p = p / p.sum()
        strategies = tuple(
            _decode(np.array([c]), base, xs * self.m).reshape(xs, self.m)
            for c, xs, base in zip(codes, self.x_sizes, self.a_sizes))
        return Realization(p, strategies, self.problem.party_alphabets,
                           tuple(int(c) for c in codes))


def deterministic_feasible(problem, cap=None, jobs=1):
    """First realization of ``problem.target`` with a source of size ``problem.m``.

    Returns ``None`` when no tuple of deterministic strategies works.

    Raises
    ------
    SearchCapExceeded
        ``problem.search_steps`` exceeds ``cap`` (default: the
        ``RANDCOMP_SEARCH_CAP`` environment variable, else 10**9).
    """
    cap = search_cap_from_env() if cap is None else cap
    if problem.search_steps > cap:
        raise SearchCapExceeded(
            f"{problem.search_steps} search steps exceed the cap {cap}")
    searcher = _Searcher(problem)
    total = problem.n_tuples

    if jobs <= 1:
        found = searcher.first_in(0, total)
    else:
        # contiguous chunks, one wave of `jobs` at a time; lowest chunk wins
        chunk = max(BATCH, -(-total // (jobs * 16)))
        bounds_ = [(lo, min(lo + chunk, total)) for lo in range(0, total, chunk)]
        found = None
        with ThreadPoolExecutor(max_workers=jobs) as pool:
            for w in range(0, len(bounds_), jobs):
                wave = bounds_[w:w + jobs]
                results = list(pool.map(lambda ab: searcher.first_in(*ab), wave))
                hits = [r for r in results if r is not None]
                if hits:
                    found = min(hits, key=lambda r: r[0])
                    break
    if found is None:
        return None
    _, codes, _, p = found
    return searcher.realization(codes, p)


def min_cardinality(target, party_alphabets, m_max, tolerance=DEFAULT_TOLERANCE,
                    cap=None, jobs=1):
    """Smallest ``m <= m_max`` admitting a deterministic realization."""
    if int(m_max) != m_max or m_max < 1:
        raise InvalidParams(f"m_max must be a positive integer, got {m_max!r}")
    for m in range(1, int(m_max) + 1):
        problem = FeasibilityProblem(target, party_alphabets, m, tolerance)
        if deterministic_feasible(problem, cap=cap, jobs=jobs) is not None:
            return m
    return None


def reproduces(realization, target, tolerance):
    """Whether the realization's network evaluates to ``target`` within ``tolerance``."""
    return infinity_distance(evaluate(realization.to_network()), target) <= tolerance


def verify_inner_product_pattern(realization, x_size, tol=1e-9):
    """Check the weighted inner-product structure of a matching-target realization.

    With ``u_x[r] = 1`` iff a party outputs 1 on ``(x, r)``, a realization of
    the matching target must satisfy ``<u_x, u_y>_p = 1/2`` for ``x == y``
    and ``1/4`` otherwise, and the centred vectors ``u_x - 1/2`` must be
    orthogonal with squared norm ``1/4``.
    """
    if len(realization.strategies) != 2 or any(
            tuple(al) != (x_size, 2) for al in realization.party_alphabets):
        raise ShapeMismatch(f"need two parties with alphabets ({x_size}, 2)")
    p = np.asarray(realization.source_pmf, dtype=float)
    u_a, u_b = (np.asarray(s, dtype=float) for s in realization.strategies)
    if u_a.shape != (x_size, len(p)) or u_b.shape != (x_size, len(p)):
        raise ShapeMismatch("strategy tables do not match the source size")
    expected = np.full((x_size, x_size), 0.25) + 0.25 * np.eye(x_size)
    checks = [u_a @ np.diag(p) @ u_a.T, u_a @ np.diag(p) @ u_b.T]
    v = u_a - 0.5
    gaps = [np.abs(g - expected).max() for g in checks]
    gaps.append(np.abs(v @ np.diag(p) @ v.T - 0.25 * np.eye(x_size)).max())
    return bool(max(gaps) <= tol)
