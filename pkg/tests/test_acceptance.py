"""End-to-end acceptance checks, one test per criterion.

Each test prints a single ``ACCEPTANCE <k> PASS|FAIL`` line (visible even
under output capture) before asserting.
"""

import math
import time

import numpy as np
import pytest

from conftest import random_structured
from randcomp import bounds, scenarios
from randcomp.compress import (
    CompressionConfig,
    compress_many,
    compress_single,
    estimate_success_probability,
    sample_empirical,
)
from randcomp.netmodel import evaluate, expand_to_blackbox, infinity_distance
from randcomp.prng import derive_seed
from randcomp.witness import (
    FeasibilityProblem,
    deterministic_feasible,
    min_cardinality,
    realization_from_network,
    reproduces,
    verify_inner_product_pattern,
)


@pytest.fixture
def verdict(capsys):
    def emit(number, ok, detail):
        with capsys.disabled():
            print(f"\nACCEPTANCE {number} {'PASS' if ok else 'FAIL'}: {detail}")
        assert ok, detail
    return emit


def sig_equal(a, b, digits=6):
    return f"{a:.{digits - 1}e}" == f"{b:.{digits - 1}e}" or math.isclose(a, b, rel_tol=10**-digits)


# -- 1. bound calculators ----------------------------------------------------------------

def test_criterion_1_bound_calculators(verdict):
    t0 = time.perf_counter()
    values = {
        "single(4,4,0.05)": (bounds.single_source_bound(4, 4, 0.05), 694),
        "exact(2,2)": (bounds.exact_bound(2, 2), 5),
        "exact(3,4)": (bounds.exact_bound(3, 4), 65),
        # triangle, binary inputs and outputs: joint sizes 8 and 8, three sources
        "triangle equal split": (
            bounds.multi_source_bound(8, 8, 0.1, bounds.equal_split(3))[0], 2184),
        "triangle general": (bounds.general_equal_split_bound(3, 4, 3, 0.1), 2184),
    }
    cross = bounds.crossover_epsilon(2, 1, 1)
    elapsed = time.perf_counter() - t0
    ok = all(got == want for got, want in values.values()) and abs(cross - 0.41628) <= 1e-4
    ok = ok and elapsed < 0.5
    detail = ", ".join(f"{k}={g}" for k, (g, _) in values.items())
    verdict(1, ok, f"{detail}, crossover={cross:.6f} ({elapsed * 1e3:.2f} ms)")


# -- 2. figure curves ----------------------------------------------------------------------

def _plot_approx(h, m, x, eps=0.05):
    # curve expression as typed in the plot source: (m/eps)^2 * ln(2 x^h) / 2
    return (m / eps) ** 2 * math.log(2 * x**h) / 2


def _plot_exact(h, x):
    return x**h + 1


def _plot_crossover(h, m, x):
    return m / (2 * (x**h + 1) / math.log(2 * x**h)) ** 0.5


def test_criterion_2_figure_curves(verdict):
    t0 = time.perf_counter()
    xs = [2, 8, 32]
    card = bounds.emit_figure_data("cardinality", xs, epsilon=0.05)
    pairs = [(2, 1), (2, 2), (2, 3), (3, 1), (3, 2), (3, 3)]
    cross = bounds.emit_figure_data("crossover", xs, pairs=pairs)
    elapsed = time.perf_counter() - t0

    mismatches = []
    for row in card.rows:
        x = row[0]
        expected = [_plot_approx(2, 1, x), _plot_exact(2, x),
                    _plot_approx(3, 3, x), _plot_exact(3, x)]
        for got, want, col in zip(row[1:], expected, card.columns[1:]):
            if not sig_equal(got, want):
                mismatches.append((col, x, got, want))
    for row in cross.rows:
        x = row[0]
        for (h, m), got in zip(pairs, row[1:]):
            if not sig_equal(got, _plot_crossover(h, m, x)):
                mismatches.append((f"h{h}m{m}", x, got))
    bell2 = card.rows[0][1]
    ok = not mismatches and abs(bell2 - 415.89) < 5e-3 and elapsed < 1.0
    verdict(2, ok, f"bell_approx(2)={bell2:.2f}, {len(xs) * (4 + len(pairs))} values, "
                   f"mismatches={mismatches}, {elapsed * 1e3:.1f} ms")


# -- 3. correlated target lower bound -------------------------------------------------------

def test_criterion_3_correlated_lower_bound(verdict):
    _, target = scenarios.build_correlated_no_input(2, np.full(3, 1 / 3))
    alph = [(1, 3), (1, 3)]
    t0 = time.perf_counter()
    at2 = deterministic_feasible(FeasibilityProblem(target, alph, 2))
    t2 = time.perf_counter() - t0
    t0 = time.perf_counter()
    at3 = deterministic_feasible(FeasibilityProblem(target, alph, 3))
    t3 = time.perf_counter() - t0
    m = min_cardinality(target, alph, 5)
    ok = (m == 3 and at2 is None and at3 is not None and t2 < 60 and t3 < 60
          and reproduces(at3, target, 1e-8))
    verdict(3, ok, f"min_cardinality={m}, m=2 infeasible in {t2:.3f}s, "
                   f"m=3 feasible in {t3:.3f}s")


# -- 4. matching target lower bound ---------------------------------------------------------

def test_criterion_4_matching_lower_bound(verdict):
    target = scenarios.target_matching_distribution(3)
    alph = [(3, 2), (3, 2)]
    t0 = time.perf_counter()
    at3 = deterministic_feasible(FeasibilityProblem(target, alph, 3))
    at4 = deterministic_feasible(FeasibilityProblem(target, alph, 4))
    elapsed = time.perf_counter() - t0
    xor = scenarios.xor_strategy_network(3)
    gap = infinity_distance(evaluate(xor), target)
    pattern = verify_inner_product_pattern(realization_from_network(xor), 3)
    found_pattern = at4 is not None and verify_inner_product_pattern(at4, 3)
    ok = (at3 is None and at4 is not None and gap <= 1e-12 and pattern
          and found_pattern and elapsed < 300)
    verdict(4, ok, f"m=3 none, m=4 found={at4 is not None}, xor gap={gap:.1e}, "
                   f"inner products ok={pattern and found_pattern}, {elapsed:.1f}s")


# -- 5. single-source compression -----------------------------------------------------------

def test_criterion_5_single_source_compression(verdict):
    net, _ = scenarios.build_correlated_no_input(2, np.full(64, 1 / 64))
    assert (net.input_size, net.output_size) == (1, 4096)
    n = bounds.single_source_bound(1, 4096, 0.1)
    t0 = time.perf_counter()
    out, rep = compress_single(net, "R", CompressionConfig(0.1, n, 100, 42))
    dev = infinity_distance(evaluate(out), evaluate(net))
    # n exceeds the 64 source values, so also exercise a genuine resampling
    out32, rep32 = compress_single(net, "R", CompressionConfig(0.1, 32, 100, 42))
    dev32 = infinity_distance(evaluate(out32), evaluate(net))
    elapsed = time.perf_counter() - t0
    ok = (rep.succeeded and rep.attempts_used <= 100 and dev < 0.1
          and out.source("R").size <= n
          and rep32.succeeded and not rep32.skipped and dev32 < 0.1
          and out32.source("R").size <= 32 and elapsed < 30)
    verdict(5, ok, f"n={n}: deviation {dev:.3g}, |Q|={out.source('R').size}, "
                   f"skipped={rep.skipped}; n=32: {rep32.attempts_used} attempt(s), "
                   f"deviation {dev32:.4g}, |Q|={rep32.result_cardinality}; {elapsed:.2f}s")


# -- 6. concentration consistency ---------------------------------------------------------

def test_criterion_6_hoeffding_consistency(verdict):
    eps, trials = 0.1, 1000
    net = scenarios.random_bell_network(seed=2024, source_size=1000)
    X, A = net.input_size, net.output_size
    assert (X, A) == (4, 4)
    threshold = math.log(2 * X * A) / (2 * eps**2)
    n = math.ceil(2 * threshold)
    t0 = time.perf_counter()
    rate = estimate_success_probability(net, "R", n, eps, trials=trials, seed=6)
    elapsed = time.perf_counter() - t0
    floor = 1 - 1 / (2 * X * A) - 3 * math.sqrt(0.25 / trials)
    ok = rate >= floor and elapsed < 60
    verdict(6, ok, f"n={n}, success rate {rate:.3f} >= {floor:.4f}, {elapsed:.1f}s")


# -- 7. property suites ------------------------------------------------------------------

def test_criterion_7_property_suites(verdict):
    rng = np.random.default_rng(7)
    results = {}

    gaps = []
    for _ in range(50):
        net = random_structured(rng, n_parties=int(rng.integers(2, 4)),
                                n_sources=int(rng.integers(1, 4)), max_x=3, max_a=3)
        gaps.append(infinity_distance(evaluate(net), evaluate(expand_to_blackbox(net))))
    results["evaluator"] = max(gaps) <= 1e-12

    metric_ok = True
    for _ in range(200):
        shape = (int(rng.integers(1, 5)), int(rng.integers(1, 5)))
        p, q, r = (rng.dirichlet(np.ones(shape[1]), size=shape[0]) for _ in range(3))
        d = infinity_distance
        metric_ok &= d(p, p) == 0 and d(p, q) == d(q, p) and d(p, q) >= 0
        metric_ok &= (d(p, q) > 0) == (not np.array_equal(p, q))
        metric_ok &= d(p, r) <= d(p, q) + d(q, r) + 1e-15
    results["metric"] = bool(metric_ok)

    net = scenarios.random_bell_network(seed=3, source_size=12)
    p = evaluate(net).table
    total = np.zeros_like(p)
    for t in range(1, 10_001):
        q = sample_empirical(net.source("R"), 10, derive_seed(99, t))
        total += evaluate(net.with_source(q)).table
    results["unbiased"] = np.abs(total / 10_000 - p).max() <= 0.01

    accounting = True
    for seed in range(20):
        net = random_structured(np.random.default_rng(1000 + seed), n_parties=3,
                                n_sources=3, max_r=10)
        out, reps = compress_many(net, list(net.source_ids), 0.6, seed=seed,
                                  ns=[3, 3, 3], max_attempts=500)
        dev = infinity_distance(evaluate(out), evaluate(net))
        accounting &= dev <= sum(r.achieved_deviation for r in reps) + 1e-12
    results["triangle inequality"] = bool(accounting)

    padding = True
    instances = [(scenarios.build_correlated_no_input(2, q)[1], [(1, len(q))] * 2, len(q))
                 for q in ([0.5, 0.5], [0.5, 0.25, 0.25], [0.25] * 4)]
    instances.append((scenarios.target_matching_distribution(2), [(2, 2)] * 2, 4))
    for target, alph, m in instances:
        real = deterministic_feasible(FeasibilityProblem(target, alph, m))
        padding &= real is not None and reproduces(real.padded(), target, 1e-8)
    results["padding"] = bool(padding)

    verdict(7, all(results.values()), ", ".join(f"{k}={v}" for k, v in results.items()))
