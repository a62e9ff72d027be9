"""Closed-form cardinality bounds and figure data.

The approximate-case bounds all have the form "smallest integer strictly
greater than a real threshold".  Thresholds are computed in the log domain
so that ``x ** h`` never has to be formed for the approximate bounds.
"""

import csv
import io
import math
from dataclasses import dataclass

from .errors import BoundOverflow, InvalidParams, InvalidRange, InvalidSplit

INT_MAX = 2**63 - 1
SPLIT_TOL = 1e-12


def _positive_int(value, name):
    if isinstance(value, bool) or int(value) != value or value < 1:
        raise InvalidParams(f"{name} must be a positive integer, got {value!r}")
    return int(value)


def _positive_eps(epsilon):
    if not (epsilon > 0) or not math.isfinite(epsilon):
        raise InvalidParams(f"epsilon must be positive and finite, got {epsilon!r}")
    return float(epsilon)


def strictly_above(threshold):
    """Smallest integer n with n > threshold (threshold + 1 if integral)."""
    if not math.isfinite(threshold) or threshold >= INT_MAX:
        raise BoundOverflow(f"threshold {threshold!r} exceeds the integer range")
    return math.floor(threshold) + 1


def single_source_threshold(x_size, a_size, epsilon):
    """Real threshold ``ln(2|X||A|) / (2 eps^2)``."""
    x_size = _positive_int(x_size, "x_size")
    a_size = _positive_int(a_size, "a_size")
    eps = _positive_eps(epsilon)
    log_2xa = math.log(2) + math.log(x_size) + math.log(a_size)
    return log_2xa / (2 * eps * eps)


def single_source_bound(x_size, a_size, epsilon):
    """Samples needed to compress one source to infinity-norm error ``epsilon``."""
    return strictly_above(single_source_threshold(x_size, a_size, epsilon))


def check_split(deltas):
    deltas = [float(d) for d in deltas]
    if not deltas:
        raise InvalidSplit("empty split")
    if any(not (d > 0) for d in deltas):
        raise InvalidSplit(f"split entries must be positive: {deltas}")
    if abs(math.fsum(deltas) - 1.0) > SPLIT_TOL:
        raise InvalidSplit(f"split sums to {math.fsum(deltas)!r}, not 1")
    return deltas


def equal_split(m):
    m = _positive_int(m, "m")
    return [1.0 / m] * m


def multi_source_bound(x_size, a_size, epsilon, deltas):
    """Per-source sample counts when source i gets tolerance ``epsilon * deltas[i]``."""
    deltas = check_split(deltas)
    eps = _positive_eps(epsilon)
    return [single_source_bound(x_size, a_size, eps * d) for d in deltas]


def approx_bound_real(h, per_party_xa, m, epsilon):
    """Un-ceiled equal-split bound ``m^2/(2 eps^2) * (ln 2 + h ln(|X_i||A_i|))``."""
    h = _positive_int(h, "h")
    xa = _positive_int(per_party_xa, "per_party_xa")
    m = _positive_int(m, "m")
    eps = _positive_eps(epsilon)
    return m * m / (2 * eps * eps) * (math.log(2) + h * math.log(xa))


def general_equal_split_bound(h, per_party_xa, m, epsilon):
    """Per-source cardinality for h parties and m equally weighted sources."""
    return strictly_above(approx_bound_real(h, per_party_xa, m, epsilon))


def exact_bound(h, per_party_xa):
    """Caratheodory bound ``(|X_i||A_i|)^h + 1`` for exact reproduction."""
    h = _positive_int(h, "h")
    xa = _positive_int(per_party_xa, "per_party_xa")
    if h * math.log2(xa) >= 63:
        raise BoundOverflow(f"{xa}^{h} + 1 exceeds the integer range")
    value = xa**h + 1
    if value > INT_MAX:
        raise BoundOverflow(f"{xa}^{h} + 1 exceeds the integer range")
    return value


def exact_bound_real(h, per_party_xa):
    return float(per_party_xa) ** h + 1.0


def crossover_epsilon(h, m, per_party_xa):
    """Tolerance at which the equal-split bound meets the exact bound.

    Solves ``m^2/(2 eps^2) ln(2 x^h) = x^h + 1`` for eps, in log space.
    """
    h = _positive_int(h, "h")
    m = _positive_int(m, "m")
    xa = _positive_int(per_party_xa, "per_party_xa")
    h_log_x = h * math.log(xa)
    log_2xh = math.log(2) + h_log_x
    # ln(x^h + 1) without forming x^h
    log_exact = h_log_x + math.log1p(math.exp(-h_log_x))
    return m * math.exp(0.5 * (math.log(log_2xh) - math.log(2) - log_exact))


# -- figure data ---------------------------------------------------------------

@dataclass
class FigureTable:
    columns: list
    rows: list

    def to_csv(self, fh=None):
        buf = io.StringIO() if fh is None else fh
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(self.columns)
        for row in self.rows:
            w.writerow([_fmt(v) for v in row])
        if fh is None:
            return buf.getvalue()

    def column(self, name):
        j = self.columns.index(name)
        return [row[j] for row in self.rows]


def _fmt(v):
    if isinstance(v, int):
        return str(v)
    return f"{v:.17g}"


BELL = (2, 1)
TRIANGLE = (3, 3)
DEFAULT_CROSSOVER_PAIRS = ((2, 1), (2, 2), (2, 3), (3, 1), (3, 2), (3, 3))


def emit_figure_data(figure, x_range, epsilon=0.05, pairs=DEFAULT_CROSSOVER_PAIRS):
    """Curve values for the cardinality comparison or the crossover plot.

    Parameters
    ----------
    figure : {"cardinality", "crossover"}
    x_range : sequence of positive integers, strictly ascending
        Values of the per-party product ``|X_i||A_i|``.
    epsilon : float
        Tolerance for the cardinality figure.
    pairs : sequence of (h, m)
        Curves of the crossover figure.

    Returns
    -------
    FigureTable
        Un-ceiled real curve values, one row per x.
    """
    xs = list(x_range)
    if not xs:
        raise InvalidRange("x_range is empty")
    if any(b <= a for a, b in zip(xs, xs[1:])):
        raise InvalidRange("x_range must be strictly ascending")
    for x in xs:
        _positive_int(x, "x")

    if figure == "cardinality":
        cols = ["x", "bell_approx", "bell_exact", "triangle_approx", "triangle_exact"]
        rows = []
        for x in xs:
            rows.append([
                int(x),
                approx_bound_real(BELL[0], x, BELL[1], epsilon),
                exact_bound_real(BELL[0], x),
                approx_bound_real(TRIANGLE[0], x, TRIANGLE[1], epsilon),
                exact_bound_real(TRIANGLE[0], x),
            ])
        return FigureTable(cols, rows)
    if figure == "crossover":
        pairs = [(int(h), int(m)) for h, m in pairs]
        if not pairs:
            raise InvalidParams("no (h, m) pairs requested")
        cols = ["x"] + [f"eps_h{h}_m{m}" for h, m in pairs]
        rows = [[int(x)] + [crossover_epsilon(h, m, x) for h, m in pairs]
                for x in xs]
        return FigureTable(cols, rows)
    raise InvalidParams(f"unknown figure {figure!r}")
