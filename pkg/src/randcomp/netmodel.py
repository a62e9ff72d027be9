"""Network data model and exact evaluation of outcome distributions.

A network is either *structured* (parties with local strategy tables plus
shared sources) or a *blackbox* (a single kernel ``p(a | x, r1..rm)``).
All tables are dense numpy arrays.

Index conventions
-----------------
* Sources are sorted by id; the tuple of source values is flattened in
  mixed radix with the first sorted source most significant.
* A party's strategy has shape ``(input_size, n_visible_tuples,
  output_size)`` where the middle axis runs over the tuple of sources the
  party sees, in the same sorted order.
* Joint inputs and outputs of a structured network are flattened in mixed
  radix with party 0 most significant.
"""

import csv
import io
import itertools
import json
import math
from dataclasses import dataclass, field, replace

import numpy as np

from .errors import (
    EnumerationCapExceeded,
    NormalizationError,
    ShapeMismatch,
    SourceNotFound,
    StructureError,
)

PROB_TOL = 1e-9
EQUAL_TOL = 1e-12
DEFAULT_ENUMERATION_CAP = 10**8


def as_pmf(probs, what="pmf"):
    """Validate a finite probability vector and return it as a float array."""
    arr = np.asarray(probs, dtype=float)
    if arr.ndim != 1 or arr.size == 0:
        raise NormalizationError(f"{what}: expected a nonempty 1-d vector")
    if not np.all(np.isfinite(arr)):
        raise NormalizationError(f"{what}: non-finite weight")
    if np.any(arr < 0):
        raise NormalizationError(f"{what}: negative weight")
    total = arr.sum()
    if abs(total - 1.0) > PROB_TOL:
        raise NormalizationError(f"{what}: weights sum to {total!r}")
    return arr


def _check_rows(table, what):
    """Every row along the last axis must be a PMF."""
    if not np.all(np.isfinite(table)):
        raise NormalizationError(f"{what}: non-finite entry")
    if np.any(table < 0):
        raise NormalizationError(f"{what}: negative entry")
    sums = table.sum(axis=-1)
    bad = np.abs(sums - 1.0) > PROB_TOL
    if np.any(bad):
        idx = tuple(int(i) for i in np.argwhere(bad)[0])
        raise NormalizationError(f"{what}: row {idx} sums to {sums[idx]!r}")


def _frozen(arr):
    out = np.array(arr, dtype=float)
    out.setflags(write=False)
    return out


def mixed_radix_digits(index, radices):
    """Digits of ``index`` in mixed radix, most significant first."""
    digits = []
    for r in reversed(radices):
        index, d = divmod(index, r)
        digits.append(d)
    return tuple(reversed(digits))


@dataclass(frozen=True, eq=False)
class SourceSpec:
    id: str
    pmf: np.ndarray
    visible_to: frozenset = frozenset({0})

    @property
    def size(self):
        return len(self.pmf)

    @property
    def support(self):
        return np.flatnonzero(np.asarray(self.pmf) > 0)


@dataclass(frozen=True, eq=False)
class PartySpec:
    name: str
    input_size: int
    output_size: int
    strategy: np.ndarray


@dataclass(eq=False)
class NetworkSpec:
    """Unvalidated network description; see ``validate_network``.

    Give ``parties`` for a structured network, or ``kernel`` together with
    ``input_size`` and ``output_size`` for a blackbox one.
    """

    sources: list
    parties: list = None
    kernel: np.ndarray = None
    input_size: int = None
    output_size: int = None
    input_radices: tuple = None
    output_radices: tuple = None


@dataclass(frozen=True, eq=False)
class ValidatedNetwork:
    """Immutable, checked network.  Build with ``validate_network``."""

    sources: tuple
    parties: tuple
    kernel: np.ndarray
    input_size: int
    output_size: int
    input_radices: tuple
    output_radices: tuple
    _visible: tuple = field(default=(), repr=False)

    @property
    def is_blackbox(self):
        return self.kernel is not None

    @property
    def source_ids(self):
        return tuple(s.id for s in self.sources)

    @property
    def source_sizes(self):
        return tuple(s.size for s in self.sources)

    @property
    def n_source_tuples(self):
        return math.prod(self.source_sizes)

    def source_position(self, source_id):
        for k, s in enumerate(self.sources):
            if s.id == source_id:
                return k
        raise SourceNotFound(source_id)

    def source(self, source_id):
        return self.sources[self.source_position(source_id)]

    def visible_positions(self, party):
        """Sorted positions of the sources seen by ``party``."""
        return self._visible[party]

    def with_source(self, new):
        """Swap in a source with the same id and alphabet size.

        Visibility is inherited from the replaced source; strategy tables
        are shared, not copied.
        """
        k = self.source_position(new.id)
        old = self.sources[k]
        pmf = as_pmf(new.pmf, f"source {new.id!r}")
        if len(pmf) != old.size:
            raise StructureError(
                f"source {new.id!r}: alphabet size {len(pmf)} != {old.size}")
        swapped = SourceSpec(old.id, _frozen(pmf), old.visible_to)
        sources = self.sources[:k] + (swapped,) + self.sources[k + 1:]
        return replace(self, sources=sources)


def validate_network(spec):
    """Check every invariant of ``spec`` and freeze it.

    Raises
    ------
    NormalizationError
        A source PMF or a strategy/kernel row is not a probability vector.
    StructureError
        Duplicate ids, empty or dangling visibility, wrong table shapes.
    """
    if isinstance(spec, ValidatedNetwork):
        return spec
    has_parties = spec.parties is not None
    has_kernel = spec.kernel is not None
    if has_parties == has_kernel:
        raise StructureError("give exactly one of parties or kernel")

    ids = [s.id for s in spec.sources]
    if len(set(ids)) != len(ids):
        raise StructureError(f"duplicate source ids in {ids}")
    if has_kernel and not spec.sources:
        raise StructureError("blackbox network needs at least one source")
    n_parties = len(spec.parties) if has_parties else 1
    if has_parties and n_parties == 0:
        raise StructureError("structured network needs at least one party")

    sources = []
    for s in sorted(spec.sources, key=lambda s: s.id):
        if not isinstance(s.id, str) or not s.id:
            raise StructureError(f"bad source id {s.id!r}")
        pmf = as_pmf(s.pmf, f"source {s.id!r}")
        vis = frozenset(int(i) for i in s.visible_to)
        if not vis:
            raise StructureError(f"source {s.id!r} is visible to no party")
        if any(i < 0 or i >= n_parties for i in vis):
            raise StructureError(
                f"source {s.id!r} references unknown party in {sorted(vis)}")
        sources.append(SourceSpec(s.id, _frozen(pmf), vis))
    sources = tuple(sources)
    sizes = [s.size for s in sources]

    if has_kernel:
        x_size, a_size = int(spec.input_size), int(spec.output_size)
        if x_size < 1 or a_size < 1:
            raise StructureError("alphabet sizes must be positive")
        kernel = np.asarray(spec.kernel, dtype=float)
        want = (x_size, math.prod(sizes), a_size)
        if kernel.shape != want:
            raise StructureError(f"kernel shape {kernel.shape} != {want}")
        _check_rows(kernel, "kernel")
        in_rad = tuple(spec.input_radices or (x_size,))
        out_rad = tuple(spec.output_radices or (a_size,))
        if math.prod(in_rad) != x_size or math.prod(out_rad) != a_size:
            raise StructureError("radices do not multiply to alphabet sizes")
        return ValidatedNetwork(sources, None, _frozen(kernel), x_size,
                                a_size, in_rad, out_rad, ((),))

    names = [p.name for p in spec.parties]
    if len(set(names)) != len(names):
        raise StructureError(f"duplicate party names in {names}")
    parties, visible = [], []
    for i, p in enumerate(spec.parties):
        if int(p.input_size) < 1 or int(p.output_size) < 1:
            raise StructureError(f"party {p.name!r}: alphabet sizes must be positive")
        vis = tuple(k for k, s in enumerate(sources) if i in s.visible_to)
        n_tuples = math.prod(sizes[k] for k in vis)
        strat = np.asarray(p.strategy, dtype=float)
        want = (int(p.input_size), n_tuples, int(p.output_size))
        if strat.shape != want:
            raise StructureError(
                f"party {p.name!r}: strategy shape {strat.shape} != {want}")
        _check_rows(strat, f"party {p.name!r} strategy")
        parties.append(PartySpec(p.name, int(p.input_size),
                                 int(p.output_size), _frozen(strat)))
        visible.append(vis)
    in_rad = tuple(p.input_size for p in parties)
    out_rad = tuple(p.output_size for p in parties)
    return ValidatedNetwork(sources, tuple(parties), None, math.prod(in_rad),
                            math.prod(out_rad), in_rad, out_rad, tuple(visible))


@dataclass(frozen=True, eq=False)
class ConditionalDistribution:
    """Dense table ``table[x, a] = p(a | x)`` over joint inputs and outputs."""

    table: np.ndarray
    input_radices: tuple = None
    output_radices: tuple = None

    def __post_init__(self):
        t = np.asarray(self.table, dtype=float)
        if t.ndim != 2:
            raise ShapeMismatch(f"expected a 2-d table, got shape {t.shape}")
        object.__setattr__(self, "table", t)
        if self.input_radices is None:
            object.__setattr__(self, "input_radices", (t.shape[0],))
        if self.output_radices is None:
            object.__setattr__(self, "output_radices", (t.shape[1],))
        if (math.prod(self.input_radices) != t.shape[0]
                or math.prod(self.output_radices) != t.shape[1]):
            raise ShapeMismatch("radices do not match the table shape")

    @property
    def input_size(self):
        return self.table.shape[0]

    @property
    def output_size(self):
        return self.table.shape[1]

    def check(self):
        _check_rows(self.table, "conditional distribution")
        return self

    def to_csv(self, fh=None):
        """Write ``x,a,p`` rows; return the text when ``fh`` is None."""
        buf = io.StringIO() if fh is None else fh
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["x", "a", "p"])
        for x in range(self.input_size):
            for a in range(self.output_size):
                w.writerow([x, a, f"{self.table[x, a]:.17g}"])
        if fh is None:
            return buf.getvalue()

    @classmethod
    def from_csv(cls, fh, input_radices, output_radices):
        table = np.full((math.prod(input_radices), math.prod(output_radices)),
                        np.nan)
        reader = csv.DictReader(fh)
        if reader.fieldnames != ["x", "a", "p"]:
            raise StructureError(f"bad CSV header {reader.fieldnames}")
        for row in reader:
            x, a = int(row["x"]), int(row["a"])
            if not (0 <= x < table.shape[0] and 0 <= a < table.shape[1]):
                raise ShapeMismatch(f"entry ({x},{a}) outside {table.shape}")
            table[x, a] = float(row["p"])
        if np.isnan(table).any():
            raise StructureError("CSV does not cover every (x, a) pair")
        return cls(table, tuple(input_radices), tuple(output_radices)).check()


def _as_table(p):
    if isinstance(p, ConditionalDistribution):
        return p.table
    return np.asarray(p, dtype=float)


def infinity_distance(p, q):
    """Largest absolute gap ``max_{x,a} |p(a|x) - q(a|x)|``."""
    tp, tq = _as_table(p), _as_table(q)
    if tp.shape != tq.shape:
        raise ShapeMismatch(f"{tp.shape} vs {tq.shape}")
    if tp.size == 0:
        return 0.0
    return float(np.max(np.abs(tp - tq)))


def _check_cap(net, cap):
    cells = net.n_source_tuples * net.input_size * net.output_size
    if cells > cap:
        raise EnumerationCapExceeded(
            f"{cells} table cells exceed the enumeration cap {cap}")


def evaluate(net, cap=DEFAULT_ENUMERATION_CAP):
    """Exact outcome distribution ``p(a|x) = E_r[kernel(a|x,r)]``.

    Structured networks are contracted party by party with ``np.einsum``;
    the full kernel is never materialized.
    """
    net = validate_network(net)
    _check_cap(net, cap)
    if net.is_blackbox:
        weights = source_tuple_weights(net)
        table = np.einsum("xra,r->xa", net.kernel, weights)
    else:
        m, h = len(net.sources), len(net.parties)
        sizes = net.source_sizes
        operands = []
        for k, s in enumerate(net.sources):
            operands += [s.pmf, [k]]
        for i, p in enumerate(net.parties):
            vis = net.visible_positions(i)
            shaped = p.strategy.reshape(
                (p.input_size,) + tuple(sizes[k] for k in vis) + (p.output_size,))
            operands += [shaped, [m + i, *vis, m + h + i]]
        out = list(range(m, m + 2 * h))
        table = np.einsum(*operands, out, optimize=True)
        table = table.reshape(net.input_size, net.output_size)
    return ConditionalDistribution(table, net.input_radices, net.output_radices)


def source_tuple_weights(net):
    """Joint probability of every source tuple, flattened in mixed radix."""
    w = np.ones(1)
    for s in net.sources:
        w = np.outer(w, s.pmf).ravel()
    return w


def expand_to_blackbox(net):
    """Equivalent blackbox network with kernel built tuple by tuple."""
    net = validate_network(net)
    if net.is_blackbox:
        return net
    sizes = net.source_sizes
    kernel = np.empty((net.input_size, net.n_source_tuples, net.output_size))
    x_tuples = list(itertools.product(*(range(p.input_size) for p in net.parties)))
    for r_idx, r in enumerate(itertools.product(*(range(n) for n in sizes))):
        rows = []
        for i, p in enumerate(net.parties):
            vis = net.visible_positions(i)
            local = 0
            for k in vis:
                local = local * sizes[k] + r[k]
            rows.append(p.strategy[:, local, :])
        for x_idx, xs in enumerate(x_tuples):
            joint = np.ones(1)
            for i, xi in enumerate(xs):
                joint = np.outer(joint, rows[i][xi]).ravel()
            kernel[x_idx, r_idx] = joint
    spec = NetworkSpec(
        sources=[SourceSpec(s.id, s.pmf, frozenset({0})) for s in net.sources],
        kernel=kernel, input_size=net.input_size, output_size=net.output_size,
        input_radices=net.input_radices, output_radices=net.output_radices)
    return validate_network(spec)


def _permute_source_axes(table, lead, old_sizes, order, trail):
    """Reorder the flattened source-tuple axis of a 3-d table.

    ``order[j]`` is the old position of the source that ends up at new
    position ``j``.
    """
    shaped = table.reshape((lead,) + tuple(old_sizes) + (trail,))
    axes = [0] + [1 + k for k in order] + [len(old_sizes) + 1]
    moved = shaped.transpose(axes)
    return moved.reshape(lead, -1, trail)


def rename_sources(net, mapping):
    """Rename source ids and reindex every table to the new sorted order.

    The outcome distribution is unchanged.
    """
    net = validate_network(net)
    new_ids = [mapping.get(s.id, s.id) for s in net.sources]
    if len(set(new_ids)) != len(new_ids):
        raise StructureError(f"renaming produces duplicate ids {new_ids}")
    renamed = [SourceSpec(n, s.pmf, s.visible_to)
               for n, s in zip(new_ids, net.sources)]
    if net.is_blackbox:
        order = sorted(range(len(new_ids)), key=lambda k: new_ids[k])
        kernel = _permute_source_axes(net.kernel, net.input_size,
                                      net.source_sizes, order, net.output_size)
        return validate_network(NetworkSpec(
            renamed, kernel=kernel, input_size=net.input_size,
            output_size=net.output_size, input_radices=net.input_radices,
            output_radices=net.output_radices))
    parties = []
    for i, p in enumerate(net.parties):
        vis = net.visible_positions(i)
        local = sorted(range(len(vis)), key=lambda j: new_ids[vis[j]])
        strat = _permute_source_axes(p.strategy, p.input_size,
                                     [net.source_sizes[k] for k in vis],
                                     local, p.output_size)
        parties.append(replace(p, strategy=strat))
    return validate_network(NetworkSpec(renamed, parties=parties))


def restrict_source(net, source_id, keep):
    """Drop every value of a source not listed in ``keep``.

    Tables are sliced along that source's axis and the PMF is renormalized
    over the kept values, so this is exact when the dropped values carry
    zero probability.
    """
    net = validate_network(net)
    pos = net.source_position(source_id)
    keep = np.asarray(keep, dtype=int)
    old = net.sources[pos]
    pmf = old.pmf[keep]
    pmf = pmf / pmf.sum()
    sources = list(net.sources)
    sources[pos] = SourceSpec(old.id, pmf, old.visible_to)
    sizes = net.source_sizes

    def slice_table(table, lead, positions, trail):
        shaped = table.reshape((lead,) + tuple(sizes[k] for k in positions) + (trail,))
        axis = 1 + positions.index(pos)
        return np.take(shaped, keep, axis=axis).reshape(lead, -1, trail)

    if net.is_blackbox:
        kernel = slice_table(net.kernel, net.input_size,
                             list(range(len(sizes))), net.output_size)
        return validate_network(NetworkSpec(
            sources, kernel=kernel, input_size=net.input_size,
            output_size=net.output_size, input_radices=net.input_radices,
            output_radices=net.output_radices))
    parties = []
    for i, p in enumerate(net.parties):
        vis = list(net.visible_positions(i))
        if pos in vis:
            p = replace(p, strategy=slice_table(p.strategy, p.input_size,
                                                vis, p.output_size))
        parties.append(p)
    return validate_network(NetworkSpec(sources, parties=parties))


def prune_source(net, source_id):
    """Restrict a source to its support."""
    net = validate_network(net)
    return restrict_source(net, source_id, net.source(source_id).support)


def _unique_name(name, taken):
    while name in taken:
        name = name + "_2"
    return name


def product_compose(n1, n2):
    """Run two networks side by side with independent sources.

    Colliding source ids and party names of ``n2`` get a ``_2`` suffix.
    Joint inputs and outputs of ``n1`` are the more significant digits.
    The result is structured when both inputs are, blackbox otherwise.
    """
    n1, n2 = validate_network(n1), validate_network(n2)
    taken = set(n1.source_ids)
    mapping = {}
    for sid in n2.source_ids:
        new = _unique_name(sid, taken | set(n2.source_ids) - {sid})
        taken.add(new)
        if new != sid:
            mapping[sid] = new
    if mapping:
        n2 = rename_sources(n2, mapping)

    if not n1.is_blackbox and not n2.is_blackbox:
        h1 = len(n1.parties)
        sources = list(n1.sources) + [
            SourceSpec(s.id, s.pmf, frozenset(i + h1 for i in s.visible_to))
            for s in n2.sources]
        names = {p.name for p in n1.parties}
        parties = list(n1.parties)
        for p in n2.parties:
            new = _unique_name(p.name, names)
            names.add(new)
            parties.append(replace(p, name=new))
        return validate_network(NetworkSpec(sources, parties=parties))

    b1, b2 = expand_to_blackbox(n1), expand_to_blackbox(n2)
    k = np.einsum("xra,ysb->xyrsab", b1.kernel, b2.kernel)
    x_size = b1.input_size * b2.input_size
    a_size = b1.output_size * b2.output_size
    ids = list(b1.source_ids) + list(b2.source_ids)
    sizes = list(b1.source_sizes) + list(b2.source_sizes)
    k = k.reshape(x_size, math.prod(sizes), a_size)
    order = sorted(range(len(ids)), key=lambda j: ids[j])
    k = _permute_source_axes(k, x_size, sizes, order, a_size)
    sources = [SourceSpec(s.id, s.pmf, frozenset({0}))
               for s in b1.sources + b2.sources]
    return validate_network(NetworkSpec(
        sources, kernel=k, input_size=x_size, output_size=a_size,
        input_radices=b1.input_radices + b2.input_radices,
        output_radices=b1.output_radices + b2.output_radices))


# -- JSON spec files ---------------------------------------------------------

def network_from_dict(doc):
    """Parse the JSON network document into a validated network."""
    try:
        if "blackbox" in doc:
            bb = doc["blackbox"]
            sources = [SourceSpec(s["id"], s["pmf"], frozenset({0}))
                       for s in bb["sources"]]
            return validate_network(NetworkSpec(
                sources, kernel=np.asarray(bb["kernel"], dtype=float),
                input_size=bb["inputs"], output_size=bb["outputs"]))
        declared = {s["id"]: s for s in doc["sources"]}
        seen_by = {sid: set() for sid in declared}
        parties = []
        for i, p in enumerate(doc["parties"]):
            for sid in p.get("sees", []):
                if sid not in declared:
                    raise StructureError(
                        f"party {p['name']!r} sees undeclared source {sid!r}")
                seen_by[sid].add(i)
            parties.append(PartySpec(p["name"], int(p["inputs"]),
                                     int(p["outputs"]),
                                     np.asarray(p["strategy"], dtype=float)))
        sources = [SourceSpec(sid, s["pmf"], frozenset(seen_by[sid]))
                   for sid, s in declared.items()]
        return validate_network(NetworkSpec(sources, parties=parties))
    except (KeyError, TypeError) as exc:
        raise StructureError(f"malformed network document: {exc!r}") from exc
    except ValueError as exc:
        if isinstance(exc, (NormalizationError, StructureError)):
            raise
        raise StructureError(f"malformed network document: {exc}") from exc


def network_to_dict(net):
    net = validate_network(net)
    sources = [{"id": s.id, "pmf": s.pmf.tolist()} for s in net.sources]
    if net.is_blackbox:
        return {"blackbox": {"inputs": net.input_size,
                             "outputs": net.output_size,
                             "sources": sources,
                             "kernel": net.kernel.tolist()}}
    parties = []
    for i, p in enumerate(net.parties):
        parties.append({
            "name": p.name,
            "inputs": p.input_size,
            "outputs": p.output_size,
            "sees": [net.sources[k].id for k in net.visible_positions(i)],
            "strategy": p.strategy.tolist(),
        })
    return {"parties": parties, "sources": sources}


def load_network(path):
    with open(path) as fh:
        try:
            doc = json.load(fh)
        except json.JSONDecodeError as exc:
            raise StructureError(f"{path}: invalid JSON ({exc})") from exc
    return network_from_dict(doc)


def save_network(net, path):
    with open(path, "w") as fh:
        json.dump(network_to_dict(net), fh, indent=1)
        fh.write("\n")
