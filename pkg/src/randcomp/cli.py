"""Command line front end.

Exit codes: 0 success, 1 valid negative answer (infeasible, attempts
exhausted), 2 invalid input or resource cap.
"""

import argparse
import json
import sys

from . import __version__, bounds, compress, scenarios, witness
from .errors import AttemptsExhausted, RandCompError
from .netmodel import (
    ConditionalDistribution,
    load_network,
    network_to_dict,
    save_network,
)

EXIT_OK, EXIT_NEGATIVE, EXIT_ERROR = 0, 1, 2


class UsageError(RandCompError):
    pass


def _require(args, *names):
    missing = [n for n in names if getattr(args, n) is None]
    if missing:
        raise UsageError("missing required option(s): "
                         + ", ".join("--" + n.replace("_", "-") for n in missing))


def _int_list(text):
    return [int(v) for v in text.split(",") if v]


def _float_list(text):
    return [float(v) for v in text.split(",") if v]


def _x_range(text):
    if "-" in text and "," not in text:
        lo, hi = (int(v) for v in text.split("-", 1))
        return list(range(lo, hi + 1))
    return _int_list(text)


def _pairs(text):
    out = []
    for item in text.split(","):
        h, m = item.split(":")
        out.append((int(h), int(m)))
    return out


def _alphabets(text):
    out = []
    for item in text.split(","):
        x, a = item.lower().split("x")
        out.append((int(x), int(a)))
    return tuple(out)


def _write_text(path, text):
    with open(path, "w") as fh:
        fh.write(text)


# -- subcommands ---------------------------------------------------------------

def cmd_bounds(args, out):
    mode = args.mode
    if mode == "single":
        _require(args, "x", "a", "eps")
        print(bounds.single_source_bound(args.x, args.a, args.eps), file=out)
    elif mode == "multi":
        _require(args, "x", "a", "eps")
        deltas = (_float_list(args.deltas) if args.deltas
                  else bounds.equal_split(args.m or 1))
        ns = bounds.multi_source_bound(args.x, args.a, args.eps, deltas)
        print(" ".join(str(n) for n in ns), file=out)
    elif mode == "general":
        _require(args, "h", "xa", "m", "eps")
        print(bounds.general_equal_split_bound(args.h, args.xa, args.m, args.eps), file=out)
    elif mode == "exact":
        _require(args, "h", "xa")
        print(bounds.exact_bound(args.h, args.xa), file=out)
    elif mode == "crossover":
        _require(args, "h", "m", "xa")
        print(f"{bounds.crossover_epsilon(args.h, args.m, args.xa):.17g}", file=out)

    artifacts = []
    if args.csv:
        figure = args.figure or ("crossover" if mode == "crossover" else "cardinality")
        pairs = _pairs(args.pairs) if args.pairs else bounds.DEFAULT_CROSSOVER_PAIRS
        table = bounds.emit_figure_data(figure, _x_range(args.xs),
                                        epsilon=args.eps if args.eps else 0.05,
                                        pairs=pairs)
        _write_text(args.csv, table.to_csv())
        artifacts.append(args.csv)
    return EXIT_OK, artifacts


def cmd_scenario(args, out):
    if args.name == "correlated":
        _require(args, "h", "q")
        net, target = scenarios.build_correlated_no_input(args.h, scenarios.parse_q(args.q))
    elif args.name == "matching-xor":
        _require(args, "x")
        net = scenarios.xor_strategy_network(args.x)
        target = scenarios.target_matching_distribution(args.x)
    else:
        net = scenarios.random_triangle_network(args.seed, args.size)
        target = None

    artifacts = []
    if args.out:
        save_network(net, args.out)
        artifacts.append(args.out)
    else:
        json.dump(network_to_dict(net), out, indent=1)
        out.write("\n")
    if args.target:
        if target is None:
            raise UsageError("the triangle demo has no target distribution")
        _write_text(args.target, target.to_csv())
        artifacts.append(args.target)
    return EXIT_OK, artifacts


def cmd_compress(args, out):
    net = load_network(args.network)
    ids = args.source
    artifacts = []
    try:
        if len(ids) == 1 and not args.deltas:
            n = (args.n[0] if args.n
                 else bounds.single_source_bound(net.input_size, net.output_size, args.eps))
            cfg = compress.CompressionConfig(args.eps, n, args.max_attempts, args.seed)
            result, rep = compress.compress_single(net, ids[0], cfg, jobs=args.jobs)
            reports = [rep]
        else:
            split = (compress.DeltaSplit(tuple(_float_list(args.deltas)))
                     if args.deltas else compress.DeltaSplit.equal(len(ids)))
            ns = args.n if args.n else None
            if ns is not None and len(ns) == 1:
                ns = ns * len(ids)
            result, reports = compress.compress_many(
                net, ids, args.eps, split, args.seed, args.max_attempts, ns,
                jobs=args.jobs)
    except AttemptsExhausted as exc:
        text = compress.reports_to_json(exc.reports)
        out.write(text)
        if args.report:
            _write_text(args.report, text)
            artifacts.append(args.report)
        print(f"attempts exhausted: {exc}", file=sys.stderr)
        return EXIT_NEGATIVE, artifacts

    text = compress.reports_to_json(reports)
    out.write(text)
    if args.report:
        _write_text(args.report, text)
        artifacts.append(args.report)
    if args.out:
        save_network(result, args.out)
        artifacts.append(args.out)
    return EXIT_OK, artifacts


def _verify_target(args):
    if args.builtin == "correlated":
        _require(args, "h", "q")
        _, target = scenarios.build_correlated_no_input(args.h, scenarios.parse_q(args.q))
        k = target.output_radices[0]
        return target, ((1, k),) * args.h
    if args.builtin == "matching":
        _require(args, "x")
        return scenarios.target_matching_distribution(args.x), ((args.x, 2),) * 2
    _require(args, "target", "alphabets")
    alph = _alphabets(args.alphabets)
    with open(args.target) as fh:
        target = ConditionalDistribution.from_csv(
            fh, [x for x, _ in alph], [a for _, a in alph])
    return target, alph


def cmd_verify_lower(args, out):
    target, alph = _verify_target(args)
    if args.min:
        _require(args, "m_max")
        m = witness.min_cardinality(target, alph, args.m_max, args.tol, jobs=args.jobs)
        if m is None:
            print(f"INFEASIBLE up to m={args.m_max}", file=out)
            return EXIT_NEGATIVE, []
        print(m, file=out)
        return EXIT_OK, []
    _require(args, "m")
    problem = witness.FeasibilityProblem(target, alph, args.m, args.tol)
    real = witness.deterministic_feasible(problem, jobs=args.jobs)
    if real is None:
        print("INFEASIBLE", file=out)
        return EXIT_NEGATIVE, []
    artifacts = []
    if args.out:
        _write_text(args.out, json.dumps(real.to_dict(), indent=1) + "\n")
        artifacts.append(args.out)
        print(f"FEASIBLE {args.out}", file=out)
    else:
        print("FEASIBLE", file=out)
        json.dump(real.to_dict(), out)
        out.write("\n")
    return EXIT_OK, artifacts


# -- manifests -----------------------------------------------------------------

def write_manifest(path, args, argv, artifacts):
    params = {k: v for k, v in vars(args).items() if k not in ("func", "manifest")}
    doc = {
        "command": args.command,
        "parameters": params,
        "seed": getattr(args, "seed", None),
        "artifact_paths": list(artifacts),
        "tool_version": __version__,
        "argv": list(argv),
    }
    _write_text(path, json.dumps(doc, indent=1, sort_keys=True) + "\n")


def cmd_replay(args, out):
    with open(args.manifest_file) as fh:
        doc = json.load(fh)
    return main(doc["argv"], out=out), []


# -- parser --------------------------------------------------------------------

def build_parser():
    parser = argparse.ArgumentParser(
        prog="randcomp", allow_abbrev=False,
        description="Shared-randomness compression toolkit for classical networks.")
    parser.add_argument("--version", action="version", version=__version__)
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p):
        p.add_argument("--manifest", help="write the run manifest here")
        return p

    b = common(sub.add_parser("bounds", allow_abbrev=False, help="closed-form cardinality bounds"))
    b.add_argument("--mode", required=True,
                   choices=["single", "multi", "general", "exact", "crossover"])
    b.add_argument("--x", type=int, help="joint input size |X|")
    b.add_argument("--a", type=int, help="joint output size |A|")
    b.add_argument("--eps", type=float)
    b.add_argument("--h", type=int, help="number of parties")
    b.add_argument("--m", type=int, help="number of compressed sources")
    b.add_argument("--xa", type=int, help="per-party |X_i||A_i|")
    b.add_argument("--deltas", help="comma separated tolerance split (multi mode)")
    b.add_argument("--csv", help="write figure data to this CSV file")
    b.add_argument("--figure", choices=["cardinality", "crossover"])
    b.add_argument("--xs", default="1-80", help="x values: 'lo-hi' or comma list")
    b.add_argument("--pairs", help="crossover curves as h:m,h:m,...")
    b.set_defaults(func=cmd_bounds)

    s = common(sub.add_parser("scenario", allow_abbrev=False, help="write a scenario network"))
    s.add_argument("--name", required=True,
                   choices=["correlated", "matching-xor", "triangle-demo"])
    s.add_argument("--h", type=int)
    s.add_argument("--q", help="'uniform:K' or comma separated weights")
    s.add_argument("--x", type=int, help="per-party input size (matching-xor)")
    s.add_argument("--size", type=int, default=32, help="source size (triangle-demo)")
    s.add_argument("--seed", type=int, default=7, help="strategy seed (triangle-demo)")
    s.add_argument("--out", help="network JSON path (stdout if omitted)")
    s.add_argument("--target", help="also write the target distribution CSV")
    s.set_defaults(func=cmd_scenario)

    c = common(sub.add_parser("compress", allow_abbrev=False, help="compress randomness sources"))
    c.add_argument("network", help="network JSON file")
    c.add_argument("--source", action="append", required=True,
                   help="source id; repeat for sequential compression")
    c.add_argument("--eps", type=float, required=True)
    c.add_argument("--seed", type=int, default=0)
    c.add_argument("--n", type=int, action="append",
                   help="samples per source (default: the Hoeffding bound)")
    c.add_argument("--deltas", help="comma separated tolerance split")
    c.add_argument("--max-attempts", type=int, default=100)
    c.add_argument("--jobs", type=int, default=1)
    c.add_argument("--out", help="compressed network JSON path")
    c.add_argument("--report", help="report JSON path")
    c.set_defaults(func=cmd_compress)

    v = common(sub.add_parser("verify-lower", allow_abbrev=False, help="exact realizability search"))
    v.add_argument("--builtin", choices=["correlated", "matching"])
    v.add_argument("--target", help="target CSV (x,a,p)")
    v.add_argument("--alphabets", help="per-party sizes, e.g. '3x2,3x2'")
    v.add_argument("--h", type=int)
    v.add_argument("--q")
    v.add_argument("--x", type=int)
    v.add_argument("--m", type=int)
    v.add_argument("--min", action="store_true", help="report the minimum cardinality")
    v.add_argument("--m-max", type=int)
    v.add_argument("--tol", type=float, default=witness.DEFAULT_TOLERANCE)
    v.add_argument("--jobs", type=int, default=1)
    v.add_argument("--out", help="realization JSON path")
    v.set_defaults(func=cmd_verify_lower)

    r = sub.add_parser("replay", allow_abbrev=False, help="re-run the command stored in a manifest")
    r.add_argument("manifest_file")
    r.set_defaults(func=cmd_replay)
    return parser


def main(argv=None, out=None):
    out = sys.stdout if out is None else out
    argv = list(sys.argv[1:] if argv is None else argv)
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return exc.code
    try:
        code, artifacts = args.func(args, out)
    except (RandCompError, OSError, ValueError, json.JSONDecodeError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_ERROR
    if args.command != "replay":
        manifest = args.manifest or (artifacts[0] + ".manifest.json" if artifacts else None)
        if manifest:
            write_manifest(manifest, args, argv, artifacts)
    return code


def run():
    sys.exit(main())


if __name__ == "__main__":
    run()
