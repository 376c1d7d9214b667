"""Command-line driver: ``cluster``, ``solve``, ``bench`` and ``verify``."""
from __future__ import annotations

import argparse
import json
import sys

from .clustering.model import load_clustering, validate_colored, validate_uniquely_labeled, UniquelyLabeledClustering
from .engine import RoundCapExceeded
from .experiments import ExperimentConfig, awake_ratio, rows_to_csv, run_once, sweep
from .graph import FAMILIES, GraphError, load_edge_list, save_edge_list
from .olocal.problems import RULES

EXIT_OK, EXIT_INVALID, EXIT_USAGE, EXIT_CAP = 0, 1, 2, 3


class UsageError(Exception):
    pass


def _graph_args(p: argparse.ArgumentParser):
    p.add_argument("--config", help="JSON file with default values for any option")
    p.add_argument("--family", choices=FAMILIES)
    p.add_argument("--n", type=int)
    p.add_argument("--p", type=float, help="edge probability (gnp)")
    p.add_argument("--d", type=int, help="degree (regular)")
    p.add_argument("--rows", type=int, help="rows (grid)")
    p.add_argument("--seed", type=int)
    p.add_argument("--id-exponent", type=int, choices=[1, 2, 3, 4], help="IDs drawn from 1..n^s")
    p.add_argument("--input", help="edge-list file instead of a generated graph")
    p.add_argument("--b", type=int, help="override the degree threshold")
    p.add_argument("--use-ids", action="store_true", default=None,
                   help="use IDs as the distance-2 colouring")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="sleeplocal", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)

    c = sub.add_parser("cluster", help="compute a colored BFS-clustering")
    _graph_args(c)
    c.add_argument("--out", help="clustering JSON output")
    c.add_argument("--graph-out", help="write the graph as an edge list")
    c.add_argument("--metrics-out", help="CSV metrics row (default: stdout)")

    s = sub.add_parser("solve", help="solve an O-LOCAL problem end to end")
    _graph_args(s)
    s.add_argument("--problem", choices=sorted(RULES))
    s.add_argument("--out", help="solution JSON output")
    s.add_argument("--graph-out", help="write the graph as an edge list")
    s.add_argument("--metrics-out", help="CSV metrics row (default: stdout)")

    b = sub.add_parser("bench", help="sweep n and emit a CSV of metrics")
    _graph_args(b)
    b.add_argument("--algorithm", choices=["cluster", "solve-coloring", "solve-mis", "primitives"])
    b.add_argument("--ns", help="comma-separated node counts (may be empty)")
    b.add_argument("--seeds", help="comma-separated seeds")
    b.add_argument("--p-scale", type=float, help="gnp: set p = p_scale * b / n per point")
    b.add_argument("--out", help="CSV output (default: stdout)")

    v = sub.add_parser("verify", help="re-validate stored artifacts")
    v.add_argument("--graph", required=True)
    v.add_argument("--clustering")
    v.add_argument("--solution")
    v.add_argument("--problem", choices=sorted(RULES), default="coloring")
    return parser


def _apply_config(args, parser_defaults: dict):
    if getattr(args, "config", None):
        try:
            with open(args.config, encoding="utf-8") as fh:
                conf = json.load(fh)
        except (OSError, json.JSONDecodeError) as exc:
            raise UsageError(f"cannot read config {args.config}: {exc}") from None
        for key, value in conf.items():
            key = key.replace("-", "_")
            if not hasattr(args, key):
                raise UsageError(f"unknown config key {key!r}")
            if getattr(args, key) is None:
                setattr(args, key, value)
    for key, value in parser_defaults.items():
        if getattr(args, key, None) is None:
            setattr(args, key, value)


def _config(args, algorithm: str) -> ExperimentConfig:
    return ExperimentConfig(family=args.family, n=args.n, p=args.p, d=args.d, rows=args.rows,
                            seed=args.seed, id_exponent=args.id_exponent, input=args.input,
                            algorithm=algorithm, b=args.b, use_ids=bool(args.use_ids))


def _write(path, text):
    if path:
        with open(path, "w", encoding="utf-8", newline="\n") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)


def _int_list(text) -> list[int]:
    if isinstance(text, list):
        return [int(x) for x in text]
    text = (text or "").strip()
    try:
        return [int(x) for x in text.split(",") if x.strip()]
    except ValueError:
        raise UsageError(f"expected comma-separated integers, got {text!r}") from None


DEFAULTS = {"family": "path", "n": 16, "seed": 0, "id_exponent": 1, "use_ids": False,
            "problem": "coloring", "algorithm": "cluster", "ns": "", "seeds": "0"}


def cmd_cluster(args) -> int:
    out = run_once(_config(args, "cluster"))
    if args.out:
        _write(args.out, out.artifact.to_json() + "\n")
    if args.graph_out:
        save_edge_list(out.graph, args.graph_out)
    _write(args.metrics_out, rows_to_csv([out.row]))
    return EXIT_OK if out.row.valid else EXIT_INVALID


def cmd_solve(args) -> int:
    out = run_once(_config(args, f"solve-{args.problem}"))
    if args.out:
        _write(args.out, json.dumps({str(v): out.artifact[v] for v in sorted(out.artifact)},
                                    indent=1) + "\n")
    if args.graph_out:
        save_edge_list(out.graph, args.graph_out)
    _write(args.metrics_out, rows_to_csv([out.row]))
    return EXIT_OK if out.row.valid else EXIT_INVALID


def cmd_bench(args) -> int:
    cfg = _config(args, args.algorithm)
    ns, seeds = _int_list(args.ns), _int_list(args.seeds)
    if args.p_scale is not None:
        rows = []
        for n in ns:
            from .clustering.pipeline import PipelineParams
            b = args.b or PipelineParams.for_n(n).b
            cfg.p = min(1.0, args.p_scale * b / n)
            rows.extend(sweep(cfg, [n], seeds))
    else:
        rows = sweep(cfg, ns, seeds)
    _write(args.out, rows_to_csv(rows))
    for r in rows:
        print(f"n={r.n} seed={r.seed} max_awake={r.max_awake} ratio={awake_ratio(r):.3f}",
              file=sys.stderr)
    return EXIT_OK if all(r.valid for r in rows) else EXIT_INVALID


def cmd_verify(args) -> int:
    g = load_edge_list(args.graph)
    failures = []
    if args.clustering:
        with open(args.clustering, encoding="utf-8") as fh:
            try:
                c = load_clustering(fh.read())
            except (ValueError, KeyError, AttributeError) as exc:
                raise UsageError(f"cannot parse clustering: {exc}") from None
        _same_nodes(g, c.delta.keys(), "clustering")
        if isinstance(c, UniquelyLabeledClustering):
            report = validate_uniquely_labeled(g, c)
        else:
            report = validate_colored(g, c)
        failures += report.violations
    if args.solution:
        with open(args.solution, encoding="utf-8") as fh:
            try:
                sol = {int(k): v for k, v in json.load(fh).items()}
            except (ValueError, AttributeError) as exc:
                raise UsageError(f"cannot parse solution: {exc}") from None
        _same_nodes(g, sol.keys(), "solution")
        failures += RULES[args.problem].validate(g, sol).violations
    print(json.dumps({"ok": not failures, "violations": failures}, indent=1))
    return EXIT_OK if not failures else EXIT_INVALID


def _same_nodes(g, keys, what):
    keys = set(keys)
    if keys != set(g.nodes):
        raise UsageError(f"{what} covers {len(keys)} nodes but the graph has {g.n}")


COMMANDS = {"cluster": cmd_cluster, "solve": cmd_solve, "bench": cmd_bench, "verify": cmd_verify}


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        _apply_config(args, DEFAULTS)
        return COMMANDS[args.command](args)
    except (UsageError, GraphError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except RoundCapExceeded as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CAP


if __name__ == "__main__":
    sys.exit(main())
