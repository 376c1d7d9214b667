"""Experiment configuration, single runs, sweeps and CSV output."""
from __future__ import annotations

import csv
import io
import json
import math
from dataclasses import asdict, dataclass, field
from typing import Any

from .clustering.model import validate_colored
from .clustering.pipeline import PipelineParams, pipeline
from .engine import Sequence, Stage, run
from .graph import Graph, GraphFamily, generate, load_edge_list
from .olocal.problems import RULES
from .olocal.solvers import solve
from .primitives.linial import log_star
from .primitives.trees import Broadcast, Convergecast, TreeInput

CSV_HEADER = ["n", "delta", "family", "seed", "algorithm", "max_awake", "mean_awake",
              "max_round", "distinct_colors", "valid"]
ALGORITHMS = ("cluster", "solve-coloring", "solve-mis", "primitives")


@dataclass
class ExperimentConfig:
    family: str = "path"
    n: int = 16
    p: float | None = None
    d: int | None = None
    rows: int | None = None
    seed: int = 0
    id_exponent: int = 1
    input: str | None = None
    algorithm: str = "cluster"
    b: int | None = None
    use_ids: bool = False
    repetitions: int = 1

    def family_spec(self, n: int | None = None, seed: int | None = None) -> GraphFamily:
        params: dict[str, Any] = {"n": self.n if n is None else n}
        for key in ("p", "d", "rows"):
            if getattr(self, key) is not None:
                params[key] = getattr(self, key)
        return GraphFamily(self.family, params, self.seed if seed is None else seed, self.id_exponent)

    def graph(self, n: int | None = None, seed: int | None = None) -> Graph:
        if self.input:
            return load_edge_list(self.input)
        return generate(self.family_spec(n, seed))

    def to_json(self) -> str:
        return json.dumps(asdict(self), sort_keys=True)


@dataclass
class MetricsRow:
    n: int
    delta: int
    family: str
    seed: int
    algorithm: str
    max_awake: int
    mean_awake: float
    max_round: int
    distinct_colors: int | None
    valid: bool

    def as_list(self) -> list:
        return [self.n, self.delta, self.family, self.seed, self.algorithm, self.max_awake,
                f"{self.mean_awake:.4f}", self.max_round,
                "" if self.distinct_colors is None else self.distinct_colors,
                "true" if self.valid else "false"]


@dataclass
class RunOutcome:
    row: MetricsRow
    graph: Graph
    artifact: Any = None             # clustering or solution
    metrics: Any = None
    extra: dict = field(default_factory=dict)


def _params(cfg: ExperimentConfig, n: int) -> PipelineParams:
    params = PipelineParams.for_n(n)
    if cfg.b is not None:
        params = PipelineParams(params.n, params.k, cfg.b, params.a)
    return params


def _row(cfg, g, seed, metrics, colors, valid) -> MetricsRow:
    return MetricsRow(g.n, g.max_degree, "file" if cfg.input else cfg.family, seed, cfg.algorithm,
                      metrics.awake_complexity, metrics.mean_awake, metrics.max_round, colors, valid)


def run_primitives(g: Graph):
    """Broadcast then convergecast on a BFS forest labelled by depth."""
    parent: dict[int, int | None] = {}
    depth: dict[int, int] = {}
    for comp in g.components():
        root = comp[0]
        dist = g.bfs_distances(root)
        for v in comp:
            depth[v] = dist[v]
            parent[v] = None if v == root else min(u for u in g.adj[v] if dist[u] == dist[v] - 1)
    bound = max(depth.values(), default=0) + 1
    inputs = {v: TreeInput(parent[v], depth[v] + 1, bound, f"m{v}" if parent[v] is None else None)
              for v in g.nodes}

    def to_ccast(carry, payload):
        return carry, carry._replace(payload=(payload, carry.parent))
    prog = Sequence([Stage(Broadcast(), bound + 2), Stage(Convergecast(), bound + 2, to_ccast)])
    res = run(g, prog, inputs)
    ok = all(isinstance(o, dict) == (parent[v] is None) for v, o in res.outputs.items())
    return res, ok


def run_once(cfg: ExperimentConfig, n: int | None = None, seed: int | None = None) -> RunOutcome:
    if cfg.algorithm not in ALGORITHMS:
        raise ValueError(f"unknown algorithm {cfg.algorithm!r}; expected one of {ALGORITHMS}")
    seed = cfg.seed if seed is None else seed
    g = cfg.graph(n, seed)
    if cfg.algorithm == "cluster":
        pr = pipeline(g, _params(cfg, g.n), use_ids=cfg.use_ids)
        ok = validate_colored(g, pr.clustering).ok
        row = _row(cfg, g, seed, pr.result.metrics, pr.clustering.num_colors(), ok)
        return RunOutcome(row, g, pr.clustering, pr.result.metrics, {"virtual_sizes": pr.virtual_sizes})
    if cfg.algorithm == "primitives":
        res, ok = run_primitives(g)
        return RunOutcome(_row(cfg, g, seed, res.metrics, None, ok), g, None, res.metrics)
    rule = RULES[cfg.algorithm.split("-", 1)[1]]
    res = solve(g, rule, params=_params(cfg, g.n), use_ids=cfg.use_ids)
    ok = rule.validate(g, res.outputs).ok
    colors = len(set(res.outputs.values())) if rule.name == "coloring" else None
    return RunOutcome(_row(cfg, g, seed, res.metrics, colors, ok), g, res.outputs, res.metrics)


def awake_ratio(row: MetricsRow) -> float:
    """``max_awake / (sqrt(log2 n) * (log* n + 1))``."""
    denom = math.sqrt(math.log2(row.n)) * (log_star(row.n) + 1) if row.n > 1 else 1.0
    return row.max_awake / denom


def sweep(cfg: ExperimentConfig, ns: list[int], seeds: list[int]) -> list[MetricsRow]:
    rows = [run_once(cfg, n, s).row for n in ns for s in seeds]
    return sorted(rows, key=lambda r: (r.n, r.seed))


def rows_to_csv(rows: list[MetricsRow]) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(CSV_HEADER)
    for r in rows:
        w.writerow(r.as_list())
    return buf.getvalue()
