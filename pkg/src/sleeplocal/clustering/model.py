"""Clusterings, their validators and the contracted (virtual) graph."""
from __future__ import annotations

import json
from dataclasses import dataclass, field
from typing import Mapping

from ..graph import Graph


@dataclass(frozen=True)
class UniquelyLabeledClustering:
    label: Mapping[int, int]
    delta: Mapping[int, int]

    def clusters(self) -> dict[int, list[int]]:
        return _group(self.label)

    def roots(self) -> dict[int, int]:
        return {self.label[v]: v for v, d in self.delta.items() if d == 0}

    def to_json(self) -> str:
        return _dump(self.label, self.delta, "label")


@dataclass(frozen=True)
class ColoredClustering:
    color: Mapping[int, int]
    delta: Mapping[int, int]

    def to_json(self) -> str:
        return _dump(self.color, self.delta, "color")

    def num_colors(self) -> int:
        return len(set(self.color.values()))


def _dump(key_map, delta, key) -> str:
    return json.dumps({str(v): {key: key_map[v], "delta": delta[v]} for v in sorted(key_map)},
                      sort_keys=True, indent=1)


def load_clustering(text: str):
    raw = json.loads(text)
    first = next(iter(raw.values()), {"color": 0})
    key = "label" if "label" in first else "color"
    vals = {int(v): rec[key] for v, rec in raw.items()}
    delta = {int(v): rec["delta"] for v, rec in raw.items()}
    cls = UniquelyLabeledClustering if key == "label" else ColoredClustering
    return cls(vals, delta)


def _group(key_map) -> dict[int, list[int]]:
    groups: dict[int, list[int]] = {}
    for v in sorted(key_map):
        groups.setdefault(key_map[v], []).append(v)
    return groups


@dataclass
class ValidationReport:
    violations: list[str] = field(default_factory=list)

    @property
    def ok(self) -> bool:
        return not self.violations

    def __bool__(self):
        return self.ok

    def to_json(self) -> str:
        return json.dumps({"ok": self.ok, "violations": self.violations})


def _check_component(g: Graph, comp: list[int], delta, name: str, report: ValidationReport):
    roots = [v for v in comp if delta[v] == 0]
    if not roots:
        report.violations.append(f"{name}: no root")
        return
    if len(roots) > 1:
        report.violations.append(f"{name}: two roots ({roots[0]}, {roots[1]})")
        return
    dist = g.bfs_distances(roots[0], set(comp))
    for v in comp:
        if dist.get(v) != delta[v]:
            report.violations.append(f"{name}: distance mismatch at {v}")


def _check_total(g: Graph, maps, report) -> bool:
    for v in g.nodes:
        if any(v not in m for m in maps):
            report.violations.append(f"node {v} has no (label, delta) pair")
    for m in maps:
        extra = set(m) - set(g.adj)
        if extra:
            report.violations.append(f"unknown node {min(extra)}")
    return report.ok


def validate_uniquely_labeled(g: Graph, c: UniquelyLabeledClustering) -> ValidationReport:
    report = ValidationReport()
    if not _check_total(g, (c.label, c.delta), report):
        return report
    for lab, members in c.clusters().items():
        comps = g.components(members)
        if len(comps) > 1:
            report.violations.append(f"label {lab}: cluster is not connected")
            continue
        _check_component(g, members, c.delta, f"label {lab}", report)
    return report


def validate_colored(g: Graph, c: ColoredClustering) -> ValidationReport:
    report = ValidationReport()
    if not _check_total(g, (c.color, c.delta), report):
        return report
    for col, members in _group(c.color).items():
        for comp in g.components(members):
            _check_component(g, comp, c.delta, f"color {col} component at {comp[0]}", report)
    return report


@dataclass(frozen=True)
class VirtualGraph:
    graph: Graph
    back_map: Mapping[int, frozenset[int]]
    root_of: Mapping[int, int]
    cluster_of: Mapping[int, int]


class ClusteringError(ValueError):
    pass


def build_virtual_graph(g: Graph, c) -> VirtualGraph:
    """Contract clusters into vertices.

    For a uniquely-labeled clustering the vertices are the labels.  For a
    colored one every (colour, component) becomes a vertex identified by the
    ID of its root.  Only clustered nodes are contracted, so ``g`` may be a
    supergraph of the clustered node set.
    """
    if isinstance(c, UniquelyLabeledClustering):
        report = validate_uniquely_labeled(g.subgraph(c.label), c)
        if not report.ok:
            raise ClusteringError("; ".join(report.violations))
        cluster_of = dict(c.label)
    else:
        report = validate_colored(g.subgraph(c.color), c)
        if not report.ok:
            raise ClusteringError("; ".join(report.violations))
        cluster_of = {}
        for col, members in _group(c.color).items():
            for comp in g.components(members):
                root = next(v for v in comp if c.delta[v] == 0)
                for v in comp:
                    cluster_of[v] = root
    back: dict[int, set[int]] = {}
    root_of = {}
    for v, i in cluster_of.items():
        back.setdefault(i, set()).add(v)
        if c.delta[v] == 0:
            root_of[i] = v
    adj: dict[int, set[int]] = {i: set() for i in back}
    for v, i in cluster_of.items():
        for u in g.adj[v]:
            j = cluster_of.get(u)
            if j is not None and j != i:
                adj[i].add(j)
    bound = max(g.id_bound, max(adj, default=1))
    h = Graph(adj, id_bound=bound)
    return VirtualGraph(h, {i: frozenset(s) for i, s in back.items()}, root_of, cluster_of)


def singleton_clustering(g: Graph) -> UniquelyLabeledClustering:
    return UniquelyLabeledClustering({v: v for v in g.nodes}, {v: 0 for v in g.nodes})


def random_clustering(g: Graph, num_roots: int, rng) -> UniquelyLabeledClustering:
    """Grow clusters from random roots by a shared BFS; labels are root IDs.

    Every node joins the cluster of the node that discovered it, so clusters
    are connected; distances are recomputed inside each cluster.
    """
    from collections import deque
    label: dict[int, int] = {}
    pool = list(g.nodes)
    roots = rng.sample(pool, min(max(num_roots, 1), len(pool)))
    queue = deque()
    for r in roots:
        label[r] = r
        queue.append(r)
    while True:
        while queue:
            v = queue.popleft()
            nbrs = sorted(g.adj[v])
            rng.shuffle(nbrs)
            for u in nbrs:
                if u not in label:
                    label[u] = label[v]
                    queue.append(u)
        rest = [v for v in pool if v not in label]
        if not rest:
            break
        r = rng.choice(rest)
        label[r] = r
        queue.append(r)
    delta = {}
    for lab, members in _group(label).items():
        dist = g.bfs_distances(lab, set(members))
        delta.update(dist)
    return UniquelyLabeledClustering(label, delta)
