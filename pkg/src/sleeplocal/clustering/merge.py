"""Merging a clustering of the virtual graph back into a clustering of G.

Given ``(label, delta)`` on G and ``(label2, delta2)`` on its virtual graph,
every node takes ``label2`` of its cluster; the new root is the old root of
the root cluster, and new distances are BFS distances inside the merged
cluster.  Distributed version, constant awake rounds per node:

1. each cluster gathers at its root the adjacency of its nodes towards
   nodes of the same merged cluster, and picks as virtual parent the
   neighbouring cluster with the same ``label2`` and ``delta2`` one smaller,
   through the lexicographically smallest connecting edge;
2. a convergecast then broadcast along those virtual parents, simulated on
   the virtual graph, brings every merged structure to its root, which
   computes the distances once and sends them back.
"""
from __future__ import annotations

from typing import NamedTuple

from ..engine import ProgramError, Sequence, Stage, run
from ..graph import Graph
from ..primitives.trees import Broadcast, Convergecast, TreeInput
from .model import (ClusteringError, UniquelyLabeledClustering, build_virtual_graph,
                    validate_uniquely_labeled)
from .onestep import bfs_from
from .simulate import ClusterAggregate, ClusterInput, VirtualSimulation, phase_length


class MergeInput(NamedTuple):
    label: int
    delta: int
    label2: int
    delta2: int


class ClusterSummary(NamedTuple):
    parent: int | None          # label of the virtual parent cluster
    edge: tuple[int, int] | None
    structure: dict             # node -> (delta, neighbours in the same merged cluster)


def _record(node, value: MergeInput, entries):
    same = tuple(u for u, _, _, other in entries if other.label2 == value.label2)
    return value, same, tuple((u, other) for u, _, _, other in entries
                               if other.label2 == value.label2 and other.label != value.label)


def _combine(root, records) -> ClusterSummary:
    structure = {}
    best = None
    top = None
    for node, (value, same, foreign) in records:
        top = value
        structure[node] = (value.delta, same)
        for u, other in foreign:
            if other.delta2 == value.delta2 - 1:
                cand = (node, u, other.label)
                if best is None or cand < best:
                    best = cand
    if top.delta2 == 0:
        return ClusterSummary(None, None, structure)
    if best is None:
        raise ProgramError(f"cluster {top.label}: no neighbouring cluster at virtual distance {top.delta2 - 1}")
    return ClusterSummary(best[2], (best[0], best[1]), structure)


def summary_stage() -> Stage:
    """Stage 1; expects carry ``MergeInput``."""
    def prepare(carry, _prev):
        return carry, ClusterInput(carry.label, carry.delta, carry)
    return Stage(ClusterAggregate(_record, _combine),
                 lambda ctx: phase_length(ctx.n), prepare)


def _tree_to_distances(carry: TreeInput, collected):
    if carry.parent is not None:
        return carry, carry._replace(payload=None)
    merged = {}
    for structure in collected.values():
        merged.update(structure)
    root = next(v for v, (d, _) in carry.payload.items() if d == 0)
    adjacency = {v: nbrs for v, (_, nbrs) in merged.items()}
    return carry, carry._replace(payload=bfs_from(root, adjacency))


def merge_tree_program() -> Sequence:
    """Virtual-graph program: structures up the virtual tree, distances back down."""
    return Sequence([Stage(Convergecast(), lambda ctx: ctx.n + 2),
                     Stage(Broadcast(), lambda ctx: ctx.n + 2, _tree_to_distances)])


def distance_stage(n_of=lambda carry: carry.n) -> Stage:
    """Stage 2; expects a carry with ``label``, ``delta``, ``delta2`` and ``n``."""
    def prepare(carry, summary: ClusterSummary):
        tree = TreeInput(summary.parent, carry.delta2 + 1, n_of(carry), summary.structure)
        return carry, ClusterInput(carry.label, carry.delta, tree)
    h = merge_tree_program()
    return Stage(VirtualSimulation(h), lambda ctx: h.round_bound(ctx.n) * phase_length(ctx.n), prepare)


class _Carry(NamedTuple):
    id: int
    n: int
    label: int
    delta: int
    label2: int
    delta2: int


class MergeProgram(Sequence):
    """Node input ``MergeInput``; output ``(label'', delta'')``."""

    def __init__(self):
        super().__init__(
            [summary_stage(), distance_stage()],
            finish=lambda carry, dist: (carry.label2, dist[carry.id]),
            initial=lambda ctx: _Carry(ctx.id, ctx.n, *ctx.input))


def merge_direct(g: Graph, first: UniquelyLabeledClustering,
                 second: UniquelyLabeledClustering) -> UniquelyLabeledClustering:
    """Centralised reference for the merge."""
    label = {v: second.label[first.label[v]] for v in first.label}
    delta = {}
    groups: dict[int, list[int]] = {}
    for v, lab in label.items():
        groups.setdefault(lab, []).append(v)
    for lab, members in groups.items():
        roots = [v for v in members if first.delta[v] == 0 and second.delta[first.label[v]] == 0]
        if len(roots) != 1:
            raise ClusteringError(f"merged cluster {lab} has {len(roots)} roots")
        dist = g.bfs_distances(roots[0], set(members))
        for v in members:
            if v not in dist:
                raise ClusteringError(f"merged cluster {lab} is not connected at {v}")
            delta[v] = dist[v]
    return UniquelyLabeledClustering(label, delta)


def merge_two_level(g: Graph, first: UniquelyLabeledClustering,
                    second: UniquelyLabeledClustering, *, trace: bool = False):
    """Run the distributed merge; returns ``(clustering, RunResult)``."""
    report = validate_uniquely_labeled(g, first)
    if not report.ok:
        raise ClusteringError("first clustering: " + "; ".join(report.violations))
    vg = build_virtual_graph(g, first)
    report = validate_uniquely_labeled(vg.graph, second)
    if not report.ok:
        raise ClusteringError("second clustering: " + "; ".join(report.violations))
    inputs = {v: MergeInput(first.label[v], first.delta[v], second.label[first.label[v]],
                            second.delta[first.label[v]]) for v in g.nodes}
    res = run(g, MergeProgram(), inputs, trace=trace)
    out = UniquelyLabeledClustering({v: o[0] for v, o in res.outputs.items()},
                                    {v: o[1] for v, o in res.outputs.items()})
    return out, res
