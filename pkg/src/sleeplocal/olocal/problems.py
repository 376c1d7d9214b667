"""O-LOCAL problems: acyclic orientations, greedy rules, the sequential oracle.

An orientation is stored as ``succ``: node -> out-neighbours.  A node's
output may depend on everything reachable from it along out-edges, so the
sequential oracle decides sinks first.
"""
from __future__ import annotations

import heapq
import json
from dataclasses import dataclass
from typing import Any, Callable, Mapping

from ..graph import Graph


class OrientationError(ValueError):
    pass


class RuleError(ValueError):
    pass


@dataclass(frozen=True)
class Orientation:
    succ: Mapping[int, frozenset[int]]

    def reachable(self, v: int) -> frozenset[int]:
        """``G_mu(v)``: ``v`` plus every node reachable from it."""
        seen = {v}
        stack = [v]
        while stack:
            for u in self.succ[stack.pop()]:
                if u not in seen:
                    seen.add(u)
                    stack.append(u)
        return frozenset(seen)

    def is_acyclic(self) -> bool:
        return len(topological_order(self)) == len(self.succ)

    def covers(self, g: Graph) -> bool:
        """Every edge of ``g`` is oriented exactly one way."""
        for u, v in g.edges():
            if (v in self.succ[u]) == (u in self.succ[v]):
                return False
        return all(self.succ[v] <= g.adj[v] for v in g.nodes)


def topological_order(mu: Orientation) -> list[int]:
    """Sinks first; among available nodes the smallest ID goes first."""
    pending = {v: len(s) for v, s in mu.succ.items()}
    pred: dict[int, list[int]] = {v: [] for v in mu.succ}
    for v, s in mu.succ.items():
        for u in s:
            pred[u].append(v)
    ready = [v for v, c in pending.items() if c == 0]
    heapq.heapify(ready)
    order = []
    while ready:
        v = heapq.heappop(ready)
        order.append(v)
        for w in pred[v]:
            pending[w] -= 1
            if pending[w] == 0:
                heapq.heappush(ready, w)
    return order


def orientation_from_coloring(g: Graph, colors: Mapping[int, int]) -> Orientation:
    """Every edge points from its higher-coloured end to its lower-coloured end."""
    for u, v in g.edges():
        if colors[u] == colors[v]:
            raise OrientationError(f"improper colouring: {u} and {v} share colour {colors[u]}")
    return Orientation({v: frozenset(u for u in g.adj[v] if colors[u] < colors[v]) for v in g.nodes})


def orientation_from_ids(g: Graph) -> Orientation:
    return orientation_from_coloring(g, {v: v for v in g.nodes})


def clustered_orientation(g: Graph, gamma: Mapping[int, int], delta: Mapping[int, int]) -> Orientation:
    """Edges between clusters go from higher to lower colour; inside a
    cluster from smaller ``(delta, ID)`` to larger."""
    succ = {}
    for v in g.nodes:
        out = []
        for u in g.adj[v]:
            if gamma[u] != gamma[v]:
                if gamma[u] < gamma[v]:
                    out.append(u)
            elif (delta[v], v) < (delta[u], u):
                out.append(u)
        succ[v] = frozenset(out)
    return Orientation(succ)


class RuleView:
    """What a greedy rule may look at when deciding ``node``.

    ``succ``, ``input`` and ``output`` may be queried for any node of
    ``G_mu(node)``; ``output`` is undefined for ``node`` itself.
    """

    __slots__ = ("node", "_succ", "_input", "_output")

    def __init__(self, node: int, succ: Callable[[int], frozenset], input_of: Callable[[int], Any],
                 output_of: Callable[[int], Any]):
        self.node = node
        self._succ = succ
        self._input = input_of
        self._output = output_of

    @property
    def out_neighbors(self) -> frozenset[int]:
        return self._succ(self.node)

    def succ(self, u: int) -> frozenset[int]:
        return self._succ(u)

    def input(self, u: int | None = None):
        return self._input(self.node if u is None else u)

    def output(self, u: int):
        if u == self.node:
            raise RuleError("a node's own output is not available to its rule")
        return self._output(u)

    def reachable(self) -> frozenset[int]:
        seen = {self.node}
        stack = [self.node]
        while stack:
            for u in self._succ(stack.pop()):
                if u not in seen:
                    seen.add(u)
                    stack.append(u)
        return frozenset(seen)


@dataclass(frozen=True)
class GreedyRule:
    name: str
    decide: Callable[[RuleView], Any]
    validate: Callable[[Graph, Mapping[int, Any]], "SolutionReport"]
    is_label: Callable[[Any], bool] = lambda x: True

    def __call__(self, view: RuleView):
        out = self.decide(view)
        if not self.is_label(out):
            raise RuleError(f"rule {self.name} returned invalid label {out!r} at node {view.node}")
        return out


@dataclass
class SolutionReport:
    violations: list[str]

    @property
    def ok(self) -> bool:
        return not self.violations

    def __bool__(self):
        return self.ok

    def to_json(self) -> str:
        return json.dumps({"ok": self.ok, "violations": self.violations})


def _first_fit(view: RuleView) -> int:
    used = {view.output(u) for u in view.out_neighbors}
    c = 1
    while c in used:
        c += 1
    return c


def _greedy_mis(view: RuleView) -> str:
    return "out" if any(view.output(u) == "in" for u in view.out_neighbors) else "in"


def is_proper_coloring(g: Graph, colors: Mapping[int, Any], palette: int | None = None) -> SolutionReport:
    palette = g.max_degree + 1 if palette is None else palette
    bad = []
    for v in g.nodes:
        c = colors.get(v)
        if not isinstance(c, int) or not 1 <= c <= palette:
            bad.append(f"node {v}: colour {c!r} outside 1..{palette}")
    for u, v in g.edges():
        if colors.get(u) == colors.get(v):
            bad.append(f"edge ({u}, {v}): both coloured {colors.get(u)!r}")
    return SolutionReport(bad)


def is_mis(g: Graph, chosen) -> SolutionReport:
    """``chosen`` is a set of nodes or a mapping node -> 'in'/'out'."""
    if isinstance(chosen, Mapping):
        bad_labels = [v for v in g.nodes if chosen.get(v) not in ("in", "out")]
        if bad_labels:
            return SolutionReport([f"node {v}: label {chosen.get(v)!r} is not in/out" for v in bad_labels])
        chosen = {v for v in g.nodes if chosen[v] == "in"}
    chosen = set(chosen)
    bad = [f"edge ({u}, {v}): both in the set" for u, v in g.edges() if u in chosen and v in chosen]
    for v in g.nodes:
        if v not in chosen and not (g.adj[v] & chosen):
            bad.append(f"node {v}: not dominated (set is not maximal)")
    return SolutionReport(bad)


first_fit_coloring = GreedyRule("coloring", _first_fit, is_proper_coloring,
                                lambda x: isinstance(x, int) and x >= 1)
greedy_mis = GreedyRule("mis", _greedy_mis, is_mis, lambda x: x in ("in", "out"))

RULES = {"coloring": first_fit_coloring, "mis": greedy_mis}


def sequential_greedy_oracle(g: Graph, mu: Orientation, rule: GreedyRule,
                             inputs: Mapping[int, Any] | None = None) -> dict[int, Any]:
    order = topological_order(mu)
    if len(order) != g.n:
        raise OrientationError("orientation has a directed cycle")
    inputs = inputs or {}
    outputs: dict[int, Any] = {}
    succ = mu.succ.__getitem__
    for v in order:
        outputs[v] = rule(RuleView(v, succ, inputs.get, outputs.__getitem__))
    return outputs


def local_consistency_violations(g: Graph, mu: Orientation, rule: GreedyRule,
                                 outputs: Mapping[int, Any],
                                 inputs: Mapping[int, Any] | None = None) -> list[int]:
    """Nodes whose output differs from the rule re-applied to the final outputs."""
    inputs = inputs or {}
    succ = mu.succ.__getitem__
    bad = []
    for v in g.nodes:
        reach = mu.reachable(v)

        def output_of(u, reach=reach):
            if u not in reach:
                raise RuleError(f"rule looked outside G_mu({v}) at {u}")
            return outputs[u]
        if rule(RuleView(v, succ, inputs.get, output_of)) != outputs[v]:
            bad.append(v)
    return bad
