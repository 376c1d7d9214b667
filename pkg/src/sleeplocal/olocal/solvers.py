"""Distributed solvers for O-LOCAL problems.

``ColoringSolver`` needs a proper colouring with colours in ``1..q``.  A node
of colour ``c`` is awake at round 1 (colour exchange) and at rounds ``1 + x``
for ``x`` in ``r(c)``: it listens for ``x < phi(c)``, decides at ``phi(c)``
and forwards everything it knows for ``x > phi(c)``.  Lower colours decide
first and their knowledge reaches every higher neighbour in time.

The clustered solver first lets every cluster root gather its cluster and
fix the orientation inside it, then runs ``ColoringSolver`` on the graph of
clusters, where a vertex decides all of its nodes at once.
"""
from __future__ import annotations

from typing import Any, Mapping, NamedTuple

from ..engine import NodeProgram, ProgramError, Sequence, Stage, Terminate, run, wake_at
from ..clustering.pipeline import PipelineParams, PipelineProgram
from ..clustering.simulate import ClusterAggregate, ClusterInput, VirtualSimulation, phase_length
from ..graph import Graph
from ..primitives.mapping import ColorMapping, next_power_of_two
from .problems import GreedyRule, RuleView, topological_order, Orientation


class SolverInput(NamedTuple):
    color: int
    owned: Mapping[int, tuple] | None = None   # node -> (out-neighbours, input)
    value: Any = None


class ColoringSolver(NodeProgram):
    """Input ``SolverInput`` (or a bare colour).  Output: the node's label, or
    ``{node: label}`` for the nodes it owns."""

    def __init__(self, rule: GreedyRule, q: int):
        self.rule = rule
        self.mapping = ColorMapping(next_power_of_two(q))

    @property
    def q(self) -> int:
        return self.mapping.q

    def round_bound(self, n):
        return 2 * self.q

    def init(self, ctx):
        inp = ctx.input if isinstance(ctx.input, SolverInput) else SolverInput(ctx.input)
        c = inp.color
        if not isinstance(c, int) or not 1 <= c <= self.q:
            raise ProgramError(f"node {ctx.id}: colour {c!r} outside 1..{self.q}")
        phi = self.mapping.phi(c)
        st = {"id": ctx.id, "input": inp, "phi": phi,
              "rounds": [1 + x for x in self.mapping.r(c)], "know": {}, "next": 0}
        return st, [(None, ("col", c))]

    def on_wake(self, st, rnd, inbox):
        if rnd == 1:
            c = st["input"].color
            clash = [s for s, m in inbox if m[0] == "col" and m[1] == c]
            if clash:
                raise ProgramError(f"improper colouring: {st['id']} and {clash[0]} share colour {c} at round 1")
            st["succ"] = frozenset(s for s, m in inbox if m[0] == "col" and m[1] < c)
            return st, [], wake_at(rnd, st["rounds"][0])
        know = st["know"]
        for _, m in inbox:
            if m[0] == "know":
                know.update(m[1])
        decide_round = 1 + st["phi"]
        if rnd == decide_round:
            self._decide(st)
        i = st["rounds"].index(rnd) + 1
        if i == len(st["rounds"]):
            return st, [], Terminate(st["output"])
        out = [(None, ("know", st["share"]))] if rnd >= decide_round else []
        return st, out, wake_at(rnd, st["rounds"][i])

    def _decide(self, st):
        know = st["know"]
        inp = st["input"]
        if inp.owned is None:
            owned = {st["id"]: (st["succ"], inp.value)}
        else:
            owned = inp.owned
        order = topological_order(Orientation({v: frozenset(u for u in s if u in owned)
                                               for v, (s, _) in owned.items()}))
        if len(order) != len(owned):
            raise ProgramError(f"vertex {st['id']}: owned nodes are not acyclically oriented")
        mine: dict[int, tuple] = {}

        def entry(u):
            e = mine.get(u)
            if e is None:
                e = know.get(u)
            if e is None:
                raise ProgramError(f"vertex {st['id']}: no information on {u} at decision time")
            return e

        def output_of(u):
            e = entry(u)
            if len(e) < 3:
                raise ProgramError(f"vertex {st['id']}: output of {u} needed before it was decided")
            return e[2]

        for v in order:
            succ, value = owned[v]
            mine[v] = (succ, value)
            label = self.rule(RuleView(v, lambda u: entry(u)[0], lambda u: entry(u)[1], output_of))
            mine[v] = (succ, value, label)
        know.update(mine)
        # snapshot: what a node forwards is fixed when it decides
        st["share"] = dict(know)
        if inp.owned is None:
            st["output"] = mine[st["id"]][2]
        else:
            st["output"] = {v: e[2] for v, e in mine.items()}


def solve_given_coloring(g: Graph, colors: Mapping[int, int], rule: GreedyRule,
                         inputs: Mapping[int, Any] | None = None, **kw):
    """Run the solver on ``g`` directly; returns the engine ``RunResult``."""
    q = max(colors.values(), default=1)
    inputs = inputs or {}
    return run(g, ColoringSolver(rule, q),
               {v: SolverInput(colors[v], None, inputs.get(v)) for v in g.nodes}, **kw)


def _record(node, value, entries):
    # value = (gamma, delta, input); entries carry the neighbours' values
    return value, tuple((u, other[0], other[1]) for u, _, _, other in entries)


def _combine(root, records):
    owned = {}
    for node, ((gamma, delta, value), nbrs) in records:
        succ = []
        for u, g_u, d_u in nbrs:
            if g_u != gamma:
                if g_u < gamma:
                    succ.append(u)
            elif (delta, node) < (d_u, u):
                succ.append(u)
        owned[node] = (frozenset(succ), value)
    return root, owned


class ClusteredSolver(Sequence):
    """Node input ``(gamma, delta, value)``; colours must lie in ``1..max_color``."""

    def __init__(self, rule: GreedyRule, max_color: int):
        solver = ColoringSolver(rule, max_color)
        self.solver = solver

        def to_cluster(carry, _prev):
            gamma, delta, value = carry["input"]
            return carry, ClusterInput(gamma, delta, (gamma, delta, value))

        def to_virtual(carry, summary):
            root, owned = summary
            gamma, delta, _ = carry["input"]
            return carry, ClusterInput(root, delta, SolverInput(gamma, owned))

        super().__init__(
            [Stage(ClusterAggregate(_record, _combine), lambda ctx: phase_length(ctx.n), to_cluster),
             Stage(VirtualSimulation(solver), lambda ctx: solver.round_bound(ctx.n) * phase_length(ctx.n),
                   to_virtual)],
            finish=lambda carry, labels: labels[carry["id"]],
            initial=lambda ctx: {"id": ctx.id, "input": _triple(ctx.input)})


def _triple(x):
    if hasattr(x, "gamma"):
        return (x.gamma, x.delta, None)
    gamma, delta, *rest = x
    return (gamma, delta, rest[0] if rest else None)


def solve_given_colored_clustering(rule: GreedyRule, max_color: int) -> ClusteredSolver:
    return ClusteredSolver(rule, max_color)


class FullSolver(Sequence):
    """Clustering pipeline followed by the clustered solver."""

    def __init__(self, rule: GreedyRule, params: PipelineParams, id_bound: int, use_ids: bool = False):
        self.pipeline = PipelineProgram(params, id_bound, use_ids)
        self.clustered = ClusteredSolver(rule, params.max_color)

        def handoff(carry, out):
            return carry, (out.gamma, out.delta, carry)

        super().__init__([Stage(self.pipeline, lambda ctx: self.pipeline.round_bound(ctx.n)),
                          Stage(self.clustered, None, handoff)])


def solve(g: Graph, rule: GreedyRule, inputs: Mapping[int, Any] | None = None, *,
          params: PipelineParams | None = None, use_ids: bool = False, **kw):
    params = params or PipelineParams.for_n(g.n)
    return run(g, FullSolver(rule, params, g.id_bound, use_ids), inputs, **kw)
