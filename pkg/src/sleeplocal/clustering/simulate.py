"""Running programs cluster-by-cluster over a uniquely-labeled BFS-clustering.

Both programs here share one phase layout of ``R = 2N + 1`` rounds, where
``N = n`` bounds every distance value.  Relative to the phase start:

* rel 0: every node sends ``(label, delta, payload)`` to all neighbours;
* rel ``N - d`` / ``N - d + 1``: a node at depth ``d`` collects the bundles of
  its deeper cluster-mates, then passes its bundle to its parent (the
  smallest-ID cluster-mate at depth ``d - 1``); the root collects at rel ``N``;
* rel ``N + d`` / ``N + d + 1``: the root's result travels back down.

A node is awake at most five times per phase; a singleton cluster only once.
"""
from __future__ import annotations

from dataclasses import dataclass
from types import SimpleNamespace
from typing import Any, Callable, Mapping, NamedTuple

from ..engine import (STAY_AWAKE, NodeContext, NodeProgram, ProgramError, RunResult, Sleep,
                      Terminate, run, wake_at)
from ..graph import Graph
from .model import ClusteringError, UniquelyLabeledClustering, build_virtual_graph


class ClusterInput(NamedTuple):
    label: int
    delta: int
    value: Any = None


def phase_length(n: int) -> int:
    return 2 * n + 1


def flatten(bundle) -> list:
    out = []
    stack = [bundle]
    while stack:
        item, kids = stack.pop()
        out.append(item)
        stack.extend(kids)
    return out


class _ClusterRelay(NodeProgram):
    """One or more phases of exchange, convergecast and broadcast per cluster."""

    def payload(self, st):
        return None

    def contribution(self, st, entries):
        raise NotImplementedError

    def compute(self, st, contributions):
        raise NotImplementedError

    def finish(self, st, result, rnd):
        raise NotImplementedError

    def _start(self, ctx: NodeContext):
        inp: ClusterInput = ctx.input
        return SimpleNamespace(id=ctx.id, n=ctx.n, label=inp.label, delta=inp.delta,
                               value=inp.value, N=ctx.n, start=1, step="exchange",
                               mates=None, parent=None, deeper=(), bundle=None, result=None)

    def _exchange_msg(self, st):
        return [(None, ("x", st.label, st.delta, self.payload(st)))]

    def _learn_tree(self, st, entries):
        mates = {s: d for s, lab, d, _ in entries if lab == st.label}
        st.mates = mates
        if st.delta > 0:
            ups = [u for u, d in mates.items() if d == st.delta - 1]
            if not ups:
                raise ProgramError(f"node {st.id} (label {st.label}, delta {st.delta}) "
                                   f"has no cluster-mate at delta {st.delta - 1}")
            st.parent = min(ups)
        st.deeper = tuple(sorted(u for u, d in mates.items() if d == st.delta + 1))

    def on_wake(self, st, rnd, inbox):
        rel = rnd - st.start
        step = st.step
        if step == "exchange":
            entries = [(s, m[1], m[2], m[3]) for s, m in inbox if m[0] == "x"]
            if st.mates is None:
                self._learn_tree(st, entries)
            local = self.contribution(st, entries)
            if st.delta == 0 and not st.mates:
                return self.finish(st, self.compute(st, [local]), rnd)
            st.bundle = (local, ())
            if st.deeper:
                st.step = "gather"
                return st, [], wake_at(rnd, st.start + st.N - st.delta)
            st.step = "send"
            return st, [(st.parent, ("up", st.bundle))], wake_at(rnd, st.start + st.N - st.delta + 1)
        if step == "gather":
            kids = tuple(m[1] for _, m in inbox if m[0] == "up")
            st.bundle = (st.bundle[0], kids)
            if st.delta == 0:
                st.result = self.compute(st, flatten(st.bundle))
                st.bundle = None
                st.step = "forward"
                return st, [(u, ("down", st.result)) for u in st.deeper], wake_at(rnd, rnd + 1)
            st.step = "send"
            return st, [(st.parent, ("up", st.bundle))], wake_at(rnd, rnd + 1)
        if step == "send":
            st.bundle = None
            st.step = "receive"
            return st, [], wake_at(rnd, st.start + st.N + st.delta)
        if step == "receive":
            got = [m[1] for _, m in inbox if m[0] == "down"]
            if not got:
                raise ProgramError(f"node {st.id} received no cluster result at round {rnd} (rel {rel})")
            st.result = got[0]
            if st.deeper:
                st.step = "forward"
                return st, [(u, ("down", st.result)) for u in st.deeper], wake_at(rnd, rnd + 1)
            return self.finish(st, st.result, rnd)
        if step == "forward":
            return self.finish(st, st.result, rnd)
        raise ProgramError(f"node {st.id} in unknown step {step!r}")


class VirtualSimulation(_ClusterRelay):
    """Run ``h_program`` on the virtual graph; node input is ``ClusterInput(label, delta, h_input)``.

    The simulated program must not rely on ``ctx.neighbors`` (it is None): it
    learns its virtual neighbours from what it receives.  Vertex ``i`` of the
    virtual graph sees ``ctx.id = i`` and ``ctx.n`` equal to the order of the
    real network.  Every node outputs the output of its cluster's vertex.
    """

    def __init__(self, h_program: NodeProgram):
        self.h = h_program

    def round_bound(self, n):
        inner = self.h.round_bound(n)
        return None if inner is None else inner * phase_length(n)

    def init(self, ctx):
        st = self._start(ctx)
        hctx = NodeContext(st.label, ctx.n, None, st.value, ctx.id_bound)
        st.h_state, out = self.h.init(hctx)
        st.pending = tuple(out or ())
        st.k = 1
        return st, self._exchange_msg(st)

    def payload(self, st):
        return st.pending

    def contribution(self, st, entries):
        mine = st.label
        got = []
        for _, lab, _, outbox in entries:
            if lab == mine:
                continue
            msgs = tuple(m for dest, m in outbox if dest is None or dest == mine)
            if msgs:
                got.append((lab, msgs))
        return tuple(got)

    def compute(self, st, contributions):
        received: dict[int, tuple] = {}
        for part in contributions:
            for lab, msgs in part:
                received.setdefault(lab, msgs)
        inbox = [(lab, m) for lab in sorted(received) for m in received[lab]]
        state, out, action = self.h.on_wake(st.h_state, st.k, inbox)
        st.h_state = state
        if isinstance(action, Terminate):
            if out:
                raise ProgramError(f"virtual vertex {st.label} terminated with a non-empty outbox")
            return ("term", action.output)
        if action is STAY_AWAKE:
            delay = 0
        elif isinstance(action, Sleep) and action.duration >= 1:
            delay = action.duration
        else:
            raise ProgramError(f"virtual vertex {st.label} returned invalid action {action!r}")
        return ("next", st.k + delay + 1, tuple(out or ()))

    def finish(self, st, result, rnd):
        if result[0] == "term":
            st.h_state = None
            return st, [], Terminate(result[1])
        _, k, pending = result
        st.k = k
        st.pending = pending
        st.start = 1 + (k - 1) * phase_length(st.N)
        st.step = "exchange"
        return st, self._exchange_msg(st), wake_at(rnd, st.start)


class ClusterAggregate(_ClusterRelay):
    """Each cluster root combines one record per node; every node gets the result.

    ``record(node, value, entries)`` builds a node's record from its input and
    the ``(sender, label, delta, shared)`` entries heard from its neighbours,
    where ``shared = share(value)``.  ``combine(root, records)`` receives
    ``(node, record)`` pairs; ``finalize(node, value, result)`` is the output.
    Takes ``2n + 1`` rounds and at most five awake rounds per node.
    """

    def __init__(self, record: Callable, combine: Callable,
                 finalize: Callable | None = None, share: Callable | None = None):
        self.record = record
        self.combine = combine
        self.finalize = finalize
        self.share = share

    def round_bound(self, n):
        return phase_length(n)

    def init(self, ctx):
        st = self._start(ctx)
        return st, self._exchange_msg(st)

    def payload(self, st):
        return st.value if self.share is None else self.share(st.value)

    def contribution(self, st, entries):
        return (st.id, self.record(st.id, st.value, entries))

    def compute(self, st, contributions):
        return self.combine(st.id, contributions)

    def finish(self, st, result, rnd):
        out = result if self.finalize is None else self.finalize(st.id, st.value, result)
        return st, [], Terminate(out)


@dataclass
class SimulationResult:
    outputs: dict[int, Any]
    result: RunResult
    direct: RunResult | None
    cluster_of: Mapping[int, int]

    def overhead_ok(self, factor: int = 7) -> bool:
        """Every node's awake count is at most ``factor`` times its vertex's."""
        if self.direct is None:
            raise ValueError("no direct run recorded")
        h_awake = self.direct.metrics.awake_rounds
        awake = self.result.metrics.awake_rounds
        return all(awake[v] <= factor * h_awake[i] for v, i in self.cluster_of.items())


def simulate_on_virtual(g: Graph, c: UniquelyLabeledClustering, program: NodeProgram,
                        inputs: Mapping[int, Any] | None = None, *, node_inputs=None,
                        compare_direct: bool = True, trace: bool = False) -> SimulationResult:
    """Simulate ``program`` on the virtual graph of ``c``.

    ``inputs`` maps cluster labels to vertex inputs.  Alternatively
    ``node_inputs`` gives every node its copy of its cluster's input; copies
    within a cluster must agree.  With ``compare_direct`` the program is also
    run directly on the virtual graph so awake counts can be paired.
    """
    vg = build_virtual_graph(g, c)
    if node_inputs is not None:
        inputs = {}
        for v in sorted(node_inputs):
            lab = c.label[v]
            if lab in inputs and inputs[lab] != node_inputs[v]:
                raise ClusteringError(f"inconsistent inputs within cluster {lab} (node {v})")
            inputs[lab] = node_inputs[v]
    inputs = inputs or {}
    per_node = {v: ClusterInput(c.label[v], c.delta[v], inputs.get(c.label[v])) for v in g.nodes}
    res = run(g, VirtualSimulation(program), per_node, trace=trace)
    direct = run(vg.graph, program, inputs, n=g.n, trace=trace) if compare_direct else None
    return SimulationResult(res.outputs, res, direct, dict(c.label))
