"""Deterministic executor for the Sleeping LOCAL model.

Round semantics (one synchronous round ``r``):

1. Every node awake at ``r`` transmits the outbox it prepared during its
   previous activation (or in ``init`` for round 1).  A message reaches its
   recipient only if the recipient is awake at ``r``; otherwise it is lost.
2. Every awake node runs ``on_wake(state, r, inbox)`` and returns its new
   state, the outbox for its *next* awake round, and an action:
   ``Sleep(t)`` wakes it at ``r + t + 1``, ``STAY_AWAKE`` at ``r + 1``,
   ``Terminate(output)`` stops it for good.

All nodes are awake at round 1.  Two executors share one activation core:
``run`` jumps straight to the next round in which some node is awake,
``run_naive`` walks every round and serves as its oracle.
"""
from __future__ import annotations

import gc
import hashlib
import heapq
import json
import os
from contextlib import contextmanager
from dataclasses import dataclass, field, is_dataclass, fields
from types import SimpleNamespace
from typing import Any, Callable, Iterable, Mapping, NamedTuple

from .graph import Graph

DEFAULT_MAX_EVENTS = 10_000_000
MAX_EVENTS_ENV = "SLEEPLOCAL_MAX_EVENTS"


class ProgramError(RuntimeError):
    """A node program broke the engine contract."""


class RoundCapExceeded(RuntimeError):
    def __init__(self, message: str, metrics: "RunMetrics"):
        super().__init__(message)
        self.metrics = metrics


class NodeContext(NamedTuple):
    id: int
    n: int
    neighbors: tuple[int, ...] | None = None
    input: Any = None
    id_bound: int | None = None

    @property
    def degree(self) -> int | None:
        return None if self.neighbors is None else len(self.neighbors)

    def with_input(self, value) -> "NodeContext":
        return self._replace(input=value)


class Sleep(NamedTuple):
    duration: int


class _StayAwake:
    __slots__ = ()

    def __repr__(self):
        return "STAY_AWAKE"


STAY_AWAKE = _StayAwake()


class Terminate(NamedTuple):
    output: Any = None


class Failure(NamedTuple):
    """Output marker for a node that detected a protocol violation."""
    reason: str


def wake_at(now: int, target: int):
    """Action that makes a node awake at round ``target`` (> ``now``)."""
    if target <= now:
        raise ProgramError(f"cannot wake at round {target} from round {now}")
    return STAY_AWAKE if target == now + 1 else Sleep(target - now - 1)


class NodeProgram:
    """Per-node state machine executed by the engine.

    ``init`` returns ``(state, outbox for round 1)``; ``on_wake`` returns
    ``(state, outbox for the next awake round, action)``.  An outbox is a
    list of ``(neighbor, message)`` pairs; neighbour ``None`` addresses every
    neighbour, which lets a program run without knowing who its neighbours
    are (as when it is simulated on a virtual graph).
    """

    def init(self, ctx: NodeContext):
        raise NotImplementedError

    def on_wake(self, state, rnd: int, inbox: list):
        raise NotImplementedError

    def round_bound(self, n: int) -> int | None:
        """Upper bound on the termination round, as a function of ``n``."""
        return None


@dataclass
class RunMetrics:
    awake_rounds: dict[int, int]
    termination_round: dict[int, int | None]
    dropped_messages: dict[int, int]
    max_round: int = 0
    wake_events: int = 0
    messages: int = 0

    @property
    def awake_complexity(self) -> int:
        return max(self.awake_rounds.values(), default=0)

    @property
    def round_complexity(self) -> int:
        return max((r for r in self.termination_round.values() if r is not None), default=0)

    @property
    def mean_awake(self) -> float:
        vals = self.awake_rounds.values()
        return sum(vals) / len(vals) if vals else 0.0

    @property
    def total_dropped(self) -> int:
        return sum(self.dropped_messages.values())

    def to_json(self) -> dict:
        return {
            "nodes": {str(v): {"awake": self.awake_rounds[v],
                               "terminated": self.termination_round[v],
                               "dropped": self.dropped_messages[v]}
                      for v in sorted(self.awake_rounds)},
            "awake_complexity": self.awake_complexity,
            "round_complexity": self.round_complexity,
            "max_round": self.max_round,
            "wake_events": self.wake_events,
            "messages": self.messages,
        }


class TraceRecord(NamedTuple):
    round: int
    node: int
    inbox: tuple
    outbox: tuple
    action: str


@dataclass
class ExecutionTrace:
    records: list[TraceRecord] = field(default_factory=list)

    def to_jsonl(self) -> str:
        return "".join(json.dumps({"round": r.round, "node": r.node,
                                   "inbox": [list(x) for x in r.inbox],
                                   "outbox": [list(x) for x in r.outbox],
                                   "action": r.action}, sort_keys=True) + "\n"
                       for r in self.records)

    def __eq__(self, other):
        return isinstance(other, ExecutionTrace) and self.records == other.records


@dataclass
class RunResult:
    outputs: dict[int, Any]
    metrics: RunMetrics
    trace: ExecutionTrace | None = None


def canonical(obj):
    """JSON-compatible form with deterministic ordering of sets and dicts."""
    if obj is None or isinstance(obj, (bool, int, float, str)):
        return obj
    if isinstance(obj, (set, frozenset)):
        return {"set": sorted((canonical(x) for x in obj), key=_sort_key)}
    if isinstance(obj, dict):
        return {"map": sorted(([canonical(k), canonical(v)] for k, v in obj.items()),
                              key=lambda kv: _sort_key(kv[0]))}
    if is_dataclass(obj) and not isinstance(obj, type):
        return {type(obj).__name__: [canonical(getattr(obj, f.name)) for f in fields(obj)]}
    if isinstance(obj, tuple) and hasattr(obj, "_fields"):
        return {type(obj).__name__: [canonical(x) for x in obj]}
    if isinstance(obj, (list, tuple)):
        return [canonical(x) for x in obj]
    if isinstance(obj, SimpleNamespace):
        return canonical(vars(obj))
    return repr(obj)


def _sort_key(x):
    return json.dumps(x, sort_keys=True)


def digest(obj) -> str:
    data = json.dumps(canonical(obj), sort_keys=True).encode()
    return hashlib.blake2b(data, digest_size=8).hexdigest()


def _describe(action) -> str:
    if action is STAY_AWAKE:
        return "stay"
    if isinstance(action, Sleep):
        return f"sleep:{action.duration}"
    return f"terminate:{digest(action.output)}"


def resolve_max_events(max_events: int | None) -> int:
    if max_events is not None:
        return max_events
    env = os.environ.get(MAX_EVENTS_ENV)
    return int(env) if env else DEFAULT_MAX_EVENTS


_NO_MAIL: tuple = ()


class _Execution:
    """State shared by both schedulers; ``activate`` runs one round."""

    def __init__(self, g: Graph, program: NodeProgram, inputs, n, record, max_events, max_round):
        self.g = g
        self.program = program
        self.record = record
        self.trace = ExecutionTrace() if record else None
        self.max_events = resolve_max_events(max_events)
        self.max_round = max_round
        nodes = g.nodes
        adj = g.adj
        self.sorted_adj = sorted_adj = {v: tuple(sorted(adj[v])) for v in nodes}
        self.metrics = RunMetrics({v: 0 for v in nodes}, {v: None for v in nodes},
                                  {v: 0 for v in nodes})
        self.outputs: dict[int, Any] = {}
        self.states: dict[int, Any] = {}
        self.pending: dict[int, list] = {}
        states, pending, init = self.states, self.pending, program.init
        n = g.n if n is None else n
        id_bound = g.id_bound
        get = inputs.get if isinstance(inputs, Mapping) else (lambda v: None)
        for v in nodes:
            state, outbox = init(NodeContext(v, n, sorted_adj[v], get(v), id_bound))
            states[v] = state
            pending[v] = outbox or []

    def _cap(self, message):
        return RoundCapExceeded(message, self.metrics)

    def activate(self, rnd: int, awake: list[int]) -> list[tuple[int, int]]:
        """Run round ``rnd`` for the sorted ``awake`` nodes; return (node, next round)."""
        metrics = self.metrics
        metrics.wake_events += len(awake)
        if metrics.wake_events > self.max_events:
            raise self._cap(f"wake-event cap {self.max_events} exceeded at round {rnd}")
        metrics.max_round = rnd
        adj = self.g.adj
        sorted_adj = self.sorted_adj
        pending, record = self.pending, self.record
        awake_set = set(awake)
        inboxes: dict[int, list] = {}
        sent: dict[int, list] = {}
        dropped = metrics.dropped_messages
        count = 0
        for v in awake:
            outbox = pending[v]
            if not outbox:
                continue
            if record:
                sent[v] = log = []
            for dest, msg in outbox:
                if dest is None:
                    targets = sorted_adj[v]
                elif dest in adj[v]:
                    targets = (dest,)
                else:
                    raise ProgramError(f"node {v} addressed non-neighbour {dest} at round {rnd}")
                count += len(targets)
                if record:
                    log.extend((u, msg) for u in targets)
                item = (v, msg)
                for u in targets:
                    if u in awake_set:
                        box = inboxes.get(u)
                        if box is None:
                            inboxes[u] = [item]
                        else:
                            box.append(item)
                    else:
                        dropped[u] += 1
        metrics.messages += count
        on_wake = self.program.on_wake
        awake_rounds = metrics.awake_rounds
        states = self.states
        max_round = self.max_round
        woken = []
        if record:
            # a broadcast message is one object shared by all its copies; digest it once
            memo: dict[int, str] = {}

            def dg(m):
                key = id(m)
                if key not in memo:
                    memo[key] = digest(m)
                return memo[key]
        for v in awake:
            inbox = inboxes.get(v, _NO_MAIL)
            # senders are visited in ascending order, so inboxes are already sorted
            state, outbox, action = on_wake(states[v], rnd, inbox)
            awake_rounds[v] += 1
            states[v] = state
            if record:
                self.trace.records.append(TraceRecord(
                    rnd, v, tuple((s, dg(m)) for s, m in inbox),
                    tuple((d, dg(m)) for d, m in sent.get(v, ())), _describe(action)))
            if action is STAY_AWAKE:
                nxt = rnd + 1
            elif type(action) is Sleep and type(action.duration) is int and action.duration >= 1:
                nxt = rnd + action.duration + 1
            elif isinstance(action, Terminate):
                if outbox:
                    raise ProgramError(f"node {v} terminated at round {rnd} with a non-empty outbox")
                self.outputs[v] = action.output
                metrics.termination_round[v] = rnd
                pending[v] = []
                continue
            else:
                raise ProgramError(f"node {v} returned invalid action {action!r} at round {rnd}")
            if max_round is not None and nxt > max_round:
                raise self._cap(f"node {v} scheduled past round cap {max_round}")
            pending[v] = outbox or []
            woken.append((v, nxt))
        return woken

    def result(self) -> RunResult:
        return RunResult(self.outputs, self.metrics, self.trace)


@contextmanager
def _gc_paused():
    # node states are many small dicts; cyclic collection only slows the loop
    was_enabled = gc.isenabled()
    gc.disable()
    try:
        yield
    finally:
        if was_enabled:
            gc.enable()


def run(g: Graph, program: NodeProgram, inputs: Mapping[int, Any] | None = None, *,
        trace: bool = False, max_events: int | None = None, max_round: int | None = None,
        n: int | None = None) -> RunResult:
    """Event-driven execution: rounds in which every node sleeps are skipped.

    ``n`` overrides the order announced to the nodes (used when a graph is a
    virtual graph of a larger network).
    """
    with _gc_paused():
        ex = _Execution(g, program, inputs, n, trace, max_events, max_round)
        buckets: dict[int, list[int]] = {1: list(g.nodes)} if g.n else {}
        heap = [1] if g.n else []
        while heap:
            rnd = heapq.heappop(heap)
            awake = buckets.pop(rnd)
            awake.sort()
            for v, nxt in ex.activate(rnd, awake):
                bucket = buckets.get(nxt)
                if bucket is None:
                    buckets[nxt] = [v]
                    heapq.heappush(heap, nxt)
                else:
                    bucket.append(v)
    return ex.result()


def run_naive(g: Graph, program: NodeProgram, inputs: Mapping[int, Any] | None = None, *,
              trace: bool = False, max_events: int | None = None,
              max_round: int | None = 1_000_000, n: int | None = None) -> RunResult:
    """Reference stepper: visits every round, including all-asleep ones."""
    ex = _Execution(g, program, inputs, n, trace, max_events, max_round)
    next_wake = {v: 1 for v in g.nodes}
    rnd = 0
    while next_wake:
        rnd += 1
        if max_round is not None and rnd > max_round:
            raise ex._cap(f"round cap {max_round} exceeded")
        awake = [v for v in sorted(next_wake) if next_wake[v] == rnd]
        if not awake:
            continue
        for v in awake:
            del next_wake[v]
        for v, nxt in ex.activate(rnd, awake):
            next_wake[v] = nxt
    return ex.result()


# -- sequential composition -------------------------------------------------

class Done(NamedTuple):
    """Returned by a stage ``prepare`` hook to end the whole sequence early."""
    output: Any


@dataclass
class Stage:
    """One stage of a :class:`Sequence`.

    ``rounds`` is the stage's round budget ``T`` (an int or a function of the
    node context); every node must terminate the stage by local round ``T``.
    ``prepare(carry, previous_output)`` returns ``(carry, stage_input)`` or
    ``Done(output)``; the default feeds the previous output straight through.
    """
    program: NodeProgram
    rounds: int | Callable[[NodeContext], int] | None = None
    prepare: Callable[[Any, Any], Any] | None = None

    def budget(self, ctx: NodeContext) -> int | None:
        if self.rounds is None:
            return self.program.round_bound(ctx.n)
        return self.rounds(ctx) if callable(self.rounds) else self.rounds


class Sequence(NodeProgram):
    """Run stages back to back; stage ``j`` starts at round ``1 + T_1 + ... + T_{j-1}``.

    A node finishing a stage early sleeps until the next stage starts, so the
    awake count of the composition is the sum of the stages' awake counts.
    The carry starts as ``initial(ctx)`` (default: the node input) and is
    threaded through the ``prepare`` hooks; ``finish(carry, output)`` maps the
    last stage's output to the final one.
    """

    def __init__(self, stages: Iterable[Stage], finish: Callable[[Any, Any], Any] | None = None,
                 initial: Callable[[NodeContext], Any] | None = None):
        self.stages = list(stages)
        if not self.stages:
            raise ValueError("a sequence needs at least one stage")
        self.finish = finish
        self.initial = initial

    def round_bound(self, n: int) -> int | None:
        total = 0
        ctx = NodeContext(0, n)
        for stage in self.stages:
            t = stage.budget(ctx)
            if t is None:
                return None
            total += t
        return total

    def _enter(self, st, index: int, value, start: int):
        stage = self.stages[index]
        if stage.prepare is None:
            stage_input = value
        else:
            prepared = stage.prepare(st.carry, value)
            if isinstance(prepared, Done):
                return prepared
            st.carry, stage_input = prepared
        st.index = index
        st.start = start
        st.budget = stage.budget(st.ctx)
        st.inner, outbox = stage.program.init(st.ctx.with_input(stage_input))
        return outbox or []

    def init(self, ctx):
        carry = ctx.input if self.initial is None else self.initial(ctx)
        st = SimpleNamespace(ctx=ctx, carry=carry, index=0, start=1, budget=None, inner=None)
        entered = self._enter(st, 0, ctx.input, 1)
        if isinstance(entered, Done):
            raise ProgramError("the first stage of a sequence cannot be skipped")
        return st, entered

    def on_wake(self, st, rnd, inbox):
        local = rnd - st.start + 1
        if st.budget is not None and local > st.budget:
            raise ProgramError(f"node {st.ctx.id} still running stage {st.index} "
                               f"after its budget of {st.budget} rounds")
        inner, outbox, action = self.stages[st.index].program.on_wake(st.inner, local, inbox)
        st.inner = inner
        if not isinstance(action, Terminate):
            return st, outbox, action
        if outbox:
            raise ProgramError(f"node {st.ctx.id} terminated stage {st.index} with a non-empty outbox")
        value = action.output
        nxt = st.index + 1
        if nxt == len(self.stages):
            final = self.finish(st.carry, value) if self.finish else value
            return st, [], Terminate(final)
        if st.budget is None:
            raise ProgramError(f"stage {st.index} has no round budget; it cannot be followed")
        start = st.start + st.budget
        entered = self._enter(st, nxt, value, start)
        if isinstance(entered, Done):
            return st, [], Terminate(entered.output)
        return st, entered, wake_at(rnd, start)


def concatenate(p1: NodeProgram, t1: int | Callable[[NodeContext], int] | None,
                p2: NodeProgram) -> Sequence:
    """Run ``p1`` for ``t1`` rounds, then ``p2`` with ``p1``'s output as input."""
    return Sequence([Stage(p1, t1), Stage(p2)])
