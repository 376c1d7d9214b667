"""Colored BFS-clustering in ``k`` phases.

Phase ``i`` runs the one-phase step on the current virtual graph. Vertices
that come out with a small colour are finished: their nodes keep their
current distances and take colour ``(i - 1) * a * b^2 + colour``. The
others form big clusters that are merged into a coarser uniquely-labeled
clustering for the next phase.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

from ..engine import Done, ProgramError, RunResult, Sequence, Stage, run
from ..graph import Graph
from .merge import MergeInput, distance_stage
from .model import ColoredClustering
from .onestep import Onestep, OnestepOutput
from .simulate import ClusterAggregate, ClusterInput, VirtualSimulation, phase_length
from .merge import _combine, _record


@dataclass(frozen=True)
class PipelineParams:
    n: int
    k: int
    b: int
    a: int

    @classmethod
    def for_n(cls, n: int, a: int | None = None) -> "PipelineParams":
        from ..constants import LINIAL_A
        root = math.sqrt(math.log2(n)) if n > 1 else 0.0
        k = max(1, math.ceil(2 * root))
        b = 2 ** math.ceil(root)
        return cls(n, k, b, LINIAL_A if a is None else a)

    @property
    def small(self) -> int:
        return self.a * self.b ** 2

    @property
    def max_color(self) -> int:
        return self.k * self.small


@dataclass(frozen=True)
class PipelineOutput:
    gamma: int
    delta: int
    phase: int
    history: tuple[int, ...]


class _Carry:
    __slots__ = ("id", "n", "label", "delta", "label2", "delta2", "history")

    def __init__(self, ctx):
        self.id = ctx.id
        self.n = ctx.n
        self.label = ctx.id
        self.delta = 0
        self.label2 = self.delta2 = None
        self.history = (ctx.id,)


class PipelineProgram(Sequence):
    def __init__(self, params: PipelineParams, id_bound: int, use_ids: bool = False):
        self.params = params
        self.use_ids = use_ids
        onestep = Onestep(params.b, id_bound, use_ids, params.a)
        self.onestep = onestep
        stages = []
        for i in range(1, params.k + 1):
            stages.append(Stage(VirtualSimulation(onestep),
                                lambda ctx: onestep.round_bound(ctx.n) * phase_length(ctx.n),
                                self._enter_phase(i)))
            stages.append(Stage(ClusterAggregate(_record, _combine),
                                lambda ctx: phase_length(ctx.n), self._after_onestep(i)))
            if i < params.k:
                stages.append(distance_stage())
        super().__init__(stages, initial=_Carry)

    @staticmethod
    def _enter_phase(i):
        def prepare(carry: _Carry, prev):
            if i > 1:
                carry.label, carry.delta = carry.label2, prev[carry.id]
                carry.history = carry.history + (carry.label,)
            return carry, ClusterInput(carry.label, carry.delta, None)
        return prepare

    def _after_onestep(self, i):
        small = self.params.small
        k = self.params.k

        def prepare(carry: _Carry, out: OnestepOutput):
            if out.gamma <= small:
                return Done(PipelineOutput((i - 1) * small + out.gamma, carry.delta, i, carry.history))
            if i == k:
                raise ProgramError(f"node {carry.id} still unclustered after {k} phases")
            carry.label2, carry.delta2 = out.gamma - small, out.delta
            return carry, ClusterInput(carry.label, carry.delta,
                                       MergeInput(carry.label, carry.delta, carry.label2, carry.delta2))
        return prepare


class ShrinkageError(RuntimeError):
    pass


@dataclass
class PipelineResult:
    clustering: ColoredClustering
    outputs: dict[int, PipelineOutput]
    result: RunResult
    params: PipelineParams
    virtual_sizes: list[int] = field(default_factory=list)


def virtual_sizes(n: int, outputs) -> list[int]:
    """``|V(H_0)|, |V(H_1)|, ...`` reconstructed from the label histories."""
    sizes = [n]
    i = 1
    while True:
        labels = {o.history[i] for o in outputs.values() if len(o.history) > i}
        if not labels:
            break
        sizes.append(len(labels))
        i += 1
    sizes.append(0)
    return sizes


def pipeline(g: Graph, params: PipelineParams | None = None, *, use_ids: bool = False,
             trace: bool = False, max_events: int | None = None) -> PipelineResult:
    params = params or PipelineParams.for_n(g.n)
    res = run(g, PipelineProgram(params, g.id_bound, use_ids), trace=trace, max_events=max_events)
    outputs = res.outputs
    clustering = ColoredClustering({v: o.gamma for v, o in outputs.items()},
                                   {v: o.delta for v, o in outputs.items()})
    sizes = virtual_sizes(g.n, outputs)
    for i in range(1, len(sizes)):
        if sizes[i] * params.b > sizes[i - 1]:
            raise ShrinkageError(f"phase {i}: virtual graph shrank from {sizes[i - 1]} "
                                 f"to only {sizes[i]} (b={params.b})")
    return PipelineResult(clustering, outputs, res, params, sizes)
