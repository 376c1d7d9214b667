"""Broadcast and convergecast on a rooted forest scheduled by labels.

Every node knows its parent, its label ``L`` and the bound ``N``; labels
strictly increase from parent to child.  Each node is awake three times:
round 1 to learn its parent's label (and its children), then once to receive
and once to send.  Both programs discover their neighbourhood from the
round-1 inbox, so they can also be run on a virtual graph.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Any, Mapping, NamedTuple

from ..engine import Failure, NodeProgram, Terminate, wake_at
from ..graph import Graph


class TreeInput(NamedTuple):
    parent: int | None
    label: int
    bound: int
    payload: Any = None


@dataclass(frozen=True)
class TreeLabeling:
    parent: Mapping[int, int | None]
    label: Mapping[int, int]
    bound: int

    def roots(self) -> list[int]:
        return sorted(v for v, p in self.parent.items() if p is None)

    def violations(self, g: Graph | None = None) -> list[str]:
        out = []
        for v, p in sorted(self.parent.items()):
            lv = self.label.get(v)
            if lv is None or not 1 <= lv <= self.bound:
                out.append(f"label of {v} outside 1..{self.bound}")
                continue
            if p is None:
                continue
            if p not in self.parent:
                out.append(f"parent {p} of {v} is not a tree node")
            elif self.label[p] >= lv:
                out.append(f"label of {v} does not exceed its parent's")
            elif g is not None and not g.has_edge(v, p):
                out.append(f"parent {p} of {v} is not a neighbour")
        return out

    def inputs(self, payloads: Mapping[int, Any] | None = None) -> dict[int, TreeInput]:
        payloads = payloads or {}
        return {v: TreeInput(p, self.label[v], self.bound, payloads.get(v))
                for v, p in self.parent.items()}


def labeling_from_depths(parent: Mapping[int, int | None]) -> TreeLabeling:
    """Label every node by 1 + its depth; bound = 1 + max depth."""
    depth: dict[int, int] = {}
    for v in parent:
        path = []
        u = v
        while u not in depth and parent[u] is not None:
            path.append(u)
            u = parent[u]
        d = depth.setdefault(u, 0)
        for w in reversed(path):
            d += 1
            depth[w] = d
    label = {v: d + 1 for v, d in depth.items()}
    return TreeLabeling(dict(parent), label, max(label.values(), default=1))


class _TreeProgram(NodeProgram):
    def __init__(self, inputs: Mapping[int, TreeInput] | None = None, bound: int | None = None):
        self.inputs = inputs
        self.bound = bound

    def round_bound(self, n):
        if self.bound is not None:
            return self.bound + 2
        if self.inputs:
            return next(iter(self.inputs.values())).bound + 2
        return None

    def _input(self, ctx) -> TreeInput:
        if self.inputs is not None:
            return self.inputs[ctx.id]
        return ctx.input

    def init(self, ctx):
        t = self._input(ctx)
        state = {"id": ctx.id, "parent": t.parent, "L": t.label, "N": t.bound,
                 "payload": t.payload, "step": "exchange"}
        return state, [(None, ("tree", t.label, t.parent))]

    @staticmethod
    def _exchange(st, inbox):
        me, parent = st["id"], st["parent"]
        children = []
        parent_label = None
        for sender, msg in inbox:
            if type(msg) is not tuple or not msg or msg[0] != "tree":
                continue
            if msg[2] == me:
                children.append(sender)
            if sender == parent:
                parent_label = msg[1]
        st["children"] = tuple(children)
        st["parent_label"] = parent_label
        if parent is not None:
            if parent_label is None:
                return Failure(f"node {me}: parent {parent} did not answer at round 1")
            if parent_label >= st["L"]:
                return Failure(f"node {me}: label {st['L']} does not exceed parent label {parent_label}")
        return None


class Broadcast(_TreeProgram):
    """Root's payload reaches every node of its tree; output = payload."""

    def on_wake(self, st, rnd, inbox):
        step = st["step"]
        if step == "exchange":
            err = self._exchange(st, inbox)
            if err is not None:
                return st, [], Terminate(err)
            if st["parent"] is None:
                st["step"] = "send"
                out = [(c, ("bcast", st["payload"])) for c in st["children"]]
                return st, out, wake_at(rnd, 2 + st["L"])
            st["step"] = "receive"
            return st, [], wake_at(rnd, 2 + st["parent_label"])
        if step == "receive":
            got = [m[1] for s, m in inbox if s == st["parent"] and m[0] == "bcast"]
            if not got:
                return st, [], Terminate(Failure(f"node {st['id']}: no payload by round {rnd}"))
            st["payload"] = got[0]
            st["step"] = "send"
            out = [(c, ("bcast", st["payload"])) for c in st["children"]]
            return st, out, wake_at(rnd, 2 + st["L"])
        return st, [], Terminate(st["payload"])


def flatten_bundle(bundle) -> dict[int, Any]:
    """Turn nested ``(node, payload, children)`` tuples into a dict."""
    out = {}
    stack = [bundle]
    while stack:
        node, payload, kids = stack.pop()
        out[node] = payload
        stack.extend(kids)
    return out


class Convergecast(_TreeProgram):
    """Each root ends with ``{node: payload}`` for its tree; others output None."""

    def on_wake(self, st, rnd, inbox):
        step = st["step"]
        N = st["N"]
        if step == "exchange":
            err = self._exchange(st, inbox)
            if err is not None:
                return st, [], Terminate(err)
            st["step"] = "receive"
            return st, [], wake_at(rnd, 2 + N - st["L"])
        if step == "receive":
            got = {s: m[1] for s, m in inbox if m[0] == "ccast" and s in st["children"]}
            missing = [c for c in st["children"] if c not in got]
            if missing:
                return st, [], Terminate(Failure(f"node {st['id']}: no bundle from child {missing[0]} by round {rnd}"))
            bundle = (st["id"], st["payload"], tuple(got[c] for c in st["children"]))
            if st["parent"] is None:
                return st, [], Terminate(flatten_bundle(bundle))
            st["step"] = "sent"
            return st, [(st["parent"], ("ccast", bundle))], wake_at(rnd, 2 + N - st["parent_label"])
        return st, [], Terminate(None)


def broadcast_program(t: TreeLabeling | None = None, payload: Any = None) -> Broadcast:
    if t is None:
        return Broadcast()
    roots = set(t.roots())
    return Broadcast(t.inputs({r: payload for r in roots}))


def convergecast_program(t: TreeLabeling | None = None,
                         payloads: Mapping[int, Any] | None = None) -> Convergecast:
    if t is None:
        return Convergecast()
    return Convergecast(t.inputs(payloads))
