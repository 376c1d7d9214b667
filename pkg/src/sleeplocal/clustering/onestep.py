"""One clustering phase: few big clusters, the rest small singleton colours.

Outline per node ``v`` (IDs break every tie):

1. learn neighbours; get a distance-2 colour ``c0`` in ``{1..k}`` (the ID, or
   colour reduction on the square graph);
2. ``c1 = c0 + k`` if ``deg(v) <= b`` else ``c0``;
3. parent ``p1``: none if ``v`` is a local minimum of ``c1`` within distance
   2; else the smallest-colour neighbour if some neighbour is smaller
   (shift 0); else the smallest-colour node at distance 2 (shift 1);
4. ``c2 = 2 * c1(p1) + shift`` (0 at roots) and ``p2`` is ``p1`` or, for
   shift 1, the smallest common neighbour of ``v`` and ``p1``; ``c2``
   strictly decreases along ``p2`` so the pointers form a forest;
5. every tree gathers its structure at the root (labels ``c2 + 1``) and the
   root sends back its ID, the BFS distances inside the tree's node set, and
   whether its degree exceeds ``b``;
6. trees with a big root keep ``(root ID + a*b^2, distance)``; the others
   become singletons coloured by colour reduction on the induced subgraph,
   whose degree is at most ``b``.

The program never reads ``ctx.neighbors`` and can run on a virtual graph.
"""
from __future__ import annotations

from collections import deque
from dataclasses import dataclass

from ..engine import NodeProgram, ProgramError, STAY_AWAKE, Terminate, wake_at
from ..primitives.linial import final_palette, linial_schedule, reduce_color


@dataclass(frozen=True)
class OnestepOutput:
    gamma: int
    delta: int
    label: int          # ID of the root of the node's tree
    big: bool
    degree: int
    c0: int
    c1: int
    p1: int | None
    shift: int | None
    c2: int
    p2: int | None


@dataclass(frozen=True)
class OnestepParams:
    b: int
    id_bound: int
    use_ids: bool
    a: int

    def square_steps(self, n: int):
        return () if self.use_ids else linial_schedule(self.id_bound, max(n - 1, 0))

    def k(self, n: int) -> int:
        return self.id_bound if self.use_ids else final_palette(self.id_bound, max(n - 1, 0))

    def small_steps(self, n: int):
        return linial_schedule(self.k(n), self.b)

    def r0(self, n: int) -> int:
        s = len(self.square_steps(n))
        return 2 * s + 1 if s else 2

    def tree_bound(self, n: int) -> int:
        return 4 * self.k(n) + 2

    def small_start(self, n: int) -> int:
        return self.r0(n) + 3 + 2 * self.tree_bound(n) + 1

    def rounds(self, n: int) -> int:
        s_u = len(self.small_steps(n))
        return self.small_start(n) + s_u - 1 if s_u else self.small_start(n) - 1


def bfs_from(root, adjacency) -> dict:
    dist = {root: 0}
    queue = deque([root])
    while queue:
        v = queue.popleft()
        for u in adjacency[v]:
            if u in adjacency and u not in dist:
                dist[u] = dist[v] + 1
                queue.append(u)
    return dist


class Onestep(NodeProgram):
    def __init__(self, b: int, id_bound: int, use_ids: bool = False, a: int | None = None):
        from ..constants import LINIAL_A
        self.params = OnestepParams(b, id_bound, use_ids, LINIAL_A if a is None else a)

    @property
    def small_bound(self) -> int:
        return self.params.a * self.params.b ** 2

    def round_bound(self, n):
        return self.params.rounds(n)

    def init(self, ctx):
        P = self.params
        n = ctx.n
        k = P.k(n)
        if final_palette(k, P.b) > self.small_bound:
            raise ValueError(f"a={P.a} too small: colour reduction leaves "
                             f"{final_palette(k, P.b)} > a*b^2 colours")
        st = {"id": ctx.id, "k": k, "square": P.square_steps(n), "small": P.small_steps(n),
              "r0": P.r0(n), "NF": P.tree_bound(n), "color": ctx.id, "sq_step": 0}
        if ctx.id > P.id_bound:
            raise ProgramError(f"ID {ctx.id} exceeds the ID bound {P.id_bound}")
        return st, [(None, ("c", ctx.id))]

    def _shifted(self, st):
        st["c0"] = st["color"]
        st["c1"] = st["c0"] + st["k"] if st["deg"] <= self.params.b else st["c0"]
        return [(None, ("c1", st["c1"]))]

    def on_wake(self, st, rnd, inbox):
        if rnd == 1:
            st["nbrs"] = tuple(s for s, m in inbox if m[0] == "c")
            st["deg"] = len(st["nbrs"])
        r0 = st["r0"]
        if rnd < r0:
            return self._square_round(st, rnd, inbox)
        if rnd == r0:
            st["nc1"] = {s: m[1] for s, m in inbox if m[0] == "c1"}
            return st, [(None, ("m1", st["nc1"]))], STAY_AWAKE
        if rnd == r0 + 1:
            return self._pointers(st, rnd, inbox)
        if rnd == r0 + 2:
            return self._forest(st, rnd, inbox)
        return self._phase(st, rnd, inbox)

    def _square_round(self, st, rnd, inbox):
        steps = st["square"]
        if not steps:
            return st, self._shifted(st), STAY_AWAKE
        me = st["id"]
        if rnd % 2 == 1:
            st["near"] = {s: m[1] for s, m in inbox if m[0] == "c"}
            return st, [(None, ("nc", st["near"]))], STAY_AWAKE
        near = st.pop("near")
        for _, m in inbox:
            if m[0] == "nc":
                for u, c in m[1].items():
                    if u != me:
                        near.setdefault(u, c)
        p, d = steps[st["sq_step"]]
        st["color"] = reduce_color(st["color"], near.values(), p, d)
        st["sq_step"] += 1
        if st["sq_step"] < len(steps):
            return st, [(None, ("c", st["color"]))], STAY_AWAKE
        return st, self._shifted(st), STAY_AWAKE

    def _pointers(self, st, rnd, inbox):
        me, c1 = st["id"], st["c1"]
        nc1 = st["nc1"]
        maps = {s: m[1] for s, m in inbox if m[0] == "m1"}
        far: dict[int, int] = {}
        for u in st["nbrs"]:
            for w, c in maps.get(u, {}).items():
                if w != me and w not in nc1:
                    far[w] = c
        lower_n = [u for u in nc1 if nc1[u] < c1]
        if lower_n:
            p1 = min(nc1, key=lambda u: (nc1[u], u))
            shift, cp = 0, nc1[p1]
            p2 = p1
        elif any(c < c1 for c in far.values()):
            p1 = min(far, key=lambda u: (far[u], u))
            shift, cp = 1, far[p1]
            common = [u for u in st["nbrs"] if p1 in maps.get(u, {})]
            p2 = min(common)
        else:
            p1 = p2 = shift = None
            cp = None
        st.update(p1=p1, shift=shift, p2=p2, c2=0 if p1 is None else 2 * cp + shift)
        st.pop("nc1")
        return st, [(None, ("f", st["c2"], p2))], STAY_AWAKE

    def _forest(self, st, rnd, inbox):
        me = st["id"]
        info = {s: (m[1], m[2]) for s, m in inbox if m[0] == "f"}
        st["children"] = tuple(sorted(s for s, (_, p) in info.items() if p == me))
        p2 = st["p2"]
        NF = st["NF"]
        st["L"] = st["c2"] + 1
        if p2 is not None:
            if p2 not in info or not st["c2"] > info[p2][0]:
                raise ProgramError(f"node {me}: colour does not decrease towards parent {p2} at round {rnd}")
            st["Lp"] = info[p2][0] + 1
        if st["L"] > NF:
            raise ProgramError(f"node {me}: tree label {st['L']} exceeds {NF}")
        base_c = st["r0"] + 3
        st["base_c"], st["base_b"] = base_c, base_c + NF
        st["bundle"] = ((me, st["nbrs"]), ())
        if st["children"]:
            st["step"] = "gather"
            return st, [], wake_at(rnd, base_c + NF - st["L"])
        if p2 is None:
            return self._tree_result(st, rnd, self._root_result(st))
        st["step"] = "sent"
        return st, [(p2, ("up", st["bundle"]))], wake_at(rnd, base_c + NF - st["Lp"])

    def _root_result(self, st):
        adjacency = {}
        stack = [st["bundle"]]
        while stack:
            (node, nbrs), kids = stack.pop()
            adjacency[node] = nbrs
            stack.extend(kids)
        dist = bfs_from(st["id"], adjacency)
        return (st["id"], st["deg"] > self.params.b, dist)

    def _phase(self, st, rnd, inbox):
        step = st["step"]
        NF = st["NF"]
        if step == "gather":
            kids = tuple(m[1] for s, m in inbox if m[0] == "up")
            if len(kids) != len(st["children"]):
                raise ProgramError(f"node {st['id']}: missing subtree bundle at round {rnd}")
            st["bundle"] = (st["bundle"][0], kids)
            if st["p2"] is None:
                result = self._root_result(st)
                st["bundle"] = None
                st["result"] = result
                st["step"] = "forward"
                out = [(c, ("down", result)) for c in st["children"]]
                return st, out, wake_at(rnd, st["base_b"] + st["L"])
            st["step"] = "sent"
            return st, [(st["p2"], ("up", st["bundle"]))], wake_at(rnd, st["base_c"] + NF - st["Lp"])
        if step == "sent":
            st["bundle"] = None
            st["step"] = "receive"
            return st, [], wake_at(rnd, st["base_b"] + st["Lp"])
        if step == "receive":
            got = [m[1] for s, m in inbox if m[0] == "down" and s == st["p2"]]
            if not got:
                raise ProgramError(f"node {st['id']}: no tree result at round {rnd}")
            st["result"] = got[0]
            if st["children"]:
                st["step"] = "forward"
                out = [(c, ("down", got[0])) for c in st["children"]]
                return st, out, wake_at(rnd, st["base_b"] + st["L"])
            return self._tree_result(st, rnd, got[0])
        if step == "forward":
            return self._tree_result(st, rnd, st["result"])
        if step == "small":
            return self._small_round(st, rnd, inbox)
        raise ProgramError(f"node {st['id']}: unexpected wake at round {rnd}")

    def _output(self, st, gamma, delta):
        label, big, _ = st["result"]
        return OnestepOutput(gamma, delta, label, big, st["deg"], st["c0"], st["c1"],
                             st["p1"], st["shift"], st["c2"], st["p2"])

    def _tree_result(self, st, rnd, result):
        st["result"] = result
        label, big, dist = result
        if big:
            return st, [], Terminate(self._output(st, label + self.small_bound, dist[st["id"]]))
        st["color"] = st["c0"]
        if not st["small"]:
            return st, [], Terminate(self._output(st, st["color"], 0))
        st["step"] = "small"
        st["small_step"] = 0
        start = st["base_b"] + st["NF"] + 1
        return st, [(None, ("u", st["color"]))], wake_at(rnd, start)

    def _small_round(self, st, rnd, inbox):
        near = [m[1] for s, m in inbox if m[0] == "u"]
        p, d = st["small"][st["small_step"]]
        st["color"] = reduce_color(st["color"], near, p, d)
        st["small_step"] += 1
        if st["small_step"] == len(st["small"]):
            return st, [], Terminate(self._output(st, st["color"], 0))
        return st, [(None, ("u", st["color"]))], STAY_AWAKE


def onestep_program(b: int, id_bound: int, use_ids: bool = False, a: int | None = None) -> Onestep:
    return Onestep(b, id_bound, use_ids, a)
