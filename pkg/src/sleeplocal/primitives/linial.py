"""Deterministic colour reduction with polynomials over a prime field.

A colour ``x`` in ``{1..m}`` is read as the polynomial over GF(p) whose
coefficients are the base-``p`` digits of ``x - 1`` (degree at most ``d``,
so ``p**(d+1) >= m`` keeps the map injective).  Two distinct such
polynomials agree on at most ``d`` points, so with ``p > d * delta`` a node
finds a point ``alpha`` where its polynomial differs from every neighbour's,
and ``alpha * p + f(alpha) + 1`` is a proper colour in ``{1..p**2}``.
Each step picks the ``(p, d)`` giving the smallest new palette; steps repeat
while the palette shrinks.  The schedule depends only on ``(m, delta)``, so
every node can compute the round count locally.
"""
from __future__ import annotations

from functools import lru_cache
from typing import Mapping

from ..engine import Failure, NodeProgram, STAY_AWAKE, Terminate
from ..graph import Graph


def is_prime(x: int) -> bool:
    if x < 2:
        return False
    if x % 2 == 0:
        return x == 2
    f = 3
    while f * f <= x:
        if x % f == 0:
            return False
        f += 2
    return True


def prime_at_least(x: int) -> int:
    x = max(x, 2)
    while not is_prime(x):
        x += 1
    return x


def _iroot_ceil(m: int, k: int) -> int:
    """Smallest integer r with r**k >= m."""
    r = max(1, int(round(m ** (1.0 / k))))
    while r ** k < m:
        r += 1
    while r > 1 and (r - 1) ** k >= m:
        r -= 1
    return r


def step_parameters(m: int, delta: int) -> tuple[int, int] | None:
    """Best ``(p, d)`` for one step from an ``m``-colouring, or None if no step shrinks it."""
    best = None
    d = 1
    while True:
        p = prime_at_least(max(d * delta + 1, _iroot_ceil(m, d + 1)))
        if best is None or p < best[0]:
            best = (p, d)
        if 2 ** (d + 1) >= m and d * delta + 1 >= 2:
            break
        d += 1
    p, d = best
    return best if p * p < m else None


@lru_cache(maxsize=None)
def linial_schedule(m: int, delta: int) -> tuple[tuple[int, int], ...]:
    """Sequence of ``(p, d)`` steps applied to an ``m``-colouring with max degree ``delta``."""
    if delta <= 0:
        return ()
    steps = []
    while True:
        params = step_parameters(m, delta)
        if params is None:
            return tuple(steps)
        steps.append(params)
        m = params[0] ** 2


def final_palette(m: int, delta: int) -> int:
    if delta <= 0:
        return 1
    steps = linial_schedule(m, delta)
    return steps[-1][0] ** 2 if steps else m


def polynomial(color: int, p: int, d: int) -> tuple[int, ...]:
    x = color - 1
    coeffs = []
    for _ in range(d + 1):
        x, digit = divmod(x, p)
        coeffs.append(digit)
    if x:
        raise ValueError(f"colour {color} does not fit degree-{d} polynomials over GF({p})")
    return tuple(coeffs)


def evaluate(coeffs: tuple[int, ...], x: int, p: int) -> int:
    acc = 0
    for c in reversed(coeffs):
        acc = (acc * x + c) % p
    return acc


def reduce_color(color: int, neighbor_colors, p: int, d: int) -> int:
    """One reduction step for a node; ``neighbor_colors`` must exclude ``color``."""
    own = polynomial(color, p, d)
    others = [polynomial(c, p, d) for c in set(neighbor_colors)]
    for alpha in range(p):
        value = evaluate(own, alpha, p)
        if all(evaluate(g, alpha, p) != value for g in others):
            return alpha * p + value + 1
    raise ValueError(f"no free evaluation point: degree bound violated (p={p}, d={d})")


def linial_color(g: Graph, colors: Mapping[int, int], delta: int, m: int) -> dict[int, int]:
    """Centralised reference: apply the full schedule to a proper colouring of ``g``."""
    if delta <= 0:
        return {v: 1 for v in g.nodes}
    cur = dict(colors)
    for p, d in linial_schedule(m, delta):
        cur = {v: reduce_color(cur[v], [cur[u] for u in g.adj[v]], p, d) for v in g.nodes}
    return cur


class LinialProgram(NodeProgram):
    """Colour reduction as a node program.

    Input is the node's initial colour (its ID when None).  With
    ``square=True`` the target graph is the square of the network: each step
    takes two rounds, the second relaying neighbours' colours one hop further.
    """

    def __init__(self, delta: int, m: int, square: bool = False):
        self.delta = delta
        self.m = m
        self.square = square
        self.steps = linial_schedule(m, delta)

    def round_bound(self, n):
        return max(1, len(self.steps) * (2 if self.square else 1))

    def init(self, ctx):
        color = ctx.id if ctx.input is None else ctx.input
        if not 1 <= color <= self.m:
            raise ValueError(f"initial colour {color} of node {ctx.id} outside 1..{self.m}")
        st = {"id": ctx.id, "color": color, "step": 0, "checked": False}
        if self.delta <= 0 or not self.steps:
            return st, []
        return st, [(None, ("col", color))]

    def on_wake(self, st, rnd, inbox):
        if self.delta <= 0:
            return st, [], Terminate(1)
        if not self.steps:
            return st, [], Terminate(st["color"])
        me = st["id"]
        if self.square and rnd % 2 == 1:
            seen = {s: m[1] for s, m in inbox if m[0] == "col"}
            st["near"] = seen
            return st, [(None, ("nbr", seen))], STAY_AWAKE
        if self.square:
            near = dict(st.pop("near"))
            for s, m in inbox:
                if m[0] == "nbr":
                    for u, c in m[1].items():
                        if u != me:
                            near.setdefault(u, c)
        else:
            near = {s: m[1] for s, m in inbox if m[0] == "col"}
        if not st["checked"]:
            st["checked"] = True
            clash = sorted(u for u, c in near.items() if c == st["color"])
            if clash:
                u, v = sorted((me, clash[0]))
                return st, [], Terminate(Failure(f"improper initial colouring on edge ({u}, {v})"))
        p, d = self.steps[st["step"]]
        st["color"] = reduce_color(st["color"], near.values(), p, d)
        st["step"] += 1
        if st["step"] == len(self.steps):
            return st, [], Terminate(st["color"])
        return st, [(None, ("col", st["color"]))], STAY_AWAKE


def linial_coloring_program(delta: int, m: int, square: bool = False) -> LinialProgram:
    return LinialProgram(delta, m, square)


def log_star(n: float) -> int:
    import math
    count = 0
    while n > 1:
        n = math.log2(n)
        count += 1
    return count
