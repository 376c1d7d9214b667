"""Colour-to-schedule mapping on the complete binary tree with ``2q - 1`` nodes.

Tree nodes carry in-order labels ``1..2q-1``; leaves are the odd labels.
Colour ``c`` is sent to the ``c``-th leaf, ``phi(c) = 2c - 1``, and ``r(c)``
collects the labels on the root-to-leaf path.  Any two leaves share the path
down to their lowest common ancestor, whose label lies strictly between
theirs; that shared label is the round at which information flows from the
smaller colour to the larger one.
"""
from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache


def is_power_of_two(q: int) -> bool:
    return isinstance(q, int) and q >= 1 and q & (q - 1) == 0


def next_power_of_two(k: int) -> int:
    """Smallest power of two that is >= k (and >= 1)."""
    return 1 if k <= 1 else 1 << (k - 1).bit_length()


@dataclass(frozen=True)
class ColorMapping:
    q: int

    def __post_init__(self):
        if not is_power_of_two(self.q):
            raise ValueError(f"q must be a power of two, got {self.q!r}")

    def _check(self, c: int):
        if not 1 <= c <= self.q:
            raise ValueError(f"colour {c} outside 1..{self.q}")

    def phi(self, c: int) -> int:
        self._check(c)
        return 2 * c - 1

    def r(self, c: int) -> tuple[int, ...]:
        """Sorted labels on the path from the root to leaf ``phi(c)``."""
        self._check(c)
        return _path(self.q, 2 * c - 1)

    def r_before(self, c: int) -> tuple[int, ...]:
        f = 2 * c - 1
        return tuple(x for x in self.r(c) if x < f)

    def r_after(self, c: int) -> tuple[int, ...]:
        f = 2 * c - 1
        return tuple(x for x in self.r(c) if x > f)

    @property
    def depth(self) -> int:
        return self.q.bit_length() - 1


@lru_cache(maxsize=None)
def _path(q: int, target: int) -> tuple[int, ...]:
    x, step = q, q // 2
    labels = [x]
    while x != target:
        x = x - step if target < x else x + step
        step //= 2
        labels.append(x)
    return tuple(sorted(labels))


def bm_tree_mapping(q: int) -> ColorMapping:
    return ColorMapping(q)
