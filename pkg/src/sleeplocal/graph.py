"""Simple undirected graphs keyed by node ID, generators and edge-list I/O.

Nodes are identified by their IDs throughout the library: a node *is* its ID.
IDs live in ``{1..n**s}`` where ``s`` is the ID-range exponent of the graph.
"""
from __future__ import annotations

import io
import random
from collections import deque
from dataclasses import dataclass, field
from typing import Iterable, Mapping

import networkx as nx

FAMILIES = ("path", "cycle", "star", "grid", "tree", "gnp", "regular")


class GraphError(ValueError):
    pass


class EdgeListParseError(GraphError):
    def __init__(self, line: int, message: str):
        super().__init__(f"{message} at line {line}")
        self.line = line


class Graph:
    """Immutable simple undirected graph.

    ``adj`` maps every node ID to the frozenset of its neighbours.
    ``id_exponent`` is the ``s`` of the ID range ``{1..n**s}``.
    """

    __slots__ = ("_adj", "_nodes", "id_exponent", "_m", "_id_bound")

    def __init__(self, adj: Mapping[int, Iterable[int]], id_exponent: int = 1,
                 id_bound: int | None = None):
        frozen = {int(v): frozenset(int(u) for u in nbrs) for v, nbrs in adj.items()}
        if id_exponent < 1:
            raise GraphError("ID exponent must be >= 1")
        n = len(frozen)
        bound = id_bound if id_bound is not None else max(n, 1) ** id_exponent
        m2 = 0
        for v, nbrs in frozen.items():
            if not 1 <= v <= bound:
                raise GraphError(f"node ID {v} outside 1..{bound}")
            if v in nbrs:
                raise GraphError(f"self-loop at node {v}")
            for u in nbrs:
                if u not in frozen or v not in frozen[u]:
                    raise GraphError(f"asymmetric adjacency between {v} and {u}")
            m2 += len(nbrs)
        self._adj = frozen
        self._nodes = tuple(sorted(frozen))
        self.id_exponent = id_exponent
        self._id_bound = id_bound
        self._m = m2 // 2

    @classmethod
    def from_edges(cls, nodes: Iterable[int], edges: Iterable[tuple[int, int]],
                   id_exponent: int = 1) -> "Graph":
        adj: dict[int, set[int]] = {int(v): set() for v in nodes}
        for u, v in edges:
            if u == v:
                raise GraphError(f"self-loop at node {u}")
            adj.setdefault(u, set()).add(v)
            adj.setdefault(v, set()).add(u)
        return cls(adj, id_exponent)

    @property
    def n(self) -> int:
        return len(self._nodes)

    @property
    def m(self) -> int:
        return self._m

    @property
    def nodes(self) -> tuple[int, ...]:
        return self._nodes

    @property
    def adj(self) -> Mapping[int, frozenset[int]]:
        return self._adj

    @property
    def id_bound(self) -> int:
        """Largest admissible ID, known to every node."""
        if self._id_bound is not None:
            return self._id_bound
        return max(self.n, 1) ** self.id_exponent

    def neighbors(self, v: int) -> frozenset[int]:
        return self._adj[v]

    def degree(self, v: int) -> int:
        return len(self._adj[v])

    @property
    def max_degree(self) -> int:
        return max((len(a) for a in self._adj.values()), default=0)

    def has_edge(self, u: int, v: int) -> bool:
        return v in self._adj.get(u, ())

    def edges(self) -> list[tuple[int, int]]:
        return sorted((u, v) for u in self._nodes for v in self._adj[u] if u < v)

    def subgraph(self, keep: Iterable[int]) -> "Graph":
        keep = set(keep)
        sub = Graph.__new__(Graph)
        sub._adj = {v: self._adj[v] & keep for v in self._nodes if v in keep}
        sub._nodes = tuple(sorted(sub._adj))
        sub.id_exponent = self.id_exponent
        sub._id_bound = self.id_bound
        sub._m = sum(len(a) for a in sub._adj.values()) // 2
        return sub

    def bfs_distances(self, source: int, within: set[int] | None = None) -> dict[int, int]:
        dist = {source: 0}
        queue = deque([source])
        while queue:
            v = queue.popleft()
            for u in self._adj[v]:
                if u not in dist and (within is None or u in within):
                    dist[u] = dist[v] + 1
                    queue.append(u)
        return dist

    def components(self, within: Iterable[int] | None = None) -> list[list[int]]:
        pool = set(self._nodes if within is None else within)
        comps = []
        for v in sorted(pool):
            if v not in pool:
                continue
            comp = list(self.bfs_distances(v, pool))
            pool.difference_update(comp)
            comps.append(sorted(comp))
        return comps

    def to_networkx(self) -> nx.Graph:
        g = nx.Graph()
        g.add_nodes_from(self._nodes)
        g.add_edges_from(self.edges())
        return g

    def __eq__(self, other):
        return isinstance(other, Graph) and self._adj == other._adj

    def __hash__(self):
        return hash((self._nodes, tuple(self.edges())))

    def __repr__(self):
        return f"Graph(n={self.n}, m={self.m}, s={self.id_exponent})"


def square(g: Graph) -> Graph:
    """Same nodes; u~v iff 1 <= dist_g(u, v) <= 2."""
    adj = {}
    for v in g.nodes:
        reach = set(g.adj[v])
        for u in g.adj[v]:
            reach |= g.adj[u]
        reach.discard(v)
        adj[v] = reach
    return Graph(adj, g.id_exponent, g._id_bound)


@dataclass(frozen=True)
class GraphFamily:
    kind: str
    params: Mapping[str, float] = field(default_factory=dict)
    seed: int = 0
    id_exponent: int = 1


def _require(params, *names):
    missing = [k for k in names if k not in params]
    if missing:
        raise GraphError(f"missing parameter(s) {', '.join(missing)}")


def _structure(kind: str, params: Mapping, seed: int) -> nx.Graph:
    _require(params, "n")
    n = int(params["n"])
    if n < 1:
        raise GraphError(f"n must be >= 1, got {n}")
    if kind == "path":
        return nx.path_graph(n)
    if kind == "cycle":
        if n < 3:
            raise GraphError("a cycle needs n >= 3")
        return nx.cycle_graph(n)
    if kind == "star":
        return nx.star_graph(n - 1)
    if kind == "grid":
        rows = int(params.get("rows", 0)) or int(round(n ** 0.5))
        if rows < 1 or n % rows:
            raise GraphError(f"grid with n={n} cannot have {rows} rows")
        return nx.grid_2d_graph(rows, n // rows)
    if kind == "tree":
        return nx.random_labeled_tree(n, seed=seed) if n > 1 else nx.empty_graph(1)
    if kind == "gnp":
        _require(params, "p")
        p = float(params["p"])
        if not 0.0 <= p <= 1.0:
            raise GraphError(f"gnp probability must lie in [0, 1], got {p}")
        return nx.gnp_random_graph(n, p, seed=seed)
    if kind == "regular":
        _require(params, "d")
        d = int(params["d"])
        if d < 0 or d >= n or (n * d) % 2:
            raise GraphError(f"no {d}-regular graph on {n} nodes")
        return nx.random_regular_graph(d, n, seed=seed)
    raise GraphError(f"unknown graph family {kind!r}; expected one of {FAMILIES}")


def generate(family: GraphFamily) -> Graph:
    """Deterministic graph for ``(kind, params, seed)``; IDs are a seeded sample."""
    base = _structure(family.kind, family.params, family.seed)
    order = sorted(base.nodes)
    n = len(order)
    rng = random.Random(f"ids:{family.kind}:{family.seed}:{n}")
    bound = n ** family.id_exponent
    ids = rng.sample(range(1, bound + 1), n)
    mapping = dict(zip(order, ids))
    adj = {mapping[v]: [mapping[u] for u in base.adj[v]] for v in order}
    return Graph(adj, family.id_exponent)


def save_edge_list(g: Graph, sink) -> None:
    """Header ``n m`` (plus ``s`` when s > 1), then edges; isolated nodes
    are listed on their own when the ID range is sparse."""
    out = io.StringIO()
    header = f"{g.n} {g.m}" + (f" {g.id_exponent}" if g.id_exponent > 1 else "")
    out.write(header + "\n")
    for u, v in g.edges():
        out.write(f"{u} {v}\n")
    if g.id_exponent > 1:
        for v in g.nodes:
            if not g.adj[v]:
                out.write(f"{v}\n")
    text = out.getvalue()
    if hasattr(sink, "write"):
        sink.write(text)
    else:
        with open(sink, "w", encoding="utf-8", newline="\n") as fh:
            fh.write(text)


def load_edge_list(source) -> Graph:
    if hasattr(source, "read"):
        text = source.read()
    elif isinstance(source, str) and "\n" in source:
        text = source
    else:
        with open(source, encoding="utf-8") as fh:
            text = fh.read()
    header = None
    edges: set[tuple[int, int]] = set()
    edge_list = []
    extra: set[int] = set()
    for lineno, raw in enumerate(text.split("\n"), start=1):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        try:
            fields = [int(x) for x in line.split()]
        except ValueError:
            raise EdgeListParseError(lineno, f"non-integer token in {line!r}") from None
        if header is None:
            if len(fields) not in (2, 3):
                raise EdgeListParseError(lineno, "header must be 'n m' or 'n m s'")
            n, m = fields[:2]
            s = fields[2] if len(fields) == 3 else 1
            if n < 1 or m < 0 or s < 1:
                raise EdgeListParseError(lineno, "invalid header values")
            header = (n, m, s, n ** s)
            continue
        n, m, s, bound = header
        for x in fields:
            if not 1 <= x <= bound:
                raise EdgeListParseError(lineno, f"ID {x} out of range 1..{bound}")
        if len(fields) == 1 and s > 1:
            if fields[0] in extra:
                raise EdgeListParseError(lineno, f"ID collision: node {fields[0]} declared twice")
            extra.add(fields[0])
            continue
        if len(fields) != 2:
            raise EdgeListParseError(lineno, f"expected 'u v', got {line!r}")
        u, v = fields
        if u == v:
            raise EdgeListParseError(lineno, "self-loop")
        key = (min(u, v), max(u, v))
        if key in edges:
            raise EdgeListParseError(lineno, f"duplicate edge {u}-{v}")
        edges.add(key)
        edge_list.append((key, lineno))
    if header is None:
        raise EdgeListParseError(1, "missing header")
    n, m, s, _ = header
    if len(edges) != m:
        raise GraphError(f"header declares {m} edges but {len(edges)} were read")
    if s == 1:
        nodes = set(range(1, n + 1))
    else:
        nodes = {x for e in edges for x in e}
        clash = nodes & extra
        if clash:
            raise GraphError(f"ID collision: isolated declaration of connected node {min(clash)}")
        nodes |= extra
        if len(nodes) != n:
            raise GraphError(f"header declares {n} nodes but {len(nodes)} distinct IDs were read")
    return Graph.from_edges(nodes, edges, s)
