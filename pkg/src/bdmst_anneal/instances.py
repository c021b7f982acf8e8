"""Problem instances for degree-bounded minimum spanning trees.

Holds the built-in catalog of n=5 benchmark graphs and weight lists,
plus exact classical solvers used as oracles everywhere else in the
package: spanning tree enumeration, a brute-force BD-MST solver,
Kruskal's algorithm and a tree validator.

Vertices are 1-indexed externally (as in the catalog tables) and kept
1-indexed internally; edges are normalized to (u, v) with u < v.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable, Iterator, Optional

Edge = tuple[int, int]


def _norm_edge(u: int, v: int) -> Edge:
    return (u, v) if u < v else (v, u)


class InfeasibleError(Exception):
    """No spanning tree satisfying the degree bound exists."""


@dataclass(frozen=True)
class Graph:
    """Simple connected undirected graph on vertices 1..n."""

    n: int
    edges: tuple[Edge, ...]
    label: str = ""

    def __post_init__(self):
        seen = set()
        for (u, v) in self.edges:
            if u == v:
                raise ValueError(f"self-loop at vertex {u}")
            if not (1 <= u <= self.n and 1 <= v <= self.n):
                raise ValueError(f"edge ({u},{v}) out of range 1..{self.n}")
            if u > v:
                raise ValueError(f"edge ({u},{v}) not normalized (u < v required)")
            if (u, v) in seen:
                raise ValueError(f"duplicate edge ({u},{v})")
            seen.add((u, v))
        if not self._connected():
            raise ValueError("graph is not connected")

    def _connected(self) -> bool:
        if self.n == 0:
            return False
        adj = self.adjacency()
        seen = {1}
        stack = [1]
        while stack:
            u = stack.pop()
            for w in adj[u]:
                if w not in seen:
                    seen.add(w)
                    stack.append(w)
        return len(seen) == self.n

    @property
    def m(self) -> int:
        return len(self.edges)

    def adjacency(self) -> dict[int, list[int]]:
        adj: dict[int, list[int]] = {v: [] for v in range(1, self.n + 1)}
        for (u, v) in self.edges:
            adj[u].append(v)
            adj[v].append(u)
        return {v: sorted(ws) for v, ws in adj.items()}

    def degree(self, v: int) -> int:
        return sum(1 for (a, b) in self.edges if a == v or b == v)

    def has_edge(self, u: int, v: int) -> bool:
        return _norm_edge(u, v) in set(self.edges)

    def bfs_distances(self, source: int) -> dict[int, int]:
        adj = self.adjacency()
        dist = {source: 0}
        frontier = [source]
        while frontier:
            nxt = []
            for u in frontier:
                for w in adj[u]:
                    if w not in dist:
                        dist[w] = dist[u] + 1
                        nxt.append(w)
            frontier = nxt
        return dist


def default_root(graph: Graph) -> int:
    """Highest-degree vertex, smallest id on ties."""
    return max(range(1, graph.n + 1), key=lambda v: (graph.degree(v), -v))


@dataclass(frozen=True)
class ProblemInstance:
    """Weighted graph with a degree bound and a designated tree root."""

    graph: Graph
    weights: tuple[int, ...]  # aligned with graph.edges
    degree_bound: int
    root: int
    label: str = ""

    def __post_init__(self):
        if len(self.weights) != self.graph.m:
            raise ValueError("one weight per edge required")
        if any(w <= 0 for w in self.weights):
            raise ValueError("weights must be positive")
        if self.degree_bound < 2:
            raise ValueError("degree bound must be >= 2")
        if not (1 <= self.root <= self.graph.n):
            raise ValueError("root outside vertex range")

    def weight_map(self) -> dict[Edge, int]:
        return dict(zip(self.graph.edges, self.weights))

    @property
    def w_max(self) -> int:
        return max(self.weights)

    def to_json(self) -> dict:
        return {
            "label": self.label,
            "n": self.graph.n,
            "edges": [list(e) for e in self.graph.edges],
            "weights": list(self.weights),
            "delta": self.degree_bound,
            "root": self.root,
        }

    @staticmethod
    def from_json(obj: dict) -> "ProblemInstance":
        edges = tuple(_norm_edge(int(u), int(v)) for u, v in obj["edges"])
        graph = Graph(n=int(obj["n"]), edges=edges, label=obj.get("label", ""))
        root = obj.get("root")
        return ProblemInstance(
            graph=graph,
            weights=tuple(int(w) for w in obj["weights"]),
            degree_bound=int(obj["delta"]),
            root=int(root) if root is not None else default_root(graph),
            label=obj.get("label", ""),
        )


@dataclass(frozen=True)
class SpanningTree:
    edges: tuple[Edge, ...]  # sorted
    cost: int

    @staticmethod
    def from_edges(edges: Iterable[Edge], weight_map: dict[Edge, int]) -> "SpanningTree":
        es = tuple(sorted(_norm_edge(*e) for e in edges))
        return SpanningTree(edges=es, cost=sum(weight_map[e] for e in es))

    def max_degree(self) -> int:
        deg: dict[int, int] = {}
        for (u, v) in self.edges:
            deg[u] = deg.get(u, 0) + 1
            deg[v] = deg.get(v, 0) + 1
        return max(deg.values())


# ---------------------------------------------------------------------------
# Catalog: 22 connected n=5 graphs and the weight lists they pair with.
# An instance takes the first m weights of a list, so a pairing is valid
# only when the list has at least m entries.

CATALOG_GRAPHS: dict[str, tuple[Edge, ...]] = {
    "m4ver1": ((1, 2), (2, 3), (3, 4), (4, 5)),
    "m5ver1": ((1, 2), (2, 3), (3, 4), (4, 5), (1, 5)),
    "m5ver2": ((1, 2), (2, 3), (2, 5), (3, 4), (4, 5)),
    "m5ver3": ((1, 2), (2, 3), (2, 4), (3, 4), (4, 5)),
    "m5ver5": ((1, 2), (1, 3), (1, 4), (1, 5), (4, 5)),
    "m5ver6": ((1, 2), (2, 3), (3, 4), (4, 5), (3, 5)),
    "m6ver1": ((1, 2), (1, 5), (2, 5), (2, 3), (3, 4), (4, 5)),
    "m6ver2": ((1, 2), (2, 3), (2, 4), (2, 5), (3, 4), (4, 5)),
    "m6ver3": ((1, 2), (2, 3), (2, 5), (3, 5), (3, 4), (4, 5)),
    "m6ver4": ((1, 2), (1, 5), (1, 3), (2, 3), (3, 4), (4, 5)),
    "m6ver5": ((1, 2), (1, 3), (2, 3), (3, 5), (3, 4), (4, 5)),
    "m6ver6": ((1, 2), (2, 3), (3, 4), (1, 4), (2, 5), (4, 5)),
    "m7ver1": ((1, 2), (1, 5), (1, 4), (2, 5), (2, 3), (3, 4), (4, 5)),
    "m7ver2": ((1, 2), (1, 5), (2, 5), (2, 3), (2, 4), (3, 5), (4, 5)),
    "m7ver3": ((1, 2), (1, 3), (1, 4), (1, 5), (2, 3), (3, 4), (4, 5)),
    "m7ver4": ((1, 2), (1, 3), (1, 4), (2, 4), (2, 3), (3, 4), (4, 5)),
    "m7ver5": ((1, 2), (2, 3), (3, 4), (1, 4), (4, 5), (2, 5), (3, 5)),
    "m7ver6": ((1, 2), (1, 3), (1, 4), (1, 5), (2, 3), (3, 4), (4, 5)),
    "m8ver1": ((1, 2), (1, 5), (1, 3), (1, 4), (2, 5), (2, 3), (3, 4), (4, 5)),
    "m8ver2": ((1, 2), (1, 5), (2, 5), (2, 3), (2, 4), (3, 4), (3, 5), (4, 5)),
    "m9ver1": ((1, 2), (2, 3), (4, 5), (1, 5), (1, 4), (1, 3), (2, 5), (2, 4), (3, 5)),
    "m10ver1": ((1, 2), (2, 3), (3, 4), (4, 5), (1, 5), (1, 4), (1, 3), (2, 5), (2, 4), (3, 5)),
}

# m5ver5 contains a K_{1,4} star; it only admits spanning trees of degree >= 3.
DELTA3_ONLY = ("m5ver5",)

WEIGHT_LISTS: dict[str, tuple[int, ...]] = {
    "w2": (1, 2, 1, 2, 1, 2, 1, 2, 1, 2),
    "w3": (1, 1, 2, 1, 1, 2, 1, 1, 2, 1),
    "w4": (1, 1, 2, 2, 1, 1, 2, 2, 1, 1),
    "w5": (1, 4, 1, 4, 1, 4, 1, 4, 1, 4),
    "w6": (1, 3, 6, 1, 3, 6, 1, 3, 6, 1),
    "w7": (1, 7, 1, 7, 1, 7, 1, 7, 1, 7),
    "w8": (3, 2, 1, 3, 2, 1, 3, 2, 1, 3),
    "w9": (4, 3, 2, 1, 4, 3, 2, 1, 4, 3),
    "w10": (5, 4, 3, 2, 1, 5, 4, 3, 2, 1),
    "w11": (6, 5, 4, 3, 2, 1, 6, 5, 4, 3),
    "w12": (7, 6, 5, 4, 3, 2, 1, 7, 6, 5),
    "w13": (1, 1, 3, 4, 2, 1, 2, 3, 4, 2),
    "w14": (3, 2, 1, 1, 1, 1, 2, 4, 2, 2),
    "w15": (2, 1, 2, 1, 4, 1, 1, 3, 3, 2),
    "w16": (4, 3, 3, 4, 3, 3, 4, 3, 4),
    "w17": (3, 4, 7, 5, 5, 5, 5),
    "w18": (2, 1, 4, 1, 2, 1, 2),
    "w19": (4, 6, 4, 7, 4, 7),
    "w20": (1, 1, 2, 3, 2, 3),
    "w21": (4, 5, 4, 5, 5),
    "w22": (2, 2, 6, 2, 4),
    "w23": (3, 3, 5, 2, 3, 2, 5, 2, 5),
    "w24": (4, 3, 2, 2),
    "w25": (2, 2, 6, 2, 4),
    "w26": (4, 3, 3, 3),
    "w27": (3, 4, 7, 5, 5, 5, 5),
    "w28": (4, 6, 4, 7, 4, 7),
    "w29": (6, 4, 2, 2),
}


def load_catalog() -> list[Graph]:
    """All 22 built-in n=5 graphs, in catalog order."""
    return [Graph(n=5, edges=edges, label=label) for label, edges in CATALOG_GRAPHS.items()]


def catalog_graph(label: str) -> Graph:
    try:
        return Graph(n=5, edges=CATALOG_GRAPHS[label], label=label)
    except KeyError:
        raise KeyError(f"unknown catalog graph {label!r}") from None


def make_instance(
    graph_label: str,
    weight_label: str,
    degree_bound: int = 2,
    root: Optional[int] = None,
) -> ProblemInstance:
    """Pair a catalog graph with the first m entries of a weight list."""
    graph = catalog_graph(graph_label)
    try:
        wl = WEIGHT_LISTS[weight_label]
    except KeyError:
        raise KeyError(f"unknown weight list {weight_label!r}") from None
    if len(wl) < graph.m:
        raise ValueError(
            f"weight list {weight_label} has {len(wl)} entries, graph {graph_label} needs {graph.m}"
        )
    return ProblemInstance(
        graph=graph,
        weights=wl[: graph.m],
        degree_bound=degree_bound,
        root=root if root is not None else default_root(graph),
        label=f"{graph_label}/{weight_label}",
    )


def delta2_labels() -> list[str]:
    """Catalog graphs admitting a spanning tree of maximum degree 2."""
    return [lbl for lbl in CATALOG_GRAPHS if lbl not in DELTA3_ONLY]


# ---------------------------------------------------------------------------
# Exact solvers


class _UnionFind:
    def __init__(self, items: Iterable[int]):
        self.parent = {x: x for x in items}

    def find(self, x: int) -> int:
        while self.parent[x] != x:
            self.parent[x] = self.parent[self.parent[x]]
            x = self.parent[x]
        return x

    def union(self, a: int, b: int) -> bool:
        ra, rb = self.find(a), self.find(b)
        if ra == rb:
            return False
        self.parent[ra] = rb
        return True


def _edges_connect(n: int, edges: Iterable[Edge]) -> bool:
    uf = _UnionFind(range(1, n + 1))
    comps = n
    for (u, v) in edges:
        if uf.union(u, v):
            comps -= 1
    return comps == 1


MAX_EXACT_N = 10


def enumerate_spanning_trees(graph: Graph) -> Iterator[tuple[Edge, ...]]:
    """Yield every spanning tree edge set exactly once.

    Include/exclude backtracking over the edge list; an exclude branch is
    pruned as soon as the remaining edges cannot connect the graph, so
    every leaf reached is a distinct spanning tree.
    """
    if graph.n > MAX_EXACT_N:
        raise ValueError(f"enumeration limited to n <= {MAX_EXACT_N}")
    n, edges = graph.n, graph.edges
    m = len(edges)

    def rec(i: int, chosen: list[Edge], parent: dict[int, int]) -> Iterator[tuple[Edge, ...]]:
        if len(chosen) == n - 1:
            yield tuple(chosen)
            return
        if i == m:
            return

        def find(x: int) -> int:
            while parent[x] != x:
                parent[x] = parent[parent[x]]
                x = parent[x]
            return x

        u, v = edges[i]
        ru, rv = find(u), find(v)
        if ru != rv:
            saved = dict(parent)
            parent[ru] = rv
            chosen.append(edges[i])
            yield from rec(i + 1, chosen, parent)
            chosen.pop()
            parent.clear()
            parent.update(saved)
        # exclude branch: viable only if the rest can still span
        if _edges_connect(n, chosen + list(edges[i + 1 :])):
            yield from rec(i + 1, chosen, parent)

    yield from rec(0, [], {v: v for v in range(1, n + 1)})


def count_spanning_trees(graph: Graph) -> int:
    """Kirchhoff matrix-tree count via exact integer determinant (Bareiss)."""
    n = graph.n
    lap = [[0] * n for _ in range(n)]
    for (u, v) in graph.edges:
        lap[u - 1][u - 1] += 1
        lap[v - 1][v - 1] += 1
        lap[u - 1][v - 1] -= 1
        lap[v - 1][u - 1] -= 1
    # delete last row/column, then fraction-free elimination
    a = [row[: n - 1] for row in lap[: n - 1]]
    size = n - 1
    if size == 0:
        return 1
    sign = 1
    prev = 1
    for k in range(size - 1):
        if a[k][k] == 0:
            for r in range(k + 1, size):
                if a[r][k] != 0:
                    a[k], a[r] = a[r], a[k]
                    sign = -sign
                    break
            else:
                return 0
        for i in range(k + 1, size):
            for j in range(k + 1, size):
                a[i][j] = (a[i][j] * a[k][k] - a[i][k] * a[k][j]) // prev
        prev = a[k][k]
    return sign * a[size - 1][size - 1]


@dataclass(frozen=True)
class BdmstResult:
    feasible: bool
    cost: Optional[int] = None
    tree: Optional[SpanningTree] = None


def solve_bdmst_exact(instance: ProblemInstance) -> BdmstResult:
    """Minimum-weight spanning tree with max degree <= bound, by enumeration.

    Ties broken toward the lexicographically smallest sorted edge list.
    """
    if instance.graph.n > MAX_EXACT_N:
        raise ValueError(f"exact solver limited to n <= {MAX_EXACT_N}")
    wmap = instance.weight_map()
    best: Optional[tuple[int, tuple[Edge, ...]]] = None
    for tree_edges in enumerate_spanning_trees(instance.graph):
        st = SpanningTree.from_edges(tree_edges, wmap)
        if st.max_degree() > instance.degree_bound:
            continue
        key = (st.cost, st.edges)
        if best is None or key < best:
            best = key
    if best is None:
        return BdmstResult(feasible=False)
    cost, edges = best
    return BdmstResult(feasible=True, cost=cost, tree=SpanningTree(edges=edges, cost=cost))


def kruskal_mst(graph: Graph, weights: tuple[int, ...]) -> SpanningTree:
    """Unconstrained minimum spanning tree; lower bound for any BD-MST."""
    wmap = dict(zip(graph.edges, weights))
    uf = _UnionFind(range(1, graph.n + 1))
    chosen: list[Edge] = []
    for e in sorted(graph.edges, key=lambda e: (wmap[e], e)):
        if uf.union(*e):
            chosen.append(e)
    return SpanningTree.from_edges(chosen, wmap)


@dataclass(frozen=True)
class TreeVerdict:
    valid: bool
    reason: Optional[str] = None  # not-subgraph | cyclic | disconnected | degree-violation

    def __bool__(self) -> bool:
        return self.valid


def validate_tree(graph: Graph, edge_set: Iterable[Edge], degree_bound: int) -> TreeVerdict:
    """Check that edge_set is a spanning tree of graph with max degree <= bound."""
    edges = [_norm_edge(*e) for e in edge_set]
    graph_edges = set(graph.edges)
    for e in edges:
        if e not in graph_edges:
            return TreeVerdict(False, "not-subgraph")
    if len(set(edges)) != len(edges):
        return TreeVerdict(False, "cyclic")
    uf = _UnionFind(range(1, graph.n + 1))
    for (u, v) in edges:
        if not uf.union(u, v):
            return TreeVerdict(False, "cyclic")
    if len(edges) != graph.n - 1:
        return TreeVerdict(False, "disconnected")
    deg: dict[int, int] = {}
    for (u, v) in edges:
        deg[u] = deg.get(u, 0) + 1
        deg[v] = deg.get(v, 0) + 1
    if deg and max(deg.values()) > degree_bound:
        return TreeVerdict(False, "degree-violation")
    return TreeVerdict(True)

