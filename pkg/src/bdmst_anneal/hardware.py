"""Annealer hardware graphs.

Chimera C(M, N, L): an M x N grid of complete bipartite K_{L,L} unit cells;
vertical qubits couple to the same position in the adjacent row, horizontal
qubits to the adjacent column. Max degree L + 2.

Pegasus P(m): the next-generation lattice built from vertical/horizontal
wires (u, w, k, z) with crossing, same-wire and odd-pair couplers; interior
qubits reach 15 neighbours. The fabric variant drops wires that carry no
crossing couplers, matching deployed chip counts.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable

Pair = tuple[int, int]


@dataclass(frozen=True)
class HardwareGraph:
    family: str
    params: tuple[int, ...]
    nodes: tuple[int, ...]
    edges: frozenset[Pair]

    def __post_init__(self):
        nodeset = set(self.nodes)
        for (a, b) in self.edges:
            if a >= b or a not in nodeset or b not in nodeset:
                raise ValueError(f"bad edge ({a},{b})")

    @property
    def num_nodes(self) -> int:
        return len(self.nodes)

    @property
    def num_edges(self) -> int:
        return len(self.edges)

    def neighbours(self) -> dict[int, tuple[int, ...]]:
        adj: dict[int, list[int]] = {v: [] for v in self.nodes}
        for (a, b) in self.edges:
            adj[a].append(b)
            adj[b].append(a)
        return {v: tuple(sorted(ws)) for v, ws in adj.items()}

    def max_degree(self) -> int:
        return max(len(ws) for ws in self.neighbours().values())

    def has_edge(self, a: int, b: int) -> bool:
        return (min(a, b), max(a, b)) in self.edges

    def to_json(self) -> dict:
        return {
            "family": self.family,
            "params": list(self.params),
            "nodes": list(self.nodes),
            "edges": sorted([list(e) for e in self.edges]),
        }

    @staticmethod
    def from_json(obj: dict) -> "HardwareGraph":
        return HardwareGraph(
            family=obj["family"],
            params=tuple(obj.get("params", ())),
            nodes=tuple(obj["nodes"]),
            edges=frozenset((min(a, b), max(a, b)) for a, b in obj["edges"]),
        )


def custom_graph(edges: Iterable[Pair], nodes: Iterable[int] | None = None) -> HardwareGraph:
    es = frozenset((min(a, b), max(a, b)) for a, b in edges)
    ns = tuple(sorted(set(nodes) if nodes is not None else {v for e in es for v in e}))
    return HardwareGraph(family="custom", params=(), nodes=ns, edges=es)


def chimera_graph(m: int, n: int, l: int = 4) -> HardwareGraph:
    """C(m, n, l) with 2*m*n*l qubits.

    Linear index of qubit (i, j, u, k): ((i*n + j)*2 + u)*l + k, where u = 0
    marks the vertical side of the cell and u = 1 the horizontal side.
    """
    if m < 1 or n < 1 or l < 1:
        raise ValueError("chimera dimensions must be >= 1")

    def q(i, j, u, k):
        return ((i * n + j) * 2 + u) * l + k

    edges: set[Pair] = set()
    for i in range(m):
        for j in range(n):
            for k0 in range(l):
                for k1 in range(l):
                    a, b = q(i, j, 0, k0), q(i, j, 1, k1)
                    edges.add((min(a, b), max(a, b)))
            if i + 1 < m:
                for k in range(l):
                    edges.add((q(i, j, 0, k), q(i + 1, j, 0, k)))
            if j + 1 < n:
                for k in range(l):
                    edges.add((q(i, j, 1, k), q(i, j + 1, 1, k)))
    return HardwareGraph(
        family="chimera", params=(m, n, l), nodes=tuple(range(2 * m * n * l)), edges=frozenset(edges)
    )


# wire offsets used by deployed Pegasus chips
_PEG_OFFSETS = (
    (2, 2, 2, 2, 6, 6, 6, 6, 10, 10, 10, 10),  # vertical wires
    (6, 6, 6, 6, 10, 10, 10, 10, 2, 2, 2, 2),  # horizontal wires
)


def pegasus_graph(p: int, fabric: bool = True) -> HardwareGraph:
    """P(p) lattice; the fabric variant keeps only wires with crossing
    couplers, giving 8*(p-1)*(3p-1) qubits and interior degree 15."""
    if p < 2:
        raise ValueError("pegasus size must be >= 2")
    width = 12 * p

    def idx(u, w, k, z):
        return ((u * p + w) * 12 + k) * (p - 1) + z

    nodes = [(u, w, k, z) for u in range(2) for w in range(p) for k in range(12) for z in range(p - 1)]
    edges: set[Pair] = set()

    # same-wire continuation couplers
    for (u, w, k, z) in nodes:
        if z + 1 < p - 1:
            edges.add(tuple(sorted((idx(u, w, k, z), idx(u, w, k, z + 1)))))
    # odd-pair couplers between twinned wires
    for u in range(2):
        for w in range(p):
            for k in range(0, 12, 2):
                for z in range(p - 1):
                    edges.add(tuple(sorted((idx(u, w, k, z), idx(u, w, k + 1, z)))))

    # crossing couplers: a vertical wire (0, w, k, z) lives at x = 12w + k and
    # spans y in [12z + ov_k, 12z + ov_k + 12); symmetrically for horizontal.
    ov, oh = _PEG_OFFSETS
    crossing: set[Pair] = set()
    for w in range(p):
        for k in range(12):
            x = 12 * w + k
            for z in range(p - 1):
                ylo = 12 * z + ov[k]
                for y in range(ylo, ylo + 12):
                    if not (0 <= y < width):
                        continue
                    wh, kh = divmod(y, 12)
                    xlo = 12 * 0 + oh[kh]  # z-range of horizontal wires covering x
                    zh = (x - oh[kh]) // 12 if x >= oh[kh] else -1
                    if zh < 0 or zh >= p - 1:
                        continue
                    if not (12 * zh + oh[kh] <= x < 12 * zh + oh[kh] + 12):
                        continue
                    crossing.add(tuple(sorted((idx(0, w, k, z), idx(1, wh, kh, zh)))))
    edges |= crossing

    keep = set(range(2 * p * 12 * (p - 1)))
    if fabric:
        touched = {v for e in crossing for v in e}
        keep = touched
        edges = {e for e in edges if e[0] in keep and e[1] in keep}

    ordered = tuple(sorted(keep))
    remap = {v: i for i, v in enumerate(ordered)}
    return HardwareGraph(
        family="pegasus",
        params=(p,),
        nodes=tuple(range(len(ordered))),
        edges=frozenset((remap[a], remap[b]) if remap[a] < remap[b] else (remap[b], remap[a]) for (a, b) in edges),
    )
