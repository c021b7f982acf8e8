"""Minor embedding of logical coupling graphs into hardware graphs.

Each logical variable is represented by a vertex model (chain) of physical
qubits held together by ferromagnetic couplers of strength -|J_F|. The
finder treats embedding as negotiated-congestion routing: chains are
seeded over the chip from a spectral layout, then repeatedly re-routed
along cheapest paths toward their neighbours' chains, with the price of a
shared qubit ramping up each round and persistently contested qubits
accumulating history cost until every conflict dissolves. A final polish
splits connection paths between their endpoint chains so no single hub
chain hoards qubits.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, replace
from typing import Iterable, Optional, Sequence

import numpy as np

from .hardware import HardwareGraph
from .ising import Gauge, IsingModel, gauge_transform

Pair = tuple[int, int]


class NoEmbeddingFound(Exception):
    pass


@dataclass(frozen=True)
class Embedding:
    """Map logical variable -> disjoint connected set of physical qubits."""

    chains: tuple[tuple[int, ...], ...]  # index = logical variable, sorted qubits
    hardware: HardwareGraph

    @property
    def num_logical(self) -> int:
        return len(self.chains)

    def chain(self, i: int) -> tuple[int, ...]:
        return self.chains[i]

    def used_qubits(self) -> tuple[int, ...]:
        return tuple(sorted(q for ch in self.chains for q in ch))

    def total_physical(self) -> int:
        return sum(len(ch) for ch in self.chains)

    def to_json(self) -> dict:
        return {
            "hardware": self.hardware.to_json(),
            "chains": {str(i): list(ch) for i, ch in enumerate(self.chains)},
        }

    @staticmethod
    def from_json(obj: dict) -> "Embedding":
        hwg = HardwareGraph.from_json(obj["hardware"])
        chains_map = {int(k): tuple(sorted(v)) for k, v in obj["chains"].items()}
        chains = tuple(chains_map[i] for i in range(len(chains_map)))
        return Embedding(chains=chains, hardware=hwg)


@dataclass(frozen=True)
class EmbeddingVerdict:
    valid: bool
    problems: tuple[str, ...] = ()

    def __bool__(self):
        return self.valid


def validate_embedding(
    embedding: Embedding, logical_edges: Iterable[Pair], hw: HardwareGraph
) -> EmbeddingVerdict:
    """Disjoint chains, each inducing a connected subgraph, covering every
    logical edge with at least one physical coupler."""
    problems: list[str] = []
    adj = hw.neighbours()
    owner: dict[int, int] = {}
    for i, ch in enumerate(embedding.chains):
        if not ch:
            problems.append(f"chain {i} is empty")
            continue
        for q in ch:
            if q in owner:
                problems.append(f"qubit {q} shared by chains {owner[q]} and {i}")
            owner[q] = i
        seen = {ch[0]}
        stack = [ch[0]]
        members = set(ch)
        while stack:
            u = stack.pop()
            for w in adj[u]:
                if w in members and w not in seen:
                    seen.add(w)
                    stack.append(w)
        if seen != members:
            problems.append(f"chain {i} is disconnected")
    for (a, b) in logical_edges:
        ok = any(hw.has_edge(qa, qb) for qa in embedding.chains[a] for qb in embedding.chains[b])
        if not ok:
            problems.append(f"logical edge ({a},{b}) has no physical coupler")
    return EmbeddingVerdict(valid=not problems, problems=tuple(problems))


class _Router:
    """Node-weighted shortest paths on the hardware graph.

    The cost of a path is the summed entry cost of its non-source nodes,
    realized as a directed sparse matrix whose (u, v) weight is the node
    cost of v, refreshed in place per query.
    """

    def __init__(self, hw: HardwareGraph):
        from scipy.sparse import csr_matrix

        self.node_ids = list(hw.nodes)
        self.pos = {q: i for i, q in enumerate(self.node_ids)}
        self.n = len(self.node_ids)
        rows, cols = [], []
        for (a, b) in hw.edges:
            ia, ib = self.pos[a], self.pos[b]
            rows += [ia, ib]
            cols += [ib, ia]
        self._csr = csr_matrix(
            (np.ones(len(rows)), (np.array(rows), np.array(cols))), shape=(self.n, self.n)
        )
        self._csr_cols = self._csr.indices.copy()

    def distances(self, sources: list[int], node_cost: np.ndarray):
        """Multi-source node-weighted distances and a predecessor forest."""
        from scipy.sparse.csgraph import dijkstra

        self._csr.data[:] = node_cost[self._csr_cols]
        src = np.array([self.pos[q] for q in sources], dtype=np.int64)
        dist, pred, _ = dijkstra(
            self._csr, directed=True, indices=src, return_predecessors=True, min_only=True
        )
        return dist, pred


def _grow_chain(
    target_chains: list[set[int]],
    nbr_ids: list[int],
    router: _Router,
    node_cost: np.ndarray,
    rng: np.random.Generator,
) -> Optional[tuple[int, list[tuple[int, list[int]]]]]:
    """Root qubit plus one cheapest path per neighbour chain.

    The root minimizes the summed node-cost distance to every neighbour
    chain; each returned path is ordered from the root outward and stops
    one qubit short of the neighbour chain it reaches (the root itself is
    not included in the paths).
    """
    if not nbr_ids:
        idx = np.nonzero(node_cost < 1.5)[0]  # effectively free qubits
        if len(idx) == 0:
            return None
        return int(router.node_ids[int(rng.choice(idx))]), []

    dists, preds, sources = [], [], []
    for ni in nbr_ids:
        chain_nodes = sorted(target_chains[ni])
        d, pred = router.distances(chain_nodes, node_cost)
        # a root inside the neighbour chain would fake a zero-length path
        # and break edge coverage, so rule it out of root selection
        src_pos = np.array([router.pos[q] for q in chain_nodes])
        d = d.copy()
        d[src_pos] = np.inf
        dists.append(d)  # includes the entry cost of the endpoint itself
        preds.append(pred)
        sources.append(set(chain_nodes))

    total = np.zeros(router.n)
    for d in dists:
        total = total + d
    # the root pays its own cost once, not once per neighbour
    total = total - (len(nbr_ids) - 1) * node_cost
    root = int(np.argmin(total))
    if not np.isfinite(total[root]):
        return None

    paths: list[tuple[int, list[int]]] = []
    for ni, pred, members in zip(nbr_ids, preds, sources):
        path: list[int] = []
        cur = root
        while router.node_ids[cur] not in members:
            if cur != root:
                path.append(router.node_ids[cur])
            nxt = pred[cur]
            if nxt < 0:  # root is adjacent to (or inside) the neighbour chain
                break
            cur = nxt
        paths.append((ni, path))
    return router.node_ids[root], paths


def find_embedding(
    logical_edges: Iterable[Pair],
    num_logical: int,
    hw: HardwareGraph,
    attempts: int = 10,
    seed: Optional[int] = None,
    max_rounds: int = 80,
) -> Embedding:
    """Best valid embedding (fewest physical qubits) over independent attempts.

    Deterministic for a given seed; raises NoEmbeddingFound if every
    attempt fails.
    """
    edges = sorted({(min(a, b), max(a, b)) for (a, b) in logical_edges})
    for (a, b) in edges:
        if not (0 <= a < num_logical and 0 <= b < num_logical):
            raise ValueError(f"logical edge ({a},{b}) out of range")
    if attempts < 1:
        raise ValueError("attempts must be >= 1")
    if num_logical > hw.num_nodes:
        raise NoEmbeddingFound(
            f"{num_logical} logical variables cannot fit {hw.num_nodes} qubits"
        )
    adj = hw.neighbours()
    nbrs: dict[int, list[int]] = {v: [] for v in range(num_logical)}
    for (a, b) in edges:
        nbrs[a].append(b)
        nbrs[b].append(a)

    ss = np.random.SeedSequence(seed)
    best: Optional[Embedding] = None
    for k, child in enumerate(ss.spawn(attempts)):
        rng = np.random.default_rng(child)
        emb = _attempt(
            edges, num_logical, adj, nbrs, rng, max_rounds, hw, spread="spectral" if k % 2 == 0 else "random"
        )
        if emb is None:
            continue
        if best is None or emb.total_physical() < best.total_physical():
            best = emb
    if best is None:
        raise NoEmbeddingFound(f"no embedding found in {attempts} attempts")
    return best


def _spectral_positions(n: int, edges: list[Pair]) -> np.ndarray:
    """Unit-square layout from the two lowest nontrivial Laplacian modes."""
    lap = np.zeros((n, n))
    for (a, b) in edges:
        lap[a, a] += 1
        lap[b, b] += 1
        lap[a, b] -= 1
        lap[b, a] -= 1
    _, vecs = np.linalg.eigh(lap)
    xy = vecs[:, 1:3] if n >= 3 else np.zeros((n, 2))
    lo, hi = xy.min(axis=0), xy.max(axis=0)
    span = np.where(hi - lo > 1e-12, hi - lo, 1.0)
    return (xy - lo) / span


def _hardware_positions(hw: HardwareGraph) -> np.ndarray:
    """Geometric coordinates per qubit; spectral fallback for custom graphs."""
    if hw.family == "chimera":
        m, n, l = hw.params
        out = np.zeros((hw.num_nodes, 2))
        for idx in range(hw.num_nodes):
            cell, _ = divmod(idx, 2 * l)
            i, j = divmod(cell, n)
            out[idx] = (i / max(m - 1, 1), j / max(n - 1, 1))
        return out
    return _spectral_hw_positions(hw)


def _spectral_hw_positions(hw: HardwareGraph) -> np.ndarray:
    from scipy.sparse import csr_matrix
    from scipy.sparse.linalg import eigsh

    n = hw.num_nodes
    pos = {q: i for i, q in enumerate(hw.nodes)}
    rows, cols = [], []
    for (a, b) in hw.edges:
        rows += [pos[a], pos[b]]
        cols += [pos[b], pos[a]]
    data = np.full(len(rows), -1.0)
    lap = csr_matrix((data, (rows, cols)), shape=(n, n))
    deg = -np.asarray(lap.sum(axis=1)).ravel()
    lap = lap + csr_matrix((deg, (np.arange(n), np.arange(n))), shape=(n, n))
    if n <= 600:
        _, vecs = np.linalg.eigh(lap.toarray())
        xy = vecs[:, 1:3]
    else:
        _, vecs = eigsh(lap, k=3, sigma=-1e-3, which="LM")
        xy = vecs[:, 1:3]
    lo, hi = xy.min(axis=0), xy.max(axis=0)
    span = np.where(hi - lo > 1e-12, hi - lo, 1.0)
    return (xy - lo) / span


def _coverage_ok(chains: list[set[int]], edges: list[Pair], nbr_sets: dict[int, set[int]]) -> bool:
    for (a, b) in edges:
        if not any(w in nbr_sets[qa] for qa in chains[a] for w in chains[b]):
            return False
    return True


def _attempt(edges, num_logical, adj, nbrs, rng, max_rounds, hw, spread="spectral") -> Optional[Embedding]:
    """One negotiated-congestion routing pass.

    Chains are seeded over the chip (spectral layout or uniform spread),
    then every chain is re-routed each iteration. Sharing a qubit is cheap
    at first and ramps up geometrically, while persistently contested
    qubits accumulate additive history cost. Attempts either converge
    within a few iterations or freeze in a stable standoff, so stagnation
    aborts the attempt early.
    """
    router = _Router(hw)
    order = sorted(range(num_logical), key=lambda v: (-len(nbrs[v]), v))

    chains: list[set[int]] = [set() for _ in range(num_logical)]
    usage: dict[int, int] = {}
    taken: set[int] = set()
    if spread == "spectral":
        pos_log = _spectral_positions(num_logical, edges)
        pos_hw = _hardware_positions(hw)
        jitter = rng.uniform(-0.08, 0.08, size=pos_log.shape)
        for v in order:
            d2 = ((pos_hw - (pos_log[v] + jitter[v])) ** 2).sum(axis=1)
            for qi in np.argsort(d2):
                q = hw.nodes[int(qi)]
                if q not in taken:
                    chains[v] = {q}
                    taken.add(q)
                    usage[q] = 1
                    break
            if not chains[v]:
                return None
    else:
        picks = rng.choice(len(hw.nodes), size=num_logical, replace=False)
        for v, qi in zip(order, picks):
            q = hw.nodes[int(qi)]
            chains[v] = {q}
            taken.add(q)
            usage[q] = 1

    base = rng.uniform(1.0, 1.05, router.n)  # static tie-break jitter
    history = np.zeros(router.n)
    over = np.zeros(router.n)
    for q, c in usage.items():
        over[router.pos[q]] = c

    def _claim(v: int, qubits) -> None:
        for q in qubits:
            if q not in chains[v]:
                chains[v].add(q)
                usage[q] = usage.get(q, 0) + 1
                over[router.pos[q]] += 1

    def place(v: int, share_factor: float, split: bool = False) -> bool:
        for q in chains[v]:
            usage[q] -= 1
            over[router.pos[q]] -= 1
        chains[v] = set()
        node_cost = base * (1.0 + history) * (1.0 + share_factor * over)
        placed_nbrs = [w for w in nbrs[v] if chains[w]]
        grown = _grow_chain(chains, placed_nbrs, router, node_cost, rng)
        if grown is None:
            return False
        root, paths = grown
        _claim(v, [root])
        if not split:
            for _, path in paths:
                _claim(v, path)
            return True
        # split every connecting path: the near half stays with v, the far
        # half extends the neighbour's chain, so hub chains stay small
        claimed = {root}
        for ni, path in paths:
            if not path:
                continue
            suffix = len(path)  # start of the maximal unclaimed suffix
            while suffix > 0 and path[suffix - 1] not in claimed:
                suffix -= 1
            split_at = max((len(path) + 1) // 2, suffix)
            _claim(v, path[:split_at])
            claimed.update(path[:split_at])
            ext = [q for q in path[split_at:] if q not in claimed]
            _claim(ni, ext)
            claimed.update(ext)
        return True

    nbr_sets = {q: set(ws) for q, ws in adj.items()}
    redo = list(order)
    share_factor = 0.5
    converged = False
    stagnant = 0
    prev_overlap = -1
    for _ in range(max_rounds):
        rng.shuffle(redo)
        for v in redo:
            if not place(v, share_factor):
                return None
        n_overlap = sum(1 for c in usage.values() if c > 1)
        if n_overlap == 0 and _coverage_ok(chains, edges, nbr_sets):
            converged = True
            break
        stagnant = stagnant + 1 if n_overlap == prev_overlap else 0
        prev_overlap = n_overlap
        if stagnant >= 5:
            # frozen standoff: teleport the contested chains to fresh
            # territory and restart the cost ramp (history is kept)
            stagnant = 0
            contested_q = {q for q, c in usage.items() if c > 1}
            movers = [v for v in range(num_logical) if chains[v] & contested_q]
            free = [q for q in router.node_ids if usage.get(q, 0) == 0]
            if not free:
                return None
            rng.shuffle(movers)
            for v in movers:
                for q in chains[v]:
                    usage[q] -= 1
                    over[router.pos[q]] -= 1
                spot = free[int(rng.integers(len(free)))]
                chains[v] = {spot}
                usage[spot] = usage.get(spot, 0) + 1
                over[router.pos[spot]] += 1
            share_factor = 0.5
        contested = [router.pos[q] for q, c in usage.items() if c > 1]
        history[contested] += 1.0
        share_factor = min(share_factor * 1.6, 1e9)
    if not converged:
        return None

    # polish: re-route each chain with sharing effectively forbidden, now
    # splitting connection paths between their endpoints so hub chains shed
    # bulk onto their neighbours; each placement is transactional, rolled
    # back whenever it fails to route or would overlap another chain
    for _ in range(4):
        for v in order:
            affected = [v] + nbrs[v]
            snap_chains = {w: set(chains[w]) for w in affected}
            snap_usage = dict(usage)
            snap_over = over.copy()
            ok = place(v, 1e9, split=True)
            if ok:
                touched = set().union(*(chains[w] for w in affected))
                ok = all(usage[q] <= 1 for q in touched)
            if not ok:
                for w, c in snap_chains.items():
                    chains[w] = c
                usage.clear()
                usage.update(snap_usage)
                over[:] = snap_over
    if any(c > 1 for c in usage.values()) or not _coverage_ok(chains, edges, nbr_sets):
        return None

    _trim(chains, nbrs, adj)
    emb = Embedding(chains=tuple(tuple(sorted(c)) for c in chains), hardware=hw)
    return emb if validate_embedding(emb, edges, hw) else None


def _trim(chains: list[set[int]], nbrs, adj) -> None:
    """Drop chain qubits not needed for connectivity or edge coverage."""
    for v in range(len(chains)):
        changed = True
        while changed and len(chains[v]) > 1:
            changed = False
            for q in sorted(chains[v]):
                rest = chains[v] - {q}
                # connectivity of the remainder
                it = iter(rest)
                seed0 = next(it)
                comp = {seed0}
                stack = [seed0]
                while stack:
                    u = stack.pop()
                    for w in adj[u]:
                        if w in rest and w not in comp:
                            comp.add(w)
                            stack.append(w)
                if comp != rest:
                    continue
                covered = all(
                    any(b in adj[qa] for qa in rest for b in chains[w])
                    for w in nbrs[v]
                    if chains[w]
                )
                if covered:
                    chains[v] = rest
                    changed = True
                    break


@dataclass(frozen=True)
class EmbeddedIsing:
    """Physical-qubit Ising model carrying its embedding and chain strength.

    ising spins are indexed by position in qubit_order (the sorted used
    physical qubits); chain couplers all hold the value -j_ferro.
    """

    ising: IsingModel
    chain_edges: frozenset[Pair]  # in spin-index space
    j_ferro: float
    embedding: Embedding
    qubit_order: tuple[int, ...]
    logical_h: tuple[float, ...]
    logical_edge_couplers: tuple[tuple[Pair, Pair], ...]  # (logical edge, spin pair)

    @property
    def num_physical(self) -> int:
        return len(self.qubit_order)

    def spin_chains(self) -> tuple[tuple[int, ...], ...]:
        pos = {q: i for i, q in enumerate(self.qubit_order)}
        return tuple(tuple(pos[q] for q in ch) for ch in self.embedding.chains)

    def with_j_ferro(self, j_ferro: float) -> "EmbeddedIsing":
        """Same embedding and problem couplers, different chain strength."""
        if j_ferro <= 0:
            raise ValueError("chain strength must be positive")
        J = dict(self.ising.J)
        for e in self.chain_edges:
            J[e] = -j_ferro
        return replace(
            self,
            ising=IsingModel(self.ising.num_spins, dict(self.ising.h), J, self.ising.offset),
            j_ferro=j_ferro,
        )

    def chain_offset(self) -> float:
        """Energy carried by fully aligned chains: -j_ferro per chain edge."""
        return -self.j_ferro * len(self.chain_edges)


def embed_ising(
    logical: IsingModel,
    embedding: Embedding,
    j_ferro: float,
    enforce_hardware_range: bool = True,
) -> EmbeddedIsing:
    """Build the physical model for a logical one.

    Local fields are split equally across each vertex model; every logical
    coupling is placed on a single deterministic physical coupler (the
    smallest available pair); chain couplers form a spanning tree of the
    model's induced subgraph, each at -j_ferro.
    """
    if logical.num_spins != embedding.num_logical:
        raise ValueError("embedding does not match the logical model")
    if logical.max_abs_coefficient() > 1.0 + 1e-12:
        raise ValueError("scale the logical model into [-1, 1] before embedding")
    if j_ferro <= 0:
        raise ValueError("chain strength must be positive")
    if enforce_hardware_range and j_ferro > 2.0:
        raise ValueError("chain strength outside the extended hardware range (0, 2]")

    hw = embedding.hardware
    adj = hw.neighbours()
    used = embedding.used_qubits()
    pos = {q: i for i, q in enumerate(used)}

    h: dict[int, float] = {}
    J: dict[Pair, float] = {}
    for i, hi in logical.h.items():
        ch = embedding.chain(i)
        for q in ch:
            h[pos[q]] = h.get(pos[q], 0.0) + hi / len(ch)

    edge_couplers = []
    for (a, b), jab in sorted(logical.J.items()):
        pairs = sorted(
            (min(pos[qa], pos[qb]), max(pos[qa], pos[qb]))
            for qa in embedding.chain(a)
            for qb in embedding.chain(b)
            if hw.has_edge(qa, qb)
        )
        if not pairs:
            raise ValueError(f"logical edge ({a},{b}) not covered by the embedding")
        J[pairs[0]] = J.get(pairs[0], 0.0) + jab
        edge_couplers.append(((a, b), pairs[0]))

    chain_edges: set[Pair] = set()
    for ch in embedding.chains:
        members = set(ch)
        root = ch[0]
        seen = {root}
        frontier = [root]
        while frontier:  # BFS spanning tree, deterministic by sorted adjacency
            nxt = []
            for u in frontier:
                for w in adj[u]:
                    if w in members and w not in seen:
                        seen.add(w)
                        nxt.append(w)
                        e = (min(pos[u], pos[w]), max(pos[u], pos[w]))
                        chain_edges.add(e)
            frontier = nxt
        if seen != members:
            raise ValueError("vertex model is not connected")
    for e in chain_edges:
        if e in J:
            raise ValueError("problem coupler collides with a chain coupler")
        J[e] = -j_ferro

    logical_h = tuple(logical.h.get(i, 0.0) for i in range(logical.num_spins))
    return EmbeddedIsing(
        ising=IsingModel(num_spins=len(used), h=h, J=J, offset=logical.offset),
        chain_edges=frozenset(chain_edges),
        j_ferro=j_ferro,
        embedding=embedding,
        qubit_order=used,
        logical_h=logical_h,
        logical_edge_couplers=tuple(edge_couplers),
    )


@dataclass(frozen=True)
class UnembedResult:
    ok: bool
    logical: Optional[tuple[int, ...]] = None
    broken: tuple[int, ...] = ()


def unembed_read(config: Sequence[int], embedded: EmbeddedIsing) -> UnembedResult:
    """Collapse a physical read to logical values; any disagreeing vertex
    model marks the read as a chain break (discard policy, no majority vote)."""
    chains = embedded.spin_chains()
    logical: list[int] = []
    broken: list[int] = []
    for i, ch in enumerate(chains):
        vals = {int(config[p]) for p in ch}
        if len(vals) == 1:
            logical.append(vals.pop())
        else:
            broken.append(i)
            logical.append(0)
    if broken:
        return UnembedResult(ok=False, logical=None, broken=tuple(broken))
    return UnembedResult(ok=True, logical=tuple(logical))


def encode_logical(config: Sequence[int], embedded: EmbeddedIsing) -> tuple[int, ...]:
    """Aligned physical configuration representing a logical one."""
    out = [0] * embedded.num_physical
    for i, ch in enumerate(embedded.spin_chains()):
        for p in ch:
            out[p] = int(config[i])
    return tuple(out)


def partial_gauge(embedded: EmbeddedIsing, logical_gauge: Gauge) -> EmbeddedIsing:
    """Gauge the embedded model by propagating logical signs to every qubit
    of the corresponding vertex model.

    Chain couplers keep their sign automatically (both endpoints share the
    same a_i), so only couplings in the symmetric range transform; the
    result equals embedding the gauged logical model.
    """
    if len(logical_gauge) != embedded.embedding.num_logical:
        raise ValueError("gauge indexed by logical variables required")
    phys = [1] * embedded.num_physical
    for i, ch in enumerate(embedded.spin_chains()):
        for p in ch:
            phys[p] = logical_gauge.a[i]
    gauged = gauge_transform(embedded.ising, Gauge(a=tuple(phys)))
    return replace(embedded, ising=gauged)


def physical_gauge(embedded: EmbeddedIsing, logical_gauge: Gauge) -> Gauge:
    phys = [1] * embedded.num_physical
    for i, ch in enumerate(embedded.spin_chains()):
        for p in ch:
            phys[p] = logical_gauge.a[i]
    return Gauge(a=tuple(phys))


def embedding_stats(embedding: Embedding) -> dict:
    sizes = sorted(len(ch) for ch in embedding.chains)
    mid = len(sizes) // 2
    median = (
        float(sizes[mid]) if len(sizes) % 2 else (sizes[mid - 1] + sizes[mid]) / 2.0
    )
    return {
        "physical_count": sum(sizes),
        "chain_sizes": sizes,
        "median_chain_size": median,
        "max_chain_size": sizes[-1] if sizes else 0,
    }


def save_embedding(embedding: Embedding, path) -> None:
    with open(path, "w") as fh:
        json.dump(embedding.to_json(), fh, indent=1, sort_keys=True)


def load_embedding(path) -> Embedding:
    with open(path) as fh:
        return Embedding.from_json(json.load(fh))
