"""Level-based QUBO compilation for bounded-degree spanning trees.

Each non-root vertex gets a parent choice x[p,v] per incident edge and a
tree depth (level) y[v,l]; unary slack bits z[p,j] absorb the degree
inequality and ancillas a[p,v,l] linearize the parent-level consistency
products. The compiled cost is

    C = C0 + A * (one-parent + one-level + degree + level-consistency)

with C0 the tree weight and A = w_max + epsilon. All coefficients are
exact integers; conversion to floats happens only at the Ising stage.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional

import numpy as np

from .instances import (
    InfeasibleError,
    ProblemInstance,
    SpanningTree,
    solve_bdmst_exact,
    validate_tree,
)

X, Y, Z, ANC = "x", "y", "z", "a"


@dataclass(frozen=True, order=True)
class VarId:
    kind: str
    params: tuple[int, ...]

    def __str__(self):
        return f"{self.kind}{self.params}"


class VarRegistry:
    """Dense index assignment: x block, then y, z, a; each lexicographic."""

    def __init__(self, ordered: list[VarId]):
        self.vars: tuple[VarId, ...] = tuple(ordered)
        self.index: dict[VarId, int] = {v: i for i, v in enumerate(ordered)}

    def __len__(self) -> int:
        return len(self.vars)

    def __getitem__(self, vid: VarId) -> int:
        return self.index[vid]

    def counts(self) -> dict[str, int]:
        out = {X: 0, Y: 0, Z: 0, ANC: 0}
        for v in self.vars:
            out[v.kind] += 1
        out["total"] = len(self.vars)
        return out

    def of_kind(self, kind: str) -> list[VarId]:
        return [v for v in self.vars if v.kind == kind]


@dataclass
class Qubo:
    """Quadratic binary cost with exact integer coefficients."""

    num_vars: int
    linear: dict[int, int]
    quadratic: dict[tuple[int, int], int]  # keys (i, j) with i < j
    offset: int
    penalty_weight: int
    registry: VarRegistry
    instance: ProblemInstance
    preprocess: bool = True
    epsilon: int = 0

    def energy(self, bits) -> int:
        e = self.offset
        for i, c in self.linear.items():
            if bits[i]:
                e += c
        for (i, j), c in self.quadratic.items():
            if bits[i] and bits[j]:
                e += c
        return e

    def energies(self, bit_matrix: np.ndarray) -> np.ndarray:
        """Vectorized evaluation over rows of a 0/1 matrix."""
        b = bit_matrix
        e = np.full(b.shape[0], self.offset, dtype=np.int64)
        for i, c in self.linear.items():
            e += c * b[:, i].astype(np.int64)
        for (i, j), c in self.quadratic.items():
            e += c * (b[:, i] & b[:, j]).astype(np.int64)
        return e

    def interaction_edges(self) -> list[tuple[int, int]]:
        return sorted(self.quadratic.keys())


def level_preprocess(instance: ProblemInstance) -> dict[int, list[int]]:
    """Allowed tree levels per non-root vertex.

    A vertex at distance d from the root can sit no higher than level d+1;
    any level up to n remains possible below that.
    """
    n = instance.graph.n
    dist = instance.graph.bfs_distances(instance.root)
    return {
        v: list(range(dist[v] + 1, n + 1))
        for v in range(1, n + 1)
        if v != instance.root
    }


def _full_levels(instance: ProblemInstance) -> dict[int, list[int]]:
    n = instance.graph.n
    return {v: list(range(2, n + 1)) for v in range(1, n + 1) if v != instance.root}


def _build_registry(instance: ProblemInstance, levels: dict[int, list[int]], preprocess: bool) -> VarRegistry:
    adj = instance.graph.adjacency()
    root = instance.root
    delta = instance.degree_bound
    n = instance.graph.n

    xs = []
    for p in range(1, n + 1):
        for v in adj[p]:
            if v != root:
                xs.append(VarId(X, (p, v)))
    ys = [VarId(Y, (v, l)) for v in sorted(levels) for l in levels[v]]
    zs = []
    for p in range(1, n + 1):
        cap = delta if p == root else delta - 1
        for j in range(1, cap + 1):
            zs.append(VarId(Z, (p, j)))
    ancs = []
    for p in range(1, n + 1):
        for v in adj[p]:
            if v == root:
                continue
            if preprocess and p == root:
                continue  # root-parent consistency terms stay quadratic
            for l in levels[v]:
                if l >= 3:
                    ancs.append(VarId(ANC, (p, v, l)))
    return VarRegistry(sorted(xs) + sorted(ys) + sorted(zs) + sorted(ancs))


def build_qubo(
    instance: ProblemInstance,
    preprocess: bool = True,
    epsilon: int = 0,
    check_feasible: bool = True,
) -> Qubo:
    """Compile an instance to QUBO form.

    With epsilon > 0 the minimum is attained only by correctly encoded
    bounded-degree spanning trees; with epsilon = 0 the minimum value still
    equals the optimal tree cost but ties with broken encodings are possible
    in principle, so decoded outputs are verified downstream.
    """
    if check_feasible and instance.graph.n <= 10:
        if not solve_bdmst_exact(instance).feasible:
            raise InfeasibleError(
                f"no spanning tree with max degree <= {instance.degree_bound}"
            )
    levels = level_preprocess(instance) if preprocess else _full_levels(instance)
    reg = _build_registry(instance, levels, preprocess)
    adj = instance.graph.adjacency()
    wmap = instance.weight_map()
    root = instance.root
    delta = instance.degree_bound
    a_pen = instance.w_max + epsilon

    linear: dict[int, int] = {}
    quad: dict[tuple[int, int], int] = {}
    offset = 0

    def add_lin(i: int, c: int):
        if c:
            linear[i] = linear.get(i, 0) + c
            if linear[i] == 0:
                del linear[i]

    def add_quad(i: int, j: int, c: int):
        if not c:
            return
        if i == j:
            add_lin(i, c)
            return
        key = (i, j) if i < j else (j, i)
        quad[key] = quad.get(key, 0) + c
        if quad[key] == 0:
            del quad[key]

    def add_square(terms: list[tuple[int, int]], const: int, weight: int):
        """weight * (sum_i c_i b_i + const)^2 expanded into the maps."""
        nonlocal offset
        offset += weight * const * const
        for t, (i, ci) in enumerate(terms):
            add_lin(i, weight * (ci * ci + 2 * ci * const))
            for (j, cj) in terms[t + 1 :]:
                add_quad(i, j, weight * 2 * ci * cj)

    xi = {vid.params: reg[vid] for vid in reg.of_kind(X)}
    yi = {vid.params: reg[vid] for vid in reg.of_kind(Y)}
    zi = {vid.params: reg[vid] for vid in reg.of_kind(Z)}
    ai = {vid.params: reg[vid] for vid in reg.of_kind(ANC)}

    # tree weight
    for (p, v), i in xi.items():
        add_lin(i, wmap[(min(p, v), max(p, v))])

    # one parent per non-root vertex
    for v in sorted(levels):
        terms = [(xi[(p, v)], 1) for p in adj[v]]
        add_square(terms, -1, a_pen)

    # one level per non-root vertex
    for v in sorted(levels):
        terms = [(yi[(v, l)], 1) for l in levels[v]]
        add_square(terms, -1, a_pen)

    # degree bound: children of p equal a unary slack count
    for p in range(1, instance.graph.n + 1):
        cap = delta if p == root else delta - 1
        terms = [(xi[(p, v)], 1) for v in adj[p] if v != root]
        terms += [(zi[(p, j)], -1) for j in range(1, cap + 1)]
        add_square(terms, 0, a_pen)

    # level consistency around the root: child of root <=> level 2
    for v in sorted(levels):
        if 2 not in levels[v]:
            continue
        y2 = yi[(v, 2)]
        if (root, v) in xi:
            x_rv = xi[(root, v)]
            # x(1 - y) + y(1 - x)
            add_lin(x_rv, a_pen)
            add_lin(y2, a_pen)
            add_quad(x_rv, y2, -2 * a_pen)
        else:
            # level 2 without a root edge is plainly illegal
            add_lin(y2, a_pen)

    # level consistency elsewhere: x[p,v] * y[v,l] * (1 - y[p,l-1]),
    # linearized through an ancilla when one is registered for (p,v,l)
    for (p, v), x_idx in sorted(xi.items()):
        for l in levels[v]:
            if l < 3:
                continue
            y_idx = yi[(v, l)]
            yp_idx = yi.get((p, l - 1)) if p != root else None
            if (p, v, l) in ai:
                a_idx = ai[(p, v, l)]
                # 4a - a*y_prev + x*y - 2ax - 2ay
                add_lin(a_idx, 4 * a_pen)
                if yp_idx is not None:
                    add_quad(a_idx, yp_idx, -a_pen)
                add_quad(x_idx, y_idx, a_pen)
                add_quad(a_idx, x_idx, -2 * a_pen)
                add_quad(a_idx, y_idx, -2 * a_pen)
            else:
                # parent cannot sit at level l-1, so the pair itself is illegal
                if yp_idx is None:
                    add_quad(x_idx, y_idx, a_pen)
                else:  # pragma: no cover - registry always carries the ancilla here
                    raise AssertionError("missing ancilla for cubic term")

    return Qubo(
        num_vars=len(reg),
        linear=linear,
        quadratic=quad,
        offset=offset,
        penalty_weight=a_pen,
        registry=reg,
        instance=instance,
        preprocess=preprocess,
        epsilon=epsilon,
    )


def count_variables(instance: ProblemInstance, preprocess: bool = True) -> dict[str, int]:
    """Variable census {x, y, z, a, total} without building coefficient maps."""
    levels = level_preprocess(instance) if preprocess else _full_levels(instance)
    reg = _build_registry(instance, levels, preprocess)
    return reg.counts()


@dataclass(frozen=True)
class DecodedSolution:
    status: str  # "valid-tree" | "broken-encoding"
    reason: Optional[str]
    tree: Optional[SpanningTree]
    energy: int

    @property
    def is_tree(self) -> bool:
        return self.status == "valid-tree"


def decode(bits, qubo: Qubo) -> DecodedSolution:
    """Reconstruct a candidate tree from a sampler bitstring.

    Validity requires exactly one parent and one level per non-root vertex,
    parent levels one below child levels, the degree bound, and the edge set
    forming a spanning tree. The reported energy is always the exact QUBO
    value of the bits, whatever the status.
    """
    if len(bits) != qubo.num_vars:
        raise ValueError(f"expected {qubo.num_vars} bits, got {len(bits)}")
    inst = qubo.instance
    root = inst.root
    energy = qubo.energy(bits)
    reg = qubo.registry

    parents: dict[int, list[int]] = {}
    levels: dict[int, list[int]] = {}
    for vid in reg.vars:
        if not bits[reg[vid]]:
            continue
        if vid.kind == X:
            p, v = vid.params
            parents.setdefault(v, []).append(p)
        elif vid.kind == Y:
            v, l = vid.params
            levels.setdefault(v, []).append(l)

    def broken(reason: str) -> DecodedSolution:
        return DecodedSolution("broken-encoding", reason, None, energy)

    non_root = [v for v in range(1, inst.graph.n + 1) if v != root]
    for v in non_root:
        got = parents.get(v, [])
        if len(got) == 0:
            return broken("no-parent")
        if len(got) > 1:
            return broken("multi-parent")
    for v in non_root:
        got = levels.get(v, [])
        if len(got) != 1:
            return broken("level")
    level_of = {root: 1, **{v: levels[v][0] for v in non_root}}
    for v in non_root:
        p = parents[v][0]
        if level_of[p] != level_of[v] - 1:
            return broken("level-mismatch")
    edges = [(min(p, v), max(p, v)) for v, (p,) in ((v, parents[v]) for v in non_root)]
    verdict = validate_tree(inst.graph, edges, inst.degree_bound)
    if not verdict:
        return broken(verdict.reason)
    tree = SpanningTree.from_edges(edges, inst.weight_map())
    return DecodedSolution("valid-tree", None, tree, energy)


def encode_tree(qubo: Qubo, tree_edges) -> list[int]:
    """Bitstring for a known tree: parent/level assignment plus consistent
    slack and ancilla bits; useful for golden tests."""
    inst = qubo.instance
    root = inst.root
    adj: dict[int, list[int]] = {v: [] for v in range(1, inst.graph.n + 1)}
    for (u, v) in tree_edges:
        adj[u].append(v)
        adj[v].append(u)
    level_of = {root: 1}
    parent_of: dict[int, int] = {}
    frontier = [root]
    while frontier:
        nxt = []
        for u in frontier:
            for w in adj[u]:
                if w not in level_of:
                    level_of[w] = level_of[u] + 1
                    parent_of[w] = u
                    nxt.append(w)
        frontier = nxt
    if len(level_of) != inst.graph.n:
        raise ValueError("edge set does not span the graph")

    reg = qubo.registry
    bits = [0] * qubo.num_vars
    for v, p in parent_of.items():
        bits[reg[VarId(X, (p, v))]] = 1
    for v, l in level_of.items():
        if v != root:
            bits[reg[VarId(Y, (v, l))]] = 1
    children = {p: sum(1 for v, q in parent_of.items() if q == p) for p in level_of}
    for p, cnt in children.items():
        for j in range(1, cnt + 1):
            bits[reg[VarId(Z, (p, j))]] = 1
    for vid in reg.of_kind(ANC):
        p, v, l = vid.params
        x_on = parent_of.get(v) == p
        y_on = level_of.get(v) == l
        bits[reg[vid]] = 1 if (x_on and y_on) else 0
    return bits


# ---------------------------------------------------------------------------
# Exact minimization


def _bit_rows(lo: int, hi: int, width: int) -> np.ndarray:
    ints = np.arange(lo, hi, dtype=np.int64)
    return ((ints[:, None] >> np.arange(width)) & 1).astype(np.uint8)


def brute_force_minimum(qubo: Qubo, chunk: int = 1 << 18) -> tuple[int, list[tuple[int, ...]]]:
    """Global minimum over all 2^num_vars assignments (guarded at 26 bits)."""
    nbits = qubo.num_vars
    if nbits > 26:
        raise ValueError(f"{nbits} variables is past the brute-force guard (26)")
    best = None
    argmins: list[tuple[int, ...]] = []
    for lo in range(0, 1 << nbits, chunk):
        hi = min(lo + chunk, 1 << nbits)
        rows = _bit_rows(lo, hi, nbits)
        e = qubo.energies(rows)
        m = int(e.min())
        if best is None or m < best:
            best = m
            argmins = []
        if m == best:
            for idx in np.nonzero(e == best)[0]:
                argmins.append(tuple(int(b) for b in rows[idx]))
    return best, argmins


def structured_minimum(qubo: Qubo, chunk: int = 1 << 18, collect: bool = True):
    """Exact minimum with the slack and ancilla bits eliminated analytically.

    For fixed parent/level bits, the optimal slack count is the clipped
    child count and the optimal ancilla equals the product it encodes, so
    only the x/y core is enumerated. Returns (min_energy, cores) where each
    core is a full bitstring with canonical auxiliary completion.
    """
    inst = qubo.instance
    reg = qubo.registry
    levels = level_preprocess(inst) if qubo.preprocess else _full_levels(inst)
    adj = inst.graph.adjacency()
    root = inst.root
    delta = inst.degree_bound
    a_pen = qubo.penalty_weight
    wmap = inst.weight_map()

    x_vids = reg.of_kind(X)
    y_vids = reg.of_kind(Y)
    core = x_vids + y_vids
    ncore = len(core)
    if ncore > 26:
        raise ValueError(f"core of {ncore} x/y bits is past the enumeration guard (26)")
    cpos = {vid: k for k, vid in enumerate(core)}

    w_vec = np.array([wmap[(min(p, v), max(p, v))] for (p, v) in (vid.params for vid in x_vids)], dtype=np.int64)
    nx = len(x_vids)

    parent_groups = [
        np.array([cpos[VarId(X, (p, v))] for p in adj[v]], dtype=np.int64)
        for v in sorted(levels)
    ]
    level_groups = [
        np.array([cpos[VarId(Y, (v, l))] for l in levels[v]], dtype=np.int64)
        for v in sorted(levels)
    ]
    degree_groups = []
    for p in range(1, inst.graph.n + 1):
        cap = delta if p == root else delta - 1
        cols = np.array([cpos[VarId(X, (p, v))] for v in adj[p] if v != root], dtype=np.int64)
        degree_groups.append((cols, cap))

    root_pairs = []  # (x column or None, y2 column)
    for v in sorted(levels):
        if 2 not in levels[v]:
            continue
        xcol = cpos.get(VarId(X, (root, v)))
        root_pairs.append((xcol, cpos[VarId(Y, (v, 2))]))

    cubic_terms = []  # (x col, y col, y_prev col or None)
    for vid in x_vids:
        p, v = vid.params
        for l in levels[v]:
            if l < 3:
                continue
            ycol = cpos[VarId(Y, (v, l))]
            ypcol = cpos.get(VarId(Y, (p, l - 1))) if p != root else None
            cubic_terms.append((cpos[vid], ycol, ypcol))

    best = None
    best_cores: list[np.ndarray] = []
    for lo in range(0, 1 << ncore, chunk):
        hi = min(lo + chunk, 1 << ncore)
        rows = _bit_rows(lo, hi, ncore)
        e = rows[:, :nx].astype(np.int64) @ w_vec
        pen = np.zeros(rows.shape[0], dtype=np.int64)
        for cols in parent_groups:
            s = rows[:, cols].sum(axis=1, dtype=np.int64) - 1
            pen += s * s
        for cols in level_groups:
            s = rows[:, cols].sum(axis=1, dtype=np.int64) - 1
            pen += s * s
        for cols, cap in degree_groups:
            s = rows[:, cols].sum(axis=1, dtype=np.int64) if len(cols) else np.zeros(rows.shape[0], dtype=np.int64)
            over = np.clip(s - cap, 0, None)
            pen += over * over
        for xcol, ycol in root_pairs:
            yv = rows[:, ycol].astype(np.int64)
            if xcol is None:
                pen += yv
            else:
                xv = rows[:, xcol].astype(np.int64)
                pen += xv + yv - 2 * xv * yv
        for xcol, ycol, ypcol in cubic_terms:
            t = (rows[:, xcol] & rows[:, ycol]).astype(np.int64)
            if ypcol is not None:
                t *= 1 - rows[:, ypcol].astype(np.int64)
            pen += t
        e += a_pen * pen
        m = int(e.min())
        if best is None or m < best:
            best = m
            best_cores = []
        if collect and m == best:
            for idx in np.nonzero(e == best)[0]:
                best_cores.append(rows[idx].copy())

    completions = []
    for row in best_cores:
        bits = [0] * qubo.num_vars
        for k, vid in enumerate(core):
            bits[reg[vid]] = int(row[k])
        # slack: canonical unary fill of the clipped child count
        for p in range(1, inst.graph.n + 1):
            cap = delta if p == root else delta - 1
            s = sum(int(row[cpos[VarId(X, (p, v))]]) for v in adj[p] if v != root)
            for j in range(1, min(s, cap) + 1):
                bits[reg[VarId(Z, (p, j))]] = 1
        for vid in reg.of_kind(ANC):
            p, v, l = vid.params
            bits[reg[vid]] = int(row[cpos[VarId(X, (p, v))]] & row[cpos[VarId(Y, (v, l))]])
        completions.append(tuple(bits))
    return best, completions


# ---------------------------------------------------------------------------
# Coordinate text export


def qubo_to_coo(qubo: Qubo) -> str:
    """One term per line `i j coeff`; i == j carries the linear part.

    Header comments carry the registry so the file stands alone."""
    lines = [f"# offset {qubo.offset}", f"# penalty_weight {qubo.penalty_weight}"]
    for idx, vid in enumerate(qubo.registry.vars):
        params = " ".join(str(p) for p in vid.params)
        lines.append(f"# var {idx} {vid.kind} {params}")
    for i in sorted(qubo.linear):
        lines.append(f"{i} {i} {qubo.linear[i]}")
    for (i, j) in sorted(qubo.quadratic):
        lines.append(f"{i} {j} {qubo.quadratic[(i, j)]}")
    return "\n".join(lines) + "\n"


def registry_sidecar(qubo: Qubo) -> dict:
    return {
        "num_vars": qubo.num_vars,
        "penalty_weight": qubo.penalty_weight,
        "epsilon": qubo.epsilon,
        "preprocess": qubo.preprocess,
        "instance": qubo.instance.to_json(),
        "variables": [
            {"index": i, "kind": vid.kind, "params": list(vid.params)}
            for i, vid in enumerate(qubo.registry.vars)
        ],
    }
