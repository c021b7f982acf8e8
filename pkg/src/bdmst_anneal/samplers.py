"""Classical samplers standing in for the annealer.

simulated_annealing runs many independent Metropolis single-spin-flip
anneals at once: spins are grouped by a greedy coloring of the coupling
graph (no couplings inside a color class), so a whole class updates in one
vectorized step without changing the single-flip dynamics. exhaustive
enumeration provides exact ground states for small models, and
run_experiment drives the gauge-averaged sampling pipeline on embedded
problems.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Optional, Sequence

import numpy as np

from .embedding import EmbeddedIsing, partial_gauge, unembed_read
from .ising import Gauge, IsingModel, random_gauge, ungauge_read

READ_OK = "ok"
READ_CHAIN_BREAK = "chain-break"


@dataclass(frozen=True)
class SaSchedule:
    """Linear-in-beta anneal schedule; the default is sized so the full
    catalog ensemble samples inside a CI budget."""

    sweeps: int = 128
    beta_start: float = 0.1
    beta_end: float = 10.0

    def __post_init__(self):
        if self.sweeps < 1:
            raise ValueError("sweeps must be >= 1")
        if not (0 < self.beta_start <= self.beta_end):
            raise ValueError("need 0 < beta_start <= beta_end")

    def betas(self) -> np.ndarray:
        if self.sweeps == 1:
            return np.array([self.beta_end])
        return np.linspace(self.beta_start, self.beta_end, self.sweeps)


@dataclass(frozen=True)
class ReadRec:
    config: Optional[tuple[int, ...]]  # spins, None for discarded reads
    energy: Optional[float]
    multiplicity: int
    tag: str = READ_OK


@dataclass
class ReadSet:
    reads: list[ReadRec]
    meta: dict

    @property
    def total_reads(self) -> int:
        return sum(r.multiplicity for r in self.reads)

    def ok_reads(self) -> list[ReadRec]:
        return [r for r in self.reads if r.tag == READ_OK]

    def best(self) -> Optional[ReadRec]:
        ok = self.ok_reads()
        return min(ok, key=lambda r: r.energy) if ok else None

    def to_json(self) -> dict:
        return {
            "meta": self.meta,
            "reads": [
                {
                    "config": list(r.config) if r.config is not None else None,
                    "energy": r.energy,
                    "multiplicity": r.multiplicity,
                    "tag": r.tag,
                }
                for r in self.reads
            ],
        }

    @staticmethod
    def from_json(obj: dict) -> "ReadSet":
        return ReadSet(
            reads=[
                ReadRec(
                    config=tuple(r["config"]) if r["config"] is not None else None,
                    energy=r["energy"],
                    multiplicity=int(r["multiplicity"]),
                    tag=r.get("tag", READ_OK),
                )
                for r in obj["reads"]
            ],
            meta=obj.get("meta", {}),
        )


def _model_arrays(ising: IsingModel):
    """Dense field vector and sparse symmetric coupling matrix."""
    from scipy.sparse import csr_matrix

    n = ising.num_spins
    h = np.zeros(n)
    for i, v in ising.h.items():
        h[i] = v
    if ising.J:
        rows, cols, vals = [], [], []
        for (i, j), v in ising.J.items():
            rows += [i, j]
            cols += [j, i]
            vals += [v, v]
        W = csr_matrix((vals, (rows, cols)), shape=(n, n))
    else:
        W = csr_matrix((n, n))
    return h, W


def _greedy_coloring(n: int, pairs) -> list[np.ndarray]:
    adj: dict[int, set[int]] = {i: set() for i in range(n)}
    for (i, j) in pairs:
        adj[i].add(j)
        adj[j].add(i)
    color = [-1] * n
    for v in range(n):
        used = {color[w] for w in adj[v] if color[w] >= 0}
        c = 0
        while c in used:
            c += 1
        color[v] = c
    ncol = max(color) + 1 if n else 0
    return [np.array([v for v in range(n) if color[v] == c], dtype=np.int64) for c in range(ncol)]


def simulated_annealing(
    ising: IsingModel,
    schedule: SaSchedule = SaSchedule(),
    num_reads: int = 100,
    seed: Optional[int] = None,
) -> ReadSet:
    """Independent Metropolis anneals; each read is one restart's final state.

    Deterministic for a given seed.
    """
    if ising.num_spins == 0:
        raise ValueError("empty model")
    rng = np.random.default_rng(np.random.SeedSequence(seed))
    n = ising.num_spins
    h, W = _model_arrays(ising)
    classes = _greedy_coloring(n, ising.J.keys())
    # pre-sliced per-class column blocks; slicing inside the sweep loop
    # would copy the sparse matrix every iteration
    w_blocks = [W[:, cls].astype(np.float32).tocsc() for cls in classes]
    h_blocks = [h[cls].astype(np.float32) for cls in classes]

    S = rng.choice(np.array([-1, 1], dtype=np.int8), size=(num_reads, n))
    Sf = S.astype(np.float32)
    for beta in schedule.betas():
        for cls, wb, hb in zip(classes, w_blocks, h_blocks):
            # fields seen by the class; no intra-class couplings by coloring
            field = Sf @ wb + hb
            dE = -2.0 * Sf[:, cls] * field
            accept = rng.random(size=dE.shape, dtype=np.float32) < np.exp(
                -beta * np.clip(dE, 0.0, None)
            )
            Sf[:, cls] = np.where(accept, -Sf[:, cls], Sf[:, cls])

    S = Sf.astype(np.int8)
    Sd = Sf.astype(np.float64)
    energies = Sd @ h + 0.5 * np.einsum("ij,ij->i", Sd, W.dot(Sd.T).T) + ising.offset

    # aggregate identical configurations
    groups: dict[bytes, list[int]] = {}
    for r in range(num_reads):
        groups.setdefault(S[r].tobytes(), []).append(r)
    reads = []
    for key in sorted(groups):
        idx = groups[key]
        cfg = tuple(int(s) for s in np.frombuffer(key, dtype=np.int8))
        reads.append(ReadRec(config=cfg, energy=float(energies[idx[0]]), multiplicity=len(idx)))
    meta = {
        "sampler": "simulated-annealing",
        "num_reads": num_reads,
        "seed": seed,
        "sweeps": schedule.sweeps,
        "beta_start": schedule.beta_start,
        "beta_end": schedule.beta_end,
    }
    return ReadSet(reads=reads, meta=meta)


def embedded_annealing(
    embedded_or_ising,
    schedule: SaSchedule = SaSchedule(),
    num_reads: int = 100,
    seed: Optional[int] = None,
    chains: Optional[tuple[tuple[int, ...], ...]] = None,
    chain_sweep_period: int = 2,
) -> ReadSet:
    """Metropolis anneal mixing single-spin flips with whole-chain flips.

    Single-spin dynamics mix poorly across strongly coupled vertex models,
    so every chain_sweep_period-th sweep also proposes flipping each vertex
    model as one unit (internal couplings cancel in the move energy).
    Chains are grouped by a coloring of the logical graph so uncoupled
    chains update together.
    """
    if isinstance(embedded_or_ising, IsingModel):
        ising = embedded_or_ising
        if chains is None:
            raise ValueError("chains required when sampling a bare Ising model")
    else:
        ising = embedded_or_ising.ising
        if chains is None:
            chains = embedded_or_ising.spin_chains()
    rng = np.random.default_rng(np.random.SeedSequence(seed))
    n = ising.num_spins
    h, W = _model_arrays(ising)
    classes = _greedy_coloring(n, ising.J.keys())
    w_blocks = [W[:, cls].astype(np.float32).tocsc() for cls in classes]
    h_blocks = [h[cls].astype(np.float32) for cls in classes]

    # logical adjacency: chains joined by any physical coupler
    spin_owner = {}
    for li, ch in enumerate(chains):
        for p in ch:
            spin_owner[p] = li
    logical_pairs = set()
    for (i, j) in ising.J.keys():
        a, b = spin_owner.get(i), spin_owner.get(j)
        if a is None or b is None or a == b:
            continue
        logical_pairs.add((min(a, b), max(a, b)))
    chain_classes = _greedy_coloring(len(chains), logical_pairs)

    class_data = []
    for lcls in chain_classes:
        members = [np.array(chains[li], dtype=np.int64) for li in lcls]
        if not members:
            continue
        cols = np.concatenate(members)
        offsets = np.cumsum([0] + [len(m) for m in members])[:-1]
        ii, jj, vv = [], [], []
        seg = []
        for k, li in enumerate(lcls):
            members_set = set(chains[li])
            for (i, j), val in ising.J.items():
                if i in members_set and j in members_set:
                    ii.append(i)
                    jj.append(j)
                    vv.append(val)
                    seg.append(k)
        # indicator summing pair terms into their chain's column
        pair_to_chain = np.zeros((len(ii), len(lcls)), dtype=np.float32)
        for row, k in enumerate(seg):
            pair_to_chain[row, k] = 1.0
        class_data.append(
            (
                cols,
                offsets,
                W[:, cols].astype(np.float32).tocsc(),
                h[cols].astype(np.float32),
                np.array(ii, dtype=np.int64),
                np.array(jj, dtype=np.int64),
                np.array(vv, dtype=np.float32),
                pair_to_chain,
            )
        )

    S = rng.choice(np.array([-1, 1], dtype=np.int8), size=(num_reads, n))
    Sf = S.astype(np.float32)
    for sweep, beta in enumerate(schedule.betas()):
        for cls, wb, hb in zip(classes, w_blocks, h_blocks):
            field = Sf @ wb + hb
            dE = -2.0 * Sf[:, cls] * field
            accept = rng.random(size=dE.shape, dtype=np.float32) < np.exp(
                -beta * np.clip(dE, 0.0, None)
            )
            Sf[:, cls] = np.where(accept, -Sf[:, cls], Sf[:, cls])
        if sweep % chain_sweep_period:
            continue
        for cols, offsets, wb, hb, ii, jj, vv, pair_to_chain in class_data:
            field = Sf @ wb + hb
            per_col = Sf[:, cols] * field
            sums = np.add.reduceat(per_col, offsets, axis=1)
            # internal couplings are invariant under the collective flip but
            # were double counted inside the field sums
            if len(ii):
                internal = (vv * Sf[:, ii] * Sf[:, jj]) @ pair_to_chain
                dE = -2.0 * (sums - 2.0 * internal)
            else:
                dE = -2.0 * sums
            accept = rng.random(size=dE.shape, dtype=np.float32) < np.exp(
                -beta * np.clip(dE, 0.0, None)
            )
            col_accept = np.repeat(accept, np.diff(np.append(offsets, len(cols))), axis=1)
            Sf[:, cols] = np.where(col_accept, -Sf[:, cols], Sf[:, cols])

    S = Sf.astype(np.int8)
    Sd = Sf.astype(np.float64)
    energies = Sd @ h + 0.5 * np.einsum("ij,ij->i", Sd, W.dot(Sd.T).T) + ising.offset
    groups: dict[bytes, list[int]] = {}
    for r in range(num_reads):
        groups.setdefault(S[r].tobytes(), []).append(r)
    reads = []
    for key in sorted(groups):
        idx = groups[key]
        cfg = tuple(int(s) for s in np.frombuffer(key, dtype=np.int8))
        reads.append(ReadRec(config=cfg, energy=float(energies[idx[0]]), multiplicity=len(idx)))
    meta = {
        "sampler": "embedded-annealing",
        "num_reads": num_reads,
        "seed": seed,
        "sweeps": schedule.sweeps,
        "beta_start": schedule.beta_start,
        "beta_end": schedule.beta_end,
    }
    return ReadSet(reads=reads, meta=meta)


MAX_EXHAUSTIVE_SPINS = 24


def all_energies(ising: IsingModel, chunk: int = 1 << 20) -> np.ndarray:
    """Energy of every configuration, indexed by bit pattern (bit i = 1
    means spin i is +1)."""
    n = ising.num_spins
    if n > MAX_EXHAUSTIVE_SPINS:
        raise ValueError(f"exhaustive enumeration limited to {MAX_EXHAUSTIVE_SPINS} spins")
    out = np.empty(1 << n)
    items_h = sorted(ising.h.items())
    items_j = sorted(ising.J.items())
    for lo in range(0, 1 << n, chunk):
        hi = min(lo + chunk, 1 << n)
        ints = np.arange(lo, hi, dtype=np.int64)
        e = np.full(hi - lo, ising.offset)
        spins = {}

        def spin(i):
            if i not in spins:
                spins[i] = 2.0 * ((ints >> i) & 1) - 1.0
            return spins[i]

        for i, v in items_h:
            e += v * spin(i)
        for (i, j), v in items_j:
            e += v * (spin(i) * spin(j))
        out[lo:hi] = e
    return out


def config_from_index(index: int, n: int) -> tuple[int, ...]:
    return tuple(1 if (index >> i) & 1 else -1 for i in range(n))


def exhaustive_ground(ising: IsingModel) -> tuple[float, list[tuple[int, ...]]]:
    """Exact global minimum and every minimizing configuration."""
    e = all_energies(ising)
    emin = float(e.min())
    idx = np.nonzero(e <= emin + 1e-12)[0]
    return emin, [config_from_index(int(i), ising.num_spins) for i in idx]


def run_experiment(
    embedded: EmbeddedIsing,
    num_gauges: int = 100,
    reads_per_gauge: int = 500,
    schedule: SaSchedule = SaSchedule(),
    seed: Optional[int] = None,
    sampler: Optional[Callable[..., ReadSet]] = None,
    gauges: Optional[Sequence[Gauge]] = None,
    label: str = "",
) -> ReadSet:
    """Gauge-averaged sampling pipeline on an embedded model.

    Per gauge: apply the partial gauge, sample, transform reads back, and
    collapse vertex models; chain-broken reads are kept as tagged failures
    so success denominators count every anneal. The returned reads are
    logical-level and in the original frame. Gauges are drawn from the seed
    unless given explicitly. The default sampler is the chain-aware anneal;
    pass simulated_annealing for pure single-flip dynamics.
    """
    ss = np.random.SeedSequence(seed)
    num_logical = embedded.embedding.num_logical
    if gauges is not None and len(gauges) != num_gauges:
        raise ValueError("one gauge per gauge round required")
    agg: dict[tuple, int] = {}
    broken_count = 0
    gauge_seeds = []
    logical = logical_ising(embedded)
    for gi, child in enumerate(ss.spawn(num_gauges)):
        rng = np.random.default_rng(child)
        gauge = gauges[gi] if gauges is not None else random_gauge(num_logical, rng)
        gauged = partial_gauge(embedded, gauge)
        sample_seed = int(rng.integers(0, 2**63 - 1))
        gauge_seeds.append(sample_seed)
        if sampler is None:
            rs = embedded_annealing(
                gauged.ising, schedule, reads_per_gauge, sample_seed, chains=embedded.spin_chains()
            )
        else:
            rs = sampler(gauged.ising, schedule, reads_per_gauge, sample_seed)
        # physical gauge vector aligned with spin order
        phys_a = [1] * embedded.num_physical
        for i, ch in enumerate(embedded.spin_chains()):
            for p in ch:
                phys_a[p] = gauge.a[i]
        phys_gauge = Gauge(a=tuple(phys_a))
        for rec in rs.reads:
            cfg = ungauge_read(rec.config, phys_gauge)
            res = unembed_read(cfg, embedded)
            if res.ok:
                agg[res.logical] = agg.get(res.logical, 0) + rec.multiplicity
            else:
                broken_count += rec.multiplicity
    reads = [
        ReadRec(config=cfg, energy=float(logical.energy(cfg)), multiplicity=mult)
        for cfg, mult in sorted(agg.items())
    ]
    if broken_count:
        reads.append(ReadRec(config=None, energy=None, multiplicity=broken_count, tag=READ_CHAIN_BREAK))
    meta = {
        "instance": label,
        "sampler": "gauge-averaged",
        "num_gauges": num_gauges,
        "reads_per_gauge": reads_per_gauge,
        "total_reads": num_gauges * reads_per_gauge,
        "seed": seed,
        "gauge_sample_seeds": gauge_seeds,
        "j_ferro": embedded.j_ferro,
        "sweeps": schedule.sweeps,
        "beta_start": schedule.beta_start,
        "beta_end": schedule.beta_end,
    }
    return ReadSet(reads=reads, meta=meta)


def save_readset(readset: ReadSet, path) -> None:
    """Gzipped JSON lines: a meta header line, then one read per line."""
    import gzip
    import json

    with gzip.open(path, "wt") as fh:
        fh.write(json.dumps({"meta": readset.meta}, sort_keys=True) + "\n")
        for r in readset.reads:
            fh.write(
                json.dumps(
                    {
                        "config": list(r.config) if r.config is not None else None,
                        "energy": r.energy,
                        "multiplicity": r.multiplicity,
                        "tag": r.tag,
                    },
                    sort_keys=True,
                )
                + "\n"
            )


def load_readset(path) -> ReadSet:
    import gzip
    import json

    with gzip.open(path, "rt") as fh:
        header = json.loads(fh.readline())
        reads = []
        for line in fh:
            obj = json.loads(line)
            reads.append(
                ReadRec(
                    config=tuple(obj["config"]) if obj["config"] is not None else None,
                    energy=obj["energy"],
                    multiplicity=int(obj["multiplicity"]),
                    tag=obj.get("tag", READ_OK),
                )
            )
    return ReadSet(reads=reads, meta=header.get("meta", {}))


def logical_ising(embedded: EmbeddedIsing) -> IsingModel:
    """Logical-frame model reconstructed from the embedded coefficients."""
    h = {i: v for i, v in enumerate(embedded.logical_h) if v != 0.0}
    J = {}
    for (edge, coupler) in embedded.logical_edge_couplers:
        J[edge] = embedded.ising.J[coupler]
    return IsingModel(
        num_spins=embedded.embedding.num_logical, h=h, J=J, offset=embedded.ising.offset
    )


def chain_broken_mask(embedded: EmbeddedIsing) -> np.ndarray:
    """Boolean per configuration index: any vertex model misaligned."""
    n = embedded.num_physical
    if n > MAX_EXHAUSTIVE_SPINS:
        raise ValueError("mask enumeration limited to 24 qubits")
    idx = np.arange(1 << n, dtype=np.int64)
    broken = np.zeros(1 << n, dtype=bool)
    for ch in embedded.spin_chains():
        if len(ch) < 2:
            continue
        first = (idx >> ch[0]) & 1
        for p in ch[1:]:
            broken |= ((idx >> p) & 1) != first
    return broken


def low_energy_census(
    embedded: EmbeddedIsing,
    energy_window: float,
    method: str = "exhaustive",
    schedule: SaSchedule = SaSchedule(),
    num_reads: int = 2000,
    seed: Optional[int] = None,
) -> float:
    """Fraction of chain-broken states among states within energy_window of
    the ground energy.

    The exhaustive method counts distinct configurations exactly; the
    sampled method counts distinct sampled configurations and is only as
    good as the sampler's coverage.
    """
    if method == "exhaustive":
        e = all_energies(embedded.ising)
        broken = chain_broken_mask(embedded)
        sel = e <= e.min() + energy_window + 1e-12
        return float(broken[sel].sum() / sel.sum())
    if method == "sa":
        rs = simulated_annealing(embedded.ising, schedule, num_reads, seed)
        ok = rs.ok_reads()
        emin = min(r.energy for r in ok)
        within = [r for r in ok if r.energy <= emin + energy_window + 1e-12]
        n_broken = 0
        for r in within:
            if not unembed_read(r.config, embedded).ok:
                n_broken += 1
        return n_broken / len(within)
    raise ValueError(f"unknown census method {method!r}")
