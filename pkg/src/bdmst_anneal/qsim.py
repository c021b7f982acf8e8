"""Small-system simulation of the anneal.

The instantaneous Hamiltonian is H(s) = A(s) * (-sum_i X_i) + B(s) * H_C,
where H_C is the diagonal classical cost of the embedded model (problem
couplers plus chain couplers at -|J_F|). This module computes low-lying
spectra along s, chain-aligned (logical) subspace weights, first-order
responses to weakening the chain strength, and a detailed-balance rate
model for thermal relaxation during a pause.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass
from typing import Optional, Sequence

import numpy as np
from scipy.linalg import eigh, expm
from scipy.sparse import csr_matrix
from scipy.sparse.linalg import eigsh

from .embedding import EmbeddedIsing
from .samplers import all_energies, chain_broken_mask

MAX_QSIM_QUBITS = 14
DENSE_DIM = 1024


@dataclass(frozen=True)
class AnnealSchedule:
    """Piecewise-linear anneal path with an optional mid-anneal hold.

    s ramps 0 -> s_p in s_p * t_a, holds for t_p, then ramps to 1; the
    envelope functions A(s), B(s) default to 1 - s and s and can be
    replaced by tabulated curves with linear interpolation.
    """

    t_a: float = 1.0
    s_p: Optional[float] = None
    t_p: float = 0.0
    table_s: tuple[float, ...] = (0.0, 1.0)
    table_a: tuple[float, ...] = (1.0, 0.0)
    table_b: tuple[float, ...] = (0.0, 1.0)

    def __post_init__(self):
        if self.t_a <= 0:
            raise ValueError("anneal time must be positive")
        if (self.s_p is None) != (self.t_p == 0.0) and self.s_p is None:
            raise ValueError("pause duration without a pause location")
        if self.s_p is not None and not (0.0 < self.s_p < 1.0):
            raise ValueError("pause location must lie inside (0, 1)")
        if self.t_p < 0:
            raise ValueError("pause duration must be >= 0")
        if not (len(self.table_s) == len(self.table_a) == len(self.table_b)):
            raise ValueError("schedule table columns must align")
        if list(self.table_s) != sorted(self.table_s):
            raise ValueError("schedule table must be sorted in s")
        if any(a2 > a1 + 1e-12 for a1, a2 in zip(self.table_a, self.table_a[1:])):
            raise ValueError("A(s) must be non-increasing")
        if any(b2 < b1 - 1e-12 for b1, b2 in zip(self.table_b, self.table_b[1:])):
            raise ValueError("B(s) must be non-decreasing")

    @property
    def t_tot(self) -> float:
        return self.t_a + self.t_p

    def a_of(self, s: float) -> float:
        return float(np.interp(s, self.table_s, self.table_a))

    def b_of(self, s: float) -> float:
        return float(np.interp(s, self.table_s, self.table_b))

    def s_of_t(self, t: float) -> float:
        if t <= 0:
            return 0.0
        if self.s_p is None or self.t_p == 0.0:
            return min(t / self.t_a, 1.0)
        t_ramp1 = self.s_p * self.t_a
        if t <= t_ramp1:
            return t / self.t_a
        if t <= t_ramp1 + self.t_p:
            return self.s_p
        return min(self.s_p + (t - t_ramp1 - self.t_p) / self.t_a, 1.0)

    @staticmethod
    def from_csv(path, t_a: float = 1.0, s_p: Optional[float] = None, t_p: float = 0.0) -> "AnnealSchedule":
        """Load tabulated envelopes from a CSV with columns s, A, B."""
        ss, aa, bb = [], [], []
        with open(path) as fh:
            for row in csv.DictReader(fh):
                ss.append(float(row["s"]))
                aa.append(float(row["A"]))
                bb.append(float(row["B"]))
        return AnnealSchedule(
            t_a=t_a, s_p=s_p, t_p=t_p, table_s=tuple(ss), table_a=tuple(aa), table_b=tuple(bb)
        )


def hamiltonian_at(embedded: EmbeddedIsing, schedule: AnnealSchedule, s: float) -> csr_matrix:
    """Sparse H(s) over the computational basis (bit i = 1 means spin +1)."""
    n = embedded.num_physical
    if n > MAX_QSIM_QUBITS:
        raise ValueError(f"quantum simulation limited to {MAX_QSIM_QUBITS} qubits")
    dim = 1 << n
    diag = schedule.b_of(s) * all_energies(embedded.ising)
    a = schedule.a_of(s)
    rows = [np.arange(dim)]
    cols = [np.arange(dim)]
    vals = [diag]
    idx = np.arange(dim)
    for b in range(n):
        rows.append(idx)
        cols.append(idx ^ (1 << b))
        vals.append(np.full(dim, -a))
    return csr_matrix(
        (np.concatenate(vals), (np.concatenate(rows), np.concatenate(cols))), shape=(dim, dim)
    )


def lowest_eigs(H, k: int, residual_tol: float = 1e-8):
    """k smallest eigenpairs, ascending; dense path below DENSE_DIM."""
    dim = H.shape[0]
    k = min(k, dim)
    if dim <= DENSE_DIM or k >= dim - 1:
        w, v = eigh(H.toarray() if hasattr(H, "toarray") else H)
        w, v = w[:k], v[:, :k]
    else:
        w, v = eigsh(H, k=k, which="SA")
        order = np.argsort(w)
        w, v = w[order], v[:, order]
    for i in range(len(w)):
        r = np.linalg.norm(H @ v[:, i] - w[i] * v[:, i])
        if r > residual_tol:
            raise RuntimeError(f"eigenpair {i} residual {r:.2e} above {residual_tol:.0e}")
    return w, v


def aligned_mask(embedded: EmbeddedIsing) -> np.ndarray:
    """True for basis states whose vertex models all agree."""
    return ~chain_broken_mask(embedded)


def logical_probability(vec: np.ndarray, mask: np.ndarray) -> float:
    """Weight of a normalized state on the chain-aligned basis states."""
    return float(np.sum(np.abs(vec[mask]) ** 2))


def chain_parity_expectation(vec: np.ndarray, embedded: EmbeddedIsing) -> float:
    """Expectation of the summed chain-edge ZZ parity; for an embedding
    with a single length-2 chain this equals 2 * P_logical - 1."""
    n = embedded.num_physical
    dim = len(vec)
    idx = np.arange(dim)
    total = np.zeros(dim)
    for (p, q) in sorted(embedded.chain_edges):
        zp = 2.0 * ((idx >> p) & 1) - 1.0
        zq = 2.0 * ((idx >> q) & 1) - 1.0
        total += zp * zq
    return float(np.sum(np.abs(vec) ** 2 * total))


@dataclass
class SpectrumTrace:
    """Low-lying spectrum along the anneal for one chain strength."""

    s_grid: np.ndarray
    energies: np.ndarray  # (len(s_grid), k)
    gap: np.ndarray
    p_logical: np.ndarray  # (len(s_grid), k)
    j_ferro: float

    @property
    def s_star(self) -> float:
        return float(self.s_grid[int(np.argmin(self.gap))])

    @property
    def gap_min(self) -> float:
        return float(self.gap.min())

    def to_csv(self, path) -> None:
        k = self.energies.shape[1]
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["s"] + [f"E{i}" for i in range(k)] + ["gap", "PL0", "PL1", "j_ferro"])
            for i, s in enumerate(self.s_grid):
                w.writerow(
                    [f"{s:.10g}"]
                    + [f"{e:.12g}" for e in self.energies[i]]
                    + [
                        f"{self.gap[i]:.12g}",
                        f"{self.p_logical[i, 0]:.12g}",
                        f"{self.p_logical[i, 1]:.12g}" if k > 1 else "",
                        f"{self.j_ferro:.10g}",
                    ]
                )


def spectrum_trace(
    embedded: EmbeddedIsing,
    schedule: AnnealSchedule,
    s_grid: Sequence[float],
    k: int = 4,
) -> SpectrumTrace:
    s_grid = np.asarray(list(s_grid), dtype=float)
    if np.any(s_grid <= 0.0) or np.any(s_grid >= 1.0):
        raise ValueError("trace grid must lie strictly inside (0, 1)")
    mask = aligned_mask(embedded)
    energies = np.zeros((len(s_grid), k))
    p_log = np.zeros((len(s_grid), k))
    for i, s in enumerate(s_grid):
        w, v = lowest_eigs(hamiltonian_at(embedded, schedule, s), k)
        energies[i] = w
        for lvl in range(k):
            p_log[i, lvl] = logical_probability(v[:, lvl], mask)
    gap = energies[:, 1] - energies[:, 0]
    return SpectrumTrace(
        s_grid=s_grid, energies=energies, gap=gap, p_logical=p_log, j_ferro=embedded.j_ferro
    )


def gap_trace(
    embedded: EmbeddedIsing,
    j_ferro_list: Sequence[float],
    s_grid: Sequence[float],
    k: int = 4,
    schedule: AnnealSchedule = AnnealSchedule(),
) -> list[SpectrumTrace]:
    """One spectrum trace per chain strength, same embedding throughout."""
    return [
        spectrum_trace(embedded.with_j_ferro(jf), schedule, s_grid, k) for jf in j_ferro_list
    ]


def perturbation_gap_shift(trace: SpectrumTrace, lam: float, schedule: AnnealSchedule = AnnealSchedule()) -> np.ndarray:
    """First-order gap prediction when the chain strength drops by lam.

    gap'(s) = gap(s) + 2 * B(s) * lam * (PL1(s) - PL0(s)); valid for small
    lam away from degeneracies.
    """
    if lam < 0:
        raise ValueError("lam must be >= 0")
    b = np.array([schedule.b_of(s) for s in trace.s_grid])
    return trace.gap + 2.0 * b * lam * (trace.p_logical[:, 1] - trace.p_logical[:, 0])


@dataclass(frozen=True)
class LevelShift:
    level: int
    energy: float
    predicted: float
    exact: float
    p_logical: float
    near_degenerate: bool


def energy_shift_check(
    embedded: EmbeddedIsing,
    s: float,
    lam: float,
    k: int = 4,
    schedule: AnnealSchedule = AnnealSchedule(),
    degeneracy_tol: float = 1e-6,
) -> list[LevelShift]:
    """First-order level shifts E_i + B * lam * (2 P_L - 1) against exact
    eigenvalues at chain strength |J_F| - lam.

    Levels closer than degeneracy_tol to a neighbour are flagged; the
    first-order formula does not apply to them.
    """
    mask = aligned_mask(embedded)
    w0, v0 = lowest_eigs(hamiltonian_at(embedded, schedule, s), k + 1)
    weaker = embedded.with_j_ferro(embedded.j_ferro - lam)
    w1, _ = lowest_eigs(hamiltonian_at(weaker, schedule, s), k)
    b = schedule.b_of(s)
    out = []
    for i in range(k):
        pl = logical_probability(v0[:, i], mask)
        near = (i > 0 and abs(w0[i] - w0[i - 1]) < degeneracy_tol) or (
            abs(w0[i + 1] - w0[i]) < degeneracy_tol
        )
        out.append(
            LevelShift(
                level=i,
                energy=float(w0[i]),
                predicted=float(w0[i] + b * lam * (2.0 * pl - 1.0)),
                exact=float(w1[i]),
                p_logical=pl,
                near_degenerate=near,
            )
        )
    return out


@dataclass
class PauseResult:
    s_path: np.ndarray
    times: np.ndarray
    populations: np.ndarray  # (steps, k)
    p_ground_final: float
    leakage: float
    pause_index: Optional[int]  # step index at the end of the hold


def _coupling_weights(vecs: np.ndarray, num_qubits: int) -> np.ndarray:
    """Bath-coupling weight between eigenstates, summed over qubits:
    w_ij = sum_q |<E_i| Z_q |E_j>|^2.

    Z-coupled baths cannot flip classical product states, so these weights
    vanish as the transverse field dies out and the late anneal freezes;
    the weight matrix is symmetric, which keeps detailed balance intact.
    """
    dim, k = vecs.shape
    idx = np.arange(dim)
    w = np.zeros((k, k))
    for q in range(num_qubits):
        z = 2.0 * ((idx >> q) & 1) - 1.0
        m = vecs.T @ (z[:, None] * vecs)
        w += m**2
    np.fill_diagonal(w, 0.0)
    return w


def _rate_matrix(
    energies: np.ndarray,
    temperature: float,
    gamma0: float,
    weights: Optional[np.ndarray] = None,
) -> np.ndarray:
    """Detailed-balance generator over the tracked levels: Metropolis
    acceptance times the bath-coupling weight (uniform if not given)."""
    k = len(energies)
    R = np.zeros((k, k))
    for i in range(k):
        for j in range(k):
            if i == j:
                continue
            de = energies[j] - energies[i]
            w = 1.0 if weights is None else weights[i, j]
            R[j, i] = gamma0 * w * min(1.0, np.exp(-de / temperature))
    R -= np.diag(R.sum(axis=0))
    return R


def gibbs_populations(energies: np.ndarray, temperature: float) -> np.ndarray:
    w = np.exp(-(energies - energies.min()) / temperature)
    return w / w.sum()


def relax_at(
    embedded: EmbeddedIsing,
    s: float,
    temperature: float,
    gamma0: float,
    hold_time: float,
    initial: np.ndarray,
    k: int = 8,
    schedule: AnnealSchedule = AnnealSchedule(),
) -> tuple[np.ndarray, np.ndarray]:
    """Populations after holding at fixed s for hold_time.

    Returns (energies, populations); the generator's stationary point is
    the Gibbs distribution over the tracked levels.
    """
    w, v = lowest_eigs(hamiltonian_at(embedded, schedule, s), k)
    R = _rate_matrix(w, temperature, gamma0, _coupling_weights(v, embedded.num_physical))
    pops = expm(R * hold_time) @ np.asarray(initial, dtype=float)
    return w, pops


def pause_relax_evolve(
    embedded: EmbeddedIsing,
    schedule: AnnealSchedule,
    temperature: float,
    gamma0: float,
    k: int = 8,
    ramp_steps: int = 120,
    initial: Optional[np.ndarray] = None,
    min_step_overlap: float = 0.99,
) -> PauseResult:
    """Thermal relaxation over the k lowest instantaneous levels.

    Populations ride the instantaneous eigenbasis (re-expressed through the
    squared-overlap matrix at every grid step, which must retain at least
    min_step_overlap of the tracked weight) and relax under Metropolis
    rates between levels; the hold at s_p applies the same generator for
    t_p in one exact exponential step. Coherent transitions are not
    modelled. With a long hold the populations converge to the Gibbs state
    at s_p.
    """
    if temperature <= 0 or gamma0 < 0:
        raise ValueError("need temperature > 0 and gamma0 >= 0")
    dim = 1 << embedded.num_physical
    k = min(k, dim - 1)

    # time grid: uniform in s over the ramps, one exact segment for the hold
    if schedule.s_p is not None and schedule.t_p > 0:
        s1 = np.linspace(0.0, schedule.s_p, max(2, int(ramp_steps * schedule.s_p)))
        s2 = np.linspace(schedule.s_p, 1.0, max(2, int(ramp_steps * (1 - schedule.s_p))))
        s_path = np.concatenate([s1, s2])
        pause_after = len(s1) - 1
    else:
        s_path = np.linspace(0.0, 1.0, ramp_steps)
        pause_after = None

    w_prev = v_prev = None
    pops = None
    traj = []
    tlist = []
    t_now = 0.0
    leakage = 0.0
    pause_index = None
    for step, s in enumerate(s_path):
        w, v = lowest_eigs(hamiltonian_at(embedded, schedule, float(s)), k)
        if pops is None:
            if initial is not None:
                pops = np.asarray(initial, dtype=float).copy()
                if len(pops) != k or abs(pops.sum() - 1.0) > 1e-9:
                    raise ValueError("initial populations must be length k and sum to 1")
            else:
                pops = np.zeros(k)
                pops[0] = 1.0  # anneal starts in the driver ground state
        else:
            overlap = np.abs(v_prev.conj().T @ v) ** 2  # (k_old, k_new)
            retained = overlap.sum(axis=1)
            # per-level retention is only meaningful away from degeneracies,
            # where basis vectors inside a multiplet rotate arbitrarily;
            # population transport through the full overlap matrix is fine
            isolated = np.ones(k, dtype=bool)
            isolated[k - 1] = False  # may be degenerate with untracked levels
            close = 0.02 * (w_prev[-1] - w_prev[0]) + 1e-12
            for i in range(1, k):
                if w_prev[i] - w_prev[i - 1] < close:
                    isolated[i] = isolated[i - 1] = False
            if isolated.any() and np.any(retained[isolated] < min_step_overlap):
                raise RuntimeError(
                    f"eigenbasis overlap {retained[isolated].min():.3f} below "
                    f"{min_step_overlap} at s={s:.4f}; refine the grid or track more levels"
                )
            new_pops = overlap.T @ pops
            step_leak = float(pops.sum() - new_pops.sum())
            if step_leak > 0.05:
                raise RuntimeError(
                    f"population leakage {step_leak:.3f} in one step at s={s:.4f}; "
                    "track more levels"
                )
            leakage += step_leak
            pops = new_pops / new_pops.sum()
            dt = (s - s_path[step - 1]) * schedule.t_a
            if dt > 0 and gamma0 > 0:
                R = _rate_matrix(w, temperature, gamma0, _coupling_weights(v, embedded.num_physical))
                pops = expm(R * dt) @ pops
            t_now += dt
        if pause_after is not None and step == pause_after and schedule.t_p > 0:
            R = _rate_matrix(w, temperature, gamma0, _coupling_weights(v, embedded.num_physical))
            pops = expm(R * schedule.t_p) @ pops
            t_now += schedule.t_p
            pause_index = len(traj)
        pops = np.clip(pops, 0.0, None)
        pops /= pops.sum()
        traj.append(pops.copy())
        tlist.append(t_now)
        w_prev, v_prev = w, v

    return PauseResult(
        s_path=s_path,
        times=np.array(tlist),
        populations=np.array(traj),
        p_ground_final=float(traj[-1][0]),
        leakage=abs(leakage),
        pause_index=pause_index,
    )
