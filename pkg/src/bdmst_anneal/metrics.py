"""Success and time-to-solution metrics with bootstrap ensemble statistics.

Infinities are first-class values here: an unsolved instance has infinite
time-to-solution, propagates through the improvement metrics under fixed
conventions, and is serialized as the strings "inf"/"-inf" so file
round-trips cannot corrupt percentile computations.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional, Sequence

import numpy as np

from .instances import ProblemInstance, solve_bdmst_exact
from .qubo import Qubo, build_qubo, decode
from .samplers import READ_OK, ReadSet


def tts(p_success: float, t_tot: float) -> float:
    """Expected time to observe the optimum with 99% confidence:
    log(1 - 0.99) / log(1 - p) * t_tot.

    p = 0 gives +inf; p = 1 collapses to a single run of length t_tot.
    """
    if not (0.0 <= p_success <= 1.0):
        raise ValueError("success probability outside [0, 1]")
    if t_tot <= 0:
        raise ValueError("total time must be positive")
    if p_success == 0.0:
        return math.inf
    if p_success == 1.0:
        return t_tot
    return math.log(1.0 - 0.99) / math.log(1.0 - p_success) * t_tot


@dataclass(frozen=True)
class DeltaTts:
    delta: float
    ratio: float


def delta_tts(tts_nopause: float, tts_pause: float) -> DeltaTts:
    """Instance-wise improvement of the pause schedule over the baseline.

    Both infinite: no improvement, delta 0. Only the baseline infinite:
    maximal improvement, delta +inf with ratio 1. Only the pause infinite:
    delta -inf with ratio -inf. Otherwise the plain difference and its
    ratio to the baseline.
    """
    np_inf = math.isinf(tts_nopause)
    p_inf = math.isinf(tts_pause)
    if np_inf and p_inf:
        return DeltaTts(delta=0.0, ratio=0.0)
    if np_inf:
        return DeltaTts(delta=math.inf, ratio=1.0)
    if p_inf:
        return DeltaTts(delta=-math.inf, ratio=-math.inf)
    d = tts_nopause - tts_pause
    return DeltaTts(delta=d, ratio=d / tts_nopause)


def p_success(
    readset: ReadSet,
    oracle_cost: int,
    instance: ProblemInstance,
    qubo: Optional[Qubo] = None,
) -> float:
    """Fraction of all reads (failed ones included) that decode to a valid
    bounded-degree spanning tree of exactly the optimal cost.

    Logical reads with QUBO energy above the optimum cannot be optimal
    trees (a valid tree's energy is its cost), so only energy-matching
    reads are decoded and certified.
    """
    total = readset.total_reads
    if total == 0:
        raise ValueError("empty read set")
    if qubo is None:
        meta = readset.meta
        qubo = build_qubo(
            instance,
            preprocess=meta.get("preprocess", True),
            epsilon=meta.get("epsilon", 0),
        )
    hits = 0
    for rec in readset.reads:
        if rec.tag != READ_OK:
            continue
        bits = [(s + 1) // 2 for s in rec.config]
        energy = qubo.energy(bits)
        if energy != oracle_cost:
            continue
        dec = decode(bits, qubo)
        if dec.is_tree and dec.tree.cost == oracle_cost:
            hits += rec.multiplicity
    return hits / total


@dataclass(frozen=True)
class RunResult:
    """One (instance, schedule point) outcome."""

    instance: str
    t_a: float
    s_p: Optional[float]
    t_p: float
    j_ferro: float
    gauges: int
    reads: int
    p_success: float
    t_tot: float
    tts: float

    @staticmethod
    def build(instance, t_a, s_p, t_p, j_ferro, gauges, reads, p) -> "RunResult":
        t_tot = t_a + t_p
        return RunResult(
            instance=instance,
            t_a=t_a,
            s_p=s_p,
            t_p=t_p,
            j_ferro=j_ferro,
            gauges=gauges,
            reads=reads,
            p_success=p,
            t_tot=t_tot,
            tts=tts(p, t_tot),
        )


def fmt_extended(x: float) -> str:
    """Extended-real to text: inf and -inf spelled out, floats via repr."""
    if math.isinf(x):
        return "inf" if x > 0 else "-inf"
    return repr(float(x))


def parse_extended(s: str) -> float:
    if s == "inf":
        return math.inf
    if s == "-inf":
        return -math.inf
    return float(s)


@dataclass(frozen=True)
class EnsembleSummary:
    metric: str
    median: float
    p35: float
    p65: float
    num_bootstrap: int
    seed: Optional[int]


def _median_with_inf(a: np.ndarray) -> np.ndarray:
    """Row-wise median; infinities sort to the ends as usual.

    An even-length sample whose two middle entries are opposite infinities
    has an indeterminate midpoint; it is pinned to 0, matching the
    both-infinite improvement convention."""
    with np.errstate(invalid="ignore"):
        med = np.median(a, axis=-1)
    return np.nan_to_num(med, nan=0.0, posinf=np.inf, neginf=-np.inf)


def bootstrap_percentiles(
    values: Sequence[float],
    num_bootstrap: int = 100_000,
    seed: Optional[int] = None,
    percentiles: tuple[float, float, float] = (35.0, 50.0, 65.0),
    metric: str = "",
    batch: int = 4096,
) -> EnsembleSummary:
    """Percentiles of the bootstrap distribution of the ensemble median.

    Resamples are drawn with replacement at the original ensemble size;
    +-inf entries stay in the ensemble and rank at the extremes. The
    percentile rule is linear interpolation on the sorted statistics.
    """
    vals = np.asarray(list(values), dtype=float)
    if vals.size == 0:
        raise ValueError("empty ensemble")
    rng = np.random.default_rng(np.random.SeedSequence(seed))
    n = vals.size
    stats = np.empty(num_bootstrap)
    done = 0
    while done < num_bootstrap:
        m = min(batch, num_bootstrap - done)
        idx = rng.integers(0, n, size=(m, n))
        stats[done : done + m] = _median_with_inf(vals[idx])
        done += m
    finite = stats[np.isfinite(stats)]
    lo, mid, hi = percentiles
    if finite.size == stats.size:
        p35, p50, p65 = np.percentile(stats, [lo, mid, hi])
    else:
        # rank with infinities pinned at the extremes, interpolate on ranks
        order = np.sort(stats)  # numpy sorts -inf first, +inf last

        def pct(q: float) -> float:
            pos = (q / 100.0) * (len(order) - 1)
            lo_i = int(math.floor(pos))
            hi_i = int(math.ceil(pos))
            if order[lo_i] == order[hi_i] or math.isinf(order[lo_i]) or math.isinf(order[hi_i]):
                return float(order[lo_i]) if pos - lo_i < 0.5 else float(order[hi_i])
            return float(order[lo_i] + (pos - lo_i) * (order[hi_i] - order[lo_i]))

        p35, p50, p65 = pct(lo), pct(mid), pct(hi)
    return EnsembleSummary(
        metric=metric,
        median=float(p50),
        p35=float(p35),
        p65=float(p65),
        num_bootstrap=num_bootstrap,
        seed=seed,
    )


def median_of_differences(nopause: Sequence[float], pause: Sequence[float]) -> float:
    """Median over instances of the per-instance TTS improvement."""
    ds = [delta_tts(a, b).delta for a, b in zip(nopause, pause)]
    return float(_median_with_inf(np.asarray(ds, dtype=float)))


def difference_of_medians(nopause: Sequence[float], pause: Sequence[float]) -> float:
    """Median TTS of the baseline minus median TTS of the pause schedule;
    generally NOT the same number as median_of_differences."""
    a = float(_median_with_inf(np.asarray(list(nopause), dtype=float)))
    b = float(_median_with_inf(np.asarray(list(pause), dtype=float)))
    if math.isinf(a) and math.isinf(b):
        return 0.0
    return a - b
