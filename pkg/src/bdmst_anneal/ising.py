"""Ising form of the compiled problems: QUBO conversion, range scaling and
gauge (spin reversal) transformations.

Spin convention, fixed package-wide: bit 1 maps to spin +1, i.e.
x = (1 + sigma) / 2.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable, Optional, Sequence

import numpy as np

from .qubo import Qubo


@dataclass
class IsingModel:
    """E(sigma) = sum_i h_i sigma_i + sum_{i<j} J_ij sigma_i sigma_j + offset."""

    num_spins: int
    h: dict[int, float]
    J: dict[tuple[int, int], float]
    offset: float = 0.0

    def __post_init__(self):
        for (i, j) in self.J:
            if i == j:
                raise ValueError("coupling endpoints must differ")
            if i > j:
                raise ValueError("coupling keys must be ordered (i < j)")

    def energy(self, spins: Sequence[int]) -> float:
        e = self.offset
        for i, hi in self.h.items():
            e += hi * spins[i]
        for (i, j), jij in self.J.items():
            e += jij * spins[i] * spins[j]
        return e

    def max_abs_coefficient(self) -> float:
        vals = [abs(v) for v in self.h.values()] + [abs(v) for v in self.J.values()]
        return max(vals) if vals else 0.0

    def coupling_graph_edges(self) -> list[tuple[int, int]]:
        return sorted(self.J.keys())


def qubo_to_ising(qubo: Qubo) -> IsingModel:
    """Substitute x = (1 + sigma)/2; energies agree pointwise by construction."""
    n = qubo.num_vars
    h = {i: 0.0 for i in range(n)}
    J: dict[tuple[int, int], float] = {}
    offset = float(qubo.offset)
    for i, c in qubo.linear.items():
        h[i] += c / 2.0
        offset += c / 2.0
    for (i, j), c in qubo.quadratic.items():
        J[(i, j)] = J.get((i, j), 0.0) + c / 4.0
        h[i] += c / 4.0
        h[j] += c / 4.0
        offset += c / 4.0
    h = {i: v for i, v in h.items() if v != 0.0}
    J = {k: v for k, v in J.items() if v != 0.0}
    return IsingModel(num_spins=n, h=h, J=J, offset=offset)


def spins_to_bits(spins: Sequence[int]) -> list[int]:
    return [(s + 1) // 2 for s in spins]


def bits_to_spins(bits: Sequence[int]) -> list[int]:
    return [2 * b - 1 for b in bits]


def scale_to_range(ising: IsingModel, j_max: float = 1.0) -> tuple[IsingModel, float]:
    """Uniformly rescale so max(|h|, |J|) equals j_max.

    Returns (scaled model, scale factor c); original energies are scaled
    energies divided by c, and the argmin set is unchanged.
    """
    top = ising.max_abs_coefficient()
    if top == 0.0:
        raise ValueError("cannot scale an all-zero model")
    c = j_max / top
    return (
        IsingModel(
            num_spins=ising.num_spins,
            h={i: v * c for i, v in ising.h.items()},
            J={k: v * c for k, v in ising.J.items()},
            offset=ising.offset * c,
        ),
        c,
    )


@dataclass(frozen=True)
class Gauge:
    """Per-spin signs a_i in {-1, +1} defining a spin reversal transform."""

    a: tuple[int, ...]
    seed: Optional[int] = None

    def __post_init__(self):
        if any(s not in (-1, 1) for s in self.a):
            raise ValueError("gauge entries must be +1 or -1")

    def __len__(self):
        return len(self.a)

    @staticmethod
    def identity(n: int) -> "Gauge":
        return Gauge(a=(1,) * n)

    def to_json(self) -> dict:
        return {"a": list(self.a), "seed": self.seed}

    @staticmethod
    def from_json(obj: dict) -> "Gauge":
        return Gauge(a=tuple(int(s) for s in obj["a"]), seed=obj.get("seed"))


def random_gauge(n: int, rng: np.random.Generator, seed: Optional[int] = None) -> Gauge:
    return Gauge(a=tuple(int(s) for s in rng.choice((-1, 1), size=n)), seed=seed)


def gauge_transform(ising: IsingModel, gauge: Gauge) -> IsingModel:
    """h_i -> a_i h_i, J_ij -> a_i a_j J_ij; the spectrum is unchanged under
    the relabeling sigma_i -> a_i sigma_i."""
    if len(gauge) != ising.num_spins:
        raise ValueError(f"gauge covers {len(gauge)} spins, model has {ising.num_spins}")
    a = gauge.a
    return IsingModel(
        num_spins=ising.num_spins,
        h={i: a[i] * v for i, v in ising.h.items()},
        J={(i, j): a[i] * a[j] * v for (i, j), v in ising.J.items()},
        offset=ising.offset,
    )


def ungauge_read(config: Sequence[int], gauge: Gauge) -> tuple[int, ...]:
    """Map a read back to the original frame; applying twice is the identity."""
    if len(gauge) != len(config):
        raise ValueError("gauge/config length mismatch")
    return tuple(int(a * s) for a, s in zip(gauge.a, config))


def ising_to_coo(ising: IsingModel) -> str:
    """Same coordinate layout as the QUBO export: `i j coeff` per line with
    i == j carrying the local field."""
    lines = [f"# offset {ising.offset!r}", f"# num_spins {ising.num_spins}"]
    for i in sorted(ising.h):
        lines.append(f"{i} {i} {ising.h[i]!r}")
    for (i, j) in sorted(ising.J):
        lines.append(f"{i} {j} {ising.J[(i, j)]!r}")
    return "\n".join(lines) + "\n"


def ising_from_coo(text: str) -> IsingModel:
    h: dict[int, float] = {}
    J: dict[tuple[int, int], float] = {}
    offset = 0.0
    num_spins = 0
    for line in text.splitlines():
        line = line.strip()
        if not line:
            continue
        if line.startswith("#"):
            parts = line[1:].split()
            if parts[:1] == ["offset"]:
                offset = float(parts[1])
            elif parts[:1] == ["num_spins"]:
                num_spins = int(parts[1])
            continue
        i, j, c = line.split()
        i, j = int(i), int(j)
        if i == j:
            h[i] = float(c)
        else:
            J[(min(i, j), max(i, j))] = float(c)
    highest = max([i for i in h] + [k for pair in J for k in pair], default=-1)
    return IsingModel(
        num_spins=max(num_spins, highest + 1), h=h, J=J, offset=offset
    )
