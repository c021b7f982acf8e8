import itertools

import numpy as np
import pytest

from bdmst_anneal.embedding import (
    Embedding,
    embed_ising,
    partial_gauge,
)
from bdmst_anneal.hardware import chimera_graph
from bdmst_anneal.ising import (
    Gauge,
    IsingModel,
    bits_to_spins,
    gauge_transform,
    qubo_to_ising,
    random_gauge,
    scale_to_range,
    spins_to_bits,
    ungauge_read,
)
from bdmst_anneal.instances import make_instance
from bdmst_anneal.qubo import Qubo, VarRegistry, VarId, build_qubo


def tiny_qubo(linear, quadratic, offset=0):
    n = 1 + max(
        [i for i in linear] + [k for pair in quadratic for k in pair], default=-1
    )
    reg = VarRegistry([VarId("x", (i,)) for i in range(n)])
    inst = make_instance("m4ver1", "w2", 2)
    return Qubo(
        num_vars=n,
        linear=dict(linear),
        quadratic=dict(quadratic),
        offset=offset,
        penalty_weight=1,
        registry=reg,
        instance=inst,
    )


def test_single_linear_term():
    m = qubo_to_ising(tiny_qubo({0: 1}, {}))
    assert m.h == {0: 0.5} and m.offset == 0.5 and not m.J


def test_single_quadratic_term():
    m = qubo_to_ising(tiny_qubo({}, {(0, 1): 1}))
    assert m.J == {(0, 1): 0.25}
    assert m.h == {0: 0.25, 1: 0.25}
    assert m.offset == 0.25


def test_pointwise_energy_equality_exhaustive():
    rng = np.random.default_rng(1)
    linear = {i: int(rng.integers(-5, 6)) for i in range(8)}
    quadratic = {
        (i, j): int(rng.integers(-4, 5))
        for i in range(8)
        for j in range(i + 1, 8)
        if rng.random() < 0.5
    }
    q = tiny_qubo(linear, quadratic, offset=3)
    m = qubo_to_ising(q)
    for bits in itertools.product((0, 1), repeat=8):
        assert m.energy(bits_to_spins(bits)) == pytest.approx(q.energy(list(bits)))


def test_bit_spin_conventions():
    assert bits_to_spins([0, 1]) == [-1, 1]
    assert spins_to_bits([-1, 1]) == [0, 1]


def test_scale_shrinks_to_range():
    m = IsingModel(2, {0: 2.0}, {(0, 1): -4.0})
    scaled, c = scale_to_range(m, 1.0)
    assert c == 0.25
    assert scaled.J[(0, 1)] == -1.0 and scaled.h[0] == 0.5
    assert scaled.max_abs_coefficient() == 1.0


def test_scale_identity_when_in_range():
    m = IsingModel(2, {0: 0.5}, {(0, 1): -1.0})
    scaled, c = scale_to_range(m, 1.0)
    assert c == 1.0 and scaled.J == m.J


def test_scale_rejects_zero_model():
    with pytest.raises(ValueError):
        scale_to_range(IsingModel(2, {}, {}))


def test_scale_preserves_argmin():
    rng = np.random.default_rng(5)
    for _ in range(10):
        n = 10
        h = {i: float(rng.normal()) * 3 for i in range(n)}
        J = {
            (i, j): float(rng.normal()) * 3
            for i in range(n)
            for j in range(i + 1, n)
            if rng.random() < 0.4
        }
        m = IsingModel(n, h, J)
        scaled, _ = scale_to_range(m)
        energies = [
            (m.energy(s), scaled.energy(s))
            for s in itertools.product((-1, 1), repeat=n)
        ]
        orig = min(e for e, _ in energies)
        sc = min(e for _, e in energies)
        argmin_orig = {i for i, (e, _) in enumerate(energies) if e == orig}
        argmin_sc = {i for i, (_, e) in enumerate(energies) if abs(e - sc) < 1e-12}
        assert argmin_orig == argmin_sc


def test_gauge_identity():
    m = IsingModel(2, {0: 0.3, 1: -0.7}, {(0, 1): 0.5})
    assert gauge_transform(m, Gauge.identity(2)) == m


def test_gauge_flips_signs():
    m = IsingModel(2, {0: 0.3, 1: -0.7}, {(0, 1): 0.5})
    g = gauge_transform(m, Gauge(a=(1, -1)))
    assert g.h == {0: 0.3, 1: 0.7}
    assert g.J == {(0, 1): -0.5}


def test_gauge_requires_full_coverage():
    m = IsingModel(3, {0: 1.0}, {})
    with pytest.raises(ValueError):
        gauge_transform(m, Gauge(a=(1, -1)))


def test_gauge_spectrum_invariance():
    rng = np.random.default_rng(11)
    for _ in range(5):
        n = 10
        h = {i: float(rng.normal()) for i in range(n)}
        J = {
            (i, j): float(rng.normal())
            for i in range(n)
            for j in range(i + 1, n)
            if rng.random() < 0.3
        }
        m = IsingModel(n, h, J)
        gauge = random_gauge(n, rng)
        gm = gauge_transform(m, gauge)
        spec = sorted(m.energy(s) for s in itertools.product((-1, 1), repeat=n))
        spec_g = sorted(gm.energy(s) for s in itertools.product((-1, 1), repeat=n))
        assert np.allclose(spec, spec_g, atol=1e-12)


def test_ungauge_is_involution_and_energy_consistent():
    rng = np.random.default_rng(2)
    m = IsingModel(6, {i: float(rng.normal()) for i in range(6)}, {(0, 3): 1.0, (2, 5): -0.5})
    gauge = random_gauge(6, rng)
    gm = gauge_transform(m, gauge)
    for _ in range(20):
        read = tuple(int(s) for s in rng.choice((-1, 1), 6))
        back = ungauge_read(read, gauge)
        assert ungauge_read(back, gauge) == read
        assert m.energy(back) == pytest.approx(gm.energy(read))
    ident = Gauge.identity(6)
    assert ungauge_read((1, -1, 1, 1, -1, 1), ident) == (1, -1, 1, 1, -1, 1)


def _random_embedded(rng, j_ferro=1.5):
    hw = chimera_graph(2, 2, 4)
    # logical triangle plus a pendant, needs at least one chain
    from bdmst_anneal.embedding import find_embedding

    edges = [(0, 1), (0, 2), (1, 2), (2, 3)]
    emb = find_embedding(edges, 4, hw, attempts=4, seed=int(rng.integers(0, 1 << 31)))
    h = {i: float(rng.uniform(-1, 1)) for i in range(4)}
    J = {e: float(rng.uniform(-1, 1)) for e in edges}
    logical = IsingModel(4, h, J)
    return logical, emb, embed_ising(logical, emb, j_ferro)


def test_partial_gauge_identity_and_chain_invariance():
    rng = np.random.default_rng(8)
    logical, emb, embedded = _random_embedded(rng)
    same = partial_gauge(embedded, Gauge.identity(4))
    assert same.ising.J == embedded.ising.J and same.ising.h == embedded.ising.h
    gauge = random_gauge(4, rng)
    gauged = partial_gauge(embedded, gauge)
    for e in embedded.chain_edges:
        assert gauged.ising.J[e] == embedded.ising.J[e] == -embedded.j_ferro


def test_partial_gauge_commutes_with_embedding():
    rng = np.random.default_rng(9)
    for _ in range(5):
        logical, emb, embedded = _random_embedded(rng)
        gauge = random_gauge(4, rng)
        via_physical = partial_gauge(embedded, gauge)
        via_logical = embed_ising(gauge_transform(logical, gauge), emb, embedded.j_ferro)
        assert via_physical.ising.h == pytest.approx(via_logical.ising.h)
        assert set(via_physical.ising.J) == set(via_logical.ising.J)
        for k in via_physical.ising.J:
            assert via_physical.ising.J[k] == pytest.approx(via_logical.ising.J[k])


def test_ising_coo_round_trip():
    from bdmst_anneal.ising import ising_from_coo, ising_to_coo

    inst = make_instance("m5ver1", "w2", 2)
    m = qubo_to_ising(build_qubo(inst))
    again = ising_from_coo(ising_to_coo(m))
    assert again.num_spins == m.num_spins
    assert again.h == m.h and again.J == m.J and again.offset == m.offset


def test_gauge_json_carries_seed():
    g = random_gauge(5, np.random.default_rng(3), seed=3)
    obj = g.to_json()
    assert obj["seed"] == 3 and set(obj["a"]) <= {-1, 1}
    assert Gauge.from_json(obj) == g
