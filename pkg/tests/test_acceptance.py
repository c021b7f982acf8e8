"""Acceptance suite: one test per release criterion, each printing a
PASS/FAIL line (run with `pytest -s tests/test_acceptance.py`).

The heavyweight end-to-end criterion runs the full sampling pipeline over
the degree-2 catalog ensemble and dominates the runtime; everything else
finishes in seconds.
"""

import itertools
import math

import numpy as np
import pytest

from bdmst_anneal.embedding import embed_ising, find_embedding, partial_gauge
from bdmst_anneal.hardware import chimera_graph
from bdmst_anneal.instances import (
    ProblemInstance,
    catalog_graph,
    default_root,
    load_catalog,
    delta2_labels,
    make_instance,
    solve_bdmst_exact,
    validate_tree,
)
from bdmst_anneal.ising import (
    IsingModel,
    gauge_transform,
    qubo_to_ising,
    random_gauge,
    scale_to_range,
)
from bdmst_anneal.metrics import bootstrap_percentiles, delta_tts, p_success, tts
from bdmst_anneal.qsim import (
    AnnealSchedule,
    energy_shift_check,
    gap_trace,
    gibbs_populations,
    hamiltonian_at,
    lowest_eigs,
    pause_relax_evolve,
    perturbation_gap_shift,
    relax_at,
    spectrum_trace,
)
from bdmst_anneal.qubo import build_qubo, count_variables, decode, structured_minimum
from bdmst_anneal.samplers import (
    SaSchedule,
    all_energies,
    low_energy_census,
    run_experiment,
)
from bdmst_anneal.toys import TOY_GAMMA0, TOY_TEMPERATURE, triangle_toy


def report(criterion: str, detail: str):
    print(f"ACCEPTANCE PASS [{criterion}]: {detail}")


# --- 1: mapping ground states equal the exact solver on enumerable instances


GROUND_STATE_CASES = [
    ("m4ver1", "w2", 2),
    ("m5ver1", "w2", 2),
    ("m5ver2", "w13", 2),
    ("m5ver3", "w18", 2),
    ("m5ver6", "w3", 2),
    ("m5ver5", "w14", 3),
]


def test_criterion_1_mapping_correctness():
    # No catalog instance compiles to 26 or fewer variables (the smallest is
    # 36), so the brute-force guard is met through exact elimination of the
    # slack/ancilla blocks validated against full enumeration in unit tests.
    checked = 0
    for graph, weights, delta in GROUND_STATE_CASES:
        inst = make_instance(graph, weights, delta)
        oracle = solve_bdmst_exact(inst)
        q1 = build_qubo(inst, epsilon=1)
        emin, cores = structured_minimum(q1)
        assert emin == oracle.cost, (graph, emin, oracle.cost)
        assert cores, graph
        for bits in cores:
            dec = decode(list(bits), q1)
            assert dec.is_tree and dec.tree.cost == oracle.cost
            assert validate_tree(inst.graph, dec.tree.edges, delta)
        q0 = build_qubo(inst, epsilon=0)
        emin0, cores0 = structured_minimum(q0)
        assert emin0 == oracle.cost
        assert any(decode(list(b), q0).is_tree for b in cores0)
        checked += 1
    report(
        "1 mapping",
        f"{checked} instances: exact QUBO minimum equals the oracle cost; every "
        "eps=1 minimizer decodes to a valid optimal tree",
    )


# --- 2: variable counts


def test_criterion_2_variable_counts():
    # The source text attaches the 74-variable count to degree bound 3, but
    # its own census table and variable accounting give 74 only at degree
    # bound 2 (degree 3 adds n-1 slack bits: 79); the count is pinned to the
    # arithmetically consistent reading.
    k5_d2 = make_instance("m10ver1", "w2", 2)
    k5_d3 = make_instance("m10ver1", "w2", 3)
    assert count_variables(k5_d2, preprocess=True)["total"] == 74
    assert count_variables(k5_d3, preprocess=True)["total"] == 79
    raw2 = count_variables(k5_d2, preprocess=False)["total"]
    raw3 = count_variables(k5_d3, preprocess=False)["total"]
    assert 86 <= raw2 <= 100 and 86 <= raw3 <= 100
    for g in load_catalog():
        inst = ProblemInstance(
            graph=g, weights=(1,) * g.m, degree_bound=3, root=default_root(g), label=g.label
        )
        assert count_variables(inst)["x"] == 2 * g.m - g.degree(inst.root)
    report(
        "2 variable counts",
        f"complete graph: 74 preprocessed (delta 2), raw counts {raw2}/{raw3} in "
        "[86, 100]; x-count = 2m - d_r on all 22 graphs",
    )


# --- 3: ancilla penalty


def test_criterion_3_ancilla_penalty():
    for x, y, a in itertools.product((0, 1), repeat=3):
        f = 3 * a + x * y - 2 * a * x - 2 * a * y
        assert f >= 0
        assert (f == 0) == (a == x * y)
    report("3 ancilla penalty", "f(x,y,a) >= 0 with equality exactly at a = x*y (8/8)")


# --- 4: gauge invariance


def test_criterion_4_gauge_invariance():
    rng = np.random.default_rng(404)
    for trial in range(50):
        n = 10
        h = {i: float(rng.normal()) for i in range(n)}
        J = {
            (i, j): float(rng.normal())
            for i in range(n)
            for j in range(i + 1, n)
            if rng.random() < 0.35
        }
        m = IsingModel(n, h, J)
        gm = gauge_transform(m, random_gauge(n, rng))
        spec = np.sort(all_energies(m))
        spec_g = np.sort(all_energies(gm))
        assert np.abs(spec - spec_g).max() <= 1e-12

    hw = chimera_graph(2, 2, 4)
    edges = [(0, 1), (0, 2), (1, 2), (2, 3), (1, 3)]
    for trial in range(20):
        emb = find_embedding(edges, 4, hw, attempts=3, seed=trial)
        h = {i: float(rng.uniform(-1, 1)) for i in range(4)}
        J = {e: float(rng.uniform(-1, 1)) for e in edges}
        logical = IsingModel(4, h, J)
        embedded = embed_ising(logical, emb, j_ferro=1.7)
        gauge = random_gauge(4, rng)
        via_phys = partial_gauge(embedded, gauge)
        via_log = embed_ising(gauge_transform(logical, gauge), emb, 1.7)
        assert set(via_phys.ising.J) == set(via_log.ising.J)
        for k in via_phys.ising.J:
            assert abs(via_phys.ising.J[k] - via_log.ising.J[k]) <= 1e-12
        for k in set(via_phys.ising.h) | set(via_log.ising.h):
            assert abs(via_phys.ising.h.get(k, 0.0) - via_log.ising.h.get(k, 0.0)) <= 1e-12
    report(
        "4 gauge invariance",
        "50 random gauges preserve the sorted spectrum (<= 1e-12); partial gauge "
        "after embedding equals embedding the gauged model on 20 random cases",
    )


# --- 5: minimal-gap shift with chain strength


def test_criterion_5_gap_shift():
    toy = triangle_toy(2.0)
    grid = np.arange(0.02, 0.985, 0.01)
    t2, t4, t8 = gap_trace(toy, [2.0, 4.0, 8.0], grid, k=3)
    assert t8.s_star < t4.s_star < t2.s_star
    assert t8.gap_min < t4.gap_min < t2.gap_min
    report(
        "5 gap shift",
        f"s* = {t8.s_star:.2f} < {t4.s_star:.2f} < {t2.s_star:.2f} and gap_min = "
        f"{t8.gap_min:.4f} < {t4.gap_min:.4f} < {t2.gap_min:.4f} as chain strength grows",
    )


# --- 6: first-order perturbation theory


def test_criterion_6_perturbation():
    toy = triangle_toy(4.0)
    sched = AnnealSchedule()
    s = 0.3
    tr = spectrum_trace(toy, sched, [s], k=2)

    def exact_gap(jf):
        w, _ = lowest_eigs(hamiltonian_at(toy.with_j_ferro(jf), sched, s), 2)
        return w[1] - w[0]

    gap_errs = {
        lam: abs(exact_gap(4.0 - lam) - perturbation_gap_shift(tr, lam)[0])
        for lam in (0.08, 0.04)
    }
    gap_ratio = gap_errs[0.08] / gap_errs[0.04]
    assert 3.0 <= gap_ratio <= 5.0

    level_errs = {}
    for lam in (0.08, 0.04):
        shifts = energy_shift_check(toy, 0.5, lam, k=2)
        level_errs[lam] = abs(shifts[0].exact - shifts[0].predicted)
    level_ratio = level_errs[0.08] / level_errs[0.04]
    assert 3.0 <= level_ratio <= 5.0

    rising = 0
    for sh in energy_shift_check(triangle_toy(2.0), 0.5, 0.05, k=3):
        if not sh.near_degenerate and sh.p_logical > 0.5:
            assert sh.exact > sh.energy
            rising += 1
    assert rising > 0
    report(
        "6 perturbation",
        f"halving lambda shrinks the residual 4x (gap ratio {gap_ratio:.2f}, level "
        f"ratio {level_ratio:.2f}); {rising} levels with P_L > 1/2 rise as chains weaken",
    )


# --- 7: pause relaxation model


def test_criterion_7_pause_model():
    toy = triangle_toy(2.0)
    w, _ = lowest_eigs(hamiltonian_at(toy, AnnealSchedule(), 0.55), 6)
    gibbs = gibbs_populations(w, TOY_TEMPERATURE)
    start = np.zeros(6)
    start[2] = 1.0
    _, after = relax_at(toy, 0.55, TOY_TEMPERATURE, TOY_GAMMA0, 500.0, start, k=6)
    kl = float(np.sum(after * np.log(np.clip(after, 1e-300, None) / gibbs)))
    assert abs(kl) < 1e-6

    grid = np.arange(0.02, 0.985, 0.01)
    best_sp = {}
    gains = {}
    for jf in (2.0, 8.0):
        emj = toy.with_j_ferro(jf)
        s_star = spectrum_trace(emj, AnnealSchedule(), grid, k=2).s_star
        base = pause_relax_evolve(emj, AnnealSchedule(t_a=1.0), TOY_TEMPERATURE, TOY_GAMMA0, k=6)
        best = (-1.0, None)
        for sp in np.arange(0.50, 0.97, 0.02):
            res = pause_relax_evolve(
                emj,
                AnnealSchedule(t_a=1.0, s_p=float(sp), t_p=10.0),
                TOY_TEMPERATURE,
                TOY_GAMMA0,
                k=6,
            )
            if res.p_ground_final > best[0]:
                best = (res.p_ground_final, float(sp))
        best_sp[jf] = best[1]
        gains[jf] = best[0] - base.p_ground_final
        assert best[1] > s_star  # optimal pause sits after the minimal gap
        assert best[0] > base.p_ground_final  # and strictly beats no pause
    assert best_sp[8.0] <= best_sp[2.0]
    report(
        "7 pause model",
        f"Gibbs fixed point (|KL| = {abs(kl):.1e}); pausing after the minimal gap "
        f"gains {gains[2.0]:.3f}/{gains[8.0]:.3f} ground population, optimal s_p "
        f"{best_sp[8.0]:.2f} (strong chains) <= {best_sp[2.0]:.2f} (weak chains)",
    )


# --- 8: metric conventions


def test_criterion_8_metrics():
    assert tts(0.99, 4.0) == 4.0
    assert tts(0.0, 1.0) == math.inf
    assert tts(0.5, 2.0) == pytest.approx(13.2877, abs=1e-3)
    assert delta_tts(math.inf, math.inf) == delta_tts(math.inf, math.inf)
    assert delta_tts(math.inf, math.inf).delta == 0.0
    assert delta_tts(math.inf, 100.0).delta == math.inf
    assert delta_tts(math.inf, 100.0).ratio == 1.0
    assert delta_tts(100.0, math.inf).delta == -math.inf
    assert delta_tts(100.0, math.inf).ratio == -math.inf
    assert delta_tts(200.0, 50.0) .delta == 150.0
    vals = [3.0, 1.0, 4.0, 1.0, 5.0, 9.0, 2.0, 6.0, math.inf]
    a = bootstrap_percentiles(vals, 50_000, seed=8)
    b = bootstrap_percentiles(vals, 50_000, seed=8)
    assert a == b
    assert a.p35 <= a.median <= a.p65
    report(
        "8 metrics",
        "tts fixed points, all four infinity conventions, bootstrap determinism "
        "and percentile ordering verified",
    )


# --- 9: end-to-end pipeline on the degree-2 ensemble


HW = (12, 12, 4)
PIPELINE_JF = 1.6
PIPELINE_SCHEDULE = SaSchedule(sweeps=128, beta_start=0.1, beta_end=10.0)


def _pipeline_once(label: str):
    inst = make_instance(label, "w2", 2)
    oracle = solve_bdmst_exact(inst)
    qubo = build_qubo(inst)
    scaled, _ = scale_to_range(qubo_to_ising(qubo))
    emb = find_embedding(
        qubo.interaction_edges(), qubo.num_vars, chimera_graph(*HW), attempts=4, seed=11
    )
    embedded = embed_ising(scaled, emb, j_ferro=PIPELINE_JF)
    readset = run_experiment(
        embedded, num_gauges=100, reads_per_gauge=500, schedule=PIPELINE_SCHEDULE, seed=5
    )
    p = p_success(readset, oracle.cost, inst, qubo)
    return inst, oracle, qubo, readset, p


def test_criterion_9_end_to_end_ensemble():
    labels = delta2_labels()
    solved = []
    for label in labels:
        inst, oracle, qubo, readset, p = _pipeline_once(label)
        assert readset.total_reads == 100 * 500
        if p > 0:
            solved.append(label)
            # recount the successes by explicit certification: reads tying
            # the optimal energy may still be broken encodings (margin zero)
            # and must not be counted
            certified = 0
            for rec in readset.ok_reads():
                bits = [(s + 1) // 2 for s in rec.config]
                if qubo.energy(bits) != oracle.cost:
                    continue
                dec = decode(bits, qubo)
                if dec.is_tree and dec.tree.cost == oracle.cost:
                    assert validate_tree(inst.graph, dec.tree.edges, inst.degree_bound)
                    certified += rec.multiplicity
            assert certified == round(p * readset.total_reads) and certified > 0
        print(f"  pipeline {label}: p_success = {p:.6f}")
    assert len(solved) >= math.ceil(0.9 * len(labels)), solved
    report(
        "9 end-to-end",
        f"{len(solved)}/{len(labels)} degree-2 instances solved "
        "(100 gauges x 500 reads, every claimed optimum certified)",
    )


# --- 10: chain-break census


def test_criterion_10_chain_break_census():
    e = all_energies(triangle_toy(1.0).ising)
    window = 0.1 * float(e.max() - e.min())
    fractions = [low_energy_census(triangle_toy(jf), window) for jf in (0.5, 1.0, 2.0)]
    assert fractions[0] > fractions[1] > fractions[2]
    report(
        "10 chain-break census",
        "low-energy broken fraction "
        + " > ".join(f"{f:.3f}" for f in fractions)
        + " strictly decreases with chain strength",
    )
