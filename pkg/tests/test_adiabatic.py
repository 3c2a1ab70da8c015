import itertools

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from convqae import qsim
from convqae.adiabatic import (
    DEFAULT_SCHEDULE,
    IsingProblem,
    Schedule,
    anneal,
    brute_force_ground_state,
    build_adiabatic_circuit,
    classical_energy,
    config_from_bits,
    energy_levels,
    solve,
    spin_table,
)
from convqae.grid import NeighborGraph
from convqae.qsim import QubitCountError


def random_problem(n, seed, edges=None, w_range=1.0, h_range=0.1):
    rng = np.random.default_rng(seed)
    if edges is None:
        edges = [(i, j) for i in range(n) for j in range(i + 1, n) if rng.random() < 0.5]
    return IsingProblem(
        n,
        {tuple(map(int, e)): rng.uniform(-w_range, w_range) for e in edges},
        rng.uniform(-h_range, h_range, n),
    )


def torus_problem(seed):
    return random_problem(9, seed, NeighborGraph.torus(3, 3).edges)


def energy_by_formula(problem, s):
    """Second evaluator: plain double loop over the energy definition."""
    total = 0.0
    for i in range(problem.num_spins):
        total += problem.fields_z[i] * s[i]
        for j in range(i + 1, problem.num_spins):
            total += problem.couplings.get((i, j), 0.0) * s[i] * s[j]
    return total


# -- problem and schedule --------------------------------------------------------


def test_problem_validation():
    with pytest.raises(ValueError):
        IsingProblem(2, {(1, 0): 1.0}, [0, 0])
    with pytest.raises(ValueError):
        IsingProblem(2, {(0, 2): 1.0}, [0, 0])
    with pytest.raises(ValueError):
        IsingProblem(2, {}, [0.0])


def test_couplings_are_sorted():
    p = IsingProblem(3, {(1, 2): 1.0, (0, 2): 2.0, (0, 1): 3.0}, np.zeros(3))
    assert list(p.couplings) == [(0, 1), (0, 2), (1, 2)]


def test_schedule_values():
    sch = Schedule(4, 2.0)
    assert sch.dt == 0.5
    np.testing.assert_allclose(sch.s_values(), [0.25, 0.5, 0.75, 1.0])
    with pytest.raises(ValueError):
        Schedule(0, 1.0)
    with pytest.raises(ValueError):
        Schedule(3, 0.0)


# -- classical energy ------------------------------------------------------------------


def test_energy_single_spin():
    assert classical_energy(IsingProblem(1, {}, [0.1]), [-1]) == pytest.approx(-0.1)


def test_energy_single_coupling():
    p = IsingProblem(2, {(0, 1): -0.5}, [0.0, 0.0])
    assert classical_energy(p, [1, 1]) == pytest.approx(-0.5)


@pytest.mark.parametrize("seed", range(5))
def test_energy_matches_independent_evaluator(seed):
    p = random_problem(6, seed)
    for s in spin_table(6):
        assert classical_energy(p, s) == pytest.approx(energy_by_formula(p, s), abs=1e-12)


def test_energy_rejects_bad_configs():
    p = IsingProblem(2, {}, [0.0, 0.0])
    with pytest.raises(ValueError):
        classical_energy(p, [1, 1, 1])
    with pytest.raises(ValueError):
        classical_energy(p, [1, 0])


# -- brute force -----------------------------------------------------------------------


def test_brute_force_single_spin():
    config, e = brute_force_ground_state(IsingProblem(1, {}, [0.1]))
    assert list(config) == [-1] and e == pytest.approx(-0.1)


def test_brute_force_tie_goes_to_lowest_index():
    config, e = brute_force_ground_state(IsingProblem(2, {(0, 1): 0.5}, [0.0, 0.0]))
    assert list(config) == [1, -1] and e == pytest.approx(-0.5)


def test_brute_force_size_guard():
    with pytest.raises(QubitCountError):
        brute_force_ground_state(IsingProblem(21, {}, np.zeros(21)))


def _hill_climb(problem, start):
    s = np.array(start)
    e = classical_energy(problem, s)
    improved = True
    while improved:
        improved = False
        for i in range(problem.num_spins):
            s[i] *= -1
            e2 = classical_energy(problem, s)
            if e2 < e - 1e-12:
                e, improved = e2, True
            else:
                s[i] *= -1
    return e


def test_brute_force_beats_hill_climbing():
    rng = np.random.default_rng(5)
    for seed in range(5):
        p = torus_problem(seed)
        _, e = brute_force_ground_state(p)
        for _ in range(20):
            assert e <= _hill_climb(p, rng.choice([-1, 1], 9)) + 1e-12


@pytest.mark.invariant
@settings(max_examples=40, deadline=None)
@given(n=st.integers(1, 10), seed=st.integers(0, 2**32 - 1))
def test_ground_state_is_minimal_over_all_configs(n, seed):
    p = random_problem(n, seed)
    config, e = brute_force_ground_state(p)
    assert classical_energy(p, config) == pytest.approx(e)
    for s in spin_table(n):
        assert e <= classical_energy(p, s) + 1e-12


# -- circuit construction -----------------------------------------------------------


def test_circuit_one_spin_one_step():
    p = IsingProblem(1, {}, [0.1])
    c = build_adiabatic_circuit(p, Schedule(1, 2.0))
    assert [g.kind for g in c] == ["h", "rz", "rx"]
    assert c.gates[1].theta == pytest.approx(2 * 0.1 * 2.0)
    assert c.gates[2].theta == 0.0


def test_circuit_gate_count_two_spins():
    p = IsingProblem(2, {(0, 1): 0.3}, [0.1, -0.1])
    assert len(build_adiabatic_circuit(p, Schedule(2, 1.0))) == 12


def test_circuit_step_structure_on_3x3_torus():
    p = torus_problem(0)
    c = build_adiabatic_circuit(p, Schedule(10, 10.0))
    assert len(c) == 9 + 10 * (18 + 9 + 9)
    step = c.gates[9 : 9 + 36]
    assert [g.kind for g in step] == ["rzz"] * 18 + ["rz"] * 9 + ["rx"] * 9
    assert [g.qubits for g in step[:18]] == sorted(p.couplings)


def test_circuit_angles():
    p = IsingProblem(2, {(0, 1): -0.4}, [0.1, 0.2], field_x=1.5)
    sch = Schedule(4, 2.0)
    gates = build_adiabatic_circuit(p, sch).gates[2:]
    for m, s in enumerate(sch.s_values()):
        zz, z0, z1, x0, x1 = gates[5 * m : 5 * m + 5]
        assert zz.theta == pytest.approx(2 * s * -0.4 * sch.dt)
        assert z1.theta == pytest.approx(2 * s * 0.2 * sch.dt)
        # the driver term carries a minus sign in the Hamiltonian
        assert x0.theta == pytest.approx(-2 * (1 - s) * 1.5 * sch.dt)


@pytest.mark.invariant
def test_circuit_builder_is_pure():
    p = torus_problem(3)
    assert build_adiabatic_circuit(p) == build_adiabatic_circuit(p)


# -- solve ---------------------------------------------------------------------------


def test_solve_single_spin():
    config, hist = solve(IsingProblem(1, {}, [0.1]))
    assert list(config) == [-1]
    assert sum(hist.values()) == 1024


def test_solve_free_spins_give_flat_histogram():
    p = IsingProblem(3, {}, np.zeros(3))
    _, hist = solve(p, shots=8000, seed=1)
    assert len(hist) == 8
    assert all(abs(c / 8000 - 1 / 8) < 0.03 for c in hist.values())


def test_solve_is_reproducible():
    p = torus_problem(4)
    a, b = solve(p, seed=11), solve(p, seed=11)
    assert np.array_equal(a.config, b.config) and a.histogram == b.histogram


def test_solve_returns_histogram_mode():
    p = torus_problem(2)
    res = solve(p, seed=3)
    best = max(res.histogram.items(), key=lambda kv: (kv[1], -qsim.basis_index(kv[0])))
    assert np.array_equal(config_from_bits(best[0]), res.config)
    assert res.energy == pytest.approx(classical_energy(p, res.config))


def test_post_anneal_state_peaks_at_ground_state():
    p = random_problem(4, 8)
    config, _ = brute_force_ground_state(p)
    bits = qsim.most_probable(anneal(p))
    assert np.array_equal(config_from_bits(bits), config)


def test_random_six_spin_problems_reach_ground_state():
    hits = 0
    for seed in range(200):
        p = random_problem(6, 10_000 + seed)
        res = solve(p, seed=seed)
        hits += res.energy <= brute_force_ground_state(p)[1] + 1e-9
    assert hits / 200 >= 0.80


@pytest.mark.invariant
@pytest.mark.parametrize("seed", range(4))
def test_longer_anneal_does_not_hurt(seed):
    p = torus_problem(100 + seed)

    def mean_energy(schedule):
        return np.mean([solve(p, schedule, 256, k).energy for k in range(50)])

    assert mean_energy(Schedule(50, 50.0)) <= mean_energy(Schedule(5, 5.0)) + 1e-12


@pytest.mark.invariant
@settings(max_examples=10, deadline=None)
@given(seed=st.integers(0, 2**32 - 1))
def test_spin_flip_symmetry_without_fields(seed):
    rng = np.random.default_rng(seed)
    n = 5
    p = IsingProblem(
        n,
        {(i, j): rng.uniform(-1, 1) for i, j in itertools.combinations(range(n), 2)},
        np.zeros(n),
    )
    _, hist = solve(p, shots=10000, seed=seed)
    flip = str.maketrans("01", "10")
    keys = set(hist) | {k.translate(flip) for k in hist}
    tv = 0.5 * sum(abs(hist.get(k, 0) - hist.get(k.translate(flip), 0)) for k in keys) / 10000
    assert tv < 0.05


def test_energy_levels_are_sorted_and_distinct():
    p = IsingProblem(2, {(0, 1): 0.5}, [0.0, 0.0])
    np.testing.assert_allclose(energy_levels(p), [-0.5, 0.5])


def test_default_schedule_is_the_documented_one():
    assert (DEFAULT_SCHEDULE.num_steps, DEFAULT_SCHEDULE.total_time) == (200, 100.0)
