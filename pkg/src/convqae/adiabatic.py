"""Trotterized adiabatic annealing of Ising problems on the statevector simulator.

The annealing Hamiltonian interpolates, for ``s`` from 0 to 1, between a
transverse driver and the Ising target::

    H(s) = s * (sum_{i<j} W_ij Z_i Z_j + sum_i hz_i Z_i) - (1 - s) * hx * sum_i X_i

With ``hx > 0`` the uniform superposition prepared by Hadamards is the ground
state of the driver, so slow evolution ends near the Ising ground state.
Spins map to qubits through the Z eigenvalue: bit 0 is ``s = +1``, bit 1 is
``s = -1``.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Mapping

import numpy as np

from . import qsim
from .qsim import Circuit, QubitCountError


@dataclass(frozen=True)
class IsingProblem:
    num_spins: int
    couplings: Mapping[tuple[int, int], float]
    fields_z: np.ndarray
    field_x: float = 1.0

    def __post_init__(self):
        if self.num_spins < 1:
            raise ValueError("num_spins must be positive")
        fz = np.asarray(self.fields_z, dtype=float)
        if fz.shape != (self.num_spins,):
            raise ValueError(
                f"fields_z must have length {self.num_spins}, got shape {fz.shape}"
            )
        object.__setattr__(self, "fields_z", fz)
        clean = {}
        for (i, j), w in self.couplings.items():
            i, j = int(i), int(j)
            if not (0 <= i < j < self.num_spins):
                raise ValueError(f"invalid coupling key ({i}, {j})")
            clean[(i, j)] = float(w)
        object.__setattr__(self, "couplings", dict(sorted(clean.items())))

    def coupling_arrays(self) -> tuple[np.ndarray, np.ndarray]:
        """Edges as an ``(E, 2)`` int array and weights as an ``(E,)`` array."""
        if not self.couplings:
            return np.zeros((0, 2), dtype=int), np.zeros(0)
        edges = np.array(list(self.couplings), dtype=int)
        return edges, np.fromiter(self.couplings.values(), float, len(edges))


@dataclass(frozen=True)
class Schedule:
    """Linear schedule ``s_m = m / num_steps`` with step ``total_time / num_steps``."""

    num_steps: int = 200
    total_time: float = 100.0

    def __post_init__(self):
        if self.num_steps < 1:
            raise ValueError("num_steps must be >= 1")
        if not self.total_time > 0:
            raise ValueError("total_time must be > 0")

    @property
    def dt(self) -> float:
        return self.total_time / self.num_steps

    def s_values(self) -> np.ndarray:
        return np.arange(1, self.num_steps + 1) / self.num_steps


DEFAULT_SCHEDULE = Schedule()
DEFAULT_SHOTS = 1024


def spin_table(num_spins: int) -> np.ndarray:
    """All ``2**n`` spin configurations, row ``k`` for basis index ``k``."""
    idx = np.arange(1 << num_spins)
    bits = (idx[:, None] >> np.arange(num_spins)) & 1
    return (1 - 2 * bits).astype(np.int8)


def config_from_index(index: int, num_spins: int) -> np.ndarray:
    bits = (index >> np.arange(num_spins)) & 1
    return (1 - 2 * bits).astype(np.int8)


def config_from_bits(bits: str) -> np.ndarray:
    return np.array([1 if b == "0" else -1 for b in bits], dtype=np.int8)


def _check_config(problem: IsingProblem, config) -> np.ndarray:
    s = np.asarray(config)
    if s.shape != (problem.num_spins,):
        raise ValueError(
            f"config has shape {s.shape}, problem has {problem.num_spins} spins"
        )
    if not np.all((s == 1) | (s == -1)):
        raise ValueError("spins must be +1 or -1")
    return s


def classical_energy(problem: IsingProblem, config) -> float:
    """Ising energy ``sum W_ij s_i s_j + sum hz_i s_i`` (driver term excluded)."""
    s = _check_config(problem, config).astype(float)
    edges, w = problem.coupling_arrays()
    e = float(problem.fields_z @ s)
    if len(w):
        e += float(np.sum(w * s[edges[:, 0]] * s[edges[:, 1]]))
    return e


def energy_table(problem: IsingProblem) -> np.ndarray:
    """Energy of every configuration, indexed by basis index."""
    _check_enumerable(problem.num_spins)
    table = spin_table(problem.num_spins).astype(float)
    energies = table @ problem.fields_z
    for (i, j), w in problem.couplings.items():
        energies += w * table[:, i] * table[:, j]
    return energies


def _check_enumerable(n: int) -> None:
    if n > qsim.MAX_QUBITS:
        raise QubitCountError(f"{n} spins exceeds the limit of {qsim.MAX_QUBITS}")


def brute_force_ground_state(
    problem: IsingProblem, atol: float = 1e-12
) -> tuple[np.ndarray, float]:
    """Exhaustive minimum over all ``2**n`` configurations.

    Near-ties go to the configuration listed first when enumerating spin 0
    slowest with ``+1`` before ``-1`` (the lexicographically smallest bitstring).
    """
    energies = energy_table(problem)
    ties = np.flatnonzero(energies <= energies.min() + atol)
    n = problem.num_spins
    k = int(min(ties, key=lambda i: qsim.bitstring(int(i), n)))
    return config_from_index(k, n), float(energies[k])


def energy_levels(problem: IsingProblem, decimals: int = 9) -> np.ndarray:
    """Sorted distinct energies (rounded to merge floating-point duplicates)."""
    return np.unique(np.round(energy_table(problem), decimals))


def build_adiabatic_circuit(
    problem: IsingProblem, schedule: Schedule = DEFAULT_SCHEDULE
) -> Circuit:
    """First-order Trotter circuit for the annealing Hamiltonian.

    Hadamards on every qubit, then for ``s = m / M``, ``m = 1..M``:
    ``RotZZ(i, j, 2 s W_ij dt)`` per coupling in key order, ``RotZ(i, 2 s hz_i dt)``
    per spin, and ``RotX(i, -2 (1 - s) hx dt)`` per spin.
    """
    n = problem.num_spins
    _check_enumerable(n)
    dt = schedule.dt
    edges, w = problem.coupling_arrays()
    n_edges = len(w)
    s = schedule.s_values()[:, None]

    # one Trotter step: all ZZ couplings, then all Z fields, then the X driver
    step_ops = np.concatenate(
        [
            np.full(n_edges, qsim._OPCODE[qsim.ROT_ZZ]),
            np.full(n, qsim._OPCODE[qsim.ROT_Z]),
            np.full(n, qsim._OPCODE[qsim.ROT_X]),
        ]
    )
    step_qa = np.concatenate([edges[:, 0], np.arange(n), np.arange(n)])
    step_qb = np.concatenate([edges[:, 1], np.zeros(2 * n, dtype=int)])
    zz = 2.0 * s * w[None, :] * dt
    z = 2.0 * s * problem.fields_z[None, :] * dt
    # the driver enters H(s) with a minus sign
    x = np.repeat(-2.0 * (1.0 - s) * problem.field_x * dt, n, axis=1)
    steps = schedule.num_steps

    ops = np.concatenate([np.full(n, qsim._OPCODE[qsim.HADAMARD]), np.tile(step_ops, steps)])
    qa = np.concatenate([np.arange(n), np.tile(step_qa, steps)])
    qb = np.concatenate([np.zeros(n, dtype=int), np.tile(step_qb, steps)])
    thetas = np.concatenate([np.zeros(n), np.hstack([zz, z, x]).ravel()])
    return Circuit.from_arrays(n, ops, qa, qb, thetas)


def anneal(problem: IsingProblem, schedule: Schedule = DEFAULT_SCHEDULE):
    """Final state of the annealing circuit started from ``|0...0>``."""
    circuit = build_adiabatic_circuit(problem, schedule)
    return qsim.apply_circuit(qsim.new_state(problem.num_spins), circuit)


@dataclass
class SolveResult:
    config: np.ndarray
    histogram: dict[str, int] = field(repr=False)
    energy: float

    def __iter__(self):
        # allows ``config, hist = solve(...)``
        return iter((self.config, self.histogram))


def solve(
    problem: IsingProblem,
    schedule: Schedule = DEFAULT_SCHEDULE,
    shots: int = DEFAULT_SHOTS,
    seed: int = 0,
) -> SolveResult:
    """Anneal, sample ``shots`` times and return the most frequent outcome.

    Histogram ties go to the lowest basis index.
    """
    state = anneal(problem, schedule)
    counts = qsim.sample_counts(state, shots, seed)
    k = int(np.argmax(counts))
    config = config_from_index(k, problem.num_spins)
    hist = {
        qsim.bitstring(int(i), problem.num_spins): int(counts[i])
        for i in np.flatnonzero(counts)
    }
    return SolveResult(config, hist, classical_energy(problem, config))
