"""Dense statevector simulator for the small gate set used by the annealer.

Conventions
-----------
* Qubit 0 is the least-significant bit of a basis index.
* Bitstrings are printed qubit 0 first, so basis index 1 on two qubits is "10".
* ``RotZ(t) = diag(exp(-it/2), exp(it/2))`` and ``RotX(t) = exp(-itX/2)``.
* ``RotZZ(t) = exp(-it Z_a Z_b / 2)``, equal to ``CNOT . RotZ(t) . CNOT``.

Gates are applied by a compiled kernel that walks a whole circuit in one call,
so the cost of a circuit is proportional to ``len(gates) * 2**n`` with very
little per-gate overhead.
"""

from __future__ import annotations

import threading
from contextlib import contextmanager
from typing import Iterable, Iterator, NamedTuple

import numpy as np
from numba import njit

MAX_QUBITS = 20

HADAMARD = "h"
PAULI_X = "x"
ROT_X = "rx"
ROT_Z = "rz"
CNOT = "cx"
ROT_ZZ = "rzz"

_ARITY = {HADAMARD: 1, PAULI_X: 1, ROT_X: 1, ROT_Z: 1, CNOT: 2, ROT_ZZ: 2}
_KINDS = (HADAMARD, PAULI_X, ROT_X, ROT_Z, CNOT, ROT_ZZ)
_OPCODE = {k: i for i, k in enumerate(_KINDS)}


class QubitCountError(ValueError):
    """Requested register size is outside ``1..MAX_QUBITS``."""


class Gate(NamedTuple):
    kind: str
    qubits: tuple[int, ...]
    theta: float = 0.0

    def __repr__(self) -> str:
        args = ", ".join(str(q) for q in self.qubits)
        if self.kind in (ROT_X, ROT_Z, ROT_ZZ):
            args += f", {self.theta:.6g}"
        return f"{self.kind}({args})"


def hadamard(q: int) -> Gate:
    return Gate(HADAMARD, (q,))


def pauli_x(q: int) -> Gate:
    return Gate(PAULI_X, (q,))


def rot_x(q: int, theta: float) -> Gate:
    return Gate(ROT_X, (q,), float(theta))


def rot_z(q: int, theta: float) -> Gate:
    return Gate(ROT_Z, (q,), float(theta))


def cnot(control: int, target: int) -> Gate:
    return Gate(CNOT, (control, target))


def rot_zz(q1: int, q2: int, theta: float) -> Gate:
    return Gate(ROT_ZZ, (q1, q2), float(theta))


def _check_gate(gate: Gate, num_qubits: int) -> None:
    arity = _ARITY.get(gate.kind)
    if arity is None:
        raise ValueError(f"unknown gate kind {gate.kind!r}")
    if len(gate.qubits) != arity:
        raise ValueError(f"{gate.kind} takes {arity} qubit(s), got {gate.qubits}")
    for q in gate.qubits:
        if not 0 <= q < num_qubits:
            raise IndexError(f"qubit {q} out of range for {num_qubits}-qubit state")
    if arity == 2 and gate.qubits[0] == gate.qubits[1]:
        raise IndexError(f"{gate.kind} needs distinct qubits, got {gate.qubits}")


class Circuit:
    """Ordered gate sequence on ``num_qubits`` qubits.

    Gates are stored as flat opcode arrays; :attr:`gates` rebuilds the
    :class:`Gate` view on demand.
    """

    def __init__(self, num_qubits: int, gates: Iterable[Gate] = ()):
        _check_size(num_qubits)
        self.num_qubits = num_qubits
        self._ops: list[int] = []
        self._qa: list[int] = []
        self._qb: list[int] = []
        self._theta: list[float] = []
        self._program = None
        self.extend(gates)

    @classmethod
    def from_arrays(cls, num_qubits, ops, qa, qb, thetas) -> "Circuit":
        """Bulk constructor from opcode arrays (see ``_OPCODE``)."""
        c = cls(num_qubits)
        ops = np.asarray(ops, dtype=np.int64)
        qa = np.asarray(qa, dtype=np.int64)
        qb = np.asarray(qb, dtype=np.int64)
        thetas = np.asarray(thetas, dtype=np.float64)
        if not (ops.shape == qa.shape == qb.shape == thetas.shape) or ops.ndim != 1:
            raise ValueError("opcode arrays must be 1-D and equally long")
        if len(ops):
            if ops.min() < 0 or ops.max() >= len(_KINDS):
                raise ValueError("unknown opcode")
            two = ops >= _OPCODE[CNOT]
            if qa.min() < 0 or qa.max() >= num_qubits:
                raise IndexError("qubit index out of range")
            if np.any(two & ((qb < 0) | (qb >= num_qubits) | (qb == qa))):
                raise IndexError("invalid second qubit index")
        c._ops, c._qa, c._qb, c._theta = (
            ops.tolist(), qa.tolist(), qb.tolist(), thetas.tolist()
        )
        c._program = (ops, qa, qb, thetas)
        return c

    def append(self, gate: Gate) -> "Circuit":
        _check_gate(gate, self.num_qubits)
        self._ops.append(_OPCODE[gate.kind])
        self._qa.append(gate.qubits[0])
        self._qb.append(gate.qubits[1] if len(gate.qubits) == 2 else 0)
        self._theta.append(float(gate.theta))
        self._program = None
        return self

    def extend(self, gates: Iterable[Gate]) -> "Circuit":
        for g in gates:
            self.append(g)
        return self

    def program(self):
        if self._program is None:
            self._program = (
                np.array(self._ops, dtype=np.int64),
                np.array(self._qa, dtype=np.int64),
                np.array(self._qb, dtype=np.int64),
                np.array(self._theta, dtype=np.float64),
            )
        return self._program

    @property
    def gates(self) -> list[Gate]:
        out = []
        for op, a, b, t in zip(self._ops, self._qa, self._qb, self._theta):
            kind = _KINDS[op]
            qubits = (a, b) if _ARITY[kind] == 2 else (a,)
            out.append(Gate(kind, qubits, t if kind in (ROT_X, ROT_Z, ROT_ZZ) else 0.0))
        return out

    def __len__(self) -> int:
        return len(self._ops)

    def __iter__(self) -> Iterator[Gate]:
        return iter(self.gates)

    def __add__(self, other: "Circuit") -> "Circuit":
        if other.num_qubits != self.num_qubits:
            raise ValueError("cannot concatenate circuits of different width")
        a, b = self.program(), other.program()
        return Circuit.from_arrays(
            self.num_qubits, *(np.concatenate([x, y]) for x, y in zip(a, b))
        )

    def __eq__(self, other) -> bool:
        if not isinstance(other, Circuit):
            return NotImplemented
        return self.num_qubits == other.num_qubits and self.gates == other.gates

    def count(self, kind: str) -> int:
        code = _OPCODE[kind]
        return sum(1 for op in self._ops if op == code)

    def __repr__(self) -> str:
        return f"Circuit(num_qubits={self.num_qubits}, gates={len(self)})"


class QuantumState:
    """Normalized complex amplitude vector over ``num_qubits`` qubits.

    States behave as values: gate application returns a new state.
    """

    __slots__ = ("num_qubits", "amplitudes")

    def __init__(self, num_qubits: int, amplitudes: np.ndarray):
        _check_size(num_qubits)
        amplitudes = np.asarray(amplitudes, dtype=np.complex128)
        if amplitudes.shape != (1 << num_qubits,):
            raise ValueError(
                f"expected {1 << num_qubits} amplitudes, got shape {amplitudes.shape}"
            )
        norm = np.linalg.norm(amplitudes)
        if not np.isclose(norm, 1.0, atol=1e-10):
            raise ValueError(f"state is not normalized (norm={norm})")
        self.num_qubits = num_qubits
        self.amplitudes = amplitudes
        _notify(num_qubits)

    def probabilities(self) -> np.ndarray:
        return self.amplitudes.real**2 + self.amplitudes.imag**2

    def norm(self) -> float:
        return float(np.linalg.norm(self.amplitudes))

    def copy(self) -> "QuantumState":
        return QuantumState(self.num_qubits, self.amplitudes.copy())

    def __repr__(self) -> str:
        return f"QuantumState(num_qubits={self.num_qubits})"


def _check_size(num_qubits: int) -> None:
    if not 1 <= num_qubits <= MAX_QUBITS:
        raise QubitCountError(
            f"num_qubits must be in 1..{MAX_QUBITS}, got {num_qubits}"
        )


def new_state(num_qubits: int) -> QuantumState:
    """Return ``|0...0>`` on ``num_qubits`` qubits."""
    _check_size(num_qubits)
    amps = np.zeros(1 << num_qubits, dtype=np.complex128)
    amps[0] = 1.0
    return QuantumState(num_qubits, amps)


# -- qubit usage instrumentation ---------------------------------------------

_trackers: list[list[int]] = []
_trackers_lock = threading.Lock()


def _notify(num_qubits: int) -> None:
    if _trackers:
        with _trackers_lock:
            for t in _trackers:
                t.append(num_qubits)


@contextmanager
def track_qubit_usage() -> Iterator[list[int]]:
    """Record the width of every state constructed inside the block.

    >>> with track_qubit_usage() as widths:
    ...     _ = new_state(3)
    >>> widths
    [3]
    """
    record: list[int] = []
    with _trackers_lock:
        _trackers.append(record)
    try:
        yield record
    finally:
        with _trackers_lock:
            _trackers.remove(record)


# -- kernel ------------------------------------------------------------------

_INV_SQRT2 = 1.0 / np.sqrt(2.0)


@njit(cache=True, nogil=True)
def _run_program(amps, ops, qa, qb, thetas):
    dim = amps.shape[0]
    half = dim >> 1
    for k in range(ops.shape[0]):
        op = ops[k]
        q = qa[k]
        ma = np.int64(1) << q
        low = ma - 1
        if op <= 2:
            # single-qubit mixers: visit each (bit=0, bit=1) pair once
            if op == 0:
                c0, c1 = _INV_SQRT2 + 0j, _INV_SQRT2 + 0j
                d0, d1 = _INV_SQRT2 + 0j, -_INV_SQRT2 + 0j
            elif op == 1:
                c0, c1 = 0j, 1.0 + 0j
                d0, d1 = 1.0 + 0j, 0j
            else:
                c = np.cos(0.5 * thetas[k]) + 0j
                s = -1j * np.sin(0.5 * thetas[k])
                c0, c1, d0, d1 = c, s, s, c
            for base in range(half):
                i = ((base >> q) << (q + 1)) | (base & low)
                j = i | ma
                a = amps[i]
                b = amps[j]
                amps[i] = c0 * a + c1 * b
                amps[j] = d0 * a + d1 * b
        elif op == 3:  # rot z
            lo = np.exp(-0.5j * thetas[k])
            hi = np.exp(0.5j * thetas[k])
            for base in range(half):
                i = ((base >> q) << (q + 1)) | (base & low)
                amps[i] *= lo
                amps[i | ma] *= hi
        elif op == 4:  # cnot, qa control, qb target
            mb = np.int64(1) << qb[k]
            for i in range(dim):
                if (i & ma) != 0 and (i & mb) == 0:
                    a = amps[i]
                    amps[i] = amps[i | mb]
                    amps[i | mb] = a
        else:  # rot zz
            phases = (np.exp(-0.5j * thetas[k]), np.exp(0.5j * thetas[k]))
            qb_ = qb[k]
            for i in range(dim):
                amps[i] *= phases[((i >> q) ^ (i >> qb_)) & 1]


def apply_gate(state: QuantumState, gate: Gate) -> QuantumState:
    """Return ``gate`` applied to ``state``; the input state is not modified."""
    _check_gate(gate, state.num_qubits)
    amps = state.amplitudes.copy()
    _run_program(amps, *Circuit(state.num_qubits, [gate]).program())
    return QuantumState(state.num_qubits, amps)


def apply_circuit(state: QuantumState, circuit: Circuit) -> QuantumState:
    """Apply the gates of ``circuit`` in order; the input state is not modified."""
    if circuit.num_qubits != state.num_qubits:
        raise ValueError(
            f"circuit acts on {circuit.num_qubits} qubits, "
            f"state has {state.num_qubits}"
        )
    amps = state.amplitudes.copy()
    if len(circuit):
        _run_program(amps, *circuit.program())
    return QuantumState(state.num_qubits, amps)


# -- readout -------------------------------------------------------------------


def bitstring(index: int, num_qubits: int) -> str:
    """Basis index to bitstring, qubit 0 first."""
    return "".join("1" if (index >> q) & 1 else "0" for q in range(num_qubits))


def basis_index(bits: str) -> int:
    return sum(1 << q for q, b in enumerate(bits) if b == "1")


def sample_counts(state: QuantumState, shots: int, seed: int) -> np.ndarray:
    """Outcome counts indexed by basis index (length ``2**n``)."""
    if shots < 1:
        raise ValueError(f"shots must be >= 1, got {shots}")
    p = state.probabilities()
    p = p / p.sum()
    rng = np.random.default_rng(seed)
    return rng.multinomial(shots, p)


def sample(state: QuantumState, shots: int, seed: int) -> dict[str, int]:
    """Measure every qubit ``shots`` times; returns ``{bitstring: count}``.

    Keys appear in ascending basis-index order and zero counts are omitted.
    """
    counts = sample_counts(state, shots, seed)
    return {
        bitstring(int(i), state.num_qubits): int(counts[i])
        for i in np.flatnonzero(counts)
    }


def most_probable(state: QuantumState, atol: float = 1e-12) -> str:
    """Basis string of maximal probability; near-ties go to the lowest index."""
    p = state.probabilities()
    idx = int(np.flatnonzero(p >= p.max() - atol)[0])
    return bitstring(idx, state.num_qubits)
