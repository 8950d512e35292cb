"""
Dense state-vector simulation, a small circuit IR and exact gate counting.

Conventions
-----------
- Qubit ``i`` is character ``i`` of a bit pattern and axis ``i`` of the state
  reshaped to ``(2,) * n``.  The basis index is big-endian:
  ``index = sum(bits[i] * 2**(n - 1 - i))``, so ``"10"`` is index 2.
- ``RX/RY/RZ(theta) = exp(-i theta P / 2)``.
- Global phase is never significant; equivalence helpers compare up to it.

A ``StateVector`` is mutated in place only through ``apply_gate(..., inplace=True)``;
everything else returns new arrays.  Read-only sharing between threads is safe.
"""
from __future__ import annotations

import json
from dataclasses import dataclass, field
from math import cos, sin, sqrt

import numpy as np

UNITARY_TOL = 1e-12
MAX_DENSE_QUBITS = 30

GATE_KINDS = ("X", "H", "RX", "RY", "RZ", "CNOT", "MCU", "LocalUnitary")
_SINGLE_QUBIT_KINDS = frozenset({"X", "H", "RX", "RY", "RZ"})

_X = np.array([[0, 1], [1, 0]], dtype=complex)
_Y = np.array([[0, -1j], [1j, 0]], dtype=complex)
_Z = np.array([[1, 0], [0, -1]], dtype=complex)
_H = np.array([[1, 1], [1, -1]], dtype=complex) / sqrt(2)
PAULI = {"I": np.eye(2, dtype=complex), "X": _X, "Y": _Y, "Z": _Z}


class SimulationError(ValueError):
    """Invalid input to the simulator (shape, qubit index, non-unitary matrix)."""


def rx(theta):
    c, s = cos(theta / 2), sin(theta / 2)
    return np.array([[c, -1j * s], [-1j * s, c]], dtype=complex)


def ry(theta):
    c, s = cos(theta / 2), sin(theta / 2)
    return np.array([[c, -s], [s, c]], dtype=complex)


def rz(theta):
    return np.array([[np.exp(-0.5j * theta), 0], [0, np.exp(0.5j * theta)]], dtype=complex)


def pattern_index(bits: str) -> int:
    """Big-endian basis index of a 0/1 string."""
    if bits and set(bits) - {"0", "1"}:
        raise SimulationError(f"bit pattern must contain only 0/1: {bits!r}")
    return int(bits, 2) if bits else 0


def index_pattern(index: int, n: int) -> str:
    return format(index, f"0{n}b") if n else ""


def is_unitary(m, tol=UNITARY_TOL) -> bool:
    m = np.asarray(m)
    return m.ndim == 2 and m.shape[0] == m.shape[1] and np.allclose(
        m.conj().T @ m, np.eye(m.shape[0]), atol=tol, rtol=0)


class StateVector:
    """Dense amplitudes of an ``n``-qubit register (big-endian indexing)."""

    __slots__ = ("n_qubits", "amplitudes")

    def __init__(self, amplitudes, n_qubits: int | None = None):
        amps = np.ascontiguousarray(amplitudes, dtype=complex).reshape(-1)
        if n_qubits is None:
            n_qubits = int(amps.size).bit_length() - 1
        if amps.size != 1 << n_qubits:
            raise SimulationError(
                f"amplitude array of length {amps.size} does not match {n_qubits} qubits")
        self.n_qubits = n_qubits
        self.amplitudes = amps

    @classmethod
    def zeros(cls, n: int) -> "StateVector":
        """All-zeros computational basis state |0...0>."""
        amps = np.zeros(1 << n, dtype=complex)
        amps[0] = 1.0
        return cls(amps, n)

    def copy(self) -> "StateVector":
        return StateVector(self.amplitudes.copy(), self.n_qubits)

    def norm(self) -> float:
        return float(np.linalg.norm(self.amplitudes))

    def probabilities(self):
        return np.abs(self.amplitudes) ** 2

    def tensor(self):
        return self.amplitudes.reshape((2,) * self.n_qubits)

    def nonzero(self, tol=1e-12):
        """``{pattern: amplitude}`` for entries with modulus above ``tol``."""
        idx = np.flatnonzero(np.abs(self.amplitudes) > tol)
        return {index_pattern(int(i), self.n_qubits): complex(self.amplitudes[i]) for i in idx}

    def __len__(self):
        return self.amplitudes.size

    def __repr__(self):
        return f"StateVector(n_qubits={self.n_qubits})"


def basis_state(n: int, pattern: str) -> StateVector:
    if len(pattern) != n:
        raise SimulationError(f"pattern {pattern!r} has length {len(pattern)}, expected {n}")
    amps = np.zeros(1 << n, dtype=complex)
    amps[pattern_index(pattern)] = 1.0
    return StateVector(amps, n)


@dataclass(frozen=True)
class Gate:
    """One circuit instruction.

    ``qubits`` lists the support.  For ``CNOT`` it is ``(control, target)``, for
    ``MCU`` it is ``(*controls, target)`` and for ``LocalUnitary`` it is the
    ordered support of ``matrix`` (first qubit is the most significant).
    """

    kind: str
    qubits: tuple
    theta: float | None = None
    matrix: np.ndarray | None = field(default=None, compare=False, repr=False)

    def __post_init__(self):
        if self.kind not in GATE_KINDS:
            raise SimulationError(f"unknown gate kind {self.kind!r}")
        qubits = tuple(int(q) for q in self.qubits)
        object.__setattr__(self, "qubits", qubits)
        if len(set(qubits)) != len(qubits):
            raise SimulationError(f"repeated qubit in {self.kind} gate: {qubits}")
        if any(q < 0 for q in qubits):
            raise SimulationError(f"negative qubit index in {qubits}")
        arity = {"CNOT": 2}.get(self.kind, 1 if self.kind in _SINGLE_QUBIT_KINDS else None)
        if arity is not None and len(qubits) != arity:
            raise SimulationError(f"{self.kind} acts on {arity} qubit(s), got {qubits}")
        if self.kind in ("RX", "RY", "RZ") and self.theta is None:
            raise SimulationError(f"{self.kind} needs an angle")
        if self.kind in ("MCU", "LocalUnitary"):
            if self.matrix is None:
                raise SimulationError(f"{self.kind} needs an explicit matrix")
            m = np.array(self.matrix, dtype=complex)
            dim = 2 if self.kind == "MCU" else 1 << len(qubits)
            if m.shape != (dim, dim):
                raise SimulationError(f"{self.kind} matrix must be {dim}x{dim}, got {m.shape}")
            if not is_unitary(m):
                raise SimulationError(f"{self.kind} matrix is not unitary")
            m.setflags(write=False)
            object.__setattr__(self, "matrix", m)

    @property
    def controls(self) -> tuple:
        if self.kind == "MCU":
            return self.qubits[:-1]
        if self.kind == "CNOT":
            return self.qubits[:1]
        return ()

    @property
    def target(self) -> int:
        return self.qubits[-1]

    def unitary(self) -> np.ndarray:
        """Matrix acting on the target (1q/MCU/CNOT) or on the whole support."""
        k = self.kind
        if k == "X" or k == "CNOT":
            return _X
        if k == "H":
            return _H
        if k == "RX":
            return rx(self.theta)
        if k == "RY":
            return ry(self.theta)
        if k == "RZ":
            return rz(self.theta)
        return self.matrix

    def to_dict(self) -> dict:
        d = {"kind": self.kind, "qubits": list(self.qubits)}
        if self.theta is not None:
            d["theta"] = float(self.theta)
        if self.matrix is not None:
            d["matrix"] = [[[float(z.real), float(z.imag)] for z in row] for row in self.matrix]
        return d

    @classmethod
    def from_dict(cls, d: dict) -> "Gate":
        matrix = d.get("matrix")
        if matrix is not None:
            matrix = np.array([[complex(re, im) for re, im in row] for row in matrix])
        return cls(d["kind"], tuple(d["qubits"]), d.get("theta"), matrix)


# convenience constructors
def X(q):
    return Gate("X", (q,))


def H(q):
    return Gate("H", (q,))


def RX(q, theta):
    return Gate("RX", (q,), float(theta))


def RY(q, theta):
    return Gate("RY", (q,), float(theta))


def RZ(q, theta):
    return Gate("RZ", (q,), float(theta))


def CNOT(control, target):
    return Gate("CNOT", (control, target))


def MCU(controls, target, matrix):
    return Gate("MCU", (*controls, target), matrix=matrix)


def LocalUnitary(qubits, matrix):
    return Gate("LocalUnitary", tuple(qubits), matrix=matrix)


class Circuit:
    """Ordered gate list on a fixed number of qubits."""

    def __init__(self, n_qubits: int, gates=()):
        self.n_qubits = int(n_qubits)
        self.gates: list[Gate] = []
        for g in gates:
            self.append(g)

    def append(self, gate: Gate) -> "Circuit":
        if max(gate.qubits) >= self.n_qubits:
            raise SimulationError(
                f"gate {gate.kind} on {gate.qubits} outside a {self.n_qubits}-qubit circuit")
        self.gates.append(gate)
        return self

    def extend(self, gates) -> "Circuit":
        for g in gates:
            self.append(g)
        return self

    def __add__(self, other: "Circuit") -> "Circuit":
        if other.n_qubits != self.n_qubits:
            raise SimulationError("cannot concatenate circuits of different widths")
        return Circuit(self.n_qubits, [*self.gates, *other.gates])

    def __len__(self):
        return len(self.gates)

    def __iter__(self):
        return iter(self.gates)

    def inverse(self) -> "Circuit":
        inv = Circuit(self.n_qubits)
        for g in reversed(self.gates):
            if g.kind in ("X", "H", "CNOT"):
                inv.append(g)
            elif g.kind in ("RX", "RY", "RZ"):
                inv.append(Gate(g.kind, g.qubits, -g.theta))
            else:
                inv.append(Gate(g.kind, g.qubits, matrix=g.matrix.conj().T))
        return inv

    def to_json(self) -> str:
        return json.dumps({"n_qubits": self.n_qubits,
                           "gates": [g.to_dict() for g in self.gates]})

    @classmethod
    def from_json(cls, text: str) -> "Circuit":
        doc = json.loads(text)
        return cls(doc["n_qubits"], [Gate.from_dict(g) for g in doc["gates"]])

    def __repr__(self):
        return f"Circuit(n_qubits={self.n_qubits}, gates={len(self.gates)})"


def _check_qubits(qubits, n):
    for q in qubits:
        if not 0 <= q < n:
            raise SimulationError(f"qubit {q} out of range for {n} qubits")


def apply_matrix(psi: np.ndarray, n: int, qubits, matrix) -> np.ndarray:
    """Apply a ``2**k`` square matrix on ``qubits`` of a flat amplitude array.

    Returns a new flat array.  ``qubits[0]`` is the most significant qubit of
    ``matrix``.
    """
    k = len(qubits)
    t = psi.reshape((2,) * n)
    t = np.moveaxis(t, qubits, range(k))
    shape = t.shape
    out = (np.asarray(matrix) @ t.reshape(1 << k, -1)).reshape(shape)
    return np.moveaxis(out, range(k), qubits).reshape(-1)


def _apply_controlled(psi, n, controls, target, matrix, inplace=False):
    out = psi if inplace else psi.copy()
    t = out.reshape((2,) * n)
    idx = [slice(None)] * n
    for c in controls:
        idx[c] = 1
    idx0, idx1 = list(idx), list(idx)
    idx0[target], idx1[target] = 0, 1
    idx0, idx1 = tuple(idx0), tuple(idx1)
    a0 = t[idx0].copy()
    a1 = t[idx1]
    m = matrix
    t[idx0] = m[0, 0] * a0 + m[0, 1] * a1
    t[idx1] = m[1, 0] * a0 + m[1, 1] * a1
    return out


def apply_gate(state: StateVector, g: Gate, inplace: bool = False) -> StateVector:
    """Return ``g`` applied to ``state`` (or mutate ``state`` when ``inplace``)."""
    n = state.n_qubits
    _check_qubits(g.qubits, n)
    psi = state.amplitudes
    if g.kind in ("CNOT", "MCU"):
        out = _apply_controlled(psi, n, g.controls, g.target, g.unitary(), inplace)
    elif g.kind == "LocalUnitary":
        out = apply_matrix(psi, n, g.qubits, g.matrix)
    else:
        out = _apply_controlled(psi, n, (), g.target, g.unitary(), inplace)
    if inplace:
        state.amplitudes[...] = out
        return state
    return StateVector(out, n)


def simulate(c: Circuit, init: StateVector | None = None, observer=None) -> StateVector:
    """Run ``c`` on ``init`` (default |0...0>).

    ``observer(index, state)`` is called before each gate when given; the state
    passed is a live view and must not be mutated.
    """
    if init is None:
        init = StateVector.zeros(c.n_qubits)
    if init.n_qubits != c.n_qubits:
        raise SimulationError(
            f"circuit has {c.n_qubits} qubits but initial state has {init.n_qubits}")
    state = init.copy()
    for i, g in enumerate(c.gates):
        if observer is not None:
            observer(i, state)
        apply_gate(state, g, inplace=True)
    return state


def overlap(a: StateVector, b: StateVector) -> complex:
    """<a|b>."""
    if a.n_qubits != b.n_qubits:
        raise SimulationError(f"overlap of {a.n_qubits}- and {b.n_qubits}-qubit states")
    return complex(np.vdot(a.amplitudes, b.amplitudes))


def fidelity(a: StateVector, b: StateVector) -> float:
    return abs(overlap(a, b)) ** 2


@dataclass(frozen=True)
class GateCounts:
    cnot: int = 0
    single_qubit: int = 0
    mcu_unexpanded: int = 0

    def __add__(self, other: "GateCounts") -> "GateCounts":
        return GateCounts(self.cnot + other.cnot,
                          self.single_qubit + other.single_qubit,
                          self.mcu_unexpanded + other.mcu_unexpanded)

    def as_dict(self):
        return {"cnot": self.cnot, "single_qubit": self.single_qubit,
                "mcu_unexpanded": self.mcu_unexpanded}


def count_gates(c: Circuit) -> GateCounts:
    """Exact tallies of the gates in ``c``.

    A one-control MCU whose matrix is X counts as a CNOT; an MCU with no
    controls counts as a single-qubit gate; every other MCU is left as
    ``mcu_unexpanded``.  LocalUnitary blocks are not counted.
    """
    cnot = single = mcu = 0
    for g in c.gates:
        if g.kind == "CNOT":
            cnot += 1
        elif g.kind in _SINGLE_QUBIT_KINDS:
            single += 1
        elif g.kind == "MCU":
            nc = len(g.controls)
            if nc == 0:
                single += 1
            elif nc == 1 and np.allclose(g.matrix, _X, atol=UNITARY_TOL):
                cnot += 1
            else:
                mcu += 1
    return GateCounts(cnot, single, mcu)


def circuit_unitary(c: Circuit) -> np.ndarray:
    """Full ``2**n`` unitary of ``c`` built column by column (small ``n`` only)."""
    dim = 1 << c.n_qubits
    cols = np.empty((dim, dim), dtype=complex)
    for j in range(dim):
        e = np.zeros(dim, dtype=complex)
        e[j] = 1.0
        cols[:, j] = simulate(c, StateVector(e, c.n_qubits)).amplitudes
    return cols


def equal_up_to_phase(a, b, atol=1e-10) -> bool:
    return phase_distance(a, b) <= atol


def phase_distance(a, b) -> float:
    """Max-entry distance between ``a`` and ``b`` after optimal global phase alignment."""
    a = np.asarray(a)
    b = np.asarray(b)
    inner = np.vdot(b.reshape(-1), a.reshape(-1))
    phase = inner / abs(inner) if abs(inner) > 0 else 1.0
    return float(np.max(np.abs(a - phase * b)))
