"""
Operator pools for adaptive ansatz growth.

Two pools are provided:

* QEB (qubit-excitation-based): single generators
  ``G_pq = (X_q Y_p - X_p Y_q) / 2`` and double generators built from the
  eight-term Pauli sum coupling the pair ``(p, q)`` with the pair ``(r, s)``.
  Both satisfy ``G^3 = G`` so ``exp(i t G) = I + i sin(t) G + (cos(t) - 1) G^2``.
* Qubit (hardware-efficient): every Pauli word of the decomposed single and
  double excitations as its own element; ``G^2 = I``.

Every pool unitary is ``exp(i theta G)`` with Hermitian ``G`` on the operator
support; support order is also the qubit order of the local matrix.
"""
from __future__ import annotations

import json
from dataclasses import dataclass, field
from functools import reduce
from itertools import combinations

import numpy as np

from .simcore import (CNOT, PAULI, RX, RY, RZ, Circuit, H, LocalUnitary, X,
                      count_gates)

QEB_SINGLE = "qeb_single"
QEB_DOUBLE = "qeb_double"
QUBIT_STRING = "qubit_string"

PARTICLE_AND_SZ = "particle_and_sz_preserving"
PARTICLE_ONLY = "particle_preserving"
NO_SYMMETRY = "none"

# Calibrated once against the closed-form exponentials: the standard
# excitation circuits rotate by half their nominal angle, and the
# double-excitation circuit turns the opposite way.  template(theta) == exp(i theta G) up to global phase.
SINGLE_TEMPLATE_ANGLE = 2.0
DOUBLE_TEMPLATE_ANGLE = -2.0

# A_pqrs / B^(i)_pqrs terms as (sign, letters for r, s, p, q).
_DOUBLE_TERMS = (
    (+1, "XYXX"), (+1, "YXXX"), (+1, "YYYX"), (+1, "YYXY"),
    (-1, "XXYX"), (-1, "XXXY"), (-1, "YXYY"), (-1, "XYYY"),
)


class PoolError(ValueError):
    pass


def pauli_matrix(word: str) -> np.ndarray:
    """Kronecker product of single-qubit Paulis, first letter most significant."""
    return reduce(np.kron, (PAULI[c] for c in word))


@dataclass(frozen=True, eq=False)
class PoolOperator:
    id: str
    kind: str
    support: tuple
    generator: np.ndarray = field(repr=False)
    pauli_label: str | None = None
    cnot: int = 0
    single_qubit: int = 0

    def __post_init__(self):
        g = np.array(self.generator, dtype=complex)
        g.setflags(write=False)
        object.__setattr__(self, "generator", g)
        g2 = g @ g
        g2.setflags(write=False)
        object.__setattr__(self, "_g2", g2)

    @property
    def generator_squared(self) -> np.ndarray:
        return self._g2

    def local_exp(self, theta: float) -> np.ndarray:
        """``exp(i theta G)`` as a dense local matrix."""
        c, s = np.cos(theta), np.sin(theta)
        if self.kind == QUBIT_STRING:
            return c * np.eye(len(self.generator)) + 1j * s * self.generator
        return np.eye(len(self.generator)) + 1j * s * self.generator + (c - 1.0) * self._g2

    def describe(self) -> dict:
        d = {"id": self.id, "kind": self.kind, "support": list(self.support)}
        if self.pauli_label is not None:
            d["pauli_label"] = self.pauli_label
        return d


@dataclass
class Pool:
    operators: list
    symmetry_tag: str
    n_qubits: int

    def __post_init__(self):
        self._index = {op.id: i for i, op in enumerate(self.operators)}
        if len(self._index) != len(self.operators):
            raise PoolError("pool operator ids must be unique")
        for op in self.operators:
            if max(op.support) >= self.n_qubits:
                raise PoolError(f"operator {op.id} exceeds {self.n_qubits} qubits")

    def __len__(self):
        return len(self.operators)

    def __iter__(self):
        return iter(self.operators)

    def __getitem__(self, op_id: str) -> PoolOperator:
        try:
            return self.operators[self._index[op_id]]
        except KeyError:
            raise PoolError(f"unknown pool operator {op_id!r}") from None

    def __contains__(self, op_id):
        return op_id in self._index

    def position(self, op_id: str) -> int:
        return self._index[op_id]

    def to_json(self) -> str:
        return json.dumps({"n_qubits": self.n_qubits, "symmetry_tag": self.symmetry_tag,
                           "operators": [op.describe() for op in self.operators]})


def _letters_to_word(support, letters: dict) -> str:
    return "".join(letters[q] for q in support)


def qeb_single_generator() -> np.ndarray:
    """Local 4x4 generator on support ``(p, q)``."""
    return 0.5 * (pauli_matrix("YX") - pauli_matrix("XY"))


def qeb_double_generator() -> np.ndarray:
    """Local 16x16 generator on support ``(p, q, r, s)``; couples |1100> and |0011>."""
    g = np.zeros((16, 16), dtype=complex)
    for sign, (lr, ls, lp, lq) in _DOUBLE_TERMS:
        g += sign * pauli_matrix(lp + lq + lr + ls)
    return g / 8


def _spin_conserving_single(p, q):
    return p % 2 == q % 2


def _spin_conserving_double(p, q, r, s):
    return sorted((p % 2, q % 2)) == sorted((r % 2, s % 2))


def _pair_partitions(quad):
    a, b, c, d = quad
    return (((a, b), (c, d)), ((a, c), (b, d)), ((a, d), (b, c)))


def _template_counts(template):
    counts = count_gates(template)
    return counts.cnot, counts.single_qubit


def build_qeb_pool(n: int, spin_adapted: bool = False) -> Pool:
    """All QEB single and double excitations on ``n`` qubits.

    With ``spin_adapted`` the supports are restricted to excitations that keep
    ``S_z`` fixed under interleaved alpha/beta ordering (even qubits alpha).
    """
    if n < 2:
        raise PoolError("a QEB pool needs at least 2 qubits")
    g1, g2 = qeb_single_generator(), qeb_double_generator()
    c1, s1 = _template_counts(qeb_single_template(0, 1, 0.3))
    c2, s2 = _template_counts(qeb_double_template(0, 1, 2, 3, 0.3))
    ops = []
    for p, q in combinations(range(n), 2):
        if spin_adapted and not _spin_conserving_single(p, q):
            continue
        ops.append(PoolOperator(f"S{p}_{q}", QEB_SINGLE, (p, q), g1, cnot=c1, single_qubit=s1))
    for quad in combinations(range(n), 4):
        for (p, q), (r, s) in _pair_partitions(quad):
            if spin_adapted and not _spin_conserving_double(p, q, r, s):
                continue
            ops.append(PoolOperator(f"D{p}_{q}_{r}_{s}", QEB_DOUBLE, (p, q, r, s), g2,
                                    cnot=c2, single_qubit=s2))
    ops.sort(key=lambda op: (op.support, op.kind, op.id))
    return Pool(ops, PARTICLE_AND_SZ if spin_adapted else PARTICLE_ONLY, n)


def _string_operator(support, word):
    label = "".join(f"{c}{q}" for c, q in zip(word, support))
    cnot, single = _template_counts(pauli_string_template(word, support, 0.3))
    return PoolOperator(f"P{label}", QUBIT_STRING, tuple(support), pauli_matrix(word),
                        pauli_label=label, cnot=cnot, single_qubit=single)


def build_qubit_pool(n: int) -> Pool:
    """Hardware-efficient pool: ``X_q Y_p`` for ordered pairs and the eight
    decomposed double-excitation strings for every four-qubit subset.

    Different pairings of one subset produce the same eight words, so doubles
    are deduplicated by word.
    """
    if n < 2:
        raise PoolError("a qubit pool needs at least 2 qubits")
    ops = {}
    for p, q in combinations(range(n), 2):
        for a, b in ((p, q), (q, p)):
            word = _letters_to_word((p, q), {a: "Y", b: "X"})
            ops.setdefault(((p, q), word), (p, q))
    for quad in combinations(range(n), 4):
        for (p, q), (r, s) in _pair_partitions(quad):
            for _, (lr, ls, lp, lq) in _DOUBLE_TERMS:
                word = _letters_to_word(quad, {p: lp, q: lq, r: lr, s: ls})
                ops.setdefault((quad, word), quad)
    pool = [_string_operator(support, word) for (support, word) in sorted(ops)]
    pool.sort(key=lambda op: (op.support, op.kind, op.id))
    return Pool(pool, NO_SYMMETRY, n)


def build_pool(kind: str, n: int, spin_adapted: bool = False) -> Pool:
    if kind == "qeb":
        return build_qeb_pool(n, spin_adapted=spin_adapted)
    if kind == "qubit":
        return build_qubit_pool(n)
    raise PoolError(f"unknown pool kind {kind!r} (expected 'qeb' or 'qubit')")


def exponential(op: PoolOperator, theta: float):
    """``exp(i theta G)`` on the operator support as a LocalUnitary gate."""
    return LocalUnitary(op.support, op.local_exp(theta))


def qeb_single_template(p, q, theta, n_qubits=None) -> Circuit:
    """3-CNOT circuit equal to ``exp(i theta G_pq)`` up to global phase."""
    if p == q:
        raise PoolError("single excitation needs two distinct qubits")
    n = max(p, q) + 1 if n_qubits is None else n_qubits
    phi = SINGLE_TEMPLATE_ANGLE * theta
    r, s = p, q
    return Circuit(n, [
        RZ(r, np.pi / 2), RY(s, -np.pi / 2), RZ(s, -np.pi / 2),
        CNOT(r, s),
        RY(r, phi / 2), RZ(s, -np.pi / 2),
        CNOT(r, s),
        RY(r, -phi / 2), H(s),
        CNOT(r, s),
    ])


def qeb_double_template(p, q, r, s, theta, n_qubits=None) -> Circuit:
    """13-CNOT circuit equal to ``exp(i theta G_pqrs)`` up to global phase.

    The final ``RY`` on ``q`` is ``+pi/2``: with ``-pi/2`` the circuit is not
    an excitation unitary.
    """
    if len({p, q, r, s}) != 4:
        raise PoolError("double excitation needs four distinct qubits")
    n = max(p, q, r, s) + 1 if n_qubits is None else n_qubits
    a = DOUBLE_TEMPLATE_ANGLE * theta / 8
    return Circuit(n, [
        CNOT(r, s), CNOT(q, p),
        X(s), X(p),
        CNOT(r, q),
        RY(r, a), H(s),
        CNOT(r, s),
        RY(r, -a), H(p),
        CNOT(r, p),
        RY(r, a),
        CNOT(r, s),
        RY(r, -a), H(q),
        CNOT(r, q),
        RY(r, a),
        CNOT(r, s),
        RY(r, -a),
        CNOT(r, p),
        RY(r, a), H(p),
        CNOT(r, s),
        RY(r, -a), H(s), RZ(q, -np.pi / 2),
        CNOT(r, q),
        RZ(r, np.pi / 2), RZ(q, -np.pi / 2),
        X(s), RY(q, np.pi / 2), X(p),
        CNOT(r, s), CNOT(q, p),
    ])


def pauli_string_template(word: str, support, theta, n_qubits=None) -> Circuit:
    """Basis change, CNOT ladder, ``RZ(-2 theta)``, and the mirror image.

    Equals ``exp(i theta P)`` for the Pauli word ``P`` on ``support``.
    """
    support = tuple(support)
    if len(word) != len(support):
        raise PoolError(f"word {word!r} does not match support {support}")
    if set(word) - set("XYZ"):
        raise PoolError(f"word {word!r} must use only X, Y, Z (no identities)")
    if not word:
        raise PoolError("identity word has no circuit")
    n = max(support) + 1 if n_qubits is None else n_qubits
    pre, post = [], []
    for c, qb in zip(word, support):
        if c == "X":
            pre.append(H(qb))
            post.append(H(qb))
        elif c == "Y":
            pre.append(RX(qb, np.pi / 2))
            post.append(RX(qb, -np.pi / 2))
    ladder = [CNOT(a, b) for a, b in zip(support, support[1:])]
    return Circuit(n, [*pre, *ladder, RZ(support[-1], -2.0 * theta),
                       *reversed(ladder), *post])


def template(op: PoolOperator, theta, n_qubits=None) -> Circuit:
    """Gate-level circuit for ``exp(i theta G)`` of any pool operator."""
    if op.kind == QEB_SINGLE:
        return qeb_single_template(*op.support, theta, n_qubits)
    if op.kind == QEB_DOUBLE:
        return qeb_double_template(*op.support, theta, n_qubits)
    word = "".join(c for c in op.pauli_label if c.isalpha())
    return pauli_string_template(word, op.support, theta, n_qubits)
