"""Independent oracles shared by the test modules (Kronecker products, expm)."""
from functools import reduce

import numpy as np
import pytest

I2 = np.eye(2, dtype=complex)
PX = np.array([[0, 1], [1, 0]], dtype=complex)
PY = np.array([[0, -1j], [1j, 0]], dtype=complex)
PZ = np.diag([1.0, -1.0]).astype(complex)
HAD = np.array([[1, 1], [1, -1]], dtype=complex) / np.sqrt(2)
P0 = np.diag([1.0, 0.0]).astype(complex)
P1 = np.diag([0.0, 1.0]).astype(complex)


def kron_op(n, factors):
    """Full 2**n matrix with ``factors[q]`` on qubit q (qubit 0 most significant)."""
    return reduce(np.kron, [factors.get(q, I2) for q in range(n)])


def embed(n, qubits, local):
    """Brute-force embedding of a local matrix by summing over its matrix units."""
    k = len(qubits)
    full = np.zeros((1 << n, 1 << n), dtype=complex)
    for a in range(1 << k):
        for b in range(1 << k):
            if local[a, b] == 0:
                continue
            factors = {}
            for i, q in enumerate(qubits):
                ai = (a >> (k - 1 - i)) & 1
                bi = (b >> (k - 1 - i)) & 1
                unit = np.zeros((2, 2), dtype=complex)
                unit[ai, bi] = 1
                factors[q] = unit
            full += local[a, b] * kron_op(n, factors)
    return full


def cnot_matrix(n, c, t):
    return kron_op(n, {c: P0}) + kron_op(n, {c: P1, t: PX})


def random_state(rng, n):
    v = rng.normal(size=1 << n) + 1j * rng.normal(size=1 << n)
    return v / np.linalg.norm(v)


def random_unitary(rng, dim):
    z = rng.normal(size=(dim, dim)) + 1j * rng.normal(size=(dim, dim))
    q, r = np.linalg.qr(z)
    return q * (np.diag(r) / np.abs(np.diag(r)))


@pytest.fixture
def rng():
    return np.random.default_rng(1234)


ACCEPTANCE_LINES = {}


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE_LINES:
        return
    terminalreporter.section("acceptance criteria")
    for k in sorted(ACCEPTANCE_LINES):
        terminalreporter.write_line(ACCEPTANCE_LINES[k])
