import json

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from sparseprep.simcore import (CNOT, MCU, RX, RY, RZ, Circuit, Gate, GateCounts,
                                H, LocalUnitary, SimulationError, StateVector, X,
                                apply_gate, basis_state, circuit_unitary, count_gates,
                                overlap, phase_distance, simulate)
from sparseprep.pools import qeb_double_template, qeb_single_template

from conftest import HAD, PX, cnot_matrix, embed, kron_op, random_state, random_unitary


def rz_m(t):
    return np.diag([np.exp(-0.5j * t), np.exp(0.5j * t)])


def ry_m(t):
    return np.array([[np.cos(t / 2), -np.sin(t / 2)], [np.sin(t / 2), np.cos(t / 2)]])


@pytest.mark.parametrize("n, pattern, index", [(2, "00", 0), (2, "10", 2), (4, "1100", 12)])
def test_basis_state_big_endian(n, pattern, index):
    s = basis_state(n, pattern)
    expected = np.zeros(1 << n)
    expected[index] = 1
    assert np.array_equal(s.amplitudes, expected)


def test_basis_state_length_mismatch():
    with pytest.raises(SimulationError):
        basis_state(3, "10")


def test_x_and_h():
    out = apply_gate(basis_state(2, "00"), X(0))
    assert out.nonzero() == {"10": 1}
    plus = apply_gate(basis_state(1, "0"), H(0))
    assert np.allclose(plus.amplitudes, [2 ** -0.5, 2 ** -0.5], atol=1e-15)


def test_mcu_control_semantics():
    g = MCU((0, 1), 2, PX)
    assert apply_gate(basis_state(3, "110"), g).nonzero() == {"111": 1}
    assert apply_gate(basis_state(3, "100"), g).nonzero() == {"100": 1}


def test_non_unitary_matrix_rejected():
    with pytest.raises(SimulationError):
        LocalUnitary((0,), np.array([[1, 1], [0, 1]]))
    with pytest.raises(SimulationError):
        MCU((0,), 1, np.array([[2, 0], [0, 1]]))


def test_gate_qubit_validation():
    with pytest.raises(SimulationError):
        CNOT(1, 1)
    with pytest.raises(SimulationError):
        Circuit(2, [X(2)])
    with pytest.raises(SimulationError):
        apply_gate(basis_state(2, "00"), X(3))


def test_simulate_identities():
    init = basis_state(1, "0")
    assert np.array_equal(simulate(Circuit(1), init).amplitudes, init.amplitudes)
    assert simulate(Circuit(1, [X(0), X(0)]), init).nonzero() == {"0": 1}


def test_simulate_width_mismatch():
    with pytest.raises(SimulationError):
        simulate(Circuit(2), basis_state(3, "000"))


def test_single_excitation_circuit_at_zero_angle():
    # oracle: explicit product of the 3-CNOT circuit's gate matrices at theta = 0 on qubits (r, s) = (0, 1)
    seq = [kron_op(2, {0: rz_m(np.pi / 2)}), kron_op(2, {1: ry_m(-np.pi / 2)}),
           kron_op(2, {1: rz_m(-np.pi / 2)}), cnot_matrix(2, 0, 1),
           kron_op(2, {0: ry_m(0)}), kron_op(2, {1: rz_m(-np.pi / 2)}), cnot_matrix(2, 0, 1),
           kron_op(2, {0: ry_m(0)}), kron_op(2, {1: HAD}), cnot_matrix(2, 0, 1)]
    u = np.eye(4)
    for m in seq:
        u = m @ u
    e01 = np.array([0, 1, 0, 0])
    assert phase_distance(u @ e01, e01) < 1e-12
    out = simulate(qeb_single_template(0, 1, 0.0), basis_state(2, "01"))
    assert phase_distance(out.amplitudes, e01) < 1e-12


def test_overlap_examples():
    a = basis_state(2, "00")
    assert overlap(a, a) == 1
    assert overlap(a, basis_state(2, "11")) == 0
    plus = StateVector([2 ** -0.5, 2 ** -0.5])
    assert abs(overlap(basis_state(1, "0"), plus) - 2 ** -0.5) < 1e-15
    with pytest.raises(SimulationError):
        overlap(a, plus)


def test_count_gates_examples():
    assert count_gates(Circuit(2)) == GateCounts(0, 0, 0)
    single = count_gates(qeb_single_template(0, 1, 0.37))
    assert (single.cnot, single.single_qubit) == (3, 7)
    assert count_gates(qeb_double_template(0, 1, 2, 3, -1.2)).cnot == 13


def test_count_gates_mcu_rules():
    c = Circuit(3, [MCU((0,), 1, PX), MCU((0, 1), 2, PX), MCU((), 2, HAD),
                    MCU((0,), 2, ry_m(0.3))])
    assert count_gates(c) == GateCounts(cnot=1, single_qubit=1, mcu_unexpanded=2)


def _random_gate(rng, n):
    kind = rng.choice(["X", "H", "RX", "RY", "RZ", "CNOT", "MCU", "LU"])
    qs = [int(q) for q in rng.permutation(n)]
    t = float(rng.uniform(-3, 3))
    if kind == "X":
        return X(qs[0])
    if kind == "H":
        return H(qs[0])
    if kind in ("RX", "RY", "RZ"):
        return {"RX": RX, "RY": RY, "RZ": RZ}[kind](qs[0], t)
    if kind == "CNOT":
        return CNOT(qs[0], qs[1])
    if kind == "MCU":
        k = int(rng.integers(0, n))
        return MCU(qs[:k], qs[k], random_unitary(rng, 2))
    k = int(rng.integers(1, min(3, n) + 1))
    return LocalUnitary(qs[:k], random_unitary(rng, 1 << k))


def test_norm_preservation_and_linearity(rng):
    for _ in range(50):
        n = int(rng.integers(2, 7))
        g = _random_gate(rng, n)
        a, b = random_state(rng, n), random_state(rng, n)
        out = apply_gate(StateVector(a), g).amplitudes
        assert abs(np.linalg.norm(out) - 1) < 1e-12
        alpha, beta = 0.3 - 0.2j, 1.1 + 0.4j
        lhs = apply_gate(StateVector(alpha * a + beta * b), g).amplitudes
        rhs = alpha * out + beta * apply_gate(StateVector(b), g).amplitudes
        assert np.max(np.abs(lhs - rhs)) < 1e-12


@settings(max_examples=60, deadline=None)
@given(st.integers(1, 6).flatmap(
    lambda n: st.tuples(st.just(n),
                        st.permutations(range(n)).flatmap(
                            lambda p: st.integers(1, min(3, n)).map(lambda k: tuple(p[:k]))),
                        st.integers(0, 2 ** 32 - 1))))
def test_local_unitary_matches_kronecker_oracle(case):
    n, qubits, seed = case
    rng = np.random.default_rng(seed)
    u = random_unitary(rng, 1 << len(qubits))
    psi = random_state(rng, n)
    fast = apply_gate(StateVector(psi), LocalUnitary(qubits, u)).amplitudes
    assert np.max(np.abs(fast - embed(n, qubits, u) @ psi)) < 1e-12


def test_mcu_matches_projector_oracle(rng):
    n = 5
    u = random_unitary(rng, 2)
    controls, target = (0, 3), 2
    full = np.eye(1 << n) - kron_op(n, {0: np.diag([0, 1]), 3: np.diag([0, 1])})
    full = full + kron_op(n, {0: np.diag([0, 1]), 3: np.diag([0, 1]), 2: u})
    psi = random_state(rng, n)
    out = apply_gate(StateVector(psi), MCU(controls, target, u)).amplitudes
    assert np.max(np.abs(out - full @ psi)) < 1e-12


def test_count_additivity(rng):
    gates = [_random_gate(rng, 4) for _ in range(40)]
    c1, c2 = Circuit(4, gates[:17]), Circuit(4, gates[17:])
    assert count_gates(c1 + c2) == count_gates(c1) + count_gates(c2)


def test_inverse_circuit(rng):
    c = Circuit(3, [_random_gate(rng, 3) for _ in range(25)])
    u = circuit_unitary(c + c.inverse())
    assert phase_distance(u, np.eye(8)) < 1e-12


def test_circuit_json_roundtrip_and_field_order(rng):
    c = Circuit(3, [X(0), RY(1, 0.25), CNOT(0, 2), MCU((0, 1), 2, PX),
                    LocalUnitary((2, 0), random_unitary(rng, 4))])
    doc = json.loads(c.to_json())
    assert list(doc) == ["n_qubits", "gates"]
    assert list(doc["gates"][1]) == ["kind", "qubits", "theta"]
    assert doc["gates"][3]["matrix"][0] == [[0.0, 0.0], [1.0, 0.0]]
    back = Circuit.from_json(c.to_json())
    assert back.to_json() == c.to_json()
    assert phase_distance(circuit_unitary(back), circuit_unitary(c)) < 1e-15


def test_observer_sees_state_before_each_gate():
    seen = []
    simulate(Circuit(1, [X(0), H(0)]), observer=lambda i, s: seen.append((i, s.nonzero())))
    assert seen == [(0, {"0": 1}), (1, {"1": 1})]
