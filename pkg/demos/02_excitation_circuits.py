# coding: utf-8

# # Excitation circuits
#
# Pool operators act as exp(i theta G). The QEB ones have short fixed
# circuits: 3 CNOTs for a single excitation and 13 for a double.
# Pauli words use a basis change plus a CNOT ladder.

import numpy as np

from sparseprep import pools
from sparseprep.simcore import basis_state, circuit_unitary, count_gates, phase_distance, simulate

theta = 0.41

pool = pools.build_qeb_pool(4)
for op in pool:
    print(op.id, op.support, op.cnot, op.single_qubit)


# Compare each template against its closed-form exponential.

for op_id in ("S0_1", "D0_1_2_3"):
    op = pool[op_id]
    u = circuit_unitary(pools.template(op, theta))
    print(op_id, phase_distance(u, op.local_exp(theta)))


# A double excitation at theta = pi/2 swaps |1100> and |0011>.

out = simulate(pools.qeb_double_template(0, 1, 2, 3, np.pi / 2), basis_state(4, "1100"))
print(out.nonzero())


# Pauli-word exponentials: 2(w - 1) CNOTs for weight w.

for word in ("XY", "XYXX", "ZZZZZ"):
    c = pools.pauli_string_template(word, range(len(word)), theta)
    print(word, count_gates(c).cnot)


# The qubit pool is cheaper per operator but does not keep the particle
# number fixed.

qpool = pools.build_qubit_pool(4)
print(len(qpool), qpool.symmetry_tag)
state = simulate(pools.template(qpool["PX0Y1"], 0.3, n_qubits=4), basis_state(4, "1100"))
print(state.nonzero())
