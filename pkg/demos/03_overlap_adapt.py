# coding: utf-8

# # Growing an ansatz by overlap
#
# Start from the Hartree-Fock pattern, pick the pool operator with the
# largest fidelity gradient, re-optimize every angle, and repeat until the
# infidelity is small enough.

import numpy as np

from sparseprep import adapt, targets

target = targets.synthetic_target(8, 24, 4, 0.0, decay=0.8, seed=3)
print(target.sparsity, targets.symmetry(target))
for rank, mag, cum in targets.spectrum(target)[:5]:
    print(rank, round(mag, 4), round(cum, 4))


config = adapt.AdaptConfig(pool="qeb", spin_adapted=True, epsilon=1e-3, max_iterations=40)
result = adapt.run(target, config,
                   callback=lambda r: print(r.iteration, r.op_id, round(r.fidelity, 5), r.cnot_cum))
print(result.status, result.fidelity)


# Screening scores at the final state: all small once converged.

psi = adapt.evaluate(result.ansatz)
top = adapt.screen(result.ansatz.pool, psi, target)[:3]
print([(op.id, round(s, 6)) for s, op in top])


# The analytic gradient uses one forward and one backward sweep.

th = result.ansatz.thetas
g = adapt.gradient(result.ansatz, th, target)
print("gradient norm at optimum", np.linalg.norm(g))


# The ansatz serializes to JSON and evaluates back to the same state.

text = result.ansatz.to_json("qeb", spin_adapted=True)
again = adapt.Ansatz.from_json(text)
print(round(abs(np.vdot(adapt.evaluate(again).amplitudes, psi.amplitudes)), 12))
