# coding: utf-8

# # Exact loading vs adaptive growth
#
# For each target fidelity F*, the loader prepares the smallest truncation
# with kept weight >= F*, and ADAPT uses the first iteration reaching F*.
# Both report CNOT counts. The exact fixed-sector ansatz bound is printed
# for scale.

from sparseprep import adapt, targets
from sparseprep.cli import frontier, frontier_csv

grid = [0.5, 0.8, 0.95]

target = targets.synthetic_target(12, 128, 6, 0.0, decay=0.85, seed=0)
config = adapt.AdaptConfig(pool="qeb", spin_adapted=True, epsilon=1 - max(grid), max_iterations=200)
print(frontier_csv(frontier(target, grid, config)))
print("symmetry-preserving bound", targets.esp_cnot_bound(6, 3, 3))


# Transverse-field Ising chain, exact ground state, qubit pool from |0...0>.

ham = targets.transverse_field_ising(8, coupling=1.0, field=0.7)
ising = targets.ground_state(ham)
print("energy", ising.metadata["energy"], "sparsity", ising.sparsity)
config = adapt.AdaptConfig(pool="qubit", epsilon=1 - max(grid), max_iterations=200)
print(frontier_csv(frontier(ising, grid, config)))


# Truncation alone: how many patterns each fidelity needs.

for f in grid:
    sub, kept = targets.truncate(ising, fidelity=f)
    print(f, sub.sparsity, round(kept, 4))
