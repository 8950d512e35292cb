"""Sparse quantum state preparation on a dense state-vector simulator.

Two routes are offered: an exact one-ancilla loader (:mod:`sparseprep.cvoqram`)
and adaptive variational growth maximizing the overlap with the target
(:mod:`sparseprep.adapt`), plus the pools, targets and simulator they share.
"""
from .simcore import (Circuit, Gate, GateCounts, StateVector, apply_gate, basis_state,
                      count_gates, fidelity, overlap, simulate)
from .targets import (PauliSumHamiltonian, SparseState, encode_determinant, esp_cnot_bound,
                      ground_state, hartree_fock, spectrum, symmetry, synthetic_target,
                      transverse_field_ising, truncate)
from .pools import build_pool, build_qeb_pool, build_qubit_pool, exponential
from .adapt import AdaptConfig, Ansatz, run as run_adapt
from . import cvoqram

__version__ = "0.1.0"
