"""
Exact sparse-state loading with one ancilla (CVO-QRAM).

Patterns are loaded one at a time.  Before pattern ``k`` the register holds
``sum_{j<k} x_j |p_j>|0>_a + sqrt(gamma_k) |0...0>|1>_a`` where ``gamma_k`` is
the squared amplitude still to be loaded.  The ancilla-1 branch is copied onto
``p_k`` with CNOTs, a ``t``-controlled ``U(x_k, gamma_k)`` splits off
``x_k |p_k>`` and the CNOTs are undone (except after the last pattern).

Patterns must be loaded by non-decreasing Hamming weight: a pattern loaded
earlier then never has ones at all control positions of a later one, so the
multi-controlled rotation only fires on the ancilla-1 branch.
"""
from __future__ import annotations

from collections import Counter
from dataclasses import dataclass
from functools import total_ordering

import numpy as np

from .simcore import CNOT, MCU, Circuit, StateVector, X, count_gates, simulate
from .targets import SparseState

NORM_INPUT_TOL = 1e-6


class LoaderError(ValueError):
    pass


class DegenerateStepError(LoaderError):
    """Nothing left to load (gamma <= 0) at a step that still has data."""


@dataclass(frozen=True)
class LoadPlan:
    n_qubits: int
    patterns: tuple          # (bit pattern, amplitude) in load order
    gammas: tuple            # remaining squared amplitude before each step; len M + 1
    weights: tuple           # Hamming weight t of each pattern
    positions: tuple         # indices of the 1-bits of each pattern
    sorted_by_weight: bool = True

    @property
    def M(self) -> int:
        return len(self.patterns)

    @property
    def t_max(self) -> int:
        return max(self.weights) if self.weights else 0

    def mu(self) -> dict:
        """Number of patterns per Hamming weight."""
        return dict(sorted(Counter(self.weights).items()))


def _as_pairs(data):
    if isinstance(data, SparseState):
        return data.n_qubits, list(data.entries)
    pairs = [(str(p), complex(x)) for p, x in data]
    if not pairs:
        raise LoaderError("nothing to load")
    return len(pairs[0][0]), pairs


@total_ordering
class _CountingKey:
    __slots__ = ("key", "tally")

    def __init__(self, key, tally):
        self.key = key
        self.tally = tally

    def __eq__(self, other):
        return self.key == other.key

    def __lt__(self, other):
        self.tally[0] += 1
        return self.key < other.key


def _load_key(pattern):
    return (pattern.count("1"), pattern)


def preprocess(data, renormalize: bool = False, sort: bool = True, _tally=None) -> LoadPlan:
    """Order patterns by (Hamming weight, pattern) and tabulate gamma, t, l.

    ``data`` is a SparseState or an iterable of ``(pattern, amplitude)``.
    ``sort=False`` keeps the given order (only useful to show why sorting is
    needed).
    """
    n, pairs = _as_pairs(data)
    if not pairs:
        raise LoaderError("nothing to load")
    seen = set()
    for p, _ in pairs:
        if len(p) != n or set(p) - {"0", "1"}:
            raise LoaderError(f"pattern {p!r} is not a {n}-bit string")
        if p in seen:
            raise LoaderError(f"duplicate pattern {p!r}")
        seen.add(p)
    amps = np.array([x for _, x in pairs], dtype=complex)
    norm2 = float(np.sum(np.abs(amps) ** 2))
    if norm2 == 0:
        raise LoaderError("all amplitudes are zero")
    if abs(norm2 - 1.0) > NORM_INPUT_TOL and not renormalize:
        raise LoaderError(f"input squared norm {norm2:.9f} deviates from 1 by more than "
                          f"{NORM_INPUT_TOL:g}; pass renormalize=True to rescale")
    amps = amps / np.sqrt(norm2)
    pairs = [(p, complex(a)) for (p, _), a in zip(pairs, amps)]
    if sort:
        if _tally is None:
            pairs.sort(key=lambda e: _load_key(e[0]))
        else:
            pairs.sort(key=lambda e: _CountingKey(_load_key(e[0]), _tally))
    weights, positions = [], []
    for p, _ in pairs:
        pos = tuple(i for i, c in enumerate(p) if c == "1")
        positions.append(pos)
        weights.append(len(pos))
    sq = np.abs(np.array([x for _, x in pairs])) ** 2
    # suffix sums: gamma_k = sum_{j >= k} |x_j|^2, so gamma_{k+1} = gamma_k - |x_k|^2
    gammas = np.concatenate([np.cumsum(sq[::-1])[::-1], [0.0]])
    return LoadPlan(n, tuple(pairs), tuple(float(g) for g in gammas), tuple(weights),
                    tuple(positions), sorted_by_weight=sort)


def u_matrix(x: complex, gamma: float, rest: float | None = None) -> np.ndarray:
    """Unitary with ``U|1> = (x|0> + sqrt(gamma - |x|^2)|1>) / sqrt(gamma)``.

    ``rest`` may supply ``gamma - |x|^2`` when the caller already holds it
    (the next gamma of a plan); this keeps round-off from leaking into the
    ancilla-1 branch.
    """
    if gamma <= 0:
        raise DegenerateStepError(f"remaining weight gamma={gamma} must be positive")
    x = complex(x)
    if abs(x) ** 2 > gamma + 1e-12:
        raise LoaderError(f"|x|^2={abs(x) ** 2} exceeds remaining weight {gamma}")
    if rest is None:
        rest = gamma - abs(x) ** 2
    a = np.sqrt(max(rest, 0.0))
    return np.array([[a, x], [-x.conjugate(), a]], dtype=complex) / np.sqrt(gamma)


def compile(plan: LoadPlan) -> Circuit:
    """Loader circuit on ``n + 1`` qubits; the ancilla is the last qubit."""
    n = plan.n_qubits
    anc = n
    c = Circuit(n + 1, [X(anc)])
    last = plan.M - 1
    for k, ((_, x), pos) in enumerate(zip(plan.patterns, plan.positions)):
        c.extend(CNOT(anc, q) for q in pos)
        c.append(MCU(pos, anc, u_matrix(x, plan.gammas[k], plan.gammas[k + 1])))
        if k != last:
            c.extend(CNOT(anc, q) for q in pos)
    return c


def step_starts(plan: LoadPlan) -> list:
    """Gate index at which each pattern starts loading, plus the circuit length."""
    starts, g = [], 1
    for k, t in enumerate(plan.weights):
        starts.append(g)
        g += t + 1 + (t if k != plan.M - 1 else 0)
    return starts + [g]


def expected_state(plan: LoadPlan, k: int) -> np.ndarray:
    """Amplitudes the invariant prescribes right before loading pattern ``k``."""
    n = plan.n_qubits
    psi = np.zeros((1 << n, 2), dtype=complex)
    for p, x in plan.patterns[:k]:
        psi[int(p, 2), 0] += x
    psi[0, 1] += np.sqrt(max(plan.gammas[k], 0.0))
    return psi.reshape(-1)


def check_invariant(plan: LoadPlan, k: int, state: StateVector) -> float:
    """Max amplitude deviation from the loop invariant before step ``k``.

    ``k == M`` checks the finished state (all patterns on ancilla 0, nothing
    left on ancilla 1).
    """
    return float(np.max(np.abs(state.amplitudes - expected_state(plan, k))))


def instrumented_run(plan: LoadPlan, circuit: Circuit | None = None):
    """Simulate the loader and return the invariant deviation at every step
    ``k = 0..M`` together with the final state."""
    circuit = compile(plan) if circuit is None else circuit
    starts = step_starts(plan)
    wanted = {g: k for k, g in enumerate(starts[:-1])}
    deviations = [None] * (plan.M + 1)

    def observe(i, state):
        k = wanted.get(i)
        if k is not None:
            deviations[k] = check_invariant(plan, k, state)

    final = simulate(circuit, observer=observe)
    deviations[plan.M] = check_invariant(plan, plan.M, final)
    return deviations, final


def register_state(final: StateVector):
    """Split a loader output into (register amplitudes on ancilla 0, ancilla-1 weight)."""
    psi = final.amplitudes.reshape(-1, 2)
    return psi[:, 0].copy(), float(np.sum(np.abs(psi[:, 1]) ** 2))


def verify(plan: LoadPlan, circuit: Circuit | None = None):
    """(fidelity of the register with the target, ancilla-1 weight)."""
    circuit = compile(plan) if circuit is None else circuit
    reg, anc_weight = register_state(simulate(circuit))
    target = np.zeros(1 << plan.n_qubits, dtype=complex)
    for p, x in plan.patterns:
        target[int(p, 2)] = x
    return abs(np.vdot(target, reg)) ** 2, anc_weight


def cnot_count(plan: LoadPlan) -> int:
    """``sum_{t>=1} mu_t (8t - 4) - t_max``."""
    mu = plan.mu()
    return sum(m * (8 * t - 4) for t, m in mu.items() if t >= 1) - plan.t_max


def mcu_cnot_share(n_controls: int) -> int:
    """CNOTs charged to one ``C^t U``: the formula's ``8t - 4`` less the ``2t``
    explicit CNOTs around it."""
    return 6 * n_controls - 4 if n_controls >= 1 else 0


def accounted_cnots(circuit: Circuit) -> int:
    """Explicit CNOTs plus the formula share of every multi-controlled U."""
    share = sum(mcu_cnot_share(len(g.controls)) for g in circuit if g.kind == "MCU")
    return count_gates(circuit).cnot + share


def counts_report(plan: LoadPlan, circuit: Circuit | None = None) -> dict:
    circuit = compile(plan) if circuit is None else circuit
    counts = count_gates(circuit)
    return {
        "cnot_formula": cnot_count(plan),
        "single_qubit_emitted": counts.single_qubit,
        "mcu_unexpanded": counts.mcu_unexpanded,
        "M": plan.M,
        "n": plan.n_qubits,
        "mu_histogram": {str(t): m for t, m in plan.mu().items()},
    }


def classical_cost(data) -> dict:
    """Operation tallies of preprocessing: sort comparisons and bit scans.

    ``work = comparisons + n * M``, the two terms of ``O(M log M + n M)``.
    """
    tally = [0]
    plan = preprocess(data, renormalize=True, _tally=tally)
    scans = plan.n_qubits * plan.M
    return {"comparisons": tally[0], "bit_scans": scans, "work": tally[0] + scans,
            "M": plan.M, "n": plan.n_qubits}


def prepare(target, renormalize: bool = False):
    """Convenience: ``(plan, circuit)`` for a target."""
    plan = preprocess(target, renormalize=renormalize)
    return plan, compile(plan)
