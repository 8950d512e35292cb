"""
Overlap-ADAPT-VQE: greedy growth of ``prod_k exp(i theta_k G_k)`` applied to a
reference state so as to maximize the fidelity ``F = |<psi(theta)|T>|^2``.

Each iteration screens the pool with the first-order fidelity gradient of
appending an operator at ``theta = 0``, appends the best one and re-optimizes
every angle with BFGS.  The new angle starts at zero, so the optimizer starts
at the previous optimum; the best point seen is kept, which makes the
fidelity sequence non-decreasing.
"""
from __future__ import annotations

import csv
import io
import json
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field, asdict

import numpy as np
from scipy.optimize import minimize

from .pools import Pool, build_pool
from .simcore import StateVector, apply_matrix, basis_state
from .targets import SparseState, hartree_fock

ZERO_OVERLAP_TOL = 1e-14
STALL_SCORE = 1e-14

CONVERGED = "converged"
MAX_ITERATIONS = "max-iterations"
GRADIENT_STALL = "gradient-stall"

TRACE_HEADER = ["iteration", "op_id", "score", "fidelity", "cnot_cum",
                "single_qubit_cum", "seconds"]


class AdaptError(ValueError):
    pass


@dataclass
class AdaptConfig:
    pool: str = "qeb"
    epsilon: float = 1e-3
    max_iterations: int = 100
    gtol: float = 1e-8
    max_evaluations: int = 2000
    seed: int = 0
    spin_adapted: bool = False
    restart_amplitude: float = 0.1
    workers: int = 1

    def __post_init__(self):
        if not self.epsilon > 0:
            raise AdaptError("epsilon must be positive")
        if self.max_iterations < 1:
            raise AdaptError("max_iterations must be at least 1")

    @classmethod
    def from_dict(cls, d: dict) -> "AdaptConfig":
        known = {k: v for k, v in d.items() if k in cls.__dataclass_fields__}
        return cls(**known)


@dataclass
class Ansatz:
    """Reference state plus an ordered list of ``(operator id, theta)``."""

    pool: Pool
    initial_state: StateVector
    steps: list = field(default_factory=list)
    initial_state_ref: str | None = None

    @property
    def op_ids(self):
        return [op_id for op_id, _ in self.steps]

    @property
    def thetas(self) -> np.ndarray:
        return np.array([t for _, t in self.steps], dtype=float)

    def operators(self):
        return [self.pool[op_id] for op_id in self.op_ids]

    def with_thetas(self, thetas) -> "Ansatz":
        return Ansatz(self.pool, self.initial_state,
                      [(i, float(t)) for i, t in zip(self.op_ids, thetas)],
                      self.initial_state_ref)

    def gate_counts(self):
        ops = self.operators()
        return sum(op.cnot for op in ops), sum(op.single_qubit for op in ops)

    def to_json(self, pool_kind: str | None = None, spin_adapted: bool | None = None) -> str:
        doc = {"n_qubits": self.initial_state.n_qubits,
               "initial_state_ref": self.initial_state_ref}
        if pool_kind is not None:
            doc["pool"] = {"kind": pool_kind, "spin_adapted": bool(spin_adapted)}
        doc["steps"] = [{"op_id": i, "theta": float(t)} for i, t in self.steps]
        return json.dumps(doc, indent=1)

    @classmethod
    def from_json(cls, text: str, pool: Pool | None = None) -> "Ansatz":
        doc = json.loads(text)
        if pool is None:
            pool_doc = doc.get("pool") or {}
            pool = build_pool(pool_doc.get("kind", "qeb"), doc["n_qubits"],
                              spin_adapted=pool_doc.get("spin_adapted", False))
        ref = doc.get("initial_state_ref")
        init = initial_from_ref(ref, doc["n_qubits"])
        steps = [(s["op_id"], float(s["theta"])) for s in doc["steps"]]
        for op_id, _ in steps:
            pool[op_id]
        return cls(pool, init, steps, ref)


def initial_from_ref(ref: str | None, n: int) -> StateVector:
    """``"basis:<pattern>"`` (or a bare pattern) to a basis state."""
    if ref is None:
        return basis_state(n, "0" * n)
    pattern = ref.split(":", 1)[1] if ":" in ref else ref
    return basis_state(n, pattern)


def _apply_op(psi, n, op, matrix):
    return apply_matrix(psi, n, op.support, matrix)


def evaluate(ansatz: Ansatz, thetas=None) -> StateVector:
    """Reference state transformed by ``exp(i theta_1 G_1)`` first, then the rest in order."""
    thetas = ansatz.thetas if thetas is None else np.asarray(thetas, dtype=float)
    if len(thetas) != len(ansatz.steps):
        raise AdaptError(f"{len(thetas)} angles for {len(ansatz.steps)} steps")
    n = ansatz.initial_state.n_qubits
    psi = ansatz.initial_state.amplitudes
    for op, t in zip(ansatz.operators(), thetas):
        psi = _apply_op(psi, n, op, op.local_exp(t))
    return StateVector(psi, n)


def _target_vector(target, n=None) -> np.ndarray:
    if isinstance(target, SparseState):
        return target.to_statevector().amplitudes
    if isinstance(target, StateVector):
        return target.amplitudes
    return np.asarray(target, dtype=complex)


def objective(ansatz: Ansatz, thetas, target) -> float:
    """Fidelity ``|<psi(theta)|T>|^2``."""
    t = _target_vector(target)
    return min(1.0, float(abs(np.vdot(t, evaluate(ansatz, thetas).amplitudes)) ** 2))


def fidelity_and_gradient(ansatz: Ansatz, thetas, target):
    """``F`` and ``dF/dtheta`` by one forward and one adjoint sweep."""
    thetas = np.asarray(thetas, dtype=float)
    tvec = _target_vector(target)
    ops = ansatz.operators()
    n = ansatz.initial_state.n_qubits
    mats = [op.local_exp(t) for op, t in zip(ops, thetas)]
    psi = ansatz.initial_state.amplitudes
    for op, m in zip(ops, mats):
        psi = _apply_op(psi, n, op, m)
    s = np.vdot(tvec, psi)
    grad = np.empty(len(ops))
    phi, lam = psi, tvec
    for j in range(len(ops) - 1, -1, -1):
        op = ops[j]
        d = 1j * np.vdot(lam, _apply_op(phi, n, op, op.generator))
        grad[j] = 2.0 * (d * np.conj(s)).real
        inv = mats[j].conj().T
        phi = _apply_op(phi, n, op, inv)
        lam = _apply_op(lam, n, op, inv)
    return min(1.0, float(abs(s) ** 2)), grad


def gradient(ansatz: Ansatz, thetas, target) -> np.ndarray:
    return fidelity_and_gradient(ansatz, thetas, target)[1]


def _overlap_with_generator(op, psi, tvec, n):
    """<T|G|psi> contracted on the operator support only."""
    k = len(op.support)
    axes = range(k)
    ps = np.moveaxis(psi.reshape((2,) * n), op.support, axes).reshape(1 << k, -1)
    ts = np.moveaxis(tvec.reshape((2,) * n), op.support, axes).reshape(1 << k, -1)
    reduced = ts.conj() @ ps.T
    return complex(np.sum(op.generator * reduced))


def screen(pool: Pool, state: StateVector, target, workers: int = 1):
    """Pool operators ranked by ``|dF/dtheta|`` at ``theta = 0``.

    Returns ``[(score, op), ...]`` by descending score, ties by pool order.
    When the current overlap vanishes the first-order score is identically
    zero and ``|<T|G|psi>|`` is used instead.
    """
    if len(pool) == 0:
        raise AdaptError("cannot screen an empty pool")
    tvec = _target_vector(target)
    psi = state.amplitudes
    n = state.n_qubits
    s_conj = np.vdot(psi, tvec)

    def score(op):
        g = _overlap_with_generator(op, psi, tvec, n)
        if abs(s_conj) <= ZERO_OVERLAP_TOL:
            return abs(g)
        return abs(2.0 * (g * s_conj).imag)

    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as ex:
            scores = list(ex.map(score, pool.operators))
    else:
        scores = [score(op) for op in pool.operators]
    order = sorted(range(len(scores)), key=lambda i: (-scores[i], i))
    return [(float(scores[i]), pool.operators[i]) for i in order]


@dataclass
class TraceRecord:
    iteration: int
    op_id: str
    score: float
    fidelity: float
    cnot_cum: int
    single_qubit_cum: int
    seconds: float


@dataclass
class AdaptTrace:
    records: list = field(default_factory=list)
    status: str = ""

    @property
    def fidelities(self):
        return [r.fidelity for r in self.records]

    def first_reaching(self, fidelity: float):
        for r in self.records:
            if r.fidelity >= fidelity:
                return r
        return None

    def to_csv(self, timing: bool = True) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(TRACE_HEADER)
        for r in self.records:
            row = asdict(r)
            row["seconds"] = repr(r.seconds) if timing else ""
            row["score"] = repr(r.score)
            row["fidelity"] = repr(r.fidelity)
            w.writerow([row[h] for h in TRACE_HEADER])
        return buf.getvalue()


class _EvaluationCap(Exception):
    pass


class _Tracker:
    """Wraps the objective; remembers the best point and enforces the evaluation cap."""

    def __init__(self, ansatz, target, cap):
        self.ansatz, self.target, self.cap = ansatz, target, cap
        self.calls = 0
        self.best_f = -1.0
        self.best_x = None

    def __call__(self, x):
        if self.calls >= self.cap:
            raise _EvaluationCap
        self.calls += 1
        f, g = fidelity_and_gradient(self.ansatz, x, self.target)
        if f > self.best_f:
            self.best_f, self.best_x = f, np.array(x, dtype=float)
        return 1.0 - f, -g


def optimize(ansatz: Ansatz, target, x0, config: AdaptConfig):
    """BFGS on ``1 - F``; returns ``(best F, best thetas, evaluations)``."""
    tracker = _Tracker(ansatz, target, config.max_evaluations)
    try:
        minimize(tracker, np.asarray(x0, dtype=float), jac=True, method="BFGS",
                 options={"gtol": config.gtol, "maxiter": config.max_evaluations})
    except _EvaluationCap:
        pass
    if tracker.best_x is None:
        return objective(ansatz, x0, target), np.asarray(x0, dtype=float), tracker.calls
    return tracker.best_f, tracker.best_x, tracker.calls


def default_reference(target: SparseState) -> str:
    """Hartree-Fock pattern for the target's electron count.

    Uses ``metadata["electrons"]`` when present, else the Hamming weight of
    the largest-|c| entry.
    """
    m = target.metadata.get("electrons")
    if m is None:
        pattern, _ = max(target.entries, key=lambda e: (abs(e[1]), e[0]))
        m = pattern.count("1")
    return hartree_fock(target.n_qubits, int(m))


@dataclass
class AdaptResult:
    ansatz: Ansatz
    trace: AdaptTrace
    fidelity: float

    @property
    def status(self):
        return self.trace.status


def run(target: SparseState, config: AdaptConfig | None = None, pool: Pool | None = None,
        reference: str | None = None, resume: Ansatz | None = None,
        callback=None) -> AdaptResult:
    """Grow an ansatz until ``1 - F <= epsilon`` or ``max_iterations``.

    ``resume`` continues from a saved ansatz (its operators must belong to
    ``pool``).  ``callback(record)`` is called after every iteration.
    """
    config = config or AdaptConfig()
    if not target.is_normalized(1e-8):
        raise AdaptError("target must be normalized")
    n = target.n_qubits
    if pool is None:
        pool = resume.pool if resume is not None else build_pool(
            config.pool, n, spin_adapted=config.spin_adapted)
    tvec = _target_vector(target)
    rng = np.random.default_rng(config.seed)
    start = time.perf_counter()

    if resume is not None:
        ansatz = Ansatz(pool, resume.initial_state, list(resume.steps), resume.initial_state_ref)
    else:
        reference = reference or default_reference(target)
        ansatz = Ansatz(pool, basis_state(n, reference), [], f"basis:{reference}")
    thetas = ansatz.thetas
    fid = objective(ansatz, thetas, tvec)
    cnot, single = ansatz.gate_counts()
    trace = AdaptTrace()
    trace.records.append(TraceRecord(len(ansatz.steps), "", 0.0, fid, cnot, single,
                                     time.perf_counter() - start))
    status = CONVERGED if 1.0 - fid <= config.epsilon else MAX_ITERATIONS
    iteration = len(ansatz.steps)
    grown_by = 0
    while 1.0 - fid > config.epsilon and grown_by < config.max_iterations:
        psi = evaluate(ansatz, thetas)
        ranked = screen(pool, psi, tvec, workers=config.workers)
        best_score, best_op = ranked[0]
        if best_score < STALL_SCORE:
            status = GRADIENT_STALL
            break
        grown = Ansatz(pool, ansatz.initial_state, ansatz.steps + [(best_op.id, 0.0)],
                       ansatz.initial_state_ref)
        x0 = np.append(thetas, 0.0)
        new_f, new_x, _ = optimize(grown, tvec, x0, config)
        if new_f - fid <= 1e-12:
            kick = x0 + rng.uniform(-config.restart_amplitude, config.restart_amplitude, x0.size)
            f2, x2, _ = optimize(grown, tvec, kick, config)
            if f2 > new_f:
                new_f, new_x = f2, x2
        if new_f < fid:
            new_f, new_x = fid, x0
        thetas, fid = new_x, new_f
        ansatz = grown.with_thetas(thetas)
        iteration += 1
        grown_by += 1
        cnot += best_op.cnot
        single += best_op.single_qubit
        rec = TraceRecord(iteration, best_op.id, float(best_score), float(fid), cnot, single,
                          time.perf_counter() - start)
        trace.records.append(rec)
        if callback is not None:
            callback(rec)
        status = CONVERGED if 1.0 - fid <= config.epsilon else MAX_ITERATIONS
    trace.status = status
    return AdaptResult(ansatz, trace, fid)
