"""
Target wave functions as sparse (pattern, amplitude) lists.

Spin orbitals are interleaved: qubit ``2i`` is the alpha spin orbital of
spatial orbital ``i`` and qubit ``2i + 1`` the beta one.  With energy-ordered
spatial orbitals the closed-shell Hartree-Fock pattern is ``1^m 0^(n-m)``.
"""
from __future__ import annotations

import csv
import io
import json
import math
from dataclasses import dataclass, field

import numpy as np
import scipy.sparse as sp
from scipy.sparse.linalg import eigsh

from .simcore import (MAX_DENSE_QUBITS, StateVector, index_pattern,
                      pattern_index)

INTERLEAVED = "interleaved"
NORM_TOL = 1e-10
DENSE_LIMIT = 10
GROUND_STATE_LIMIT = 14
DEGENERACY_TOL = 1e-9


class TargetError(ValueError):
    """Malformed target, Hamiltonian or file."""


@dataclass
class SparseState:
    n_qubits: int
    entries: list
    metadata: dict = field(default_factory=dict)

    def __post_init__(self):
        clean = []
        seen = set()
        for pattern, amp in self.entries:
            pattern = str(pattern)
            if len(pattern) != self.n_qubits or set(pattern) - {"0", "1"}:
                raise TargetError(f"invalid pattern {pattern!r} for {self.n_qubits} qubits")
            if pattern in seen:
                raise TargetError(f"duplicate pattern {pattern!r}")
            seen.add(pattern)
            clean.append((pattern, complex(amp)))
        self.entries = clean

    @property
    def sparsity(self) -> int:
        return len(self.entries)

    M = sparsity

    @property
    def patterns(self):
        return [p for p, _ in self.entries]

    @property
    def amplitudes(self) -> np.ndarray:
        return np.array([a for _, a in self.entries], dtype=complex)

    def weight(self) -> float:
        return float(np.sum(np.abs(self.amplitudes) ** 2))

    def is_normalized(self, tol=NORM_TOL) -> bool:
        return abs(self.weight() - 1.0) <= tol

    def normalized(self) -> "SparseState":
        w = math.sqrt(self.weight())
        if w == 0:
            raise TargetError("cannot normalize a zero state")
        return SparseState(self.n_qubits, [(p, a / w) for p, a in self.entries],
                           dict(self.metadata))

    def to_statevector(self) -> StateVector:
        if self.n_qubits > MAX_DENSE_QUBITS:
            raise TargetError(f"{self.n_qubits} qubits exceeds the dense limit {MAX_DENSE_QUBITS}")
        amps = np.zeros(1 << self.n_qubits, dtype=complex)
        for p, a in self.entries:
            amps[pattern_index(p)] = a
        return StateVector(amps, self.n_qubits)

    @classmethod
    def from_statevector(cls, state: StateVector, cutoff=0.0, metadata=None) -> "SparseState":
        amps = state.amplitudes
        idx = np.flatnonzero(np.abs(amps) > cutoff)
        return cls(state.n_qubits, [(index_pattern(int(i), state.n_qubits), amps[i]) for i in idx],
                   dict(metadata or {}))

    def as_dict(self):
        return dict(self.entries)

    # serialization -----------------------------------------------------
    def to_json(self) -> str:
        doc = {"n_qubits": self.n_qubits}
        if self.metadata:
            doc["metadata"] = self.metadata
        doc["entries"] = [{"pattern": p, "re": a.real, "im": a.imag} for p, a in self.entries]
        return json.dumps(doc, indent=1)

    def to_text(self) -> str:
        lines = [f"n={self.n_qubits}"]
        lines += [f"{p} {a.real!r} {a.imag!r}" for p, a in self.entries]
        return "\n".join(lines) + "\n"


def parse_sparse_state(text: str) -> SparseState:
    """Read the JSON or the ``n=<int>`` text form of a sparse state."""
    stripped = text.lstrip()
    if stripped.startswith("{"):
        try:
            doc = json.loads(text)
            entries = [(e["pattern"], complex(e["re"], e.get("im", 0.0))) for e in doc["entries"]]
            return SparseState(int(doc["n_qubits"]), entries, doc.get("metadata") or {})
        except (KeyError, TypeError, json.JSONDecodeError) as exc:
            raise TargetError(f"malformed sparse-state JSON: {exc}") from exc
    lines = [ln.strip() for ln in text.splitlines()]
    lines = [ln for ln in lines if ln and not ln.startswith("#")]
    if not lines or not lines[0].startswith("n="):
        raise TargetError("text sparse state must start with a 'n=<int>' header")
    n = int(lines[0][2:])
    entries = []
    for lineno, ln in enumerate(lines[1:], start=2):
        parts = ln.split()
        if len(parts) not in (2, 3):
            raise TargetError(f"line {lineno}: expected 'pattern re [im]', got {ln!r}")
        im = float(parts[2]) if len(parts) == 3 else 0.0
        entries.append((parts[0], complex(float(parts[1]), im)))
    return SparseState(n, entries)


def load_sparse_state(path) -> SparseState:
    with open(path) as fh:
        return parse_sparse_state(fh.read())


# encodings ---------------------------------------------------------------
def hartree_fock(n: int, m: int) -> str:
    if not 0 <= m <= n:
        raise TargetError(f"cannot place {m} electrons in {n} spin orbitals")
    return "1" * m + "0" * (n - m)


def encode_determinant(occ_alpha, occ_beta, n_orbitals: int) -> str:
    """Occupation lists of spatial orbitals -> interleaved bit pattern."""
    bits = ["0"] * (2 * n_orbitals)
    for spin, occ in ((0, occ_alpha), (1, occ_beta)):
        occ = list(occ)
        if len(set(occ)) != len(occ):
            raise TargetError(f"duplicate orbital in {occ}")
        for i in occ:
            if not 0 <= i < n_orbitals:
                raise TargetError(f"orbital {i} outside 0..{n_orbitals - 1}")
            bits[2 * i + spin] = "1"
    return "".join(bits)


def decode_determinant(pattern: str):
    if len(pattern) % 2:
        raise TargetError("interleaved patterns have even length")
    alpha = [i // 2 for i in range(0, len(pattern), 2) if pattern[i] == "1"]
    beta = [i // 2 for i in range(1, len(pattern), 2) if pattern[i] == "1"]
    return alpha, beta


def esp_cnot_bound(n_orbitals: int, m_alpha: int, m_beta: int) -> int:
    """Three CNOTs per dimension of the fixed-(N, S_z) subspace."""
    if not (0 <= m_alpha <= n_orbitals and 0 <= m_beta <= n_orbitals):
        raise TargetError("occupations must not exceed the number of orbitals")
    return 3 * math.comb(n_orbitals, m_alpha) * math.comb(n_orbitals, m_beta)


MIXED = "mixed"


def symmetry(state: SparseState):
    """(particle number, S_z) shared by all entries, or ``"mixed"``."""
    ns = {p.count("1") for p in state.patterns}
    n_val = ns.pop() if len(ns) == 1 else MIXED
    ordering = state.metadata.get("ordering", INTERLEAVED)
    if ordering != INTERLEAVED or state.n_qubits % 2:
        return n_val, None
    szs = {(p[0::2].count("1") - p[1::2].count("1")) / 2 for p in state.patterns}
    sz = szs.pop() if len(szs) == 1 else MIXED
    return n_val, sz


# truncation and spectra ----------------------------------------------------
def _rank_order(state: SparseState):
    """Indices by descending |c|, ties by pattern."""
    return sorted(range(state.sparsity),
                  key=lambda i: (-abs(state.entries[i][1]), state.entries[i][0]))


def truncate(state: SparseState, keep: int | None = None, fidelity: float | None = None):
    """Keep the largest-|c| entries and renormalize.

    Give either ``keep`` (number of entries) or ``fidelity`` (keep the
    shortest prefix whose squared weight reaches it).  Returns the truncated
    state and its fidelity with the original, ``sum_kept |c|^2 / sum |c|^2``.
    """
    if (keep is None) == (fidelity is None):
        raise TargetError("give exactly one of keep / fidelity")
    order = _rank_order(state)
    weights = np.abs(state.amplitudes[order]) ** 2 if order else np.zeros(0)
    total = float(weights.sum())
    if keep is not None:
        if keep < 1:
            raise TargetError("keep must be at least 1")
        keep = min(keep, state.sparsity)
    else:
        if not 0 < fidelity <= 1:
            raise TargetError("fidelity threshold must lie in (0, 1]")
        cum = np.cumsum(weights) / total
        keep = int(np.searchsorted(cum, fidelity - 1e-12)) + 1
        keep = min(keep, state.sparsity)
    kept = sorted(order[:keep])
    f = float(weights[:keep].sum()) / total
    sub = SparseState(state.n_qubits, [state.entries[i] for i in kept], dict(state.metadata))
    return sub.normalized(), f


def spectrum(state: SparseState):
    """Rows ``(rank, |c|, cumulative sum |c|^2)`` by descending |c|."""
    order = _rank_order(state)
    mags = np.abs(state.amplitudes[order]) if order else np.zeros(0)
    cum = np.cumsum(mags ** 2)
    return [(k + 1, float(m), float(c)) for k, (m, c) in enumerate(zip(mags, cum))]


def spectrum_csv(state: SparseState) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["rank", "abs_c", "cum_weight"])
    for rank, mag, cum in spectrum(state):
        w.writerow([rank, repr(mag), repr(cum)])
    return buf.getvalue()


# Hamiltonians -------------------------------------------------------------
@dataclass
class PauliSumHamiltonian:
    n_qubits: int
    terms: list

    def __post_init__(self):
        clean = []
        for coeff, word in self.terms:
            word = str(word).upper()
            if len(word) != self.n_qubits or set(word) - set("IXYZ"):
                raise TargetError(f"Pauli word {word!r} is not a {self.n_qubits}-qubit word")
            clean.append((float(coeff), word))
        self.terms = clean

    @classmethod
    def parse(cls, text: str) -> "PauliSumHamiltonian":
        """Lines ``coeff word``; ``#`` starts a comment."""
        terms, n = [], None
        for lineno, raw in enumerate(text.splitlines(), start=1):
            line = raw.split("#", 1)[0].strip()
            if not line:
                continue
            parts = line.split()
            if len(parts) != 2:
                raise TargetError(f"line {lineno}: expected 'coeff word', got {raw.strip()!r}")
            try:
                coeff = float(parts[0].replace("−", "-"))
            except ValueError:
                raise TargetError(f"line {lineno}: bad coefficient {parts[0]!r}") from None
            word = parts[1].upper()
            if set(word) - set("IXYZ"):
                raise TargetError(f"line {lineno}: bad Pauli word {parts[1]!r}")
            if n is None:
                n = len(word)
            elif len(word) != n:
                raise TargetError(f"line {lineno}: word length {len(word)} differs from {n}")
            terms.append((coeff, word))
        if n is None:
            raise TargetError("Hamiltonian has no terms")
        return cls(n, terms)

    def to_text(self) -> str:
        return "".join(f"{c!r} {w}\n" for c, w in self.terms)

    def sparse_matrix(self) -> sp.csr_matrix:
        n = self.n_qubits
        dim = 1 << n
        basis = np.arange(dim, dtype=np.int64)
        rows, cols, vals = [], [], []
        for coeff, word in self.terms:
            xmask = zmask = 0
            ny = 0
            for i, c in enumerate(word):
                bit = 1 << (n - 1 - i)
                if c in "XY":
                    xmask |= bit
                if c in "ZY":
                    zmask |= bit
                ny += c == "Y"
            parity = _popcount(basis & zmask) & 1
            phase = (1j ** ny) * (1 - 2 * parity)
            rows.append(basis ^ xmask)
            cols.append(basis)
            vals.append(coeff * phase)
        m = sp.coo_matrix((np.concatenate(vals), (np.concatenate(rows), np.concatenate(cols))),
                          shape=(dim, dim)).tocsr()
        m.sum_duplicates()
        return m

    def apply(self, vec) -> np.ndarray:
        return self.sparse_matrix() @ np.asarray(vec)


def _popcount(a: np.ndarray) -> np.ndarray:
    a = a.copy()
    count = np.zeros_like(a)
    while np.any(a):
        count += a & 1
        a >>= 1
    return count


def transverse_field_ising(n: int, coupling: float = 1.0, field: float = 1.0) -> PauliSumHamiltonian:
    """Open chain ``-J sum X_i X_{i+1} - h sum Z_i``.

    The coupling is along X so the Hamiltonian keeps Z-parity and its ground
    state lives in the even-particle sector around |0...0>.
    """
    terms = []
    for i in range(n - 1):
        w = ["I"] * n
        w[i] = w[i + 1] = "X"
        terms.append((-coupling, "".join(w)))
    for i in range(n):
        w = ["I"] * n
        w[i] = "Z"
        terms.append((-field, "".join(w)))
    return PauliSumHamiltonian(n, terms)


class GroundStateError(RuntimeError):
    pass


def _fix_phase(v):
    k = int(np.argmax(np.abs(v) - 1e-12 * np.arange(v.size)))
    return v * (abs(v[k]) / v[k])


def _resolve_degenerate(vecs, reference_index):
    """Pick the vector of a ground space closest to the reference basis state."""
    if vecs.shape[1] == 1:
        return vecs[:, 0]
    dim = vecs.shape[0]
    candidates = [reference_index] if reference_index is not None else []
    candidates += list(range(dim - 1, -1, -1))
    for idx in candidates:
        proj = vecs @ vecs[idx].conj()
        nrm = np.linalg.norm(proj)
        if nrm > 1e-8:
            return proj / nrm
    return vecs[:, 0]


def ground_state_vector(h: PauliSumHamiltonian, reference: str | None = None):
    """Lowest eigenpair ``(energy, amplitudes, residual)``."""
    n = h.n_qubits
    if n > GROUND_STATE_LIMIT:
        raise TargetError(f"ground states are limited to {GROUND_STATE_LIMIT} qubits, got {n}")
    mat = h.sparse_matrix()
    if n <= DENSE_LIMIT:
        w, v = np.linalg.eigh(mat.toarray())
    else:
        k = min(6, (1 << n) - 2)
        v0 = np.full(1 << n, 1.0 / math.sqrt(1 << n))
        w, v = eigsh(mat, k=k, which="SA", tol=1e-13, v0=v0, maxiter=20000)
        order = np.argsort(w)
        w, v = w[order], v[:, order]
    ground = np.flatnonzero(w - w[0] <= DEGENERACY_TOL)
    ref_idx = pattern_index(reference) if reference is not None else None
    vec = _fix_phase(_resolve_degenerate(v[:, ground], ref_idx))
    energy = float(np.real(np.vdot(vec, mat @ vec)))
    residual = float(np.linalg.norm(mat @ vec - energy * vec))
    return energy, vec, residual


def ground_state(h: PauliSumHamiltonian, amp_cutoff: float = 1e-12, reference: str | None = None,
                 residual_tol: float = 1e-8) -> SparseState:
    """Exact ground state of a small Pauli-sum Hamiltonian as a sparse target.

    Degenerate ground spaces resolve to the normalized projection of the
    ``reference`` basis state (else of the lexicographically largest basis
    state with nonzero projection).  ``metadata`` carries energy and residual.
    """
    energy, vec, residual = ground_state_vector(h, reference)
    state = StateVector(vec, h.n_qubits)
    sparse = SparseState.from_statevector(state, cutoff=amp_cutoff).normalized()
    vec = sparse.to_statevector().amplitudes
    mat = h.sparse_matrix()
    residual = float(np.linalg.norm(mat @ vec - energy * vec))
    if residual > residual_tol:
        raise GroundStateError(f"eigensolver residual {residual:.3e} exceeds {residual_tol:.1e}")
    sparse.metadata.update({"energy": energy, "residual": residual})
    return sparse


# synthetic targets -----------------------------------------------------------
def _sector_patterns(n_orbitals, n_alpha, n_beta):
    from itertools import combinations
    for a in combinations(range(n_orbitals), n_alpha):
        for b in combinations(range(n_orbitals), n_beta):
            yield encode_determinant(a, b, n_orbitals)


def synthetic_target(n: int, M: int, n_electrons: int, sz: float = 0.0, decay: float = 0.85,
                     seed: int = 0, complex_phases: bool = False) -> SparseState:
    """Seeded heavy-tailed target in a fixed (N, S_z) sector.

    The reference determinant of the sector is always included.  The other
    ``M - 1`` patterns are drawn uniformly from the sector; amplitudes are
    ``decay**k`` by rank ``k``, ranks assigned by excitation level relative to
    the reference (random order within a level), with random signs (or
    phases).
    """
    if n % 2:
        raise TargetError("interleaved spin orbitals need an even qubit count")
    L = n // 2
    two_sz = round(2 * sz)
    if (n_electrons + two_sz) % 2:
        raise TargetError("particle number and S_z have incompatible parity")
    n_alpha, n_beta = (n_electrons + two_sz) // 2, (n_electrons - two_sz) // 2
    if not (0 <= n_alpha <= L and 0 <= n_beta <= L):
        raise TargetError("empty (N, S_z) sector")
    size = math.comb(L, n_alpha) * math.comb(L, n_beta)
    if not 1 <= M <= size:
        raise TargetError(f"M={M} outside 1..{size} (sector size)")
    rng = np.random.default_rng(seed)
    reference = encode_determinant(range(n_alpha), range(n_beta), L)
    if size <= 200_000:
        pool = [p for p in _sector_patterns(L, n_alpha, n_beta) if p != reference]
        picks = rng.choice(len(pool), size=M - 1, replace=False) if M > 1 else []
        chosen = [pool[i] for i in sorted(picks)]
    else:
        chosen_set = set()
        while len(chosen_set) < M - 1:
            a = rng.choice(L, size=n_alpha, replace=False)
            b = rng.choice(L, size=n_beta, replace=False)
            p = encode_determinant(a, b, L)
            if p != reference:
                chosen_set.add(p)
        chosen = sorted(chosen_set)
    level = [sum(x != y for x, y in zip(p, reference)) // 2 for p in chosen]
    tiebreak = rng.permutation(len(chosen))
    order = sorted(range(len(chosen)), key=lambda i: (level[i], tiebreak[i]))
    patterns = [reference] + [chosen[i] for i in order]
    mags = decay ** np.arange(M, dtype=float)
    if complex_phases:
        phases = np.exp(2j * np.pi * rng.random(M))
    else:
        phases = rng.choice([-1.0, 1.0], size=M)
    phases[0] = 1.0
    amps = mags * phases
    amps /= np.linalg.norm(amps)
    meta = {"electrons": n_electrons, "spatial_orbitals": L, "ordering": INTERLEAVED,
            "sz": two_sz / 2, "seed": seed, "decay": decay}
    return SparseState(n, sorted(zip(patterns, amps)), meta)
