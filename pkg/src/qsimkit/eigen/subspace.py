"""Subspace diagonalization: QSE, QFD, qEOM and qLanczos with Hadamard-test matrix elements.

Each method builds an overlap matrix ``S_ab = <v_a|v_b>`` and a Hamiltonian
matrix ``H_ab = <v_a|H|v_b>`` over a small basis and solves ``H c = E S c``
after canonical orthogonalization: eigenvectors of ``S`` with eigenvalue
below ``threshold`` are discarded and the rest are rescaled to unit norm.
"""

from __future__ import annotations

import math
import warnings
from collections.abc import Sequence
from dataclasses import dataclass, field

import numpy as np

from ..errors import ArgumentError, DegenerateBasisError, DimensionError
from ..fermion import FermionOperator, jordan_wigner
from ..pauli import PauliString, PauliSum, commutator, pauli_basis
from ..simulator import Circuit, Gate, StateVector, make_rng
from ..dynamics.trotter import exact_unitary, trotter_unitary
from .qite import qite_step

DEFAULT_THRESHOLD = 1e-8
HERMITIAN_TOL = 1e-10


@dataclass
class SubspaceProblem:
    """Generalized eigenproblem over a labelled basis."""

    labels: list[str]
    overlap: np.ndarray
    hamiltonian: np.ndarray
    threshold: float = DEFAULT_THRESHOLD

    def __post_init__(self):
        s, h = self.overlap, self.hamiltonian
        if s.shape != h.shape or s.shape[0] != s.shape[1]:
            raise DimensionError("overlap and Hamiltonian matrices must be square and equal in size")
        if np.abs(s - s.conj().T).max(initial=0.0) > HERMITIAN_TOL * max(1.0, np.abs(s).max(initial=0.0)):
            raise ArgumentError("overlap matrix is not Hermitian")
        if np.abs(h - h.conj().T).max(initial=0.0) > HERMITIAN_TOL * max(1.0, np.abs(h).max(initial=0.0)):
            raise ArgumentError("Hamiltonian matrix is not Hermitian")

    def solve(self) -> SubspaceSolution:
        return solve_generalized(self.overlap, self.hamiltonian, self.threshold, self.labels)


@dataclass
class SubspaceSolution:
    energies: np.ndarray
    coefficients: np.ndarray
    kept: int
    discarded: np.ndarray
    labels: list[str] = field(default_factory=list)

    @property
    def ground_energy(self) -> float:
        return float(self.energies[0])

    def to_dict(self) -> dict:
        return {
            "energies": [float(e) for e in self.energies],
            "subspace_dimension": len(self.labels),
            "kept": self.kept,
            "discarded_singular_values": [float(v) for v in self.discarded],
        }


def solve_generalized(
    s: np.ndarray, h: np.ndarray, threshold: float = DEFAULT_THRESHOLD, labels: list[str] | None = None
) -> SubspaceSolution:
    """Canonical orthogonalization followed by a Hermitian eigensolve."""
    s = 0.5 * (s + s.conj().T)
    h = 0.5 * (h + h.conj().T)
    w, u = np.linalg.eigh(s)
    keep = w >= threshold
    if not keep.any():
        raise DegenerateBasisError(f"every overlap eigenvalue is below the cutoff {threshold:g}")
    x = u[:, keep] / np.sqrt(w[keep])
    hp = x.conj().T @ h @ x
    e, c = np.linalg.eigh(0.5 * (hp + hp.conj().T))
    return SubspaceSolution(e, x @ c, int(keep.sum()), w[~keep], list(labels or []))


def _as_vector(psi: StateVector | np.ndarray) -> np.ndarray:
    return np.asarray(psi.amplitudes if isinstance(psi, StateVector) else psi, dtype=complex)


def _matrices(vectors: Sequence[np.ndarray], h: PauliSum) -> tuple[np.ndarray, np.ndarray]:
    v = np.array(vectors).T
    hv = np.array([h.apply(col) for col in vectors]).T
    return v.conj().T @ v, v.conj().T @ hv


# -- Hadamard test ---------------------------------------------------------------------------


def hadamard_test(
    prep_a: Circuit,
    prep_b: Circuit,
    b: PauliSum | None = None,
    shots: int | None = None,
    seed: int | None = None,
    initial: StateVector | np.ndarray | None = None,
) -> complex:
    """``<v_a|B|v_b>`` with ``|v_x> = V_x |init>`` from one ancilla interferometer per Pauli term.

    The ancilla (top qubit) starts in ``|+>``; ``V_a`` acts when it reads 0 and
    ``P V_b`` when it reads 1, so ``<X> + i<Y> = 2<S_->`` with
    ``S_- = (X + iY)/2`` equals ``<v_a|P|v_b>``.  ``shots=None`` gives exact
    ancilla expectations; otherwise each quadrature is sampled with
    ``shots`` shots.
    """
    n = prep_a.n_qubits
    if prep_b.n_qubits != n:
        raise DimensionError("state preparations act on different registers")
    if b is None:
        b = PauliSum.identity(n)
    if b.n_qubits != n:
        raise DimensionError("operator and state preparations differ in width")
    anc = n
    init = np.zeros(1 << n, dtype=complex)
    if initial is None:
        init[0] = 1.0
    else:
        init = _as_vector(initial)
    start = np.zeros(1 << (n + 1), dtype=complex)
    start[: 1 << n] = init
    rng = make_rng(seed)[0] if shots is not None else None
    total = 0j
    for p, c in b.items():
        circ = Circuit(n + 1)
        circ.add("Had", anc)
        circ.add("X", anc)
        circ.extend(prep_a.controlled(anc, n + 1).gates)
        circ.add("X", anc)
        circ.extend(prep_b.controlled(anc, n + 1).gates)
        if p.weight:
            targets = tuple(range(n - 1, -1, -1))
            circ.append(Gate("U", targets, matrix=PauliSum.from_string(p).to_dense(), controls=(anc,)))
        base = circ.run(StateVector(n + 1, start))
        quad = []
        for imaginary in (False, True):
            out = base.copy()
            if imaginary:
                out.apply(Gate("Sdg", (anc,)))
            out.apply(Gate("Had", (anc,)))
            amps = out.amplitudes.reshape(2, 1 << n)
            z = float(np.sum(np.abs(amps[0]) ** 2) - np.sum(np.abs(amps[1]) ** 2))
            if rng is not None:
                z = 1.0 - 2.0 * rng.binomial(shots, (1.0 - z) / 2.0) / shots
            quad.append(z)
        total += c * (quad[0] + 1j * quad[1])
    return complex(total)


def _unitary_prep(u: np.ndarray, n: int) -> Circuit:
    return Circuit(n, [Gate("U", tuple(range(n - 1, -1, -1)), matrix=u)])


# -- QSE ------------------------------------------------------------------------------------


def pauli_excitations(n_qubits: int, max_weight: int) -> list[PauliSum]:
    """``P_k``: every Pauli string of weight at most ``max_weight`` (identity first)."""
    return [PauliSum.from_string(p) for p in pauli_basis(n_qubits, max_weight)]


def fermionic_single_excitations(n_modes: int, spin_conserving: bool = True) -> list[PauliSum]:
    """``F_1``: identity plus Jordan-Wigner images of ``a^dag_p a_q`` (``p != q``)."""
    half = n_modes // 2
    out = [PauliSum.identity(n_modes)]
    for q in range(n_modes):
        for p in range(n_modes):
            if p == q or (spin_conserving and (p < half) != (q < half)):
                continue
            out.append(jordan_wigner(FermionOperator(n_modes, {((p, True), (q, False)): 1.0})))
    return out


def qse(
    h: PauliSum,
    psi0: StateVector | np.ndarray,
    excitations: Sequence[PauliSum | PauliString],
    threshold: float = DEFAULT_THRESHOLD,
) -> tuple[SubspaceProblem, SubspaceSolution]:
    """Quantum subspace expansion over ``{E_a |psi0>}``; the set must contain the identity."""
    if not excitations:
        raise ArgumentError("excitation set is empty")
    ops = [PauliSum.from_string(e) if isinstance(e, PauliString) else e for e in excitations]
    if not any(len(op) == 1 and abs(op.constant()) > 0 for op in ops):
        raise ArgumentError("excitation set must include the identity")
    psi = _as_vector(psi0)
    vectors = [op.apply(psi) for op in ops]
    s, hm = _matrices(vectors, h)
    labels = [_label(op) for op in ops]
    prob = SubspaceProblem(labels, s, hm, threshold)
    return prob, prob.solve()


def _label(op: PauliSum) -> str:
    items = list(op.items())
    if len(items) == 1:
        return items[0][0].label
    return f"sum[{len(items)}]"


# -- QFD ------------------------------------------------------------------------------------


def qfd(
    h: PauliSum,
    psi0: StateVector | np.ndarray,
    dt: float,
    d: int,
    threshold: float = DEFAULT_THRESHOLD,
    evolution: str = "dense",
    n_trotter: int = 1,
    order: int = 2,
    estimator: str = "dense",
) -> tuple[SubspaceProblem, SubspaceSolution]:
    """Filter diagonalization over ``|v_k> = U^k |psi0>`` with ``U ~ exp(-i dt H)``, ``k < d``.

    Args:
        evolution: ``"dense"`` or ``"trotter"`` (``n_trotter`` steps of the given
            order per ``dt``).
        estimator: ``"dense"`` inner products or ``"hadamard"`` interferometers
            (``<v_j|v_k>`` and ``<v_j|H|v_k>`` from :func:`hadamard_test`).
    """
    if d < 1:
        raise ArgumentError("d must be at least 1")
    psi = _as_vector(psi0)
    n = h.n_qubits
    if evolution not in ("dense", "trotter"):
        raise ArgumentError(f"unknown evolution {evolution!r}")
    u = exact_unitary(h, dt) if evolution == "dense" else trotter_unitary(h, dt, n_trotter, order)
    powers = [np.eye(1 << n, dtype=complex)]
    for _ in range(1, d):
        powers.append(u @ powers[-1])
    vectors = [p @ psi for p in powers]
    labels = [f"U^{k}" for k in range(d)]
    if estimator == "dense":
        s, hm = _matrices(vectors, h)
    elif estimator == "hadamard":
        prep0 = _state_prep(psi)
        preps = [Circuit(n, prep0.gates + _unitary_prep(p, n).gates) for p in powers]
        s = np.array([[hadamard_test(preps[i], preps[j]) for j in range(d)] for i in range(d)])
        hm = np.array([[hadamard_test(preps[i], preps[j], h) for j in range(d)] for i in range(d)])
    else:
        raise ArgumentError(f"unknown estimator {estimator!r}")
    prob = SubspaceProblem(labels, s, hm, threshold)
    return prob, prob.solve()


def _state_prep(psi: np.ndarray) -> Circuit:
    """A unitary whose first column is ``psi``.

    With ``phase = psi_0 / |psi_0|`` the overlap ``<e_0|psi/phase>`` is real, so
    the Householder reflection along ``psi/phase - e_0`` swaps the two vectors.
    """
    n = int(round(math.log2(psi.shape[0])))
    e0 = np.zeros_like(psi)
    e0[0] = 1.0
    phase = psi[0] / abs(psi[0]) if abs(psi[0]) > 1e-15 else 1.0
    w = psi / phase - e0
    if np.linalg.norm(w) < 1e-15:
        u = np.eye(psi.shape[0], dtype=complex) * phase
    else:
        w = w / np.linalg.norm(w)
        u = phase * (np.eye(psi.shape[0]) - 2 * np.outer(w, w.conj()))
    return _unitary_prep(u, n)


# -- qLanczos ----------------------------------------------------------------------------------


def qlanczos(
    h: PauliSum,
    psi0: StateVector | np.ndarray,
    dtau: float,
    d: int,
    threshold: float = DEFAULT_THRESHOLD,
    method: str = "dense",
    qite_domain: Sequence[int] | None = None,
) -> tuple[SubspaceProblem, SubspaceSolution]:
    """Subspace of normalized imaginary-time states ``|v_k> ~ exp(-k dtau H)|psi0>``.

    ``method="qite"`` generates the states with full-domain (or ``qite_domain``)
    QITE steps instead of the dense propagator.
    """
    if d < 2:
        raise ArgumentError("qLanczos needs d >= 2")
    psi = _as_vector(psi0)
    vectors = [psi / np.linalg.norm(psi)]
    if method == "dense":
        w, v = np.linalg.eigh(h.to_dense())
        c0 = v.conj().T @ vectors[0]
        for k in range(1, d):
            vk = v @ (np.exp(-k * dtau * (w - w[0])) * c0)
            vectors.append(vk / np.linalg.norm(vk))
    elif method == "qite":
        cur = vectors[0]
        for _ in range(1, d):
            cur = qite_step(h, cur, dtau, qite_domain).state
            vectors.append(cur)
    else:
        raise ArgumentError(f"unknown method {method!r}")
    s, hm = _matrices(vectors, h)
    prob = SubspaceProblem([f"tau={k * dtau:g}" for k in range(d)], s, hm, threshold)
    return prob, prob.solve()


# -- qEOM -----------------------------------------------------------------------------------


def double_commutator(a: PauliSum, b: PauliSum, c: PauliSum) -> PauliSum:
    """``[A, B, C] = ([[A, B], C] + [A, [B, C]]) / 2``."""
    return 0.5 * (commutator(commutator(a, b), c) + commutator(a, commutator(b, c)))


@dataclass
class QEOMResult:
    excitation_energies: np.ndarray
    metric_eigenvalues: np.ndarray
    kept: int

    def to_dict(self) -> dict:
        return {
            "excitation_energies": [float(e) for e in self.excitation_energies],
            "metric_eigenvalues": [float(e) for e in self.metric_eigenvalues],
            "kept": self.kept,
        }


def qeom(
    h: PauliSum,
    psi0: StateVector | np.ndarray,
    excitations: Sequence[PauliSum],
    threshold: float = DEFAULT_THRESHOLD,
    energy_tol: float = 1e-9,
) -> QEOMResult:
    """Equation-of-motion excitation energies from double-commutator matrix elements.

    With the operator manifold ``{E_mu^dag} + {E_mu}`` the blocks

        M = <[E_mu, H, E_nu^dag]>,   Q = -<[E_mu, H, E_nu]>,
        V = <[E_mu, E_nu^dag]>,      W = -<[E_mu, E_nu]>

    form ``[[M, Q], [Q*, M*]] z = w [[V, W], [-W*, -V*]] z``.  The metric is
    canonically orthogonalized on the magnitude of its eigenvalues; roots with
    positive metric norm and positive ``w`` are returned, sorted.
    """
    if not excitations:
        raise ArgumentError("excitation basis is empty")
    psi = _as_vector(psi0)

    def ev(op: PauliSum) -> complex:
        return complex(np.vdot(psi, op.apply(psi)))

    ops = list(excitations)
    m = len(ops)
    big_m = np.zeros((m, m), complex)
    big_q = np.zeros((m, m), complex)
    big_v = np.zeros((m, m), complex)
    big_w = np.zeros((m, m), complex)
    for i, ei in enumerate(ops):
        for j, ej in enumerate(ops):
            ejd = ej.adjoint()
            big_m[i, j] = ev(double_commutator(ei, h, ejd))
            big_q[i, j] = -ev(double_commutator(ei, h, ej))
            big_v[i, j] = ev(commutator(ei, ejd))
            big_w[i, j] = -ev(commutator(ei, ej))
    a = np.block([[big_m, big_q], [big_q.conj(), big_m.conj()]])
    g = np.block([[big_v, big_w], [-big_w.conj(), -big_v.conj()]])
    gw, gu = np.linalg.eigh(0.5 * (g + g.conj().T))
    keep = np.abs(gw) >= threshold
    if not keep.any():
        raise DegenerateBasisError("qEOM metric vanishes on the whole basis")
    x = gu[:, keep]
    ap = x.conj().T @ a @ x
    gp = np.diag(gw[keep])
    vals, vecs = np.linalg.eig(np.linalg.solve(gp, ap))
    out = []
    for k in range(vals.size):
        z = vecs[:, k]
        norm = float(np.real(np.vdot(z, gp @ z)))
        if norm > 0 and abs(vals[k].imag) < 1e-7 and vals[k].real > energy_tol:
            out.append(vals[k].real)
    if any(abs(v.imag) >= 1e-7 for v in vals):
        warnings.warn("qEOM produced complex roots; the reference state may be far from an eigenstate", RuntimeWarning, stacklevel=2)
    return QEOMResult(np.sort(np.array(out)), gw, int(keep.sum()))


def fermionic_excitation_operators(n_modes: int, n_electrons: int, reference: int | None = None) -> list[PauliSum]:
    """Jordan-Wigner images of the excitations ``E_mu^dag`` (singles and doubles) from the reference.

    Returned as the de-excitations ``E_mu`` used in the qEOM manifold.
    """
    from .ansatz import uccsd_excitations

    doubles, singles = uccsd_excitations(n_modes, n_electrons, reference)
    ops = []
    for cre, ann in singles + doubles:
        term = tuple((c, True) for c in cre) + tuple((a, False) for a in ann)
        ops.append(jordan_wigner(FermionOperator(n_modes, {term: 1.0}).adjoint()))
    return ops


__all__ = [
    "QEOMResult",
    "SubspaceProblem",
    "SubspaceSolution",
    "double_commutator",
    "fermionic_excitation_operators",
    "fermionic_single_excitations",
    "hadamard_test",
    "pauli_excitations",
    "qeom",
    "qfd",
    "qlanczos",
    "qse",
    "solve_generalized",
]
