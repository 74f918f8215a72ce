"""Adiabatic state preparation along ``H(s) = H0 + s H1``.

The schedule is discretized into ``n_steps`` slices of length ``T / n_steps``;
slice ``j`` evolves under ``H(s_j)`` at its midpoint ``s_j = (j + 1/2) / n_steps``
with second-order Trotter inner steps (or the dense exponential).
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass, field

import numpy as np

from ..errors import ArgumentError, DimensionError
from ..fermion import build_molecular_hamiltonian, fock_operator, hartree_fock_occupation, jordan_wigner
from ..hamio import MolecularIntegrals
from ..pauli import PauliSum
from ..simulator import StateVector
from .trotter import exact_unitary, trotter_circuit

GAP_WARNING = 1e-6


@dataclass
class ASPResult:
    """Final state of an adiabatic sweep with diagnostics."""

    state: StateVector
    fidelity: float
    min_gap: float
    energy: float
    total_time: float
    n_steps: int
    gaps: np.ndarray = field(repr=False, default_factory=lambda: np.zeros(0))

    def to_dict(self) -> dict:
        return {
            "fidelity": self.fidelity,
            "min_gap": self.min_gap,
            "energy": self.energy,
            "total_time": self.total_time,
            "n_steps": self.n_steps,
        }


def _restrict(h: np.ndarray, basis: np.ndarray | None) -> np.ndarray:
    return h if basis is None else h[np.ix_(basis, basis)]


def ground_space(h: np.ndarray, basis: np.ndarray | None = None, degeneracy_tol: float = 1e-8) -> tuple[np.ndarray, np.ndarray]:
    """Eigenvalues and the (possibly degenerate) ground eigenvectors embedded in the full space."""
    w, v = np.linalg.eigh(_restrict(h, basis))
    k = int(np.sum(w <= w[0] + degeneracy_tol))
    vecs = v[:, :k]
    if basis is not None:
        full = np.zeros((h.shape[0], k), dtype=complex)
        full[basis] = vecs
        vecs = full
    return w, vecs


def spectral_gap(h: np.ndarray, basis: np.ndarray | None = None, degeneracy_tol: float = 1e-8) -> float:
    """Distance from the ground level to the next distinct level."""
    w = np.linalg.eigvalsh(_restrict(h, basis))
    above = w[w > w[0] + degeneracy_tol]
    return float(above[0] - w[0]) if above.size else float("inf")


def ground_fidelity(psi: np.ndarray, h: np.ndarray, basis: np.ndarray | None = None) -> float:
    """Weight of ``psi`` on the ground space of ``h``."""
    _, g = ground_space(h, basis)
    return float(np.sum(np.abs(g.conj().T @ psi) ** 2))


def adiabatic_prepare(
    h0: PauliSum,
    h1: PauliSum,
    total_time: float,
    n_steps: int,
    state: StateVector | np.ndarray | None = None,
    inner_steps: int = 1,
    method: str = "trotter",
    basis: np.ndarray | None = None,
) -> ASPResult:
    """Sweep from the ground state of ``h0`` towards that of ``h0 + h1``.

    Args:
        h0: Initial Hamiltonian.
        h1: Perturbation switched on linearly.
        total_time: Sweep duration ``T``; ``T = 0`` returns the initial state.
        n_steps: Number of schedule slices.
        state: Initial state; defaults to the ground state of ``h0`` within ``basis``.
        inner_steps: Second-order Trotter steps per slice.
        method: ``"trotter"`` or ``"exact"`` (dense exponential per slice).
        basis: Computational-basis indices of an invariant subspace used for
            ground states, gaps and fidelities (for example a particle-number
            sector).

    Returns:
        The final state, its ground-state fidelity for ``h0 + h1``, and the
        smallest gap sampled on the slice midpoints and endpoints.
    """
    if n_steps < 1 or inner_steps < 1:
        raise ArgumentError("n_steps and inner_steps must be positive")
    if total_time < 0:
        raise ArgumentError("total time must be non-negative")
    if h0.n_qubits != h1.n_qubits:
        raise DimensionError("H0 and H1 act on different registers")
    if method not in ("trotter", "exact"):
        raise ArgumentError(f"unknown method {method!r}")
    d0, d1 = h0.to_dense(), h1.to_dense()
    if state is None:
        _, g = ground_space(d0, basis)
        psi = g[:, 0].astype(complex)
    else:
        psi = np.array(state.amplitudes if isinstance(state, StateVector) else state, dtype=complex)
    n = h0.n_qubits
    dt = total_time / n_steps
    s_grid = np.concatenate([[0.0], (np.arange(n_steps) + 0.5) / n_steps, [1.0]])
    gaps = np.array([spectral_gap(d0 + s * d1, basis) for s in s_grid])
    min_gap = float(gaps.min())
    if min_gap < GAP_WARNING:
        warnings.warn(f"minimum spectral gap {min_gap:.3e} along the path; adiabatic transfer may fail", RuntimeWarning, stacklevel=2)
    if total_time > 0:
        for j in range(n_steps):
            hs = h0 + h1 * float(s_grid[j + 1])
            if method == "exact":
                psi = exact_unitary(hs, dt) @ psi
            else:
                psi = trotter_circuit(hs, dt, inner_steps, order=2).run(StateVector(n, psi)).amplitudes
    final = d0 + d1
    fid = ground_fidelity(psi, final, basis)
    energy = float(np.real(np.vdot(psi, final @ psi)))
    return ASPResult(StateVector(n, psi), fid, min_gap, energy, float(total_time), n_steps, gaps)


def molecular_asp_hamiltonians(ints: MolecularIntegrals) -> tuple[PauliSum, PauliSum, int]:
    """Mean-field split ``H0 = F + <HF|H - F|HF>``, ``H1 = H - H0`` in Jordan-Wigner form.

    Returns ``(H0, H1, hf_index)`` where ``hf_index`` is the computational basis
    index of the Hartree-Fock determinant, so ``<HF|H0|HF> = <HF|H|HF>``.
    """
    h = jordan_wigner(build_molecular_hamiltonian(ints))
    f = jordan_wigner(fock_operator(ints))
    hf = hartree_fock_occupation(ints.n_spatial, ints.n_up, ints.n_down)
    diff = h - f
    e = np.zeros(1 << h.n_qubits, dtype=complex)
    e[hf] = 1.0
    shift = float(np.real(np.vdot(e, diff.apply(e))))
    h0 = f + PauliSum.identity(h.n_qubits, shift)
    return h0, h - h0, hf
