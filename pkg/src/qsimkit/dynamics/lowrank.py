"""Low-rank (double-factorized) Trotter steps for molecular Hamiltonians.

With ``E_pr = sum_sigma a^dag_{p sigma} a_{r sigma}`` the electronic Hamiltonian is

    H = E_nuc + sum_pr T_pr E_pr + 1/2 sum_g (sum_pr L^g_pr E_pr)^2,
    T = h - 1/2 sum_q (pq|qr),

where ``(pr|qs) = sum_g L^g_pr L^g_qs``.  Each symmetric ``L^g = U diag(l) U^T``
becomes an orbital rotation ``R(U)`` around a diagonal quadratic form in
number operators, and the orbital rotation is compiled from a Givens
network.  Only the Jordan-Wigner encoding with blocked spins is supported.
"""

from __future__ import annotations

from collections.abc import Sequence

import numpy as np

from ..errors import UnsupportedError
from ..fermion import FermionOperator, excitation_generator, jordan_wigner
from ..hamio import LowRankFactors, MolecularIntegrals, cholesky_factorize, givens_decompose
from ..pauli import PauliString, PauliSum
from ..simulator import Circuit, Gate, pauli_rotation


def one_body_correction(eri: np.ndarray) -> np.ndarray:
    """``-1/2 sum_q (pq|qr)``, the shift from reordering the two-body term."""
    return -0.5 * np.einsum("pqqr->pr", eri)


def _e_op(matrix: np.ndarray, n: int) -> FermionOperator:
    terms = {}
    for p in range(n):
        for r in range(n):
            if matrix[p, r] != 0:
                for s in (0, 1):
                    terms[((p + s * n, True), (r + s * n, False))] = matrix[p, r]
    return FermionOperator(2 * n, terms)


def lowrank_hamiltonian(ints: MolecularIntegrals, factors: LowRankFactors) -> FermionOperator:
    """Rebuild ``H`` from the factorized form (for equivalence checks)."""
    n = ints.n_spatial
    t = ints.h + one_body_correction(ints.eri)
    out = FermionOperator.identity(2 * n, ints.e_nuc) + _e_op(t, n)
    for lg in factors.factors:
        e = _e_op(lg, n)
        out = out + 0.5 * (e * e)
    return out


def _diagonal_rotations(d: PauliSum, dt: float) -> list[Gate]:
    """``exp(-i dt D)`` for a Z-diagonal Pauli sum, one commuting rotation per term."""
    gates = []
    for p, c in d.items():
        gates.append(pauli_rotation(p, 2.0 * dt * c.real))
    return gates


def _number_sum(weights: Sequence[float], n_qubits: int) -> PauliSum:
    """``sum_j w_j n_j`` with ``n_j = (1 - Z_j) / 2``."""
    acc = PauliSum.zero(n_qubits)
    for j, w in enumerate(weights):
        if w:
            acc = acc + PauliSum.identity(n_qubits, 0.5 * w) - PauliSum.from_string(PauliString.single(n_qubits, j, "Z"), 0.5 * w)
    return acc


def _mode_phase(mode: int, phi: float, n_qubits: int) -> list[Gate]:
    """``exp(i phi n_mode) = exp(i phi / 2) Rz(phi)`` on the mode's qubit."""
    if abs(phi) < 1e-15:
        return []
    return [
        pauli_rotation(PauliString.identity(n_qubits), -phi),
        Gate("Rz", (mode,), angle=phi),
    ]


def _plane_rotation(k: int, l: int, theta: float, n_qubits: int) -> list[Gate]:
    """``exp(theta (a^dag_l a_k - a^dag_k a_l))`` in Jordan-Wigner form (two commuting rotations)."""
    if abs(theta) < 1e-15:
        return []
    kappa = excitation_generator(n_qubits, [l], [k])
    herm = jordan_wigner(kappa) * 1j  # exp(theta kappa) = exp(-i theta (i kappa))
    return [pauli_rotation(p, 2.0 * theta * c.real) for p, c in herm.items()]


def orbital_rotation_circuit(u: np.ndarray, n_spatial: int) -> Circuit:
    """Circuit for ``R`` with ``R a^dag_q R^dag = sum_p U_pq a^dag_p`` on both spin blocks."""
    net = givens_decompose(u)
    n_qubits = 2 * n_spatial
    circ = Circuit(n_qubits)
    # U = G_1 ... G_N D, and R(AB) = R(A) R(B), so D acts first in time
    for spin in (0, 1):
        off = spin * n_spatial
        for k, ph in enumerate(net.phases):
            circ.extend(_mode_phase(k + off, float(np.angle(ph)), n_qubits))
    for g in reversed(net.rotations):
        for spin in (0, 1):
            off = spin * n_spatial
            k, l = g.k + off, g.l + off
            # G = D_l(phi) Rot(theta) D_l(-phi); rightmost factor first
            circ.extend(_mode_phase(l, -g.phi, n_qubits))
            circ.extend(_plane_rotation(k, l, g.theta, n_qubits))
            circ.extend(_mode_phase(l, g.phi, n_qubits))
    return circ


def lowrank_trotter_step(
    ints: MolecularIntegrals,
    dt: float,
    factors: LowRankFactors | None = None,
    encoding: str = "jw",
    tol: float = 1e-8,
) -> Circuit:
    """First-order step ``prod_g R_g exp(-i dt D_g) R_g^dag * R_0 exp(-i dt D_0) R_0^dag * phase``."""
    if encoding.lower() not in ("jw", "jordanwigner"):
        raise UnsupportedError("low-rank steps are compiled for the Jordan-Wigner encoding only")
    if factors is None:
        factors = cholesky_factorize(ints.eri, tol)
    n = ints.n_spatial
    nq = 2 * n
    circ = Circuit(nq)
    circ.append(pauli_rotation(PauliString.identity(nq), 2.0 * dt * ints.e_nuc))
    t = ints.h + one_body_correction(ints.eri)
    blocks: list[tuple[np.ndarray, PauliSum]] = []
    eps, u0 = np.linalg.eigh(t)
    blocks.append((u0, _number_sum(list(eps) * 2, nq)))
    for lg in factors.factors:
        lam, ug = np.linalg.eigh(lg)
        quad = _number_sum(list(lam) * 2, nq)
        blocks.append((ug, 0.5 * (quad * quad)))
    for u, diag in blocks:
        rot = orbital_rotation_circuit(u, n)
        circ.extend(rot.inverse().gates)
        circ.extend(_diagonal_rotations(diag, dt))
        circ.extend(rot.gates)
    return circ


def lowrank_evolution_circuit(
    ints: MolecularIntegrals, t: float, n_steps: int, factors: LowRankFactors | None = None
) -> Circuit:
    step = lowrank_trotter_step(ints, t / n_steps, factors)
    circ = Circuit(step.n_qubits)
    for _ in range(n_steps):
        circ.extend(step.gates)
    return circ


def number_operator_phase(weights: Sequence[float], dt: float, n_qubits: int) -> list[Gate]:
    """``exp(-i dt sum_j w_j n_j)`` as rotations (exact for any ``dt``)."""
    return _diagonal_rotations(_number_sum(weights, n_qubits), dt)


__all__ = [
    "lowrank_hamiltonian",
    "lowrank_trotter_step",
    "lowrank_evolution_circuit",
    "orbital_rotation_circuit",
    "one_body_correction",
    "number_operator_phase",
]
