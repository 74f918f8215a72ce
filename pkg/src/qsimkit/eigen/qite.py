"""Quantum imaginary-time evolution with least-squares unitary fits.

One step replaces ``exp(-dtau h)|psi> / norm`` by ``exp(-iA)|psi>`` with
``A = sum_i x_i P_i`` over Pauli strings on a domain.  The real coefficients
minimize ``|| delta - (-i A)|psi> ||`` with ``delta`` the normalized
imaginary-time increment, which is the linearization ``(1 - iA)|psi>``.

The fitted direction is then rescaled from the chord length ``sin(phi)`` to
the arc length ``phi``, where ``cos(phi) = <psi|psi'>``.  On a full domain
the minimum-norm fit is the generator of the rotation in the plane spanned by
``psi`` and ``psi'``, so the rescaled step reproduces the imaginary-time state
exactly; on smaller domains it is a least-squares approximation.
"""

from __future__ import annotations

import itertools
import math
from collections.abc import Sequence
from dataclasses import dataclass, field

import numpy as np
import scipy.linalg

from ..errors import ArgumentError, DimensionError
from ..pauli import PauliString, PauliSum
from ..simulator import StateVector


def domain_paulis(n_qubits: int, domain: Sequence[int] | None = None) -> list[PauliString]:
    """Non-identity Pauli strings supported on ``domain`` (all qubits by default), in mask order."""
    qubits = list(range(n_qubits)) if domain is None else sorted(set(domain))
    if any(not 0 <= q < n_qubits for q in qubits):
        raise DimensionError("domain qubit outside the register")
    out = []
    for letters in itertools.product("IXYZ", repeat=len(qubits)):
        if all(c == "I" for c in letters):
            continue
        out.append(PauliString.from_ops(n_qubits, dict(zip(qubits, letters))))
    out.sort(key=lambda p: (p.x, p.z))
    return out


@dataclass
class QITEStep:
    """Fitted coefficients and the updated state."""

    coefficients: np.ndarray
    paulis: list[PauliString]
    state: np.ndarray
    residual: float
    rank: int
    angle: float

    def to_dict(self) -> dict:
        return {
            "coefficients": {p.label: float(x) for p, x in zip(self.paulis, self.coefficients)},
            "residual": self.residual,
            "rank": self.rank,
            "angle": self.angle,
        }


def qite_step(
    h: PauliSum,
    psi: StateVector | np.ndarray,
    dtau: float,
    domain: Sequence[int] | None = None,
    rcond: float = 1e-12,
) -> QITEStep:
    """One QITE update of ``psi`` under ``h`` for imaginary time ``dtau``.

    Args:
        h: Hermitian term (or full Hamiltonian) driving the step.
        psi: Current normalized state.
        dtau: Imaginary-time step, positive.
        domain: Qubits the unitary may act on (default: all).
        rcond: Relative singular-value cutoff of the least-squares solve.
            The system is usually underdetermined, and ``rank`` reports its
            numerical rank.
    """
    if dtau <= 0:
        raise ArgumentError("dtau must be positive")
    v = np.asarray(psi.amplitudes if isinstance(psi, StateVector) else psi, dtype=complex)
    n = h.n_qubits
    if v.shape[0] != 1 << n:
        raise DimensionError("state and operator sizes differ")
    w, u = np.linalg.eigh(h.to_dense())
    target = u @ (np.exp(-dtau * (w - w[0])) * (u.conj().T @ v))
    target /= np.linalg.norm(target)
    delta = target - v
    paulis = domain_paulis(n, domain)
    cols = np.array([-1j * PauliSum.from_string(p).apply(v) for p in paulis]).T
    # real least squares over stacked real and imaginary parts
    m = np.vstack([cols.real, cols.imag])
    rhs = np.concatenate([delta.real, delta.imag])
    x, _, rank, _ = np.linalg.lstsq(m, rhs, rcond=rcond)
    fitted = cols @ x
    residual = float(np.linalg.norm(fitted - delta))
    chord = float(np.linalg.norm(fitted))
    overlap = float(np.clip(np.real(np.vdot(v, target)), -1.0, 1.0))
    phi = math.acos(overlap)
    if chord > 1e-15:
        x = x * (phi / chord)
    a = sum((xi * PauliSum.from_string(p).to_dense() for xi, p in zip(x, paulis)), np.zeros((1 << n, 1 << n), complex))
    new = scipy.linalg.expm(-1j * a) @ v
    return QITEStep(np.asarray(x), paulis, new, residual, int(rank), phi)


@dataclass
class QITEResult:
    energies: np.ndarray
    state: np.ndarray
    taus: np.ndarray
    reference_energies: np.ndarray | None = field(default=None)

    def to_dict(self) -> dict:
        out = {"taus": [float(t) for t in self.taus], "energies": [float(e) for e in self.energies]}
        if self.reference_energies is not None:
            out["reference_energies"] = [float(e) for e in self.reference_energies]
        return out


def qite(
    h: PauliSum,
    psi0: StateVector | np.ndarray,
    dtau: float,
    n_steps: int,
    domain: Sequence[int] | None = None,
    per_term: bool = False,
    oracle: bool = False,
) -> QITEResult:
    """Repeated QITE steps; ``per_term`` sweeps the Hamiltonian terms one by one.

    With ``oracle=True`` the dense imaginary-time energies ``E(tau)`` are
    recorded alongside for comparison.
    """
    if n_steps < 0:
        raise ArgumentError("n_steps must be non-negative")
    v = np.asarray(psi0.amplitudes if isinstance(psi0, StateVector) else psi0, dtype=complex)
    v = v / np.linalg.norm(v)
    hd = h.to_dense()
    energies = [float(np.real(np.vdot(v, hd @ v)))]
    terms = [PauliSum.from_string(p, c) for p, c in h.items() if p.weight] if per_term else [h]
    cur = v
    for _ in range(n_steps):
        for term in terms:
            cur = qite_step(term, cur, dtau, domain).state
        energies.append(float(np.real(np.vdot(cur, hd @ cur))))
    taus = dtau * np.arange(n_steps + 1)
    ref = None
    if oracle:
        w, u = np.linalg.eigh(hd)
        c0 = u.conj().T @ v
        ref = []
        for t in taus:
            vt = u @ (np.exp(-t * (w - w[0])) * c0)
            vt /= np.linalg.norm(vt)
            ref.append(float(np.real(np.vdot(vt, hd @ vt))))
        ref = np.array(ref)
    return QITEResult(np.array(energies), cur, taus, ref)


__all__ = ["QITEResult", "QITEStep", "domain_paulis", "qite", "qite_step"]
