"""Quantum phase estimation with a gate-level inverse QFT.

The system occupies qubits ``0 .. n-1`` and the ``t`` ancillae sit above it;
ancilla ``j`` (qubit ``n + j``) is bit ``j`` of the readout integer ``z`` and
controls ``U^{2^j}``.  For ``U|u> = exp(2 pi i theta)|u>`` the readout
concentrates on ``z ~= 2^t theta``.
"""

from __future__ import annotations

import math
from collections.abc import Sequence
from dataclasses import dataclass, field

import numpy as np

from ..errors import ArgumentError, DimensionError
from ..pauli import PauliSum
from ..simulator import Circuit, Gate, StateVector, make_rng, sample_counts


def controlled_phase(control: int, target: int, phi: float) -> Gate:
    return Gate("CU", (control, target), matrix=np.diag([1.0, np.exp(1j * phi)]))


def qft_circuit(qubits: Sequence[int], n_qubits: int) -> Circuit:
    """``|x> -> 2^{-t/2} sum_z exp(2 pi i x z / 2^t) |z>`` on ``qubits`` (``qubits[0]`` least significant)."""
    t = len(qubits)
    circ = Circuit(n_qubits)
    for i in range(t - 1, -1, -1):
        circ.add("Had", qubits[i])
        for j in range(i - 1, -1, -1):
            circ.append(controlled_phase(qubits[j], qubits[i], math.pi / 2 ** (i - j)))
    for i in range(t // 2):
        circ.add("SWAP", qubits[i], qubits[t - 1 - i])
    return circ


def inverse_qft_circuit(qubits: Sequence[int], n_qubits: int) -> Circuit:
    return qft_circuit(qubits, n_qubits).inverse()


@dataclass
class QPEResult:
    """Readout distribution and phase estimate."""

    probabilities: np.ndarray
    counts: np.ndarray | None
    n_ancillae: int
    z_hat: int
    theta_hat: float
    seed: int | None = None
    circuit: Circuit | None = field(default=None, repr=False)

    def to_dict(self) -> dict:
        return {
            "n_ancillae": self.n_ancillae,
            "z_hat": self.z_hat,
            "theta_hat": self.theta_hat,
            "seed": self.seed,
            "probabilities": [float(p) for p in self.probabilities],
            "counts": None if self.counts is None else [int(c) for c in self.counts],
        }


def qpe_circuit(u: np.ndarray, n_system: int, n_ancillae: int) -> Circuit:
    """Hadamards, controlled ``U^{2^j}`` and the inverse QFT."""
    total = n_system + n_ancillae
    circ = Circuit(total)
    anc = [n_system + j for j in range(n_ancillae)]
    for a in anc:
        circ.add("Had", a)
    targets = tuple(range(n_system - 1, -1, -1))
    power = np.array(u, dtype=complex)
    for j, a in enumerate(anc):
        circ.append(Gate("CU", (a,) + targets, matrix=power))
        power = power @ power
    circ.extend(inverse_qft_circuit(anc, total).gates)
    return circ


def qpe(
    u: np.ndarray | Circuit,
    state: StateVector | np.ndarray,
    n_ancillae: int,
    shots: int | None = None,
    seed: int | None = None,
) -> QPEResult:
    """Run phase estimation; ``shots=None`` returns the exact readout distribution only."""
    if n_ancillae < 1:
        raise ArgumentError("need at least one ancilla")
    if isinstance(u, Circuit):
        u = u.to_unitary()
    u = np.asarray(u, dtype=complex)
    psi = state.amplitudes if isinstance(state, StateVector) else np.asarray(state, dtype=complex)
    n = int(round(math.log2(psi.shape[0])))
    if u.shape != (1 << n, 1 << n):
        raise DimensionError("unitary and state sizes differ")
    circ = qpe_circuit(u, n, n_ancillae)
    joint = np.zeros(1 << (n + n_ancillae), dtype=complex)
    joint[: 1 << n] = psi
    out = circ.run(StateVector(n + n_ancillae, joint))
    probs = np.sum(np.abs(out.amplitudes.reshape(1 << n_ancillae, 1 << n)) ** 2, axis=1)
    probs = probs / probs.sum()
    counts = None
    used = None
    if shots is not None:
        rng, used = make_rng(seed)
        counts = sample_counts(probs, shots, rng)
        z_hat = int(np.argmax(counts))
    else:
        z_hat = int(np.argmax(probs))
    return QPEResult(probs, counts, n_ancillae, z_hat, z_hat / 2**n_ancillae, used, circ)


def phase_distribution(theta: float, n_ancillae: int) -> np.ndarray:
    """Closed-form readout probabilities for an exact eigenstate with phase ``theta``."""
    big = 2**n_ancillae
    z = np.arange(big)
    delta = theta - z / big
    num = np.sin(np.pi * big * delta)
    den = np.sin(np.pi * delta)
    with np.errstate(invalid="ignore", divide="ignore"):
        p = np.where(np.abs(den) < 1e-15, 1.0, (num / (big * np.where(den == 0, 1, den))) ** 2)
    return p


def shifted_unitary(h: PauliSum, e1: float, e2: float) -> np.ndarray:
    """``exp(+i H')`` with ``H' = 2 pi (H - E1) / (E2 - E1)``, so eigenphase ``theta = (E - E1)/(E2 - E1)``."""
    if e2 <= e1:
        raise ArgumentError("need E2 > E1")
    w, v = np.linalg.eigh(h.to_dense())
    hp = 2 * np.pi * (w - e1) / (e2 - e1)
    return (v * np.exp(1j * hp)) @ v.conj().T


def qpe_energy(
    h: PauliSum,
    state: StateVector | np.ndarray,
    n_ancillae: int,
    e1: float,
    e2: float,
    shots: int | None = None,
    seed: int | None = None,
) -> tuple[float, QPEResult]:
    """Energy estimate ``E1 + theta_hat (E2 - E1)`` from the shifted and scaled evolution."""
    res = qpe(shifted_unitary(h, e1, e2), state, n_ancillae, shots, seed)
    return e1 + res.theta_hat * (e2 - e1), res
