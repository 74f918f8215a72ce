"""Dynamical correlation functions and spectral functions.

``C(t) = <Psi0| A exp(-i t (H - E0)) B |Psi0>`` is evaluated either densely or
through Hadamard tests: for Pauli strings ``P`` (from ``A``) and ``Q`` (from
``B``) an ancilla prepared in ``|+>`` controls ``Q`` before and ``P`` after the
uncontrolled evolution ``U(t)``, and ``<X> + i <Y>`` on the ancilla equals
``<Psi0| U(t)^dag P U(t) Q |Psi0>``.  When ``Psi0`` is an eigenstate of ``H``
with energy ``E0`` this is exactly the ``(P, Q)`` contribution to ``C(t)``.
"""

from __future__ import annotations

import csv
import io
import warnings
from collections.abc import Sequence
from dataclasses import dataclass

import numpy as np

from ..errors import ArgumentError, DimensionError
from ..pauli import PauliString, PauliSum
from ..simulator import Circuit, Gate, StateVector, make_rng
from .trotter import exact_unitary


@dataclass
class CorrelationResult:
    times: np.ndarray
    values: np.ndarray
    method: str
    seed: int | None = None

    def to_dict(self) -> dict:
        return {
            "times": [float(t) for t in self.times],
            "real": [float(v.real) for v in self.values],
            "imag": [float(v.imag) for v in self.values],
            "method": self.method,
            "seed": self.seed,
        }


def _state(psi: StateVector | np.ndarray) -> np.ndarray:
    return np.asarray(psi.amplitudes if isinstance(psi, StateVector) else psi, dtype=complex)


def _system_targets(n: int) -> tuple[int, ...]:
    return tuple(range(n - 1, -1, -1))


def hadamard_test_circuit(p: PauliString, q: PauliString, u: np.ndarray, imaginary: bool) -> Circuit:
    """Ancilla (top qubit) test whose ``<Z>`` is ``Re`` (or ``Im``) of ``<U^dag P U Q>``."""
    n = p.n_qubits
    anc = n
    targets = _system_targets(n)
    circ = Circuit(n + 1)
    circ.add("Had", anc)
    circ.append(Gate("U", targets, matrix=PauliSum.from_string(q).to_dense(), controls=(anc,)))
    circ.append(Gate("U", targets, matrix=u))
    circ.append(Gate("U", targets, matrix=PauliSum.from_string(p).to_dense(), controls=(anc,)))
    if imaginary:
        circ.add("Sdg", anc)
    circ.add("Had", anc)
    return circ


def _ancilla_z(out: StateVector, n: int) -> float:
    amps = out.amplitudes.reshape(2, 1 << n)
    return float(np.sum(np.abs(amps[0]) ** 2) - np.sum(np.abs(amps[1]) ** 2))


def correlation_function(
    a: PauliSum,
    b: PauliSum,
    h: PauliSum,
    psi0: StateVector | np.ndarray,
    times: Sequence[float],
    e0: float | None = None,
    method: str = "dense",
    shots: int | None = None,
    seed: int | None = None,
) -> CorrelationResult:
    """``C(t)`` on a time grid.

    Args:
        a, b: Operators in ``<Psi0| A e^{-it(H - E0)} B |Psi0>``.
        h: Hamiltonian.
        psi0: Reference state, usually the ground state.
        times: Evaluation times.
        e0: Energy shift; defaults to ``<Psi0|H|Psi0>``.
        method: ``"dense"`` or ``"hadamard"`` (one ancilla test per Pauli pair).
        shots: Hadamard-test shots per pair and quadrature; ``None`` is exact.
        seed: RNG seed for shot sampling.
    """
    if not (a.n_qubits == b.n_qubits == h.n_qubits):
        raise DimensionError("operators act on different registers")
    if method not in ("dense", "hadamard"):
        raise ArgumentError(f"unknown method {method!r}")
    psi = _state(psi0)
    n = h.n_qubits
    if e0 is None:
        e0 = float(np.real(np.vdot(psi, h.apply(psi))))
    times = np.asarray(times, dtype=float)
    out = np.zeros(times.size, dtype=complex)
    used = None
    if method == "dense":
        bpsi = b.apply(psi)
        apsi = a.adjoint().apply(psi)
        w, v = np.linalg.eigh(h.to_dense())
        left, right = v.conj().T @ apsi, v.conj().T @ bpsi
        for k, t in enumerate(times):
            out[k] = np.sum(left.conj() * np.exp(-1j * t * (w - e0)) * right)
        return CorrelationResult(times, out, method)
    rng = None
    if shots is not None:
        rng, used = make_rng(seed)
    resid = np.linalg.norm(h.apply(psi) - e0 * psi)
    if resid > 1e-8:
        warnings.warn(
            f"reference state is not an eigenstate (residual {resid:.2e}); the Hadamard-test path assumes one",
            RuntimeWarning,
            stacklevel=2,
        )
    start = np.zeros(1 << (n + 1), dtype=complex)
    start[: 1 << n] = psi
    for k, t in enumerate(times):
        u = exact_unitary(h, t)
        total = 0j
        for p, cp in a.items():
            for q, cq in b.items():
                vals = []
                for imaginary in (False, True):
                    res = hadamard_test_circuit(p, q, u, imaginary).run(StateVector(n + 1, start.copy()))
                    z = _ancilla_z(res, n)
                    if rng is not None:
                        ones = rng.binomial(shots, (1 - z) / 2)
                        z = 1 - 2 * ones / shots
                    vals.append(z)
                total += cp * cq * (vals[0] + 1j * vals[1])
        out[k] = total
    return CorrelationResult(times, out, method, used)


def spectral_function(
    times: Sequence[float],
    values: Sequence[complex],
    omegas: Sequence[float] | None = None,
    rtol: float = 1e-9,
) -> tuple[np.ndarray, np.ndarray]:
    """Discrete transform ``S(w) = dt sum_k C(t_k) e^{i w t_k}`` on a uniform grid."""
    t = np.asarray(times, dtype=float)
    c = np.asarray(values, dtype=complex)
    if t.size < 2 or t.size != c.size:
        raise ArgumentError("need matching time and value arrays with at least two points")
    steps = np.diff(t)
    dt = steps[0]
    if dt <= 0 or np.any(np.abs(steps - dt) > rtol * max(abs(dt), 1.0)):
        raise ArgumentError("spectral function needs a uniform, increasing time grid")
    if omegas is None:
        omegas = 2 * np.pi * np.fft.fftshift(np.fft.fftfreq(t.size, dt))
    w = np.asarray(omegas, dtype=float)
    s = dt * np.exp(1j * np.outer(w, t)) @ c
    return w, s


def to_csv(columns: dict[str, Sequence[float]]) -> str:
    """Render equal-length columns as CSV text with a header row."""
    names = list(columns)
    lengths = {len(columns[k]) for k in names}
    if len(lengths) > 1:
        raise DimensionError("CSV columns differ in length")
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(names)
    for row in zip(*(columns[k] for k in names)):
        writer.writerow([repr(float(v)) for v in row])
    return buf.getvalue()
