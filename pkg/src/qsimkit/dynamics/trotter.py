"""Product-formula time evolution with a-priori error bounds.

Terms are applied in the deterministic mask order of :class:`PauliSum`.  The
first-order step applies ``exp(-i dt h_1)`` first and ``exp(-i dt h_L)`` last;
the symmetric second-order step runs the same sweep with half steps and then
the reversed sweep.  Higher even orders follow the Suzuki recursion

    U_{2k+2}(dt) = U_{2k}(a dt)^2 U_{2k}((1 - 4a) dt) U_{2k}(a dt)^2,
    a = 1 / (4 - 4^{1/(2k+1)}).
"""

from __future__ import annotations

import math
from collections.abc import Sequence
from dataclasses import dataclass, field

import numpy as np
import scipy.linalg

from ..errors import ArgumentError
from ..pauli import PauliString, PauliSum, commutator
from ..simulator import Circuit, Gate, StateVector, pauli_rotation


def suzuki_coefficient(k: int) -> float:
    """``a_{2k} = 1/(4 - 4^{1/(2k+1)})`` used to lift order ``2k`` to ``2k + 2``."""
    return 1.0 / (4.0 - 4.0 ** (1.0 / (2 * k + 1)))


def _check_order(order: int) -> None:
    if order != 1 and (order < 2 or order % 2):
        raise ArgumentError(f"order must be 1 or a positive even number, got {order}")


def step_sequence(n_terms: int, order: int) -> list[tuple[int, float]]:
    """``(term index, time fraction)`` pairs for one step, in application order."""
    _check_order(order)
    if order == 1:
        return [(j, 1.0) for j in range(n_terms)]
    if order == 2:
        half = [(j, 0.5) for j in range(n_terms)]
        seq = half + half[::-1]
        # merge the two adjacent half steps of the last term
        merged: list[tuple[int, float]] = []
        for j, f in seq:
            if merged and merged[-1][0] == j:
                merged[-1] = (j, merged[-1][1] + f)
            else:
                merged.append((j, f))
        return merged
    a = suzuki_coefficient(order // 2 - 1)
    inner = step_sequence(n_terms, order - 2)
    out: list[tuple[int, float]] = []
    for scale in (a, a, 1 - 4 * a, a, a):
        out += [(j, f * scale) for j, f in inner]
    return out


def _terms(h: PauliSum) -> list[tuple[PauliString, float]]:
    if not h.is_hermitian():
        raise ArgumentError("product formulas need a Hermitian Hamiltonian")
    return [(p, float(c.real)) for p, c in h.items()]


def trotter_circuit(h: PauliSum, t: float, n_steps: int, order: int = 1) -> Circuit:
    """Circuit of Pauli rotations for ``(U_order(t / n_steps))^n_steps``."""
    if n_steps < 1:
        raise ArgumentError("n_steps must be at least 1")
    terms = _terms(h)
    dt = t / n_steps
    one = []
    for j, f in step_sequence(len(terms), order):
        p, c = terms[j]
        # exp(-i f dt c P) = R_P(2 f dt c)
        one.append(pauli_rotation(p, 2.0 * f * dt * c))
    circ = Circuit(h.n_qubits)
    for _ in range(n_steps):
        circ.extend(one)
    return circ


def trotter_unitary(h: PauliSum, t: float, n_steps: int, order: int = 1) -> np.ndarray:
    """Dense ``(U_order(t / n_steps))^n_steps`` built from exact term exponentials."""
    terms = _terms(h)
    dim = 1 << h.n_qubits
    dt = t / n_steps
    dense = [PauliSum.from_string(p).to_dense() for p, _ in terms]
    step = np.eye(dim, dtype=complex)
    for j, f in step_sequence(len(terms), order):
        ang = f * dt * terms[j][1]
        step = (math.cos(ang) * np.eye(dim) - 1j * math.sin(ang) * dense[j]) @ step
    return np.linalg.matrix_power(step, n_steps)


def exact_unitary(h: PauliSum, t: float) -> np.ndarray:
    """``exp(-i t H)`` via the Hermitian eigendecomposition."""
    w, v = np.linalg.eigh(h.to_dense())
    return (v * np.exp(-1j * t * w)) @ v.conj().T


def spectral_norm(m: np.ndarray) -> float:
    return float(np.linalg.norm(m, 2)) if m.size else 0.0


def _op_norm(a: PauliSum) -> float:
    """Spectral norm; exact without a dense matrix for a single weighted string."""
    if len(a) == 0:
        return 0.0
    if len(a) == 1:
        return abs(next(iter(a.terms.values())))
    return spectral_norm(a.to_dense())


def _as_groups(h: PauliSum | Sequence[PauliSum]) -> list[PauliSum]:
    if isinstance(h, PauliSum):
        return [PauliSum.from_string(p, c) for p, c in h.items()]
    return list(h)


def gamma_p(h: PauliSum | Sequence[PauliSum]) -> float:
    """``1/2 sum_{l < l'} ||[h_l, h_l']||`` over the supplied term groups."""
    groups = _as_groups(h)
    total = 0.0
    for i in range(len(groups)):
        for j in range(i + 1, len(groups)):
            total += _op_norm(commutator(groups[i], groups[j]))
    return 0.5 * total


def trotter_error_bound(h: PauliSum | Sequence[PauliSum], t: float, n_steps: int) -> float:
    """First-order bound ``gamma_p n_T dt^2`` on ``||e^{-itH} - U_1(dt)^{n_T}||``."""
    if n_steps < 1:
        raise ArgumentError("n_steps must be at least 1")
    dt = t / n_steps
    return gamma_p(h) * n_steps * dt * dt


def second_order_bound(h: PauliSum | Sequence[PauliSum], t: float, n_steps: int) -> float:
    """Nested-commutator bound for the symmetric second-order formula.

    Per step: ``dt^3/12 sum_l ||[B_l, [B_l, h_l]]|| + dt^3/24 sum_l ||[h_l, [h_l, B_l]]||``
    with ``B_l = sum_{l' > l} h_l'``.
    """
    groups = _as_groups(h)
    n = groups[0].n_qubits if groups else 0
    dt = t / n_steps
    a = b = 0.0
    for i, hl in enumerate(groups):
        tail = sum(groups[i + 1 :], PauliSum.zero(n))
        if len(tail) == 0:
            continue
        a += _op_norm(commutator(tail, commutator(tail, hl)))
        b += _op_norm(commutator(hl, commutator(hl, tail)))
    return n_steps * (abs(dt) ** 3) * (a / 12.0 + b / 24.0)


def taylor_tail_bound(h: PauliSum, t: float, n_steps: int, order: int) -> float:
    """Generic bound for an order-``p`` product formula.

    Both the formula and the exact exponential agree through order ``p`` in
    ``dt``; each remaining Taylor coefficient is bounded by ``beta^m / m!``
    with ``beta = sum_j |f_j| ||h_j||`` over the whole step sequence, giving
    ``2 (e^{beta dt} - sum_{m <= p} (beta dt)^m / m!)`` per step.
    """
    terms = _terms(h)
    seq = step_sequence(len(terms), order)
    beta = sum(abs(f) * abs(terms[j][1]) for j, f in seq) * abs(t) / n_steps
    tail = math.exp(beta) - sum(beta**m / math.factorial(m) for m in range(order + 1))
    return n_steps * 2.0 * max(tail, 0.0)


def a_priori_bound(h: PauliSum, t: float, n_steps: int, order: int) -> float:
    _check_order(order)
    if order == 1:
        return trotter_error_bound(h, t, n_steps)
    if order == 2:
        return second_order_bound(h, t, n_steps)
    return taylor_tail_bound(h, t, n_steps, order)


@dataclass
class EvolutionReport:
    """Outcome of a time evolution run."""

    state: StateVector
    n_steps: int
    order: int | str
    bound: float
    measured_error: float | None = None
    metadata: dict = field(default_factory=dict)

    def to_dict(self) -> dict:
        return {
            "n_steps": self.n_steps,
            "order": self.order,
            "bound": self.bound,
            "measured_error": self.measured_error,
            **self.metadata,
        }


def trotter_evolve(
    h: PauliSum,
    t: float,
    n_steps: int,
    order: int = 1,
    state: StateVector | None = None,
    oracle: bool = True,
) -> EvolutionReport:
    """Evolve ``state`` under ``exp(-i t H)`` with a product formula.

    With ``oracle=True`` the report includes the state error against the
    dense exponential.
    """
    _check_order(order)
    circ = trotter_circuit(h, t, n_steps, order)
    psi0 = state if state is not None else StateVector(h.n_qubits)
    out = circ.run(psi0)
    measured = None
    if oracle:
        exact = exact_unitary(h, t) @ psi0.amplitudes
        measured = float(np.linalg.norm(exact - out.amplitudes))
    return EvolutionReport(
        out,
        n_steps,
        order,
        a_priori_bound(h, t, n_steps, order),
        measured,
        {"term_order": [p.label for p, _ in h.items()], "gates": len(circ)},
    )


def operator_error(h: PauliSum, t: float, n_steps: int, order: int) -> float:
    """``||e^{-itH} - U_order(t/n)^n||`` in spectral norm."""
    return spectral_norm(exact_unitary(h, t) - trotter_unitary(h, t, n_steps, order))


def fit_loglog_slope(x: Sequence[float], y: Sequence[float]) -> float:
    """Least-squares slope of ``log y`` against ``log x``."""
    slope, _ = np.polyfit(np.log(np.asarray(x, float)), np.log(np.asarray(y, float)), 1)
    return float(slope)


def expm_hermitian(h: np.ndarray, t: float) -> np.ndarray:
    return scipy.linalg.expm(-1j * t * h)


def pauli_exponential_gate(p: PauliString, angle: float) -> Gate:
    """``exp(-i angle P)`` as a rotation gate."""
    return pauli_rotation(p, 2.0 * angle)
