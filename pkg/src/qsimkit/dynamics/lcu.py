"""Linear combinations of unitaries, amplitude amplification and walk operators.

Register layout: system qubits ``0 .. n-1`` and ``n_a = ceil(log2 L)`` ancilla
qubits above them, so a joint state is stored as an ``(2**n_a, 2**n)`` array
whose row index is the ancilla value.  ``PREPARE`` is a real Householder
reflection mapping ``|0>`` to ``sum_l sqrt(alpha_l / alpha) |l>`` and
``SELECT = sum_l |l><l| (x) U_l`` (identity on unused ancilla values).
"""

from __future__ import annotations

import math
import warnings
from collections.abc import Sequence
from dataclasses import dataclass, field

import numpy as np

from ..errors import AnnihilationError, ArgumentError, DimensionError, UnsupportedError
from ..pauli import PauliString, PauliSum, apply_to_vector, multiply
from ..simulator import StateVector, make_rng, sample_counts
from .trotter import EvolutionReport, exact_unitary


@dataclass
class LCUDecomposition:
    """``X = sum_l alpha_l U_l`` with ``U_l = phase_l * P_l`` and ``alpha_l >= 0``."""

    alphas: np.ndarray
    unitaries: list[PauliString]
    phases: np.ndarray | None = None

    def __post_init__(self):
        self.alphas = np.asarray(self.alphas, dtype=float)
        if len(self.alphas) != len(self.unitaries) or len(self.unitaries) == 0:
            raise ArgumentError("need one nonnegative weight per unitary and at least one term")
        if np.any(self.alphas < 0):
            raise ArgumentError("LCU weights must be nonnegative")
        n = {u.n_qubits for u in self.unitaries}
        if len(n) != 1:
            raise DimensionError("all unitaries must act on the same register")
        if self.phases is None:
            self.phases = np.ones(len(self.unitaries), dtype=complex)
        self.phases = np.asarray(self.phases, dtype=complex)
        if not np.allclose(np.abs(self.phases), 1.0, atol=1e-12):
            raise ArgumentError("phases must have unit modulus")

    @classmethod
    def from_pauli_sum(cls, a: PauliSum) -> LCUDecomposition:
        """Weights ``|c_l|`` with the coefficient phase moved into the unitary."""
        alphas, units, phases = [], [], []
        for p, c in a.items():
            alphas.append(abs(c))
            units.append(p)
            phases.append(c / abs(c))
        if not units:
            raise ArgumentError("cannot build an LCU from an empty sum")
        return cls(np.array(alphas), units, np.array(phases))

    @property
    def n_qubits(self) -> int:
        return self.unitaries[0].n_qubits

    @property
    def n_terms(self) -> int:
        return len(self.unitaries)

    @property
    def alpha(self) -> float:
        return float(self.alphas.sum())

    @property
    def n_ancillae(self) -> int:
        return max(0, math.ceil(math.log2(self.n_terms))) if self.n_terms > 1 else 0

    def signed_unitaries(self) -> list[PauliString]:
        """Unitaries as signed Pauli strings (phases must be powers of ``i``)."""
        out = []
        for p, ph in zip(self.unitaries, self.phases):
            k = int(round(np.angle(ph) / (np.pi / 2))) % 4
            if abs(ph - 1j**k) > 1e-12:
                raise UnsupportedError("phase is not a power of i")
            out.append(PauliString(p.n_qubits, p.x, p.z, p.phase + k))
        return out

    def to_pauli_sum(self) -> PauliSum:
        acc = PauliSum.zero(self.n_qubits)
        for a, p, ph in zip(self.alphas, self.unitaries, self.phases):
            acc = acc + PauliSum.from_string(p, a * ph)
        return acc

    def to_dense(self) -> np.ndarray:
        dim = 1 << self.n_qubits
        out = np.zeros((dim, dim), dtype=complex)
        for a, p, ph in zip(self.alphas, self.unitaries, self.phases):
            out += a * ph * PauliSum.from_string(p).to_dense()
        return out

    def padded(self, target_alpha: float) -> LCUDecomposition:
        """Append a cancelling ``+I, -I`` pair so that ``alpha`` equals ``target_alpha``."""
        extra = target_alpha - self.alpha
        if extra < -1e-12:
            raise ArgumentError(f"alpha {self.alpha} already exceeds {target_alpha}")
        if extra <= 1e-15:
            return self
        ident = PauliString.identity(self.n_qubits)
        return LCUDecomposition(
            np.concatenate([self.alphas, [extra / 2, extra / 2]]),
            self.unitaries + [ident, ident],
            np.concatenate([self.phases, [1.0, -1.0]]),
        )


def prepare_unitary(alphas: np.ndarray, n_ancillae: int) -> np.ndarray:
    """Real orthogonal ``W_p`` with ``W_p |0> = sum_l sqrt(alpha_l / alpha) |l>`` (a Householder reflection)."""
    dim = 1 << n_ancillae
    amp = np.zeros(dim)
    amp[: len(alphas)] = np.sqrt(np.asarray(alphas) / np.sum(alphas))
    v = -amp
    v[0] += 1.0
    nv = np.dot(v, v)
    if nv < 1e-30:
        return np.eye(dim)
    return np.eye(dim) - 2.0 * np.outer(v, v) / nv


class LCUCircuit:
    """Dense-equivalent PREPARE / SELECT machinery for one decomposition."""

    def __init__(self, lcu: LCUDecomposition):
        self.lcu = lcu
        self.n = lcu.n_qubits
        self.n_a = lcu.n_ancillae
        self.wp = prepare_unitary(lcu.alphas, self.n_a)

    @property
    def shape(self) -> tuple[int, int]:
        return (1 << self.n_a, 1 << self.n)

    def embed(self, psi: np.ndarray) -> np.ndarray:
        out = np.zeros(self.shape, dtype=complex)
        out[0] = psi
        return out

    def select(self, joint: np.ndarray, adjoint: bool = False) -> np.ndarray:
        out = joint.copy()
        for l, (p, ph) in enumerate(zip(self.lcu.unitaries, self.lcu.phases)):
            # (phase P)^dag = conj(phase) P^dag
            ps = p.adjoint() if adjoint else p
            factor = np.conj(ph) if adjoint else ph
            out[l] = factor * apply_to_vector(ps, joint[l])
        return out

    def prepare(self, joint: np.ndarray, adjoint: bool = False) -> np.ndarray:
        w = self.wp.T if adjoint else self.wp
        return w @ joint

    def w(self, joint: np.ndarray) -> np.ndarray:
        """``W = PREPARE^dag SELECT PREPARE``."""
        return self.prepare(self.select(self.prepare(joint)), adjoint=True)

    def w_dag(self, joint: np.ndarray) -> np.ndarray:
        return self.prepare(self.select(self.prepare(joint), adjoint=True), adjoint=True)

    @staticmethod
    def reflect(joint: np.ndarray) -> np.ndarray:
        """``R = 1 - 2 |0><0|_a``."""
        out = joint.copy()
        out[0] = -out[0]
        return out

    def unitary(self) -> np.ndarray:
        """Dense ``W`` on the joint register (ancilla bits high)."""
        dim_a, dim_s = self.shape
        cols = []
        for k in range(dim_a * dim_s):
            e = np.zeros(dim_a * dim_s, dtype=complex)
            e[k] = 1.0
            cols.append(self.w(e.reshape(self.shape)).reshape(-1))
        return np.array(cols).T


def lcu_apply(lcu: LCUDecomposition, state: StateVector | np.ndarray, tol: float = 1e-14) -> tuple[StateVector, float]:
    """Post-selected LCU: returns ``X psi / ||X psi||`` and ``p = ||X psi||^2 / alpha^2``."""
    psi = state.amplitudes if isinstance(state, StateVector) else np.asarray(state, dtype=complex)
    if psi.shape[0] != 1 << lcu.n_qubits:
        raise DimensionError("state and LCU sizes differ")
    circ = LCUCircuit(lcu)
    out = circ.w(circ.embed(psi))
    block = out[0]
    p = float(np.vdot(block, block).real)
    if math.sqrt(p) * lcu.alpha < tol:
        raise AnnihilationError("the LCU annihilates the input state")
    return StateVector(lcu.n_qubits, block / math.sqrt(p)), p


def lcu_success_shots(
    lcu: LCUDecomposition, state: StateVector | np.ndarray, shots: int, seed: int | None = None
) -> tuple[float, float, int]:
    """Measure the ancilla register ``shots`` times; returns (frequency of all-zero, sigma, seed)."""
    psi = state.amplitudes if isinstance(state, StateVector) else np.asarray(state, dtype=complex)
    circ = LCUCircuit(lcu)
    out = circ.w(circ.embed(psi))
    probs = np.sum(np.abs(out) ** 2, axis=1)
    rng, used = make_rng(seed)
    counts = sample_counts(probs, shots, rng)
    f = counts[0] / shots
    return float(f), math.sqrt(max(f * (1 - f), 1e-300) / shots), used


@dataclass
class OAAReport:
    """Amplified success probability and the state left on the joint register."""

    p0: float
    p_k: float
    predicted: float
    theta: float
    k: int
    amplified: bool
    joint_state: np.ndarray = field(repr=False)

    def postselected(self) -> np.ndarray:
        block = self.joint_state[0]
        return block / np.linalg.norm(block)


def _is_unitary_proportional(lcu: LCUDecomposition, tol: float = 1e-10) -> bool:
    if lcu.n_qubits > 10:
        return False
    x = lcu.to_dense()
    g = x.conj().T @ x
    c = np.trace(g).real / g.shape[0]
    return bool(c > tol and np.allclose(g, c * np.eye(g.shape[0]), atol=tol * max(1.0, c)))


def oaa_amplify(lcu: LCUDecomposition, state: StateVector | np.ndarray, k: int) -> OAAReport:
    """Apply ``(-W R W^dag R)^k W`` to ``|0>|psi>``.

    For an encoded operator proportional to a unitary the ancilla-zero
    probability follows ``sin^2((2k + 1) theta)`` with ``sin theta = sqrt(p0)``.
    Otherwise the dynamics is the Chebyshev-polynomial variant and the
    report is flagged ``amplified=False``.
    """
    if k < 0:
        raise ArgumentError("k must be nonnegative")
    psi = state.amplitudes if isinstance(state, StateVector) else np.asarray(state, dtype=complex)
    circ = LCUCircuit(lcu)
    joint = circ.w(circ.embed(psi))
    p0 = float(np.vdot(joint[0], joint[0]).real)
    for _ in range(k):
        joint = -circ.w(circ.reflect(circ.w_dag(circ.reflect(joint))))
    pk = float(np.vdot(joint[0], joint[0]).real)
    theta = math.asin(min(1.0, math.sqrt(p0)))
    predicted = math.sin((2 * k + 1) * theta) ** 2
    unitary_like = _is_unitary_proportional(lcu)
    if not unitary_like and k > 0:
        warnings.warn("encoded operator is not proportional to a unitary; amplification is not oblivious", stacklevel=2)
    return OAAReport(p0, pk, predicted, theta, k, unitary_like, joint)


# -- truncated Taylor series ---------------------------------------------------------


def taylor_polynomial(h: PauliSum, dt: float, order: int) -> PauliSum:
    """``sum_{m <= K} (-i dt H)^m / m!`` as a Pauli sum."""
    n = h.n_qubits
    acc = PauliSum.identity(n)
    power = PauliSum.identity(n)
    for m in range(1, order + 1):
        power = power * h * (-1j * dt / m)
        acc = acc + power
    return acc


def taylor_segment_error(alpha_dt: float, order: int) -> float:
    """``sum_{m > K} x^m / m!`` for ``x = alpha dt``."""
    return max(0.0, math.exp(alpha_dt) - sum(alpha_dt**m / math.factorial(m) for m in range(order + 1)))


def taylor_evolve(
    h: PauliSum | LCUDecomposition,
    t: float,
    order: int,
    segments: int | None = None,
    state: StateVector | None = None,
    oracle: bool = True,
) -> EvolutionReport:
    """Truncated-Taylor LCU evolution with one oblivious amplification round per segment.

    Segments are chosen so that ``alpha dt <= ln 2``; each segment's LCU is
    padded to total weight 2 so that a single amplification round maps the
    ancilla-zero block to ``3A - 4 A A^dag A`` with ``A = V_K / 2``.
    """
    if isinstance(h, LCUDecomposition):
        h = h.to_pauli_sum()
    if not h.is_hermitian():
        raise ArgumentError("Hamiltonian must be Hermitian")
    alpha = h.norm1()
    n = h.n_qubits
    psi = (state.amplitudes if state is not None else StateVector(n).amplitudes).copy()
    if t == 0:
        return EvolutionReport(StateVector(n, psi), 0, f"taylor-{order}", 0.0, 0.0 if oracle else None)
    if order == 0:
        warnings.warn("Taylor order 0 approximates the evolution by the identity", stacklevel=2)
    if segments is None:
        segments = max(1, math.ceil(alpha * abs(t) / math.log(2)))
    dt = t / segments
    if alpha * abs(dt) > math.log(2) + 1e-12:
        raise ArgumentError(f"segment weight alpha*dt = {alpha * abs(dt):.3f} exceeds ln 2")
    vk = taylor_polynomial(h, dt, order)
    lcu = LCUDecomposition.from_pauli_sum(vk).padded(2.0)
    circ = LCUCircuit(lcu)
    success = []
    for _ in range(segments):
        joint = circ.w(circ.embed(psi))
        joint = -circ.w(circ.reflect(circ.w_dag(circ.reflect(joint))))
        block = joint[0]
        p = float(np.vdot(block, block).real)
        success.append(p)
        psi = block / math.sqrt(p)
    delta = taylor_segment_error(alpha * abs(dt), order)
    per_segment = delta + 1.5 * delta**2 + 0.5 * delta**3
    bound = segments * 2.0 * per_segment
    measured = None
    if oracle:
        ref = exact_unitary(h, t) @ (state.amplitudes if state is not None else StateVector(n).amplitudes)
        measured = float(np.linalg.norm(ref - psi))
    return EvolutionReport(
        StateVector(n, psi),
        segments,
        f"taylor-{order}",
        bound,
        measured,
        {"alpha": alpha, "dt": dt, "min_success": min(success), "lcu_terms": lcu.n_terms},
    )


# -- qubiterate ------------------------------------------------------------------------


@dataclass
class QubiterateReport:
    """Walk unitary plus its spectral checks against ``H / alpha``."""

    unitary: np.ndarray = field(repr=False)
    alpha: float
    eigenvalues: np.ndarray
    eigenphases: np.ndarray
    expected_phases: np.ndarray
    phase_error: float
    block_error: float


def _match_phases(found: np.ndarray, expected: np.ndarray) -> float:
    """Largest unit-circle distance after greedy nearest matching."""
    if len(found) != len(expected):
        return float("inf")
    zf = list(np.exp(1j * found))
    worst = 0.0
    for e in np.exp(1j * np.asarray(expected)):
        d = [abs(e - f) for f in zf]
        i = int(np.argmin(d))
        worst = max(worst, d[i])
        zf.pop(i)
    return float(worst)


def build_qubiterate(lcu: LCUDecomposition, degeneracy_tol: float = 1e-9) -> QubiterateReport:
    """``W_Q = (2|g><g| - 1) SELECT`` and its eigenphases on the walk subspaces.

    Requires Hermitian unitaries (``U_l^2 = 1``).  For each eigenvector
    ``|lambda>`` of ``H/alpha`` the span of ``|g>|lambda>`` and
    ``W_Q |g>|lambda>`` is invariant with eigenphases ``+/- arccos(lambda)``
    (a single phase when ``|lambda| = 1``).
    """
    signed = lcu.signed_unitaries()
    if any(not p.is_hermitian() for p in signed):
        raise ArgumentError("qubitization needs Hermitian unitaries")
    circ = LCUCircuit(lcu)
    dim_a, dim_s = circ.shape
    g = circ.wp[:, 0]
    refl = 2.0 * np.outer(g, g) - np.eye(dim_a)
    dim = dim_a * dim_s
    sel = np.zeros((dim, dim), dtype=complex)
    for l in range(dim_a):
        block = np.eye(dim_s, dtype=complex)
        if l < lcu.n_terms:
            block = PauliSum.from_string(signed[l]).to_dense()
        sel[l * dim_s : (l + 1) * dim_s, l * dim_s : (l + 1) * dim_s] = block
    wq = np.kron(refl, np.eye(dim_s)) @ sel
    h_over_alpha = lcu.to_dense() / lcu.alpha
    if np.linalg.norm(h_over_alpha, 2) > 1 + 1e-12:
        raise ArgumentError("||H / alpha|| exceeds 1")
    gs = np.kron(g[:, None], np.eye(dim_s))  # columns |g>|j>
    block = gs.T.conj() @ wq @ gs
    block_error = float(np.abs(block - h_over_alpha).max())
    lam, vecs = np.linalg.eigh(0.5 * (h_over_alpha + h_over_alpha.conj().T))
    lifted = gs @ vecs
    span = np.concatenate([lifted, wq @ lifted], axis=1)
    u, s, _ = np.linalg.svd(span, full_matrices=False)
    basis = u[:, s > 1e-10 * s.max()]
    restricted = basis.conj().T @ wq @ basis
    phases = np.angle(np.linalg.eigvals(restricted))
    expected = []
    for v in lam:
        v = float(np.clip(v, -1.0, 1.0))
        a = math.acos(v)
        if 1.0 - abs(v) < degeneracy_tol:
            expected.append(a)
        else:
            expected += [a, -a]
    expected = np.array(expected)
    return QubiterateReport(wq, lcu.alpha, lam, phases, expected, _match_phases(phases, expected), block_error)


def pauli_product(strings: Sequence[PauliString]) -> PauliString:
    out = PauliString.identity(strings[0].n_qubits)
    for s in strings:
        out = multiply(out, s)
    return out
