"""Incoherent gate noise on density matrices and three error-mitigation protocols.

Noise channels act on every qubit a gate touches, right after the gate, in
the order amplitude damping, phase damping, depolarizing.  A global factor
``c`` multiplies every rate, which is how zero-noise extrapolation stretches
the noise in software.

Mitigation covers affine readout correction, Richardson zero-noise
extrapolation and post-selection on measured symmetry parities.
"""

from __future__ import annotations

import math
import warnings
from collections.abc import Callable, Mapping, Sequence
from dataclasses import asdict, dataclass, field

import numpy as np

from .clifford import measurement_clifford
from .errors import ArgumentError, DimensionError, EmptyEnsembleError, FitError
from .pauli import PauliString, PauliSum, group_commuting
from .simulator import Circuit, DensityMatrix, StateVector, check_kraus, make_rng, sample_counts

LAMBDA_TOLERANCE = 0.02
ILL_CONDITIONED = 1e6

_I2 = np.eye(2, dtype=complex)
_X = np.array([[0, 1], [1, 0]], dtype=complex)
_Y = np.array([[0, -1j], [1j, 0]], dtype=complex)
_Z = np.diag([1.0, -1.0]).astype(complex)


# -- channels --------------------------------------------------------------------------------


def depolarizing_kraus(eps: float) -> list[np.ndarray]:
    """``rho -> (1 - eps) rho + eps I/2``; ``eps = 1`` is the fully mixed state."""
    _check_rate(eps, "depolarizing")
    return [math.sqrt(1 - 0.75 * eps) * _I2] + [math.sqrt(eps / 4) * p for p in (_X, _Y, _Z)]


def amplitude_damping_kraus(gamma: float) -> list[np.ndarray]:
    """Decay ``|1> -> |0>`` with probability ``gamma``."""
    _check_rate(gamma, "amplitude damping")
    return [
        np.array([[1, 0], [0, math.sqrt(1 - gamma)]], dtype=complex),
        np.array([[0, math.sqrt(gamma)], [0, 0]], dtype=complex),
    ]


def phase_damping_kraus(lam: float) -> list[np.ndarray]:
    """Coherences shrink by ``sqrt(1 - lam)``; populations are untouched."""
    _check_rate(lam, "phase damping")
    return [
        np.array([[1, 0], [0, math.sqrt(1 - lam)]], dtype=complex),
        np.array([[0, 0], [0, math.sqrt(lam)]], dtype=complex),
    ]


def bit_flip_kraus(p: float) -> list[np.ndarray]:
    """Apply ``X`` with probability ``p``."""
    _check_rate(p, "bit flip")
    return [math.sqrt(1 - p) * _I2, math.sqrt(p) * _X]


def _check_rate(rate: float, name: str) -> None:
    if not 0.0 <= rate <= 1.0:
        raise ArgumentError(f"{name} rate {rate} outside [0, 1]")


def apply_channel_everywhere(rho: DensityMatrix, kraus: Sequence[np.ndarray]) -> DensityMatrix:
    """Apply a single-qubit channel independently to every qubit (in place)."""
    for q in range(rho.n_qubits):
        rho.apply_kraus(kraus, [q])
    return rho


@dataclass
class NoiseModel:
    """Per-gate incoherent noise rates and a global scale factor.

    Attributes:
        depolarizing: Depolarizing strength per qubit per gate.
        amplitude_damping: Amplitude-damping probability per qubit per gate.
        phase_damping: Phase-damping probability per qubit per gate.
        scale: Factor ``c`` multiplying every rate; products above 1 are
            clipped to 1 with a warning.
    """

    depolarizing: float = 0.0
    amplitude_damping: float = 0.0
    phase_damping: float = 0.0
    scale: float = 1.0

    def __post_init__(self):
        for name in ("depolarizing", "amplitude_damping", "phase_damping"):
            _check_rate(getattr(self, name), name.replace("_", " "))
        if self.scale < 0:
            raise ArgumentError("noise scale must be non-negative")
        self._kraus = []
        for builder, rate in (
            (amplitude_damping_kraus, self.amplitude_damping),
            (phase_damping_kraus, self.phase_damping),
            (depolarizing_kraus, self.depolarizing),
        ):
            eff = self._effective(rate)
            if eff > 0:
                kraus = builder(eff)
                check_kraus(kraus)
                self._kraus.append(kraus)

    def _effective(self, rate: float) -> float:
        eff = self.scale * rate
        if eff > 1.0:
            warnings.warn(f"scaled noise rate {eff:g} clipped to 1", RuntimeWarning, stacklevel=4)
            eff = 1.0
        return eff

    def scaled(self, c: float) -> NoiseModel:
        """Same base rates with the scale factor multiplied by ``c``."""
        return NoiseModel(self.depolarizing, self.amplitude_damping, self.phase_damping, self.scale * c)

    @property
    def channels(self) -> list[list[np.ndarray]]:
        """Kraus sets applied after every gate, in order."""
        return list(self._kraus)

    @property
    def is_noiseless(self) -> bool:
        return not self._kraus

    def to_dict(self) -> dict:
        return {k: v for k, v in asdict(self).items() if not k.startswith("_")}

    @classmethod
    def from_dict(cls, d: Mapping) -> NoiseModel:
        unknown = set(d) - {"depolarizing", "amplitude_damping", "phase_damping", "scale"}
        if unknown:
            raise ArgumentError(f"unknown noise-model keys {sorted(unknown)}")
        return cls(**{k: float(v) for k, v in d.items()})


@dataclass
class NoisyResult:
    """Final density matrix, exact outcome probabilities and optional shot counts."""

    density: DensityMatrix
    probabilities: np.ndarray
    counts: np.ndarray | None = None
    seed: int | None = None

    def expectation(self, a: PauliSum | PauliString) -> float:
        return float(np.real(self.density.expectation(a)))


def run_noisy(
    circuit: Circuit,
    noise: NoiseModel,
    shots: int | None = None,
    seed: int | np.random.Generator | None = None,
    initial: DensityMatrix | StateVector | int | None = None,
    values: Mapping[str, float] | Sequence[float] | None = None,
) -> NoisyResult:
    """Run ``circuit`` on a density matrix, inserting the noise channels after each gate.

    Args:
        circuit: Gates to apply; identity gates also pick up noise, which
            models idling.
        noise: Channel rates and scale.
        shots: Number of measurement samples (``None`` for exact probabilities only).
        seed: Sampling seed.
        initial: Starting state (default ``|0...0>``); an integer selects a basis state.
        values: Symbolic parameter values.
    """
    n = circuit.n_qubits
    if initial is None:
        rho = DensityMatrix(n)
    elif isinstance(initial, int):
        v = np.zeros(1 << n, dtype=complex)
        v[initial] = 1.0
        rho = DensityMatrix.from_state(v)
    elif isinstance(initial, StateVector):
        rho = DensityMatrix.from_state(initial)
    else:
        rho = initial.copy()
    if rho.n_qubits != n:
        raise DimensionError("initial state and circuit widths differ")
    mapping = circuit._as_mapping(values)
    channels = noise.channels
    for g in circuit.gates:
        rho.apply(g, mapping)
        for q in g.all_qubits:
            for kraus in channels:
                rho.apply_kraus(kraus, [q])
    probs = rho.probabilities()
    if shots is None:
        return NoisyResult(rho, probs)
    if shots < 1:
        raise ArgumentError("shots must be positive")
    rng, used = make_rng(seed)
    return NoisyResult(rho, probs, sample_counts(probs, shots, rng), used)


# -- readout mitigation ------------------------------------------------------------------------


def calibration_circuits(n_qubits: int) -> list[Circuit]:
    """One circuit per basis state ``k``: an X layer on the set bits of ``k``."""
    out = []
    for k in range(1 << n_qubits):
        c = Circuit(n_qubits)
        for q in range(n_qubits):
            if (k >> q) & 1:
                c.add("X", q)
        out.append(c)
    return out


def apply_readout(probs: np.ndarray, lam: np.ndarray, delta: np.ndarray | None = None) -> np.ndarray:
    """Affine readout map ``p -> Lambda p + Delta``."""
    p = np.asarray(probs, dtype=float)
    out = np.asarray(lam, dtype=float) @ p
    if delta is not None:
        out = out + np.asarray(delta, dtype=float)
    return out


@dataclass
class ReadoutCalibration:
    """Fitted affine readout model ``p_exp = Lambda p_ideal + Delta``.

    On normalized distributions only the sum ``Lambda + Delta 1^T`` is
    observable.  The split puts into ``Delta`` the floor that every prepared
    state shares in each outcome, i.e. the row minimum of the fitted map, so
    a noiseless calibration yields ``Lambda = 1`` and ``Delta = 0``.
    """

    lam: np.ndarray
    delta: np.ndarray
    n_qubits: int
    residual: float
    shot_noise_floor: float | None = None

    @property
    def matrix(self) -> np.ndarray:
        """The observable map ``Lambda + Delta 1^T``."""
        return self.lam + np.outer(self.delta, np.ones(self.lam.shape[1]))

    @property
    def condition_number(self) -> float:
        return float(np.linalg.cond(self.lam))

    def to_dict(self) -> dict:
        return {
            "n_qubits": self.n_qubits,
            "lambda": self.lam.tolist(),
            "delta": self.delta.tolist(),
            "residual": self.residual,
            "shot_noise_floor": self.shot_noise_floor,
            "condition_number": self.condition_number,
        }


def calibrate_readout(
    measured: np.ndarray | Sequence[Sequence[float]],
    ideal: np.ndarray | Sequence[Sequence[float]] | None = None,
    shots: int | None = None,
) -> ReadoutCalibration:
    """Least-squares fit of the affine readout model.

    Args:
        measured: Row ``j`` is the measured distribution of calibration circuit ``j``.
        ideal: Row ``j`` is its ideal distribution (default: the basis states
            prepared by :func:`calibration_circuits`, in order).
        shots: Shots per calibration circuit, used to report the expected
            residual from sampling alone.

    Raises:
        FitError: The ideal distributions do not span the outcome space.
    """
    p_exp = np.atleast_2d(np.asarray(measured, dtype=float))
    m, dim = p_exp.shape
    if dim & (dim - 1) or dim < 2:
        raise DimensionError("distribution length must be a power of two")
    q = np.eye(dim) if ideal is None else np.atleast_2d(np.asarray(ideal, dtype=float))
    if q.shape != p_exp.shape:
        raise DimensionError("measured and ideal distributions have different shapes")
    sol, _, rank, _ = np.linalg.lstsq(q, p_exp, rcond=None)
    if rank < dim:
        raise FitError(f"calibration set has rank {rank}; {dim} linearly independent preparations are needed")
    full = sol.T
    residual = float(np.linalg.norm(q @ sol - p_exp))
    delta = full.min(axis=1)
    lam = full - np.outer(delta, np.ones(dim))
    floor = None
    if shots is not None:
        # expected residual norm from multinomial sampling of the fitted model, minus fitted degrees of freedom
        var = float(np.sum(p_exp * (1 - p_exp))) / shots
        floor = math.sqrt(var * max(m - dim, 0) / m)
    if lam.min() < -LAMBDA_TOLERANCE or lam.max() > 1 + LAMBDA_TOLERANCE:
        warnings.warn("fitted readout matrix has entries outside the expected range", RuntimeWarning, stacklevel=2)
    return ReadoutCalibration(lam, delta, int(round(math.log2(dim))), residual, floor)


def project_to_simplex(v: np.ndarray) -> np.ndarray:
    """Euclidean projection onto ``{p >= 0, sum p = 1}`` (sort-and-threshold)."""
    v = np.asarray(v, dtype=float)
    u = np.sort(v)[::-1]
    css = np.cumsum(u) - 1.0
    k = np.arange(1, v.size + 1)
    rho = np.nonzero(u - css / k > 0)[0][-1]
    tau = css[rho] / (rho + 1)
    return np.maximum(v - tau, 0.0)


@dataclass
class ReadoutMitigation:
    probabilities: np.ndarray
    unprojected: np.ndarray
    condition_number: float

    def to_dict(self) -> dict:
        return {
            "probabilities": self.probabilities.tolist(),
            "unprojected": self.unprojected.tolist(),
            "condition_number": self.condition_number,
        }


def mitigate_readout(p_exp: np.ndarray | Sequence[float], cal: ReadoutCalibration) -> ReadoutMitigation:
    """``p_ideal = Lambda^{-1} (p_exp - Delta)`` projected onto the probability simplex."""
    p = np.asarray(p_exp, dtype=float)
    if p.shape != cal.delta.shape:
        raise DimensionError("distribution and calibration sizes differ")
    cond = cal.condition_number
    if cond > ILL_CONDITIONED:
        warnings.warn(f"readout matrix is ill-conditioned (condition number {cond:.2e})", RuntimeWarning, stacklevel=2)
    raw = np.linalg.lstsq(cal.lam, p - cal.delta, rcond=None)[0]
    return ReadoutMitigation(project_to_simplex(raw), raw, cond)


def total_variation(p: np.ndarray, q: np.ndarray) -> float:
    return 0.5 * float(np.abs(np.asarray(p) - np.asarray(q)).sum())


# -- zero-noise extrapolation -----------------------------------------------------------------


def richardson_weights(scales: Sequence[float], order: int | None = None) -> np.ndarray:
    """Weights ``w`` with ``sum_i w_i c_i^k = [k == 0]`` for ``k <= order``.

    With ``order = len(scales) - 1`` these are the Lagrange weights
    ``w_i = prod_{j != i} c_j / (c_j - c_i)``; with fewer orders they are the
    intercept row of the least-squares polynomial fit.
    """
    c = np.asarray(scales, dtype=float)
    if c.ndim != 1 or c.size == 0:
        raise ArgumentError("need at least one scale factor")
    if np.unique(c).size != c.size:
        raise ArgumentError("scale factors must be distinct")
    if (c < 1).any():
        raise ArgumentError("scale factors must be at least 1")
    n = c.size - 1 if order is None else order
    if n < 0 or c.size < n + 1:
        raise ArgumentError(f"order {n} needs at least {n + 1} scale factors")
    if n == c.size - 1:
        w = np.ones(c.size)
        for i in range(c.size):
            for j in range(c.size):
                if j != i:
                    w[i] *= c[j] / (c[j] - c[i])
        return w
    vander = np.vander(c, n + 1, increasing=True)
    return np.linalg.pinv(vander)[0]


@dataclass
class ZNEResult:
    value: float
    sigma: float
    scales: list[float]
    order: int
    weights: list[float]
    raw_values: list[float]
    raw_sigmas: list[float]

    def to_dict(self) -> dict:
        return asdict(self)


def zne(
    evaluator: Callable[[float], float | tuple[float, float]] | Sequence[float],
    scales: Sequence[float],
    order: int | None = None,
    sigmas: Sequence[float] | None = None,
) -> ZNEResult:
    """Richardson extrapolation of ``B(c eps)`` to ``c = 0``.

    Args:
        evaluator: Either a callable returning ``B`` (or ``(B, sigma)``) at a
            scale factor, or the already measured values, one per scale.
        scales: Distinct scale factors, all at least 1.
        order: Number of noise orders to cancel (default ``len(scales) - 1``).
        sigmas: Standard errors of precomputed values.

    Returns:
        The extrapolated value with ``sigma = sqrt(sum w_i^2 sigma_i^2)``,
        assuming independent evaluations.
    """
    w = richardson_weights(scales, order)
    if callable(evaluator):
        vals, errs = [], []
        for c in scales:
            out = evaluator(float(c))
            if isinstance(out, tuple):
                vals.append(float(out[0]))
                errs.append(float(out[1]))
            else:
                vals.append(float(out))
                errs.append(0.0)
    else:
        vals = [float(v) for v in evaluator]
        errs = [0.0] * len(vals) if sigmas is None else [float(s) for s in sigmas]
    if len(vals) != len(scales) or len(errs) != len(scales):
        raise DimensionError("one value and one sigma per scale factor are required")
    value = float(np.dot(w, vals))
    sigma = float(math.sqrt(np.dot(w**2, np.square(errs))))
    n = len(scales) - 1 if order is None else order
    return ZNEResult(value, sigma, [float(c) for c in scales], n, w.tolist(), vals, errs)


# -- symmetry post-selection -------------------------------------------------------------------


def _parity(idx: np.ndarray, mask: int) -> np.ndarray:
    return (np.bitwise_count(idx & int(mask)) & 1).astype(np.int64)


@dataclass
class PostSelection:
    """Surviving outcome counts after a parity filter."""

    counts: np.ndarray
    retained: int
    total: int

    @property
    def retention(self) -> float:
        return self.retained / self.total


def post_select(
    counts: np.ndarray, masks: Sequence[int], parities: Sequence[int]
) -> PostSelection:
    """Keep outcomes whose bits under each ``masks[k]`` have parity ``parities[k]``.

    Args:
        counts: Outcome counts indexed by basis state.
        masks: Bit masks of the measured stabilizer qubits.
        parities: Required parity (0 or 1) for each mask.

    Raises:
        EmptyEnsembleError: No outcome survives.
    """
    counts = np.asarray(counts)
    if len(masks) != len(parities):
        raise ArgumentError("one parity per mask is required")
    idx = np.arange(counts.size, dtype=np.int64)
    keep = np.ones(counts.size, dtype=bool)
    for mask, par in zip(masks, parities):
        if par not in (0, 1):
            raise ArgumentError("parities must be 0 or 1")
        keep &= _parity(idx, mask) == par
    kept = np.where(keep, counts, 0)
    total = int(counts.sum())
    retained = int(kept.sum())
    if retained == 0:
        raise EmptyEnsembleError("no shots satisfy the symmetry constraints")
    return PostSelection(kept, retained, total)


@dataclass
class PostSelectedEstimate:
    """Grouped-measurement estimate of ``<H>`` with and without post-selection."""

    mean: float
    std: float
    raw_mean: float
    raw_std: float
    retention: list[float] = field(default_factory=list)
    seed: int | None = None

    def to_dict(self) -> dict:
        return asdict(self)


def _as_density(state: DensityMatrix | StateVector | np.ndarray) -> DensityMatrix:
    if isinstance(state, DensityMatrix):
        return state.copy()
    return DensityMatrix.from_state(state)


def post_selected_expectation(
    h: PauliSum,
    state: DensityMatrix | StateVector | np.ndarray,
    symmetries: Sequence[tuple[PauliString, int]],
    shots: int,
    seed: int | np.random.Generator | None = None,
) -> PostSelectedEstimate:
    """Shot estimate of ``<H>`` discarding outcomes that violate the symmetries.

    Each commuting group of ``h`` is measured together with the symmetry
    strings (which must commute with every string of the group), so one
    Clifford rotation reads out both the group terms and the symmetry
    eigenvalues.  Outcomes whose symmetry eigenvalue differs from the
    required one (``+1`` or ``-1``) are dropped.
    """
    if shots < 2:
        raise ArgumentError("need at least two shots per group")
    rng, used = make_rng(seed)
    rho = _as_density(state)
    n = h.n_qubits
    if rho.n_qubits != n:
        raise DimensionError("state and Hamiltonian widths differ")
    for s, ev in symmetries:
        if ev not in (1, -1):
            raise ArgumentError("symmetry eigenvalues must be +1 or -1")
    constant = float(np.real(h.constant()))
    rest = h - PauliSum.identity(n, constant)
    idx = np.arange(1 << n, dtype=np.int64)
    mean = raw_mean = constant
    var = raw_var = 0.0
    retention = []
    for grp in group_commuting(rest):
        strings = [p for p, _ in grp.items()]
        coeffs = [float(c.real) for _, c in grp.items()]
        if not all(s.commutes(p) for s, _ in symmetries for p in strings):
            raise ArgumentError("every symmetry must commute with the Hamiltonian terms")
        sym = [s for s, _ in symmetries]
        circ, images = measurement_clifford(strings + sym, n)
        values = np.zeros(1 << n)
        for (mask, phase), c in zip(images[: len(strings)], coeffs):
            values += c * (-1.0 if phase == 2 else 1.0) * (1 - 2 * _parity(idx, mask))
        masks, parities = [], []
        for (mask, phase), (_, ev) in zip(images[len(strings) :], symmetries):
            sign = -1 if phase == 2 else 1
            masks.append(mask)
            parities.append(0 if sign * ev == 1 else 1)
        probs = rho.copy().apply(circ).probabilities()
        counts = sample_counts(probs, shots, rng)
        mu, v = _sample_stats(counts, values)
        raw_mean += mu
        raw_var += v
        sel = post_select(counts, masks, parities)
        mu, v = _sample_stats(sel.counts, values)
        mean += mu
        var += v
        retention.append(sel.retention)
    return PostSelectedEstimate(mean, math.sqrt(var), raw_mean, math.sqrt(raw_var), retention, used)


def _sample_stats(counts: np.ndarray, values: np.ndarray) -> tuple[float, float]:
    total = counts.sum()
    mu = float(np.dot(counts, values)) / total
    if total < 2:
        return mu, 0.0
    second = float(np.dot(counts, (values - mu) ** 2)) / (total - 1)
    return mu, second / total


def symmetry_projected_expectation(
    h: PauliSum, state: DensityMatrix | StateVector | np.ndarray, symmetries: Sequence[tuple[PauliString, int]]
) -> float:
    """``tr(P rho P H) / tr(P rho)`` with ``P`` the projector onto the symmetry sector."""
    rho = _as_density(state).matrix
    dim = rho.shape[0]
    proj = np.eye(dim, dtype=complex)
    for s, ev in symmetries:
        proj = proj @ (0.5 * (np.eye(dim) + ev * s.to_dense()))
    num = np.trace(proj @ rho @ proj @ h.to_dense())
    den = np.trace(proj @ rho)
    if abs(den) < 1e-15:
        raise EmptyEnsembleError("state has no weight in the symmetry sector")
    return float(np.real(num / den))


__all__ = [
    "NoiseModel",
    "NoisyResult",
    "PostSelectedEstimate",
    "PostSelection",
    "ReadoutCalibration",
    "ReadoutMitigation",
    "ZNEResult",
    "amplitude_damping_kraus",
    "apply_channel_everywhere",
    "apply_readout",
    "bit_flip_kraus",
    "calibrate_readout",
    "calibration_circuits",
    "depolarizing_kraus",
    "mitigate_readout",
    "phase_damping_kraus",
    "post_select",
    "post_selected_expectation",
    "project_to_simplex",
    "richardson_weights",
    "run_noisy",
    "symmetry_projected_expectation",
    "total_variation",
    "zne",
]
