"""Variational eigensolver loop, grouped measurement and adaptive operator selection."""

from __future__ import annotations

import math
from collections.abc import Sequence
from dataclasses import dataclass, field, replace

import numpy as np

from ..clifford import measurement_clifford
from ..errors import ArgumentError, DimensionError
from ..pauli import PauliSum, commutator, group_commuting
from ..simulator import Circuit, Estimate, StateVector, make_rng, sample_counts
from .ansatz import Ansatz, adaptive_ansatz
from .optimize import OptimizerConfig, minimize


# -- grouped measurement -----------------------------------------------------------------


@dataclass
class MeasurementGroup:
    """Commuting strings read out together after one Clifford rotation."""

    circuit: Circuit
    z_masks: np.ndarray
    coefficients: np.ndarray
    labels: list[str]

    def outcome_values(self, n_qubits: int) -> np.ndarray:
        """Group observable value for every computational-basis outcome."""
        idx = np.arange(1 << n_qubits, dtype=np.int64)
        vals = np.zeros(idx.size)
        for mask, c in zip(self.z_masks, self.coefficients):
            vals += c * (1 - 2 * (np.bitwise_count(idx & int(mask)) & 1).astype(np.int64))
        return vals


@dataclass
class MeasurementPlan:
    """Constant offset plus commuting groups covering every non-identity term."""

    n_qubits: int
    constant: float
    groups: list[MeasurementGroup]

    @classmethod
    def build(cls, h: PauliSum, qubit_wise: bool = False) -> MeasurementPlan:
        if not h.is_hermitian():
            raise ArgumentError("observable must be Hermitian")
        n = h.n_qubits
        constant = float(np.real(h.constant()))
        rest = h - PauliSum.identity(n, constant)
        groups = []
        for grp in group_commuting(rest, qubit_wise=qubit_wise):
            strings = [p for p, _ in grp.items()]
            circ, images = measurement_clifford(strings, n)
            masks, coeffs = [], []
            for (p, c), (mask, phase) in zip(grp.items(), images):
                if phase % 2:
                    raise ArgumentError(f"non-Hermitian image for {p.label}")
                masks.append(mask)
                coeffs.append(float(c.real) * (1.0 if phase == 0 else -1.0))
            groups.append(MeasurementGroup(circ, np.array(masks, dtype=np.int64), np.array(coeffs), [p.label for p in strings]))
        return cls(n, constant, groups)

    def exact(self, state: StateVector) -> float:
        total = self.constant
        for g in self.groups:
            probs = g.circuit.run(state).probabilities()
            total += float(np.dot(probs, g.outcome_values(self.n_qubits)))
        return total

    def estimate(self, state: StateVector, shots: int, rng: np.random.Generator) -> tuple[float, float]:
        """Sample mean and standard error with ``shots`` per group."""
        if shots < 2:
            raise ArgumentError("need at least two shots per group")
        mean, var = self.constant, 0.0
        for g in self.groups:
            probs = g.circuit.run(state).probabilities()
            counts = sample_counts(probs, shots, rng)
            vals = g.outcome_values(self.n_qubits)
            mu = float(np.dot(counts, vals)) / shots
            second = float(np.dot(counts, (vals - mu) ** 2)) / (shots - 1)
            mean += mu
            var += second / shots
        return mean, math.sqrt(var)


def estimate_energy(
    h: PauliSum, state: StateVector, shots: int, seed: int | np.random.Generator | None = None, qubit_wise: bool = False
) -> Estimate:
    """Shot estimate of ``<H>`` from grouped measurements (``shots`` per group)."""
    rng, used = make_rng(seed)
    mean, std = MeasurementPlan.build(h, qubit_wise).estimate(state, shots, rng)
    return Estimate(mean, std, shots, used)


# -- energies and gradients ------------------------------------------------------------


def exact_energy(ansatz: Ansatz, h: PauliSum, theta: Sequence[float]) -> float:
    psi = ansatz.state(theta).amplitudes
    return float(np.real(np.vdot(psi, h.apply(psi))))


def parameter_shift_gradient(
    ansatz: Ansatz,
    h: PauliSum,
    theta: Sequence[float],
    energy=None,
) -> np.ndarray:
    """``dE/dtheta_k = sum_g s_g [E(a_g + pi/2) - E(a_g - pi/2)] / 2`` over gates using ``theta_k``.

    ``energy`` maps a circuit to ``<H>`` (defaults to the exact expectation).
    """
    vals = ansatz.values(theta)
    index = {name: k for k, name in enumerate(ansatz.parameters)}
    ref = ansatz.reference_state()

    if energy is None:

        def energy(circ: Circuit) -> float:
            psi = circ.run(ref, vals).amplitudes
            return float(np.real(np.vdot(psi, h.apply(psi))))

    grad = np.zeros(ansatz.n_params)
    gates = ansatz.circuit.gates
    for pos, g in enumerate(gates):
        if g.param is None:
            continue
        plus = Circuit(ansatz.n_qubits, gates[:pos] + [replace(g, angle=g.angle + math.pi / 2)] + gates[pos + 1 :])
        minus = Circuit(ansatz.n_qubits, gates[:pos] + [replace(g, angle=g.angle - math.pi / 2)] + gates[pos + 1 :])
        grad[index[g.param]] += 0.5 * g.scale * (energy(plus) - energy(minus))
    return grad


# -- VQE ------------------------------------------------------------------------------------


@dataclass
class VQEResult:
    """Outcome of a variational minimization."""

    energy: float
    parameters: np.ndarray
    trace: list[float]
    mode: str
    iterations: int
    n_evaluations: int
    seed: int | None = None
    shots: int | None = None
    std: float | None = None
    exact_energy: float | None = None
    diverged: bool = False
    optimizer: dict = field(default_factory=dict)

    def to_dict(self) -> dict:
        return {
            "energy": self.energy,
            "parameters": [float(t) for t in self.parameters],
            "iterations": self.iterations,
            "n_evaluations": self.n_evaluations,
            "seed": self.seed,
            "mode": self.mode,
            "shots": self.shots,
            "std": self.std,
            "exact_energy": self.exact_energy,
            "diverged": self.diverged,
            "optimizer": self.optimizer,
        }


def vqe_minimize(
    h: PauliSum,
    ansatz: Ansatz,
    optimizer: OptimizerConfig | str = "bfgs",
    mode: str = "exact",
    shots: int | None = None,
    theta0: Sequence[float] | None = None,
    seed: int | None = None,
    qubit_wise: bool = False,
) -> VQEResult:
    """Minimize ``<psi(theta)|H|psi(theta)>``.

    Args:
        h: Hermitian Hamiltonian on the ansatz register.
        ansatz: Parameterized state family.
        optimizer: Configuration or optimizer name.
        mode: ``"exact"`` (statevector expectations) or ``"shots"``.
        shots: Shots per commuting group in shots mode.
        theta0: Initial parameters (default zeros).
        seed: Seed for measurement sampling and, when the optimizer config has
            none, for its perturbations.
        qubit_wise: Group by qubit-wise commutation instead of general commutation.

    Returns:
        In exact mode the best exact energy seen; in shots mode a fresh shot
        estimate at the final parameters (with its standard error) and the
        exact energy there for diagnostics.
    """
    if ansatz.n_qubits != h.n_qubits:
        raise DimensionError("ansatz and Hamiltonian widths differ")
    cfg = OptimizerConfig(kind=optimizer) if isinstance(optimizer, str) else optimizer
    x0 = np.zeros(ansatz.n_params) if theta0 is None else np.asarray(theta0, dtype=float)
    if mode == "exact":
        best = {"e": math.inf, "x": x0}

        def f(x: np.ndarray) -> float:
            e = exact_energy(ansatz, h, x)
            if e < best["e"]:
                best["e"], best["x"] = e, np.array(x)
            return e

        res = minimize(f, x0, cfg, grad=lambda x: parameter_shift_gradient(ansatz, h, x))
        return VQEResult(
            best["e"], best["x"], res.trace, mode, res.n_iterations, res.n_evaluations, res.seed,
            diverged=res.diverged, exact_energy=best["e"], optimizer=cfg.to_dict(),
        )
    if mode != "shots":
        raise ArgumentError(f"unknown mode {mode!r}")
    if shots is None or shots < 2:
        raise ArgumentError("shots mode needs a shot count of at least 2")
    rng, used = make_rng(seed)
    if cfg.seed is None and cfg.kind == "spsa":
        cfg = replace(cfg, seed=int(rng.integers(2**62)))
    plan = MeasurementPlan.build(h, qubit_wise)

    def f_shots(x: np.ndarray) -> float:
        return plan.estimate(ansatz.state(x), shots, rng)[0]

    def g_shots(x: np.ndarray) -> np.ndarray:
        vals = ansatz.values(x)
        ref = ansatz.reference_state()
        return parameter_shift_gradient(ansatz, h, x, energy=lambda c: plan.estimate(c.run(ref, vals), shots, rng)[0])

    res = minimize(f_shots, x0, cfg, grad=g_shots)
    final_state = ansatz.state(res.x)
    e, std = plan.estimate(final_state, shots, rng)
    return VQEResult(
        e, res.x, res.trace, mode, res.n_iterations, res.n_evaluations, used, shots, std,
        exact_energy=plan.exact(final_state), diverged=res.diverged, optimizer=cfg.to_dict(),
    )


# -- adaptive selection ----------------------------------------------------------------------


@dataclass
class AdaptSelection:
    index: int
    gradients: np.ndarray
    converged: bool


def adapt_select(
    pool: Sequence[PauliSum], state: StateVector | np.ndarray, h: PauliSum, threshold: float = 1e-6
) -> AdaptSelection:
    """Pool element with the largest ``|<psi|[H, A_i]|psi>|`` (lowest index on ties)."""
    if not pool:
        raise ArgumentError("operator pool is empty")
    psi = state.amplitudes if isinstance(state, StateVector) else np.asarray(state, dtype=complex)
    grads = np.array([float(np.real(np.vdot(psi, commutator(h, a).apply(psi)))) for a in pool])
    mags = np.abs(grads)
    top = mags.max()
    index = int(np.flatnonzero(mags >= top - 1e-12)[0])
    return AdaptSelection(index, grads, bool(top < threshold))


@dataclass
class AdaptResult:
    energy: float
    selected: list[int]
    ansatz: Ansatz
    parameters: np.ndarray
    gradient_norms: list[float]
    converged: bool


def adapt_vqe(
    h: PauliSum,
    pool: Sequence[PauliSum],
    reference: int,
    max_operators: int = 10,
    threshold: float = 1e-6,
    optimizer: OptimizerConfig | str = "bfgs",
) -> AdaptResult:
    """Grow an ansatz one pool operator at a time, re-optimizing all parameters (exact mode)."""
    chosen: list[int] = []
    theta = np.zeros(0)
    ans = adaptive_ansatz(h.n_qubits, reference, [])
    state = ans.reference_state()
    norms: list[float] = []
    converged = False
    energy = float(np.real(np.vdot(state.amplitudes, h.apply(state.amplitudes))))
    for _ in range(max_operators):
        sel = adapt_select(pool, state, h, threshold)
        norms.append(float(np.linalg.norm(sel.gradients)))
        if sel.converged:
            converged = True
            break
        chosen.append(sel.index)
        ans = adaptive_ansatz(h.n_qubits, reference, [pool[i] for i in chosen])
        res = vqe_minimize(h, ans, optimizer, theta0=np.append(theta, 0.0))
        theta = res.parameters
        energy = res.energy
        state = ans.state(theta)
    return AdaptResult(energy, chosen, ans, theta, norms, converged)


__all__ = [
    "AdaptResult",
    "AdaptSelection",
    "MeasurementGroup",
    "MeasurementPlan",
    "VQEResult",
    "adapt_select",
    "adapt_vqe",
    "estimate_energy",
    "exact_energy",
    "parameter_shift_gradient",
    "vqe_minimize",
]
