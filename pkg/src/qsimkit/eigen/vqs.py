"""Variational real-time dynamics from McLachlan's principle.

Minimizing ``|| sum_k d_k psi theta_k' + i H psi ||`` over the parameter
velocities gives ``A theta' = b`` with ``A_rk = Re<d_r psi|d_k psi>`` and
``b_r = Im<d_r psi|H|psi>``.  No global-phase correction is applied; an
ansatz that should track phases exactly can carry an explicit phase parameter.
"""

from __future__ import annotations

import warnings
from collections.abc import Sequence
from dataclasses import dataclass, field

import numpy as np

from ..errors import ArgumentError
from ..pauli import PauliSum
from .ansatz import Ansatz

DEFAULT_REGULARIZATION = 1e-8


def mclachlan_system(ansatz: Ansatz, theta: Sequence[float], h: PauliSum) -> tuple[np.ndarray, np.ndarray]:
    """``(A, b)`` at ``theta``; ``A`` is the real Gram matrix of the derivative states."""
    psi = ansatz.state(theta).amplitudes
    d = np.array(ansatz.derivative_states(theta))
    a = np.real(d.conj() @ d.T)
    b = np.imag(d.conj() @ h.apply(psi))
    return a, b


def parameter_velocity(
    ansatz: Ansatz, theta: Sequence[float], h: PauliSum, reg: float = DEFAULT_REGULARIZATION
) -> np.ndarray:
    """Tikhonov-regularized least squares ``min ||A v - b||^2 + reg ||v||^2``."""
    a, b = mclachlan_system(ansatz, theta, h)
    w = np.linalg.eigvalsh(a)
    if w.size and w[0] < reg * max(w[-1], 1.0):
        warnings.warn(
            f"McLachlan matrix is rank deficient (smallest eigenvalue {w[0]:.2e}); step is set by the regularization",
            RuntimeWarning,
            stacklevel=3,
        )
    return np.linalg.solve(a.T @ a + reg * np.eye(a.shape[0]), a.T @ b)


def vqs_step(
    ansatz: Ansatz,
    theta: Sequence[float],
    h: PauliSum,
    dt: float,
    method: str = "rk4",
    reg: float = DEFAULT_REGULARIZATION,
) -> np.ndarray:
    """Advance the parameters by ``dt`` with explicit Euler or classical RK4."""
    theta = np.asarray(theta, dtype=float)

    def f(x: np.ndarray) -> np.ndarray:
        return parameter_velocity(ansatz, x, h, reg)

    if method == "euler":
        return theta + dt * f(theta)
    if method == "rk4":
        k1 = f(theta)
        k2 = f(theta + 0.5 * dt * k1)
        k3 = f(theta + 0.5 * dt * k2)
        k4 = f(theta + dt * k3)
        return theta + dt / 6.0 * (k1 + 2 * k2 + 2 * k3 + k4)
    raise ArgumentError(f"unknown integrator {method!r}")


@dataclass
class VQSTrajectory:
    times: np.ndarray
    parameters: np.ndarray
    method: str
    fidelities: np.ndarray | None = field(default=None)

    def to_dict(self) -> dict:
        out = {
            "times": [float(t) for t in self.times],
            "parameters": [[float(v) for v in row] for row in self.parameters],
            "method": self.method,
        }
        if self.fidelities is not None:
            out["fidelities"] = [float(f) for f in self.fidelities]
        return out


def vqs_evolve(
    ansatz: Ansatz,
    theta0: Sequence[float],
    h: PauliSum,
    t: float,
    n_steps: int,
    method: str = "rk4",
    reg: float = DEFAULT_REGULARIZATION,
    oracle: bool = False,
) -> VQSTrajectory:
    """Integrate the McLachlan equations; with ``oracle`` record fidelity to ``exp(-iHt) psi0``."""
    if n_steps < 1:
        raise ArgumentError("n_steps must be positive")
    dt = t / n_steps
    thetas = [np.asarray(theta0, dtype=float)]
    with warnings.catch_warnings(record=True) as caught:
        warnings.simplefilter("always", RuntimeWarning)
        for _ in range(n_steps):
            thetas.append(vqs_step(ansatz, thetas[-1], h, dt, method, reg))
    stiff = [w for w in caught if "rank deficient" in str(w.message)]
    for w in caught:
        if w not in stiff:
            warnings.warn_explicit(w.message, w.category, w.filename, w.lineno)
    if stiff:
        warnings.warn(
            f"McLachlan matrix was rank deficient in {len(stiff)} of the velocity solves; "
            "those steps are set by the regularization",
            RuntimeWarning,
            stacklevel=2,
        )
    times = np.linspace(0.0, t, n_steps + 1)
    fids = None
    if oracle:
        w, v = np.linalg.eigh(h.to_dense())
        psi0 = ansatz.state(thetas[0]).amplitudes
        c0 = v.conj().T @ psi0
        fids = []
        for tk, th in zip(times, thetas):
            exact = v @ (np.exp(-1j * w * tk) * c0)
            fids.append(abs(np.vdot(exact, ansatz.state(th).amplitudes)) ** 2)
        fids = np.array(fids)
    return VQSTrajectory(times, np.array(thetas), method, fids)


__all__ = ["VQSTrajectory", "mclachlan_system", "parameter_velocity", "vqs_evolve", "vqs_step"]
