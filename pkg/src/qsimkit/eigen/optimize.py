"""Classical optimizers for variational loops.

All optimizers minimize a scalar objective ``f(theta)``; ADAM and BFGS also
take a gradient callable (typically the parameter-shift rule).  Every run
records the objective trace and stops early, flagged as diverged, when the
best value has not improved and the current value has risen over a
``patience`` window.
"""

from __future__ import annotations

import warnings
from collections.abc import Callable
from dataclasses import asdict, dataclass, field

import numpy as np
import scipy.optimize

from ..errors import ArgumentError
from ..simulator import make_rng

Objective = Callable[[np.ndarray], float]
Gradient = Callable[[np.ndarray], np.ndarray]


@dataclass
class OptimizerConfig:
    """Optimizer choice and hyperparameters.

    Attributes:
        kind: ``"spsa"``, ``"adam"``, ``"bfgs"`` or ``"gd"`` (plain gradient descent).
        maxiter: Iteration budget.
        seed: RNG seed for SPSA perturbations (recorded when drawn).
        a, c, gamma: SPSA gains ``a_n = a / n`` and ``c_n = c / n^gamma``.  With
            ``calibrate=True``, ``a`` is instead the target size of the first
            update and the gain is rescaled by the measured gradient magnitude.
        calibrate: Run the SPSA gain calibration before iterating.
        calibration_samples: Perturbation pairs used by the calibration.
        average: SPSA returns the mean of the last ``average`` iterates (0 = last).
        step, beta1, beta2, eps: ADAM step size, moment decays and denominator guard.
        gtol: Gradient-norm stopping tolerance for gradient methods.
        patience: Window for the divergence check (0 disables it).
    """

    kind: str = "spsa"
    maxiter: int = 200
    seed: int | None = None
    a: float = 0.1
    c: float = 0.1
    gamma: float = 0.101
    calibrate: bool = True
    calibration_samples: int = 10
    average: int = 0
    step: float = 0.05
    beta1: float = 0.9
    beta2: float = 0.999
    eps: float = 1e-8
    gtol: float = 1e-8
    patience: int = 0

    def __post_init__(self):
        self.kind = self.kind.lower()
        if self.kind not in ("spsa", "adam", "bfgs", "gd"):
            raise ArgumentError(f"unknown optimizer {self.kind!r}")
        if self.maxiter < 1:
            raise ArgumentError("maxiter must be positive")
        if self.a <= 0 or self.c <= 0:
            raise ArgumentError("SPSA gains a and c must be positive")
        if not 0 < self.gamma < 1:
            raise ArgumentError("SPSA gamma must lie in (0, 1)")
        if not (0 < self.beta1 < 1 and 0 < self.beta2 < 1):
            raise ArgumentError("ADAM betas must lie in (0, 1)")

    def to_dict(self) -> dict:
        return asdict(self)


@dataclass
class OptimizeResult:
    x: np.ndarray
    fun: float
    trace: list[float] = field(default_factory=list)
    n_evaluations: int = 0
    n_iterations: int = 0
    diverged: bool = False
    seed: int | None = None
    message: str = ""


class _Counter:
    def __init__(self, f: Objective):
        self.f = f
        self.n = 0

    def __call__(self, x: np.ndarray) -> float:
        self.n += 1
        return float(self.f(x))


def _diverging(trace: list[float], patience: int) -> bool:
    """No improvement and a net rise over the last ``patience`` iterations."""
    if patience <= 0 or len(trace) <= patience:
        return False
    window = trace[-patience:]
    before = min(trace[:-patience])
    return min(window) > before and window[-1] > window[0]


def _warn_divergence(kind: str, it: int) -> None:
    warnings.warn(f"{kind} stopped at iteration {it}: objective rose over the patience window", RuntimeWarning, stacklevel=3)


def spsa(f: Objective, x0: np.ndarray, cfg: OptimizerConfig) -> OptimizeResult:
    """Simultaneous-perturbation stochastic approximation with Rademacher directions."""
    rng, used = make_rng(cfg.seed)
    fc = _Counter(f)
    x = np.array(x0, dtype=float)
    a = cfg.a
    if cfg.calibrate:
        mags = []
        for _ in range(cfg.calibration_samples):
            delta = rng.choice([-1.0, 1.0], size=x.size)
            diff = fc(x + cfg.c * delta) - fc(x - cfg.c * delta)
            mags.append(abs(diff) / (2 * cfg.c))
        g = float(np.mean(mags))
        if g > 0:
            a = cfg.a / g
    trace: list[float] = []
    history: list[np.ndarray] = []
    diverged = False
    n = 0
    for n in range(1, cfg.maxiter + 1):
        an = a / n
        cn = cfg.c / n**cfg.gamma
        delta = rng.choice([-1.0, 1.0], size=x.size)
        fp, fm = fc(x + cn * delta), fc(x - cn * delta)
        x = x - an * (fp - fm) / (2 * cn) * delta
        trace.append(0.5 * (fp + fm))
        history.append(x.copy())
        if _diverging(trace, cfg.patience):
            diverged = True
            _warn_divergence("SPSA", n)
            break
    if cfg.average > 0:
        x = np.mean(history[-cfg.average :], axis=0)
    return OptimizeResult(x, fc(x), trace, fc.n, n, diverged, used, "spsa finished")


def adam(f: Objective, grad: Gradient, x0: np.ndarray, cfg: OptimizerConfig) -> OptimizeResult:
    """ADAM with bias-corrected first and second moment estimates."""
    fc = _Counter(f)
    x = np.array(x0, dtype=float)
    m = np.zeros_like(x)
    v = np.zeros_like(x)
    trace: list[float] = []
    diverged = False
    it = 0
    for it in range(1, cfg.maxiter + 1):
        g = np.asarray(grad(x), dtype=float)
        if np.linalg.norm(g) < cfg.gtol:
            break
        m = cfg.beta1 * m + (1 - cfg.beta1) * g
        v = cfg.beta2 * v + (1 - cfg.beta2) * g * g
        mhat = m / (1 - cfg.beta1**it)
        vhat = v / (1 - cfg.beta2**it)
        x = x - cfg.step * mhat / (np.sqrt(vhat) + cfg.eps)
        trace.append(fc(x))
        if _diverging(trace, cfg.patience):
            diverged = True
            _warn_divergence("ADAM", it)
            break
    return OptimizeResult(x, fc(x), trace, fc.n, it, diverged, None, "adam finished")


def gradient_descent(f: Objective, grad: Gradient, x0: np.ndarray, cfg: OptimizerConfig) -> OptimizeResult:
    fc = _Counter(f)
    x = np.array(x0, dtype=float)
    trace: list[float] = []
    diverged = False
    it = 0
    for it in range(1, cfg.maxiter + 1):
        g = np.asarray(grad(x), dtype=float)
        if np.linalg.norm(g) < cfg.gtol:
            break
        x = x - cfg.step * g
        trace.append(fc(x))
        if _diverging(trace, cfg.patience):
            diverged = True
            _warn_divergence("gradient descent", it)
            break
    return OptimizeResult(x, fc(x), trace, fc.n, it, diverged, None, "gradient descent finished")


def bfgs(f: Objective, grad: Gradient | None, x0: np.ndarray, cfg: OptimizerConfig) -> OptimizeResult:
    """Quasi-Newton minimization (scipy) with the supplied gradient."""
    fc = _Counter(f)
    trace: list[float] = []
    res = scipy.optimize.minimize(
        fc,
        np.array(x0, dtype=float),
        jac=grad,
        method="BFGS",
        callback=lambda xk: trace.append(float(f(xk))),
        options={"maxiter": cfg.maxiter, "gtol": cfg.gtol},
    )
    return OptimizeResult(np.asarray(res.x), float(res.fun), trace, fc.n, int(res.nit), False, None, str(res.message))


def minimize(f: Objective, x0: np.ndarray, cfg: OptimizerConfig, grad: Gradient | None = None) -> OptimizeResult:
    if cfg.kind == "spsa":
        return spsa(f, x0, cfg)
    if grad is None and cfg.kind != "bfgs":
        raise ArgumentError(f"{cfg.kind} needs a gradient")
    if cfg.kind == "adam":
        return adam(f, grad, x0, cfg)
    if cfg.kind == "gd":
        return gradient_descent(f, grad, x0, cfg)
    return bfgs(f, grad, x0, cfg)


def finite_difference_gradient(f: Objective, x: np.ndarray, h: float = 1e-5) -> np.ndarray:
    """Central differences (oracle for parameter-shift checks)."""
    x = np.asarray(x, dtype=float)
    g = np.zeros_like(x)
    for k in range(x.size):
        e = np.zeros_like(x)
        e[k] = h
        g[k] = (f(x + e) - f(x - e)) / (2 * h)
    return g


__all__ = [
    "OptimizeResult",
    "OptimizerConfig",
    "adam",
    "bfgs",
    "finite_difference_gradient",
    "gradient_descent",
    "minimize",
    "spsa",
]
