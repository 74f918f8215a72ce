"""Variational and subspace eigensolvers, variational dynamics and imaginary-time evolution."""

from __future__ import annotations

from .ansatz import (
    Ansatz,
    adaptive_ansatz,
    default_reference,
    fermionic_pool,
    hardware_efficient_ansatz,
    uccsd_ansatz,
    uccsd_excitations,
    uccsd_generators,
)
from .optimize import OptimizerConfig, OptimizeResult, minimize
from .qite import QITEResult, QITEStep, qite, qite_step
from .subspace import (
    QEOMResult,
    SubspaceProblem,
    SubspaceSolution,
    fermionic_excitation_operators,
    hadamard_test,
    pauli_excitations,
    qeom,
    qfd,
    qlanczos,
    qse,
    solve_generalized,
)
from .vqe import (
    MeasurementPlan,
    VQEResult,
    adapt_select,
    adapt_vqe,
    estimate_energy,
    exact_energy,
    parameter_shift_gradient,
    vqe_minimize,
)
from .vqs import VQSTrajectory, vqs_evolve, vqs_step

__all__ = [
    "Ansatz",
    "MeasurementPlan",
    "OptimizeResult",
    "OptimizerConfig",
    "QEOMResult",
    "QITEResult",
    "QITEStep",
    "SubspaceProblem",
    "SubspaceSolution",
    "VQEResult",
    "VQSTrajectory",
    "adapt_select",
    "adapt_vqe",
    "adaptive_ansatz",
    "default_reference",
    "estimate_energy",
    "exact_energy",
    "fermionic_excitation_operators",
    "fermionic_pool",
    "hadamard_test",
    "hardware_efficient_ansatz",
    "minimize",
    "parameter_shift_gradient",
    "pauli_excitations",
    "qeom",
    "qfd",
    "qite",
    "qite_step",
    "qlanczos",
    "qse",
    "solve_generalized",
    "uccsd_ansatz",
    "uccsd_excitations",
    "uccsd_generators",
    "vqe_minimize",
    "vqs_evolve",
    "vqs_step",
]
