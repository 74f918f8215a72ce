"""Time evolution, phase estimation and state preparation."""

from __future__ import annotations

from .asp import ASPResult, adiabatic_prepare, ground_fidelity, molecular_asp_hamiltonians, spectral_gap
from .correlation import CorrelationResult, correlation_function, spectral_function, to_csv
from .lcu import (
    LCUCircuit,
    LCUDecomposition,
    OAAReport,
    QubiterateReport,
    build_qubiterate,
    lcu_apply,
    lcu_success_shots,
    oaa_amplify,
    taylor_evolve,
    taylor_polynomial,
    taylor_segment_error,
)
from .lowrank import lowrank_evolution_circuit, lowrank_hamiltonian, lowrank_trotter_step, orbital_rotation_circuit
from .qpe import QPEResult, phase_distribution, qft_circuit, qpe, qpe_energy, shifted_unitary
from .trotter import (
    EvolutionReport,
    a_priori_bound,
    exact_unitary,
    fit_loglog_slope,
    gamma_p,
    operator_error,
    second_order_bound,
    suzuki_coefficient,
    trotter_circuit,
    trotter_error_bound,
    trotter_evolve,
    trotter_unitary,
)

__all__ = [
    "ASPResult",
    "CorrelationResult",
    "EvolutionReport",
    "LCUCircuit",
    "LCUDecomposition",
    "OAAReport",
    "QPEResult",
    "QubiterateReport",
    "a_priori_bound",
    "adiabatic_prepare",
    "build_qubiterate",
    "correlation_function",
    "exact_unitary",
    "fit_loglog_slope",
    "gamma_p",
    "ground_fidelity",
    "lcu_apply",
    "lcu_success_shots",
    "lowrank_evolution_circuit",
    "lowrank_hamiltonian",
    "lowrank_trotter_step",
    "molecular_asp_hamiltonians",
    "oaa_amplify",
    "operator_error",
    "orbital_rotation_circuit",
    "phase_distribution",
    "qft_circuit",
    "qpe",
    "qpe_energy",
    "second_order_bound",
    "shifted_unitary",
    "spectral_function",
    "spectral_gap",
    "suzuki_coefficient",
    "taylor_evolve",
    "taylor_polynomial",
    "taylor_segment_error",
    "to_csv",
    "trotter_circuit",
    "trotter_error_bound",
    "trotter_evolve",
    "trotter_unitary",
]
