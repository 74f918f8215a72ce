"""Parameterized state families: UCCSD, hardware-efficient and adaptive ansaetze.

Every parameterized gate is a Pauli or single-qubit rotation, so derivatives
follow from ``d/dtheta R_P(a + s theta) = (s/2) R_P(a + s theta + pi)``.
"""

from __future__ import annotations

import itertools
from collections.abc import Mapping, Sequence
from dataclasses import dataclass, field, replace

import numpy as np

from ..errors import ArgumentError, DimensionError
from ..fermion import excitation_generator, jordan_wigner
from ..pauli import PauliString, PauliSum
from ..simulator import Circuit, Gate, StateVector, pauli_rotation


@dataclass
class Ansatz:
    """A template circuit applied to a computational basis reference.

    Attributes:
        circuit: Gates with symbolic parameters; parameter order is the order
            of first appearance in the circuit.
        kind: ``"uccsd"``, ``"hardware_efficient"``, ``"adaptive"`` or ``"custom"``.
        reference: Basis index of the input state.
        metadata: Free-form provenance (excitation lists, Trotter pass, ...).
    """

    circuit: Circuit
    kind: str = "custom"
    reference: int = 0
    metadata: dict = field(default_factory=dict)

    @property
    def n_qubits(self) -> int:
        return self.circuit.n_qubits

    @property
    def parameters(self) -> list[str]:
        return self.circuit.parameters

    @property
    def n_params(self) -> int:
        return len(self.parameters)

    def values(self, theta: Sequence[float] | Mapping[str, float]) -> dict[str, float]:
        if isinstance(theta, Mapping):
            return dict(theta)
        theta = np.asarray(theta, dtype=float).reshape(-1)
        if theta.size != self.n_params:
            raise DimensionError(f"expected {self.n_params} parameters, got {theta.size}")
        return dict(zip(self.parameters, theta.tolist()))

    def reference_state(self) -> StateVector:
        return StateVector.basis(self.n_qubits, self.reference)

    def state(self, theta: Sequence[float] | Mapping[str, float]) -> StateVector:
        return self.circuit.run(self.reference_state(), self.values(theta))

    def derivative_states(self, theta: Sequence[float]) -> list[np.ndarray]:
        """``d|psi>/d theta_k`` for every parameter, by exact rotation shifts."""
        vals = self.values(theta)
        index = {name: k for k, name in enumerate(self.parameters)}
        out = [np.zeros(1 << self.n_qubits, dtype=complex) for _ in self.parameters]
        gates = self.circuit.gates
        for pos, g in enumerate(gates):
            if g.param is None:
                continue
            shifted = replace(g, angle=g.angle + np.pi)
            circ = Circuit(self.n_qubits, gates[:pos] + [shifted] + gates[pos + 1 :])
            out[index[g.param]] += 0.5 * g.scale * circ.run(self.reference_state(), vals).amplitudes
        return out


# -- unitary coupled cluster ---------------------------------------------------------------


def _mode_spin(mode: int, n_modes: int) -> int:
    return 0 if mode < n_modes // 2 else 1


def default_reference(n_modes: int, n_electrons: int) -> int:
    """Lowest up and down orbitals filled (blocked spins), the extra electron up for odd ``N``."""
    half = n_modes // 2
    n_up = (n_electrons + 1) // 2
    return sum(1 << p for p in range(n_up)) | sum(1 << (half + p) for p in range(n_electrons - n_up))


def uccsd_excitations(
    n_modes: int, n_electrons: int, reference: int | None = None, spin_conserving: bool = True
) -> tuple[list[tuple[tuple[int, ...], tuple[int, ...]]], list[tuple[tuple[int, ...], tuple[int, ...]]]]:
    """Doubles and singles ``(creators, annihilators)`` from occupied to virtual modes.

    Spins are blocked: modes ``0 .. M/2 - 1`` are spin up.  The default
    reference fills the lowest up and down orbitals, up first for odd ``N``.
    """
    if n_modes % 2:
        raise ArgumentError("spin-orbital count must be even")
    if not 0 <= n_electrons <= n_modes:
        raise ArgumentError("need 0 <= N <= M")
    if reference is None:
        reference = default_reference(n_modes, n_electrons)
    occ = [m for m in range(n_modes) if reference >> m & 1]
    virt = [m for m in range(n_modes) if not reference >> m & 1]
    if len(occ) != n_electrons:
        raise ArgumentError("reference occupation does not hold N electrons")

    def spin(m: int) -> int:
        return _mode_spin(m, n_modes)

    singles = [((a,), (i,)) for i in occ for a in virt if not spin_conserving or spin(a) == spin(i)]
    doubles = []
    for i, j in itertools.combinations(occ, 2):
        for a, b in itertools.combinations(virt, 2):
            if spin_conserving and sorted((spin(a), spin(b))) != sorted((spin(i), spin(j))):
                continue
            doubles.append(((a, b), (j, i)))
    return doubles, singles


def excitation_rotations(generator: PauliSum, param: str) -> list[Gate]:
    """``exp(theta G)`` for anti-Hermitian ``G = i sum_j g_j P_j`` as ``R_{P_j}(-2 g_j theta)``.

    The strings of a single UCC generator commute, so the product is exact;
    for non-commuting pool elements this is one first-order Trotter pass in
    mask order.
    """
    gates = []
    for p, c in generator.items():
        if abs(c.real) > 1e-12:
            raise ArgumentError("excitation generator must be anti-Hermitian")
        gates.append(pauli_rotation(p, 0.0, param=param, scale=-2.0 * c.imag))
    return gates


def uccsd_ansatz(
    n_modes: int,
    n_electrons: int,
    reference: int | None = None,
    spin_conserving: bool = True,
) -> Ansatz:
    """Trotter-factorized UCCSD in the Jordan-Wigner encoding (doubles applied first).

    Parameter ``d{k}`` multiplies double ``k`` and ``s{k}`` single ``k``; each
    generator is ``T - T^dag`` with ``T = a^dag_a a^dag_b a_j a_i`` (``a < b``, ``i < j``) (or
    ``a^dag_a a_i``).  A double becomes eight Pauli rotations and a single two.
    """
    doubles, singles = uccsd_excitations(n_modes, n_electrons, reference, spin_conserving)
    if reference is None:
        reference = default_reference(n_modes, n_electrons)
    circ = Circuit(n_modes)
    generators = []
    for tag, group in (("d", doubles), ("s", singles)):
        for k, (cre, ann) in enumerate(group):
            g = jordan_wigner(excitation_generator(n_modes, cre, ann))
            generators.append(g)
            circ.extend(excitation_rotations(g, f"{tag}{k}"))
    meta = {
        "doubles": [[list(c), list(a)] for c, a in doubles],
        "singles": [[list(c), list(a)] for c, a in singles],
        "trotter": "single first-order pass, mask order within each generator",
    }
    ans = Ansatz(circ, "uccsd", int(reference), meta)
    ans.metadata["n_generators"] = len(generators)
    return ans


def uccsd_generators(n_modes: int, n_electrons: int, reference: int | None = None) -> list[PauliSum]:
    """Jordan-Wigner images of the UCCSD generators (doubles first)."""
    doubles, singles = uccsd_excitations(n_modes, n_electrons, reference)
    return [jordan_wigner(excitation_generator(n_modes, c, a)) for c, a in doubles + singles]


def fermionic_pool(n_modes: int, n_electrons: int, reference: int | None = None) -> list[PauliSum]:
    """Operator pool for adaptive ansaetze: the UCCSD generators."""
    return uccsd_generators(n_modes, n_electrons, reference)


# -- hardware efficient ------------------------------------------------------------------


def hardware_efficient_ansatz(
    n_qubits: int, layers: int, reference: int = 0, global_phase: bool = False, entangler: str = "linear"
) -> Ansatz:
    """Alternating ``Ry Rz`` layers on every qubit and a CNOT entangling chain.

    ``layers`` entangling blocks sit between ``layers + 1`` rotation layers.
    With ``global_phase=True`` an identity rotation carries the overall phase
    (useful for variational real-time dynamics).
    """
    if layers < 0:
        raise ArgumentError("layers must be non-negative")
    if entangler not in ("linear", "ring"):
        raise ArgumentError(f"unknown entangler {entangler!r}")
    circ = Circuit(n_qubits)
    k = 0
    for layer in range(layers + 1):
        for q in range(n_qubits):
            circ.add("Ry", q, param=f"t{k}")
            circ.add("Rz", q, param=f"t{k + 1}")
            k += 2
        if layer < layers:
            for q in range(n_qubits - 1):
                circ.add("CNOT", q, q + 1)
            if entangler == "ring" and n_qubits > 2:
                circ.add("CNOT", n_qubits - 1, 0)
    if global_phase:
        circ.append(pauli_rotation(PauliString.identity(n_qubits), 0.0, param="phase"))
    return Ansatz(circ, "hardware_efficient", reference, {"layers": layers, "entangler": entangler})


def adaptive_ansatz(n_qubits: int, reference: int, generators: Sequence[PauliSum]) -> Ansatz:
    """Product of ``exp(theta_k A_k)`` for the selected pool generators, in selection order."""
    circ = Circuit(n_qubits)
    for k, g in enumerate(generators):
        circ.extend(excitation_rotations(g, f"a{k}"))
    return Ansatz(circ, "adaptive", reference, {"n_selected": len(generators)})


def number_operator_expectation(state: StateVector | np.ndarray, n_modes: int) -> float:
    """``<N>`` for a Jordan-Wigner state."""
    psi = state.amplitudes if isinstance(state, StateVector) else np.asarray(state)
    idx = np.arange(psi.shape[0], dtype=np.int64)
    return float(np.dot(np.abs(psi) ** 2, np.bitwise_count(idx).astype(np.int64)))


__all__ = [
    "Ansatz",
    "adaptive_ansatz",
    "default_reference",
    "excitation_rotations",
    "fermionic_pool",
    "hardware_efficient_ansatz",
    "number_operator_expectation",
    "uccsd_ansatz",
    "uccsd_excitations",
    "uccsd_generators",
]
