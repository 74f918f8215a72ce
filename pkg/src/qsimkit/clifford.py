"""Binary linear algebra and Clifford conjugation of Pauli strings.

Used for symmetry detection and tapering, and for measuring a set of
commuting Pauli strings in one computational-basis readout.
"""

from __future__ import annotations

from collections.abc import Sequence

from .errors import ArgumentError, DimensionError, UnsupportedError
from .pauli import PauliString, PauliSum, multiply
from .simulator import Circuit, Gate

# -- GF(2) helpers (vectors are Python ints, bit j = coordinate j) ---------------


def gf2_rref(rows: Sequence[int], n_bits: int) -> tuple[list[int], list[int]]:
    """Reduced row echelon form with pivots chosen from the lowest column up."""
    rows = [r for r in rows]
    pivots: list[int] = []
    rank = 0
    for col in range(n_bits):
        bit = 1 << col
        sel = next((i for i in range(rank, len(rows)) if rows[i] & bit), None)
        if sel is None:
            continue
        rows[rank], rows[sel] = rows[sel], rows[rank]
        for i in range(len(rows)):
            if i != rank and rows[i] & bit:
                rows[i] ^= rows[rank]
        pivots.append(col)
        rank += 1
    return rows[:rank], pivots


def gf2_rank(rows: Sequence[int], n_bits: int) -> int:
    return len(gf2_rref(rows, n_bits)[1])


def gf2_kernel(rows: Sequence[int], n_bits: int) -> list[int]:
    """Basis of ``{v : popcount(r & v) even for every row r}``, one vector per free column."""
    reduced, pivots = gf2_rref(rows, n_bits)
    pivot_set = set(pivots)
    basis = []
    for free in range(n_bits):
        if free in pivot_set:
            continue
        v = 1 << free
        for r, p in zip(reduced, pivots):
            if (r >> free) & 1:
                v |= 1 << p
        basis.append(v)
    return basis


def gf2_solve(basis: Sequence[int], target: int, n_bits: int) -> list[int] | None:
    """Indices of ``basis`` vectors whose XOR equals ``target`` (``None`` if outside the span)."""
    # augment each basis vector with an identity tag above n_bits
    rows = [b | (1 << (n_bits + i)) for i, b in enumerate(basis)]
    reduced, pivots = gf2_rref(rows, n_bits)
    low = (1 << n_bits) - 1
    t = target
    tag = 0
    for r, p in zip(reduced, pivots):
        if (t >> p) & 1:
            t ^= r & low
            tag ^= r >> n_bits
    if t:
        return None
    return [i for i in range(len(basis)) if (tag >> i) & 1]


# -- Clifford action on Pauli strings --------------------------------------------

_CLIFFORD_KINDS = {"I", "X", "Y", "Z", "Had", "S", "Sdg", "CNOT", "SWAP"}


def _images(gate: Gate, n: int, q: int) -> tuple[PauliString, PauliString]:
    """``(g X_q g^dag, g Z_q g^dag)``."""
    xq = PauliString.single(n, q, "X")
    zq = PauliString.single(n, q, "Z")
    k = gate.kind
    if gate.controls:
        raise UnsupportedError("controlled Clifford conjugation is not supported")
    if k not in _CLIFFORD_KINDS:
        raise UnsupportedError(f"{k} is not a supported Clifford gate")
    if q not in gate.qubits or k == "I":
        return xq, zq
    if k == "Had":
        return zq, xq
    if k == "S":
        return PauliString.single(n, q, "Y"), zq
    if k == "Sdg":
        return -PauliString.single(n, q, "Y"), zq
    if k == "X":
        return xq, -zq
    if k == "Y":
        return -xq, -zq
    if k == "Z":
        return -xq, zq
    a, b = gate.qubits
    if k == "SWAP":
        other = b if q == a else a
        return PauliString.single(n, other, "X"), PauliString.single(n, other, "Z")
    # CNOT(control a, target b)
    if q == a:
        return PauliString.from_ops(n, {a: "X", b: "X"}), zq
    return xq, PauliString.from_ops(n, {a: "Z", b: "Z"})


def conjugate_pauli(p: PauliString, gate: Gate) -> PauliString:
    """``g P g^dag`` for a Clifford gate ``g``."""
    n = p.n_qubits
    out = PauliString(n, 0, 0, p.phase)
    for q in range(n):
        bx, bz = (p.x >> q) & 1, (p.z >> q) & 1
        if not (bx or bz):
            continue
        ix, iz = _images(gate, n, q)
        if bx and bz:
            # Y = i X Z
            term = multiply(multiply(PauliString(n, 0, 0, 1), ix), iz)
        elif bx:
            term = ix
        else:
            term = iz
        out = multiply(out, term)
    return out


def conjugate_by_circuit(p: PauliString, circuit: Circuit) -> PauliString:
    """``U P U^dag`` where ``U`` is the circuit's unitary."""
    for g in circuit.gates:
        p = conjugate_pauli(p, g)
    return p


def conjugate_sum(h: PauliSum, circuit: Circuit) -> PauliSum:
    acc: dict[tuple[int, int], complex] = {}
    for p, c in h.items():
        img = conjugate_by_circuit(p, circuit)
        key = (img.x, img.z)
        acc[key] = acc.get(key, 0) + c * img.coefficient
    return PauliSum(h.n_qubits, acc, h.prune)


def diagonalizing_clifford(generators: Sequence[PauliString], n_qubits: int) -> tuple[Circuit, list[int]]:
    """Clifford ``U`` and pivot qubits ``q_i`` with ``U tau_i U^dag = Z_{q_i}`` exactly.

    The generators must be Hermitian, pairwise commuting and independent.
    Each generator in turn is conjugated by the gates emitted so far; its
    support on unused qubits is rotated to Z (H for X, S^dag then H for Y),
    folded onto the lowest such qubit with CNOTs, residual Z factors on
    earlier pivots are removed with CNOTs from those pivots, and a final X
    fixes the sign.
    """
    for g in generators:
        if g.n_qubits != n_qubits:
            raise DimensionError("generator size mismatch")
        if not g.is_hermitian():
            raise ArgumentError("generators must be Hermitian")
    for i, a in enumerate(generators):
        for b in generators[i + 1 :]:
            if not a.commutes(b):
                raise ArgumentError("generators must commute pairwise")
    circuit = Circuit(n_qubits)
    current = list(generators)
    pivots: list[int] = []

    def emit(gates: list[Gate]) -> None:
        for gate in gates:
            circuit.append(gate)
            for j in range(len(current)):
                current[j] = conjugate_pauli(current[j], gate)

    for i in range(len(current)):
        t = current[i]
        used_mask = sum(1 << p for p in pivots)
        free = (t.x | t.z) & ~used_mask
        if t.x & used_mask:
            raise ArgumentError("generators must commute pairwise")
        if not free:
            raise ArgumentError("generators are not independent")
        sup = [q for q in range(n_qubits) if (free >> q) & 1]
        q0 = sup[0]
        basis: list[Gate] = []
        for q in sup:
            letter = t.letter(q)
            if letter == "X":
                basis.append(Gate("Had", (q,)))
            elif letter == "Y":
                basis += [Gate("Sdg", (q,)), Gate("Had", (q,))]
        emit(basis)
        emit([Gate("CNOT", (q, q0)) for q in sup[1:]])
        t = current[i]
        emit([Gate("CNOT", (p, q0)) for p in pivots if (t.z >> p) & 1])
        if current[i].phase == 2:
            emit([Gate("X", (q0,))])
        t = current[i]
        if not (t.x == 0 and t.z == 1 << q0 and t.phase == 0):
            raise ArgumentError("Clifford synthesis failed; generators are inconsistent")
        pivots.append(q0)
    return circuit, pivots


def independent_subset(strings: Sequence[PauliString]) -> list[int]:
    """Indices of a maximal GF(2)-independent subset (earliest strings preferred)."""
    chosen: list[int] = []
    basis: list[int] = []
    if not strings:
        return chosen
    n = strings[0].n_qubits
    for i, p in enumerate(strings):
        v = (p.x << n) | p.z
        if v == 0:
            continue
        if gf2_rank(basis + [v], 2 * n) > len(basis):
            basis.append(v)
            chosen.append(i)
    return chosen


def measurement_clifford(strings: Sequence[PauliString], n_qubits: int) -> tuple[Circuit, list[tuple[int, int]]]:
    """Clifford that maps every string of a commuting set to a signed Z-string.

    Returns the circuit and, per input string, ``(z_mask, sign_phase)`` with
    ``U P U^dag = i**sign_phase * Z^{z_mask}``.  Reading the computational
    basis after ``U`` gives all strings' eigenvalues simultaneously.
    """
    herm = [p.unsigned() for p in strings]
    idx = independent_subset(herm)
    circuit, _ = diagonalizing_clifford([herm[i] for i in idx], n_qubits)
    out = []
    for p in strings:
        img = conjugate_by_circuit(p, circuit)
        if img.x:
            raise ArgumentError("strings do not commute; cannot measure jointly")
        out.append((img.z, img.phase))
    return circuit, out
