"""Fermionic operators, qubit encodings, symmetry tapering and boson-level codes.

Every fermion-to-qubit map here is a linear binary encoding: qubit values
``b`` store ``A x`` (mod 2) for occupations ``x``.  For such an encoding

    a_k^dag = X_{U(k)} * (1 + Z_{F(k)}) / 2 * Z_{P(k)}

where ``U(k)`` is column ``k`` of ``A`` (the qubits that flip), ``F(k)`` is
row ``k`` of ``A^{-1}`` (the qubits whose parity is ``x_k``) and ``P(k)`` is the
set of qubits whose parity equals ``sum_{j<k} x_j``.  Jordan-Wigner, parity
and Bravyi-Kitaev differ only in ``A``.

Spin orbitals are blocked by default: spatial orbital ``p`` with spin up is
mode ``p`` and with spin down mode ``p + n_spatial``.
"""

from __future__ import annotations

import itertools
import math
from collections.abc import Iterable, Mapping, Sequence
from dataclasses import dataclass, field
from functools import lru_cache
from numbers import Number
from typing import TYPE_CHECKING

import numpy as np

from .clifford import conjugate_sum, diagonalizing_clifford, gf2_kernel, gf2_rref
from .errors import ArgumentError, DimensionError, ParseError, SymmetryViolationError, ValidationError
from .pauli import DEFAULT_PRUNE, PauliString, PauliSum
from .simulator import Circuit

if TYPE_CHECKING:
    from .hamio import MolecularIntegrals

Ladder = tuple[int, bool]  # (mode, is_creation)
Term = tuple[Ladder, ...]


def _order_key(op: Ladder) -> tuple[int, int]:
    mode, dag = op
    return (0 if dag else 1, mode)


def normal_order_term(term: Sequence[Ladder], coeff: complex = 1.0) -> dict[Term, complex]:
    """Expand a product of ladder operators into canonical normal-ordered terms.

    Creators come first, then annihilators, each group in ascending mode
    order.  Every transposition contributes a sign, and
    ``a_p a_p^dag = 1 - a_p^dag a_p`` spawns the contraction term.
    """
    out: dict[Term, complex] = {}
    stack = [(tuple(term), complex(coeff))]
    while stack:
        ops, c = stack.pop()
        for i in range(len(ops) - 1):
            a, b = ops[i], ops[i + 1]
            if a == b:
                # a_p a_p and a_p^dag a_p^dag vanish
                c = 0
                break
            if _order_key(a) > _order_key(b):
                swapped = ops[:i] + (b, a) + ops[i + 2 :]
                if a[0] == b[0] and not a[1] and b[1]:
                    stack.append((ops[:i] + ops[i + 2 :], c))
                stack.append((swapped, -c))
                c = None
                break
        else:
            out[ops] = out.get(ops, 0) + c
            continue
        if c == 0:
            continue
    return out


class FermionOperator:
    """Immutable sum of normal-ordered products of fermionic ladder operators."""

    __slots__ = ("n_modes", "_terms", "prune")

    def __init__(self, n_modes: int, terms: Mapping[Sequence[Ladder], complex] | None = None, prune: float = DEFAULT_PRUNE):
        self.n_modes = int(n_modes)
        self.prune = prune
        acc: dict[Term, complex] = {}
        for raw, c in (terms or {}).items():
            raw = tuple((int(m), bool(d)) for m, d in raw)
            for m, _ in raw:
                if not 0 <= m < n_modes:
                    raise DimensionError(f"mode {m} out of range for {n_modes} modes")
            for key, v in normal_order_term(raw, c).items():
                acc[key] = acc.get(key, 0) + v
        self._terms = {k: v for k, v in sorted(acc.items(), key=lambda kv: (len(kv[0]), kv[0])) if abs(v) > prune}

    @classmethod
    def from_string(cls, n_modes: int, text: str, coeff: complex = 1.0) -> FermionOperator:
        """Parse ``"3^ 1 0^"`` style products (``^`` marks a creator)."""
        ops = []
        for pos, tok in enumerate(text.split()):
            dag = tok.endswith("^")
            try:
                ops.append((int(tok.rstrip("^")), dag))
            except ValueError:
                raise ParseError(f"bad ladder token {tok!r}", position=pos) from None
        return cls(n_modes, {tuple(ops): coeff})

    @classmethod
    def identity(cls, n_modes: int, coeff: complex = 1.0) -> FermionOperator:
        return cls(n_modes, {(): coeff})

    @property
    def terms(self) -> dict[Term, complex]:
        return dict(self._terms)

    def __len__(self) -> int:
        return len(self._terms)

    def __repr__(self) -> str:
        def fmt(t):
            return " ".join(f"{m}{'^' if d else ''}" for m, d in t) or "1"

        body = " + ".join(f"({c:.6g})[{fmt(t)}]" for t, c in self._terms.items())
        return f"FermionOperator[{self.n_modes}]({body or '0'})"

    def _check(self, other: FermionOperator) -> None:
        if other.n_modes != self.n_modes:
            raise DimensionError("mode count mismatch")

    def __add__(self, other) -> FermionOperator:
        if isinstance(other, Number):
            other = FermionOperator.identity(self.n_modes, other)
        if not isinstance(other, FermionOperator):
            return NotImplemented
        self._check(other)
        acc = dict(self._terms)
        for k, v in other._terms.items():
            acc[k] = acc.get(k, 0) + v
        return FermionOperator(self.n_modes, acc, self.prune)

    __radd__ = __add__

    def __neg__(self) -> FermionOperator:
        return self * -1

    def __sub__(self, other) -> FermionOperator:
        return self + (-other)

    def __mul__(self, other) -> FermionOperator:
        if isinstance(other, Number):
            return FermionOperator(self.n_modes, {k: v * other for k, v in self._terms.items()}, self.prune)
        if not isinstance(other, FermionOperator):
            return NotImplemented
        self._check(other)
        acc: dict[Term, complex] = {}
        for k1, v1 in self._terms.items():
            for k2, v2 in other._terms.items():
                acc[k1 + k2] = acc.get(k1 + k2, 0) + v1 * v2
        return FermionOperator(self.n_modes, acc, self.prune)

    def __rmul__(self, other) -> FermionOperator:
        if isinstance(other, Number):
            return self * other
        return NotImplemented

    def adjoint(self) -> FermionOperator:
        acc = {}
        for k, v in self._terms.items():
            acc[tuple((m, not d) for m, d in reversed(k))] = np.conj(v)
        return FermionOperator(self.n_modes, acc, self.prune)

    def is_hermitian(self, tol: float = 1e-12) -> bool:
        diff = self - self.adjoint()
        return all(abs(v) <= tol for v in diff._terms.values())


def creation(mode: int, n_modes: int) -> FermionOperator:
    return FermionOperator(n_modes, {((mode, True),): 1.0})


def annihilation(mode: int, n_modes: int) -> FermionOperator:
    return FermionOperator(n_modes, {((mode, False),): 1.0})


def number_operator(n_modes: int, modes: Iterable[int] | None = None) -> FermionOperator:
    modes = range(n_modes) if modes is None else modes
    return FermionOperator(n_modes, {((p, True), (p, False)): 1.0 for p in modes})


def excitation_generator(n_modes: int, creators: Sequence[int], annihilators: Sequence[int]) -> FermionOperator:
    """Anti-Hermitian ``T - T^dag`` with ``T = a^dag_{c0} a^dag_{c1} ... a_{a0} a_{a1} ...``."""
    t = FermionOperator(n_modes, {tuple((c, True) for c in creators) + tuple((a, False) for a in annihilators): 1.0})
    return t - t.adjoint()


# -- binary linear encodings --------------------------------------------------------


def _gf2_inverse(a: np.ndarray) -> np.ndarray:
    n = a.shape[0]
    aug = np.concatenate([a.astype(np.uint8) % 2, np.eye(n, dtype=np.uint8)], axis=1)
    for col in range(n):
        piv = next((r for r in range(col, n) if aug[r, col]), None)
        if piv is None:
            raise ArgumentError("encoding matrix is singular over GF(2)")
        aug[[col, piv]] = aug[[piv, col]]
        for r in range(n):
            if r != col and aug[r, col]:
                aug[r] ^= aug[col]
    return aug[:, n:]


def jw_matrix(n_modes: int) -> np.ndarray:
    return np.eye(n_modes, dtype=np.uint8)


def parity_matrix(n_modes: int) -> np.ndarray:
    """``b_k = sum_{j <= k} x_j``."""
    return np.tril(np.ones((n_modes, n_modes), dtype=np.uint8))


def bk_matrix(n_modes: int) -> np.ndarray:
    """Binary-tree matrix: qubit ``i`` stores the parity of modes ``i & (i + 1)`` through ``i``."""
    a = np.zeros((n_modes, n_modes), dtype=np.uint8)
    for i in range(n_modes):
        a[i, (i & (i + 1)) : i + 1] = 1
    return a


@lru_cache(maxsize=64)
def _creation_images(matrix_bytes: bytes, n: int) -> tuple[PauliSum, ...]:
    a = np.frombuffer(matrix_bytes, dtype=np.uint8).reshape(n, n)
    ainv = _gf2_inverse(a)
    images = []
    for k in range(n):
        u = sum(1 << i for i in range(n) if a[i, k])
        f = sum(1 << i for i in range(n) if ainv[k, i])
        below = ainv[:k].sum(axis=0) % 2 if k else np.zeros(n, dtype=np.uint8)
        p = sum(1 << i for i in range(n) if below[i])
        xu_zp = PauliString(n, u, 0) * PauliString(n, 0, p)
        xu_zf_zp = PauliString(n, u, 0) * PauliString(n, 0, f ^ p)
        images.append(PauliSum.from_string(xu_zp, 0.5) + PauliSum.from_string(xu_zf_zp, 0.5))
    return tuple(images)


def linear_encode(op: FermionOperator, matrix: np.ndarray) -> PauliSum:
    """Encode with an arbitrary invertible binary matrix ``A`` (``b = A x``)."""
    n = op.n_modes
    a = np.ascontiguousarray(np.asarray(matrix, dtype=np.uint8) % 2)
    if a.shape != (n, n):
        raise DimensionError(f"encoding matrix must be {n}x{n}")
    cre = _creation_images(a.tobytes(), n)
    ann = tuple(c.adjoint() for c in cre)
    acc = PauliSum.zero(n)
    for term, c in op.terms.items():
        prod = PauliSum.identity(n, c)
        for mode, dag in term:
            prod = prod * (cre[mode] if dag else ann[mode])
        acc = acc + prod
    return acc


def jordan_wigner(op: FermionOperator) -> PauliSum:
    """``a_k^dag -> (X_k - i Y_k)/2 Z_{k-1} ... Z_0``."""
    return linear_encode(op, jw_matrix(op.n_modes))


def bravyi_kitaev(op: FermionOperator) -> PauliSum:
    return linear_encode(op, bk_matrix(op.n_modes))


def parity_encode(
    op: FermionOperator,
    reduce_two_qubits: bool = False,
    sector: tuple[int, int] | None = None,
) -> PauliSum:
    """Parity encoding, optionally with the two-qubit reduction.

    With blocked spin ordering qubit ``M/2 - 1`` stores ``N_up mod 2`` and
    qubit ``M - 1`` stores ``N mod 2``.  The reduction replaces their Z
    operators by ``(-1)**N_up`` and ``(-1)**(N_up + N_down)`` and removes them.
    ``sector`` gives ``(N_up, N_down)``; only the parities matter.
    """
    m = op.n_modes
    encoded = linear_encode(op, parity_matrix(m))
    if not reduce_two_qubits:
        return encoded
    if m % 2:
        raise ArgumentError("two-qubit reduction needs an even number of modes")
    if sector is None:
        raise ArgumentError("two-qubit reduction needs the (N_up, N_down) sector")
    n_up, n_dn = sector
    values = {m // 2 - 1: (-1) ** (n_up % 2), m - 1: (-1) ** ((n_up + n_dn) % 2)}
    return substitute_z(encoded, values)


def substitute_z(h: PauliSum, values: Mapping[int, int]) -> PauliSum:
    """Replace ``Z_q`` by the eigenvalue ``values[q]`` and drop those qubits."""
    n = h.n_qubits
    drop = sorted(values)
    keep = [q for q in range(n) if q not in values]
    acc: dict[tuple[int, int], complex] = {}
    for (x, z), c in h.terms.items():
        for q in drop:
            if (x >> q) & 1:
                raise SymmetryViolationError(f"term acts with X/Y on qubit {q}, which is being removed")
            if (z >> q) & 1:
                c = c * values[q]
        nx = sum(((x >> q) & 1) << i for i, q in enumerate(keep))
        nz = sum(((z >> q) & 1) << i for i, q in enumerate(keep))
        acc[(nx, nz)] = acc.get((nx, nz), 0) + c
    return PauliSum(len(keep), acc, h.prune)


@dataclass(frozen=True)
class EncodingScheme:
    """Choice of fermion-to-qubit map (``sector`` only for the reduced parity map)."""

    kind: str
    n_modes: int
    sector: tuple[int, int] | None = None

    KINDS = ("JordanWigner", "Parity", "ParityTwoQubitReduced", "BravyiKitaev")

    def __post_init__(self):
        if self.kind not in self.KINDS:
            raise ArgumentError(f"unknown encoding {self.kind!r}")
        if (self.kind == "ParityTwoQubitReduced") != (self.sector is not None):
            raise ArgumentError("sector data is required exactly for the reduced parity map")

    def encode(self, op: FermionOperator) -> PauliSum:
        if op.n_modes != self.n_modes:
            raise DimensionError("operator and scheme mode counts differ")
        if self.kind == "JordanWigner":
            return jordan_wigner(op)
        if self.kind == "BravyiKitaev":
            return bravyi_kitaev(op)
        if self.kind == "Parity":
            return parity_encode(op)
        return parity_encode(op, True, self.sector)

    @property
    def n_qubits(self) -> int:
        return self.n_modes - 2 if self.kind == "ParityTwoQubitReduced" else self.n_modes


def encode(op: FermionOperator, scheme: str = "jw", sector: tuple[int, int] | None = None) -> PauliSum:
    """Short-name front end: ``jw``, ``parity``, ``parity2`` (reduced) or ``bk``."""
    names = {"jw": "JordanWigner", "parity": "Parity", "parity2": "ParityTwoQubitReduced", "bk": "BravyiKitaev"}
    kind = names.get(scheme.lower(), scheme)
    return EncodingScheme(kind, op.n_modes, sector).encode(op)


def occupation_to_qubits(occ: int, n_modes: int, scheme: str = "jw") -> int:
    """Map an occupation bit pattern to the encoded computational basis index."""
    mats = {"jw": jw_matrix, "parity": parity_matrix, "bk": bk_matrix}
    a = mats[scheme](n_modes)
    x = np.array([(occ >> j) & 1 for j in range(n_modes)], dtype=np.int64)
    b = a.astype(np.int64) @ x % 2
    return int(sum(int(v) << i for i, v in enumerate(b)))


# -- molecular Hamiltonian ---------------------------------------------------------


def spin_orbital(p: int, spin: int, n_spatial: int, interleaved: bool = False) -> int:
    """Mode index of spatial orbital ``p`` with ``spin`` 0 (up) or 1 (down)."""
    return 2 * p + spin if interleaved else p + spin * n_spatial


def build_molecular_hamiltonian(ints: MolecularIntegrals, interleaved: bool = False, tol: float = 1e-10) -> FermionOperator:
    """``E_nuc + sum h_pr a^dag_p a_r + 1/2 sum (pr|qs) a^dag_p a^dag_q a_s a_r`` over spin orbitals."""
    h = np.asarray(ints.h, dtype=float)
    eri = np.asarray(ints.eri, dtype=float)
    n = h.shape[0]
    if h.shape != (n, n) or eri.shape != (n, n, n, n):
        raise ValidationError("integral shapes are inconsistent")
    if not np.allclose(h, h.T, atol=tol, rtol=0):
        raise ValidationError("one-body integrals are not symmetric")
    for perm in ((1, 0, 2, 3), (0, 1, 3, 2), (2, 3, 0, 1)):
        if not np.allclose(eri, eri.transpose(perm), atol=tol, rtol=0):
            raise ValidationError(f"two-body integrals violate permutational symmetry {perm}")
    m = 2 * n
    terms: dict[Term, complex] = {(): float(ints.e_nuc)}
    so = lambda p, s: spin_orbital(p, s, n, interleaved)  # noqa: E731
    for p, r in itertools.product(range(n), repeat=2):
        if h[p, r] != 0:
            for s in (0, 1):
                key = ((so(p, s), True), (so(r, s), False))
                terms[key] = terms.get(key, 0) + h[p, r]
    for p, r, q, s_ in itertools.product(range(n), repeat=4):
        v = eri[p, r, q, s_]
        if v == 0:
            continue
        for a, b in itertools.product((0, 1), repeat=2):
            if so(p, a) == so(q, b) or so(r, a) == so(s_, b):
                continue
            key = ((so(p, a), True), (so(q, b), True), (so(s_, b), False), (so(r, a), False))
            terms[key] = terms.get(key, 0) + 0.5 * v
    return FermionOperator(m, terms)


def sz_operator(n_spatial: int, interleaved: bool = False) -> FermionOperator:
    m = 2 * n_spatial
    terms = {}
    for p in range(n_spatial):
        up, dn = spin_orbital(p, 0, n_spatial, interleaved), spin_orbital(p, 1, n_spatial, interleaved)
        terms[((up, True), (up, False))] = 0.5
        terms[((dn, True), (dn, False))] = -0.5
    return FermionOperator(m, terms)


def hartree_fock_occupation(n_spatial: int, n_up: int, n_down: int, interleaved: bool = False) -> int:
    """Bit pattern with the lowest ``n_up`` up and ``n_down`` down orbitals filled."""
    occ = 0
    for p in range(n_up):
        occ |= 1 << spin_orbital(p, 0, n_spatial, interleaved)
    for p in range(n_down):
        occ |= 1 << spin_orbital(p, 1, n_spatial, interleaved)
    return occ


def sector_indices(n_spatial: int, n_up: int, n_down: int, interleaved: bool = False) -> np.ndarray:
    """Jordan-Wigner basis indices with exactly ``n_up`` up and ``n_down`` down electrons."""
    idx = np.arange(1 << (2 * n_spatial))
    up = np.zeros_like(idx)
    dn = np.zeros_like(idx)
    for p in range(n_spatial):
        up += (idx >> spin_orbital(p, 0, n_spatial, interleaved)) & 1
        dn += (idx >> spin_orbital(p, 1, n_spatial, interleaved)) & 1
    return idx[(up == n_up) & (dn == n_down)]


def fock_operator(ints: MolecularIntegrals, n_up: int | None = None, n_down: int | None = None) -> FermionOperator:
    """Spin-resolved Fock operator of the lowest-orbital determinant (blocked spins).

    ``f^s_pq = h_pq + sum_{j occ} (pq|jj) - sum_{j occ, spin s} (pj|jq)``.
    """
    n = ints.n_spatial
    n_up = ints.n_up if n_up is None else n_up
    n_down = ints.n_down if n_down is None else n_down
    coul = np.einsum("pqjj->pq", ints.eri[:, :, :n_up, :n_up]) + np.einsum("pqjj->pq", ints.eri[:, :, :n_down, :n_down])
    terms = {}
    for s, n_occ in ((0, n_up), (1, n_down)):
        f = ints.h + coul - np.einsum("pjjq->pq", ints.eri[:, :n_occ, :n_occ, :])
        for p in range(n):
            for q in range(n):
                if f[p, q] != 0:
                    terms[((p + s * n, True), (q + s * n, False))] = f[p, q]
    return FermionOperator(2 * n, terms)


# -- Z2 symmetries and tapering ----------------------------------------------------------


@dataclass(frozen=True)
class SymmetrySector:
    """Commuting symmetry generators ``tau_i`` fixed to eigenvalues ``s_i``.

    ``clifford`` implements ``U`` with ``tau_i = U^dag Z_{q_i} U`` for the
    qubits ``q_i`` in ``pivots``.
    """

    generators: tuple[PauliString, ...]
    eigenvalues: tuple[int, ...]
    clifford: Circuit
    pivots: tuple[int, ...]

    def __post_init__(self):
        if len(self.eigenvalues) != len(self.generators) or len(self.pivots) != len(self.generators):
            raise ArgumentError("one eigenvalue and pivot per generator")
        if any(s not in (1, -1) for s in self.eigenvalues):
            raise ArgumentError("sector eigenvalues must be +1 or -1")


@dataclass(frozen=True)
class Z2Symmetries:
    """Symmetry generators of a Hamiltonian plus the tapering Clifford."""

    n_qubits: int
    generators: tuple[PauliString, ...]
    clifford: Circuit = field(compare=False)
    pivots: tuple[int, ...]

    def __len__(self) -> int:
        return len(self.generators)

    def sector(self, eigenvalues: Sequence[int]) -> SymmetrySector:
        return SymmetrySector(self.generators, tuple(int(s) for s in eigenvalues), self.clifford, self.pivots)

    def sectors(self) -> list[SymmetrySector]:
        return [self.sector(s) for s in itertools.product((1, -1), repeat=len(self.generators))]

    def sector_of_state(self, psi: np.ndarray) -> SymmetrySector:
        """Sector whose eigenvalues match ``<psi|tau_i|psi>`` (the state must be an eigenstate)."""
        vals = []
        for g in self.generators:
            e = np.vdot(psi, PauliSum.from_string(g).apply(psi)).real
            if abs(abs(e) - 1) > 1e-8:
                raise SymmetryViolationError("state is not an eigenstate of every generator")
            vals.append(1 if e > 0 else -1)
        return self.sector(vals)


def find_z2_symmetries(h: PauliSum) -> Z2Symmetries:
    """Pauli symmetries of ``h`` that commute with every term and with each other.

    The null space of the check matrix gives every Pauli string commuting
    with all terms; the subspace of those that also commute with the whole
    null space is kept, so the generators are pairwise commuting and the
    result does not depend on an arbitrary choice among anticommuting
    alternatives.
    """
    if len(h) == 0:
        raise ArgumentError("Hamiltonian has no terms")
    n = h.n_qubits
    # v = (vx << n) | vz; term row picks x_t . vz + z_t . vx
    rows = [(z << n) | x for (x, z) in h.terms]
    kernel = gf2_kernel(rows, 2 * n)

    def sympl(a: int, b: int) -> int:
        ax, az, bx, bz = a >> n, a & ((1 << n) - 1), b >> n, b & ((1 << n) - 1)
        return ((ax & bz).bit_count() + (az & bx).bit_count()) & 1

    k = len(kernel)
    gram_rows = [sum(sympl(kernel[i], kernel[j]) << j for j in range(k)) for i in range(k)]
    coeffs = gf2_kernel(gram_rows, k)
    center = []
    for cvec in coeffs:
        v = 0
        for j in range(k):
            if (cvec >> j) & 1:
                v ^= kernel[j]
        center.append(v)
    # canonical basis: eliminate X components first so that most generators are Z-type
    swapped = [((v & ((1 << n) - 1)) << n) | (v >> n) for v in center]
    reduced, _ = gf2_rref(swapped, 2 * n)
    gens = []
    for w in reduced:
        z, x = w >> n, w & ((1 << n) - 1)
        if x or z:
            gens.append(PauliString(n, x, z))
    gens.sort(key=lambda p: (p.x, p.z))
    circuit, pivots = diagonalizing_clifford(gens, n)
    return Z2Symmetries(n, tuple(gens), circuit, tuple(pivots))


def taper(h: PauliSum, sector: SymmetrySector | None) -> PauliSum:
    """Project ``h`` into a symmetry sector and remove the symmetry qubits.

    Computes ``U h U^dag``, replaces ``Z_{q_i}`` by ``s_i`` and drops the
    pivot qubits.  A sector with no generators returns ``h`` unchanged.
    """
    if sector is None or not sector.generators:
        return h
    for g in sector.generators:
        if g.n_qubits != h.n_qubits:
            raise DimensionError("generator and Hamiltonian sizes differ")
        for p, _ in h.items():
            if not g.commutes(p):
                raise SymmetryViolationError(f"generator {g.label} does not commute with term {p.label}")
    rotated = conjugate_sum(h, sector.clifford)
    return substitute_z(rotated, dict(zip(sector.pivots, sector.eigenvalues)))


def taper_state(psi: np.ndarray, sector: SymmetrySector) -> np.ndarray:
    """Tapered-register amplitudes of ``U psi`` restricted to the sector."""
    n = int(round(math.log2(psi.shape[0])))
    phi = sector.clifford.run(psi).amplitudes
    keep = [q for q in range(n) if q not in sector.pivots]
    idx = np.arange(1 << n)
    mask = np.ones(1 << n, dtype=bool)
    for q, s in zip(sector.pivots, sector.eigenvalues):
        mask &= ((idx >> q) & 1) == (0 if s == 1 else 1)
    small = np.zeros(1 << len(keep), dtype=complex)
    for i in idx[mask]:
        j = sum(((int(i) >> q) & 1) << t for t, q in enumerate(keep))
        small[j] = phi[i]
    return small


# -- bosonic level encodings ----------------------------------------------------


def boson_qubits(d: int, scheme: str) -> int:
    if d < 1:
        raise ArgumentError("level count must be positive")
    if scheme in ("binary", "gray"):
        return max(1, math.ceil(math.log2(d)))
    if scheme == "unary":
        return d
    raise ArgumentError(f"unknown boson encoding {scheme!r}")


def encode_boson_level(d: int, scheme: str, level: int) -> str:
    """Bitstring (most significant qubit first) for ``level`` of a ``d``-level mode."""
    nq = boson_qubits(d, scheme)
    if not 0 <= level < d:
        raise ArgumentError(f"level {level} outside 0..{d - 1}")
    if scheme == "binary":
        v = level
    elif scheme == "gray":
        v = level ^ (level >> 1)
    else:
        v = 1 << level
    return format(v, f"0{nq}b")


def decode_boson_level(bits: str, scheme: str) -> int:
    v = int(bits, 2)
    if scheme == "binary":
        return v
    if scheme == "gray":
        out = 0
        while v:
            out ^= v
            v >>= 1
        return out
    if scheme == "unary":
        if bin(v).count("1") != 1:
            raise ArgumentError("unary code must be one-hot")
        return v.bit_length() - 1
    raise ArgumentError(f"unknown boson encoding {scheme!r}")
