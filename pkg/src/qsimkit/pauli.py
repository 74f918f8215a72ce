"""Exact algebra of n-qubit Pauli strings and complex-weighted Pauli sums.

Qubits are little-endian throughout: qubit ``l`` is bit ``l`` of the
computational-basis index, and dense matrices act on basis states ordered as
``|z_{n-1} ... z_0>``.  Text labels put qubit ``n-1`` leftmost, so ``"XI"``
is X on qubit 1.

A :class:`PauliString` stores symplectic bit masks plus a phase exponent
``q`` (the operator carries the factor ``i**q``).  Per qubit the pair
``(x, z)`` selects ``I (0,0)``, ``X (1,0)``, ``Y (1,1)``, ``Z (0,1)``.
"""

from __future__ import annotations

from collections.abc import Iterable, Iterator, Mapping
from numbers import Number

import numpy as np

from .errors import DimensionError, ParseError, ResourceError

DEFAULT_PRUNE = 1e-12
DENSE_CAP = 12

_PHASES = (1.0 + 0j, 1j, -1.0 + 0j, -1j)
_LETTER_TO_XZ = {"I": (0, 0), "X": (1, 0), "Y": (1, 1), "Z": (0, 1)}
_XZ_TO_LETTER = {v: k for k, v in _LETTER_TO_XZ.items()}


def _popcount(v: int) -> int:
    return v.bit_count()


class PauliString:
    """An element of the n-qubit Pauli group, ``i**phase * P_{n-1} x ... x P_0``."""

    __slots__ = ("n_qubits", "x", "z", "phase")

    def __init__(self, n_qubits: int, x: int = 0, z: int = 0, phase: int = 0):
        if n_qubits < 0:
            raise DimensionError("n_qubits must be non-negative")
        full = (1 << n_qubits) - 1
        if x & ~full or z & ~full:
            raise DimensionError(f"mask exceeds {n_qubits} qubits")
        object.__setattr__(self, "n_qubits", int(n_qubits))
        object.__setattr__(self, "x", int(x))
        object.__setattr__(self, "z", int(z))
        object.__setattr__(self, "phase", int(phase) % 4)

    def __setattr__(self, name, value):
        raise AttributeError("PauliString is immutable")

    @classmethod
    def from_label(cls, label: str, phase: int = 0) -> PauliString:
        """Parse ``"XZIY"`` (leftmost character is the highest qubit)."""
        n = len(label)
        x = z = 0
        for pos, ch in enumerate(label):
            try:
                bx, bz = _LETTER_TO_XZ[ch]
            except KeyError:
                raise ParseError(f"invalid Pauli letter {ch!r} in {label!r}", position=pos) from None
            q = n - 1 - pos
            x |= bx << q
            z |= bz << q
        return cls(n, x, z, phase)

    @classmethod
    def single(cls, n_qubits: int, qubit: int, letter: str) -> PauliString:
        if not 0 <= qubit < n_qubits:
            raise DimensionError(f"qubit {qubit} out of range for {n_qubits} qubits")
        bx, bz = _LETTER_TO_XZ[letter]
        return cls(n_qubits, bx << qubit, bz << qubit)

    @classmethod
    def from_ops(cls, n_qubits: int, ops: Mapping[int, str]) -> PauliString:
        """Build from ``{qubit: letter}``."""
        x = z = 0
        for q, letter in ops.items():
            if not 0 <= q < n_qubits:
                raise DimensionError(f"qubit {q} out of range for {n_qubits} qubits")
            bx, bz = _LETTER_TO_XZ[letter]
            x |= bx << q
            z |= bz << q
        return cls(n_qubits, x, z)

    @classmethod
    def identity(cls, n_qubits: int) -> PauliString:
        return cls(n_qubits)

    @property
    def label(self) -> str:
        return "".join(
            _XZ_TO_LETTER[((self.x >> q) & 1, (self.z >> q) & 1)] for q in range(self.n_qubits - 1, -1, -1)
        )

    @property
    def coefficient(self) -> complex:
        return _PHASES[self.phase]

    @property
    def support(self) -> tuple[int, ...]:
        m = self.x | self.z
        return tuple(q for q in range(self.n_qubits) if (m >> q) & 1)

    @property
    def weight(self) -> int:
        return _popcount(self.x | self.z)

    def letter(self, qubit: int) -> str:
        return _XZ_TO_LETTER[((self.x >> qubit) & 1, (self.z >> qubit) & 1)]

    def is_identity(self) -> bool:
        return self.x == 0 and self.z == 0

    def is_hermitian(self) -> bool:
        return self.phase % 2 == 0

    def unsigned(self) -> PauliString:
        return PauliString(self.n_qubits, self.x, self.z, 0)

    def adjoint(self) -> PauliString:
        return PauliString(self.n_qubits, self.x, self.z, -self.phase)

    def commutes(self, other: PauliString) -> bool:
        return commutes(self, other)

    def qubitwise_commutes(self, other: PauliString) -> bool:
        _check_sizes(self.n_qubits, other.n_qubits)
        both = (self.x | self.z) & (other.x | other.z)
        differ = (self.x ^ other.x) | (self.z ^ other.z)
        return both & differ == 0

    def sort_key(self) -> tuple[int, int]:
        return (self.x, self.z)

    def __mul__(self, other):
        if isinstance(other, PauliString):
            return multiply(self, other)
        if isinstance(other, Number):
            return PauliSum.from_string(self, complex(other))
        return NotImplemented

    def __rmul__(self, other):
        if isinstance(other, Number):
            return PauliSum.from_string(self, complex(other))
        return NotImplemented

    def __neg__(self) -> PauliString:
        return PauliString(self.n_qubits, self.x, self.z, self.phase + 2)

    def __eq__(self, other) -> bool:
        if not isinstance(other, PauliString):
            return NotImplemented
        return (self.n_qubits, self.x, self.z, self.phase) == (other.n_qubits, other.x, other.z, other.phase)

    def __hash__(self) -> int:
        return hash((self.n_qubits, self.x, self.z, self.phase))

    def __repr__(self) -> str:
        prefix = ("", "i", "-", "-i")[self.phase]
        return f"PauliString({prefix}{self.label})"

    def to_dense(self) -> np.ndarray:
        return to_dense(PauliSum.from_string(self))


def _check_sizes(a: int, b: int) -> None:
    if a != b:
        raise DimensionError(f"size mismatch: {a} vs {b} qubits")


def multiply(a: PauliString, b: PauliString) -> PauliString:
    """Group product ``a @ b`` with exact phase tracking."""
    _check_sizes(a.n_qubits, b.n_qubits)
    # sigma(x, z) = i^{x z} X^x Z^z and Z^z1 X^x2 = (-1)^{z1.x2} X^x2 Z^z1
    x3 = a.x ^ b.x
    z3 = a.z ^ b.z
    q = (
        a.phase
        + b.phase
        + _popcount(a.x & a.z)
        + _popcount(b.x & b.z)
        - _popcount(x3 & z3)
        + 2 * _popcount(a.z & b.x)
    )
    return PauliString(a.n_qubits, x3, z3, q)


def commutes(a: PauliString, b: PauliString) -> bool:
    """True iff ``ab == ba`` (even symplectic product)."""
    _check_sizes(a.n_qubits, b.n_qubits)
    return (_popcount(a.x & b.z) + _popcount(a.z & b.x)) % 2 == 0


class PauliSum:
    """Immutable complex-weighted sum of Pauli strings.

    Phases of the input strings are folded into the coefficients, so the keys
    are bare ``(x_mask, z_mask)`` pairs.  Coefficients with magnitude at or
    below ``prune`` are dropped.
    """

    __slots__ = ("n_qubits", "_terms", "prune")

    def __init__(
        self,
        n_qubits: int,
        terms: Mapping[tuple[int, int], complex] | None = None,
        prune: float = DEFAULT_PRUNE,
    ):
        self.n_qubits = int(n_qubits)
        self.prune = prune
        full = (1 << n_qubits) - 1
        clean: dict[tuple[int, int], complex] = {}
        for (x, z), c in (terms or {}).items():
            if x & ~full or z & ~full:
                raise DimensionError(f"mask exceeds {n_qubits} qubits")
            c = complex(c)
            if abs(c) > prune:
                clean[(int(x), int(z))] = c
        self._terms = dict(sorted(clean.items()))

    # -- construction -------------------------------------------------------

    @classmethod
    def from_string(cls, p: PauliString, coeff: complex = 1.0) -> PauliSum:
        return cls(p.n_qubits, {(p.x, p.z): coeff * p.coefficient})

    @classmethod
    def from_list(cls, items: Iterable[tuple[str | PauliString, complex]], n_qubits: int | None = None) -> PauliSum:
        acc: dict[tuple[int, int], complex] = {}
        n = n_qubits
        for label, c in items:
            p = PauliString.from_label(label) if isinstance(label, str) else label
            if n is None:
                n = p.n_qubits
            _check_sizes(n, p.n_qubits)
            key = (p.x, p.z)
            acc[key] = acc.get(key, 0) + complex(c) * p.coefficient
        if n is None:
            raise DimensionError("n_qubits required for an empty list")
        return cls(n, acc)

    @classmethod
    def identity(cls, n_qubits: int, coeff: complex = 1.0) -> PauliSum:
        return cls(n_qubits, {(0, 0): coeff})

    @classmethod
    def zero(cls, n_qubits: int) -> PauliSum:
        return cls(n_qubits)

    # -- access -------------------------------------------------------------

    @property
    def terms(self) -> dict[tuple[int, int], complex]:
        return dict(self._terms)

    def items(self) -> Iterator[tuple[PauliString, complex]]:
        for (x, z), c in self._terms.items():
            yield PauliString(self.n_qubits, x, z), c

    def strings(self) -> list[PauliString]:
        return [p for p, _ in self.items()]

    def coefficient(self, p: PauliString | str) -> complex:
        if isinstance(p, str):
            p = PauliString.from_label(p)
        return self._terms.get((p.x, p.z), 0j) * p.coefficient.conjugate()

    def __len__(self) -> int:
        return len(self._terms)

    def __iter__(self):
        return self.items()

    def __bool__(self) -> bool:
        return bool(self._terms)

    def __repr__(self) -> str:
        body = " + ".join(f"({c:.6g})*{p.label}" for p, c in self.items())
        return f"PauliSum[{self.n_qubits}]({body or '0'})"

    # -- arithmetic ---------------------------------------------------------

    def _coerce(self, other) -> PauliSum:
        if isinstance(other, PauliSum):
            _check_sizes(self.n_qubits, other.n_qubits)
            return other
        if isinstance(other, PauliString):
            _check_sizes(self.n_qubits, other.n_qubits)
            return PauliSum.from_string(other)
        if isinstance(other, Number):
            return PauliSum.identity(self.n_qubits, complex(other))
        raise TypeError(f"cannot combine PauliSum with {type(other).__name__}")

    def __add__(self, other) -> PauliSum:
        try:
            other = self._coerce(other)
        except TypeError:
            return NotImplemented
        acc = dict(self._terms)
        for k, c in other._terms.items():
            acc[k] = acc.get(k, 0) + c
        return PauliSum(self.n_qubits, acc, self.prune)

    __radd__ = __add__

    def __neg__(self) -> PauliSum:
        return PauliSum(self.n_qubits, {k: -c for k, c in self._terms.items()}, self.prune)

    def __sub__(self, other) -> PauliSum:
        try:
            other = self._coerce(other)
        except TypeError:
            return NotImplemented
        return self + (-other)

    def __rsub__(self, other) -> PauliSum:
        return (-self) + other

    def __mul__(self, other) -> PauliSum:
        if isinstance(other, Number):
            c = complex(other)
            return PauliSum(self.n_qubits, {k: v * c for k, v in self._terms.items()}, self.prune)
        try:
            other = self._coerce(other)
        except TypeError:
            return NotImplemented
        n = self.n_qubits
        acc: dict[tuple[int, int], complex] = {}
        for (x1, z1), c1 in self._terms.items():
            p1 = PauliString(n, x1, z1)
            for (x2, z2), c2 in other._terms.items():
                p = multiply(p1, PauliString(n, x2, z2))
                key = (p.x, p.z)
                acc[key] = acc.get(key, 0) + c1 * c2 * _PHASES[p.phase]
        return PauliSum(n, acc, self.prune)

    def __rmul__(self, other) -> PauliSum:
        if isinstance(other, Number):
            return self * other
        try:
            other = self._coerce(other)
        except TypeError:
            return NotImplemented
        return other * self

    def __truediv__(self, other) -> PauliSum:
        if not isinstance(other, Number):
            return NotImplemented
        return self * (1.0 / complex(other))

    def __eq__(self, other) -> bool:
        if not isinstance(other, PauliSum):
            return NotImplemented
        return self.n_qubits == other.n_qubits and self._terms == other._terms

    __hash__ = None

    def adjoint(self) -> PauliSum:
        return PauliSum(self.n_qubits, {k: c.conjugate() for k, c in self._terms.items()}, self.prune)

    def is_hermitian(self, tol: float = 1e-12) -> bool:
        return all(abs(c.imag) <= tol for c in self._terms.values())

    def real(self) -> PauliSum:
        """Drop imaginary parts of the coefficients (Hermitian projection)."""
        return PauliSum(self.n_qubits, {k: c.real for k, c in self._terms.items()}, self.prune)

    def chop(self, tol: float) -> PauliSum:
        return PauliSum(self.n_qubits, self._terms, prune=tol)

    def constant(self) -> complex:
        return self._terms.get((0, 0), 0j)

    def norm1(self) -> float:
        """Sum of absolute coefficients (an upper bound on the spectral norm)."""
        return float(sum(abs(c) for c in self._terms.values()))

    def is_diagonal(self) -> bool:
        return all(x == 0 for x, _ in self._terms)

    def allclose(self, other: PauliSum, atol: float = 1e-10) -> bool:
        diff = self - other
        return all(abs(c) <= atol for c in diff._terms.values())

    def to_dense(self, cap: int = DENSE_CAP) -> np.ndarray:
        return to_dense(self, cap)

    def apply(self, psi: np.ndarray) -> np.ndarray:
        return apply_to_vector(self, psi)


def commutator(a: PauliSum, b: PauliSum) -> PauliSum:
    """``AB - BA`` computed term by term; only anticommuting pairs contribute."""
    if isinstance(a, PauliString):
        a = PauliSum.from_string(a)
    if isinstance(b, PauliString):
        b = PauliSum.from_string(b)
    _check_sizes(a.n_qubits, b.n_qubits)
    n = a.n_qubits
    acc: dict[tuple[int, int], complex] = {}
    for (x1, z1), c1 in a._terms.items():
        p1 = PauliString(n, x1, z1)
        for (x2, z2), c2 in b._terms.items():
            p2 = PauliString(n, x2, z2)
            if commutes(p1, p2):
                continue
            p = multiply(p1, p2)
            key = (p.x, p.z)
            acc[key] = acc.get(key, 0) + 2 * c1 * c2 * _PHASES[p.phase]
    return PauliSum(n, acc, a.prune)


def anticommutator(a: PauliSum, b: PauliSum) -> PauliSum:
    return a * b + b * a


def group_commuting(h: PauliSum, qubit_wise: bool = False) -> list[PauliSum]:
    """Partition the terms of ``h`` into mutually commuting groups.

    Greedy largest-first colouring of the anticommutation graph (or, with
    ``qubit_wise=True``, of the graph of pairs that fail qubit-wise
    commutation).  Vertices are visited by decreasing degree, ties in mask
    order, so the result is deterministic.
    """
    terms = list(h.items())
    m = len(terms)
    if m == 0:
        return []
    strings = [p for p, _ in terms]
    if qubit_wise:
        conflict = lambda a, b: not a.qubitwise_commutes(b)  # noqa: E731
    else:
        conflict = lambda a, b: not commutes(a, b)  # noqa: E731
    adj: list[set[int]] = [set() for _ in range(m)]
    for i in range(m):
        for j in range(i + 1, m):
            if conflict(strings[i], strings[j]):
                adj[i].add(j)
                adj[j].add(i)
    order = sorted(range(m), key=lambda i: (-len(adj[i]), i))
    color: dict[int, int] = {}
    for v in order:
        used = {color[u] for u in adj[v] if u in color}
        c = 0
        while c in used:
            c += 1
        color[v] = c
    n_colors = max(color.values()) + 1
    groups = []
    for c in range(n_colors):
        members = {(strings[i].x, strings[i].z): terms[i][1] for i in range(m) if color[i] == c}
        groups.append(PauliSum(h.n_qubits, members, h.prune))
    return groups


def _sign_vector(n: int, z: int) -> np.ndarray:
    idx = np.arange(1 << n, dtype=np.int64)
    return 1 - 2 * (np.bitwise_count(idx & z) & 1).astype(np.int64)


def to_dense(a: PauliSum | PauliString, cap: int = DENSE_CAP) -> np.ndarray:
    """Dense ``2**n x 2**n`` matrix; rows/columns indexed by ``sum z_l 2**l``."""
    if isinstance(a, PauliString):
        a = PauliSum.from_string(a)
    n = a.n_qubits
    if n > cap:
        raise ResourceError(f"{n} qubits exceeds dense cap {cap}")
    dim = 1 << n
    out = np.zeros((dim, dim), dtype=complex)
    idx = np.arange(dim, dtype=np.int64)
    for (x, z), c in a._terms.items():
        val = c * _PHASES[_popcount(x & z) % 4] * _sign_vector(n, z)
        out[idx ^ x, idx] += val
    return out


def apply_to_vector(a: PauliSum | PauliString, psi: np.ndarray) -> np.ndarray:
    """Return ``A @ psi`` without forming the dense matrix."""
    if isinstance(a, PauliString):
        a = PauliSum.from_string(a)
    n = a.n_qubits
    if psi.shape[0] != 1 << n:
        raise DimensionError(f"vector of length {psi.shape[0]} does not match {n} qubits")
    out = np.zeros_like(psi, dtype=complex)
    idx = np.arange(1 << n, dtype=np.int64)
    for (x, z), c in a._terms.items():
        val = c * _PHASES[_popcount(x & z) % 4] * _sign_vector(n, z)
        out[idx ^ x] += val * psi
    return out


def pauli_basis(n_qubits: int, max_weight: int | None = None, include_identity: bool = True) -> list[PauliString]:
    """All Pauli strings of weight ``<= max_weight`` in mask order."""
    out = []
    for x in range(1 << n_qubits):
        for z in range(1 << n_qubits):
            w = _popcount(x | z)
            if w == 0 and not include_identity:
                continue
            if max_weight is not None and w > max_weight:
                continue
            out.append(PauliString(n_qubits, x, z))
    return out


def embed(p: PauliSum, n_qubits: int, offset: int = 0) -> PauliSum:
    """Place ``p`` on qubits ``offset .. offset + p.n_qubits - 1`` of a larger register."""
    if offset + p.n_qubits > n_qubits:
        raise DimensionError("embedding does not fit")
    return PauliSum(n_qubits, {(x << offset, z << offset): c for (x, z), c in p.terms.items()}, p.prune)
