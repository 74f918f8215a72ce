"""Dense state-vector and density-matrix execution engine.

Basis convention: amplitude index ``sum_l z_l 2**l`` for ``|z_{n-1} ... z_0>``.
Internally a state is viewed as a tensor with one axis of length 2 per qubit;
qubit ``q`` lives on axis ``n - 1 - q``.  A density matrix is treated as a
``2n``-qubit vector: row qubit ``q`` is bit ``n + q`` and column qubit ``q``
is bit ``q`` of the flattened index, so a gate ``U`` acts as ``U`` on the row
bits and ``U*`` on the column bits.

Gate conventions:

* ``Rx(t) = exp(-i t X / 2)`` and likewise for ``Ry``/``Rz``;
  ``S = diag(1, i)``, ``T = diag(1, exp(i pi / 4))``.
* ``CNOT`` carries ``qubits=(control, target)``.
* ``CU`` (controlled-U) carries ``qubits=(control, *targets)`` and ``matrix``;
  the first target is the most significant bit of ``matrix``.
* ``U`` carries an arbitrary unitary ``matrix`` on ``qubits`` (first listed
  qubit is the most significant bit).
* ``PauliRotation`` carries a Pauli label and applies ``exp(-i t P / 2)``.
* Any gate may list extra ``controls``; it then acts only where all control
  bits are 1.  Global phases are kept, so controlled circuits stay exact.
"""

from __future__ import annotations

import json
import math
import secrets
from collections.abc import Iterable, Mapping, Sequence
from dataclasses import dataclass, field, replace
from typing import NamedTuple

import numpy as np

from .errors import (
    ArgumentError,
    ChannelError,
    DimensionError,
    ParseError,
    PostSelectionError,
    ResourceError,
)
from .pauli import PauliString, PauliSum

STATE_CAP = 26
DENSITY_CAP = 12

_SQ2 = 1.0 / math.sqrt(2.0)
_FIXED = {
    "I": np.eye(2, dtype=complex),
    "X": np.array([[0, 1], [1, 0]], dtype=complex),
    "Y": np.array([[0, -1j], [1j, 0]], dtype=complex),
    "Z": np.array([[1, 0], [0, -1]], dtype=complex),
    "Had": np.array([[_SQ2, _SQ2], [_SQ2, -_SQ2]], dtype=complex),
    "S": np.array([[1, 0], [0, 1j]], dtype=complex),
    "Sdg": np.array([[1, 0], [0, -1j]], dtype=complex),
    "T": np.array([[1, 0], [0, np.exp(0.25j * np.pi)]], dtype=complex),
    "Tdg": np.array([[1, 0], [0, np.exp(-0.25j * np.pi)]], dtype=complex),
    "CNOT": np.array([[1, 0, 0, 0], [0, 1, 0, 0], [0, 0, 0, 1], [0, 0, 1, 0]], dtype=complex),
    "SWAP": np.array([[1, 0, 0, 0], [0, 0, 1, 0], [0, 1, 0, 0], [0, 0, 0, 1]], dtype=complex),
}
_ROTATIONS = ("Rx", "Ry", "Rz")
_ARITY = {k: (2 if k in ("CNOT", "SWAP") else 1) for k in _FIXED}
_ARITY.update({k: 1 for k in _ROTATIONS})
_SELF_INVERSE = {"I", "X", "Y", "Z", "Had", "CNOT", "SWAP"}
_INVERSE_NAME = {"S": "Sdg", "Sdg": "S", "T": "Tdg", "Tdg": "T"}
KINDS = tuple(_FIXED) + _ROTATIONS + ("CU", "U", "PauliRotation")


# -- random numbers -----------------------------------------------------------


def make_rng(seed: int | np.random.Generator | None = None) -> tuple[np.random.Generator, int | None]:
    """Counter-based generator plus the seed actually used.

    ``None`` draws a fresh 63-bit seed so that it can still be recorded.
    Passing an existing generator returns it unchanged with seed ``None``.
    """
    if isinstance(seed, np.random.Generator):
        return seed, None
    if seed is None:
        seed = secrets.randbits(63)
    return np.random.Generator(np.random.Philox(int(seed))), int(seed)


# -- gates ---------------------------------------------------------------------


@dataclass(frozen=True)
class Gate:
    """A single circuit element.

    ``angle`` is an offset; when ``param`` is set the effective angle is
    ``angle + scale * values[param]``.
    """

    kind: str
    qubits: tuple[int, ...]
    angle: float = 0.0
    pauli: str | None = None
    param: str | None = None
    scale: float = 1.0
    matrix: np.ndarray | None = field(default=None, compare=False)
    controls: tuple[int, ...] = ()

    def __post_init__(self):
        if self.kind not in KINDS:
            raise ArgumentError(f"unknown gate kind {self.kind!r}")
        object.__setattr__(self, "qubits", tuple(int(q) for q in self.qubits))
        object.__setattr__(self, "controls", tuple(int(q) for q in self.controls))
        everything = self.qubits + self.controls
        if len(set(everything)) != len(everything):
            raise ArgumentError(f"{self.kind} needs distinct qubits, got {everything}")
        if self.kind == "PauliRotation":
            if self.pauli is None:
                raise ArgumentError("PauliRotation needs a Pauli label")
            p = PauliString.from_label(self.pauli)
            if p.n_qubits != len(self.qubits):
                raise ArgumentError("PauliRotation label length must match its qubit list")
        elif self.kind == "CU":
            if self.matrix is None or len(self.qubits) < 2:
                raise ArgumentError("CU needs a control, at least one target and a matrix")
            m = np.asarray(self.matrix, dtype=complex)
            dim = 1 << (len(self.qubits) - 1)
            if m.shape != (dim, dim):
                raise DimensionError(f"CU matrix shape {m.shape} does not match {dim}")
            object.__setattr__(self, "matrix", m)
        elif self.kind == "U":
            if self.matrix is None or not self.qubits:
                raise ArgumentError("U needs target qubits and a matrix")
            m = np.asarray(self.matrix, dtype=complex)
            dim = 1 << len(self.qubits)
            if m.shape != (dim, dim):
                raise DimensionError(f"U matrix shape {m.shape} does not match {dim}")
            object.__setattr__(self, "matrix", m)
        elif len(self.qubits) != _ARITY[self.kind]:
            raise ArgumentError(f"{self.kind} acts on {_ARITY[self.kind]} qubit(s)")

    @property
    def parametric(self) -> bool:
        return self.kind in _ROTATIONS or self.kind == "PauliRotation"

    @property
    def all_qubits(self) -> tuple[int, ...]:
        return self.controls + self.qubits

    def resolve(self, values: Mapping[str, float] | None = None) -> float:
        if self.param is None:
            return self.angle
        if values is None or self.param not in values:
            raise ArgumentError(f"unbound parameter {self.param!r}")
        return self.angle + self.scale * float(values[self.param])

    def bound(self, values: Mapping[str, float] | None) -> Gate:
        if self.param is None:
            return self
        return replace(self, angle=self.resolve(values), param=None, scale=1.0)

    def inverse(self) -> Gate:
        if self.parametric:
            return replace(self, angle=-self.angle, scale=-self.scale)
        if self.kind in ("CU", "U"):
            return replace(self, matrix=self.matrix.conj().T)
        if self.kind in _SELF_INVERSE:
            return self
        return replace(self, kind=_INVERSE_NAME[self.kind])

    def local_matrix(self, values: Mapping[str, float] | None = None) -> np.ndarray:
        """Matrix on ``self.qubits`` (first listed qubit is the most significant bit)."""
        if self.kind in _FIXED:
            return _FIXED[self.kind]
        theta = self.resolve(values)
        c, s = math.cos(theta / 2), math.sin(theta / 2)
        if self.kind == "Rx":
            return np.array([[c, -1j * s], [-1j * s, c]])
        if self.kind == "Ry":
            return np.array([[c, -s], [s, c]], dtype=complex)
        if self.kind == "Rz":
            return np.array([[c - 1j * s, 0], [0, c + 1j * s]])
        if self.kind == "CU":
            d = self.matrix.shape[0]
            out = np.eye(2 * d, dtype=complex)
            out[d:, d:] = self.matrix
            return out
        if self.kind == "U":
            return self.matrix
        # PauliRotation: the label's leftmost letter is qubits[0]
        p = PauliSum.from_string(PauliString.from_label(self.pauli)).to_dense()
        return c * np.eye(p.shape[0]) - 1j * s * p

    def to_dict(self) -> dict:
        d: dict = {"kind": self.kind, "qubits": list(self.qubits)}
        if self.parametric:
            d["angle"] = self.angle
        if self.pauli is not None:
            d["pauli"] = self.pauli
        if self.param is not None:
            d["param"] = self.param
            d["scale"] = self.scale
        if self.matrix is not None:
            d["matrix"] = [[[float(v.real), float(v.imag)] for v in row] for row in self.matrix]
        if self.controls:
            d["controls"] = list(self.controls)
        return d

    @classmethod
    def from_dict(cls, d: Mapping) -> Gate:
        try:
            matrix = d.get("matrix")
            if matrix is not None:
                matrix = np.array([[complex(re, im) for re, im in row] for row in matrix])
            return cls(
                kind=d["kind"],
                qubits=tuple(d["qubits"]),
                angle=float(d.get("angle", 0.0)),
                pauli=d.get("pauli"),
                param=d.get("param"),
                scale=float(d.get("scale", 1.0)),
                matrix=matrix,
                controls=tuple(d.get("controls", ())),
            )
        except (KeyError, TypeError, ValueError) as exc:
            raise ParseError(f"malformed gate entry: {exc}") from exc


def _pauli_rotation_gate(p: PauliString, theta: float, **kw) -> Gate:
    """Gate for ``exp(-i theta P / 2)`` with ``P`` Hermitian (sign folded into the angle)."""
    if not p.is_hermitian():
        raise ArgumentError("Pauli rotation requires a Hermitian Pauli string")
    sign = -1.0 if p.phase == 2 else 1.0
    sup = p.support
    if not sup:
        # identity string: a pure global phase on one qubit's worth of label
        return Gate("PauliRotation", (0,), angle=sign * theta, pauli="I", **kw)
    qubits = tuple(sorted(sup, reverse=True))
    label = "".join(p.letter(q) for q in qubits)
    if "scale" in kw:
        kw["scale"] = sign * kw["scale"]
    return Gate("PauliRotation", qubits, angle=sign * theta, pauli=label, **kw)


def pauli_rotation(p: PauliString | str, theta: float = 0.0, param: str | None = None, scale: float = 1.0) -> Gate:
    """Build ``exp(-i (theta + scale * param) P / 2)`` as a single gate."""
    if isinstance(p, str):
        p = PauliString.from_label(p)
    if param is None:
        return _pauli_rotation_gate(p, theta)
    return _pauli_rotation_gate(p, theta, param=param, scale=scale)


def pauli_rotation_ladder(p: PauliString, theta: float) -> list[Gate]:
    """Basis change, CNOT parity ladder, ``Rz`` and uncompute.

    Each support qubit is rotated so that its Pauli becomes Z, the parity is
    accumulated into the highest support qubit, rotated there, and the
    ladder and basis change are undone.
    """
    if not p.is_hermitian():
        raise ArgumentError("Pauli rotation requires a Hermitian Pauli string")
    theta = -theta if p.phase == 2 else theta
    sup = p.support
    if not sup:
        return [Gate("PauliRotation", (0,), angle=theta, pauli="I")]
    pre: list[Gate] = []
    post: list[Gate] = []
    for q in sup:
        letter = p.letter(q)
        if letter == "X":
            pre.append(Gate("Had", (q,)))
            post.append(Gate("Had", (q,)))
        elif letter == "Y":
            pre += [Gate("Sdg", (q,)), Gate("Had", (q,))]
            post += [Gate("Had", (q,)), Gate("S", (q,))]
    ladder = [Gate("CNOT", (sup[i], sup[i + 1])) for i in range(len(sup) - 1)]
    core = [Gate("Rz", (sup[-1],), angle=theta)]
    return pre + ladder + core + ladder[::-1] + post


def measurement_basis_change(p: PauliString) -> list[Gate]:
    """Gates ``V`` with ``V^dag Z_l V`` equal to the Pauli letter on each support qubit."""
    out = []
    for q in p.support:
        letter = p.letter(q)
        if letter == "X":
            out.append(Gate("Had", (q,)))
        elif letter == "Y":
            out += [Gate("Sdg", (q,)), Gate("Had", (q,))]
    return out


# -- kernels -------------------------------------------------------------------


def _apply_matrix(t: np.ndarray, mat: np.ndarray, axes: Sequence[int], ctrl_axes: Sequence[int] = ()) -> np.ndarray:
    """Contract ``mat`` into tensor ``t`` on ``axes``; returns a new array."""
    if ctrl_axes:
        t = np.array(t, copy=True)
        idx = [slice(None)] * t.ndim
        for a in ctrl_axes:
            idx[a] = 1
        idx = tuple(idx)
        sub_axes = [a - sum(1 for c in ctrl_axes if c < a) for a in axes]
        t[idx] = _apply_matrix(t[idx], mat, sub_axes)
        return t
    k = len(axes)
    m = np.asarray(mat).reshape((2,) * (2 * k))
    res = np.tensordot(m, t, axes=(list(range(k, 2 * k)), list(axes)))
    return np.moveaxis(res, list(range(k)), list(axes))


def _pauli_rotation_flat(
    v: np.ndarray, x: int, z: int, factor: complex, theta: float, ctrl_mask: int = 0
) -> np.ndarray:
    """``cos(t/2) v - i sin(t/2) P v`` on a ``(2**N, batch)`` array.

    ``factor`` is the scalar with ``P|w> = factor (-1)^{z.w} |w xor x>``.
    """
    dim = v.shape[0]
    idx = np.arange(dim, dtype=np.int64)
    sign = 1 - 2 * (np.bitwise_count(idx & z) & 1).astype(np.int64)
    pv = factor * (sign[:, None] * v)[idx ^ x]
    out = math.cos(theta / 2) * v - 1j * math.sin(theta / 2) * pv
    if ctrl_mask:
        keep = (idx & ctrl_mask) != ctrl_mask
        out[keep] = v[keep]
    return out


def _shift_label(gate: Gate, offset: int) -> tuple[int, int]:
    """Masks of a PauliRotation gate's string on the full register (shifted by ``offset``)."""
    x = z = 0
    for letter, q in zip(gate.pauli, gate.qubits):
        if letter in "XY":
            x |= 1 << (q + offset)
        if letter in "YZ":
            z |= 1 << (q + offset)
    return x, z


def _apply_to_tensor(
    t: np.ndarray, gate: Gate, n: int, values: Mapping[str, float] | None, offset: int = 0, conj: bool = False
) -> np.ndarray:
    """Apply ``gate`` (or its complex conjugate) to qubits shifted by ``offset``.

    ``t`` has shape ``(2,) * N + batch`` where ``N`` is the number of bit axes;
    qubit ``q + offset`` lives on axis ``N - 1 - (q + offset)``.
    """
    big = n
    for q in gate.all_qubits:
        if not 0 <= q + offset < big:
            raise DimensionError(f"qubit {q} out of range")
    if gate.kind == "I":
        return t
    if gate.kind == "PauliRotation":
        theta = gate.resolve(values)
        x, z = _shift_label(gate, offset)
        factor = (1j) ** ((x & z).bit_count() % 4)
        ctrl = 0
        for c in gate.controls:
            ctrl |= 1 << (c + offset)
        if not x and not z and not ctrl:
            phase = complex(math.cos(theta / 2), -math.sin(theta / 2))
            return t * (phase.conjugate() if conj else phase)
        if conj:
            factor = factor.conjugate()
            theta = -theta
        shape = t.shape
        flat = t.reshape(1 << big, -1)
        return _pauli_rotation_flat(flat, x, z, factor, theta, ctrl).reshape(shape)
    mat = gate.local_matrix(values)
    if conj:
        mat = mat.conj()
    axes = [big - 1 - (q + offset) for q in gate.qubits]
    ctrl_axes = [big - 1 - (c + offset) for c in gate.controls]
    return _apply_matrix(t, mat, axes, ctrl_axes)


# -- states ---------------------------------------------------------------------


class StateVector:
    """Pure state of ``n_qubits`` qubits; mutated in place by :meth:`apply`."""

    def __init__(self, n_qubits: int, amplitudes: np.ndarray | None = None):
        if n_qubits > STATE_CAP:
            raise ResourceError(f"{n_qubits} qubits exceeds state-vector cap {STATE_CAP}")
        self.n_qubits = int(n_qubits)
        if amplitudes is None:
            amplitudes = np.zeros(1 << n_qubits, dtype=complex)
            amplitudes[0] = 1.0
        amplitudes = np.array(amplitudes, dtype=complex).reshape(-1)
        if amplitudes.shape[0] != 1 << n_qubits:
            raise DimensionError(f"{amplitudes.shape[0]} amplitudes for {n_qubits} qubits")
        self.amplitudes = amplitudes

    @classmethod
    def basis(cls, n_qubits: int, index: int | str) -> StateVector:
        """Computational basis state; a string is read as ``z_{n-1} ... z_0``."""
        if isinstance(index, str):
            index = int(index, 2)
        amps = np.zeros(1 << n_qubits, dtype=complex)
        amps[index] = 1.0
        return cls(n_qubits, amps)

    @classmethod
    def random(cls, n_qubits: int, rng: np.random.Generator) -> StateVector:
        v = rng.normal(size=1 << n_qubits) + 1j * rng.normal(size=1 << n_qubits)
        return cls(n_qubits, v / np.linalg.norm(v))

    def copy(self) -> StateVector:
        return StateVector(self.n_qubits, self.amplitudes.copy())

    def norm(self) -> float:
        return float(np.linalg.norm(self.amplitudes))

    def apply(self, gate: Gate | Circuit, values: Mapping[str, float] | None = None) -> StateVector:
        if isinstance(gate, Circuit):
            if gate.n_qubits != self.n_qubits:
                raise DimensionError("circuit and state sizes differ")
            for g in gate.gates:
                self.apply(g, values)
            return self
        n = self.n_qubits
        t = _apply_to_tensor(self.amplitudes.reshape((2,) * n), gate, n, values)
        self.amplitudes = np.ascontiguousarray(t).reshape(-1)
        return self

    def probabilities(self) -> np.ndarray:
        p = np.abs(self.amplitudes) ** 2
        return p / p.sum()

    def expectation(self, a: PauliSum | PauliString) -> complex:
        return expectation(self, a)

    def overlap(self, other: StateVector) -> complex:
        return complex(np.vdot(self.amplitudes, other.amplitudes))

    def __repr__(self) -> str:
        return f"StateVector(n_qubits={self.n_qubits})"


class DensityMatrix:
    """Mixed state stored as a dense ``2**n x 2**n`` matrix."""

    def __init__(self, n_qubits: int, matrix: np.ndarray | None = None):
        if n_qubits > DENSITY_CAP:
            raise ResourceError(f"{n_qubits} qubits exceeds density-matrix cap {DENSITY_CAP}")
        self.n_qubits = int(n_qubits)
        dim = 1 << n_qubits
        if matrix is None:
            matrix = np.zeros((dim, dim), dtype=complex)
            matrix[0, 0] = 1.0
        matrix = np.array(matrix, dtype=complex)
        if matrix.shape != (dim, dim):
            raise DimensionError(f"matrix shape {matrix.shape} does not match {n_qubits} qubits")
        self.matrix = matrix

    @classmethod
    def from_state(cls, state: StateVector | np.ndarray) -> DensityMatrix:
        v = state.amplitudes if isinstance(state, StateVector) else np.asarray(state)
        n = int(round(math.log2(v.shape[0])))
        return cls(n, np.outer(v, v.conj()))

    def copy(self) -> DensityMatrix:
        return DensityMatrix(self.n_qubits, self.matrix.copy())

    def _tensor(self) -> np.ndarray:
        return self.matrix.reshape((2,) * (2 * self.n_qubits))

    def apply(self, gate: Gate | Circuit, values: Mapping[str, float] | None = None) -> DensityMatrix:
        if isinstance(gate, Circuit):
            for g in gate.gates:
                self.apply(g, values)
            return self
        n = self.n_qubits
        t = _apply_to_tensor(self._tensor(), gate, 2 * n, values, offset=n)
        t = _apply_to_tensor(t, gate, 2 * n, values, offset=0, conj=True)
        self.matrix = np.ascontiguousarray(t).reshape(1 << n, 1 << n)
        return self

    def apply_kraus(self, kraus: Sequence[np.ndarray], qubits: Sequence[int]) -> DensityMatrix:
        """``rho -> sum_K K rho K^dag`` with each ``K`` acting on ``qubits``."""
        check_kraus(kraus)
        n = self.n_qubits
        for q in qubits:
            if not 0 <= q < n:
                raise DimensionError(f"qubit {q} out of range")
        t = self._tensor()
        rows = [2 * n - 1 - (q + n) for q in qubits]
        cols = [2 * n - 1 - q for q in qubits]
        acc = np.zeros_like(t)
        for k in kraus:
            acc += _apply_matrix(_apply_matrix(t, k, rows), np.conj(k), cols)
        self.matrix = acc.reshape(1 << n, 1 << n)
        return self

    def trace(self) -> float:
        return float(np.trace(self.matrix).real)

    def purity(self) -> float:
        return float(np.real(np.vdot(self.matrix, self.matrix)))

    def probabilities(self) -> np.ndarray:
        p = np.clip(np.real(np.diag(self.matrix)), 0.0, None)
        return p / p.sum()

    def expectation(self, a: PauliSum | PauliString) -> complex:
        if isinstance(a, PauliString):
            a = PauliSum.from_string(a)
        return complex(np.trace(a.to_dense(cap=DENSITY_CAP) @ self.matrix))


def check_kraus(kraus: Sequence[np.ndarray], tol: float = 1e-10) -> None:
    if not kraus:
        raise ChannelError("empty Kraus set")
    total = sum(np.conj(k).T @ k for k in kraus)
    if not np.allclose(total, np.eye(total.shape[0]), atol=tol, rtol=0):
        raise ChannelError("Kraus operators are not complete (sum K^dag K != 1)")


def apply_gate(state: StateVector, g: Gate, values: Mapping[str, float] | None = None) -> StateVector:
    """Apply ``g`` in place and return the state."""
    return state.apply(g, values)


def apply_pauli_rotation(state: StateVector, p: PauliString, theta: float, method: str = "direct") -> StateVector:
    """Apply ``exp(-i theta P / 2)`` in place.

    ``method="direct"`` acts with ``P`` on the amplitudes; ``method="ladder"``
    runs the equivalent basis-change plus CNOT-ladder circuit.  An identity
    string contributes the global phase ``exp(-i theta / 2)``.
    """
    if p.n_qubits != state.n_qubits:
        raise DimensionError("Pauli string and state sizes differ")
    if method == "direct":
        return state.apply(_pauli_rotation_gate(p, theta))
    if method == "ladder":
        for g in pauli_rotation_ladder(p, theta):
            state.apply(g)
        return state
    raise ArgumentError(f"unknown method {method!r}")


def expectation(state: StateVector | np.ndarray, a: PauliSum | PauliString) -> complex:
    """Exact ``<psi|A|psi>``."""
    v = state.amplitudes if isinstance(state, StateVector) else np.asarray(state)
    if isinstance(a, PauliString):
        a = PauliSum.from_string(a)
    if v.shape[0] != 1 << a.n_qubits:
        raise DimensionError("operator and state sizes differ")
    return complex(np.vdot(v, a.apply(v)))


class Estimate(NamedTuple):
    """Shot-based estimate ``mean +/- std`` with provenance."""

    mean: float
    std: float
    shots: int
    seed: int | None


def sample_counts(probs: np.ndarray, shots: int, rng: np.random.Generator) -> np.ndarray:
    """Multinomial outcome counts over basis indices."""
    p = np.clip(np.asarray(probs, dtype=float), 0.0, None)
    return rng.multinomial(shots, p / p.sum())


def sample_bitstrings(state: StateVector | DensityMatrix, shots: int, rng: np.random.Generator) -> np.ndarray:
    """Individual measured basis indices (shape ``(shots,)``)."""
    p = state.probabilities()
    return rng.choice(p.shape[0], size=shots, p=p)


def sample_pauli(
    state: StateVector, p: PauliString, n_s: int, seed: int | np.random.Generator | None = None
) -> Estimate:
    """Estimate ``<P>`` from ``n_s`` shots in the rotated basis.

    Returns the sample mean of ``f(z) = prod_l (-1)^{z_l}`` over the support
    (times the string's sign) and ``sigma = sqrt((1 - mu^2) / n_s)``.
    """
    if n_s < 1:
        raise ArgumentError("shot count must be at least 1")
    if not p.is_hermitian():
        raise ArgumentError("only Hermitian Pauli strings are observables")
    rng, used = make_rng(seed)
    rotated = state.copy()
    for g in measurement_basis_change(p):
        rotated.apply(g)
    counts = sample_counts(rotated.probabilities(), n_s, rng)
    mask = p.x | p.z
    idx = np.arange(counts.shape[0], dtype=np.int64)
    f = 1 - 2 * (np.bitwise_count(idx & mask) & 1).astype(np.int64)
    sign = -1.0 if p.phase == 2 else 1.0
    mu = sign * float(np.dot(counts, f)) / n_s
    sigma = math.sqrt(max(1.0 - mu * mu, 0.0) / n_s)
    return Estimate(mu, sigma, n_s, used)


def measure_with_postselection(
    state: StateVector, qubits: Sequence[int], outcomes: Sequence[int], tol: float = 1e-14
) -> tuple[StateVector, float]:
    """Project ``qubits`` onto ``outcomes``; return the renormalized state and its probability."""
    if len(set(qubits)) != len(qubits):
        raise ArgumentError("post-selection qubits must be distinct")
    if len(qubits) != len(outcomes):
        raise ArgumentError("one outcome per qubit required")
    n = state.n_qubits
    idx = np.arange(1 << n, dtype=np.int64)
    keep = np.ones(1 << n, dtype=bool)
    for q, b in zip(qubits, outcomes):
        if not 0 <= q < n:
            raise DimensionError(f"qubit {q} out of range")
        keep &= ((idx >> q) & 1) == int(b)
    amps = np.where(keep, state.amplitudes, 0)
    prob = float(np.vdot(amps, amps).real)
    if prob < tol:
        raise PostSelectionError(f"post-selection probability {prob:.3e} is effectively zero")
    return StateVector(n, amps / math.sqrt(prob)), prob


def evolve_density(
    rho: DensityMatrix, op: Gate | Sequence[np.ndarray], qubits: Sequence[int] | None = None
) -> DensityMatrix:
    """Evolve ``rho`` by a gate or by a Kraus set on ``qubits`` (returns a new matrix)."""
    out = rho.copy()
    if isinstance(op, Gate):
        return out.apply(op)
    if qubits is None:
        raise ArgumentError("Kraus evolution needs target qubits")
    return out.apply_kraus(op, qubits)


# -- circuits -------------------------------------------------------------------


class Circuit:
    """Ordered gate list on ``n_qubits`` with named symbolic parameters."""

    def __init__(self, n_qubits: int, gates: Iterable[Gate] = ()):
        self.n_qubits = int(n_qubits)
        self.gates: list[Gate] = []
        for g in gates:
            self.append(g)

    def append(self, g: Gate) -> Circuit:
        for q in g.all_qubits:
            if not 0 <= q < self.n_qubits:
                raise DimensionError(f"gate {g.kind} touches qubit {q} outside {self.n_qubits}")
        self.gates.append(g)
        return self

    def extend(self, gates: Iterable[Gate]) -> Circuit:
        for g in gates:
            self.append(g)
        return self

    def add(self, kind: str, *qubits: int, **kw) -> Circuit:
        return self.append(Gate(kind, tuple(qubits), **kw))

    def __add__(self, other: Circuit) -> Circuit:
        if other.n_qubits != self.n_qubits:
            raise DimensionError("cannot concatenate circuits of different widths")
        return Circuit(self.n_qubits, self.gates + other.gates)

    def __len__(self) -> int:
        return len(self.gates)

    def copy(self) -> Circuit:
        return Circuit(self.n_qubits, self.gates)

    @property
    def parameters(self) -> list[str]:
        seen: dict[str, None] = {}
        for g in self.gates:
            if g.param is not None:
                seen.setdefault(g.param, None)
        return list(seen)

    @property
    def width(self) -> int:
        return self.n_qubits

    @property
    def depth(self) -> int:
        """Number of layers when gates are packed as early as their qubits allow."""
        level = [0] * self.n_qubits
        for g in self.gates:
            if g.kind == "I":
                continue
            qs = g.all_qubits
            d = max(level[q] for q in qs) + 1
            for q in qs:
                level[q] = d
        return max(level, default=0)

    def bind(self, values: Mapping[str, float] | Sequence[float]) -> Circuit:
        values = self._as_mapping(values)
        return Circuit(self.n_qubits, [g.bound(values) for g in self.gates])

    def _as_mapping(self, values) -> dict[str, float] | None:
        if values is None:
            return None
        if isinstance(values, Mapping):
            return dict(values)
        names = self.parameters
        values = list(np.asarray(values, dtype=float).reshape(-1))
        if len(values) != len(names):
            raise ArgumentError(f"expected {len(names)} parameters, got {len(values)}")
        return dict(zip(names, values))

    def inverse(self) -> Circuit:
        return Circuit(self.n_qubits, [g.inverse() for g in reversed(self.gates)])

    def controlled(self, control: int, n_qubits: int | None = None, offset: int = 0) -> Circuit:
        """Every gate gains ``control``; the body is shifted by ``offset`` on a wider register."""
        n = n_qubits if n_qubits is not None else self.n_qubits
        out = Circuit(n)
        for g in self.gates:
            out.append(
                replace(
                    g,
                    qubits=tuple(q + offset for q in g.qubits),
                    controls=tuple(c + offset for c in g.controls) + (control,),
                )
            )
        return out

    def shifted(self, n_qubits: int, offset: int = 0) -> Circuit:
        out = Circuit(n_qubits)
        for g in self.gates:
            out.append(
                replace(g, qubits=tuple(q + offset for q in g.qubits), controls=tuple(c + offset for c in g.controls))
            )
        return out

    def run(
        self, state: StateVector | np.ndarray | None = None, values: Mapping[str, float] | Sequence[float] | None = None
    ) -> StateVector:
        """Apply to a copy of ``state`` (default ``|0...0>``)."""
        if state is None:
            out = StateVector(self.n_qubits)
        elif isinstance(state, StateVector):
            out = state.copy()
        else:
            out = StateVector(self.n_qubits, np.asarray(state))
        values = self._as_mapping(values)
        for g in self.gates:
            out.apply(g, values)
        return out

    def to_unitary(self, values=None, cap: int = 12) -> np.ndarray:
        if self.n_qubits > cap:
            raise ResourceError(f"{self.n_qubits} qubits exceeds unitary cap {cap}")
        n = self.n_qubits
        dim = 1 << n
        values = self._as_mapping(values)
        t = np.eye(dim, dtype=complex).reshape((2,) * n + (dim,))
        for g in self.gates:
            t = _apply_to_tensor(t, g, n, values)
        return np.ascontiguousarray(t).reshape(dim, dim)

    def to_dict(self) -> dict:
        return {
            "n_qubits": self.n_qubits,
            "gates": [g.to_dict() for g in self.gates],
            "parameters": self.parameters,
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), sort_keys=True)

    @classmethod
    def from_dict(cls, d: Mapping) -> Circuit:
        try:
            n = int(d["n_qubits"])
            gates = [Gate.from_dict(g) for g in d["gates"]]
        except (KeyError, TypeError, ValueError) as exc:
            raise ParseError(f"malformed circuit: {exc}") from exc
        return cls(n, gates)

    @classmethod
    def from_json(cls, text: str) -> Circuit:
        try:
            return cls.from_dict(json.loads(text))
        except json.JSONDecodeError as exc:
            raise ParseError(exc.msg, line=exc.lineno, position=exc.colno) from exc

    def __repr__(self) -> str:
        return f"Circuit(n_qubits={self.n_qubits}, gates={len(self.gates)})"


def gate_unitary(g: Gate, n_qubits: int, values: Mapping[str, float] | None = None) -> np.ndarray:
    """Full-register dense matrix of a single gate."""
    return Circuit(n_qubits, [g]).to_unitary(values)
