"""Integral files, Pauli-sum JSON, low-rank ERI factors and Givens networks.

FCIDUMP conventions: 1-based orbital indices, chemists' notation ``(ij|kl)``,
``value i j 0 0`` for one-body integrals and ``value 0 0 0 0`` for the nuclear
repulsion energy.  Lines of the form ``value i 0 0 0`` (orbital energies) are
accepted and ignored.
"""

from __future__ import annotations

import itertools
import json
import math
import re
from dataclasses import dataclass, field

import numpy as np

from .errors import (
    ConsistencyError,
    DimensionError,
    HeaderError,
    IndexOutOfRangeError,
    NotPSDError,
    ParseError,
    ValidationError,
)
from .pauli import PauliString, PauliSum

CONSISTENCY_TOL = 1e-10


@dataclass
class MolecularIntegrals:
    """Nuclear repulsion, one-body matrix and chemists'-notation ERI tensor (Hartree)."""

    n_spatial: int
    n_electrons: int
    ms2: int
    e_nuc: float
    h: np.ndarray
    eri: np.ndarray
    orbsym: list[int] | None = None

    def __post_init__(self):
        n = self.n_spatial
        self.h = np.asarray(self.h, dtype=float)
        self.eri = np.asarray(self.eri, dtype=float)
        if self.h.shape != (n, n) or self.eri.shape != (n, n, n, n):
            raise DimensionError(f"integral shapes {self.h.shape}, {self.eri.shape} do not match n={n}")

    def validate(self, tol: float = CONSISTENCY_TOL) -> None:
        if not np.allclose(self.h, self.h.T, atol=tol, rtol=0):
            raise ValidationError("h is not symmetric")
        for perm in ((1, 0, 2, 3), (0, 1, 3, 2), (2, 3, 0, 1)):
            if not np.allclose(self.eri, self.eri.transpose(perm), atol=tol, rtol=0):
                raise ValidationError(f"eri violates permutational symmetry {perm}")

    @property
    def n_up(self) -> int:
        return (self.n_electrons + self.ms2) // 2

    @property
    def n_down(self) -> int:
        return (self.n_electrons - self.ms2) // 2


def random_integrals(n: int, rng: np.random.Generator, rank: int | None = None, scale: float = 0.5) -> MolecularIntegrals:
    """Random real integrals with exact 8-fold symmetry and a PSD two-body part."""
    a = rng.normal(size=(n, n))
    h = scale * (a + a.T) / 2
    rank = n if rank is None else rank
    eri = np.zeros((n, n, n, n))
    for _ in range(rank):
        b = rng.normal(size=(n, n))
        lg = scale * (b + b.T) / 2
        eri += np.einsum("pr,qs->prqs", lg, lg)
    return MolecularIntegrals(n, min(n, 2), 0, float(rng.normal()), h, eri)


# -- FCIDUMP ------------------------------------------------------------------------

_KEY_RE = re.compile(r"([A-Za-z_][A-Za-z0-9_]*)\s*=")


def _parse_header(body: str, line_no: int) -> dict[str, list[int]]:
    fields: dict[str, list[int]] = {}
    matches = list(_KEY_RE.finditer(body))
    if not matches and body.strip():
        raise HeaderError("unrecognized namelist content", line=line_no)
    for i, m in enumerate(matches):
        end = matches[i + 1].start() if i + 1 < len(matches) else len(body)
        raw = body[m.end() : end]
        vals = [v.strip() for v in raw.replace("\n", ",").split(",") if v.strip()]
        try:
            fields[m.group(1).upper()] = [int(v) for v in vals]
        except ValueError:
            raise HeaderError(f"non-integer value for {m.group(1)}", line=line_no) from None
    return fields


def parse_fcidump(text: str) -> MolecularIntegrals:
    """Parse FCIDUMP text, expanding the 8-fold ERI symmetry."""
    lines = text.splitlines()
    header_parts = []
    i = 0
    # locate &FCI
    while i < len(lines) and not lines[i].strip():
        i += 1
    if i >= len(lines) or not lines[i].lstrip().upper().startswith("&FCI"):
        raise HeaderError("missing &FCI namelist", line=i + 1 if i < len(lines) else None)
    start_line = i + 1
    first = lines[i].lstrip()[4:]
    closed = False
    chunk = first
    while True:
        m = re.search(r"(&END|/|\$END)", chunk, flags=re.IGNORECASE)
        if m:
            header_parts.append(chunk[: m.start()])
            if chunk[m.end() :].strip():
                raise ParseError("unexpected text after namelist terminator", line=i + 1)
            closed = True
            i += 1
            break
        header_parts.append(chunk)
        i += 1
        if i >= len(lines):
            break
        chunk = lines[i]
    if not closed:
        raise HeaderError("unterminated &FCI namelist", line=start_line)
    fields = _parse_header("\n".join(header_parts), start_line)
    for key in ("NORB", "NELEC"):
        if key not in fields or len(fields[key]) != 1:
            raise HeaderError(f"header lacks {key}", line=start_line)
    n = fields["NORB"][0]
    nelec = fields["NELEC"][0]
    ms2 = fields.get("MS2", [0])[0]
    if n < 1 or nelec < 0:
        raise HeaderError("NORB must be positive and NELEC non-negative", line=start_line)
    h = np.zeros((n, n))
    eri = np.zeros((n, n, n, n))
    h_set = np.zeros((n, n), dtype=bool)
    eri_set = np.zeros((n, n, n, n), dtype=bool)
    e_nuc = 0.0
    for ln in range(i, len(lines)):
        line = lines[ln].strip()
        if not line:
            continue
        toks = line.split()
        if len(toks) != 5:
            raise ParseError(f"expected 'value i j k l', got {len(toks)} fields", line=ln + 1)
        try:
            value = float(toks[0].replace("D", "E").replace("d", "e"))
            idx = [int(t) for t in toks[1:]]
        except ValueError:
            raise ParseError(f"malformed data line {line!r}", line=ln + 1) from None
        if not math.isfinite(value):
            raise ParseError("non-finite integral value", line=ln + 1)
        if any(v < 0 or v > n for v in idx):
            raise IndexOutOfRangeError(f"index outside 0..{n} in {idx}", line=ln + 1)
        a, b, c, d = idx
        if a == b == c == d == 0:
            e_nuc = value
        elif c == 0 and d == 0 and a > 0 and b > 0:
            for p, q in {(a - 1, b - 1), (b - 1, a - 1)}:
                if h_set[p, q] and abs(h[p, q] - value) > CONSISTENCY_TOL:
                    raise ConsistencyError(f"conflicting one-body entry ({a},{b})", line=ln + 1)
                h[p, q] = value
                h_set[p, q] = True
        elif b == 0 and c == 0 and d == 0:
            continue  # orbital energy
        elif min(idx) > 0:
            for p, r, q, s in _eri_orbit(a - 1, b - 1, c - 1, d - 1):
                if eri_set[p, r, q, s] and abs(eri[p, r, q, s] - value) > CONSISTENCY_TOL:
                    raise ConsistencyError(f"conflicting two-body entry ({a},{b},{c},{d})", line=ln + 1)
                eri[p, r, q, s] = value
                eri_set[p, r, q, s] = True
        else:
            raise ParseError(f"unsupported index pattern {idx}", line=ln + 1)
    orbsym = fields.get("ORBSYM")
    return MolecularIntegrals(n, nelec, ms2, e_nuc, h, eri, orbsym)


def _eri_orbit(p: int, r: int, q: int, s: int) -> set[tuple[int, int, int, int]]:
    return {
        (p, r, q, s),
        (r, p, q, s),
        (p, r, s, q),
        (r, p, s, q),
        (q, s, p, r),
        (s, q, p, r),
        (q, s, r, p),
        (s, q, r, p),
    }


def _fmt(v: float) -> str:
    return f"{v: .16e}"


def write_fcidump(ints: MolecularIntegrals, tol: float = 0.0) -> str:
    """Canonical FCIDUMP text (unique representatives in ascending order, 17 significant digits)."""
    n = ints.n_spatial
    orbsym = ints.orbsym or [1] * n
    out = [
        f" &FCI NORB={n},NELEC={ints.n_electrons},MS2={ints.ms2},",
        "  ORBSYM=" + ",".join(str(o) for o in orbsym) + ",",
        "  ISYM=1,",
        " &END",
    ]
    for i, j in itertools.combinations_with_replacement(range(n), 2):
        for k, l in itertools.combinations_with_replacement(range(n), 2):
            if (i, j) > (k, l):
                continue
            v = float(ints.eri[i, j, k, l])
            if abs(v) > tol and v != 0.0:
                out.append(f"{_fmt(v)} {i + 1:4d} {j + 1:4d} {k + 1:4d} {l + 1:4d}")
    for i, j in itertools.combinations_with_replacement(range(n), 2):
        v = float(ints.h[i, j])
        if abs(v) > tol and v != 0.0:
            out.append(f"{_fmt(v)} {i + 1:4d} {j + 1:4d}    0    0")
    out.append(f"{_fmt(float(ints.e_nuc))}    0    0    0    0")
    return "\n".join(out) + "\n"


def read_fcidump(path) -> MolecularIntegrals:
    with open(path, encoding="utf-8") as fh:
        return parse_fcidump(fh.read())


# -- Pauli-sum JSON --------------------------------------------------------------------


def pauli_sum_to_json(a: PauliSum) -> str:
    """``{"n_qubits": n, "terms": [{"pauli": "XZIY", "re": ..., "im": ...}]}`` in mask order."""
    terms = [{"pauli": p.label, "re": float(c.real), "im": float(c.imag)} for p, c in a.items()]
    return json.dumps({"n_qubits": a.n_qubits, "terms": terms}, indent=1)


def pauli_sum_from_json(text: str) -> PauliSum:
    try:
        data = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ParseError(exc.msg, line=exc.lineno, position=exc.colno) from exc
    if not isinstance(data, dict) or "n_qubits" not in data or "terms" not in data:
        raise ParseError("expected an object with 'n_qubits' and 'terms'")
    n = data["n_qubits"]
    if not isinstance(n, int) or n < 0:
        raise ParseError("'n_qubits' must be a non-negative integer")
    acc: dict[tuple[int, int], complex] = {}
    for t_idx, term in enumerate(data["terms"]):
        try:
            label, re_, im_ = term["pauli"], term["re"], term["im"]
        except (KeyError, TypeError):
            raise ParseError(f"term {t_idx} needs 'pauli', 're' and 'im'") from None
        if not isinstance(label, str):
            raise ParseError(f"term {t_idx}: 'pauli' must be a string")
        try:
            p = PauliString.from_label(label)
        except ParseError as exc:
            raise ParseError(f"term {t_idx}: {exc.args[0]}", position=exc.position) from None
        if p.n_qubits != n:
            raise ParseError(f"term {t_idx}: label {label!r} has {p.n_qubits} qubits, expected {n}")
        if not all(isinstance(v, (int, float)) and not isinstance(v, bool) for v in (re_, im_)):
            raise ParseError(f"term {t_idx}: coefficients must be numbers")
        key = (p.x, p.z)
        if key in acc:
            raise ConsistencyError(f"term {t_idx}: duplicate Pauli string {label}")
        acc[key] = complex(re_, im_)
    return PauliSum(n, acc)


# -- pivoted Cholesky -----------------------------------------------------------------


@dataclass
class LowRankFactors:
    """``(pr|qs) ~= sum_g L^g_pr L^g_qs`` with symmetric ``L^g``."""

    factors: list[np.ndarray]
    residual: float
    pivots: list[int] = field(default_factory=list)

    @property
    def n_gamma(self) -> int:
        return len(self.factors)

    def reconstruct(self) -> np.ndarray:
        if not self.factors:
            raise ValidationError("no factors")
        n = self.factors[0].shape[0]
        out = np.zeros((n, n, n, n))
        for lg in self.factors:
            out += np.einsum("pr,qs->prqs", lg, lg)
        return out


def cholesky_factorize(eri: np.ndarray, tol: float = 1e-8, psd_tol: float = 1e-8) -> LowRankFactors:
    """Pivoted Cholesky of the ``(pr),(qs)`` supermatrix.

    Pivots on the largest residual diagonal (ties to the lowest index) and
    stops once the residual trace is at most ``tol``.  For a PSD residual the
    trace bounds both its largest diagonal entry and its Frobenius norm.
    """
    eri = np.asarray(eri, dtype=float)
    n = eri.shape[0]
    if eri.shape != (n, n, n, n):
        raise DimensionError("eri must have shape (n, n, n, n)")
    v = eri.reshape(n * n, n * n)
    if not np.allclose(v, v.T, atol=psd_tol, rtol=0):
        raise NotPSDError("ERI supermatrix is not symmetric")
    diag = np.diag(v).copy()
    if diag.min(initial=0.0) < -psd_tol:
        raise NotPSDError(f"negative diagonal {diag.min():.3e}")
    vecs: list[np.ndarray] = []
    pivots: list[int] = []
    while np.clip(diag, 0, None).sum() > tol and len(vecs) < n * n:
        piv = int(np.argmax(diag))
        d = diag[piv]
        if d < -psd_tol:
            raise NotPSDError(f"negative pivot {d:.3e}")
        col = v[:, piv].copy()
        for lv in vecs:
            col -= lv * lv[piv]
        if col[piv] < -psd_tol:
            raise NotPSDError(f"negative pivot {col[piv]:.3e}")
        if col[piv] <= 0:
            break
        lvec = col / math.sqrt(col[piv])
        vecs.append(lvec)
        pivots.append(piv)
        diag -= lvec * lvec
        if diag.min() < -psd_tol:
            raise NotPSDError(f"residual diagonal went negative ({diag.min():.3e})")
    approx = sum((np.outer(lv, lv) for lv in vecs), np.zeros_like(v))
    residual = float(np.linalg.norm(v - approx))
    factors = [0.5 * (lv.reshape(n, n) + lv.reshape(n, n).T) for lv in vecs]
    return LowRankFactors(factors, residual, pivots)


# -- Givens networks ---------------------------------------------------------------------


@dataclass(frozen=True)
class Givens:
    """``G = [[c, -s e^{-i phi}], [s e^{i phi}, c]]`` in the ``(k, l)`` plane."""

    k: int
    l: int
    theta: float
    phi: float

    def matrix(self, n: int) -> np.ndarray:
        g = np.eye(n, dtype=complex)
        c, s = math.cos(self.theta), math.sin(self.theta)
        g[self.k, self.k] = c
        g[self.k, self.l] = -s * np.exp(-1j * self.phi)
        g[self.l, self.k] = s * np.exp(1j * self.phi)
        g[self.l, self.l] = c
        return g


@dataclass
class GivensNetwork:
    """``U = G_1 G_2 ... G_N diag(phases)``."""

    n: int
    rotations: list[Givens]
    phases: np.ndarray

    def reconstruct(self) -> np.ndarray:
        out = np.eye(self.n, dtype=complex)
        for g in self.rotations:
            out = out @ g.matrix(self.n)
        return out @ np.diag(self.phases)


def givens_decompose(u: np.ndarray, tol: float = 1e-10, zero_tol: float = 1e-15) -> GivensNetwork:
    """Factor a unitary into at most ``n(n-1)/2`` nearest-neighbour plane rotations and phases."""
    u = np.asarray(u, dtype=complex)
    n = u.shape[0]
    if u.shape != (n, n):
        raise DimensionError("matrix must be square")
    if not np.allclose(u.conj().T @ u, np.eye(n), atol=tol, rtol=0):
        raise ValidationError("matrix is not unitary")
    w = u.copy()
    rotations: list[Givens] = []
    for j in range(n - 1):
        for i in range(n - 1, j, -1):
            k, l = i - 1, i
            a, b = w[k, j], w[l, j]
            if abs(b) <= zero_tol:
                continue
            theta = math.atan2(abs(b), abs(a))
            phi = float(np.angle(b) - np.angle(a)) if abs(a) > zero_tol else float(np.angle(b))
            g = Givens(k, l, theta, phi)
            w = g.matrix(n).conj().T @ w
            rotations.append(g)
    phases = np.diag(w).copy()
    return GivensNetwork(n, rotations, phases)
