"""Shared fixtures and independent dense oracles."""

from __future__ import annotations

import functools
import pathlib

import numpy as np
import pytest

from qsimkit.fermion import build_molecular_hamiltonian, jordan_wigner, sector_indices
from qsimkit.hamio import read_fcidump
from qsimkit.pauli import PauliString, PauliSum

DATA = pathlib.Path(__file__).parent / "data"
H2_FCIDUMP = DATA / "h2_sto6g.fcidump"

SINGLE = {
    "I": np.eye(2, dtype=complex),
    "X": np.array([[0, 1], [1, 0]], dtype=complex),
    "Y": np.array([[0, -1j], [1j, 0]], dtype=complex),
    "Z": np.array([[1, 0], [0, -1]], dtype=complex),
}


def kron_label(label: str) -> np.ndarray:
    """Dense matrix of a label by explicit Kronecker products (leftmost = highest qubit)."""
    return functools.reduce(np.kron, [SINGLE[c] for c in label], np.eye(1, dtype=complex))


def kron_sum(h: PauliSum) -> np.ndarray:
    dim = 1 << h.n_qubits
    out = np.zeros((dim, dim), dtype=complex)
    for p, c in h.items():
        out += c * kron_label(p.label)
    return out


def random_label(rng: np.random.Generator, n: int) -> str:
    return "".join(rng.choice(list("IXYZ"), size=n))


def random_pauli_sum(rng: np.random.Generator, n: int, n_terms: int, hermitian: bool = True) -> PauliSum:
    items = []
    for _ in range(n_terms):
        c = rng.normal()
        if not hermitian:
            c = c + 1j * rng.normal()
        items.append((random_label(rng, n), c))
    acc = PauliSum.zero(n)
    for label, c in items:
        acc = acc + PauliSum.from_string(PauliString.from_label(label), c)
    return acc


def random_full_hamiltonian(rng: np.random.Generator, n: int) -> PauliSum:
    """Random real combination of every non-identity Pauli string."""
    from qsimkit.pauli import pauli_basis

    acc = PauliSum.zero(n)
    for p in pauli_basis(n, include_identity=False):
        acc = acc + PauliSum.from_string(p, rng.normal())
    return acc


def dense_ground(h: np.ndarray) -> tuple[float, np.ndarray]:
    w, v = np.linalg.eigh(h)
    return float(w[0]), v[:, 0]


@pytest.fixture(scope="session")
def h2_integrals():
    return read_fcidump(H2_FCIDUMP)


@pytest.fixture(scope="session")
def h2_fermion(h2_integrals):
    return build_molecular_hamiltonian(h2_integrals)


@pytest.fixture(scope="session")
def h2_jw(h2_fermion):
    return jordan_wigner(h2_fermion)


@pytest.fixture(scope="session")
def h2_sector():
    """Jordan-Wigner basis indices with one up and one down electron."""
    return sector_indices(2, 1, 1)


@pytest.fixture(scope="session")
def h2_exact(h2_jw, h2_sector):
    """Sector eigenvalues and the embedded ground vector."""
    hd = h2_jw.to_dense()
    w, v = np.linalg.eigh(hd[np.ix_(h2_sector, h2_sector)])
    g = np.zeros(16, dtype=complex)
    g[h2_sector] = v[:, 0]
    return w, g


def fock_ladder(n_modes: int) -> list[np.ndarray]:
    """Dense creation matrices on occupation states, sign = parity of lower occupied modes."""
    dim = 1 << n_modes
    out = []
    for k in range(n_modes):
        c = np.zeros((dim, dim))
        for occ in range(dim):
            if not (occ >> k) & 1:
                sign = (-1) ** bin(occ & ((1 << k) - 1)).count("1")
                c[occ | (1 << k), occ] = sign
        out.append(c)
    return out


def fock_hamiltonian(ints) -> np.ndarray:
    """Second-quantized molecular Hamiltonian built directly from dense ladder matrices (blocked spins)."""
    n = ints.n_spatial
    cr = fock_ladder(2 * n)
    an = [c.T for c in cr]
    dim = 1 << (2 * n)
    out = ints.e_nuc * np.eye(dim)
    for s in (0, 1):
        for p in range(n):
            for r in range(n):
                out += ints.h[p, r] * cr[p + s * n] @ an[r + s * n]
    for a in (0, 1):
        for b in (0, 1):
            for p in range(n):
                for r in range(n):
                    for q in range(n):
                        for s in range(n):
                            v = ints.eri[p, r, q, s]
                            if v:
                                out += 0.5 * v * cr[p + a * n] @ cr[q + b * n] @ an[s + b * n] @ an[r + a * n]
    return out
