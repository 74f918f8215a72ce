from __future__ import annotations

import math
import warnings

import numpy as np
import pytest
import scipy.linalg

from qsimkit.dynamics import (
    LCUDecomposition,
    a_priori_bound,
    adiabatic_prepare,
    build_qubiterate,
    correlation_function,
    gamma_p,
    lcu_apply,
    lcu_success_shots,
    lowrank_evolution_circuit,
    lowrank_hamiltonian,
    lowrank_trotter_step,
    molecular_asp_hamiltonians,
    oaa_amplify,
    operator_error,
    phase_distribution,
    qpe,
    qpe_energy,
    spectral_function,
    suzuki_coefficient,
    taylor_evolve,
    taylor_segment_error,
    trotter_error_bound,
    trotter_evolve,
    trotter_unitary,
)
from qsimkit.errors import AnnihilationError, ArgumentError, UnsupportedError
from qsimkit.fermion import build_molecular_hamiltonian, jordan_wigner
from qsimkit.hamio import MolecularIntegrals, cholesky_factorize, random_integrals
from qsimkit.pauli import PauliString, PauliSum
from qsimkit.simulator import StateVector

from conftest import random_pauli_sum


def dense_exp(h: PauliSum, t: float) -> np.ndarray:
    return scipy.linalg.expm(-1j * t * h.to_dense())


def slope(x, y) -> float:
    return float(np.polyfit(np.log(x), np.log(y), 1)[0])


class TestTrotter:
    @pytest.mark.parametrize("order", [1, 2, 4])
    def test_commuting_terms_exact(self, order):
        h = PauliSum.from_list([("ZZI", 0.7), ("IZZ", -0.3), ("ZIZ", 1.1), ("IIZ", 0.2)])
        np.testing.assert_allclose(trotter_unitary(h, 1.3, 1, order), dense_exp(h, 1.3), atol=1e-12)
        assert a_priori_bound(h, 1.3, 1, 1) == 0

    def test_suzuki_coefficient(self):
        assert suzuki_coefficient(1) == pytest.approx(0.414490, abs=1e-6)

    def test_odd_order_rejected(self):
        with pytest.raises(ArgumentError):
            trotter_evolve(PauliSum.from_list([("X", 1.0)]), 1.0, 1, order=3)

    def test_slopes_on_random_four_qubit(self):
        h = random_pauli_sum(np.random.default_rng(61), 4, 8)
        steps = [8, 16, 32, 64]
        for order, want in ((1, -1.0), (2, -2.0)):
            errs = [operator_error(h, 1.0, n, order) for n in steps]
            assert abs(slope(steps, errs) - want) < 0.1

    def test_fourth_order_is_more_accurate(self):
        h = random_pauli_sum(np.random.default_rng(62), 3, 6)
        assert operator_error(h, 1.0, 8, 4) < operator_error(h, 1.0, 8, 2)

    def test_gamma_for_x_plus_z(self):
        assert gamma_p(PauliSum.from_list([("X", 1.0), ("Z", 1.0)])) == pytest.approx(1.0, abs=1e-14)

    def test_bound_dominates_measured(self):
        rng = np.random.default_rng(63)
        for _ in range(50):
            h = random_pauli_sum(rng, 3, 5)
            n = int(rng.integers(1, 10))
            t = float(rng.uniform(0.1, 2.0))
            assert operator_error(h, t, n, 1) <= trotter_error_bound(h, t, n) + 1e-10
            assert operator_error(h, t, n, 2) <= a_priori_bound(h, t, n, 2) + 1e-10

    def test_higher_order_bound_dominates(self):
        h = random_pauli_sum(np.random.default_rng(64), 3, 5)
        for n in (2, 4, 8):
            assert operator_error(h, 1.0, n, 4) <= a_priori_bound(h, 1.0, n, 4) + 1e-10

    def test_monotone_in_steps(self):
        rng = np.random.default_rng(60)
        for _ in range(20):
            h = random_pauli_sum(rng, 3, 6)
            for order in (1, 2):
                errs = [operator_error(h, 1.0, n, order) for n in (4, 8, 16, 32, 64)]
                assert all(b <= a + 1e-14 for a, b in zip(errs, errs[1:]))

    def test_eigenstate_phase_within_bound(self):
        h = random_pauli_sum(np.random.default_rng(65), 3, 6)
        w, v = np.linalg.eigh(h.to_dense())
        psi = StateVector(3, v[:, 0])
        for order in (1, 2):
            rep = trotter_evolve(h, 1.0, 10, order, state=psi)
            err = np.linalg.norm(rep.state.amplitudes - np.exp(-1j * w[0]) * v[:, 0])
            assert err <= rep.bound + 1e-10
            assert rep.measured_error == pytest.approx(err, abs=1e-12)

    def test_report_serializes(self):
        rep = trotter_evolve(PauliSum.from_list([("X", 1.0), ("Z", 0.5)]), 1.0, 4, 2)
        d = rep.to_dict()
        assert d["order"] == 2 and d["n_steps"] == 4 and d["term_order"] == ["Z", "X"]


class TestLowRank:
    def test_factorized_hamiltonian_matches(self, h2_integrals, h2_jw):
        f = cholesky_factorize(h2_integrals.eri)
        np.testing.assert_allclose(jordan_wigner(lowrank_hamiltonian(h2_integrals, f)).to_dense(), h2_jw.to_dense(), atol=1e-10)

    def test_number_only_exact(self):
        ints = MolecularIntegrals(3, 2, 0, 0.4, np.diag([-1.0, 0.3, 0.8]), np.zeros((3,) * 4))
        h = jordan_wigner(build_molecular_hamiltonian(ints))
        for dt in (0.1, 1.7):
            np.testing.assert_allclose(lowrank_trotter_step(ints, dt).to_unitary(), dense_exp(h, dt), atol=1e-12)

    def test_first_order_on_h2(self, h2_integrals, h2_jw, h2_exact):
        exact = dense_exp(h2_jw, 4.0)
        steps = [4, 8, 16, 32]
        errs = [np.linalg.norm(lowrank_evolution_circuit(h2_integrals, 4.0, n).to_unitary() - exact, 2) for n in steps]
        assert abs(slope(steps, errs) + 1) < 0.15

    def test_gate_count_scaling(self):
        ratios = []
        for n in (2, 3, 4, 5):
            ints = random_integrals(n, np.random.default_rng(n))
            f = cholesky_factorize(ints.eri)
            ratios.append(len(lowrank_trotter_step(ints, 0.1, f)) / ((f.n_gamma + 1) * (2 * n) ** 2))
        assert max(ratios) < 4 and max(ratios) / min(ratios) < 2

    def test_encoding_restriction(self, h2_integrals):
        with pytest.raises(UnsupportedError):
            lowrank_trotter_step(h2_integrals, 0.1, encoding="bk")


class TestLCU:
    def test_single_unitary(self):
        lcu = LCUDecomposition([0.8], [PauliString.from_label("X")])
        out, p = lcu_apply(lcu, StateVector(1))
        assert p == pytest.approx(1, abs=1e-14)
        np.testing.assert_allclose(np.abs(out.amplitudes), [0, 1], atol=1e-14)

    def test_projector_on_plus(self):
        lcu = LCUDecomposition.from_pauli_sum(PauliSum.from_list([("I", 0.5), ("Z", 0.5)]))
        out, p = lcu_apply(lcu, StateVector(1, np.array([1, 1]) / math.sqrt(2)))
        assert p == pytest.approx(0.5, abs=1e-14)
        np.testing.assert_allclose(np.abs(out.amplitudes), [1, 0], atol=1e-14)

    def test_annihilation(self):
        lcu = LCUDecomposition.from_pauli_sum(PauliSum.from_list([("I", 0.5), ("Z", 0.5)]))
        with pytest.raises(AnnihilationError):
            lcu_apply(lcu, StateVector.basis(1, "1"))

    def test_random_against_dense(self):
        rng = np.random.default_rng(66)
        for _ in range(10):
            a = random_pauli_sum(rng, 3, 5, hermitian=False)
            lcu = LCUDecomposition.from_pauli_sum(a)
            np.testing.assert_allclose(lcu.to_dense(), a.to_dense(), atol=1e-12)
            psi = StateVector.random(3, rng)
            out, p = lcu_apply(lcu, psi)
            x = a.to_dense() @ psi.amplitudes
            assert p == pytest.approx(np.vdot(x, x).real / lcu.alpha**2, abs=1e-12)
            assert abs(abs(np.vdot(x / np.linalg.norm(x), out.amplitudes)) - 1) < 1e-10

    def test_sampled_success_within_three_sigma(self):
        rng = np.random.default_rng(67)
        a = random_pauli_sum(rng, 2, 4, hermitian=False)
        lcu = LCUDecomposition.from_pauli_sum(a)
        psi = StateVector.random(2, rng)
        _, p = lcu_apply(lcu, psi)
        f, _, _ = lcu_success_shots(lcu, psi, 10_000, seed=5)
        assert abs(f - p) <= 3 * math.sqrt(p * (1 - p) / 10_000)

    def test_weights_nonnegative(self):
        with pytest.raises(ArgumentError):
            LCUDecomposition([-1.0], [PauliString.from_label("X")])


def unitary_like_lcu(phi: float) -> LCUDecomposition:
    """``(1 + e^{i phi}) / 2`` times the identity: success ``cos^2(phi / 2)``."""
    ident = PauliString.identity(1)
    return LCUDecomposition([0.5, 0.5], [ident, ident], np.array([1.0, np.exp(1j * phi)]))


class TestOAA:
    def test_k_zero(self):
        rep = oaa_amplify(unitary_like_lcu(1.0), StateVector(1), 0)
        assert rep.p_k == pytest.approx(rep.p0, abs=1e-15)

    def test_quarter_to_one(self):
        rep = oaa_amplify(unitary_like_lcu(2 * math.pi / 3), StateVector(1), 1)
        assert rep.p0 == pytest.approx(0.25, abs=1e-14)
        assert rep.theta == pytest.approx(math.pi / 6, abs=1e-12)
        assert rep.p_k == pytest.approx(1.0, abs=1e-12)

    def test_law_for_several_rounds(self):
        rng = np.random.default_rng(68)
        signs = [PauliString.identity(2), PauliString.from_label("XZ"), PauliString.identity(2)]
        lcu = LCUDecomposition(rng.uniform(0.2, 1.0, size=3), signs, np.array([1, 1j, -1]))
        psi = StateVector.random(2, rng)
        for k in range(6):
            rep = oaa_amplify(lcu, psi, k)
            assert rep.amplified
            assert abs(rep.p_k - math.sin((2 * k + 1) * rep.theta) ** 2) < 1e-10

    def test_non_unitary_flagged(self):
        lcu = LCUDecomposition.from_pauli_sum(PauliSum.from_list([("I", 0.5), ("Z", 0.3)]))
        with pytest.warns(UserWarning):
            rep = oaa_amplify(lcu, StateVector(1, np.array([0.6, 0.8])), 1)
        assert not rep.amplified


class TestTaylor:
    def test_zero_time(self):
        psi = StateVector.random(2, np.random.default_rng(69))
        rep = taylor_evolve(PauliSum.from_list([("XZ", 1.0)]), 0.0, 3, state=psi)
        np.testing.assert_array_equal(rep.state.amplitudes, psi.amplitudes)

    def test_single_qubit_z(self):
        psi = StateVector(1, np.array([1, 1]) / math.sqrt(2))
        rep = taylor_evolve(PauliSum.from_list([("Z", 1.0)]), 0.1, 4, segments=1, state=psi)
        want = np.exp(-0.1j * np.array([1, -1])) * psi.amplitudes
        assert np.linalg.norm(rep.state.amplitudes - want) < 0.1**5 / 120

    def test_random_within_bound(self):
        rng = np.random.default_rng(70)
        h = random_pauli_sum(rng, 3, 5)
        for order in (2, 3, 5):
            rep = taylor_evolve(h, 1.5, order, state=StateVector.random(3, rng))
            assert rep.measured_error <= rep.bound + 1e-12
            assert h.norm1() * abs(rep.metadata["dt"]) <= math.log(2) + 1e-12

    def test_order_zero_warns(self):
        with pytest.warns(UserWarning):
            taylor_evolve(PauliSum.from_list([("Z", 1.0)]), 0.1, 0)

    def test_required_order_grows_sublinearly(self):
        x = math.log(2)
        eps = [10.0**-k for k in range(2, 16)]
        ks = [next(k for k in range(60) if taylor_segment_error(x, k) <= e) for e in eps]
        logs = [math.log(1 / e) for e in eps]
        ratios = [k / l for k, l in zip(ks, logs)]
        assert ratios[-1] < ratios[0]
        model = [l / math.log(l) for l in logs]
        fit = np.polyfit(model, ks, 1)
        assert np.max(np.abs(np.polyval(fit, model) - ks)) <= 1.0


class TestQubiterate:
    def test_single_pauli(self):
        rep = build_qubiterate(LCUDecomposition([1.0], [PauliString.from_label("Z")]))
        assert sorted(abs(p) for p in rep.expected_phases) == pytest.approx([0, math.pi])
        assert rep.phase_error < 1e-8

    def test_random_two_qubit(self):
        rng = np.random.default_rng(71)
        h = random_pauli_sum(rng, 2, 5)
        rep = build_qubiterate(LCUDecomposition.from_pauli_sum(h))
        assert rep.block_error < 1e-10
        phases = np.angle(np.linalg.eigvals(rep.unitary))
        lam = np.linalg.eigvalsh(h.to_dense() / h.norm1())
        for v in lam:
            for target in (math.acos(v), -math.acos(v)):
                assert np.min(np.abs(np.exp(1j * phases) - np.exp(1j * target))) < 1e-8
        assert rep.phase_error < 1e-8


class TestQPE:
    def test_dyadic_phase(self):
        u = np.diag([np.exp(2j * math.pi * 3 / 8), 1.0])
        res = qpe(u, StateVector(1), 3)
        assert res.probabilities[0b011] == pytest.approx(1, abs=1e-12)
        assert res.theta_hat == 3 / 8

    def test_third_distribution(self):
        u = np.diag([np.exp(2j * math.pi / 3), 1.0])
        res = qpe(u, StateVector(1), 5, shots=10_000, seed=7)
        np.testing.assert_allclose(res.probabilities, phase_distribution(1 / 3, 5), atol=1e-12)
        k0 = round(32 / 3)
        p_hat = res.counts[k0] / 10_000
        assert p_hat >= 4 / math.pi**2 - 3 * math.sqrt(p_hat * (1 - p_hat) / 10_000)

    def test_more_ancillae_concentrate(self):
        u = np.diag([np.exp(2j * math.pi / 3), 1.0])
        hits = []
        for t in (5, 7, 9):
            p = qpe(u, StateVector(1), t).probabilities
            z = np.arange(2**t) / 2**t
            hits.append(p[np.abs(z - 1 / 3) < 2**-5].sum())
        assert hits[0] < hits[1] < hits[2]

    def test_energy_mapping(self, h2_jw, h2_exact):
        w, g = h2_exact
        e1, e2 = -2.0, 1.0
        energy, res = qpe_energy(h2_jw, g, 8, e1, e2)
        assert abs(energy - w[0]) <= (e2 - e1) / 2**8
        with pytest.raises(ArgumentError):
            qpe_energy(h2_jw, g, 4, 1.0, 0.0)


class TestASP:
    H0 = PauliSum.from_list([("ZI", 1.0), ("IZ", 0.7)])
    H1 = PauliSum.from_list([("XX", 0.6), ("XI", 0.5), ("IX", 0.4), ("ZI", -1.4)])

    def test_zero_time(self):
        psi = StateVector.random(2, np.random.default_rng(72))
        rep = adiabatic_prepare(self.H0, self.H1, 0.0, 5, state=psi)
        np.testing.assert_array_equal(rep.state.amplitudes, psi.amplitudes)

    def test_infidelity_decreases(self):
        inf = [1 - adiabatic_prepare(self.H0, self.H1, t, max(10, int(10 * t))).fidelity for t in (0.5, 1, 2, 5, 10, 20)]
        assert all(b < a for a, b in zip(inf, inf[1:]))

    def test_h2_mean_field_start(self, h2_integrals, h2_jw, h2_sector):
        h0, h1, hf = molecular_asp_hamiltonians(h2_integrals)
        e = np.zeros(16)
        e[hf] = 1
        assert np.vdot(e, h0.apply(e)).real == pytest.approx(np.vdot(e, h2_jw.apply(e)).real, abs=1e-12)
        assert (h0 + h1).allclose(h2_jw, atol=1e-12)
        assert np.linalg.norm(h0.apply(e) - np.vdot(e, h0.apply(e)) * e) < 1e-12
        rep = adiabatic_prepare(h0, h1, 20.0, 100, state=e, basis=h2_sector)
        assert rep.fidelity > 0.99


class TestCorrelation:
    def test_equal_time_is_nonnegative(self):
        rng = np.random.default_rng(73)
        h = random_pauli_sum(rng, 2, 4)
        a = PauliSum.from_list([("XI", 1.0)])
        _, v = np.linalg.eigh(h.to_dense())
        c = correlation_function(a, a, h, v[:, 0], [0.0]).values[0]
        assert abs(c.imag) < 1e-14 and c.real >= 0

    def test_two_level_peak(self):
        h = PauliSum.from_list([("Z", -0.5)])
        a = PauliSum.from_list([("X", 1.0)])
        w = np.linalg.eigvalsh(h.to_dense())
        times = np.arange(512) * 0.2
        res = correlation_function(a, a, h, np.array([1, 0]), times, e0=w[0])
        omegas, s = spectral_function(times, res.values, np.linspace(0, 2, 2001))
        assert omegas[np.argmax(np.abs(s))] == pytest.approx(w[1] - w[0], abs=1e-3)

    def test_circuit_matches_dense(self):
        rng = np.random.default_rng(74)
        h = random_pauli_sum(rng, 2, 5)
        a = PauliSum.from_list([("XI", 0.7), ("ZY", 0.2)])
        b = PauliSum.from_list([("IX", 1.0)])
        w, v = np.linalg.eigh(h.to_dense())
        times = np.linspace(0, 6.3, 64)
        dense = correlation_function(a, b, h, v[:, 0], times, e0=w[0]).values
        circ = correlation_function(a, b, h, v[:, 0], times, e0=w[0], method="hadamard").values
        assert np.abs(dense - circ).max() < 1e-8

    def test_non_eigenstate_warns(self):
        h = PauliSum.from_list([("X", 1.0)])
        with pytest.warns(RuntimeWarning):
            correlation_function(h, h, h, np.array([1, 0]), [0.1], method="hadamard")

    def test_uniform_grid_required(self):
        with pytest.raises(ArgumentError):
            spectral_function([0.0, 0.1, 0.3], [1, 1, 1])


def test_no_warnings_on_clean_paths():
    with warnings.catch_warnings():
        warnings.simplefilter("error")
        trotter_evolve(PauliSum.from_list([("X", 1.0), ("Z", 1.0)]), 1.0, 4, 2)
