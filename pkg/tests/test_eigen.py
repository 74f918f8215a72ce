from __future__ import annotations

import math
import warnings

import numpy as np
import pytest
import scipy.linalg

from qsimkit.eigen import (
    Ansatz,
    OptimizerConfig,
    adapt_select,
    adapt_vqe,
    exact_energy,
    fermionic_excitation_operators,
    fermionic_pool,
    hadamard_test,
    hardware_efficient_ansatz,
    minimize,
    parameter_shift_gradient,
    pauli_excitations,
    qeom,
    qfd,
    qite,
    qite_step,
    qlanczos,
    qse,
    solve_generalized,
    uccsd_ansatz,
    uccsd_generators,
    vqe_minimize,
    vqs_evolve,
)
from qsimkit.eigen.ansatz import number_operator_expectation
from qsimkit.eigen.optimize import finite_difference_gradient
from qsimkit.eigen.subspace import fermionic_single_excitations
from qsimkit.eigen.vqs import mclachlan_system
from qsimkit.errors import ArgumentError, DegenerateBasisError, DimensionError
from qsimkit.fermion import jordan_wigner, number_operator, sz_operator
from qsimkit.pauli import PauliString, PauliSum, pauli_basis
from qsimkit.simulator import Circuit, Gate, StateVector

from conftest import fock_ladder, random_full_hamiltonian, random_pauli_sum

VARIATIONAL_SLACK = 1e-9


def dense_ite(h: PauliSum, psi: np.ndarray, tau: float) -> np.ndarray:
    out = scipy.linalg.expm(-tau * h.to_dense()) @ psi
    return out / np.linalg.norm(out)


def energy(h: PauliSum, psi: np.ndarray) -> float:
    return float(np.real(np.vdot(psi, h.apply(psi))))


class TestAnsatz:
    def test_uccsd_zero_is_reference(self):
        ans = uccsd_ansatz(4, 2)
        psi = ans.state(np.zeros(ans.n_params)).amplitudes
        assert abs(psi[0b0101]) == pytest.approx(1, abs=1e-15)

    def test_uccsd_counts_and_rotations(self):
        ans = uccsd_ansatz(4, 2)
        assert ans.n_params == 3
        per_param = {}
        for g in ans.circuit.gates:
            per_param[g.param] = per_param.get(g.param, 0) + 1
        assert per_param == {"d0": 8, "s0": 2, "s1": 2}

    def test_generators_anti_hermitian(self):
        for g in uccsd_generators(6, 2):
            d = g.to_dense()
            assert np.abs(d.conj().T + d).max() < 1e-12

    def test_conserves_number_and_spin(self):
        rng = np.random.default_rng(81)
        ans = uccsd_ansatz(6, 2)
        n_op = jordan_wigner(number_operator(6))
        sz = jordan_wigner(sz_operator(3))
        for _ in range(5):
            psi = ans.state(rng.normal(size=ans.n_params)).amplitudes
            assert energy(n_op, psi) == pytest.approx(2, abs=1e-10)
            assert number_operator_expectation(psi, 6) == pytest.approx(2, abs=1e-10)
            assert energy(sz, psi) == pytest.approx(0, abs=1e-10)
            n_psi = n_op.apply(psi)
            assert np.linalg.norm(n_psi - 2 * psi) < 1e-10

    def test_h2_double_excitation(self):
        ans = uccsd_ansatz(4, 2)
        theta = 0.37
        psi = ans.state([theta, 0.0, 0.0]).amplitudes
        support = np.flatnonzero(np.abs(psi) > 1e-12)
        assert list(support) == [0b0101, 0b1010]
        assert abs(psi[0b0101]) == pytest.approx(math.cos(theta), abs=1e-12)
        assert abs(psi[0b1010]) == pytest.approx(math.sin(theta), abs=1e-12)

    def test_parameter_count_check(self):
        with pytest.raises(DimensionError):
            uccsd_ansatz(4, 2).state([0.0])

    def test_hardware_efficient_layout(self):
        ans = hardware_efficient_ansatz(3, 2)
        assert ans.n_params == 2 * 3 * 3
        assert sum(g.kind == "CNOT" for g in ans.circuit.gates) == 4

    def test_derivative_states_match_finite_difference(self):
        rng = np.random.default_rng(82)
        ans = hardware_efficient_ansatz(2, 1)
        theta = rng.normal(size=ans.n_params)
        d = ans.derivative_states(theta)
        for k in range(ans.n_params):
            e = np.zeros_like(theta)
            e[k] = 1e-6
            fd = (ans.state(theta + e).amplitudes - ans.state(theta - e).amplitudes) / 2e-6
            assert np.abs(d[k] - fd).max() < 1e-8


class TestOptimizers:
    def test_config_validation(self):
        with pytest.raises(ArgumentError):
            OptimizerConfig(kind="spsa", gamma=1.5)
        with pytest.raises(ArgumentError):
            OptimizerConfig(kind="adam", beta1=1.0)
        with pytest.raises(ArgumentError):
            OptimizerConfig(kind="newton")

    def test_parameter_shift_matches_finite_difference(self, h2_jw):
        rng = np.random.default_rng(83)
        ans = uccsd_ansatz(4, 2)
        theta = rng.normal(size=3)
        g = parameter_shift_gradient(ans, h2_jw, theta)
        fd = finite_difference_gradient(lambda x: exact_energy(ans, h2_jw, x), theta)
        assert np.linalg.norm(g - fd) <= 1e-6 * max(np.linalg.norm(g), 1e-12)

    def test_spsa_is_reproducible(self):
        f = lambda x: float(np.sum((x - 1.0) ** 2))  # noqa: E731
        cfg = OptimizerConfig(kind="spsa", maxiter=50, seed=3)
        a, b = minimize(f, np.zeros(3), cfg), minimize(f, np.zeros(3), cfg)
        assert np.array_equal(a.x, b.x) and a.trace == b.trace

    @pytest.mark.parametrize("kind", ["adam", "bfgs", "gd"])
    def test_gradient_methods_on_quadratic(self, kind):
        f = lambda x: float(np.sum((x - 1.0) ** 2))  # noqa: E731
        g = lambda x: 2 * (x - 1.0)  # noqa: E731
        res = minimize(f, np.zeros(2), OptimizerConfig(kind=kind, maxiter=2000, step=0.05), grad=g)
        np.testing.assert_allclose(res.x, [1, 1], atol=1e-3)


class TestVQE:
    def test_single_qubit(self):
        ans = Ansatz(Circuit(1).add("Ry", 0, param="t"))
        res = vqe_minimize(PauliSum.from_list([("Z", 1.0)]), ans, "bfgs", theta0=[0.3])
        assert res.energy == pytest.approx(-1, abs=1e-10)
        assert abs(math.cos(res.parameters[0]) + 1) < 1e-8

    def test_h2_uccsd_exact(self, h2_jw, h2_exact):
        res = vqe_minimize(h2_jw, uccsd_ansatz(4, 2))
        assert abs(res.energy - h2_exact[0][0]) < 1e-6
        assert res.energy >= h2_exact[0][0] - VARIATIONAL_SLACK

    def test_width_mismatch(self, h2_jw):
        with pytest.raises(DimensionError):
            vqe_minimize(h2_jw, hardware_efficient_ansatz(3, 1))

    def test_variational_bound_on_random(self):
        rng = np.random.default_rng(84)
        for _ in range(5):
            h = random_pauli_sum(rng, 2, 6)
            ans = hardware_efficient_ansatz(2, 2)
            res = vqe_minimize(h, ans, theta0=0.1 * rng.normal(size=ans.n_params))
            assert res.energy >= np.linalg.eigvalsh(h.to_dense())[0] - VARIATIONAL_SLACK

    def test_shots_mode_is_seeded(self, h2_jw):
        cfg = OptimizerConfig(kind="spsa", maxiter=20, seed=4)
        a = vqe_minimize(h2_jw, uccsd_ansatz(4, 2), cfg, mode="shots", shots=1000, seed=5)
        b = vqe_minimize(h2_jw, uccsd_ansatz(4, 2), cfg, mode="shots", shots=1000, seed=5)
        assert a.energy == b.energy and np.array_equal(a.parameters, b.parameters)
        assert a.seed == 5 and a.std > 0

    def test_result_serializes(self, h2_jw):
        d = vqe_minimize(h2_jw, uccsd_ansatz(4, 2)).to_dict()
        assert d["mode"] == "exact" and len(d["parameters"]) == 3


class TestAdapt:
    def test_eigenstate_has_zero_gradients(self, h2_jw, h2_exact):
        sel = adapt_select(fermionic_pool(4, 2), h2_exact[1], h2_jw)
        assert np.abs(sel.gradients).max() < 1e-10 and sel.converged

    def test_h2_picks_double(self, h2_jw):
        pool = fermionic_pool(4, 2)
        psi = np.zeros(16)
        psi[0b0101] = 1
        sel = adapt_select(pool, psi, h2_jw)
        dense = [abs(np.vdot(psi, (h2_jw.to_dense() @ a.to_dense() - a.to_dense() @ h2_jw.to_dense()) @ psi)) for a in pool]
        assert sel.index == int(np.argmax(dense)) == 0

    def test_tie_breaks_low(self):
        h = PauliSum.from_list([("Z", 1.0)])
        a = PauliSum.from_list([("Y", 1j)])
        sel = adapt_select([a, a], np.array([1, 1]) / math.sqrt(2), h)
        assert sel.index == 0

    def test_empty_pool(self, h2_jw):
        with pytest.raises(ArgumentError):
            adapt_select([], np.zeros(16), h2_jw)

    def test_adapt_reaches_ground(self, h2_jw, h2_exact):
        res = adapt_vqe(h2_jw, fermionic_pool(4, 2), 0b0101)
        assert abs(res.energy - h2_exact[0][0]) < 1e-6 and res.converged


class TestVQS:
    def test_single_rz_phase_dynamics(self):
        ans = Ansatz(Circuit(1).add("Had", 0).add("Rz", 0, param="a"))
        h = PauliSum.from_list([("Z", 1.0)])
        traj = vqs_evolve(ans, [0.0], h, 1.0, 20, oracle=True)
        assert traj.fidelities.min() > 1 - 1e-8
        assert traj.parameters[-1][0] == pytest.approx(2.0, abs=1e-5)

    def test_gram_matrix_is_psd(self):
        rng = np.random.default_rng(85)
        ans = hardware_efficient_ansatz(2, 1)
        a, _ = mclachlan_system(ans, rng.normal(size=ans.n_params), random_pauli_sum(rng, 2, 4))
        assert np.abs(a - a.T).max() < 1e-10
        assert np.linalg.eigvalsh(a)[0] > -1e-10

    def test_tracks_random_hamiltonian(self):
        rng = np.random.default_rng(90)
        h = random_pauli_sum(rng, 2, 6)
        ans = hardware_efficient_ansatz(2, 2, global_phase=True)
        with warnings.catch_warnings():
            warnings.simplefilter("ignore", RuntimeWarning)
            traj = vqs_evolve(ans, 0.5 * rng.normal(size=ans.n_params), h, 0.5, 50, oracle=True)
        assert traj.fidelities[-1] > 0.999

    def test_rank_deficiency_warns(self):
        ans = Ansatz(Circuit(1).add("Rz", 0, param="a").add("Rz", 0, param="b"))
        with pytest.warns(RuntimeWarning, match="rank deficient"):
            vqs_evolve(ans, [0.0, 0.0], PauliSum.from_list([("X", 1.0)]), 0.1, 2)


class TestHadamardTest:
    def test_same_state_identity(self):
        c = Circuit(2).add("Had", 0).add("CNOT", 0, 1)
        assert hadamard_test(c, c) == pytest.approx(1, abs=1e-14)

    def test_random_unitaries(self):
        import scipy.stats

        rng = np.random.default_rng(86)
        b = random_pauli_sum(rng, 2, 5, hermitian=False)
        ua = scipy.stats.unitary_group.rvs(4, random_state=1)
        ub = scipy.stats.unitary_group.rvs(4, random_state=2)
        pa = Circuit(2, [Gate("U", (1, 0), matrix=ua)])
        pb = Circuit(2, [Gate("U", (1, 0), matrix=ub)])
        want = np.vdot(ua[:, 0], b.to_dense() @ ub[:, 0])
        assert abs(hadamard_test(pa, pb, b) - want) < 1e-10

    def test_shot_mode_within_five_sigma(self):
        pa = Circuit(1).add("Had", 0)
        pb = Circuit(1).add("Ry", 0, angle=0.7)
        exact = hadamard_test(pa, pb)
        est = hadamard_test(pa, pb, shots=4000, seed=8)
        sigma = math.sqrt(2 / 4000)
        assert abs(est.real - exact.real) < 5 * sigma and abs(est.imag - exact.imag) < 5 * sigma


class TestQSE:
    def test_identity_only(self):
        rng = np.random.default_rng(87)
        h = random_pauli_sum(rng, 2, 5)
        psi = StateVector.random(2, rng).amplitudes
        _, sol = qse(h, psi, [PauliString.identity(2)])
        assert sol.ground_energy == pytest.approx(energy(h, psi), abs=1e-12)

    def test_complete_basis(self):
        rng = np.random.default_rng(88)
        h = random_full_hamiltonian(rng, 2)
        psi = StateVector.random(2, rng).amplitudes
        _, sol = qse(h, psi, pauli_excitations(2, 2))
        np.testing.assert_allclose(sol.energies, np.linalg.eigvalsh(h.to_dense()), atol=1e-10)

    def test_singles_give_upper_bounds(self, h2_jw, h2_exact):
        w, g = h2_exact
        _, sol = qse(h2_jw, g, fermionic_single_excitations(4))
        assert len(sol.energies) <= len(w)
        assert all(e >= x - VARIATIONAL_SLACK for e, x in zip(sol.energies, w))
        assert sol.ground_energy == pytest.approx(w[0], abs=1e-10)

    def test_rephasing_invariant(self):
        rng = np.random.default_rng(89)
        h = random_pauli_sum(rng, 2, 6)
        psi = StateVector.random(2, rng).amplitudes
        ops = pauli_excitations(2, 1)
        _, a = qse(h, psi, ops)
        phased = [op * complex(np.exp(1j * rng.uniform(0, 6.3))) for op in ops]
        _, b = qse(h, psi, phased)
        np.testing.assert_allclose(a.energies, b.energies, atol=1e-10)

    def test_needs_identity(self, h2_jw):
        with pytest.raises(ArgumentError):
            qse(h2_jw, np.eye(16)[5], [PauliString.from_label("XXII")])

    def test_degenerate(self):
        with pytest.raises(DegenerateBasisError):
            solve_generalized(np.zeros((2, 2)), np.zeros((2, 2)))


class TestQFD:
    def test_single_vector_is_rayleigh(self):
        rng = np.random.default_rng(91)
        h = random_pauli_sum(rng, 2, 5)
        psi = StateVector.random(2, rng).amplitudes
        _, sol = qfd(h, psi, 0.3, 1)
        assert sol.ground_energy == pytest.approx(energy(h, psi), abs=1e-12)

    def test_support_recovered(self):
        rng = np.random.default_rng(92)
        h = random_full_hamiltonian(rng, 2)
        w, v = np.linalg.eigh(h.to_dense())
        psi = (v[:, 0] + v[:, 2]) / math.sqrt(2)
        _, sol = qfd(h, psi, 0.4, 3)
        np.testing.assert_allclose(sol.energies, [w[0], w[2]], atol=1e-8)

    def test_trotter_converges_to_dense(self):
        rng = np.random.default_rng(93)
        h = random_pauli_sum(rng, 2, 6)
        psi = StateVector.random(2, rng).amplitudes
        _, ref = qfd(h, psi, 0.3, 3)
        errs = [abs(qfd(h, psi, 0.3, 3, evolution="trotter", n_trotter=n)[1].ground_energy - ref.ground_energy) for n in (1, 4, 16)]
        assert errs[0] > errs[1] > errs[2]

    def test_hadamard_estimator_matches(self):
        rng = np.random.default_rng(94)
        h = random_pauli_sum(rng, 2, 4)
        psi = StateVector.random(2, rng).amplitudes
        a = qfd(h, psi, 0.3, 3)[1].energies
        b = qfd(h, psi, 0.3, 3, estimator="hadamard")[1].energies
        np.testing.assert_allclose(a, b, atol=1e-9)

    def test_variational(self):
        rng = np.random.default_rng(95)
        h = random_pauli_sum(rng, 3, 8)
        _, sol = qfd(h, StateVector.random(3, rng).amplitudes, 0.5, 4)
        assert sol.ground_energy >= np.linalg.eigvalsh(h.to_dense())[0] - VARIATIONAL_SLACK


class TestQEOM:
    def test_complete_basis_two_qubits(self):
        rng = np.random.default_rng(96)
        h = random_full_hamiltonian(rng, 2)
        w, v = np.linalg.eigh(h.to_dense())
        ops = [PauliSum.from_string(p) for p in pauli_basis(2, include_identity=False)]
        res = qeom(h, v[:, 0], ops)
        np.testing.assert_allclose(res.excitation_energies, w[1:] - w[0], atol=1e-8)

    def test_eigen_operator(self):
        omega = 0.8
        h = PauliSum.from_list([("Z", -omega / 2)])
        lower = PauliSum.from_list([("X", 0.5), ("Y", 0.5j)])
        res = qeom(h, np.array([1, 0]), [lower])
        np.testing.assert_allclose(res.excitation_energies, [omega], atol=1e-12)

    def test_h2_gaps(self, h2_jw, h2_exact):
        w, g = h2_exact
        res = qeom(h2_jw, g, fermionic_excitation_operators(4, 2))
        np.testing.assert_allclose(res.excitation_energies, w[1:] - w[0], atol=1e-6)

    def test_h2_singlet_gap_present(self, h2_jw, h2_exact):
        # the lowest gap belongs to the M_s = 0 triplet; the singlet gap must appear as well
        w, g = h2_exact
        cr = fock_ladder(4)
        an = [c.conj().T for c in cr]
        s_plus = sum(cr[p] @ an[p + 2] for p in range(2))
        s_z = 0.5 * sum(cr[p] @ an[p] - cr[p + 2] @ an[p + 2] for p in range(2))
        s_sq = s_plus.conj().T @ s_plus + s_z @ s_z + s_z
        vals, vecs = np.linalg.eigh(h2_jw.to_dense())
        in_sector = [k for k in range(16) if np.linalg.norm(vecs[[5, 6, 9, 10], k]) > 0.99]
        spins = {round(float(np.real(np.vdot(vecs[:, k], s_sq @ vecs[:, k])))): vals[k] for k in in_sector}
        excited_singlets = sorted(vals[k] for k in in_sector if abs(np.vdot(vecs[:, k], s_sq @ vecs[:, k])) < 1e-8)[1:]
        assert spins.keys() == {0, 2}
        singlet_gap = excited_singlets[0] - w[0]
        # [DERIVED] dense diagonalization of the fixture with an independent total-spin operator
        assert singlet_gap == pytest.approx(0.96844169, abs=1e-8)
        res = qeom(h2_jw, g, fermionic_excitation_operators(4, 2))
        assert np.min(np.abs(res.excitation_energies - singlet_gap)) < 1e-6

    def test_rephasing_invariant(self, h2_jw, h2_exact):
        rng = np.random.default_rng(97)
        ops = fermionic_excitation_operators(4, 2)
        a = qeom(h2_jw, h2_exact[1], ops).excitation_energies
        b = qeom(h2_jw, h2_exact[1], [op * complex(np.exp(1j * rng.uniform(0, 6.3))) for op in ops]).excitation_energies
        np.testing.assert_allclose(a, b, atol=1e-10)


class TestQITE:
    def test_ground_state_fixed_point(self):
        rng = np.random.default_rng(98)
        h = random_full_hamiltonian(rng, 2)
        _, v = np.linalg.eigh(h.to_dense())
        step = qite_step(h, v[:, 0], 0.1)
        assert np.abs(step.coefficients).max() < 1e-10
        assert abs(abs(np.vdot(step.state, v[:, 0])) - 1) < 1e-12

    def test_matches_dense_and_converges(self):
        rng = np.random.default_rng(99)
        h = random_full_hamiltonian(rng, 2)
        psi0 = StateVector.random(2, rng).amplitudes
        res = qite(h, psi0, 0.1, 100)
        for k, e in enumerate(res.energies):
            assert abs(e - energy(h, dense_ite(h, psi0, 0.1 * k))) < 1e-4
        assert abs(res.energies[-1] - np.linalg.eigvalsh(h.to_dense())[0]) < 1e-6

    def test_monotone_energy(self):
        rng = np.random.default_rng(100)
        for _ in range(20):
            h = random_full_hamiltonian(rng, 2)
            res = qite(h, StateVector.random(2, rng).amplitudes, 0.1, 30)
            assert all(b <= a + 1e-12 for a, b in zip(res.energies, res.energies[1:]))

    def test_invalid_step(self):
        with pytest.raises(ArgumentError):
            qite_step(PauliSum.from_list([("Z", 1.0)]), np.array([1, 0]), 0.0)


class TestQLanczos:
    def test_beats_plain_qite(self):
        rng = np.random.default_rng(101)
        for _ in range(5):
            h = random_full_hamiltonian(rng, 2)
            psi0 = StateVector.random(2, rng).amplitudes
            d, dtau = 4, 0.2
            _, sol = qlanczos(h, psi0, dtau, d, method="qite")
            plain = qite(h, psi0, dtau, d - 1).energies[-1]
            assert sol.ground_energy <= plain + 1e-10

    def test_large_basis_ground(self):
        rng = np.random.default_rng(102)
        h = random_full_hamiltonian(rng, 2)
        _, sol = qlanczos(h, StateVector.random(2, rng).amplitudes, 0.1, 4)
        assert abs(sol.ground_energy - np.linalg.eigvalsh(h.to_dense())[0]) < 1e-8

    def test_ground_input_collapses(self):
        rng = np.random.default_rng(103)
        h = random_full_hamiltonian(rng, 2)
        w, v = np.linalg.eigh(h.to_dense())
        _, sol = qlanczos(h, v[:, 0], 0.1, 4)
        assert sol.kept == 1 and sol.ground_energy == pytest.approx(w[0], abs=1e-12)

    def test_needs_two_vectors(self):
        with pytest.raises(ArgumentError):
            qlanczos(PauliSum.from_list([("Z", 1.0)]), np.array([1, 0]), 0.1, 1)
