from __future__ import annotations

import json
import math
import warnings

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from qsimkit.errors import ArgumentError, ChannelError, EmptyEnsembleError, FitError
from qsimkit.fermion import find_z2_symmetries
from qsimkit.noise import (
    NoiseModel,
    ReadoutCalibration,
    amplitude_damping_kraus,
    apply_channel_everywhere,
    apply_readout,
    bit_flip_kraus,
    calibrate_readout,
    calibration_circuits,
    depolarizing_kraus,
    mitigate_readout,
    phase_damping_kraus,
    post_select,
    post_selected_expectation,
    project_to_simplex,
    richardson_weights,
    run_noisy,
    symmetry_projected_expectation,
    total_variation,
    zne,
)
from qsimkit.pauli import PauliString, PauliSum
from qsimkit.simulator import Circuit, DensityMatrix, StateVector, check_kraus, sample_counts

Z1 = PauliSum.from_list([("Z", 1.0)])


def planted_confusion(p01: float, p10: float, n: int) -> np.ndarray:
    """Independent per-qubit readout flips; column ``j`` is the outcome law of basis state ``j``."""
    single = np.array([[1 - p01, p10], [p01, 1 - p10]])
    out = np.eye(1)
    for _ in range(n):
        out = np.kron(single, out)
    return out


def bell_circuit() -> Circuit:
    return Circuit(2).add("Had", 0).add("CNOT", 0, 1).add("Ry", 1, angle=0.3)


class TestChannels:
    @pytest.mark.parametrize(
        "builder", [depolarizing_kraus, amplitude_damping_kraus, phase_damping_kraus, bit_flip_kraus]
    )
    @pytest.mark.parametrize("rate", [0.0, 0.1, 0.5, 1.0])
    def test_trace_preserving(self, builder, rate):
        check_kraus(builder(rate))

    def test_rate_out_of_range(self):
        with pytest.raises(ArgumentError):
            NoiseModel(depolarizing=1.2)

    def test_incomplete_kraus_rejected(self):
        with pytest.raises(ChannelError):
            check_kraus([0.5 * np.eye(2)])

    def test_scaled_rate_clipped_with_warning(self):
        with pytest.warns(RuntimeWarning, match="clipped"):
            m = NoiseModel(depolarizing=0.6, scale=2.0)
        rho = DensityMatrix.from_state(StateVector.random(1, np.random.default_rng(110)))
        out = rho.copy().apply_kraus(m.channels[0], [0])
        np.testing.assert_allclose(out.matrix, np.eye(2) / 2, atol=1e-14)

    def test_json_round_trip(self):
        m = NoiseModel(0.01, 0.02, 0.03, 1.5)
        assert NoiseModel.from_dict(json.loads(json.dumps(m.to_dict()))) == m
        with pytest.raises(ArgumentError):
            NoiseModel.from_dict({"t1": 1.0})


class TestRunNoisy:
    def test_noiseless_matches_statevector(self):
        c = bell_circuit()
        res = run_noisy(c, NoiseModel())
        np.testing.assert_allclose(res.probabilities, c.run().probabilities(), atol=1e-15)

    def test_full_depolarizing_is_uniform(self):
        res = run_noisy(bell_circuit(), NoiseModel(depolarizing=1.0), shots=20_000, seed=1)
        np.testing.assert_allclose(res.probabilities, np.full(4, 0.25), atol=1e-14)
        sigma = math.sqrt(0.25 * 0.75 / 20_000)
        assert np.abs(res.counts / 20_000 - 0.25).max() < 5 * sigma

    @pytest.mark.parametrize("gamma", [0.05, 0.2])
    def test_damping_decay_law(self, gamma):
        m = 12
        c = Circuit(1)
        for _ in range(m):
            c.add("I", 0)
        res = run_noisy(c, NoiseModel(amplitude_damping=gamma), initial=1)
        excited = (1 - res.expectation(Z1)) / 2
        assert excited == pytest.approx((1 - gamma) ** m, abs=1e-13)

    def test_unit_scale_is_bit_identical(self):
        base = NoiseModel(0.03, 0.01, 0.02)
        a = run_noisy(bell_circuit(), base, shots=500, seed=7)
        b = run_noisy(bell_circuit(), base.scaled(1.0), shots=500, seed=7)
        assert np.array_equal(a.density.matrix, b.density.matrix)
        assert np.array_equal(a.counts, b.counts)

    def test_depolarizing_against_closed_form(self):
        eps, theta = 0.07, 0.9
        res = run_noisy(Circuit(1).add("Ry", 0, angle=theta), NoiseModel(depolarizing=eps))
        assert res.expectation(Z1) == pytest.approx((1 - eps) * math.cos(theta), abs=1e-14)


class TestReadout:
    def test_noiseless_calibration(self):
        p = [run_noisy(c, NoiseModel()).probabilities for c in calibration_circuits(2)]
        cal = calibrate_readout(p)
        np.testing.assert_allclose(cal.lam, np.eye(4), atol=1e-14)
        np.testing.assert_allclose(cal.delta, 0, atol=1e-14)

    def test_identity_calibration_leaves_distribution(self):
        cal = calibrate_readout(np.eye(4))
        p = np.array([0.1, 0.2, 0.3, 0.4])
        np.testing.assert_allclose(mitigate_readout(p, cal).probabilities, p, atol=1e-15)

    def test_planted_model_recovered(self):
        rng = np.random.default_rng(111)
        conf = planted_confusion(0.02, 0.08, 2)
        shots = 100_000
        ideal = np.vstack([np.eye(4)] * 3)
        meas = [sample_counts(conf @ q, shots, rng) / shots for q in ideal]
        cal = calibrate_readout(meas, ideal, shots=shots)
        assert np.abs(cal.matrix - conf).max() < 0.01
        assert 0 < cal.residual < 2 * cal.shot_noise_floor

    def test_affine_offset_split(self):
        conf = planted_confusion(0.03, 0.06, 1)
        lam, delta = 0.98 * conf, np.full(2, 0.01)
        cal = calibrate_readout([apply_readout(e, lam, delta) for e in np.eye(2)])
        np.testing.assert_allclose(cal.matrix, lam + np.outer(delta, [1, 1]), atol=1e-14)
        assert cal.delta.min() >= 0

    def test_inversion_round_trip(self):
        rng = np.random.default_rng(112)
        conf = planted_confusion(0.03, 0.07, 2)
        cal = calibrate_readout([conf[:, k] for k in range(4)])
        shots = 100_000
        for _ in range(5):
            p = rng.dirichlet(np.ones(4))
            meas = sample_counts(conf @ p, shots, rng) / shots
            floor = 0.5 * np.sqrt(p * (1 - p) / shots).sum()
            assert total_variation(mitigate_readout(meas, cal).probabilities, p) < 3 * floor

    def test_rank_deficient(self):
        with pytest.raises(FitError):
            calibrate_readout([[1, 0], [1, 0]], [[1, 0], [1, 0]])

    def test_ill_conditioned_warns(self):
        lam = np.array([[0.6, 0.6 - 1e-8], [0.4, 0.4 + 1e-8]])
        cal = ReadoutCalibration(lam, np.zeros(2), 1, 0.0)
        with pytest.warns(RuntimeWarning, match="ill-conditioned"):
            mitigate_readout([0.5, 0.5], cal)

    @settings(max_examples=60, deadline=None)
    @given(st.lists(st.floats(-2, 2, allow_nan=False), min_size=2, max_size=8))
    def test_simplex_projection(self, v):
        p = project_to_simplex(np.array(v))
        assert p.min() >= 0 and p.sum() == pytest.approx(1, abs=1e-12)

    def test_simplex_projection_is_nearest(self):
        v = np.array([0.8, 0.5, -0.1])
        p = project_to_simplex(v)
        np.testing.assert_allclose(p, [0.65, 0.35, 0.0], atol=1e-15)


class TestZNE:
    def test_richardson_exact_on_polynomial(self):
        coeffs = [0.37, -1.2, 0.5]
        b = lambda c: sum(a * (0.02 * c) ** k for k, a in enumerate(coeffs))  # noqa: E731
        assert abs(zne(b, [1, 1.5, 2]).value - coeffs[0]) < 1e-12

    def test_two_point_weights(self):
        np.testing.assert_allclose(richardson_weights([1, 2]), [2, -1], atol=1e-15)

    def test_moment_conditions(self):
        c = np.array([1, 1.3, 2.1, 3.0])
        w = richardson_weights(c)
        for k in range(4):
            assert np.dot(w, c**k) == pytest.approx(float(k == 0), abs=1e-10)

    def test_depolarizing_toy_model(self):
        theta, eps = 0.4, 0.02
        c = Circuit(1).add("Ry", 0, angle=theta)
        for _ in range(10):
            c.add("X", 0)
        exact = math.cos(theta)
        b = lambda s: run_noisy(c, NoiseModel(depolarizing=eps, scale=s)).expectation(Z1)  # noqa: E731
        res = zne(b, [1, 1.5, 2])
        assert abs(res.value - exact) <= abs(b(1.0) - exact) / 5

    def test_sigma_amplified(self):
        res = zne([0.9, 0.85, 0.8], [1, 1.5, 2], sigmas=[0.01, 0.01, 0.01])
        assert res.sigma >= max(res.raw_sigmas)
        assert res.sigma == pytest.approx(0.01 * np.linalg.norm(res.weights), abs=1e-15)

    def test_order_zero_single_scale(self):
        res = zne([0.7], [1.0], order=0)
        assert res.value == 0.7

    @pytest.mark.parametrize("scales", [[1, 1], [0.5, 1]])
    def test_bad_scales(self, scales):
        with pytest.raises(ArgumentError):
            zne([0.1, 0.2], scales)


class TestPostSelection:
    def test_parity_filter(self):
        counts = np.array([10, 20, 30, 40])
        sel = post_select(counts, [0b11], [0])
        np.testing.assert_array_equal(sel.counts, [10, 0, 0, 40])
        assert sel.retention == pytest.approx(0.5)

    def test_empty_ensemble(self):
        with pytest.raises(EmptyEnsembleError):
            post_select(np.array([5, 0, 0, 0]), [0b01], [1])

    def test_noiseless_retention_one(self, h2_jw, h2_exact):
        sym = find_z2_symmetries(h2_jw)
        sector = sym.sector_of_state(h2_exact[1])
        est = post_selected_expectation(h2_jw, h2_exact[1], list(zip(sym.generators, sector.eigenvalues)), 2000, seed=2)
        assert est.retention == [1.0] * len(est.retention)
        assert est.mean == est.raw_mean

    def test_bit_flip_corruption_reduced(self, h2_jw, h2_exact):
        w, g = h2_exact
        sym = find_z2_symmetries(h2_jw)
        syms = list(zip(sym.generators, sym.sector_of_state(g).eigenvalues))
        rho = apply_channel_everywhere(DensityMatrix.from_state(g), bit_flip_kraus(0.05))
        est = post_selected_expectation(h2_jw, rho, syms, 100_000, seed=3)
        assert abs(est.mean - w[0]) <= abs(est.raw_mean - w[0]) / 2
        projected = symmetry_projected_expectation(h2_jw, rho, syms)
        assert abs(est.mean - projected) < 3 * est.std

    def test_symmetry_must_commute(self):
        h = PauliSum.from_list([("XI", 1.0)])
        with pytest.raises(ArgumentError):
            post_selected_expectation(h, StateVector(2), [(PauliString.from_label("ZI"), 1)], 100)

    def test_seeded(self, h2_jw, h2_exact):
        sym = find_z2_symmetries(h2_jw)
        syms = list(zip(sym.generators, sym.sector_of_state(h2_exact[1]).eigenvalues))
        rho = apply_channel_everywhere(DensityMatrix.from_state(h2_exact[1]), bit_flip_kraus(0.05))
        with warnings.catch_warnings():
            warnings.simplefilter("error")
            a = post_selected_expectation(h2_jw, rho, syms, 500, seed=4)
            b = post_selected_expectation(h2_jw, rho, syms, 500, seed=4)
        assert a == b and a.seed == 4
