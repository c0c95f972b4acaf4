"""Scenario pieces and ground-truth simulation."""

import math

import numpy as np
import pytest

from immkl.errors import ConfigError, ParameterError
from immkl.models import (
    MarkovChain,
    TruthConfig,
    build_ct_scenario,
    ct_process_noise,
    ct_transition,
    sample_mode_sequence,
    simulate_truth,
    true_measurement_cov,
)


class TestCtTransition:
    def test_zero_rate_is_constant_velocity(self):
        expected = np.array([[1, 1, 0, 0], [0, 1, 0, 0], [0, 0, 1, 1], [0, 0, 0, 1.0]])
        np.testing.assert_array_equal(ct_transition(0.0, 1.0), expected)

    def test_four_degree_turn_entries(self):
        omega = math.radians(4.0)
        f = ct_transition(omega, 1.0)
        swt, cwt = math.sin(omega), math.cos(omega)
        expected = np.array(
            [
                [1.0, swt / omega, 0.0, -(1.0 - cwt) / omega],
                [0.0, cwt, 0.0, -swt],
                [0.0, (1.0 - cwt) / omega, 1.0, swt / omega],
                [0.0, swt, 0.0, cwt],
            ]
        )
        np.testing.assert_allclose(f, expected, rtol=0, atol=0)
        assert f[0, 1] == pytest.approx(0.9991878848133798, abs=1e-12)
        assert f[2, 1] == pytest.approx(0.03489240980451574, abs=1e-12)
        assert f[1, 1] == pytest.approx(0.9975640502598242, abs=1e-12)
        assert f[3, 1] == pytest.approx(0.0697564737441253, abs=1e-12)

    @pytest.mark.parametrize("omega", [-0.5, -0.0698, 1e-6, 0.0, 0.21, 2.0])
    @pytest.mark.parametrize("T", [0.25, 1.0, 3.0])
    def test_unit_determinant(self, omega, T):
        assert np.linalg.det(ct_transition(omega, T)) == pytest.approx(1.0, abs=1e-12)

    def test_continuity_at_zero_rate(self):
        gap = np.abs(ct_transition(1e-8, 1.0) - ct_transition(0.0, 1.0)).max()
        assert gap <= 1e-7

    def test_sign_flip_antisymmetry(self):
        omega = 0.31
        plus, minus = ct_transition(omega, 1.0), ct_transition(-omega, 1.0)
        flip = np.diag([1.0, 1.0, -1.0, -1.0])
        np.testing.assert_allclose(minus, flip @ plus @ flip, atol=1e-14)


class TestCtProcessNoise:
    def test_benchmark_value(self):
        q = ct_process_noise(0.09, 1.0)
        block = np.array([[0.0225, 0.045], [0.045, 0.09]])
        np.testing.assert_allclose(q[:2, :2], block, rtol=1e-15)
        np.testing.assert_allclose(q[2:, 2:], block, rtol=1e-15)
        assert np.all(q[:2, 2:] == 0.0)

    def test_unit_density(self):
        q = ct_process_noise(1.0, 1.0)
        np.testing.assert_allclose(q[:2, :2], np.array([[0.25, 0.5], [0.5, 1.0]]))

    @pytest.mark.parametrize("qv,T", [(0.09, 1.0), (2.5, 0.3), (1e-3, 4.0)])
    def test_symmetric_psd(self, qv, T):
        q = ct_process_noise(qv, T)
        assert np.abs(q - q.T).max() == 0.0
        assert np.linalg.eigvalsh(q).min() >= -1e-12


class TestTrueMeasurementCov:
    def test_benchmark_level(self):
        np.testing.assert_array_equal(
            true_measurement_cov(200.0), np.array([[200.0, 10.0], [10.0, 200.0]])
        )

    def test_low_level(self):
        np.testing.assert_array_equal(
            true_measurement_cov(20.0), np.array([[20.0, 1.0], [1.0, 20.0]])
        )

    @pytest.mark.parametrize("r", [0.5, 7.0, 1234.0])
    def test_positive_definite(self, r):
        assert np.linalg.eigvalsh(true_measurement_cov(r)).min() > 0

    def test_rejects_nonpositive(self):
        with pytest.raises(ParameterError):
            true_measurement_cov(0.0)


class TestBuildScenario:
    def test_default_three_mode_model(self):
        model = build_ct_scenario(TruthConfig())
        assert model.n_modes == 3 and model.state_dim == 4 and model.meas_dim == 2
        np.testing.assert_allclose(model.chain.pi.sum(axis=1), np.ones(3), atol=1e-15)
        np.testing.assert_allclose(np.diag(model.chain.pi), [0.8, 0.8, 0.8])
        assert model.chain.pi[0, 1] == pytest.approx(0.1)
        np.testing.assert_array_equal(
            model.H, np.array([[1.0, 0, 0, 0], [0, 0, 1.0, 0]])
        )

    def test_single_mode_degenerates(self):
        model = build_ct_scenario(TruthConfig(turn_rates=(0.0,), r0_mode=0))
        assert model.n_modes == 1
        np.testing.assert_array_equal(model.chain.pi, [[1.0]])

    def test_shared_process_noise(self):
        cfg = TruthConfig()
        model = build_ct_scenario(cfg)
        expected = ct_process_noise(cfg.q, cfg.T)
        for mode in model.modes:
            np.testing.assert_array_equal(mode.Q, expected)
            np.testing.assert_array_equal(mode.G, np.eye(4))

    def test_empty_turn_rates_is_config_error(self):
        with pytest.raises(ConfigError):
            TruthConfig(turn_rates=())


class TestModeSequence:
    def test_absorbing_chain_constant(self):
        chain = MarkovChain(pi=np.eye(3))
        seq = sample_mode_sequence(chain, 2, 50, np.random.default_rng(0))
        assert (seq == 2).all()

    def test_deterministic_cycle(self):
        chain = MarkovChain(pi=np.array([[0.0, 1.0], [1.0, 0.0]]))
        seq = sample_mode_sequence(chain, 0, 6, np.random.default_rng(0))
        np.testing.assert_array_equal(seq, [1, 0, 1, 0, 1, 0])

    def test_transition_frequencies_match_chain(self):
        cfg = TruthConfig()
        chain = build_ct_scenario(cfg).chain
        seq = sample_mode_sequence(chain, 1, 100_000, np.random.default_rng(42))
        counts = np.zeros((3, 3))
        for a, b in zip(seq[:-1], seq[1:]):
            counts[a, b] += 1
        empirical = counts / counts.sum(axis=1, keepdims=True)
        assert np.abs(empirical - chain.pi).max() < 0.01

    def test_bad_start_mode(self):
        with pytest.raises(ParameterError):
            sample_mode_sequence(MarkovChain(pi=np.eye(2)), 5, 3, np.random.default_rng(0))


class TestSimulateTruth:
    def test_deterministic_given_seed(self):
        cfg = TruthConfig(horizon=40)
        model = build_ct_scenario(cfg)
        a = simulate_truth(model, cfg, np.random.default_rng(123))
        b = simulate_truth(model, cfg, np.random.default_rng(123))
        for x, y in zip(a, b):
            np.testing.assert_array_equal(x, y)

    def test_noise_free_limit_matches_linear_recursion(self):
        cfg = TruthConfig(q=0.09e-12, r=200e-12, horizon=30)
        model = build_ct_scenario(cfg)
        states, modes, _ = simulate_truth(model, cfg, np.random.default_rng(5))
        x = cfg.x0.copy()
        for k in range(cfg.horizon):
            x = model.modes[modes[k]].F @ x
            assert np.abs(states[k] - x).max() < 1e-4

    def test_innovation_covariance_matches_truth(self):
        # straight-line single mode, long run: sample cov of z - Hx near R
        cfg = TruthConfig(turn_rates=(0.0,), r0_mode=0, horizon=10_000)
        model = build_ct_scenario(cfg)
        states, _, meas = simulate_truth(model, cfg, np.random.default_rng(7))
        noise = meas - states[:, (0, 2)]
        sample_cov = np.cov(noise.T, ddof=1)
        truth = true_measurement_cov(cfg.r)
        rel = np.linalg.norm(sample_cov - truth) / np.linalg.norm(truth)
        assert rel < 0.05

    def test_shapes(self):
        cfg = TruthConfig(horizon=17)
        model = build_ct_scenario(cfg)
        states, modes, meas = simulate_truth(model, cfg, np.random.default_rng(1))
        assert states.shape == (17, 4) and meas.shape == (17, 2) and modes.shape == (17,)
