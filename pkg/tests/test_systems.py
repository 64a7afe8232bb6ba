"""Tests for plant models, majorant validation, and exogenous signals."""

import math

import numpy as np
import pytest

from dads.jets import SmoothMap
from dads.systems import (
    DisturbanceProfile,
    PureStrictFeedbackSystem,
    StrictFeedbackSystem,
    constant_parameter,
    custom_table,
    eval_dynamics,
    free_theta,
    get_system,
    sample_disturbance,
    sinusoid_bank,
    validate_majorants,
    vanishing_disturbance,
    wingrock,
    zero_disturbance,
)

THETA_WR = np.array([20.0, 20.0, 2.0, 1.0])
X0_WR = np.array([1.0, -0.5, -18.0])


class TestWingRockDynamics:
    def test_initial_derivative_oracle(self):
        sys = wingrock()
        xdot = eval_dynamics(sys, X0_WR, u=0.0, theta=THETA_WR, d=np.zeros(2))
        # x2' = 20*1 + 20*(-0.5) + 2*(-0.5) + 1*0.25 + (-18) = -8.75
        assert xdot == pytest.approx([-0.5, -8.75, 0.0])

    def test_affine_in_u(self):
        sys = wingrock()
        rng = np.random.default_rng(1)
        for _ in range(10):
            x = rng.uniform(-3, 3, 3)
            d = rng.uniform(-5, 5, 2)
            f0 = eval_dynamics(sys, x, 0.0, THETA_WR, d)
            f1 = eval_dynamics(sys, x, 1.0, THETA_WR, d)
            f5 = eval_dynamics(sys, x, 5.0, THETA_WR, d)
            assert f5 == pytest.approx(f0 + 5.0 * (f1 - f0), rel=1e-12, abs=1e-12)

    def test_affine_in_d(self):
        sys = wingrock()
        x = np.array([0.3, -1.2, 0.7])
        f0 = eval_dynamics(sys, x, 2.0, THETA_WR, np.zeros(2))
        fd = eval_dynamics(sys, x, 2.0, THETA_WR, np.array([3.0, -4.0]))
        assert (fd - f0) == pytest.approx([0.0, 3.0, -4.0])

    def test_origin_is_equilibrium(self):
        sys = wingrock()
        xdot = eval_dynamics(sys, np.zeros(3), 0.0, THETA_WR, np.zeros(2))
        assert xdot == pytest.approx(np.zeros(3))

    def test_dimension_checks(self):
        sys = wingrock()
        with pytest.raises(ValueError):
            eval_dynamics(sys, np.zeros(2), 0.0, THETA_WR, np.zeros(2))
        with pytest.raises(ValueError):
            eval_dynamics(sys, np.zeros(3), 0.0, np.zeros(3), np.zeros(2))
        with pytest.raises(ValueError):
            eval_dynamics(sys, np.zeros(3), 0.0, THETA_WR, np.zeros(1))

    def test_get_system(self):
        sys = get_system("wingrock")
        assert isinstance(sys, PureStrictFeedbackSystem)
        assert (sys.n, sys.p, sys.l) == (3, 4, 2)
        with pytest.raises(KeyError):
            get_system("nope")


def _cascade_toy(eta1_value=1.0):
    """n=2 integrators + m=1 block: y' = u + g(theta) with g = 2 + sin(x1)."""
    g1 = SmoothMap(3 + 1, lambda x1, x2, y1, th1: 2.0 + np.sin(x1), name="g1")
    eta1 = SmoothMap(3, lambda x1, x2, y1: eta1_value, name="eta1")
    mu1 = SmoothMap(3, lambda *a: 3.0, name="mu1")
    zero3 = SmoothMap(3, lambda *a: 0.0, name="zero")
    return StrictFeedbackSystem(
        n=2, m=1,
        h=(zero3,),
        phi=(SmoothMap(3, lambda x1, x2, y1: (x1,), codim=1, name="phi1"),),
        alpha=(SmoothMap(3, lambda *a: (1.0,), codim=1, name="alpha1"),),
        g=(g1,), eta=(eta1,), mu=(mu1,),
        p=1, l=1, theta_domain=free_theta(1, sample_radius=5.0),
    )


class TestCascadeDynamics:
    def test_chain_structure(self):
        sys = _cascade_toy()
        state = np.array([0.0, 2.0, -1.0])
        out = eval_dynamics(sys, state, u=0.5, theta=[3.0], d=[0.25])
        # x1' = x2, x2' = y1, y1' = g*u + phi.theta + alpha.d
        assert out == pytest.approx([2.0, -1.0, 2.0 * 0.5 + 0.0 + 0.25])

    def test_state_dim(self):
        assert _cascade_toy().state_dim == 3


class TestMajorantValidation:
    def test_wingrock_majorants_hold(self):
        report = validate_majorants(wingrock(), n_samples=200, seed=3)
        assert report.passed
        assert report.worst_margin_low >= 0.0
        assert report.worst_margin_high >= 0.0

    def test_broken_eta_detected(self):
        # eta1 = 3 exceeds inf g1 = 1 for g1 = 2 + sin(x1)
        report = validate_majorants(_cascade_toy(eta1_value=3.0), n_samples=300, seed=0)
        assert not report.passed
        assert report.worst_margin_low < 0.0
        kind, level, state, theta, margin = report.violations[0]
        assert kind == "eta"
        assert level == 1
        assert margin < 0.0
        # the witness really violates the bound
        assert 2.0 + np.sin(state[0]) - 3.0 == pytest.approx(margin)

    def test_valid_eta_passes(self):
        report = validate_majorants(_cascade_toy(eta1_value=1.0), n_samples=300, seed=0)
        assert report.passed

    def test_bad_sample_count(self):
        with pytest.raises(ValueError):
            validate_majorants(wingrock(), n_samples=0)


class TestDisturbanceProfiles:
    def test_zero(self):
        d = zero_disturbance(2)
        assert d(3.7) == pytest.approx([0.0, 0.0])

    def test_sinusoid_bank_values(self):
        d = sinusoid_bank([20.0, 10.0], [10.0, 20.0])
        assert d(0.0) == pytest.approx([20.0, 10.0])
        # at t = pi/10 the first channel sits at a trough
        assert d(math.pi / 10.0)[0] == pytest.approx(-20.0)

    def test_sinusoid_bank_length_mismatch(self):
        with pytest.raises(ValueError):
            sinusoid_bank([1.0, 2.0], [1.0])

    def test_vanishing_envelope(self):
        d = vanishing_disturbance([20.0, 0.0], [10.0, 0.0], decay=1.0)
        assert d(0.0) == pytest.approx([20.0, 0.0])
        t = 2.0
        assert d(t)[0] == pytest.approx(20.0 * math.cos(10.0 * t) * math.exp(-t))
        assert d(t)[1] == 0.0

    def test_negative_time_rejected(self):
        d = zero_disturbance(1)
        with pytest.raises(ValueError):
            sample_disturbance(d, -0.1)

    def test_custom_table_interpolates_and_clamps(self):
        d = custom_table([0.0, 1.0, 2.0], [[0.0, 5.0], [2.0, 5.0], [4.0, 7.0]])
        assert d.dim == 2
        assert d(0.5) == pytest.approx([1.0, 5.0])
        assert d(1.5) == pytest.approx([3.0, 6.0])
        # beyond the table the nearest value holds
        assert d(10.0) == pytest.approx([4.0, 7.0])
        assert d(0.0) == pytest.approx([0.0, 5.0])

    def test_unknown_kind(self):
        d = DisturbanceProfile("mystery", 1)
        with pytest.raises(ValueError):
            d(0.0)


class TestParameterSignal:
    def test_constant(self):
        th = constant_parameter([20.0, 20.0, 2.0, 1.0])
        assert th(0.0) == pytest.approx(THETA_WR)
        assert th(123.0) == pytest.approx(THETA_WR)

    def test_free_theta_sampler(self):
        dom = free_theta(4, sample_radius=40.0)
        rng = np.random.default_rng(0)
        samples = np.array([dom.sample(rng) for _ in range(200)])
        assert samples.shape == (200, 4)
        assert np.all(np.linalg.norm(samples, axis=1) <= 40.0 + 1e-12)
        assert dom.contains(np.array([1e6, 0, 0, 0]))
