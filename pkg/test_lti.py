"""
LTI 系統分析測試
傳遞函數、Gramian、H2/Hinf 範數、Hankel 奇異值、Bode 資料與時域模擬
"""

import sys
import os
import math

import numpy as np
import pytest
from scipy import integrate

# 添加 src 目錄到路徑
sys.path.insert(0, os.path.join(os.path.dirname(__file__), 'src'))

from conftest import random_stable_system
from src.core.errors import DimensionMismatch, DomainError, NotStable, SingularResolvent
from src.reduction.balanced_truncation import bt_reduce
from src.systems.lti import (
    StateSpace, bode_data, choose_horizon, error_system, gramians, h2_error_norm, h2_norm,
    h2_norm_dual, hankel_singular_values, hinf_norm, linf_bound_check, sigma_max,
    signal_l2_norm, simulate, transfer_eval
)


@pytest.fixture
def first_order():
    """G(s) = 1 / (s + 1)"""
    return StateSpace([[-1.0]], [[1.0]], [[1.0]])


@pytest.fixture
def resonant():
    """G(s) = 1 / (s^2 + 0.2 s + 1)"""
    return StateSpace([[0.0, 1.0], [-1.0, -0.2]], [[0.0], [1.0]], [[1.0, 0.0]])


class TestStateSpace:
    def test_dimensions(self):
        sys_ = random_stable_system(5, 2, 3, seed=0)
        assert (sys_.n, sys_.m, sys_.p) == (5, 2, 3)

    def test_shape_checks(self):
        with pytest.raises(DimensionMismatch):
            StateSpace(np.eye(2), np.ones((3, 1)), np.ones((1, 2)))
        with pytest.raises(DimensionMismatch):
            StateSpace(np.eye(2), np.ones((2, 1)), np.ones((1, 3)))
        with pytest.raises(DomainError):
            StateSpace([[np.nan]], [[1.0]], [[1.0]])

    def test_error_system_sizes(self):
        full = random_stable_system(4, 2, 1, seed=1)
        with pytest.raises(DimensionMismatch):
            error_system(full, random_stable_system(2, 1, 1, seed=2))
        err = error_system(full, random_stable_system(2, 2, 1, seed=3))
        assert (err.n, err.m, err.p) == (6, 2, 1)


class TestTransfer:
    def test_first_order_values(self, first_order):
        assert transfer_eval(first_order, 0.0)[0, 0] == pytest.approx(1.0)
        assert transfer_eval(first_order, 1.0)[0, 0] == pytest.approx(0.5 - 0.5j)
        assert sigma_max(first_order, 1.0) == pytest.approx(1.0 / math.sqrt(2.0))

    def test_pole_on_axis(self):
        oscillator = StateSpace([[0.0, 1.0], [-1.0, 0.0]], [[0.0], [1.0]], [[1.0, 0.0]])
        with pytest.raises(SingularResolvent):
            transfer_eval(oscillator, 1.0)


class TestGramiansAndH2:
    def test_scalar_gramians(self, first_order):
        Sc, So = gramians(first_order)
        assert Sc[0, 0] == pytest.approx(0.5)
        assert So[0, 0] == pytest.approx(0.5)

    def test_diagonal_gramian(self):
        sys_ = StateSpace(np.diag([-1.0, -2.0]), [[1.0], [1.0]], [[1.0, 1.0]])
        Sc, _ = gramians(sys_)
        assert np.allclose(Sc, [[0.5, 1.0 / 3.0], [1.0 / 3.0, 0.25]], atol=1e-14)

    def test_first_order_norm(self, first_order):
        assert h2_norm(first_order) == pytest.approx(math.sqrt(0.5), rel=1e-14)

    def test_zero_output(self):
        sys_ = StateSpace(-np.eye(2), np.ones((2, 1)), np.zeros((1, 2)))
        assert h2_norm(sys_) == 0.0

    def test_unstable(self):
        with pytest.raises(NotStable):
            h2_norm(StateSpace([[0.5]], [[1.0]], [[1.0]]))

    @pytest.mark.parametrize("seed", range(3))
    def test_frequency_integral(self, seed):
        sys_ = random_stable_system(4, 2, 2, seed=seed)
        integrand = lambda w: float(np.sum(np.abs(transfer_eval(sys_, w)) ** 2))
        value, _ = integrate.quad(integrand, 0.0, np.inf, limit=400, epsabs=1e-13, epsrel=1e-10)
        assert h2_norm(sys_) ** 2 == pytest.approx(value / math.pi, rel=1e-6)

    @pytest.mark.parametrize("seed", range(5))
    def test_dual_form_agrees(self, seed):
        sys_ = random_stable_system(6, 2, 3, seed=seed)
        assert h2_norm_dual(sys_) == pytest.approx(h2_norm(sys_), rel=1e-10)

    def test_similarity_invariance(self):
        sys_ = random_stable_system(5, 2, 2, seed=7)
        rng = np.random.default_rng(8)
        T = np.eye(5) + 0.3 * rng.standard_normal((5, 5))
        moved = sys_.similarity(T)
        assert h2_norm(moved) == pytest.approx(h2_norm(sys_), rel=1e-9)
        assert np.allclose(transfer_eval(moved, 0.7), transfer_eval(sys_, 0.7), rtol=1e-10, atol=1e-12)

    def test_error_norm_of_identical_models(self):
        sys_ = random_stable_system(4, 1, 1, seed=9)
        assert h2_error_norm(sys_, sys_) <= 1e-6


class TestHinf:
    def test_first_order(self, first_order):
        value, omega = hinf_norm(first_order)
        assert value == pytest.approx(1.0, rel=1e-6)
        assert omega == pytest.approx(0.0, abs=1e-3)

    def test_resonant_peak(self, resonant):
        value, omega = hinf_norm(resonant)
        assert value == pytest.approx(1.0 / (0.2 * math.sqrt(0.99)), rel=1e-5)
        assert omega == pytest.approx(math.sqrt(0.98), rel=1e-3)

    @pytest.mark.parametrize("tol", [1e-3, 1e-4, 1e-6])
    def test_within_tolerance_of_sharp_peak(self, tol):
        zeta = 0.01
        sys_ = StateSpace([[0.0, 1.0], [-1.0, -2.0 * zeta]], [[0.0], [1.0]], [[1.0, 0.0]])
        exact = 1.0 / (2.0 * zeta * math.sqrt(1.0 - zeta ** 2))
        value, _ = hinf_norm(sys_, tol=tol)
        assert exact * (1.0 - tol) <= value <= exact * (1.0 + 1e-12)

    def test_grid_only_is_lower_bound(self, resonant):
        grid_value, _ = hinf_norm(resonant, grid_only=True)
        value, _ = hinf_norm(resonant)
        assert grid_value <= value * (1.0 + 1e-12)

    @pytest.mark.parametrize("seed", range(4))
    def test_dominates_sampled_gains(self, seed):
        sys_ = random_stable_system(6, 2, 2, seed=seed)
        value, _ = hinf_norm(sys_)
        samples = np.logspace(-3, 3, 200)
        assert max(sigma_max(sys_, w) for w in samples) <= value * (1.0 + 1e-9)

    def test_zero_system(self):
        sys_ = StateSpace(-np.eye(2), np.zeros((2, 1)), np.ones((1, 2)))
        assert hinf_norm(sys_) == (0.0, 0.0)

    def test_rejects_bad_tolerance(self, first_order):
        with pytest.raises(DomainError):
            hinf_norm(first_order, tol=0.0)


class TestHankel:
    def test_first_order(self, first_order):
        spectrum = hankel_singular_values(first_order)
        assert len(spectrum) == 1
        assert spectrum.sigma(1) == pytest.approx(0.5)

    def test_descending_and_tail(self):
        spectrum = hankel_singular_values(random_stable_system(6, 2, 2, seed=4))
        assert np.all(np.diff(spectrum.sigmas) <= 0)
        assert spectrum.tail_sum(2) == pytest.approx(float(np.sum(spectrum.sigmas[2:])))
        assert spectrum.tail_sum(6) == 0.0

    def test_similarity_invariance(self):
        sys_ = random_stable_system(5, 1, 2, seed=5)
        T = np.diag([1.0, 2.0, 0.5, 3.0, 1.5])
        a = hankel_singular_values(sys_).sigmas
        b = hankel_singular_values(sys_.similarity(T)).sigmas
        assert np.allclose(a, b, rtol=1e-9)


class TestBode:
    def test_two_point_grid(self, first_order):
        response = bode_data(first_order, 0.5, 1.0, 2)
        assert np.allclose(response.frequencies, [0.5, 1.0])
        assert response.magnitudes_db[1, 0, 0] == pytest.approx(-3.0103, abs=1e-4)
        assert response.phases_deg[1, 0, 0] == pytest.approx(-45.0)

    def test_columns(self):
        response = bode_data(random_stable_system(3, 2, 1, seed=0), 1e-2, 1e2, 10)
        names, data = response.columns(label="full")
        assert names[0] == "full_mag_db_11"
        assert names[-1] == "full_phase_deg_12"
        assert data.shape == (10, 4)

    @pytest.mark.parametrize("wmin,wmax,points", [(1.0, 1.0, 10), (0.0, 1.0, 10), (2.0, 1.0, 10), (0.1, 1.0, 1)])
    def test_domain(self, first_order, wmin, wmax, points):
        with pytest.raises(DomainError):
            bode_data(first_order, wmin, wmax, points)

    def test_csv(self, first_order, tmp_path):
        path = tmp_path / "bode.csv"
        bode_data(first_order, 0.1, 10.0, 5).to_csv(str(path))
        lines = path.read_text().splitlines()
        assert lines[0] == "omega,mag_db_11,phase_deg_11"
        assert len(lines) == 6


class TestSimulation:
    def test_zero_input(self, first_order):
        trace = simulate(first_order, np.zeros((101, 1)), 0.01)
        assert trace.times[-1] == pytest.approx(1.0)
        assert np.all(trace.outputs == 0.0)

    def test_step_response(self, first_order):
        trace = simulate(first_order, lambda t: np.ones(1), 1e-3, t_final=5.0)
        exact = 1.0 - np.exp(-trace.times)
        assert np.max(np.abs(trace.outputs[:, 0] - exact)) <= 1e-10

    def test_sampled_ramp(self, first_order):
        dt = 1e-2
        ramp = (dt * np.arange(301)).reshape(-1, 1)
        trace = simulate(first_order, ramp, dt)
        exact = trace.times - 1.0 + np.exp(-trace.times)
        assert np.max(np.abs(trace.outputs[:, 0] - exact)) <= 1e-9

    def test_fourth_order_convergence(self, first_order):
        def final_error(dt):
            trace = simulate(first_order, lambda t: np.ones(1), dt, t_final=2.0)
            return abs(trace.outputs[-1, 0] - (1.0 - math.exp(-2.0)))

        ratio = final_error(0.2) / final_error(0.1)
        assert 12.0 < ratio < 20.0

    def test_callable_needs_horizon(self, first_order):
        with pytest.raises(DomainError):
            simulate(first_order, lambda t: np.ones(1), 0.1)

    def test_channel_count(self, first_order):
        with pytest.raises(DimensionMismatch):
            simulate(first_order, np.zeros((10, 2)), 0.1)

    def test_csv(self, first_order, tmp_path):
        path = tmp_path / "sim.csv"
        simulate(first_order, np.ones((4, 1)), 0.1).to_csv(str(path))
        assert path.read_text().splitlines()[0] == "t,u1,y1"


class TestLinfBound:
    def test_signal_norm(self):
        times = np.linspace(0.0, 50.0, 50001)
        values = np.exp(-times)
        assert signal_l2_norm(times, values) == pytest.approx(math.sqrt(0.5), rel=1e-6)

    def test_horizon_doubles(self):
        assert choose_horizon(lambda t: np.array([math.exp(-t)]), 0.1) == pytest.approx(20.0)

    def test_bound_holds_for_bt(self):
        full = random_stable_system(6, 2, 1, seed=2)
        reduced = bt_reduce(full, 2).state_space
        u = lambda t: np.array([math.exp(-t), math.exp(-0.5 * t) * math.sin(t)])
        check = linf_bound_check(full, reduced, u, 1e-2, t_final=40.0)
        assert check.holds
        assert 0.0 < check.lhs <= check.rhs

    def test_identical_models(self):
        full = random_stable_system(3, 1, 1, seed=4)
        check = linf_bound_check(full, full, np.ones((50, 1)), 0.05)
        assert check.lhs == 0.0
        assert check.rhs == 0.0
        assert check.holds

    def test_error_trace(self, tmp_path):
        full = random_stable_system(5, 2, 1, seed=6)
        reduced = bt_reduce(full, 2).state_space
        check = linf_bound_check(full, reduced, np.ones((201, 2)), 0.05)
        assert check.trace.outputs.shape == (201, 1)
        assert check.lhs == pytest.approx(np.max(np.abs(check.trace.outputs)))
        path = tmp_path / "err.csv"
        check.trace.to_csv(str(path))
        assert path.read_text().splitlines()[0] == "t,u1,u2,y1"

    def test_io_sizes_must_agree(self):
        with pytest.raises(DimensionMismatch):
            linf_bound_check(random_stable_system(3, 1, 1, seed=0), random_stable_system(2, 2, 1, seed=1),
                             np.ones((5, 1)), 0.1)


if __name__ == "__main__":
    pytest.main([__file__])
