"""
平衡截斷測試
平方根法、奇異值間隙檢查、誤差界與結構化初始點
"""

import sys
import os

import numpy as np
import pytest

# 添加 src 目錄到路徑
sys.path.insert(0, os.path.join(os.path.dirname(__file__), 'src'))

from conftest import random_stable_system
from src.core.errors import DegenerateTruncation, DomainError, NotStable
from src.reduction.balanced_truncation import bt_initial_point, bt_reduce
from src.systems.lti import (
    StateSpace, error_system, h2_error_norm, hankel_singular_values, hinf_norm, transfer_eval
)
from src.systems.structured_form import point_to_state_space


class TestBalancedTruncation:
    def test_full_order_reproduces_system(self):
        full = random_stable_system(5, 2, 2, seed=0)
        bt = bt_reduce(full, 5)
        assert bt.sigma_next == 0.0
        assert bt.error_bound == 0.0
        assert h2_error_norm(full, bt.state_space) <= 1e-6
        for w in np.logspace(-2, 2, 9):
            assert np.allclose(transfer_eval(bt.state_space, w), transfer_eval(full, w), rtol=1e-8, atol=1e-10)

    def test_reduced_model_is_balanced(self):
        full = random_stable_system(6, 1, 2, seed=1)
        bt = bt_reduce(full, 3)
        reduced = hankel_singular_values(bt.state_space).sigmas
        assert np.allclose(reduced, bt.sigmas.sigmas[:3], rtol=1e-6)

    @pytest.mark.parametrize("method", ["match_dc", "truncate"])
    @pytest.mark.parametrize("r", [1, 2, 3, 4])
    def test_error_bounds(self, r, method):
        full = random_stable_system(6, 2, 1, seed=2)
        bt = bt_reduce(full, r, verify_bound=True, method=method)
        err, _ = hinf_norm(error_system(full, bt.state_space))
        assert bt.sigma_next * (1.0 - 1e-5) <= err <= bt.error_bound * (1.0 + 1e-6)
        assert bt.state_space.is_stable()

    @pytest.mark.parametrize("seed", range(5))
    def test_dc_gain_matched(self, seed):
        full = random_stable_system(7, 2, 2, seed=seed)
        bt = bt_reduce(full, 3)
        G0 = transfer_eval(full, 0.0)
        assert np.allclose(transfer_eval(bt.state_space, 0.0) + bt.feedthrough, G0,
                           rtol=1e-8, atol=1e-10 * np.max(np.abs(G0)))

    def test_plain_truncation(self):
        full = random_stable_system(6, 1, 2, seed=1)
        plain = bt_reduce(full, 3, method="truncate")
        dc = bt_reduce(full, 3)
        assert plain.method == "truncate"
        assert not np.any(plain.feedthrough)
        assert plain.error_bound == pytest.approx(2.0 * plain.sigmas.tail_sum(3))
        assert not np.allclose(plain.Ar, dc.Ar)
        assert np.allclose(hankel_singular_values(plain.state_space).sigmas, plain.sigmas.sigmas[:3], rtol=1e-6)

    def test_unknown_method(self):
        with pytest.raises(DomainError):
            bt_reduce(random_stable_system(4, 1, 1, seed=0), 2, method="spa")

    def test_deterministic_signs(self):
        full = random_stable_system(6, 2, 2, seed=3)
        a, b = bt_reduce(full, 3), bt_reduce(full, 3)
        assert np.array_equal(a.Ar, b.Ar)
        assert np.array_equal(a.Cr, b.Cr)

    def test_order_range(self):
        full = random_stable_system(4, 1, 1, seed=4)
        with pytest.raises(DomainError):
            bt_reduce(full, 0)
        with pytest.raises(DomainError):
            bt_reduce(full, 5)

    def test_repeated_singular_values(self):
        twin = StateSpace(-np.eye(2), np.eye(2), np.eye(2))
        with pytest.raises(DegenerateTruncation):
            bt_reduce(twin, 1)
        assert bt_reduce(twin, 2).order == 2

    def test_unstable(self):
        with pytest.raises(NotStable):
            bt_reduce(StateSpace(np.diag([-1.0, 0.5]), np.ones((2, 1)), np.ones((1, 2))), 1)


class TestInitialPoint:
    @pytest.mark.parametrize("seed", range(3))
    def test_same_transfer_function(self, seed):
        full = random_stable_system(7, 2, 2, seed=seed)
        bt = bt_reduce(full, 3)
        point = bt_initial_point(full, 3, bt)
        assert point.order == 3
        structured = point_to_state_space(point)
        for w in np.logspace(-3, 3, 15):
            G = transfer_eval(bt.state_space, w)
            assert np.linalg.norm(transfer_eval(structured, w) - G) <= 1e-8 * (1.0 + np.linalg.norm(G))

    def test_computes_bt_when_missing(self):
        full = random_stable_system(5, 1, 1, seed=5)
        a = bt_initial_point(full, 2)
        b = bt_initial_point(full, 2, bt_reduce(full, 2))
        assert np.allclose(a.R, b.R) and np.allclose(a.C, b.C)

    def test_order_mismatch(self):
        full = random_stable_system(5, 1, 1, seed=6)
        with pytest.raises(DomainError):
            bt_initial_point(full, 3, bt_reduce(full, 2))


if __name__ == "__main__":
    pytest.main([__file__])
