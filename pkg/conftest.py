"""
共用測試夾具
MSD 基準模型、隨機穩定系統與快取的降階結果
"""

import sys
import os

import numpy as np
import pytest

# 添加 src 目錄到路徑
sys.path.insert(0, os.path.join(os.path.dirname(__file__), 'src'))

from src.models.msd import gen_msd
from src.optimization.objective import build_data
from src.reduction.balanced_truncation import bt_initial_point, bt_reduce
from src.optimization.trust_region import trust_region_solve
from src.systems.lti import StateSpace
from src.systems.structured_form import to_structured


def random_stable_system(n: int, m: int, p: int, seed: int) -> StateSpace:
    """Dense random system with spectrum shifted into the left half-plane"""
    rng = np.random.default_rng(seed)
    G = rng.standard_normal((n, n))
    A = G - (np.linalg.norm(G, 2) + 0.5) * np.eye(n)
    return StateSpace(A, rng.standard_normal((n, m)), rng.standard_normal((p, n)))


@pytest.fixture(scope="session")
def msd50():
    sys_, _ = gen_msd(50)
    return sys_


@pytest.fixture(scope="session")
def msd50_data(msd50):
    structured, _ = to_structured(msd50)
    return build_data(structured)


@pytest.fixture(scope="session")
def msd50_bt():
    """Lazy cache of bt_reduce results keyed by order"""
    cache = {}
    full, _ = gen_msd(50)

    def get(r: int):
        if r not in cache:
            cache[r] = bt_reduce(full, r)
        return cache[r]
    return get


@pytest.fixture(scope="session")
def msd50_tr(msd50, msd50_data, msd50_bt):
    """Lazy cache of trust-region runs started from BT, keyed by order"""
    cache = {}

    def get(r: int):
        if r not in cache:
            p0 = bt_initial_point(msd50, r, msd50_bt(r))
            cache[r] = trust_region_solve(msd50_data, p0)
        return cache[r]
    return get
