"""
Mass-Spring-Damper Benchmark
Chain of n/2 masses (m_i = 4, k_i = 4, c_i = 1) in port-Hamiltonian form
x' = (J - R) Q x + B u, y = C x
"""

from dataclasses import dataclass
from typing import Tuple

import numpy as np

from ..core.errors import DomainError, NotStable
from ..linalg.matrix_equations import Matrix
from ..systems.lti import StateSpace
from ..systems.structured_form import assemble_from_jrq


@dataclass(frozen=True)
class MsdSpec:
    """Fixed physical constants of the chain"""

    n: int
    mass: float = 4.0
    spring: float = 4.0
    damper: float = 1.0

    def __post_init__(self):
        if self.n < 4 or self.n % 2:
            raise DomainError(f"MSD state dimension must be even and >= 4, got {self.n}")

    @property
    def n_masses(self) -> int:
        return self.n // 2


@dataclass(frozen=True, eq=False)
class MsdStructure:
    J: Matrix
    R: Matrix
    Q: Matrix
    B: Matrix
    C: Matrix


def msd_structure(spec: MsdSpec) -> MsdStructure:
    """
    Entries (0-based; even index = position-like, odd index = momentum):
        J[2i, 2i+1] = 1, J[2i+1, 2i] = -1
        R[2i+1, 2i+1] = c
        Q[0, 0] = k, Q[2i+1, 2i+1] = 1/m, Q[2i, 2i] = 2k (i >= 1),
        Q[2i-2, 2i] = Q[2i, 2i-2] = -k
        B[1, 0] = B[3, 1] = 1, C[0, 0] = 1
    """
    n = spec.n
    J = np.zeros((n, n))
    R = np.zeros((n, n))
    Q = np.zeros((n, n))
    for i in range(spec.n_masses):
        pos, mom = 2 * i, 2 * i + 1
        J[pos, mom] = 1.0
        J[mom, pos] = -1.0
        R[mom, mom] = spec.damper
        Q[mom, mom] = 1.0 / spec.mass
        if i == 0:
            Q[pos, pos] = spec.spring
        else:
            Q[pos, pos] = 2.0 * spec.spring
            Q[pos - 2, pos] = Q[pos, pos - 2] = -spec.spring

    B = np.zeros((n, 2))
    B[1, 0] = 1.0
    B[3, 1] = 1.0
    C = np.zeros((1, n))
    C[0, 0] = 1.0
    return MsdStructure(J=J, R=R, Q=Q, B=B, C=C)


def gen_msd(n: int) -> Tuple[StateSpace, MsdStructure]:
    """MSD chain with n states, 2 inputs and 1 output; A = (J - R) Q"""
    structure = msd_structure(MsdSpec(n=n))
    sys = assemble_from_jrq(structure.J, structure.R, structure.Q, structure.B, structure.C)
    if not sys.is_stable():
        raise NotStable(f"MSD chain with n={n} is not asymptotically stable")
    return sys, structure
