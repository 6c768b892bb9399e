"""
Reference reduced model (r = 4) of the MSD chain with n = 50
Published optimizer output, kept as a regression fixture
"""

import numpy as np

from ..optimization.manifold import ManifoldPoint

_J_COLUMNS = (
    (0.0, 0.049530743507566, -0.018625039127746, 0.007106890495913),
    (-0.049530743507566, 0.0, 0.626524211054092, -1.083765311671058),
    (0.018625039127746, -0.626524211054092, 0.0, -0.066881602488369),
    (-0.007106890495913, 1.083765311671058, 0.066881602488369, 0.0),
)

_R = (
    (0.020979798103068, 0.008729495305520, -0.026753473825891, -0.003019900398660),
    (0.008729495305520, 0.296162218193050, 0.016509857981159, -0.169695898367632),
    (-0.026753473825891, 0.016509857981159, 0.277287705425208, -0.447429037737505),
    (-0.003019900398660, -0.169695898367632, -0.447429037737505, 1.303620534440710),
)

_B = (
    (1.087281955207546, 1.075128712585373),
    (0.019632883027025, -0.081897882654859),
    (-0.060704161404099, -0.031902870273656),
    (0.013609328117831, -0.011572768539278),
)

_C = ((0.079020553332377, 0.648595865888539, 0.877453660076422, -3.055799879863735),)


def msd50_reference_point() -> ManifoldPoint:
    """The published (J_r, R_r, B_r, C_r); J_r is assembled column by column"""
    J = np.column_stack([np.array(col) for col in _J_COLUMNS])
    return ManifoldPoint(J=J, R=np.array(_R), B=np.array(_B), C=np.array(_C)).validate()
