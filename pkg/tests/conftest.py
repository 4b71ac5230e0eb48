import numpy as np
import pytest

from loschmidt import ChainSpec, mode_table

# fields giving an exact gap of 0.18 (Ising) and 0.22 (XY, gamma = 0.5) at N = 7
ISING_H = 0.5026062387113387
XY_GAMMA, XY_H = 0.5, 0.9012159396249515


def ed_levels(spec, k=2):
    from loschmidt.exact import build_h0

    return np.linalg.eigvalsh(build_h0(spec))[:k]


@pytest.fixture
def ising7():
    return ChainSpec(7, 1.0, ISING_H)


@pytest.fixture
def xy7():
    return ChainSpec(7, XY_GAMMA, XY_H)


@pytest.fixture
def modes4():
    return mode_table(ChainSpec(4, 1.0, 1.5))
