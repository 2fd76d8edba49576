from fractions import Fraction

import numpy as np
import pytest

from probgraphon.graphon import StepGraphon, embed_real_graphon
from probgraphon.measures import TestFamily, WeightSpace


@pytest.fixture
def two_point():
    return WeightSpace.discrete((0, 1))


@pytest.fixture
def sbm():
    """Two equal blocks, point-"1" masses [[0.9, 0.1], [0.1, 0.9]]."""
    return embed_real_graphon([[0.9, 0.1], [0.1, 0.9]], ["1/2", "1/2"])


@pytest.fixture
def diff_kernel(two_point):
    p = np.array([[0.2, -0.2], [-0.2, 0.2]])
    cells = np.stack([-p, p], axis=-1)
    return StepGraphon(two_point, (Fraction(1, 2), Fraction(1, 2)), cells, "signed")


@pytest.fixture
def canonical(two_point):
    return TestFamily.canonical(two_point)


@pytest.fixture
def rng():
    return np.random.default_rng(12345)
