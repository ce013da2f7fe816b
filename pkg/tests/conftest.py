import sys
from pathlib import Path

import pytest

sys.path.insert(0, str(Path(__file__).parent))

from cms import BernoulliIFS, FiniteChain, PlanarAffineTrig

import oracles


@pytest.fixture(scope="session")
def planar():
    return PlanarAffineTrig()


@pytest.fixture(scope="session")
def chain2():
    return FiniteChain(oracles.CHAIN_P)


@pytest.fixture(scope="session")
def bern():
    return BernoulliIFS(slopes=[0.5, 0.5], offsets=[0.0, 0.5],
                        probabilities=[0.5, 0.5])
