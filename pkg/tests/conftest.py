import random

import pytest

from recompose.generators.enumerative import EnumerativeGenerator

from helpers import fig1_task


@pytest.fixture
def fig1():
    return fig1_task()


@pytest.fixture(scope="session")
def enum():
    """One shared search instance; its result cache persists across tests."""
    return EnumerativeGenerator()


@pytest.fixture
def rng():
    return random.Random(20260823)
