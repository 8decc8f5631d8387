from __future__ import annotations

import pytest

from gazenav.generate import generate_small_world, load_metro


@pytest.fixture(scope="session")
def metro():
    return load_metro()


@pytest.fixture(scope="session")
def small_world():
    return generate_small_world(180, 4, 0.1, seed=1)
