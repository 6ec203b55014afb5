from __future__ import annotations

import random

import pytest

from casts.scenario import Scenario, fixture_path, load_fixture


@pytest.fixture(scope="session")
def road() -> Scenario:
    return load_fixture("road-info.casts.xml")


@pytest.fixture(scope="session")
def planning() -> Scenario:
    return load_fixture("planning-hotel.casts.xml")


@pytest.fixture(scope="session")
def loop_scn() -> Scenario:
    return load_fixture("loop.casts.xml")


@pytest.fixture
def rng() -> random.Random:
    return random.Random(20260815)


@pytest.fixture(scope="session")
def fixtures_dir():
    return fixture_path("road-info.casts.xml").parent
