import math

import pytest

from circint import Circle, CircularScenario, FadingLaw, PathLossLaw
from circint.experiments import (
    reference_one_circle_scenario,
    reference_two_circle_scenario,
)


@pytest.fixture(scope="session")
def study_scenario() -> CircularScenario:
    """Two uniform circles (radii 2 and 4, ten nodes each) around a 0.1-power
    central station; unclipped fourth-power path loss, Gamma[2,1] fading."""
    return reference_two_circle_scenario()


@pytest.fixture(scope="session")
def one_circle_scenario() -> CircularScenario:
    return reference_one_circle_scenario()


@pytest.fixture(scope="session")
def mapping_law() -> PathLossLaw:
    return PathLossLaw(intercept=1.0, constant=1.0, exponent=4.0)


@pytest.fixture(scope="session")
def fading() -> FadingLaw:
    return FadingLaw(2, 1.0)


@pytest.fixture()
def small_circle() -> Circle:
    return Circle.uniform(1.0, 10, total_power=1.0, phase=math.pi / 10)
