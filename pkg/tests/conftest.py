import numpy as np
import pytest

from cylscat.cross_section import CrossSectionSpec, circle
from cylscat.scenario import (Discretization, Scenario, barrier, gaussian_well)


@pytest.fixture(scope="session")
def circle_section():
    return CrossSectionSpec.of(circle(1.0, 128))


@pytest.fixture(scope="session")
def free_scenario(circle_section):
    return Scenario(cross_section=circle_section, blocks=(),
                    mu_long=9.0, mu_short=9.0,
                    discretization=Discretization(40.0, 4001),
                    n_channels=2)


@pytest.fixture(scope="session")
def free_one_channel(circle_section):
    return Scenario(cross_section=circle_section, blocks=(),
                    mu_long=9.0, mu_short=9.0,
                    discretization=Discretization(40.0, 2001),
                    n_channels=1)


@pytest.fixture(scope="session")
def barrier_scenario(circle_section):
    return Scenario(
        cross_section=circle_section,
        blocks=(barrier(np.array([[1.0]]), left=-0.5, right=0.5, amplitude=1.0),),
        mu_long=9.0, mu_short=2.0,
        discretization=Discretization(40.0, 4001),
        n_channels=1)


@pytest.fixture(scope="session")
def well_scenario(circle_section):
    return Scenario(
        cross_section=circle_section,
        blocks=(gaussian_well(np.array([[1.0]]), amplitude=-2.0, width=1.0),),
        mu_long=9.0, mu_short=6.0,
        discretization=Discretization(30.0, 1501),
        n_channels=1)


@pytest.fixture(scope="session")
def mixing_scenario(circle_section):
    v = np.array([[0.8, 0.35 + 0.15j, 0.2, 0.1],
                  [0.35 - 0.15j, 0.5, 0.25j, 0.15],
                  [0.2, -0.25j, 0.6, 0.1j],
                  [0.1, 0.15, -0.1j, 0.4]])
    a = np.array([[0.25, 0.1, 0.0, 0.0],
                  [0.1, 0.15, 0.05, 0.0],
                  [0.0, 0.05, 0.2, 0.0],
                  [0.0, 0.0, 0.0, 0.1]])
    return Scenario(
        cross_section=circle_section,
        blocks=(gaussian_well(v, amplitude=1.0, center=0.3, width=1.2),
                gaussian_well(a, amplitude=1.0, center=-0.5, width=1.5,
                              target="A")),
        mu_long=9.0, mu_short=6.0,
        discretization=Discretization(40.0, 4001),
        n_channels=4)


def square_barrier_transmission(lam, v0=1.0, half_width=0.5):
    """Closed-form 1-D transmission amplitude, phases referenced to x = 0."""
    k = np.sqrt(lam)
    kp = np.sqrt(complex(lam - v0))
    a = half_width
    if abs(kp) < 1e-12:
        den = 1.0 - 1j * k * a
    else:
        den = np.cos(2 * kp * a) - 0.5j * (k / kp + kp / k) * np.sin(2 * kp * a)
    return np.exp(-2j * k * a) / den
