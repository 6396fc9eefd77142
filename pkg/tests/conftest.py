import math

import pytest

from aprotnum import apmodels as ap
from aprotnum.prufer import IntegratorConfig

ACCEPTANCE_LINES = []


def make(q=None, v=None, gamma=None):
    return ap.GeneralizedPotential(
        q if q is not None else ap.constant_potential(0.0),
        v if v is not None else ap.constant_sequence(0.0),
        gamma if gamma is not None else ap.periodic_lattice(1.0),
    )


@pytest.fixture
def free():
    return make()


@pytest.fixture
def kronig_penney():
    return make(v=ap.constant_sequence(2.0))


@pytest.fixture
def gamma_half():
    return ap.sine_lattice(0.5)


@pytest.fixture
def quasi():
    """Smooth quasi-periodic q with alternating deltas on the sine lattice."""
    return make(
        q=ap.trig_potential([(1.0, 1.0), (1.0, math.sqrt(2.0))]),
        v=ap.alternating_sequence(1.0),
        gamma=ap.sine_lattice(0.5),
    )


@pytest.fixture
def cfg():
    return IntegratorConfig()


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
