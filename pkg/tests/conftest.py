import hypothesis
import numpy as np
import pytest

from lorentz_inverse.metric import MetricField

hypothesis.settings.register_profile("default", deadline=None, max_examples=25)
hypothesis.settings.register_profile("fast", deadline=None, max_examples=5)
hypothesis.settings.load_profile("default")

BUMP = "1 + 0.5*exp(-x1^2)"

ACCEPTANCE_LINES: list[str] = []


@pytest.fixture
def mink1():
    return MetricField.minkowski(1)


@pytest.fixture
def mink2():
    return MetricField.minkowski(2)


@pytest.fixture
def bump1():
    return MetricField.conformal(1, BUMP)


@pytest.fixture
def tilted1():
    return MetricField.general(1, [[1, 0.3], [0.3, -1]])


def sample_fields():
    """One field per kind and dimension, all Lorentzian on their whole box."""
    box = (-50.0, 50.0)
    return [
        MetricField.minkowski(1, box=box),
        MetricField.minkowski(3, box=box),
        MetricField.diagonal(1, ["1 + 0.2*sin(0.5*x1)", "-1 - 0.1*cos(x1)"], box=box),
        MetricField.diagonal(2, ["1.2", "-1 - 0.3*exp(-x1^2 - x2^2)", "-0.8 + 0.1*sin(0.3*x1)"], box=box),
        MetricField.conformal(1, BUMP, box=box),
        MetricField.conformal(2, "1 + 0.5*exp(-(x1^2 + x2^2))", box=box),
        MetricField.conformal(3, "2 + sin(0.4*x1)*cos(0.3*x3)", box=box),
        MetricField.general(1, [["1 + 0.2*sin(0.5*x1)", "0.3"], ["0.3", "-1 - 0.2*cos(0.5*x1)"]], box=box),
        MetricField.general(2, [
            ["1 + 0.1*sin(0.5*x1)", "0.3", "0.1*cos(0.5*x2)"],
            ["0.3", "-1 - 0.2*exp(-x1^2)", "0"],
            ["0.1*cos(0.5*x2)", "0", "-1.5"],
        ], box=box),
    ]


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
