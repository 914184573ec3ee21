import math

import numpy as np
import pytest
from hypothesis import HealthCheck, settings

from cuspcmc.geometry import AmbientMetric, SliceSpec, catalogue_perturbation

settings.register_profile(
    "repo",
    deadline=None,
    derandomize=True,
    max_examples=40,
    suppress_health_check=[HealthCheck.too_slow],
)
settings.load_profile("repo")

CATALOGUE_CASES = ["slice_cos", "slice_shift_cos", "radial_cos", "mixed_sin", "combined"]


@pytest.fixture(scope="session")
def circle():
    return SliceSpec.circle(64)


@pytest.fixture(scope="session")
def torus():
    return SliceSpec.torus(32)


@pytest.fixture(scope="session")
def model(circle):
    return AmbientMetric.model(circle)


@pytest.fixture(scope="session")
def alpha5(circle):
    return AmbientMetric(circle, catalogue_perturbation("slice_cos", circle, 5.0, 0.1))


def perturbed(spec, name, alpha=5.0, amplitude=0.1, **kwargs):
    return AmbientMetric(spec, catalogue_perturbation(name, spec, alpha, amplitude), **kwargs)


def cos_mode(spec, k=1, amplitude=1.0):
    from cuspcmc.curvature import GraphFunction

    x = spec.points[0]
    return GraphFunction(spec, amplitude * np.cos(2 * math.pi * k * x / spec.periods[0]))


def pytest_terminal_summary(terminalreporter):
    import sys

    module = sys.modules.get("test_acceptance")
    lines = getattr(module, "RESULTS", None)
    if lines:
        terminalreporter.section("acceptance criteria")
        for line in lines:
            terminalreporter.write_line(line)
