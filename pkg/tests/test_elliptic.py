import math

import numpy as np
import pytest
from hypothesis import given, strategies as st

from cuspcmc.elliptic import SpectralLaplacian, discrete_CL, project_meanzero, solve_poisson
from cuspcmc.geometry import SliceSpec
from cuspcmc.validation import random_trig

from conftest import cos_mode


def test_cos_mode(circle):
    u = solve_poisson(circle, np.cos(circle.points[0]))
    assert np.abs(u.values + np.cos(circle.points[0])).max() <= 1e-14


def test_second_harmonic(circle):
    x = circle.points[0]
    u = solve_poisson(circle, np.cos(2 * x))
    assert np.abs(u.values + np.cos(2 * x) / 4).max() <= 1e-14


def test_torus_mixed_mode(torus):
    x, y = torus.points
    f = np.sin(x) * np.cos(2 * y)
    u = solve_poisson(torus, f)
    assert np.abs(u.values + f / 5).max() <= 1e-14


def test_scaled_period():
    spec = SliceSpec.circle(64, period=math.pi)
    x = spec.points[0]
    u = solve_poisson(spec, np.cos(2 * x))
    assert np.abs(u.values + np.cos(2 * x) / 4).max() <= 1e-14


def test_accepts_graph_function(circle):
    u = solve_poisson(circle, cos_mode(circle))
    assert np.abs(u.values + np.cos(circle.points[0])).max() <= 1e-14


def test_projection_violated(circle):
    with pytest.raises(ValueError, match="projection violated"):
        solve_poisson(circle, np.cos(circle.points[0]) + 1e-3)


def test_zero_rhs(circle):
    assert np.all(solve_poisson(circle, np.zeros(circle.shape)).values == 0.0)


def test_project_meanzero(circle):
    f = project_meanzero(np.cos(circle.points[0]) + 2.0)
    assert abs(f.mean()) <= 1e-15


def test_eigenvalues(circle, torus):
    lam = SpectralLaplacian(circle).eigenvalues
    assert lam[0] == 0.0 and lam[1] == pytest.approx(-1.0) and lam[2] == pytest.approx(-4.0)
    lam2 = SpectralLaplacian(torus).eigenvalues
    assert lam2[1, 1] == pytest.approx(-2.0)


def test_apply_inverts_solve(torus):
    f = random_trig(torus, np.random.default_rng(1), mean_zero=True).values
    f = f - f.mean()
    lap = SpectralLaplacian(torus)
    assert np.abs(lap.apply(solve_poisson(torus, f).values) - f).max() <= 1e-12


@pytest.mark.parametrize(
    "spec, expected",
    [
        (SliceSpec.circle(64), 3.0),
        (SliceSpec.torus(32), 3.0),
        (SliceSpec.circle(64, period=math.pi), 1.75),
    ],
    ids=["circle", "torus", "short-circle"],
)
def test_discrete_constant(spec, expected):
    assert discrete_CL(spec) == pytest.approx(expected, rel=1e-12)


@given(seed=st.integers(0, 2**32 - 1), n=st.sampled_from([1, 2]), modes=st.integers(1, 4))
def test_bound_property(seed, n, modes):
    spec = SliceSpec.circle(64) if n == 1 else SliceSpec.torus(32)
    f = random_trig(spec, np.random.default_rng(seed), modes=modes, mean_zero=True).values
    f = f - f.mean()
    u = solve_poisson(spec, f)
    assert u.n2 <= discrete_CL(spec) * np.abs(f).max() * (1 + 1e-12)
    assert abs(u.mean) <= 1e-13


@given(k=st.integers(1, 20), phase=st.floats(0, 2 * math.pi))
def test_single_mode_bound(k, phase):
    spec = SliceSpec.circle(64)
    f = np.cos(k * spec.points[0] + phase)
    f = f - f.mean()
    u = solve_poisson(spec, f)
    assert u.n2 <= discrete_CL(spec) * np.abs(f).max() * (1 + 1e-9)


@given(seed=st.integers(0, 2**32 - 1), n=st.sampled_from([1, 2]))
def test_inverse_property(seed, n):
    spec = SliceSpec.circle(64) if n == 1 else SliceSpec.torus(32)
    f = random_trig(spec, np.random.default_rng(seed), mean_zero=True).values
    f = f - f.mean()
    u = solve_poisson(spec, f)
    lap = SpectralLaplacian(spec)
    assert np.abs(lap.apply(u.values) - f).max() <= 1e-12 * np.abs(f).max()
    assert abs(u.mean) <= 1e-13
