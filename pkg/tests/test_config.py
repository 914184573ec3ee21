import pathlib

import pytest
from hypothesis import given, strategies as st

from cuspcmc.config import (
    PerturbationConfig,
    RunConfig,
    SliceConfig,
    SolverConfig,
    config_hash,
    dump_config,
    load_config,
    parse_config,
)
from cuspcmc.errors import ConfigError

CONFIGS = pathlib.Path(__file__).resolve().parents[1] / "configs"
VALID = sorted(p for p in CONFIGS.glob("*.yaml") if not p.name.startswith("broken"))

MINIMAL = "slice:\n  n: 1\n"


def _error(text):
    with pytest.raises(ConfigError) as info:
        parse_config(text)
    return info.value


def test_minimal_defaults():
    cfg = parse_config(MINIMAL)
    assert cfg.slice.grid_size == (64,)
    assert cfg.perturbation.name == "zero"
    assert cfg.build_metric().is_model


def test_torus_defaults():
    cfg = parse_config("slice: {n: 2}\n")
    assert cfg.slice.grid_size == (32, 32) and len(cfg.slice.periods) == 2


@pytest.mark.parametrize("path", VALID, ids=lambda p: p.stem)
def test_shipped_configs_round_trip(path):
    cfg = load_config(path)
    assert parse_config(dump_config(cfg)) == cfg
    assert config_hash(parse_config(dump_config(cfg))) == config_hash(cfg)
    cfg.build_metric()


def test_exponent_without_dot():
    cfg = parse_config(MINIMAL + "solver:\n  tol: 1e-10\n")
    assert cfg.solver.tol == 1e-10


def test_hash_detects_change():
    a = parse_config(MINIMAL)
    b = parse_config(MINIMAL + "solver:\n  tol: 1.0e-11\n")
    assert config_hash(a) != config_hash(b)
    assert len(config_hash(a)) == 64


def test_hash_ignores_comments_and_layout():
    a = parse_config("slice:\n  n: 1\nsolver: {tol: 1.0e-10}\n")
    b = parse_config("# comment\nslice: {n: 1}\nsolver:\n  tol: 0.0000000001\n")
    assert config_hash(a) == config_hash(b)


def test_broken_alpha_file():
    with pytest.raises(ConfigError) as info:
        load_config(CONFIGS / "broken_alpha3.yaml")
    assert info.value.line == 7
    assert str(info.value).startswith("line 7: perturbation.alpha = 3 is not admissible")
    assert "alpha > 4" in str(info.value)


@pytest.mark.parametrize("alpha", [4.0, 2.5, -1.0])
def test_inadmissible_alpha(alpha):
    err = _error(MINIMAL + f"perturbation:\n  name: slice_cos\n  alpha: {alpha}\n")
    assert err.line == 5 and "not admissible" in str(err)


@pytest.mark.parametrize(
    "text, line, fragment",
    [
        (MINIMAL + "solver:\n  metod: picard\n", 4, "unknown key solver.metod"),
        (MINIMAL + "solver:\n  method: secant\n", 4, "picard or newton"),
        (MINIMAL + "solver:\n  tol: fast\n", 4, "must be a number"),
        (MINIMAL + "solver:\n  max_iter: 2.5\n", 4, "integer"),
        (MINIMAL + "solver:\n  r0: 12.0\n", 4, "outside r_range"),
        (MINIMAL + "perturbation:\n  name: wobble\n", 4, "not in the catalogue"),
        (MINIMAL + "perturbation:\n  amplitude: -0.1\n", 4, "non-negative"),
        ("slice:\n  n: 3\n", 2, "1 or 2"),
        ("slice:\n  n: 1\n  grid_size: [7]\n", 3, "even"),
        ("slice:\n  n: 2\n  grid_size: [16]\n", 3, "needs 2 entries"),
        (MINIMAL + "study:\n  foliation: {r_min: 1.0, r_max: 7.0, steps: 5}\n", 4, "study.foliation"),
        (MINIMAL + "study:\n  v_grid: [0.1, -0.2]\n", 4, "positive"),
        (MINIMAL + "extras: 1\n", 3, "unknown block"),
        ("solver: {tol: 1.0e-10}\n", 1, "missing required block"),
    ],
)
def test_line_numbered_errors(text, line, fragment):
    err = _error(text)
    assert err.line == line
    assert fragment in str(err)
    assert str(err).startswith(f"line {line}: ")


def test_invalid_yaml():
    err = _error("slice: [1, 2\n")
    assert "invalid YAML" in str(err) and err.line is not None


def test_missing_file(tmp_path):
    with pytest.raises(ConfigError, match="cannot read"):
        load_config(tmp_path / "absent.yaml")


@given(
    tol=st.floats(1e-14, 1e-2),
    eta=st.floats(1e-6, 1.0),
    amplitude=st.floats(0.0, 1.0),
    alpha=st.floats(4.001, 12.0),
    r0=st.floats(2.0, 8.0),
    grid=st.sampled_from([8, 16, 64, 128]),
)
def test_round_trip_property(tol, eta, amplitude, alpha, r0, grid):
    cfg = RunConfig(
        SliceConfig(1, (6.283185307179586,), (grid,)),
        PerturbationConfig("combined", alpha, amplitude),
        solver=SolverConfig("newton", tol, 50, eta, r0),
    )
    again = parse_config(dump_config(cfg))
    assert again == cfg
    assert config_hash(again) == config_hash(cfg)
