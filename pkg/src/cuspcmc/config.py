"""YAML run configuration with line-numbered diagnostics.

Schema (every block optional except ``slice``)::

    slice:
      n: 1                      # 1 (circle) or 2 (torus)
      periods: [6.283185307179586]
      grid_size: [64]
    perturbation:
      name: slice_cos           # catalogue entry, see geometry.CATALOGUE
      alpha: 5.0                # decay order, must exceed 4
      amplitude: 0.1
    r_range:
      min: 2.0
      max: 8.0
      chart_margin: 0.5
    solver:
      method: picard            # picard | newton
      tol: 1.0e-10
      max_iter: 200
      eta: 0.1                  # abort once N2(u_j) exceeds this
      r0: 4.0                   # radius used by `solve`
    study:
      foliation: {r_min: 3.0, r_max: 7.0, steps: 9}
      v_grid: [0.01, 0.05, 0.1, 0.3]
      seed: 0
      samples: 20
    output:
      directory: out
"""

from dataclasses import asdict, dataclass, field, fields
import hashlib
import math

import yaml

from .errors import ConfigError
from .geometry import CATALOGUE, TWO_PI, AmbientMetric, SliceSpec, catalogue_perturbation

__all__ = [
    "SliceConfig",
    "PerturbationConfig",
    "RangeConfig",
    "SolverConfig",
    "FoliationConfig",
    "StudyConfig",
    "RunConfig",
    "load_config",
    "parse_config",
    "dump_config",
    "config_hash",
]


@dataclass(frozen=True)
class SliceConfig:
    n: int = 1
    periods: tuple = (TWO_PI,)
    grid_size: tuple = (64,)


@dataclass(frozen=True)
class PerturbationConfig:
    name: str = "zero"
    alpha: float = 5.0
    amplitude: float = 0.0


@dataclass(frozen=True)
class RangeConfig:
    min: float = 2.0
    max: float = 8.0
    chart_margin: float = 0.5


@dataclass(frozen=True)
class SolverConfig:
    method: str = "picard"
    tol: float = 1e-10
    max_iter: int = 200
    eta: float = 0.1
    r0: float = 4.0


@dataclass(frozen=True)
class FoliationConfig:
    r_min: float = 3.0
    r_max: float = 7.0
    steps: int = 9


@dataclass(frozen=True)
class StudyConfig:
    foliation: FoliationConfig = field(default_factory=FoliationConfig)
    v_grid: tuple = (0.01, 0.05, 0.1, 0.3)
    seed: int = 0
    samples: int = 20


@dataclass(frozen=True)
class OutputConfig:
    directory: str = "out"


@dataclass(frozen=True)
class RunConfig:
    slice: SliceConfig
    perturbation: PerturbationConfig = field(default_factory=PerturbationConfig)
    r_range: RangeConfig = field(default_factory=RangeConfig)
    solver: SolverConfig = field(default_factory=SolverConfig)
    study: StudyConfig = field(default_factory=StudyConfig)
    output: OutputConfig = field(default_factory=OutputConfig)

    def build_slice(self):
        return SliceSpec(self.slice.n, self.slice.periods, self.slice.grid_size)

    def build_metric(self):
        spec = self.build_slice()
        p = self.perturbation
        return AmbientMetric(
            spec,
            catalogue_perturbation(p.name, spec, p.alpha, p.amplitude),
            (self.r_range.min, self.r_range.max),
            self.r_range.chart_margin,
        )

    def to_dict(self):
        return _plain(asdict(self))


def _plain(obj):
    if isinstance(obj, dict):
        return {k: _plain(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_plain(v) for v in obj]
    return obj


# --- parsing ---------------------------------------------------------------


class _Lines:
    """1-based line of every mapping key and value, addressed by key path."""

    def __init__(self, root):
        self.map = {}
        self._walk(root, ())

    def _walk(self, node, path):
        self.map[path] = node.start_mark.line + 1
        if isinstance(node, yaml.MappingNode):
            for key, value in node.value:
                sub = path + (str(key.value),)
                self._walk(value, sub)
                self.map[sub + ("<key>",)] = key.start_mark.line + 1
        elif isinstance(node, yaml.SequenceNode):
            for i, value in enumerate(node.value):
                self._walk(value, path + (i,))

    def __call__(self, path):
        path = tuple(path)
        while path:
            if path in self.map:
                return self.map[path]
            path = path[:-1]
        return self.map.get((), None)


def _number(value, path, lines, kind=float):
    if isinstance(value, str):
        # YAML 1.1 reads 1e-10 (no dot) as a string
        try:
            value = float(value)
        except ValueError:
            pass
    if isinstance(value, bool) or not isinstance(value, (int, float)):
        raise ConfigError(f"{'.'.join(map(str, path))} must be a number, got {value!r}", lines(path))
    if kind is int:
        if isinstance(value, float) and not value.is_integer():
            raise ConfigError(f"{'.'.join(map(str, path))} must be an integer, got {value!r}", lines(path))
        return int(value)
    value = float(value)
    if not math.isfinite(value):
        raise ConfigError(f"{'.'.join(map(str, path))} must be finite", lines(path))
    return value


def _block(data, name, cls, lines, parse_field):
    path = (name,)
    raw = data.get(name, {})
    if raw is None:
        raw = {}
    if not isinstance(raw, dict):
        raise ConfigError(f"{name} must be a mapping", lines(path))
    known = {f.name: f for f in fields(cls)}
    for key in raw:
        if key not in known:
            raise ConfigError(
                f"unknown key {name}.{key}; expected one of {sorted(known)}",
                lines(path + (str(key), "<key>")),
            )
    kwargs = {}
    for key, value in raw.items():
        kwargs[key] = parse_field(key, value, path + (key,))
    return cls(**kwargs)


def _sequence(value, path, lines, kind=float):
    if not isinstance(value, (list, tuple)):
        value = [value]
    return tuple(_number(v, path + (i,), lines, kind) for i, v in enumerate(value))


def parse_config(text):
    """Parse YAML ``text`` into a validated ``RunConfig``."""
    try:
        root = yaml.compose(text, Loader=yaml.SafeLoader)
        data = yaml.safe_load(text)
    except yaml.MarkedYAMLError as exc:
        line = exc.problem_mark.line + 1 if exc.problem_mark else None
        raise ConfigError(f"invalid YAML: {exc.problem}", line) from None
    except yaml.YAMLError as exc:
        raise ConfigError(f"invalid YAML: {exc}") from None
    if root is None or not isinstance(data, dict):
        raise ConfigError("configuration must be a mapping with at least a slice block", 1)
    lines = _Lines(root)
    top = {"slice", "perturbation", "r_range", "solver", "study", "output"}
    for key in data:
        if key not in top:
            raise ConfigError(f"unknown block {key!r}; expected one of {sorted(top)}",
                              lines((str(key), "<key>")))
    if "slice" not in data:
        raise ConfigError("missing required block 'slice'", 1)

    def slice_field(key, value, path):
        if key == "n":
            return _number(value, path, lines, int)
        return _sequence(value, path, lines, float if key == "periods" else int)

    sl = _block(data, "slice", SliceConfig, lines, slice_field)
    if sl.n not in (1, 2):
        raise ConfigError(f"slice.n must be 1 or 2, got {sl.n}", lines(("slice", "n")))
    raw_slice = data["slice"] or {}
    if "periods" not in raw_slice:
        sl = SliceConfig(sl.n, (TWO_PI,) * sl.n, sl.grid_size)
    if "grid_size" not in raw_slice:
        sl = SliceConfig(sl.n, sl.periods, ((64,) if sl.n == 1 else (32, 32)))
    for key, count in (("periods", len(sl.periods)), ("grid_size", len(sl.grid_size))):
        if count != sl.n:
            raise ConfigError(f"slice.{key} needs {sl.n} entries, got {count}", lines(("slice", key)))
    if any(p <= 0 for p in sl.periods):
        raise ConfigError("slice.periods must be positive", lines(("slice", "periods")))
    if any(m < 8 or m % 2 for m in sl.grid_size):
        raise ConfigError("slice.grid_size entries must be even and at least 8",
                          lines(("slice", "grid_size")))

    def pert_field(key, value, path):
        if key == "name":
            if value not in CATALOGUE:
                raise ConfigError(f"perturbation.name {value!r} is not in the catalogue "
                                  f"{sorted(CATALOGUE)}", lines(path))
            return str(value)
        return _number(value, path, lines)

    pert = _block(data, "perturbation", PerturbationConfig, lines, pert_field)
    if not pert.alpha > 4:
        raise ConfigError(
            f"perturbation.alpha = {pert.alpha:g} is not admissible: CMC foliations of a cusp "
            "end are constructed only for perturbations decaying like e^(-alpha r) with alpha > 4",
            lines(("perturbation", "alpha")),
        )
    if pert.amplitude < 0:
        raise ConfigError("perturbation.amplitude must be non-negative",
                          lines(("perturbation", "amplitude")))

    rng = _block(data, "r_range", RangeConfig, lines, lambda k, v, p: _number(v, p, lines))
    if not 0 < rng.min < rng.max:
        raise ConfigError("r_range needs 0 < min < max", lines(("r_range",)))
    if not 0 <= rng.chart_margin < rng.min:
        raise ConfigError("r_range.chart_margin must lie in [0, min)", lines(("r_range", "chart_margin")))

    def solver_field(key, value, path):
        if key == "method":
            if value not in ("picard", "newton"):
                raise ConfigError(f"solver.method must be picard or newton, got {value!r}", lines(path))
            return value
        return _number(value, path, lines, int if key == "max_iter" else float)

    sol = _block(data, "solver", SolverConfig, lines, solver_field)
    if not sol.tol > 0 or sol.max_iter < 1 or not sol.eta > 0:
        raise ConfigError("solver.tol and solver.eta must be positive, max_iter at least 1",
                          lines(("solver",)))
    if not rng.min <= sol.r0 <= rng.max:
        raise ConfigError(f"solver.r0 = {sol.r0:g} outside r_range", lines(("solver", "r0")))

    study = _parse_study(data, lines, rng)
    out = _block(data, "output", OutputConfig, lines, lambda k, v, p: str(v))
    return RunConfig(sl, pert, rng, sol, study, out)


def _parse_study(data, lines, rng):
    raw = data.get("study") or {}
    if not isinstance(raw, dict):
        raise ConfigError("study must be a mapping", lines(("study",)))
    known = {"foliation", "v_grid", "seed", "samples"}
    for key in raw:
        if key not in known:
            raise ConfigError(f"unknown key study.{key}; expected one of {sorted(known)}",
                              lines(("study", str(key), "<key>")))
    fol = _block(raw, "foliation", FoliationConfig, lambda p: lines(("study",) + tuple(p)),
                 lambda k, v, p: _number(v, ("study",) + p, lines, int if k == "steps" else float))
    if not rng.min <= fol.r_min < fol.r_max <= rng.max or fol.steps < 2:
        raise ConfigError("study.foliation needs r_min < r_max inside r_range and steps >= 2",
                          lines(("study", "foliation")))
    v_grid = StudyConfig.v_grid
    if "v_grid" in raw:
        v_grid = _sequence(raw["v_grid"], ("study", "v_grid"), lines)
    if any(v <= 0 for v in v_grid):
        raise ConfigError("study.v_grid volumes must be positive", lines(("study", "v_grid")))
    seed = _number(raw.get("seed", 0), ("study", "seed"), lines, int)
    samples = _number(raw.get("samples", 20), ("study", "samples"), lines, int)
    return StudyConfig(fol, v_grid, seed, samples)


def load_config(path):
    try:
        with open(path, encoding="utf-8") as fh:
            text = fh.read()
    except OSError as exc:
        raise ConfigError(f"cannot read {path}: {exc.strerror}") from None
    return parse_config(text)


class _Dumper(yaml.SafeDumper):
    pass


def _float(dumper, value):
    # repr round-trips exactly; YAML needs a dot or exponent to read it back as float
    text = repr(value)
    if text in ("inf", "-inf", "nan"):
        text = {"inf": ".inf", "-inf": "-.inf", "nan": ".nan"}[text]
    elif "." not in text and "e" not in text:
        text += ".0"
    elif "e" in text and "." not in text:
        mant, exp = text.split("e")
        text = f"{mant}.0e{exp}"
    return dumper.represent_scalar("tag:yaml.org,2002:float", text)


_Dumper.add_representer(float, _float)


def dump_config(config):
    """Canonical YAML text; ``parse_config(dump_config(c)) == c``."""
    return yaml.dump(config.to_dict(), Dumper=_Dumper, sort_keys=False, default_flow_style=None)


def config_hash(config):
    return hashlib.sha256(dump_config(config).encode("utf-8")).hexdigest()
