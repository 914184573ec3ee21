"""Constant-mean-curvature leaves and foliations near cusp ends.

The end is ``(0, inf) x T^n`` with ``g = dr^2 + e^{-2r} gbar + h``, ``gbar``
flat and ``h`` decaying like ``e^{-alpha r}``.  Leaves are graphs over the
slices found by Picard or chord-Newton iteration with a spectral Poisson
solver.
"""

__version__ = "0.1.0"

from .errors import (
    ChartError,
    ConfigError,
    ConvergenceError,
    CuspError,
    InducedMetricError,
    MetricDegenerateError,
)
from .geometry import (
    CATALOGUE,
    AmbientMetric,
    PerturbationField,
    SliceSpec,
    Term,
    catalogue_perturbation,
    christoffel_at,
    metric_at,
    ricci_normal,
)
from .curvature import (
    GraphFunction,
    linearized_mc,
    mean_curvature,
    mean_curvature_model,
    quadratic_part,
    taylor_order,
    taylor_residual,
    warped_linearization,
)
from .elliptic import SpectralLaplacian, discrete_CL, project_meanzero, solve_poisson
from .fitting import DecayFit, loglinear_fit
from .solver import (
    CMCSolution,
    FoliationReport,
    build_foliation,
    jacobi_min_eigenvalue,
    newton_solve,
    picard_solve,
)
from .isoperimetric import (
    IsoperimetricSample,
    compare_profiles,
    geodesic_disk_profile,
    slice_region_profile,
)
from .config import RunConfig, load_config, parse_config

__all__ = [name for name in dir() if not name.startswith("_")]
