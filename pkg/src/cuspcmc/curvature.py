r"""Mean curvature of graphs ``S_{r0}(u) = {(r0 + u(x), x)}`` over slices.

The hypersurface is the zero set of ``F(r, x) = r - r0 - u(x)``.  Tangent
vectors ``T_i = d_i u dr + d_i`` are g-orthogonal to ``grad F`` and

    H = |grad F|^{-1} ghat^{ij} Hess F(T_i, T_j),

with ``ghat`` the induced metric.  The sign is fixed by the normal pointing
towards increasing ``r``: model slices have ``H = -n``.

The error terms of the expansion of ``H`` around a slice are never coded
from closed formulas; they are extracted as residuals between the full
numerical quantity and the model expression.
"""

from dataclasses import dataclass
from functools import cached_property

import numpy as np

from .errors import ChartError, InducedMetricError
from .fitting import loglog_slope
from .geometry import SliceSpec, christoffel_symbols

__all__ = [
    "GraphFunction",
    "GraphGeometry",
    "CurvatureReport",
    "QuadraticPart",
    "graph_geometry",
    "mean_curvature",
    "mean_curvature_model",
    "linearized_mc",
    "linear_error_term",
    "quadratic_part",
    "taylor_remainders",
    "taylor_residual",
    "taylor_order",
    "warped_linearization",
    "exponential_warping",
    "cone_warping",
]

FIRST_STEPS = (1e-5, 5e-6)
# second differences lose ~h^-2 digits; larger steps keep rounding below truncation
SECOND_STEPS = (1e-3, 5e-4)
# steps for g-minus-model gaps: the common-mode model truncation has cancelled,
# so rounding is the binding constraint
GAP_FIRST_STEPS = (1e-3, 5e-4)
GAP_SECOND_STEPS = (1e-2, 5e-3)


def scaled_steps(base, r0):
    """Shrink difference steps like ``e^{-r0}`` beyond ``r0 = 2``.

    The t-expansion of ``H(r0, t u)`` has scale ``t ~ e^{-r0}``; fixed steps
    would let truncation dominate at large radii.
    """
    f = float(np.exp(-max(r0 - 2.0, 0.0)))
    return tuple(h * f for h in base)


@dataclass(frozen=True)
class GraphFunction:
    """Samples of ``u`` on the slice grid with cached spectral derivatives."""

    slice: SliceSpec
    values: np.ndarray

    def __post_init__(self):
        vals = np.array(self.values, dtype=float)
        if vals.shape != self.slice.shape:
            raise ValueError(f"values have shape {vals.shape}, grid is {self.slice.shape}")
        if not np.all(np.isfinite(vals)):
            raise ValueError("graph function has non-finite samples")
        vals.setflags(write=False)
        object.__setattr__(self, "values", vals)

    @classmethod
    def zeros(cls, slice_spec):
        return cls(slice_spec, np.zeros(slice_spec.shape))

    @classmethod
    def constant(cls, slice_spec, c):
        return cls(slice_spec, np.full(slice_spec.shape, float(c)))

    @classmethod
    def from_function(cls, slice_spec, func):
        return cls(slice_spec, slice_spec.evaluate(func))

    def with_values(self, values):
        return GraphFunction(self.slice, values)

    def scaled(self, t):
        return self.with_values(t * self.values)

    def shifted(self, c):
        return self.with_values(self.values + c)

    def projected(self):
        """Mean-zero part ``u - mean(u)``."""
        return self.with_values(self.values - self.mean)

    @cached_property
    def mean(self):
        return float(np.mean(self.values))

    @cached_property
    def gradient(self):
        return self.slice.gradient(self.values)

    @cached_property
    def hessian(self):
        return self.slice.hessian(self.values)

    @cached_property
    def laplacian(self):
        return np.trace(self.hessian, axis1=0, axis2=1)

    @cached_property
    def sup(self):
        return float(np.abs(self.values).max())

    @cached_property
    def n2(self):
        """Discrete C^2 proxy ``max(|u|, |du|, |d^2 u|)`` in sup norms."""
        return max(self.sup, float(np.abs(self.gradient).max()),
                   float(np.abs(self.hessian).max()))

    @property
    def is_zero(self):
        return not np.any(self.values)


@dataclass(frozen=True)
class GraphGeometry:
    """Pointwise geometry of a graph; arrays have grid shape plus tensor axes."""

    r: np.ndarray
    grad_norm: np.ndarray          # |grad F|
    normal: np.ndarray             # unit normal nu^a
    induced: np.ndarray            # ghat_ij
    induced_inv: np.ndarray        # ghat^ij
    second_form: np.ndarray        # II_ij
    mean_curvature: np.ndarray     # H
    area_density: np.ndarray       # sqrt(det ghat)

    @cached_property
    def norm_a_squared(self):
        inv = self.induced_inv
        return np.einsum("...ik,...jl,...ij,...kl->...", inv, inv,
                         self.second_form, self.second_form)


def graph_geometry(g, r0, u):
    """Assemble induced metric, normal and second fundamental form of ``S_{r0}(u)``."""
    spec = u.slice
    r = r0 + u.values
    lo, hi = g.chart
    if r.min() < lo or r.max() > hi:
        raise ChartError(
            f"graph leaves chart: r in [{r.min():.6g}, {r.max():.6g}] outside [{lo}, {hi}]"
        )
    x = spec.points
    n, d = spec.n, spec.n + 1
    G = g.metric(r, x)
    ginv = g.inverse(G)
    gamma = christoffel_symbols(ginv, g.first_derivatives(r, x))

    du = np.moveaxis(u.gradient, 0, -1)
    ddu = np.moveaxis(u.hessian, (0, 1), (-2, -1))
    dF = np.concatenate([np.ones(spec.shape + (1,)), -du], axis=-1)
    gradF = np.einsum("...ab,...b->...a", ginv, dF)
    grad_norm = np.sqrt(np.einsum("...a,...a->...", dF, gradF))

    ddF = np.zeros(spec.shape + (d, d))
    ddF[..., 1:, 1:] = -ddu
    hessF = ddF - np.einsum("...cab,...c->...ab", gamma, dF)

    T = np.zeros(spec.shape + (n, d))
    T[..., :, 0] = du
    T[..., np.arange(n), np.arange(n) + 1] = 1.0
    induced = np.einsum("...ia,...ab,...jb->...ij", T, G, T)
    det = np.linalg.det(induced)
    if not np.all(det > 0):
        raise InducedMetricError("induced metric singular")
    induced_inv = np.linalg.inv(induced)
    second_form = np.einsum("...ia,...ab,...jb->...ij", T, hessF, T) / grad_norm[..., None, None]
    H = np.einsum("...ij,...ij->...", induced_inv, second_form)
    return GraphGeometry(
        r=r,
        grad_norm=grad_norm,
        normal=gradF / grad_norm[..., None],
        induced=induced,
        induced_inv=induced_inv,
        second_form=second_form,
        mean_curvature=H,
        area_density=np.sqrt(det),
    )


def _h_field(g, r0, u):
    return graph_geometry(g, r0, u).mean_curvature


@dataclass(frozen=True)
class CurvatureReport:
    """Mean curvature of one graph plus the slice error terms at ``u = 0``.

    ``EF0`` and ``EH0`` are defined by ``|grad F| = sqrt(1 + EF0)`` and
    ``sqrt(1 + EF0) H(r0, 0, g) = -n + EH0`` on the base slice.
    """

    H_field: np.ndarray
    H_mean: float
    residual: float
    EF0: np.ndarray
    EH0: np.ndarray

    @property
    def weight(self):
        """``sqrt(1 + EF0)``, the slice value of ``|grad F|``."""
        return np.sqrt(1.0 + self.EF0)


def base_error_terms(g, r0, slice_spec):
    geo = graph_geometry(g, r0, GraphFunction.zeros(slice_spec))
    n = slice_spec.n
    EF0 = geo.grad_norm**2 - 1.0
    EH0 = geo.grad_norm * geo.mean_curvature + n
    return EF0, EH0, geo


def mean_curvature(g, r0, u):
    """Mean curvature field of ``S_{r0}(u)`` with area-weighted mean and residual."""
    EF0, EH0, base = base_error_terms(g, r0, u.slice)
    geo = base if u.is_zero else graph_geometry(g, r0, u)
    H = geo.mean_curvature
    w = geo.area_density
    H_mean = float(np.sum(H * w) / np.sum(w))
    return CurvatureReport(
        H_field=H,
        H_mean=H_mean,
        residual=float(np.abs(H - H_mean).max()),
        EF0=EF0,
        EH0=EH0,
    )


def mean_curvature_model(r0, u):
    """Closed-form mean curvature of ``S_{r0}(u)`` in the unperturbed cusp."""
    n = u.slice.n
    r = r0 + u.values
    e2 = np.exp(2.0 * r)
    du = u.gradient
    grad2 = np.sum(du**2, axis=0)
    hess_uu = np.einsum("ij...,i...,j...->...", u.hessian, du, du)
    denom = 1.0 + e2 * grad2
    bracket = -e2 * u.laplacian + e2**2 * hess_uu / denom - e2 * grad2 / denom - n
    return bracket / np.sqrt(denom)


def _richardson(d1, d2, h1, h2, order=2):
    q = (h1 / h2) ** order
    return (q * d2 - d1) / (q - 1.0)


def _first_difference(g, r0, u, steps):
    h1, h2 = steps
    d = []
    for h in (h1, h2):
        hp = _h_field(g, r0, u.scaled(h))
        hm = _h_field(g, r0, u.scaled(-h))
        d.append((hp - hm) / (2.0 * h))
    return _richardson(d[0], d[1], h1, h2)


def _second_difference(g, r0, u, steps):
    h1, h2 = steps
    H0 = _h_field(g, r0, u.scaled(0.0))
    s = []
    for h in (h1, h2):
        hp = _h_field(g, r0, u.scaled(h))
        hm = _h_field(g, r0, u.scaled(-h))
        s.append((hp - 2.0 * H0 + hm) / h**2)
    return _richardson(s[0], s[1], h1, h2)


def linearized_mc(g, r0, u, steps=None):
    """``d/dt H(r0, t u, g)`` at ``t = 0`` by Richardson-extrapolated central differences.

    ``steps`` defaults to ``FIRST_STEPS`` shrunk by :func:`scaled_steps`.
    """
    return _first_difference(g, r0, u, steps or scaled_steps(FIRST_STEPS, r0))


def linear_error_term(g, r0, u, steps=None):
    """Residual ``E^L = sqrt(1 + EF0) dH/dt + e^{2 r0} Lap u``.

    The derivative is split as the exact model value plus the difference
    quotient of ``H_g - H_model`` taken with identical steps, so the model's
    truncation error cancels.
    """
    steps = steps or scaled_steps(GAP_FIRST_STEPS, r0)
    EF0, _, _ = base_error_terms(g, r0, u.slice)
    W = np.sqrt(1.0 + EF0)
    model_lin = -np.exp(2.0 * r0) * u.laplacian
    if g.is_model:
        return (W - 1.0) * model_lin
    gap = _first_difference(g, r0, u, steps) - _first_difference(g.model_counterpart(), r0, u, steps)
    return W * gap + (W - 1.0) * model_lin


@dataclass(frozen=True)
class QuadraticPart:
    """Second t-derivative of ``H(r0, t u, g)``: quadratic bracket vs finite differences.

    ``analytic`` is the bracket (with ``E^Q = 0``) divided by
    ``sqrt(1 + EF0)``, ``numerical`` the difference quotient, and ``error``
    the extracted ``E^Q`` (computed against the model with identical steps).
    """

    analytic: np.ndarray
    numerical: np.ndarray
    error: np.ndarray


def _bracket(u, r0, EF0):
    n = u.slice.n
    e2 = np.exp(2.0 * r0)
    grad2 = np.sum(u.gradient**2, axis=0)
    return (-4.0 * e2 * u.values * u.laplacian - 2.0 * e2 * grad2
            + n * e2 * grad2 / (1.0 + EF0))


def quadratic_part(g, r0, u, steps=None):
    EF0, _, _ = base_error_terms(g, r0, u.slice)
    W = np.sqrt(1.0 + EF0)
    bracket = _bracket(u, r0, EF0)
    numerical = _second_difference(g, r0, u, steps or scaled_steps(SECOND_STEPS, r0))
    if g.is_model:
        error = W * numerical - bracket
    else:
        # in the model the second derivative equals the bracket with EF0 = 0
        model_exact = _bracket(u, r0, 0.0)
        gap_steps = steps or scaled_steps(GAP_SECOND_STEPS, r0)
        gap = (_second_difference(g, r0, u, gap_steps)
               - _second_difference(g.model_counterpart(), r0, u, gap_steps))
        error = W * (gap + model_exact) - bracket
    return QuadraticPart(analytic=bracket / W, numerical=numerical, error=error)


def taylor_remainders(g, r0, u, ts):
    """Sup-norm remainders ``|H(tu) - H(0) - t L - t^2 Q / 2|`` for each ``t``."""
    if u.is_zero:
        return [0.0 for _ in ts]
    H0 = _h_field(g, r0, u.scaled(0.0))
    lin = linearized_mc(g, r0, u)
    quad = quadratic_part(g, r0, u).numerical
    out = []
    for t in ts:
        Ht = _h_field(g, r0, u.scaled(t))
        out.append(float(np.abs(Ht - (H0 + t * lin + 0.5 * t * t * quad)).max()))
    return out


def taylor_residual(g, r0, u, t):
    return taylor_remainders(g, r0, u, [t])[0]


def taylor_order(g, r0, u, ts=(1e-2, 1e-3, 1e-4)):
    """Fitted order of the second-order Taylor remainder in ``t``."""
    return loglog_slope(ts, taylor_remainders(g, r0, u, ts))


def exponential_warping(r):
    """Cusp warping ``phi = e^{-r}`` with its first two derivatives."""
    e = np.exp(-r)
    return e, -e, e


def cone_warping(r):
    """Cone-like warping ``phi = r``."""
    return r, 1.0, 0.0


def warped_linearization(phi, r, u):
    r"""Linearized mean curvature for ``dr^2 + phi(r)^2 gbar``.

    ``L_r u = -phi^{-2} (Lap u + n u (phi'^2 - phi phi''))``; ``phi`` returns
    ``(phi, phi', phi'')`` at ``r``.
    """
    p, dp, ddp = phi(r)
    if not p > 0:
        raise ValueError("warping must be positive")
    n = u.slice.n
    return -(u.laplacian + n * u.values * (dp * dp - p * ddp)) / p**2
