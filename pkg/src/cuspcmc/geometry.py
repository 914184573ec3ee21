r"""Cusp ends over flat tori and their perturbations.

The end is ``N = (0, inf) x T^n`` with coordinates ``(r, x_1, ..., x_n)`` and
metric

    g = dr^2 + e^{-2r} gbar + h,

where ``gbar`` is the flat metric (identity in periodic coordinates) and ``h``
is a perturbation decaying like ``e^{-alpha r}``.  Index 0 is always the
radial direction.

All evaluators are vectorized: ``r`` is an array of any shape ``S`` and ``x``
a tuple of ``n`` arrays broadcastable to ``S``.  Tensor indices are appended
as trailing axes, e.g. the metric has shape ``S + (n+1, n+1)`` and its first
derivatives ``S + (n+1, n+1, n+1)`` with the differentiation index first,
``dg[..., m, i, j] = d_m g_ij``.
"""

from dataclasses import dataclass
from functools import cached_property
import math

import numpy as np

from .errors import MetricDegenerateError

__all__ = [
    "SliceSpec",
    "Term",
    "PerturbationField",
    "AmbientMetric",
    "CATALOGUE",
    "catalogue_perturbation",
    "metric_at",
    "christoffel_at",
    "ricci_normal",
    "christoffel_symbols",
    "christoffel_derivatives",
    "ricci_from_christoffel",
    "fd_metric_derivatives",
    "fd_christoffel",
]

TWO_PI = 2.0 * math.pi


@dataclass(frozen=True)
class SliceSpec:
    """A flat torus ``T^n`` sampled on a uniform periodic grid.

    ``periods`` are the circumferences and ``grid_size`` the number of samples
    along each axis.  Spectral derivative helpers live here because the grid
    owns the wavenumbers.
    """

    n: int
    periods: tuple = (TWO_PI,)
    grid_size: tuple = (64,)

    def __post_init__(self):
        object.__setattr__(self, "periods", tuple(float(p) for p in self.periods))
        object.__setattr__(self, "grid_size", tuple(int(m) for m in self.grid_size))
        if self.n not in (1, 2):
            raise ValueError(f"slice dimension must be 1 or 2, got {self.n}")
        if len(self.periods) != self.n or len(self.grid_size) != self.n:
            raise ValueError("periods and grid_size need one entry per slice dimension")
        if any(not p > 0 for p in self.periods):
            raise ValueError(f"periods must be positive, got {self.periods}")
        if any(m < 8 or m % 2 for m in self.grid_size):
            raise ValueError(f"grid sizes must be even and >= 8, got {self.grid_size}")

    @classmethod
    def circle(cls, grid_size=64, period=TWO_PI):
        return cls(1, (period,), (grid_size,))

    @classmethod
    def torus(cls, grid_size=32, periods=(TWO_PI, TWO_PI)):
        if np.isscalar(grid_size):
            grid_size = (grid_size, grid_size)
        return cls(2, tuple(periods), tuple(grid_size))

    @property
    def shape(self):
        return self.grid_size

    @property
    def dim(self):
        """Dimension of the ambient end, ``n + 1``."""
        return self.n + 1

    @property
    def area(self):
        """Flat volume ``|Sigma|``."""
        return math.prod(self.periods)

    @property
    def cell_volume(self):
        return self.area / math.prod(self.grid_size)

    @cached_property
    def axes(self):
        return tuple(
            np.arange(m) * (p / m) for p, m in zip(self.periods, self.grid_size)
        )

    @cached_property
    def points(self):
        """Grid coordinates as a tuple of ``n`` arrays of shape ``grid_size``."""
        return tuple(np.meshgrid(*self.axes, indexing="ij"))

    @cached_property
    def wavenumbers(self):
        """Angular wavenumbers per axis, broadcast to the grid shape."""
        ks = [
            np.fft.fftfreq(m, d=p / m) * TWO_PI
            for p, m in zip(self.periods, self.grid_size)
        ]
        return tuple(np.meshgrid(*ks, indexing="ij"))

    @cached_property
    def _nyquist(self):
        masks = []
        for a, m in enumerate(self.grid_size):
            idx = np.meshgrid(*[np.arange(s) for s in self.grid_size], indexing="ij")[a]
            masks.append(idx == m // 2)
        return tuple(masks)

    @cached_property
    def _ik(self):
        # first-derivative multipliers; the Nyquist mode has no real derivative
        out = []
        for k, nyq in zip(self.wavenumbers, self._nyquist):
            ik = 1j * k
            ik[nyq] = 0.0
            out.append(ik)
        return tuple(out)

    @cached_property
    def nyquist_mask(self):
        """True on Fourier modes that sit on the Nyquist frequency of any axis."""
        mask = np.zeros(self.grid_size, dtype=bool)
        for nyq in self._nyquist:
            mask |= nyq
        return mask

    def evaluate(self, func):
        """Sample ``func(*points)`` on the grid."""
        return np.broadcast_to(np.asarray(func(*self.points), dtype=float), self.shape).copy()

    def mean(self, values):
        return float(np.mean(values))

    def gradient(self, values):
        """Spectral gradient, shape ``(n,) + grid``."""
        fh = np.fft.fftn(values)
        return np.stack([np.fft.ifftn(ik * fh).real for ik in self._ik])

    def hessian(self, values):
        """Spectral Hessian, shape ``(n, n) + grid``."""
        fh = np.fft.fftn(values)
        n = self.n
        out = np.empty((n, n) + self.shape)
        for a in range(n):
            out[a, a] = np.fft.ifftn(-(self.wavenumbers[a] ** 2) * fh).real
            for b in range(a + 1, n):
                out[a, b] = out[b, a] = np.fft.ifftn(self._ik[a] * self._ik[b] * fh).real
        return out

    def laplacian(self, values):
        k2 = sum(k**2 for k in self.wavenumbers)
        return np.fft.ifftn(-k2 * np.fft.fftn(values)).real


@dataclass(frozen=True)
class Term:
    """One separable summand ``coef * exp(-rate r) * T(kappa x_axis)`` of ``h_ij``.

    ``kind`` is ``"const"``, ``"cos"`` or ``"sin"``; ``i <= j`` are ambient
    indices (0 = radial).
    """

    i: int
    j: int
    rate: float
    coef: float
    kind: str = "const"
    axis: int = 0
    kappa: float = 0.0

    def __post_init__(self):
        if self.kind not in ("const", "cos", "sin"):
            raise ValueError(f"unknown trigonometric kind {self.kind!r}")

    def _trig(self, x, order):
        """``order``-th derivative of the trigonometric factor."""
        if self.kind == "const":
            base = np.ones_like(x[self.axis]) if order == 0 else np.zeros_like(x[self.axis])
            return base
        phase = self.kappa * x[self.axis]
        return self.kappa**order * _trig_cycle(self.kind, order)(phase)

    def evaluate(self, r, x, dr=0, dx=(0,)):
        """Mixed derivative ``d_r^dr d_x^dx`` of the term.

        ``dx`` counts derivatives along each slice axis; only the term's own
        axis contributes.
        """
        radial = (-self.rate) ** dr * np.exp(-self.rate * r)
        order = 0
        for a, count in enumerate(dx):
            if count and a != self.axis:
                return np.zeros(np.broadcast(r, *x).shape)
            if a == self.axis:
                order = count
        return self.coef * radial * self._trig(x, order)

    def bound(self):
        return abs(self.coef)


def _trig_cycle(kind, order):
    # cos -> -sin -> -cos -> sin -> cos under d/dx (kappa factored out)
    funcs = (np.cos, lambda p: -np.sin(p), lambda p: -np.cos(p), np.sin)
    start = 0 if kind == "cos" else 3
    return funcs[(start + order) % 4]


@dataclass(frozen=True)
class PerturbationField:
    """Perturbation ``h = amplitude * sum(terms)`` with declared decay order.

    The constructor checks ``alpha > 4`` and that every term decays at least
    like ``e^{-alpha r}``; ``constant`` is the declared ``C`` in
    ``|h_ij| <= C e^{-alpha r}`` and is verified by sampling in
    :meth:`check_decay`.
    """

    n: int
    alpha: float
    terms: tuple = ()
    amplitude: float = 0.0
    name: str = "custom"

    def __post_init__(self):
        object.__setattr__(self, "terms", tuple(self.terms))
        if not self.alpha > 4:
            raise ValueError(
                f"decay order alpha must exceed 4, got {self.alpha}"
            )
        if self.amplitude < 0:
            raise ValueError("amplitude must be non-negative")
        d = self.n + 1
        for t in self.terms:
            if not (0 <= t.i <= t.j < d) or not (0 <= t.axis < self.n):
                raise ValueError(f"term indices out of range: {t}")
            if t.rate < self.alpha:
                raise ValueError(
                    f"term decays like e^(-{t.rate} r), slower than the declared alpha={self.alpha}"
                )

    @classmethod
    def zero(cls, n, alpha=5.0):
        return cls(n=n, alpha=alpha, terms=(), amplitude=0.0, name="zero")

    @property
    def is_zero(self):
        return self.amplitude == 0.0 or not self.terms

    @property
    def constant(self):
        """Declared constant ``C`` of the decay bound (sum of |coef| per component)."""
        per = {}
        for t in self.terms:
            per[(t.i, t.j)] = per.get((t.i, t.j), 0.0) + t.bound()
        return self.amplitude * max(per.values(), default=0.0)

    def _assemble(self, r, x, dr, dxs):
        d = self.n + 1
        shape = np.broadcast(r, *x).shape
        out = np.zeros(shape + (d, d))
        if self.is_zero:
            return out
        for t in self.terms:
            val = self.amplitude * t.evaluate(r, x, dr, dxs)
            out[..., t.i, t.j] += val
            if t.i != t.j:
                out[..., t.j, t.i] += val
        return out

    def _derivs(self, x_idx):
        """Convert ambient derivative indices into (dr, dx) counts."""
        dr = sum(1 for m in x_idx if m == 0)
        dx = tuple(sum(1 for m in x_idx if m == a + 1) for a in range(self.n))
        return dr, dx

    def values(self, r, x):
        return self._assemble(r, x, 0, (0,) * self.n)

    def first(self, r, x):
        """``dh[..., m, i, j] = d_m h_ij``."""
        d = self.n + 1
        shape = np.broadcast(r, *x).shape
        out = np.zeros(shape + (d, d, d))
        for m in range(d):
            out[..., m, :, :] = self._assemble(r, x, *self._derivs((m,)))
        return out

    def second(self, r, x):
        """``ddh[..., m, p, i, j] = d_m d_p h_ij``."""
        d = self.n + 1
        shape = np.broadcast(r, *x).shape
        out = np.zeros(shape + (d, d, d, d))
        for m in range(d):
            for p in range(m, d):
                val = self._assemble(r, x, *self._derivs((m, p)))
                out[..., m, p, :, :] = val
                out[..., p, m, :, :] = val
        return out

    def component(self, i, j):
        """Scalar evaluator ``h_ij(r, x)``."""
        return lambda r, *x: self.values(np.asarray(r, float), x)[..., i, j]

    def check_decay(self, slice_spec, r_values):
        """Return max over samples of ``e^{alpha r} |h_ij|``; raise if above ``C``."""
        worst = 0.0
        for r in r_values:
            h = self.values(np.full(slice_spec.shape, float(r)), slice_spec.points)
            worst = max(worst, float(np.exp(self.alpha * r) * np.abs(h).max()))
        if worst > self.constant * (1.0 + 1e-12) + 1e-300:
            raise ValueError(
                f"perturbation violates its decay bound: sampled {worst:.3e} > C={self.constant:.3e}"
            )
        return worst


def _slice_cos(spec, alpha):
    return [
        Term(a + 1, a + 1, alpha, 1.0, "cos", a, TWO_PI / spec.periods[a])
        for a in range(spec.n)
    ]


def _slice_shift_cos(spec, alpha):
    terms = []
    for a in range(spec.n):
        terms.append(Term(a + 1, a + 1, alpha, 1.0, "const", a))
        terms.append(Term(a + 1, a + 1, alpha, 1.0, "cos", a, TWO_PI / spec.periods[a]))
    return terms


def _radial_cos(spec, alpha):
    return [Term(0, 0, alpha, 1.0, "cos", 0, TWO_PI / spec.periods[0])]


def _mixed_sin(spec, alpha):
    return [Term(0, 1, alpha, 1.0, "sin", 0, TWO_PI / spec.periods[0])]


def _combined(spec, alpha):
    terms = _slice_shift_cos(spec, alpha) + _radial_cos(spec, alpha) + _mixed_sin(spec, alpha)
    if spec.n == 2:
        terms.append(Term(1, 2, alpha, 0.5, "cos", 1, TWO_PI / spec.periods[1]))
    return terms


CATALOGUE = {
    "zero": lambda spec, alpha: [],
    "slice_cos": _slice_cos,
    "slice_shift_cos": _slice_shift_cos,
    "radial_cos": _radial_cos,
    "mixed_sin": _mixed_sin,
    "combined": _combined,
}
"""Built-in perturbations, each ``e^{-alpha r}`` times a trigonometric polynomial.

* ``slice_cos``: ``h_aa = eps e^{-alpha r} cos(2 pi x_a / L_a)`` on slice axes.
* ``slice_shift_cos``: as above with ``1 + cos``, so the slices' mean
  curvature shifts on average.
* ``radial_cos``: ``h_rr = eps e^{-alpha r} cos(2 pi x_1 / L_1)``.
* ``mixed_sin``: ``h_r1 = eps e^{-alpha r} sin(2 pi x_1 / L_1)``.
* ``combined``: sum of the three above (plus an ``h_12`` term when n = 2).
"""


def catalogue_perturbation(name, slice_spec, alpha, amplitude):
    try:
        build = CATALOGUE[name]
    except KeyError:
        raise ValueError(
            f"unknown perturbation {name!r}; choose one of {sorted(CATALOGUE)}"
        ) from None
    terms = build(slice_spec, float(alpha))
    return PerturbationField(
        n=slice_spec.n, alpha=float(alpha), terms=tuple(terms),
        amplitude=float(amplitude) if terms else 0.0, name=name,
    )


def christoffel_symbols(ginv, dg):
    """``Gamma[..., k, i, j]`` from the inverse metric and ``dg[..., m, i, j]``."""
    # lowered symbols: Gamma_lij = (d_i g_lj + d_j g_li - d_l g_ij) / 2
    low = 0.5 * (
        np.swapaxes(dg, -3, -2)
        + np.moveaxis(np.swapaxes(dg, -3, -2), -1, -2)
        - dg
    )
    return np.einsum("...kl,...lij->...kij", ginv, low)


def christoffel_derivatives(ginv, dg, ddg):
    """``dGamma[..., m, k, i, j] = d_m Gamma^k_ij``."""
    dginv = -np.einsum("...ka,...mab,...bl->...mkl", ginv, dg, ginv)
    low = 0.5 * (
        np.swapaxes(dg, -3, -2)
        + np.moveaxis(np.swapaxes(dg, -3, -2), -1, -2)
        - dg
    )
    # derivative of the lowered symbols along m
    dlow = 0.5 * (
        np.swapaxes(ddg, -3, -2)
        + np.moveaxis(np.swapaxes(ddg, -3, -2), -1, -2)
        - ddg
    )
    return (
        np.einsum("...mkl,...lij->...mkij", dginv, low)
        + np.einsum("...kl,...mlij->...mkij", ginv, dlow)
    )


def ricci_from_christoffel(gamma, dgamma):
    """Ricci tensor ``R_ij = d_k G^k_ij - d_j G^k_ik + G^k_kl G^l_ij - G^k_jl G^l_ik``."""
    term1 = np.einsum("...kkij->...ij", dgamma)
    term2 = np.einsum("...jkik->...ij", dgamma)
    term3 = np.einsum("...kkl,...lij->...ij", gamma, gamma)
    term4 = np.einsum("...kjl,...lik->...ij", gamma, gamma)
    return term1 - term2 + term3 - term4


@dataclass(frozen=True)
class AmbientMetric:
    """``g = g_N + h`` on the end.

    ``r_range`` is the working range for leaf radii; graphs may stray
    ``chart_margin`` beyond it.  Construction samples the perturbation on the
    slice grid at the ends of that chart to check the decay bound and
    positive definiteness (``h`` decays, so the lower end dominates).
    """

    slice: SliceSpec
    perturbation: PerturbationField = None
    r_range: tuple = (2.0, 8.0)
    chart_margin: float = 0.5

    def __post_init__(self):
        if self.perturbation is None:
            object.__setattr__(self, "perturbation", PerturbationField.zero(self.slice.n))
        if self.perturbation.n != self.slice.n:
            raise ValueError("perturbation and slice dimensions differ")
        lo, hi = (float(v) for v in self.r_range)
        if not 0 < lo < hi:
            raise ValueError(f"invalid r-range {self.r_range}")
        object.__setattr__(self, "r_range", (lo, hi))
        if not 0 <= self.chart_margin < lo:
            raise ValueError("chart margin must be non-negative and below r_min")
        if not self.perturbation.is_zero:
            self.perturbation.check_decay(self.slice, self.chart)
            for r in self.chart:
                g = self.metric(np.full(self.slice.shape, r), self.slice.points)
                if np.linalg.eigvalsh(g).min() <= 0:
                    raise MetricDegenerateError(
                        f"metric degenerate at point: not positive definite at r={r}"
                    )

    @classmethod
    def model(cls, slice_spec, r_range=(2.0, 8.0), chart_margin=0.5):
        return cls(slice_spec, PerturbationField.zero(slice_spec.n), r_range, chart_margin)

    def model_counterpart(self):
        """The unperturbed cusp on the same slice and chart."""
        if self.is_model:
            return self
        return AmbientMetric.model(self.slice, self.r_range, self.chart_margin)

    @property
    def n(self):
        return self.slice.n

    @property
    def chart(self):
        """Radii a graph may visit: the working range widened by ``chart_margin``."""
        lo, hi = self.r_range
        return (lo - self.chart_margin, hi + self.chart_margin)

    @property
    def is_model(self):
        return self.perturbation.is_zero

    @staticmethod
    def warping(r):
        """Model warping ``phi(r) = e^{-r}``."""
        return np.exp(-r)

    def _shape(self, r, x):
        return np.broadcast(r, *x).shape

    def metric(self, r, x):
        r = np.asarray(r, float)
        d = self.n + 1
        g = np.zeros(self._shape(r, x) + (d, d))
        g[..., 0, 0] = 1.0
        e = np.exp(-2.0 * r)
        for a in range(1, d):
            g[..., a, a] = e
        if not self.perturbation.is_zero:
            g += self.perturbation.values(r, x)
        return g

    def first_derivatives(self, r, x):
        r = np.asarray(r, float)
        d = self.n + 1
        dg = np.zeros(self._shape(r, x) + (d, d, d))
        e = np.exp(-2.0 * r)
        for a in range(1, d):
            dg[..., 0, a, a] = -2.0 * e
        if not self.perturbation.is_zero:
            dg += self.perturbation.first(r, x)
        return dg

    def second_derivatives(self, r, x):
        r = np.asarray(r, float)
        d = self.n + 1
        ddg = np.zeros(self._shape(r, x) + (d, d, d, d))
        e = np.exp(-2.0 * r)
        for a in range(1, d):
            ddg[..., 0, 0, a, a] = 4.0 * e
        if not self.perturbation.is_zero:
            ddg += self.perturbation.second(r, x)
        return ddg

    def inverse(self, g):
        try:
            ginv = np.linalg.inv(g)
        except np.linalg.LinAlgError:
            raise MetricDegenerateError("metric degenerate at point: singular") from None
        return ginv

    def christoffel(self, r, x):
        g = self.metric(r, x)
        return christoffel_symbols(self.inverse(g), self.first_derivatives(r, x))

    def ricci(self, r, x):
        g = self.metric(r, x)
        ginv = self.inverse(g)
        dg = self.first_derivatives(r, x)
        gamma = christoffel_symbols(ginv, dg)
        dgamma = christoffel_derivatives(ginv, dg, self.second_derivatives(r, x))
        return ricci_from_christoffel(gamma, dgamma)

    def distance_to_model(self, r_values=None):
        """Discrete ``sup e^{alpha r} |h_ij|`` over the grid and sampled radii."""
        if self.perturbation.is_zero:
            return 0.0
        if r_values is None:
            r_values = np.linspace(*self.r_range, 13)
        return max(
            float(np.exp(self.perturbation.alpha * r)
                  * np.abs(self.perturbation.values(np.full(self.slice.shape, r), self.slice.points)).max())
            for r in r_values
        )


def _point(g, r, x):
    r = float(r)
    if not r >= 0:
        raise ValueError(f"r must be non-negative, got {r}")
    x = tuple(np.asarray(float(v)) for v in np.atleast_1d(x))
    if len(x) != g.n:
        raise ValueError(f"slice point needs {g.n} coordinates")
    return np.asarray(r), x


def metric_at(g, r, x):
    """Metric matrix ``g_ij(r, x)`` at one point; raises if not positive definite."""
    rr, xx = _point(g, r, x)
    mat = g.metric(rr, xx)
    if np.linalg.eigvalsh(mat).min() <= 0:
        raise MetricDegenerateError(f"metric degenerate at point r={r}, x={x}")
    return mat


def christoffel_at(g, r, x):
    """Christoffel symbols ``Gamma[k, i, j]`` at one point."""
    metric_at(g, r, x)
    rr, xx = _point(g, r, x)
    return g.christoffel(rr, xx)


def ricci_normal(g, r, x, normal, atol=1e-10):
    """``Ric(nu, nu)`` at one point for a unit vector ``nu`` (components in ``(r, x)``)."""
    mat = metric_at(g, r, x)
    nu = np.asarray(normal, float)
    if abs(nu @ mat @ nu - 1.0) > atol:
        raise ValueError("normal not normalized")
    rr, xx = _point(g, r, x)
    return float(nu @ g.ricci(rr, xx) @ nu)


def fd_metric_derivatives(g, r, x, step=1e-5):
    """Central-difference ``dg[m, i, j]`` at one point (oracle for the analytic path)."""
    d = g.n + 1
    base = np.array([float(r)] + [float(v) for v in np.atleast_1d(x)])
    out = np.zeros((d, d, d))
    for m in range(d):
        e = np.zeros(d)
        e[m] = step
        plus, minus = base + e, base - e
        gp = g.metric(np.asarray(plus[0]), tuple(np.asarray(v) for v in plus[1:]))
        gm = g.metric(np.asarray(minus[0]), tuple(np.asarray(v) for v in minus[1:]))
        out[m] = (gp - gm) / (2.0 * step)
    return out


def fd_christoffel(g, r, x, step=1e-5):
    """Christoffel symbols with finite-difference metric derivatives."""
    mat = metric_at(g, r, x)
    return christoffel_symbols(np.linalg.inv(mat), fd_metric_derivatives(g, r, x, step))
