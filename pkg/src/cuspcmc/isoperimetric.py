"""Small-volume candidate comparison on the 2D cusp end ``dr^2 + e^{-2r} dtheta^2``.

Every family is parameterized by enclosed volume.  Ends of circumference
``L`` have total volume ``L``; regions are

* ``slice_region``: ``[R, inf) x S^1`` with ``V = A = L e^{-R}`` and ``H = -1``;
* ``cmc_leaf_region``: the part above a CMC leaf from the solver, volume by
  trapezoidal quadrature in ``(r, theta)``;
* ``geodesic_disk``: a hyperbolic disk, ``V = 2 pi (cosh rho - 1)``,
  length ``2 pi sinh rho = sqrt(V^2 + 4 pi V)``, ``H = -coth rho``.
"""

from dataclasses import dataclass
import math

import numpy as np
from scipy.integrate import trapezoid
from scipy.optimize import brentq

from .curvature import graph_geometry
from .geometry import TWO_PI
from .solver import solve_leaf

__all__ = [
    "Candidate",
    "IsoperimetricSample",
    "slice_region_profile",
    "geodesic_disk_profile",
    "disk_radius",
    "injectivity_radius",
    "embeddable_center",
    "leaf_region_volume",
    "cmc_leaf_region_profile",
    "compare_profiles",
    "largest_winning_volume",
]

R_TRUNCATE = 20.0
CENTER_MARGIN = 1e-3


@dataclass(frozen=True)
class Candidate:
    length: float
    H: float
    volume: float
    radius: float = math.nan      # r_v for leaves and slices, rho for disks


@dataclass(frozen=True)
class IsoperimetricSample:
    v: float
    candidates: dict
    best: str
    h_bound_ok: bool

    @property
    def winner(self):
        return self.candidates[self.best]


def _check_volume(v, period):
    if not 0 < v < period:
        raise ValueError(f"volume {v} outside (0, {period}) for an end of circumference {period}")


def slice_region_profile(v, period=TWO_PI):
    """``(length, H)`` for the slice region of volume ``v``."""
    _check_volume(v, period)
    return float(v), -1.0


def disk_radius(v):
    return math.acosh(1.0 + v / TWO_PI)


def injectivity_radius(r, period=TWO_PI):
    """Half the shortest loop through a point at height ``r``: ``cosh 2i = 1 + L^2 e^{-2r} / 2``."""
    return 0.5 * math.acosh(1.0 + 0.5 * period**2 * math.exp(-2.0 * r))


def embeddable_center(v, period=TWO_PI, preferred=4.0):
    """Highest center ``<= preferred`` at which the disk of volume ``v`` embeds, or ``None``."""
    rho = disk_radius(v)
    top = -0.5 * math.log((math.cosh(2.0 * rho) - 1.0) * 2.0 / period**2)
    center = min(preferred, top - CENTER_MARGIN)
    return center if center - rho > 0 else None


def geodesic_disk_profile(v, center_r=4.0, period=TWO_PI):
    """``(length, H)`` for a geodesic disk of volume ``v`` centered at height ``center_r``."""
    _check_volume(v, period)
    rho = disk_radius(v)
    if rho >= injectivity_radius(center_r, period) or rho >= center_r:
        raise ValueError(
            f"competitor not embeddable: disk radius {rho:.4g} at r={center_r:g} "
            f"exceeds injectivity radius {injectivity_radius(center_r, period):.4g}"
        )
    return math.sqrt(v * v + 4.0 * math.pi * v), -1.0 / math.tanh(rho)


def _trapezoid_volume(g, bottom, points):
    spec = g.slice
    theta = spec.points
    s = np.linspace(0.0, 1.0, points)
    r = bottom[None, ...] + (R_TRUNCATE - bottom)[None, ...] * s.reshape((-1,) + (1,) * spec.n)
    x = tuple(np.broadcast_to(t, r.shape) for t in theta)
    density = np.sqrt(np.linalg.det(g.metric(r, x)))
    column = trapezoid(density, s, axis=0) * (R_TRUNCATE - bottom)
    return float(column.sum() * spec.cell_volume)


def leaf_region_volume(g, leaf, points=2000):
    """Volume above ``S_{r0}(u)``: trapezoid in r with one Richardson step, plus the model tail."""
    bottom = leaf.r0 + leaf.u_perp.values
    if np.any(bottom >= R_TRUNCATE):
        raise ValueError("leaf lies above the quadrature cutoff")
    coarse = _trapezoid_volume(g, bottom, points)
    fine = _trapezoid_volume(g, bottom, 2 * points - 1)
    tail = g.slice.area * math.exp(-R_TRUNCATE)
    return (4.0 * fine - coarse) / 3.0 + tail


def cmc_leaf_region_profile(v, g, method="picard", tol=1e-10, rtol=1e-12):
    """Root-solve the leaf radius ``r_v`` whose region has volume ``v``.

    Returns a ``Candidate`` with the leaf's boundary length and ``H = -1 + delta``.
    """
    if g.n != 1:
        raise ValueError("candidate comparison is implemented for curves (n = 1)")
    _check_volume(v, g.slice.area)
    lo, hi = g.r_range
    leaves = {}

    def excess(r0):
        leaf = leaves[r0] = solve_leaf(g, r0, method, tol=tol)
        return leaf_region_volume(g, leaf) - v

    guess = -math.log(v / g.slice.area)
    if not lo < guess < hi:
        raise ValueError(f"leaf for volume {v} has radius near {guess:.3g}, outside r-range [{lo}, {hi}]")
    a, b = max(lo, guess - 0.25), min(hi, guess + 0.25)
    r_v = brentq(excess, a, b, xtol=1e-14, rtol=rtol)
    leaf = leaves.get(r_v) or solve_leaf(g, r_v, method, tol=tol)
    geo = graph_geometry(g, r_v, leaf.u_perp)
    length = float(np.sum(geo.area_density) * g.slice.cell_volume)
    return Candidate(length, -g.n + leaf.delta, leaf_region_volume(g, leaf), r_v)


def compare_profiles(v_grid, metric=None, center_r=4.0, method="picard", tol=1e-10,
                     h_tol=1e-6):
    """Rank the candidate families at each volume; the winner has the shortest boundary.

    The exact model compares slice regions with disks; a perturbed ``metric``
    compares CMC-leaf regions with disks.  Disks sit at the highest height
    ``<= center_r`` where they embed; volumes where none embeds have no disk.
    """
    exact = metric is None or metric.is_model
    period = TWO_PI if metric is None else metric.slice.periods[0]
    if metric is not None and metric.n != 1:
        raise ValueError("candidate comparison is implemented for curves (n = 1)")
    samples = []
    for v in v_grid:
        v = float(v)
        cands = {}
        if exact:
            length, H = slice_region_profile(v, period)
            cands["slice_region"] = Candidate(length, H, v, -math.log(v / period))
        else:
            cands["cmc_leaf_region"] = cmc_leaf_region_profile(v, metric, method, tol)
        center = embeddable_center(v, period, center_r)
        if center is not None:
            length, H = geodesic_disk_profile(v, center, period)
            cands["geodesic_disk"] = Candidate(length, H, v, disk_radius(v))
        best = min(cands, key=lambda k: cands[k].length)
        ok = abs(cands[best].H) <= 1.0 + h_tol
        samples.append(IsoperimetricSample(v, cands, best, ok))
    return samples


def largest_winning_volume(samples, family):
    """Largest sampled ``v`` up to which ``family`` wins at every sample, or ``None``."""
    best = None
    for s in sorted(samples, key=lambda s: s.v):
        if s.best != family:
            break
        best = s.v
    return best
