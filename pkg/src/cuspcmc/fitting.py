"""Least-squares slopes of ``log y`` against ``x`` with confidence intervals."""

from dataclasses import dataclass
import math

import numpy as np
from scipy import stats


@dataclass(frozen=True)
class DecayFit:
    slope: float
    intercept: float
    slope_low: float
    slope_high: float
    points: int

    @property
    def prefactor(self):
        return math.exp(self.intercept)

    def within(self, target, tol):
        return abs(self.slope - target) <= tol


NAN_FIT = DecayFit(math.nan, math.nan, math.nan, math.nan, 0)


def loglinear_fit(x, y, confidence=0.95):
    """Fit ``log y = slope * x + intercept`` over the finite, positive samples.

    Fewer than two usable points give a NaN fit; with exactly two the
    interval is degenerate (NaN bounds).
    """
    x = np.asarray(x, float)
    y = np.asarray(y, float)
    keep = np.isfinite(x) & np.isfinite(y) & (y > 0)
    x, ly = x[keep], np.log(y[keep])
    if x.size < 2:
        return NAN_FIT
    res = stats.linregress(x, ly)
    if x.size > 2:
        half = stats.t.ppf(0.5 + confidence / 2, x.size - 2) * res.stderr
    else:
        half = math.nan
    return DecayFit(float(res.slope), float(res.intercept),
                    float(res.slope - half), float(res.slope + half), int(x.size))


def loglog_slope(t, y):
    """Slope of ``log y`` against ``log t`` (empirical order of a remainder)."""
    t = np.asarray(t, float)
    fit = loglinear_fit(np.log(t), y)
    return fit.slope
