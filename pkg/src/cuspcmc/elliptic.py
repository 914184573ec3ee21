"""Spectral inverse of the flat slice Laplacian on mean-zero functions."""

from dataclasses import dataclass
from functools import cached_property

import numpy as np

from .curvature import GraphFunction
from .geometry import SliceSpec

__all__ = [
    "SpectralLaplacian",
    "project_meanzero",
    "solve_poisson",
    "discrete_CL",
]

MEAN_TOL = 1e-10


@dataclass(frozen=True)
class SpectralLaplacian:
    """Fourier-diagonal Laplacian with ``lambda_k = -sum_i (2 pi k_i / L_i)^2``."""

    slice: SliceSpec

    @cached_property
    def eigenvalues(self):
        return -sum(k**2 for k in self.slice.wavenumbers)

    def apply(self, values):
        return np.fft.ifftn(self.eigenvalues * np.fft.fftn(values)).real

    def solve(self, f):
        f = np.asarray(f, float)
        scale = float(np.abs(f).max()) if f.size else 0.0
        if abs(float(np.mean(f))) > MEAN_TOL * scale:
            raise ValueError("projection violated: right-hand side has non-zero mean")
        lam = self.eigenvalues.copy()
        lam.flat[0] = 1.0
        fh = np.fft.fftn(f) / lam
        fh.flat[0] = 0.0
        return GraphFunction(self.slice, np.fft.ifftn(fh).real)


def project_meanzero(f):
    """Subtract the grid mean."""
    f = np.asarray(f, float)
    return f - f.mean()


_LAPLACIANS = {}


def _laplacian(slice_spec):
    lap = _LAPLACIANS.get(slice_spec)
    if lap is None:
        lap = _LAPLACIANS[slice_spec] = SpectralLaplacian(slice_spec)
    return lap


def solve_poisson(slice_spec, f):
    """Unique mean-zero ``u`` with ``Lap u = f``; ``f`` must have zero mean."""
    if isinstance(f, GraphFunction):
        f = f.values
    return _laplacian(slice_spec).solve(f)


def discrete_CL(slice_spec):
    """Proxy constant ``max_k (1 + |k| + |k|^2) / |lambda_k|`` over resolved modes.

    For a single Fourier mode the solution's ``N2`` norm is at most this
    multiple of ``|f|_inf``.
    """
    lam = SpectralLaplacian(slice_spec).eigenvalues
    k = np.sqrt(-lam)
    nz = lam != 0
    return float(np.max((1.0 + k[nz] + k[nz] ** 2) / -lam[nz]))
