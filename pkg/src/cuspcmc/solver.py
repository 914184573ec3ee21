"""CMC leaves near the cusp end, foliations and their stability.

A leaf at radius ``r0`` is a graph ``S_{r0}(u)`` with mean-zero ``u`` and
constant mean curvature ``-n + delta``.  Two independent iterations find it:

* ``picard_solve`` inverts the slice Laplacian on the full nonlinear
  remainder of the previous iterate, with ``delta_j`` fixed by solvability;
* ``newton_solve`` is a chord iteration on ``Psi(u) = H - mean(H)`` with the
  frozen model linearization ``-e^{2 r0} Lap``.
"""

from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
import math
import warnings

import numpy as np
from scipy import linalg
from scipy.sparse.linalg import LinearOperator, lobpcg

from .curvature import GraphFunction, base_error_terms, graph_geometry
from .elliptic import project_meanzero, solve_poisson
from .errors import ConvergenceError, CuspError
from .fitting import NAN_FIT, loglinear_fit

__all__ = [
    "CMCSolution",
    "FoliationReport",
    "picard_solve",
    "newton_solve",
    "solve_leaf",
    "build_foliation",
    "jacobi_min_eigenvalue",
    "first_offset",
]

DEFAULT_TOL = 1e-10
DEFAULT_MAX_ITER = 200
DEFAULT_ETA = 0.1
DENSE_LIMIT = 1024
# eigenvalue error is quadratic in the relative eigen-residual
RESIDUAL_LIMIT = 1e-4


@dataclass(frozen=True)
class CMCSolution:
    """One leaf ``S_{r0}(u_perp)`` with ``H = -n + delta``."""

    r0: float
    u_perp: GraphFunction
    delta: float
    iterations: int
    residual_history: tuple
    method: str
    converged: bool = True
    delta_history: tuple = ()   # picard: delta_j used at step j; newton: mean(H) + n per step

    @property
    def residual(self):
        return self.residual_history[-1] if self.residual_history else math.inf

    @property
    def n2(self):
        return self.u_perp.n2


def _check_finite(values, method, history):
    if not np.all(np.isfinite(values)):
        raise ConvergenceError(f"{method} diverged: non-finite iterate", history)


def _guard(u, eta, method, history):
    if u.n2 > eta:
        raise ConvergenceError(
            f"{method} diverged: N2(u) = {u.n2:.3e} left the smallness radius eta = {eta:g}",
            history,
        )


def _curvature(g, r0, u, method, history):
    try:
        return graph_geometry(g, r0, u).mean_curvature
    except CuspError as exc:
        raise ConvergenceError(f"{method} diverged: {exc}", history) from exc


def _centered(f):
    # twice: the first pass leaves rounding of the O(1) mean, the second is relative
    return project_meanzero(project_meanzero(f))


def first_offset(EF0, EH0, n):
    """``delta_0 = int(n (W - 1) + EH0) / int W`` with ``W = sqrt(1 + EF0)``."""
    W = np.sqrt(1.0 + EF0)
    return float(np.mean(n * (W - 1.0) + EH0) / np.mean(W))


def picard_solve(g, r0, tol=DEFAULT_TOL, max_iter=DEFAULT_MAX_ITER, eta=DEFAULT_ETA):
    """Fixed-point iteration ``Lap u_{j+1} = e^{-2 r0} S_j``.

    With ``W = sqrt(1 + EF0)`` and ``N_j = W H(u_j) + n - EH0 + e^{2 r0} Lap u_j``
    the bracket is ``S_j = n (W - 1) + EH0 - delta_j W + N_j``; ``delta_j`` is
    the constant that gives ``S_j`` zero mean.  A fixed point has
    ``W (H + n - delta) = 0``, i.e. ``H = -n + delta``.
    """
    if not tol > 0:
        raise ValueError("tol must be positive")
    spec = g.slice
    n = spec.n
    r0 = float(r0)
    EF0, EH0, base = base_error_terms(g, r0, spec)
    W = np.sqrt(1.0 + EF0)
    mean_w = float(np.mean(W))
    e2 = math.exp(2.0 * r0)

    u = GraphFunction.zeros(spec)
    H = base.mean_curvature
    history, deltas = [], []
    for j in range(1, max_iter + 1):
        N = W * H + n - EH0 + e2 * u.laplacian
        delta = float(np.mean(n * (W - 1.0) + EH0 + N) / mean_w)
        S = n * (W - 1.0) + EH0 - delta * W + N
        deltas.append(delta)
        new = solve_poisson(spec, _centered(S) / e2)
        _check_finite(new.values, "picard", history)
        _guard(new, eta, "picard", history)
        step = float(np.abs(new.values - u.values).max())
        u = new
        H = _curvature(g, r0, u, "picard", history)
        delta = float(np.mean(W * (H + n)) / mean_w)
        residual = float(np.abs(H + n - delta).max())
        history.append(residual)
        if step <= tol and residual <= tol:
            return CMCSolution(r0, u, delta, j, tuple(history), "picard", True, tuple(deltas))
    raise ConvergenceError(f"picard diverged: no convergence in {max_iter} iterations", history)


def newton_solve(g, r0, tol=DEFAULT_TOL, max_iter=DEFAULT_MAX_ITER, eta=DEFAULT_ETA,
                 u_init=None):
    """Chord iteration ``u <- u + e^{-2 r0} Lap^{-1} Psi(u)``; ``delta = mean(H) + n``."""
    if not tol > 0:
        raise ValueError("tol must be positive")
    spec = g.slice
    n = spec.n
    r0 = float(r0)
    e2 = math.exp(2.0 * r0)
    u = GraphFunction.zeros(spec) if u_init is None else u_init.projected()
    H = _curvature(g, r0, u, "newton", [])
    history, deltas = [], []
    for j in range(1, max_iter + 1):
        correction = solve_poisson(spec, _centered(H) / e2)
        new = u.with_values(u.values + correction.values).projected()
        _check_finite(new.values, "newton", history)
        _guard(new, eta, "newton", history)
        step = float(np.abs(correction.values).max())
        u = new
        H = _curvature(g, r0, u, "newton", history)
        delta = float(H.mean() + n)
        residual = float(np.abs(H - H.mean()).max())
        history.append(residual)
        deltas.append(delta)
        if step <= tol and residual <= tol:
            return CMCSolution(r0, u, delta, j, tuple(history), "newton", True, tuple(deltas))
    raise ConvergenceError(f"newton diverged: no convergence in {max_iter} iterations", history)


SOLVERS = {"picard": picard_solve, "newton": newton_solve}


def solve_leaf(g, r0, method="picard", **kwargs):
    try:
        solve = SOLVERS[method]
    except KeyError:
        raise ValueError(f"unknown method {method!r}; choose picard or newton") from None
    return solve(g, r0, **kwargs)


# --- stability -------------------------------------------------------------


def _project_nyquist(spec, values):
    """Remove grid modes whose derivative the spectral matrices cannot see."""
    mask = spec.nyquist_mask
    if not mask.any():
        return values
    axes = tuple(range(-spec.n, 0))
    hat = np.fft.fftn(values, axes=axes)
    hat[..., mask] = 0.0
    return np.fft.ifftn(hat, axes=axes).real


class _JacobiForm:
    """Quadratic form of ``-J`` on a leaf, and the ``dS`` mass matrix, as operators.

    Nyquist modes carry no gradient energy, so the form is restricted to
    their complement ``P``; on the Nyquist block it is ``sigma * I`` with
    ``sigma`` well above the spectrum of interest.
    """

    def __init__(self, g, leaf):
        spec = leaf.u_perp.slice
        geo = graph_geometry(g, leaf.r0, leaf.u_perp)
        ric = g.ricci(geo.r, spec.points)
        ric_nn = np.einsum("...a,...ab,...b->...", geo.normal, ric, geo.normal)
        self.spec = spec
        # the quotient is invariant under a common scale; keep the mass matrix O(1)
        self.weight = geo.area_density / float(np.mean(geo.area_density))
        self.coef = self.weight[..., None, None] * geo.induced_inv
        self.potential = self.weight * (ric_nn + geo.norm_a_squared)
        self.size = int(np.prod(spec.shape))
        grad_scale = float(np.abs(self.coef).max()) * max(
            float(np.abs(k).max()) for k in spec.wavenumbers
        ) ** 2
        self.sigma = 10.0 * (grad_scale + float(np.abs(self.potential).max())) / float(self.weight.min())

    def _grid(self, X):
        return X.T.reshape((X.shape[1],) + self.spec.shape)

    def _flat(self, F):
        return F.reshape(F.shape[0], -1).T

    def _gradient(self, F):
        return np.stack([self.spec.gradient(f) for f in F], axis=0)  # (m, n, *grid)

    def _stiffness(self, F):
        grad = self._gradient(F)
        flux = np.einsum("...ij,mj...->mi...", self.coef, grad)
        div = np.stack([
            sum(self.spec.gradient(flux[m, i])[i] for i in range(self.spec.n))
            for m in range(F.shape[0])
        ])
        return -div - self.potential * F

    def apply_a(self, X):
        X = X.reshape(self.size, -1)
        F = self._grid(X)
        P = _project_nyquist(self.spec, F)
        out = _project_nyquist(self.spec, self._stiffness(P)) + self.sigma * (F - P)
        return self._flat(out)

    def apply_b(self, X):
        X = X.reshape(self.size, -1)
        F = self._grid(X)
        P = _project_nyquist(self.spec, F)
        out = _project_nyquist(self.spec, self.weight * P) + (F - P)
        return self._flat(out)

    def constraint(self):
        """``P w``: ``c . phi = 0`` is ``int phi dS = 0`` on the resolved modes."""
        return _project_nyquist(self.spec, self.weight).reshape(-1)

    def dense(self):
        eye = np.eye(self.size)
        A = self.apply_a(eye)
        B = self.apply_b(eye)
        return 0.5 * (A + A.T), 0.5 * (B + B.T)


def jacobi_min_eigenvalue(g, leaf, method="auto"):
    """Least Rayleigh quotient of ``-J`` over ``phi`` with ``int phi dS = 0``.

    ``-J`` acts through ``Q(phi) = int |grad_S phi|^2 - (Ric(nu, nu) + |A|^2) phi^2 dS``
    and the quotient is ``Q(phi) / int phi^2 dS``; positive means strongly stable.
    ``method`` is ``dense`` (generalized eigh on the constraint null space),
    ``lobpcg``, or ``auto`` (dense for curves, lobpcg for surfaces).
    """
    if not leaf.converged:
        raise ValueError("leaf not converged")
    if method not in ("auto", "dense", "lobpcg"):
        raise ValueError(f"unknown eigensolver {method!r}")
    form = _JacobiForm(g, leaf)
    if method == "auto":
        method = "dense" if form.spec.n == 1 or form.size <= DENSE_LIMIT // 4 else "lobpcg"
    if method == "dense":
        c = form.constraint()
        A, B = form.dense()
        Z = linalg.null_space(c[None, :])
        vals = linalg.eigh(Z.T @ A @ Z, Z.T @ B @ Z, eigvals_only=True, subset_by_index=[0, 0])
        return float(vals[0])
    return _lobpcg_min(form)


def _lobpcg_min(form):
    spec = form.spec
    N = form.size
    axes = tuple(range(1, 1 + spec.n))
    cs = float(np.abs(form.coef).max())
    diag = 1.0 + sum(k**2 for k in spec.wavenumbers)

    def precond(X):
        F = form._grid(X.reshape(N, -1))
        hat = np.fft.fftn(F, axes=axes) / diag
        hat[:, spec.nyquist_mask] = 0.0
        return form._flat(np.fft.ifftn(hat, axes=axes).real)

    def apply_a(X):
        return form.apply_a(X) / cs

    A = LinearOperator((N, N), matvec=apply_a, matmat=apply_a, dtype=float)
    B = LinearOperator((N, N), matvec=form.apply_b, matmat=form.apply_b, dtype=float)
    M = LinearOperator((N, N), matvec=precond, matmat=precond, dtype=float)
    # B 1 = P w = c, so B-orthogonality to the constants is the dS mean-zero constraint
    Y = np.ones((N, 1))
    # start and stay off the Nyquist block, whose Rayleigh quotient is sigma
    X = precond(np.random.default_rng(0).standard_normal((N, 4)))
    # lobpcg's tol is an absolute residual norm; accuracy is judged relative below
    tol = 1e-9
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", UserWarning)
        vals, vecs = lobpcg(A, X, B=B, M=M, Y=Y, largest=False, tol=tol, maxiter=300)
    k = int(np.argmin(vals))
    x = vecs[:, k:k + 1]
    Bx = form.apply_b(x)
    rel = float(np.linalg.norm(apply_a(x) - vals[k] * Bx) / (abs(vals[k]) * np.linalg.norm(Bx)))
    if not rel <= RESIDUAL_LIMIT:
        raise ConvergenceError(f"jacobi eigensolver stalled: relative residual {rel:.2e}")
    return float(vals[k]) * cs


# --- foliation -------------------------------------------------------------


@dataclass(frozen=True)
class FoliationReport:
    """Leaves on an increasing r-grid with foliation and decay diagnostics.

    ``leaves[k]`` is ``None`` when the solve at ``r_grid[k]`` failed; the
    message is kept in ``failures``.
    """

    r_grid: np.ndarray
    leaves: tuple
    monotonicity: float
    stability_eigenvalues: np.ndarray
    decay_fit_u: object
    decay_fit_delta: object
    failures: dict = field(default_factory=dict)

    @property
    def converged(self):
        return not self.failures

    @property
    def solved(self):
        return [leaf for leaf in self.leaves if leaf is not None]


def _solve_one(args):
    g, r0, method, tol, max_iter, eta = args
    try:
        return solve_leaf(g, r0, method, tol=tol, max_iter=max_iter, eta=eta), None
    except CuspError as exc:
        return None, str(exc)


def build_foliation(g, r_min, r_max, steps, tol=DEFAULT_TOL, method="picard",
                    max_iter=DEFAULT_MAX_ITER, eta=DEFAULT_ETA, threads=1, stability=True):
    """Solve leaves at ``linspace(r_min, r_max, steps)`` and assess the foliation."""
    lo, hi = g.r_range
    if not (lo <= r_min < r_max <= hi):
        raise ValueError(f"foliation range [{r_min}, {r_max}] must lie inside r-range [{lo}, {hi}]")
    if steps < 2:
        raise ValueError("a foliation needs at least two leaves")
    r_grid = np.linspace(float(r_min), float(r_max), int(steps))
    jobs = [(g, float(r), method, tol, max_iter, eta) for r in r_grid]
    if threads > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            results = list(pool.map(_solve_one, jobs))
    else:
        results = [_solve_one(job) for job in jobs]

    leaves = tuple(leaf for leaf, _ in results)
    failures = {float(r): msg for r, (_, msg) in zip(r_grid, results) if msg is not None}
    ok = np.array([leaf is not None for leaf in leaves])

    monotonicity = math.nan
    if ok.sum() >= 2:
        rs = r_grid[ok]
        heights = np.stack([r + leaf.u_perp.values for r, leaf in zip(rs, (l for l in leaves if l))])
        monotonicity = float(np.gradient(heights, rs, axis=0).min())

    eig = np.full(r_grid.size, math.nan)
    if stability:
        for k, leaf in enumerate(leaves):
            if leaf is not None:
                eig[k] = jacobi_min_eigenvalue(g, leaf)

    if ok.sum() >= 2:
        rs = r_grid[ok]
        fit_u = loglinear_fit(rs, [leaf.n2 for leaf in leaves if leaf is not None])
        fit_d = loglinear_fit(rs, [abs(leaf.delta) for leaf in leaves if leaf is not None])
    else:
        fit_u = fit_d = NAN_FIT
    return FoliationReport(r_grid, leaves, monotonicity, eig, fit_u, fit_d, failures)
