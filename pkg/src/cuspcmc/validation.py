"""Invariant suite run by ``cuspcmc validate``.

Each check returns a ``Check`` with status PASS, FAIL or SKIP.  Decay claims
are tested as bounds (the fitted slope is at least as steep as the claimed
rate, up to a tolerance); sharper rates are a library-level observation.
"""

from dataclasses import dataclass
import math

import numpy as np

from .curvature import (
    GraphFunction,
    linearized_mc,
    mean_curvature,
    mean_curvature_model,
    taylor_order,
)
from .elliptic import SpectralLaplacian, discrete_CL, solve_poisson
from .errors import CuspError
from .fitting import loglinear_fit
from .isoperimetric import compare_profiles
from .solver import build_foliation, jacobi_min_eigenvalue, newton_solve, picard_solve, solve_leaf

__all__ = ["Check", "run_checks", "random_trig", "DELTA_FLOOR"]

# |delta| below this is rounding in H, not signal
DELTA_FLOOR = 1e-13


@dataclass(frozen=True)
class Check:
    name: str
    status: str
    value: float
    threshold: float
    detail: str = ""


def _verdict(name, ok, value, threshold, detail=""):
    return Check(name, "PASS" if ok else "FAIL", float(value), float(threshold), detail)


def _skip(name, detail):
    return Check(name, "SKIP", math.nan, math.nan, detail)


def random_trig(spec, rng, amplitude=1.0, modes=3, mean_zero=False):
    """Random trigonometric polynomial with frequencies up to ``modes`` per axis."""
    x = spec.points
    values = np.zeros(spec.shape)
    ks = [range(-modes, modes + 1)] * spec.n
    for k in np.array(np.meshgrid(*ks, indexing="ij")).reshape(spec.n, -1).T:
        if mean_zero and not np.any(k):
            continue
        phase = sum(2 * math.pi * k[a] * x[a] / spec.periods[a] for a in range(spec.n))
        values += rng.standard_normal() * np.cos(phase) + rng.standard_normal() * np.sin(phase)
    values *= amplitude / np.abs(values).max()
    return GraphFunction(spec, values)


def _cos_mode(spec):
    return GraphFunction(spec, np.cos(2 * math.pi * spec.points[0] / spec.periods[0]))


def _probe_radius(g, preferred=3.0):
    lo, hi = g.r_range
    return min(max(preferred, lo), hi)


def check_slice_identity(g):
    model = g.model_counterpart()
    lo, hi = g.r_range
    worst = max(
        float(np.abs(mean_curvature(model, r, GraphFunction.zeros(g.slice)).H_field + g.n).max())
        for r in np.linspace(lo, hi, 4)
    )
    return _verdict("slice_identity", worst <= 1e-10, worst, 1e-10)


def check_oracle(g, rng, samples, r0):
    model = g.model_counterpart()
    worst = 0.0
    for _ in range(samples):
        u = random_trig(g.slice, rng, amplitude=1e-2)
        full = mean_curvature(model, r0, u).H_field
        worst = max(worst, float(np.abs(full - mean_curvature_model(r0, u)).max()))
    return _verdict("oracle_equivalence", worst <= 1e-9, worst, 1e-9, f"{samples} random u at r0={r0:g}")


def check_linearization(g, r0):
    model = g.model_counterpart()
    u = _cos_mode(g.slice)
    expected = -math.exp(2 * r0) * u.laplacian
    err = float(np.abs(linearized_mc(model, r0, u) - expected).max() / np.abs(expected).max())
    return _verdict("model_linearization", err <= 1e-6, err, 1e-6, f"relative, r0={r0:g}")


def check_taylor(g, r0):
    order = taylor_order(g, r0, _cos_mode(g.slice))
    return _verdict("taylor_order", order >= 2.7, order, 2.7, f"r0={r0:g}")


def check_poisson(spec, rng, samples=100):
    cl = discrete_CL(spec)
    lap = SpectralLaplacian(spec)
    worst_ratio, worst_inv = 0.0, 0.0
    for _ in range(samples):
        f = random_trig(spec, rng, mean_zero=True).values
        f = f - f.mean()
        u = solve_poisson(spec, f)
        sup = np.abs(f).max()
        worst_ratio = max(worst_ratio, u.n2 / (cl * sup))
        worst_inv = max(worst_inv, float(np.abs(lap.apply(u.values) - f).max() / sup))
    return [
        _verdict("poisson_bound", worst_ratio <= 1.0, worst_ratio, 1.0, f"N2(u) / (C_L |f|), C_L={cl:g}"),
        _verdict("poisson_inverse", worst_inv <= 1e-12, worst_inv, 1e-12, "relative"),
    ]


def check_base_decay(g, r_grid):
    if g.is_model:
        return _skip("slice_error_decay", "unperturbed metric")
    alpha = g.perturbation.alpha
    eh = [float(np.abs(mean_curvature(g, r, GraphFunction.zeros(g.slice)).H_field + g.n).max())
          for r in r_grid]
    fit = loglinear_fit(r_grid, eh)
    bound = -0.85 * (alpha - 2)
    return _verdict("slice_error_decay", fit.slope <= bound, fit.slope, bound,
                    "slope of sup|H(r,0)+n|; claimed rate -(alpha-2)")


def check_leaf(g, cfg):
    s = cfg.solver
    checks = []
    try:
        leaf = solve_leaf(g, s.r0, s.method, tol=s.tol, max_iter=s.max_iter, eta=s.eta)
    except CuspError as exc:
        return [Check("fixed_point", "FAIL", math.nan, 2 * s.tol, str(exc))]
    H = mean_curvature(g, s.r0, leaf.u_perp).H_field
    res = float(np.abs(H - (-g.n + leaf.delta)).max())
    checks.append(_verdict("fixed_point", res <= 2 * s.tol, res, 2 * s.tol, f"{s.method} at r0={s.r0:g}"))
    try:
        p = picard_solve(g, s.r0, s.tol, s.max_iter, s.eta)
        q = newton_solve(g, s.r0, s.tol, s.max_iter, s.eta)
    except CuspError as exc:
        checks.append(Check("method_agreement", "FAIL", math.nan, 1e-8, str(exc)))
        return checks
    gap = max(float(np.abs(p.u_perp.values - q.u_perp.values).max()), abs(p.delta - q.delta))
    checks.append(_verdict("method_agreement", gap <= 1e-8, gap, 1e-8, "picard vs newton"))
    return checks


def check_foliation(g, cfg, threads=1):
    f, s = cfg.study.foliation, cfg.solver
    rep = build_foliation(g, f.r_min, f.r_max, f.steps, s.tol, s.method, s.max_iter, s.eta, threads)
    checks = [
        _verdict("leaves_converged", rep.converged, len(rep.failures), 0, "; ".join(rep.failures.values())),
        _verdict("foliation_monotone", rep.monotonicity > 0, rep.monotonicity, 0.0, "min d_r(r + u)"),
    ]
    lam = np.nanmin(rep.stability_eigenvalues) if np.any(np.isfinite(rep.stability_eigenvalues)) else math.nan
    checks.append(_verdict("strong_stability", lam > 0, lam, 0.0, "min Jacobi eigenvalue over leaves"))
    if g.is_model:
        checks.append(_skip("decay_bound_u", "unperturbed metric"))
        checks.append(_skip("decay_bound_delta", "unperturbed metric"))
        return checks, rep
    alpha = g.perturbation.alpha
    fit = rep.decay_fit_u
    if fit.points < 3:
        checks.append(_skip("decay_bound_u", "fewer than three leaves"))
    else:
        bound = -(alpha - 2) + 0.3
        checks.append(_verdict("decay_bound_u", fit.slope <= bound, fit.slope, bound,
                               "slope of log N2(u) is at most -(alpha-2) + 0.3"))
    rs = [l.r0 for l in rep.solved if abs(l.delta) > DELTA_FLOOR]
    ds = [abs(l.delta) for l in rep.solved if abs(l.delta) > DELTA_FLOOR]
    if len(rs) < 3:
        checks.append(_skip("decay_bound_delta", f"|delta| below {DELTA_FLOOR:g} on most leaves"))
    else:
        dfit = loglinear_fit(rs, ds)
        bound = -(alpha - 4) + 0.3
        checks.append(_verdict("decay_bound_delta", dfit.slope <= bound, dfit.slope, bound,
                               "slope of log|delta| is at most -(alpha-4) + 0.3"))
    return checks, rep


def check_model_spectrum(g, r0):
    model = g.model_counterpart()
    leaf = picard_solve(model, r0)
    lam1 = float(np.min(-SpectralLaplacian(g.slice).eigenvalues.flat[1:]))
    expected = math.exp(2 * r0) * lam1
    err = abs(jacobi_min_eigenvalue(model, leaf) / expected - 1.0)
    return _verdict("model_jacobi_spectrum", err <= 0.01, err, 0.01, f"relative to e^(2r) lambda_1 at r={r0:g}")


def check_isoperimetric(g, v_grid):
    if g.n != 1:
        return [_skip("isoperimetric", "candidate comparison is for curves")]
    period = g.slice.periods[0]
    v_grid = [v for v in v_grid if v < period]
    checks = []
    exact = compare_profiles(v_grid, g.model_counterpart())
    slice_wins = all(s.best == "slice_region" for s in exact)
    checks.append(_verdict("model_slice_wins", slice_wins, sum(s.best == "slice_region" for s in exact),
                           len(exact), "samples won by the slice region"))
    if not g.is_model:
        try:
            pert = compare_profiles(v_grid, g)
        except (CuspError, ValueError) as exc:
            return checks + [Check("leaf_region_wins", "FAIL", math.nan, math.nan, str(exc))]
        wins = sum(s.best == "cmc_leaf_region" for s in pert)
        checks.append(_verdict("leaf_region_wins", wins == len(pert), wins, len(pert),
                               "samples won by the CMC leaf region"))
        exact = exact + pert
    h_ok = all(s.h_bound_ok for s in exact)
    worst = max(abs(s.winner.H) for s in exact)
    checks.append(_verdict("winner_curvature_bound", h_ok, worst, 1.0 + 1e-6, "|H| of winners"))
    return checks


def run_checks(cfg, threads=1):
    """All checks for one configuration, in a fixed order."""
    g = cfg.build_metric()
    rng = np.random.default_rng(cfg.study.seed)
    r0 = _probe_radius(g)
    checks = [
        check_slice_identity(g),
        check_oracle(g, rng, cfg.study.samples, r0),
        check_linearization(g, r0),
        check_taylor(g, r0),
    ]
    checks += check_poisson(g.slice, rng)
    fol = cfg.study.foliation
    checks.append(check_base_decay(g, np.linspace(fol.r_min, fol.r_max, fol.steps)))
    checks += check_leaf(g, cfg)
    fol_checks, _ = check_foliation(g, cfg, threads)
    checks += fol_checks
    checks.append(check_model_spectrum(g, r0))
    checks += check_isoperimetric(g, cfg.study.v_grid)
    return checks
