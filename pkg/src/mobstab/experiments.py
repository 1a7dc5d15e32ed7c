"""Verification suites, the sharpness sweep and the stability-ratio probe.

Everything here returns plain data (dataclasses, dicts) so the command line
layer only formats.  Reports are deterministic for a fixed seed.
"""

from __future__ import annotations

import csv
import io
import json
import math
from dataclasses import asdict, dataclass, fields

import numpy as np

from . import functionals as fn
from .errors import CenteringFailed, UnknownSuite
from .harmonics import linear_field, parseval_sums, random_harmonic_field
from .map_model import (
    PlaneField,
    SphereField,
    bump_family_field,
    bump_sphere_field,
    compose,
    identity_field,
    inverse_stereographic_field,
    mobius_field,
    normalized_linear_field,
    orthogonal_field,
    pullback_to_sphere,
)
from .matrix_algebra import (
    char_coefficients,
    det_expansion_check,
    figalli_zhang_c0,
    figalli_zhang_check,
    polar,
    sigma_grad,
)
from .mobius_fit import center, fit_mobius, fit_planar, mean_after
from .quadrature import (
    ball_rule,
    coarse_level,
    disc_rule,
    integrate,
    sphere_moment,
    sphere_rule,
    unit_ball_volume,
)
from .sphere_geometry import (
    MobiusElement,
    conformality_residual,
    inverse_stereo,
    mobius_ambient_jacobian,
    mobius_apply,
    random_rotation,
    stereo,
)

SUITES = ("geometry", "quadrature", "functionals", "algebra", "inequalities")


# ratios and prefactors have no closed form; only exponents are portable
EMPIRICAL = "empirical, implementation-dependent"


# ------------------------------------------------------------------ checks

@dataclass
class Check:
    name: str
    property: str
    value: float
    tolerance: float
    passed: bool


def _le(name, prop, value, tol):
    value = float(value)
    return Check(name, prop, value, float(tol), bool(value <= tol))


def _ge(name, prop, value, bound):
    value = float(value)
    return Check(name, prop, value, float(bound), bool(value >= bound))


def pass_tolerance(quad_err) -> float:
    """Default acceptance tolerance ``max(1e-8, 10 x quadrature error)``."""
    return max(1e-8, 10.0 * float(quad_err))


def suite_geometry(n, level, seed):
    rng = np.random.default_rng(seed)
    rule = sphere_rule(n, level)
    X, P = rule.nodes, rule.frames
    out = []
    G = np.swapaxes(P, 1, 2) @ P
    out.append(_le("frame_orthonormal", "tangent frames are orthonormal",
                   np.max(np.abs(G - np.eye(n - 1))), 1e-12))
    out.append(_le("frame_tangent", "tangent frames are orthogonal to the base point",
                   np.max(np.abs(np.einsum("ni,nij->nj", X, P))), 1e-12))
    dets = np.linalg.det(np.concatenate([P, X[:, :, None]], axis=2))
    out.append(_le("frame_orientation", "det[tau, x] = +1",
                   np.max(np.abs(dets - 1.0)), 1e-12))
    conf, inv, dual, stereo_err = 0.0, 0.0, 0.0, 0.0
    for _ in range(5):
        m = MobiusElement.random(n, rng)
        J = mobius_ambient_jacobian(m, X) @ P
        conf = max(conf, conformality_residual(J).max())
        inv = max(inv, np.abs(mobius_apply(m.inverse(), mobius_apply(m, X)) - X).max())
        twin = MobiusElement(m.R, -m.xi, 1.0 / m.lam)
        dual = max(dual, np.abs(mobius_apply(twin, X) - mobius_apply(m, X)).max())
        keep = X @ m.xi > -0.9
        stereo_err = max(stereo_err, np.abs(inverse_stereo(m.xi, stereo(m.xi, X[keep])) - X[keep]).max())
    out.append(_le("mobius_conformal", "Moebius maps are conformal at every node", conf, 1e-8))
    out.append(_le("mobius_inverse", "inverse element undoes the map", inv, 1e-10))
    out.append(_le("mobius_dual_parameters", "(xi, lam) and (-xi, 1/lam) give the same map", dual, 1e-12))
    out.append(_le("stereo_roundtrip", "stereographic projection is inverted by its inverse",
                   stereo_err, 1e-10))
    m = MobiusElement.random(n, rng)
    back = MobiusElement.from_json(m.to_json())
    out.append(_le("mobius_json_roundtrip", "Moebius elements survive JSON round trips",
                   np.abs(back.R - m.R).max() + np.abs(back.xi - m.xi).max() + abs(back.lam - m.lam), 0.0))
    return out


def suite_quadrature(n, level, seed):
    rng = np.random.default_rng(seed)
    rule = sphere_rule(n, level)
    X = rule.nodes
    out = []
    M2 = integrate(rule, X[:, :, None] * X[:, None, :])
    out.append(_le("second_moments", "avg x x^t = I/n", np.abs(M2 - np.eye(n) / n).max(), 1e-14))
    worst = 0.0
    for _ in range(20):
        deg = int(rng.integers(0, rule.exactness + 1))
        alpha = np.bincount(rng.integers(0, n, deg), minlength=n)
        val = integrate(rule, np.prod(X**alpha, axis=1))
        worst = max(worst, abs(val - sphere_moment(alpha)))
    out.append(_le("monomial_exactness", "rule is exact up to its stated degree", worst, 1e-13))
    ball = ball_rule(n, min(level, 8))
    out.append(_le("ball_second_moment", "avg_B |y|^2 = n/(n+2)",
                   abs(integrate(ball, np.sum(ball.nodes**2, axis=1)) - n / (n + 2)), 1e-13))
    d = n - 1
    disc = disc_rule(rng.standard_normal(d), 0.7, 8)
    out.append(_le("disc_volume", "disc weights sum to the disc volume",
                   abs(disc.weights.sum() - unit_ball_volume(d) * 0.7**d), 1e-12))
    f = lambda Y: np.cos(Y @ np.arange(1, n + 1))
    a = integrate(rule, f, workers=1)
    b = integrate(rule, f, workers=3)
    out.append(_le("worker_determinism", "parallel reduction is bitwise reproducible",
                   0.0 if a == b else 1.0, 0.0))
    return out


def suite_functionals(n, level, seed):
    rng = np.random.default_rng(seed)
    rule = sphere_rule(n, level)
    ball = ball_rule(n, min(level, 10))
    out = []
    rep = fn.deficit(identity_field(n), rule)
    out.append(_le("identity_degree", "degree of the identity is +1", abs(rep.degree - 1.0), 1e-10))
    out.append(_le("identity_deficit", "identity has zero deficit", abs(rep.deficit), 1e-10))
    refl = np.eye(n)
    refl[0, 0] = -1.0
    out.append(_le("reflection_degree", "degree of a reflection is -1",
                   abs(fn.degree(orthogonal_field(refl), rule) + 1.0), 1e-10))
    worst_def, worst_deg = 0.0, 0.0
    for _ in range(3):
        r = fn.deficit(mobius_field(MobiusElement.random(n, rng)), rule)
        worst_def = max(worst_def, abs(r.deficit))
        worst_deg = max(worst_deg, abs(r.degree - 1.0))
    out.append(_le("mobius_deficit", "Moebius maps have zero deficit", worst_def, 1e-6))
    out.append(_le("mobius_degree", "Moebius maps have degree one", worst_deg, 1e-6))
    A = rng.standard_normal((n, n))
    a1, a2 = fn.linear_moments(A, rule)
    nA = np.sum(A * A)
    out.append(_le("moment_tangential", "avg |A P_T|^2 = (n-1)/n |A|^2", abs(a1 - (n - 1) / n * nA), 1e-10))
    out.append(_le("moment_normal", "avg |A x|^2 = |A|^2/n", abs(a2 - nA / n), 1e-10))
    w = random_harmonic_field(n, [1, 2, 3], rng, 0.3)
    l2, h1 = parseval_sums(w)
    vals, J = w.on_rule(rule)
    res = max(abs(integrate(rule, np.sum(vals**2, axis=1)) - l2),
              abs(integrate(rule, np.sum(J * J, axis=(1, 2))) - h1))
    out.append(_le("parseval", "Parseval sums match quadrature", res, 1e-8))
    B = rng.standard_normal((n, n))
    lin = fn.projections(linear_field(B), rule)
    out.append(_le("linear_projection", "first projection of x -> Bx recovers B", np.abs(lin.A - B).max(), 1e-10))
    nl = fn.null_lagrangian_identity(w, ball, rule)
    out.append(_le("null_lagrangian", "ball determinant equals its boundary expansion", nl.residual, 1e-8))
    u = normalized_linear_field(np.diag([1.2] + [1.0] * (n - 1)))
    m = MobiusElement.random(n, rng)
    d0 = fn.deficit(u, rule)
    d1 = fn.deficit(compose(u, m), rule)
    tol = pass_tolerance(d0.quadrature_error + d1.quadrature_error)
    out.append(_le("conformal_invariance", "deficit is invariant under Moebius reparametrization",
                   abs(d0.deficit - d1.deficit), tol))
    return out


def suite_algebra(n, level, seed):
    rng = np.random.default_rng(seed)
    out = []
    Ms = rng.standard_normal((50, n, n))
    out.append(_le("det_expansion", "det(I + M) = sum_k sigma_k(M)", det_expansion_check(Ms).max(), 1e-10))
    ref = np.array([np.real(np.poly(M)) * (-1.0) ** np.arange(n + 1) for M in Ms])
    out.append(_le("sigma_vs_eigenvalues", "sigma_k agree with eigenvalue symmetric sums",
                   np.abs(char_coefficients(Ms) - ref).max(), 1e-10))
    M = Ms[0]
    h = 1e-6
    worst = 0.0
    for k in range(1, n + 1):
        G = sigma_grad(k, M)
        for i in range(n):
            for j in range(n):
                E = np.zeros((n, n))
                E[i, j] = h
                fd = (char_coefficients(M + E)[k] - char_coefficients(M - E)[k]) / (2 * h)
                worst = max(worst, abs(fd - G[i, j]) / max(1.0, abs(G[i, j])))
    out.append(_le("sigma_gradient", "sigma_k' matches finite differences", worst, 1e-6))
    cof = np.linalg.det(M) * np.linalg.inv(M).T
    out.append(_le("sigma_n_cofactor", "sigma_n' is the cofactor matrix", np.abs(sigma_grad(n, M) - cof).max(), 1e-9))
    worst = 0.0
    for _ in range(20):
        A = rng.standard_normal((n, n))
        if np.linalg.det(A) < 0:
            A[0] *= -1.0
        pd = polar(A)
        s = np.linalg.svd(A, compute_uv=False)
        worst = max(worst, abs(pd.Lambda**2 - np.sum((s - 1.0) ** 2)),
                    np.abs(pd.R0 @ pd.U - A).max())
    out.append(_le("polar_vs_svd", "polar distance matches singular values", worst, 1e-10))
    Q = random_rotation(n, rng)
    out.append(_le("rotation_distance", "rotations are at distance zero from SO(n)", polar(Q).dist2, 1e-20))
    return out


def suite_inequalities(n, level, seed, kappa=0.5, samples=10**6):
    rng = np.random.default_rng(seed)
    rule = sphere_rule(n, level)
    ball = ball_rule(n, min(level, 10))
    out = []
    p = n - 1
    c0 = figalli_zhang_c0(p, kappa)
    viol, worst = figalli_zhang_check(p, kappa, c0, samples=samples, seed=seed)
    out.append(_ge("vector_inequality_c0", f"searched c0(p={p}, kappa={kappa}) is positive", c0, 1e-12))
    out.append(_le("vector_inequality", f"lower Taylor bound for |X+Y|^{p} holds", viol, 0))
    v4, _ = figalli_zhang_check(p, kappa, 4.0 * c0, samples=samples, seed=seed)
    out.append(_ge("vector_inequality_sharp", "inflating c0 by 4 produces violations", v4, 1))
    fams = [normalized_linear_field(np.diag([1.2] + [1.0] * (n - 1))),
            bump_sphere_field(n, 0.3),
            compose(bump_sphere_field(n, 0.2), MobiusElement.random(n, rng))]
    worst_gap, worst_chain = np.inf, np.inf
    for u in fams:
        r = fn.deficit(u, rule)
        worst_gap = min(worst_gap, r.energy - abs(r.degree) + pass_tolerance(r.quadrature_error))
        lhs, mid, rhs = fn.wente_check(u, rule)
        slack = pass_tolerance(r.quadrature_error)
        worst_chain = min(worst_chain, lhs - mid + slack, mid - rhs + slack)
    out.append(_ge("energy_exceeds_degree", "conformal energy is at least |degree|", worst_gap, 0.0))
    out.append(_ge("isoperimetric_chain", "energy >= area >= volume^((n-1)/n)", worst_chain, 0.0))
    g, hb = np.inf, np.inf
    for _ in range(10):
        w = random_harmonic_field(n, [1, 2, 3], rng, 1.0)
        g = min(g, *fn.poincare_gaps(w, rule))
        lhs, rhs = fn.harmonic_energy_bound(w, ball, rule)
        hb = min(hb, rhs - lhs)
    out.append(_ge("poincare_gaps", "sharp Poincare inequalities hold", g, -1e-8))
    out.append(_ge("harmonic_energy_bound", "harmonic extension energy is bounded by the surface energy", hb, -1e-8))
    return out


_SUITE_FUNCS = {
    "geometry": suite_geometry,
    "quadrature": suite_quadrature,
    "functionals": suite_functionals,
    "algebra": suite_algebra,
    "inequalities": suite_inequalities,
}


def run_verify(suite, n=3, level=16, seed=0, **kwargs) -> dict:
    """Run one suite (or ``all``) and return a JSON-ready report.

    Raises
    ------
    UnknownSuite
    """
    if suite == "all":
        names = SUITES
    elif suite in _SUITE_FUNCS:
        names = (suite,)
    else:
        raise UnknownSuite(f"unknown suite {suite!r}; expected one of {SUITES + ('all',)}")
    checks = []
    for name in names:
        extra = kwargs if name == "inequalities" else {}
        for c in _SUITE_FUNCS[name](n, level, seed, **extra):
            d = asdict(c)
            d["suite"] = name
            checks.append(d)
    return {
        "suite": suite,
        "n": n,
        "level": level,
        "seed": seed,
        "passed": all(c["passed"] for c in checks),
        "checks": checks,
    }


# --------------------------------------------------------------- CSV helpers

def fmt(x) -> str:
    if isinstance(x, (bool, np.bool_)):
        return str(bool(x)).lower()
    if isinstance(x, (int, np.integer)):
        return str(int(x))
    if isinstance(x, (float, np.floating)):
        return format(float(x), ".17g")
    return str(x)


def rows_to_csv(rows) -> str:
    if not rows:
        return ""
    buf = io.StringIO()
    names = [f.name for f in fields(rows[0])]
    wr = csv.writer(buf, lineterminator="\n")
    wr.writerow(names)
    for r in rows:
        wr.writerow([fmt(getattr(r, k)) for k in names])
    return buf.getvalue()


def loglog_slope(x, y) -> float:
    """Least-squares slope of ``log y`` against ``log x``."""
    lx, ly = np.log(np.asarray(x, dtype=float)), np.log(np.asarray(y, dtype=float))
    return float(np.polyfit(lx, ly, 1)[0])


def log_grid(lo, hi, points):
    """``points`` log-spaced values from ``hi`` down to ``lo``."""
    return [float(v) for v in np.geomspace(hi, lo, points)]


# ------------------------------------------------------------------ sweeps

@dataclass
class SweepRow:
    eps: float
    flat_deficit: float
    mobius_distance: float
    ratio: float
    quadrature_error: float


def sharpness_row(n, eps, level=32, sphere_level=16) -> SweepRow:
    """Flat deficit and fitted flat Moebius distance of the bump family at ``eps``."""
    u = bump_family_field(n, eps)
    phi = inverse_stereographic_field(n)
    c, rad = u.support_hint
    disc = disc_rule(c, rad, level, breaks=(0.5,))
    coarse = disc_rule(c, rad, coarse_level(level), breaks=(0.5,))
    dfine = fn.flat_excess(u, phi, disc)
    err = abs(dfine - fn.flat_excess(u, phi, coarse))
    fit = fit_planar(u, disc, phi, sphere_rule(n, sphere_level))
    ratio = fit.objective / dfine if dfine > 0 else math.nan
    return SweepRow(eps, dfine, fit.objective, ratio, err)


def sharpness_sweep(n=4, eps_values=None, level=32, sphere_level=16):
    """Rows for each ``eps`` plus log-log slopes over the positive ``eps``.

    Returns
    -------
    rows : list of SweepRow
    summary : dict
        ``slope_deficit``, ``slope_distance`` and ``ratio_spread`` (max/min).
    """
    eps_values = log_grid(1e-2, 1e-1, 8) if eps_values is None else list(eps_values)
    rows = [sharpness_row(n, e, level, sphere_level) for e in eps_values]
    pos = [r for r in rows if r.eps > 0]
    summary = {"n": n, "target": n - 1, "constants": EMPIRICAL}
    if len(pos) >= 2:
        e = [r.eps for r in pos]
        ratios = [r.ratio for r in pos]
        summary.update(
            slope_deficit=loglog_slope(e, [r.flat_deficit for r in pos]),
            slope_distance=loglog_slope(e, [r.mobius_distance for r in pos]),
            ratio_spread=max(ratios) / min(ratios),
        )
    return rows, summary


@dataclass
class RatioProbeRow:
    family: str
    perturbation: float
    deficit: float
    fitted_distance: float
    ratio: float
    linear_part_dist2: float
    linear_ratio: float
    quadrature_error: float
    flag: str


RATIO_FAMILIES = ("normalized_linear", "bump_sphere", "composed")


def _direction(n, seed):
    """Fixed symmetric traceless unit matrix for the linear perturbations."""
    rng = np.random.default_rng(seed)
    B = rng.standard_normal((n, n))
    B = B + B.T
    B -= np.trace(B) / n * np.eye(n)
    return B / np.linalg.norm(B)


def ratio_family(family, n, t, seed=0) -> SphereField:
    if family == "normalized_linear":
        return normalized_linear_field(np.eye(n) + t * _direction(n, seed))
    if family == "bump_sphere":
        return bump_sphere_field(n, t)
    if family == "composed":
        e = np.zeros(n)
        e[0] = 1.0
        inner = MobiusElement(np.eye(n), e, 2.0)
        return compose(normalized_linear_field(np.eye(n) + t * _direction(n, seed)), inner)
    raise ValueError(f"unknown family {family!r}; expected one of {RATIO_FAMILIES}")


def ratio_row(family, n, t, level=16, seed=0, tol=1e-8) -> RatioProbeRow:
    rule = sphere_rule(n, level)
    u = ratio_family(family, n, t, seed)
    flag = "ok"
    try:
        psi = center(u, rule, tol=1e-10)
        uc = compose(u, psi)
    except CenteringFailed:
        flag = "centering_failed"
        uc = u
    rep = fn.deficit(uc, rule)
    fit = fit_mobius(uc, rule)
    A = fn.projections(uc, rule).A
    try:
        d2 = polar(A).dist2
    except ValueError:
        d2, flag = math.nan, "linear_part_not_orientable"
    big = rep.deficit > max(tol, 10 * rep.quadrature_error)
    ratio = fit.objective / rep.deficit if big else math.nan
    lratio = d2 / rep.deficit if big else math.nan
    return RatioProbeRow(family, t, rep.deficit, fit.objective, ratio, d2, lratio,
                         rep.quadrature_error, flag)


def ratio_probe(family="normalized_linear", n=4, grid=None, level=16, seed=0):
    grid = log_grid(1e-3, 1e-1, 7) if grid is None else list(grid)
    rows = [ratio_row(family, n, t, level, seed) for t in grid]
    finite = [r for r in rows if math.isfinite(r.ratio)]
    summary = {"family": family, "n": n, "constants": EMPIRICAL}
    if finite:
        summary["max_ratio"] = max(r.ratio for r in finite)
        summary["max_linear_ratio"] = max(r.linear_ratio for r in finite)
    return rows, summary


# ------------------------------------------------------------ single maps

def _flat_deficit_report(u: PlaneField, n, level):
    phi = inverse_stereographic_field(n)
    bg = u.background if u.background is not None else phi
    rule = sphere_rule(n, level)
    base = fn.deficit(pullback_to_sphere(bg), rule)
    if u.support_hint is None:
        return base.to_dict()
    c, rad = u.support_hint
    disc = disc_rule(c, rad, 2 * level, breaks=(0.5,))
    coarse = disc_rule(c, rad, coarse_level(2 * level), breaks=(0.5,))
    g = fn.gamma_n(n)

    def corrections(d):
        ex = fn.flat_excess(u, bg, d)
        dg = fn.flat_degree(u, d) - fn.flat_degree(bg, d)
        return ex / g, dg

    ex, dg = corrections(disc)
    exc, dgc = corrections(coarse)
    energy = base.energy + ex
    return fn.DeficitReport(energy, energy - 1.0, base.degree + dg,
                            base.quadrature_error + max(abs(ex - exc), abs(dg - dgc))).to_dict()


def deficit_report(spec, n, level=16) -> dict:
    from .map_model import field_from_spec

    u = field_from_spec(spec, n)
    if isinstance(u, PlaneField):
        return _flat_deficit_report(u, n, level)
    return fn.deficit(u, sphere_rule(n, level)).to_dict()


def fit_report(spec, n, level=16) -> dict:
    from .map_model import field_from_spec

    u = field_from_spec(spec, n)
    if isinstance(u, PlaneField):
        if u.support_hint is None:
            c, rad = np.zeros(n - 1), 1.0
        else:
            c, rad = u.support_hint
        disc = disc_rule(c, rad, 2 * level, breaks=(0.5,))
        return fit_planar(u, disc, sphere=sphere_rule(n, level)).to_dict()
    return fit_mobius(u, sphere_rule(n, level)).to_dict()


def center_report(spec, n, level=16, tol=1e-6) -> dict:
    from .map_model import field_from_spec

    u = field_from_spec(spec, n)
    if isinstance(u, PlaneField):
        u = pullback_to_sphere(u)
    rule = sphere_rule(n, level)
    psi = center(u, rule, tol)
    return {
        "element": psi.to_dict(),
        "mean_norm": float(np.linalg.norm(mean_after(u, psi, rule))),
        "deficit_before": fn.deficit(u, rule).deficit,
        "deficit_after": fn.deficit(compose(u, psi), rule).deficit,
    }


def dumps(obj) -> str:
    """Canonical JSON used for every report."""
    return json.dumps(obj, sort_keys=True, indent=2, default=_default)


def _default(o):
    if isinstance(o, np.ndarray):
        return o.tolist()
    if isinstance(o, (np.floating, np.integer, np.bool_)):
        return o.item()
    raise TypeError(f"not serializable: {type(o)}")
