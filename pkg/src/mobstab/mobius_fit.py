"""Centering and nearest-Moebius fitting.

Sphere-side Moebius maps ``R phi_{xi,lam}`` are parameterized by a skew
matrix ``S`` (``R = R0 expm(S)``) and the boost vector ``a = log(lam) xi``,
which is a global chart of the dilation part and regular at the identity.
Flat-side maps ``x -> R phi(rho (x - x0))`` use ``(S, x0, log rho)``.

Both fits first solve the ``p = 2`` problem by Levenberg-Marquardt (the
``p = n - 1`` objective is degenerate at zero-residual minimizers when
``p > 2``), keep that start only if it lowers the true objective, and then
run BFGS with central finite-difference gradients.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field

import numpy as np
from scipy.linalg import expm
from scipy.optimize import least_squares, minimize

from .errors import CenteringFailed, MaxIterations
from .map_model import (
    PlanarMobiusElement,
    PlaneField,
    SphereField,
    _chart,
    _inv_stereo,
    inverse_stereographic_field,
)
from .quadrature import integrate, sphere_area, sphere_rule
from .sphere_geometry import MobiusElement, boost_from_vector, mobius_ambient_jacobian, mobius_apply

FD_STEP = 1e-5
LAMBDA_MAX = 1e3
PENALTY = 1e10


@dataclass
class FitResult:
    """Outcome of a fit; ``history`` lists the objective after each iteration."""

    element: MobiusElement | PlanarMobiusElement
    objective: float
    iterations: int
    converged: bool
    gradient_norm: float
    history: list = field(default_factory=list)

    def to_dict(self):
        return {
            "element": self.element.to_dict(),
            "objective": self.objective,
            "iterations": self.iterations,
            "converged": self.converged,
            "gradient_norm": self.gradient_norm,
        }

    def to_json(self):
        return json.dumps(self.to_dict())


def _skew(v, n):
    S = np.zeros((n, n))
    S[np.triu_indices(n, 1)] = v
    return S - S.T


def _n_skew(n):
    return n * (n - 1) // 2


def central_gradient(f, x, h=FD_STEP):
    g = np.empty_like(x)
    for i in range(x.size):
        e = np.zeros_like(x)
        e[i] = h
        g[i] = (f(x + e) - f(x - e)) / (2 * h)
    return g


def _run(f, x0, maxiter, gtol, strict):
    """BFGS with FD gradients; returns (x, fun, nit, converged, gnorm, history)."""
    history = [f(x0)]
    best = [x0.copy(), history[0]]

    def cb(xk):
        fk = f(xk)
        history.append(fk)
        if fk <= best[1]:
            best[0], best[1] = xk.copy(), fk

    jac = lambda x: central_gradient(f, x)
    g0 = jac(x0)
    if np.linalg.norm(g0, np.inf) <= gtol:
        return x0, history[0], 0, True, float(np.linalg.norm(g0)), history
    res = minimize(f, x0, jac=jac, method="BFGS", callback=cb,
                   options={"maxiter": maxiter, "gtol": gtol})
    if res.fun <= best[1]:
        best = [res.x, float(res.fun)]
    gnorm = float(np.linalg.norm(jac(best[0])))
    converged = bool(res.success) or gnorm <= gtol
    if res.status == 1 and strict:
        raise MaxIterations(f"no convergence after {maxiter} iterations")
    return best[0], best[1], int(res.nit), converged, gnorm, history


# ------------------------------------------------------------ sphere side

class _SphereModel:
    def __init__(self, R0, n):
        self.R0 = np.asarray(R0, dtype=float)
        self.n = n
        self.k = _n_skew(n)

    def element(self, v):
        R = self.R0 @ expm(_skew(v[:self.k], self.n))
        xi, lam = boost_from_vector(v[self.k:])
        return MobiusElement(R, xi, lam)

    def admissible(self, v):
        return np.linalg.norm(v[self.k:]) <= np.log(LAMBDA_MAX)


def _params_of(m: MobiusElement):
    return np.concatenate([np.zeros(_n_skew(m.n)), np.log(m.lam) * m.xi])


def fit_objective(u: SphereField, m: MobiusElement, rule, p=None) -> float:
    """``avg |grad_T u - grad_T m|^p`` with ``p = n - 1`` by default."""
    p = u.n - 1 if p is None else p
    _, Ju = u.on_rule(rule)
    Jm = mobius_ambient_jacobian(m, rule.nodes) @ rule.frames
    return integrate(rule, np.sum((Ju - Jm) ** 2, axis=(1, 2)) ** (p / 2))


def fit_mobius(u: SphereField, rule, init: MobiusElement | None = None, maxiter=200,
               gtol=1e-9, warm_start=True, strict=False) -> FitResult:
    """Local minimizer of ``avg |grad_T u - grad_T(R phi_{xi,lam})|^{n-1}``.

    Parameters
    ----------
    u : SphereField
    rule : SphereRule
    init : MobiusElement, optional
        Starting element; the identity by default.
    maxiter : int
        BFGS iteration cap.  When reached the best iterate is returned with
        ``converged = False`` (or :class:`MaxIterations` is raised if
        ``strict``).
    gtol : float
        Gradient tolerance (max-norm of the FD gradient).
    warm_start : bool
        Solve the quadratic problem first.

    Returns
    -------
    FitResult
        The objective at return never exceeds the objective at ``init``.
    """
    n = u.n
    p = n - 1
    init = MobiusElement.identity(n) if init is None else init
    _, Ju = u.on_rule(rule)
    X, P = rule.nodes, rule.frames
    w = rule.weights

    def residual_jac(v, model):
        return Ju - mobius_ambient_jacobian(model.element(v), X) @ P

    model = _SphereModel(init.R, n)
    v0 = _params_of(init)

    def f(v, model=model):
        if not model.admissible(v):
            return PENALTY * (1.0 + np.linalg.norm(v))
        D = residual_jac(v, model)
        return integrate(rule, np.sum(D * D, axis=(1, 2)) ** (p / 2))

    f_init = f(v0)
    if warm_start and f_init > 0.0:
        sw = np.sqrt(w)[:, None, None]

        def lsq(v):
            if not model.admissible(v):
                return np.full(Ju.size, PENALTY)
            return (sw * residual_jac(v, model)).ravel()

        ls = least_squares(lsq, v0, method="lm", xtol=1e-15, ftol=1e-15, gtol=1e-15,
                           max_nfev=200 * v0.size)
        if f(ls.x) < f_init:
            # re-centre the rotation chart at the warm start
            m_ws = model.element(ls.x)
            model = _SphereModel(m_ws.R, n)
            v0 = _params_of(m_ws)

    fm = lambda v: f(v, model)
    x, fun, nit, conv, gnorm, hist = _run(fm, v0, maxiter, gtol, strict)
    return FitResult(model.element(x), float(fun), nit, conv, gnorm, [float(h) for h in hist])


def map_displacement(m1: MobiusElement, m2: MobiusElement, X) -> float:
    """Max over X of ``|m1(x) - m2(x)|``; compares elements as maps."""
    return float(np.max(np.linalg.norm(mobius_apply(m1, X) - mobius_apply(m2, X), axis=1)))


# ---------------------------------------------------------------- centering

def _boost(a, n):
    xi, lam = boost_from_vector(a)
    return MobiusElement(np.eye(n), xi, lam)


def mean_after(u: SphereField, m: MobiusElement, rule) -> np.ndarray:
    """``avg u o m``."""
    return integrate(rule, u.values(mobius_apply(m, rule.nodes)))


def center(u: SphereField, rule, tol=1e-6) -> MobiusElement:
    """A dilation ``phi_{xi,lam}`` with ``|avg u o phi_{xi,lam}| <= tol``.

    Minimizes ``|F(a)|^2`` with ``F(a) = avg u o phi(a)`` by
    Levenberg-Marquardt from the identity and from ``a = log(lam) (+-e_i)``
    for ``lam`` in ``{0.25, 0.5}``.  Returns the identity when u is already
    centred.

    Raises
    ------
    CenteringFailed
        If no start reaches ``|F| <= tol``.
    """
    n = u.n
    ident = MobiusElement.identity(n)
    if np.linalg.norm(mean_after(u, ident, rule)) <= tol:
        return ident
    amax = np.log(LAMBDA_MAX)

    def F(a):
        if np.linalg.norm(a) > amax:
            return np.full(n, PENALTY)
        return mean_after(u, _boost(a, n), rule)

    starts = [np.zeros(n)]
    for lam in (0.25, 0.5):
        for i in range(n):
            for sgn in (1.0, -1.0):
                starts.append(sgn * np.log(lam) * np.eye(n)[i])
    best = (np.inf, None)
    for a0 in starts:
        res = least_squares(F, a0, method="lm", xtol=1e-15, ftol=1e-15, gtol=1e-15,
                            max_nfev=400)
        r = float(np.linalg.norm(F(res.x)))
        if r < best[0]:
            best = (r, res.x)
        if r <= tol:
            return _boost(res.x, n)
    raise CenteringFailed(f"best |mean| after centering was {best[0]:.3e} > {tol:g}")


# ---------------------------------------------------------------- flat side

class _PlanarModel:
    def __init__(self, R0, n):
        self.R0 = np.asarray(R0, dtype=float)
        self.n = n
        self.k = _n_skew(n)

    def element(self, v):
        R = self.R0 @ expm(_skew(v[:self.k], self.n))
        return PlanarMobiusElement(R, v[self.k:self.k + self.n - 1], float(np.exp(v[-1])))

    def admissible(self, v):
        return abs(v[-1]) <= np.log(LAMBDA_MAX)


def _planar_jac(pm: PlanarMobiusElement, X):
    _, J = _inv_stereo(pm.rho * (X - pm.x0))
    return pm.rho * (pm.R[None] @ J)


def _planar_sphere_jac(pm: PlanarMobiusElement, Y, P):
    """Tangential gradient of ``psi o chart`` at sphere points."""
    Xc, Dc = _chart(Y)
    return _planar_jac(pm, Xc) @ Dc @ P


@dataclass
class PlanarObjective:
    """``int |grad u - grad psi|^{n-1}`` over R^{n-1} for u equal to ``background`` off a disc.

    The disc part is integrated directly.  The off-disc part equals
    ``int_{R^{n-1}} |grad bg - grad psi|^{n-1} - int_disc |grad bg - grad psi|^{n-1}``;
    the whole-plane integral is evaluated on the sphere through the chart,
    using that ``int |grad f|^{n-1}`` is invariant under conformal changes of
    variable in dimension ``n - 1``.
    """

    u: PlaneField
    disc: object
    background: PlaneField
    sphere: object

    def __post_init__(self):
        n = self.u.n
        self.p = n - 1
        X = self.disc.nodes
        self.Ju = self.u.evaluate(X)[1]
        self.Jb = self.background.evaluate(X)[1]
        S = self.sphere
        Y, P = S.nodes, S.frames
        Xc, Dc = _chart(Y)
        self.Jb_s = self.background.evaluate(Xc)[1] @ Dc @ P
        self.area = sphere_area(n)

    def _pow(self, D):
        return np.sum(D * D, axis=(-2, -1)) ** (self.p / 2)

    def parts(self, pm: PlanarMobiusElement):
        """``(disc term, off-disc term)``."""
        Jpsi = _planar_jac(pm, self.disc.nodes)
        inner = integrate(self.disc, self._pow(self.Ju - Jpsi))
        bg_disc = integrate(self.disc, self._pow(self.Jb - Jpsi))
        Js = _planar_sphere_jac(pm, self.sphere.nodes, self.sphere.frames)
        whole = self.area * integrate(self.sphere, self._pow(self.Jb_s - Js))
        return inner, whole - bg_disc

    def __call__(self, pm):
        a, b = self.parts(pm)
        return a + b


def fit_planar(u: PlaneField, disc, background: PlaneField | None = None, sphere=None,
               init: PlanarMobiusElement | None = None, maxiter=200, gtol=1e-9,
               warm_start=True, strict=False) -> FitResult:
    """Nearest map ``x -> R phi(rho (x - x0))`` to a flat field in ``W^{1,n-1}``.

    Parameters
    ----------
    u : PlaneField
        Must coincide with ``background`` outside ``disc``.
    disc : DiscRule
    background : PlaneField, optional
        Defaults to ``u.background`` and then to the inverse stereographic map.
    sphere : SphereRule, optional
        Rule for the whole-plane background term (level 24 by default).
    init : PlanarMobiusElement, optional
        Defaults to ``(I, 0, 1)``, i.e. ``psi = phi``.
    """
    n = u.n
    if background is None:
        background = u.background if u.background is not None else inverse_stereographic_field(n)
    sphere = sphere_rule(n, 24) if sphere is None else sphere
    obj = PlanarObjective(u, disc, background, sphere)
    init = PlanarMobiusElement.identity(n) if init is None else init
    model = _PlanarModel(init.R, n)
    v0 = np.concatenate([np.zeros(_n_skew(n)), init.x0, [np.log(init.rho)]])

    def f(v, model=model):
        if not model.admissible(v):
            return PENALTY * (1.0 + np.linalg.norm(v))
        return obj(model.element(v))

    f_init = f(v0)
    if warm_start and f_init > 0.0:
        # quadratic fit of the background-completed map on the sphere
        Y, P = sphere.nodes, sphere.frames
        sw = np.sqrt(sphere.weights)[:, None, None]
        Xc, Dc = _chart(Y)
        Xin = np.linalg.norm(Xc - disc.center, axis=1) <= disc.radius
        Jt = obj.Jb_s.copy()
        if np.any(Xin):
            Jt[Xin] = u.evaluate(Xc[Xin])[1] @ Dc[Xin] @ P[Xin]

        def lsq(v):
            if not model.admissible(v):
                return np.full(Jt.size, PENALTY)
            return (sw * (Jt - _planar_sphere_jac(model.element(v), Y, P))).ravel()

        ls = least_squares(lsq, v0, method="lm", xtol=1e-15, ftol=1e-15, gtol=1e-15,
                           max_nfev=200 * v0.size)
        if f(ls.x) < f_init:
            pm = model.element(ls.x)
            model = _PlanarModel(pm.R, n)
            v0 = np.concatenate([np.zeros(_n_skew(n)), pm.x0, [np.log(pm.rho)]])

    fm = lambda v: f(v, model)
    x, fun, nit, conv, gnorm, hist = _run(fm, v0, maxiter, gtol, strict)
    return FitResult(model.element(x), float(fun), nit, conv, gnorm, [float(h) for h in hist])
