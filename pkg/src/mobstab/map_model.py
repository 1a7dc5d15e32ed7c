"""Field abstraction and the built-in map families.

A :class:`SphereField` is backed by a smooth extension to a neighbourhood of
the sphere: ``ambient(X)`` returns values and the full ``n x n`` derivative
of that extension.  The tangential gradient in a frame ``P`` is then
``D @ P``, which makes every field frame-covariant by construction.

A :class:`PlaneField` maps ``R^{n-1} -> R^n`` and returns its ordinary
``n x (n-1)`` Jacobian.
"""

from __future__ import annotations

import json
from dataclasses import dataclass

import numpy as np

from .errors import InvalidEps, MalformedSpec, PoleSingularity, SingularMatrix
from .sphere_geometry import (
    MobiusElement,
    mobius_ambient_jacobian,
    mobius_apply,
    tangent_frames,
)


class SphereField:
    """A map ``S^{n-1} -> R^n`` with analytic tangential gradient.

    Parameters
    ----------
    n : int
        Ambient dimension.
    ambient : callable
        ``X (N, n) -> (values (N, n), D (N, n, n))`` for a smooth extension.
    sphere_valued : bool
        Whether ``|u| = 1`` on the sphere.
    name : str, optional
    """

    def __init__(self, n, ambient, sphere_valued=True, name=None):
        self.n = int(n)
        self.ambient = ambient
        self.sphere_valued = bool(sphere_valued)
        self.name = name or "field"

    def __repr__(self):
        return f"<SphereField {self.name} n={self.n}>"

    def evaluate(self, X, P=None):
        """Values ``(N, n)`` and tangential gradients ``(N, n, n-1)``."""
        X = np.atleast_2d(np.asarray(X, dtype=float))
        if P is None:
            P = tangent_frames(X)
        vals, D = self.ambient(X)
        return vals, D @ P

    def on_rule(self, rule):
        return self.evaluate(rule.nodes, rule.frames)

    def __call__(self, x):
        x = np.asarray(x, dtype=float)
        v, J = self.evaluate(x)
        return (v[0], J[0]) if x.ndim == 1 else (v, J)

    def values(self, X):
        return self.ambient(np.atleast_2d(np.asarray(X, dtype=float)))[0]


class PlaneField:
    """A map ``R^{n-1} -> R^n`` with full Jacobian.

    ``support_hint = (center, radius)`` declares that the field coincides
    with ``background`` outside that disc.
    """

    def __init__(self, n, fn, sphere_valued=True, support_hint=None, background=None, name=None):
        self.n = int(n)
        self.fn = fn
        self.sphere_valued = bool(sphere_valued)
        self.support_hint = support_hint
        self.background = background
        self.name = name or "plane-field"

    def __repr__(self):
        return f"<PlaneField {self.name} n={self.n}>"

    def evaluate(self, X):
        X = np.atleast_2d(np.asarray(X, dtype=float))
        return self.fn(X)

    def __call__(self, x):
        x = np.asarray(x, dtype=float)
        v, J = self.evaluate(x)
        return (v[0], J[0]) if x.ndim == 1 else (v, J)


@dataclass(frozen=True)
class PlanarMobiusElement:
    """``x -> R phi(rho (x - x0))`` in the flat chart."""

    R: np.ndarray
    x0: np.ndarray
    rho: float

    def __post_init__(self):
        R = np.array(self.R, dtype=float)
        x0 = np.array(self.x0, dtype=float)
        n = R.shape[0]
        if R.shape != (n, n) or x0.shape != (n - 1,):
            raise ValueError("need R (n x n) and x0 in R^{n-1}")
        if not np.allclose(R.T @ R, np.eye(n), atol=1e-10) or np.linalg.det(R) < 0:
            raise ValueError("R is not in SO(n)")
        if not self.rho > 0:
            raise ValueError("rho must be positive")
        object.__setattr__(self, "R", R)
        object.__setattr__(self, "x0", x0)
        object.__setattr__(self, "rho", float(self.rho))

    @property
    def n(self):
        return self.R.shape[0]

    @classmethod
    def identity(cls, n):
        return cls(np.eye(n), np.zeros(n - 1), 1.0)

    def to_dict(self):
        return {"R": self.R.tolist(), "x0": self.x0.tolist(), "rho": self.rho}


# ------------------------------------------------------------ sphere families

def mobius_field(m: MobiusElement) -> SphereField:
    def ambient(X):
        return mobius_apply(m, X), mobius_ambient_jacobian(m, X)

    return SphereField(m.n, ambient, True, "mobius")


def identity_field(n) -> SphereField:
    return orthogonal_field(np.eye(n))


def orthogonal_field(Q) -> SphereField:
    """``x -> Q x`` for any orthogonal ``Q`` (degree ``det Q``)."""
    Q = np.asarray(Q, dtype=float)
    n = Q.shape[0]

    def ambient(X):
        return X @ Q.T, np.broadcast_to(Q, (X.shape[0], n, n))

    return SphereField(n, ambient, True, "orthogonal")


def _normalize_with_jacobian(Y, DY):
    """Compose ``y -> y/|y|`` with a map whose values/derivatives are Y, DY."""
    r = np.linalg.norm(Y, axis=1)
    Yh = Y / r[:, None]
    n = Y.shape[1]
    Pn = (np.eye(n)[None] - Yh[:, :, None] * Yh[:, None, :]) / r[:, None, None]
    return Yh, Pn @ DY


def normalized_linear_field(A) -> SphereField:
    """``x -> A x / |A x|``."""
    A = np.asarray(A, dtype=float)
    if abs(np.linalg.det(A)) <= 1e-12:
        raise SingularMatrix("normalized_linear needs an invertible matrix")
    n = A.shape[0]

    def ambient(X):
        Y = X @ A.T
        return _normalize_with_jacobian(Y, np.broadcast_to(A, (X.shape[0], n, n)))

    return SphereField(n, ambient, True, "normalized_linear")


def bump_sphere_field(n, t, pole=None, width=0.5, direction=None) -> SphereField:
    """Smooth normalized perturbation of the identity concentrated near ``pole``.

    ``u(x) = (x + t b(x) e)/|x + t b(x) e|`` with the Gaussian bump
    ``b(x) = exp(-|x - pole|^2 / (2 width^2))`` and ``e = direction``.
    Degree one for ``|t| < 1``.
    """
    pole = np.eye(n)[-1] if pole is None else np.asarray(pole, dtype=float)
    e = np.eye(n)[0] if direction is None else np.asarray(direction, dtype=float)
    if not abs(t) < 1:
        raise ValueError("bump amplitude must satisfy |t| < 1")

    def ambient(X):
        d = X - pole
        b = np.exp(-np.sum(d * d, axis=1) / (2 * width**2))
        Y = X + t * b[:, None] * e
        grad_b = -b[:, None] * d / width**2
        DY = np.eye(n)[None] + t * e[None, :, None] * grad_b[:, None, :]
        return _normalize_with_jacobian(Y, DY)

    return SphereField(n, ambient, True, "bump_sphere")


def compose(outer: SphereField, inner: MobiusElement) -> SphereField:
    """``outer o inner`` for a Moebius reparametrization ``inner``."""

    def ambient(X):
        Y = mobius_apply(inner, X)
        Dm = mobius_ambient_jacobian(inner, X)
        v, Du = outer.ambient(Y)
        return v, Du @ Dm

    return SphereField(outer.n, ambient, outer.sphere_valued, f"{outer.name}.mobius")


def rotate(u: SphereField, Q) -> SphereField:
    """``Q u`` for ``Q`` orthogonal."""
    Q = np.asarray(Q, dtype=float)

    def ambient(X):
        v, D = u.ambient(X)
        return v @ Q.T, Q[None] @ D

    return SphereField(u.n, ambient, u.sphere_valued, f"Q.{u.name}")


# ------------------------------------------------------------- flat families

def _inv_stereo(X):
    """Values (N, n) and Jacobian (N, n, n-1) of the inverse stereographic map."""
    N, d = X.shape
    r2 = np.sum(X * X, axis=1)
    q = 1.0 + r2
    V = np.empty((N, d + 1))
    V[:, :d] = -2.0 * X / q[:, None]
    V[:, d] = (1.0 - r2) / q
    J = np.empty((N, d + 1, d))
    J[:, :d, :] = -2.0 * np.eye(d)[None] / q[:, None, None] + 4.0 * X[:, :, None] * X[:, None, :] / (q**2)[:, None, None]
    J[:, d, :] = -4.0 * X / (q**2)[:, None]
    return V, J


def inverse_stereographic_field(n) -> PlaneField:
    """Inverse stereographic projection ``R^{n-1} -> S^{n-1}`` through ``-e_n``."""
    return PlaneField(n, _inv_stereo, True, name="inverse_stereo")


def planar_mobius_field(pm: PlanarMobiusElement) -> PlaneField:
    def fn(X):
        V, J = _inv_stereo(pm.rho * (X - pm.x0))
        return V @ pm.R.T, pm.rho * (pm.R[None] @ J)

    return PlaneField(pm.n, fn, True, name="planar_mobius")


def cutoff(r):
    """Radial C^infinity cut-off: 1 on r <= 1/2, 0 on r >= 1, and its derivative.

    Standard smooth step ``f(1-s)/(f(1-s)+f(s))`` with ``f(s) = exp(-1/s)``
    and ``s = 2r - 1``.
    """
    r = np.asarray(r, dtype=float)
    s = 2.0 * r - 1.0
    inner = (s > 0) & (s < 1)
    z = np.where(r <= 0.5, 1.0, 0.0)
    dz = np.zeros_like(r)
    si = s[inner]
    a = np.exp(-1.0 / (1.0 - si))
    b = np.exp(-1.0 / si)
    z[inner] = a / (a + b)
    dz[inner] = -2.0 * a * b * (1.0 / (1.0 - si) ** 2 + 1.0 / si**2) / (a + b) ** 2
    return z, dz


def decay_center(n, eps) -> np.ndarray:
    """Bump centre ``(10/eps^2, 0, ..., 0)``.

    Beyond radius 2 the inverse stereographic map satisfies
    ``|phi^j| <= 2/|x|`` and ``|grad phi| <= 4/|x|^2``, so this keeps both
    below ``eps^2`` on the unit disc around the centre.
    """
    c = np.zeros(n - 1)
    c[0] = 10.0 / eps**2 if eps > 0 else 0.0
    return c


def bump_family_field(n, eps, center=None) -> PlaneField:
    """``(phi + eps zeta(x - c) e_1) / |phi + eps zeta(x - c) e_1|``.

    Coincides with the inverse stereographic map outside the unit disc
    around ``c``; ``c`` defaults to :func:`decay_center`.
    """
    if not 0.0 <= eps < 1.0:
        raise InvalidEps(f"eps must lie in [0, 1), got {eps!r}")
    c = decay_center(n, eps) if center is None else np.asarray(center, dtype=float)

    def fn(X):
        V, J = _inv_stereo(X)
        if eps == 0.0:
            return V, J
        d = X - c
        r = np.linalg.norm(d, axis=1)
        inside = r < 1.0
        if not np.any(inside):
            return V, J
        z, dz = cutoff(r[inside])
        Xi = d[inside]
        with np.errstate(invalid="ignore", divide="ignore"):
            gz = np.where(r[inside][:, None] > 0, dz[:, None] * Xi / r[inside][:, None], 0.0)
        W = V[inside].copy()
        W[:, 0] += eps * z
        DW = J[inside].copy()
        DW[:, 0, :] += eps * gz
        V[inside], J[inside] = _normalize_with_jacobian(W, DW)
        return V, J

    phi = inverse_stereographic_field(n)
    return PlaneField(n, fn, True, support_hint=(c, 1.0), background=phi, name=f"bump(eps={eps:g})")


# ------------------------------------------------------------ chart transport

def _chart(Y):
    """Inverse of the inverse stereographic map, extended off the sphere."""
    q = 1.0 + Y[:, -1]
    if np.any(q <= 1e-12):
        raise PoleSingularity("point at the south pole has no flat chart image")
    d = Y.shape[1] - 1
    X = -Y[:, :d] / q[:, None]
    D = np.zeros((Y.shape[0], d, d + 1))
    D[:, :, :d] = -np.eye(d)[None] / q[:, None, None]
    D[:, :, d] = Y[:, :d] / (q**2)[:, None]
    return X, D


def pullback_to_sphere(p: PlaneField) -> SphereField:
    """``p o chart``: the sphere-side representative of a flat map."""

    def ambient(Y):
        X, Dc = _chart(Y)
        v, J = p.evaluate(X)
        return v, J @ Dc

    return SphereField(p.n, ambient, p.sphere_valued, f"pullback({p.name})")


def push_to_plane(s: SphereField) -> PlaneField:
    """``s o phi`` with ``phi`` the inverse stereographic map."""

    def fn(X):
        V, J = _inv_stereo(X)
        v, D = s.ambient(V)
        return v, D @ J

    return PlaneField(s.n, fn, s.sphere_valued, name=f"push({s.name})")


# ---------------------------------------------------------------- map specs

FAMILIES = ("mobius", "normalized_linear", "inverse_stereo", "bump", "compose")


def _need(params, key, where):
    if key not in params:
        raise MalformedSpec(f"missing required field {key!r}", where)
    return params[key]


def _matrix(value, n, where):
    try:
        A = np.asarray(value, dtype=float)
    except (TypeError, ValueError) as exc:
        raise MalformedSpec(f"not a numeric matrix ({exc})", where) from None
    if A.shape != (n, n):
        raise MalformedSpec(f"expected a {n}x{n} matrix, got shape {A.shape}", where)
    return A


def mobius_from_params(params, n, where="params") -> MobiusElement:
    if not isinstance(params, dict):
        raise MalformedSpec("expected an object", where)
    R = _matrix(params.get("R", np.eye(n).tolist()), n, f"{where}.R")
    xi = np.asarray(params.get("xi", np.eye(n)[-1]), dtype=float)
    if xi.shape != (n,):
        raise MalformedSpec(f"expected a length-{n} vector", f"{where}.xi")
    lam = params.get("lambda", 1.0)
    try:
        return MobiusElement(R, xi / np.linalg.norm(xi), float(lam))
    except (ValueError, ZeroDivisionError) as exc:
        raise MalformedSpec(str(exc), where) from None


def field_from_spec(spec, n, where="$"):
    """Build a field from a map-spec document.

    ``{"family": ..., "params": {...}}``; parameters may also be given at the
    top level next to ``family``.  Flat families (``inverse_stereo``,
    ``bump``) return a :class:`PlaneField`; the rest a :class:`SphereField`.
    """
    if not isinstance(spec, dict):
        raise MalformedSpec("map spec must be a JSON object", where)
    family = _need(spec, "family", where)
    params = dict(spec.get("params", {}))
    params.update({k: v for k, v in spec.items() if k not in ("family", "params")})
    pw = f"{where}.params"
    if family == "mobius":
        return mobius_field(mobius_from_params(params, n, pw))
    if family == "normalized_linear":
        A = _matrix(_need(params, "matrix", pw), n, f"{pw}.matrix")
        try:
            return normalized_linear_field(A)
        except SingularMatrix as exc:
            raise MalformedSpec(str(exc), f"{pw}.matrix") from None
    if family == "inverse_stereo":
        return inverse_stereographic_field(n)
    if family == "bump":
        eps = _need(params, "eps", pw)
        center = params.get("center")
        try:
            return bump_family_field(n, float(eps), center)
        except InvalidEps as exc:
            raise MalformedSpec(str(exc), f"{pw}.eps") from None
    if family == "compose":
        inner = mobius_from_params(_need(params, "inner", pw), n, f"{pw}.inner")
        outer = field_from_spec(_need(params, "outer", pw), n, f"{pw}.outer")
        if not isinstance(outer, SphereField):
            raise MalformedSpec("outer map must be a sphere field", f"{pw}.outer")
        return compose(outer, inner)
    raise MalformedSpec(f"unknown family {family!r}; expected one of {FAMILIES}", f"{where}.family")


def load_spec(path):
    """Read a map-spec JSON file, reporting syntax errors by line."""
    with open(path) as fh:
        text = fh.read()
    try:
        return json.loads(text)
    except json.JSONDecodeError as exc:
        raise MalformedSpec(exc.msg, f"line {exc.lineno}") from None
