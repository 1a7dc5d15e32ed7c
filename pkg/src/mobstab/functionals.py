"""Integral functionals of sphere and flat maps.

Sphere averages use a :class:`~mobstab.quadrature.SphereRule`; flat integrals
over R^{n-1} use disc or plane rules.  The degree integrand at a node is the
determinant of the ``n x n`` matrix with columns
``(d_tau_1 u, ..., d_tau_{n-1} u, u)``, which makes ``deg(id) = +1`` for the
positively oriented frames of :mod:`mobstab.sphere_geometry`.
"""

from __future__ import annotations

import json
from dataclasses import asdict, dataclass
from typing import NamedTuple

import numpy as np

from .errors import NotBandLimited
from .harmonics import PolynomialField
from .map_model import PlaneField, SphereField
from .matrix_algebra import sigma_grad
from .quadrature import coarse_level, integrate, sphere_area, sphere_rule, unit_ball_volume


def gamma_n(n: int) -> float:
    """Flat conformal energy of the inverse stereographic map, (n-1)^{(n-1)/2} n omega_n."""
    return (n - 1) ** ((n - 1) / 2) * sphere_area(n)


def _fro2(J):
    return np.sum(J * J, axis=(-2, -1))


def energy_density(J) -> np.ndarray:
    """``(|J|^2/(n-1))^{(n-1)/2}`` per node, J of shape ``(..., n, n-1)``."""
    k = J.shape[-1]
    return (_fro2(J) / k) ** (k / 2)


def _degree_integrand(vals, J):
    return np.linalg.det(np.concatenate([J, vals[..., None]], axis=-1))


@dataclass(frozen=True)
class DeficitReport:
    energy: float
    deficit: float
    degree: float
    quadrature_error: float

    def to_dict(self):
        return asdict(self)

    def to_json(self):
        return json.dumps(self.to_dict())


def _energy_degree(u, rule):
    vals, J = u.on_rule(rule)
    return integrate(rule, energy_density(J)), integrate(rule, _degree_integrand(vals, J))


def deficit(u: SphereField, rule, error: bool = True) -> DeficitReport:
    """Conformal energy, deficit and degree of ``u``.

    ``quadrature_error`` is the larger of the energy and degree differences
    against the companion rule at :func:`~mobstab.quadrature.coarse_level`
    (zero when ``error`` is False).
    """
    e, d = _energy_degree(u, rule)
    err = 0.0
    if error:
        coarse = sphere_rule(rule.n, coarse_level(rule.level))
        ec, dc = _energy_degree(u, coarse)
        err = max(abs(e - ec), abs(d - dc))
    return DeficitReport(float(e), float(e - 1.0), float(d), float(err))


def degree(u: SphereField, rule) -> float:
    vals, J = u.on_rule(rule)
    return integrate(rule, _degree_integrand(vals, J))


def conformality_residuals(u: SphereField, rule) -> np.ndarray:
    """Per-node ``max |J^t J - |J|^2/(n-1) I|``."""
    from .sphere_geometry import conformality_residual

    return conformality_residual(u.on_rule(rule)[1])


def wente_check(u: SphereField, rule):
    """The chain energy >= area >= |V_n|^{(n-1)/n}.

    Returns ``(lhs, mid, rhs)`` with ``lhs`` the normalized conformal energy,
    ``mid`` the average of ``sqrt(det(J^t J))`` and ``rhs`` the
    ``(n-1)/n`` power of the enclosed-volume functional.
    """
    vals, J = u.on_rule(rule)
    n = u.n
    lhs = integrate(rule, energy_density(J))
    G = np.swapaxes(J, -1, -2) @ J
    mid = integrate(rule, np.sqrt(np.clip(np.linalg.det(G), 0.0, None)))
    vol = integrate(rule, _degree_integrand(vals, J))
    return lhs, mid, abs(vol) ** ((n - 1) / n)


@dataclass(frozen=True)
class HarmonicLinearPart:
    """Zeroth and first spherical-harmonic projections.

    ``mean`` is the average of u; ``A`` is the gradient at the origin of the
    harmonic extension, so the first projection is ``x -> A x``.
    """

    A: np.ndarray
    mean: np.ndarray


def projections(u: SphereField, rule) -> HarmonicLinearPart:
    """``mean = avg u`` and ``A = n avg(u (x) x)``.

    The second formula follows from ``avg x_k x_l = delta_kl / n``.
    """
    vals = u.values(rule.nodes)
    mean = integrate(rule, vals)
    A = u.n * integrate(rule, vals[:, :, None] * rule.nodes[:, None, :])
    return HarmonicLinearPart(np.asarray(A), np.asarray(mean))


def poincare_gaps(u: SphereField, rule):
    """Slack in the two sharp Poincare inequalities.

    ``gap1 = avg|grad_T u|^2 - (n-1) avg|u - P0 u|^2`` and
    ``gap2 = avg|grad_T(u - P1 u)|^2 - 2n avg|u - P0 u - P1 u|^2``.
    """
    n = u.n
    lin = projections(u, rule)
    vals, J = u.on_rule(rule)
    X, P = rule.nodes, rule.frames
    r0 = vals - lin.mean
    r1 = r0 - X @ lin.A.T
    J1 = J - lin.A[None] @ P
    gap1 = integrate(rule, _fro2(J)) - (n - 1) * integrate(rule, np.sum(r0 * r0, axis=1))
    gap2 = integrate(rule, _fro2(J1)) - 2 * n * integrate(rule, np.sum(r1 * r1, axis=1))
    return gap1, gap2


def _require_band_limited(u):
    if not (isinstance(u, PolynomialField) and u.harmonic):
        raise NotBandLimited(f"{u!r} has no harmonic-polynomial representation")


def harmonic_energy_bound(u, ball, rule):
    """``(avg_B |grad u_h|^2, n/(n-1) avg_S |grad_T u|^2)``; lhs <= rhs."""
    _require_band_limited(u)
    n = u.n
    _, G = u.extension(ball.nodes)
    lhs = integrate(ball, _fro2(G))
    _, J = u.on_rule(rule)
    rhs = n / (n - 1) * integrate(rule, _fro2(J))
    return lhs, rhs


class NullLagrangianResult(NamedTuple):
    lhs: float
    rhs: float
    residual: float


def null_lagrangian_terms(w: SphereField, rule) -> np.ndarray:
    """Boundary terms ``(n/k) avg <w, sigma_k'(grad_T w P_T^t) x>``, k = 1..n.

    ``sigma_k'`` is the gradient of ``sigma_k`` with respect to the matrix
    entries (see :func:`mobstab.matrix_algebra.sigma_grad`).
    """
    n = w.n
    vals, J = w.on_rule(rule)
    X, P = rule.nodes, rule.frames
    M = J @ np.swapaxes(P, -1, -2)
    terms = np.empty(n)
    for k in range(1, n + 1):
        Gk = sigma_grad(k, M)
        terms[k - 1] = n / k * integrate(rule, np.einsum("ni,nij,nj->n", vals, Gk, X))
    return terms


def null_lagrangian_identity(w, ball, rule) -> NullLagrangianResult:
    """Compare ``avg_B det(I + grad w_h)`` with its boundary expansion."""
    _require_band_limited(w)
    n = w.n
    _, G = w.extension(ball.nodes)
    lhs = integrate(ball, np.linalg.det(np.eye(n)[None] + G))
    rhs = 1.0 + float(np.sum(null_lagrangian_terms(w, rule)))
    return NullLagrangianResult(lhs, rhs, abs(lhs - rhs))


def ball_jacobian_average(w, ball) -> float:
    """``avg_B det(grad w_h)`` for a band-limited field."""
    _require_band_limited(w)
    _, G = w.extension(ball.nodes)
    return integrate(ball, np.linalg.det(G))


def volume_functional(u: SphereField, rule) -> float:
    """``avg <u, wedge d_tau u>``: the relative enclosed volume (degree if |u| = 1)."""
    return degree(u, rule)


def grad_distance(u: SphereField, v: SphereField, rule, p=None) -> float:
    """``avg |grad_T u - grad_T v|^p`` with ``p`` defaulting to n-1."""
    p = u.n - 1 if p is None else p
    _, Ju = u.on_rule(rule)
    _, Jv = v.on_rule(rule)
    return integrate(rule, _fro2(Ju - Jv) ** (p / 2))


def linear_moments(A, rule):
    """``(avg |A P_T|^2, avg |A x|^2)`` by quadrature."""
    A = np.asarray(A, dtype=float)
    AP = A[None] @ rule.frames
    Ax = rule.nodes @ A.T
    return integrate(rule, _fro2(AP)), integrate(rule, np.sum(Ax * Ax, axis=1))


# ------------------------------------------------------------------- flat side

def flat_energy(u: PlaneField, rule) -> float:
    """``int |grad u|^{n-1} dx`` over the rule's domain."""
    _, J = u.evaluate(rule.nodes)
    return integrate(rule, _fro2(J) ** ((u.n - 1) / 2))


def flat_degree(u: PlaneField, rule) -> float:
    """Normalized flat volume ``(1/(n omega_n)) int det[u, d_1 u, ..., d_{n-1} u]``.

    The unit-normal-first ordering matches the sphere-side convention through
    the chart, so the inverse stereographic map has degree +1 for every n.
    """
    V, J = u.evaluate(rule.nodes)
    dens = np.linalg.det(np.concatenate([V[..., None], J], axis=-1))
    return integrate(rule, dens) / sphere_area(u.n)


def flat_excess(u: PlaneField, background: PlaneField, rule) -> float:
    """``int (|grad u|^{n-1} - |grad bg|^{n-1})`` over a disc outside which u = bg."""
    p = (u.n - 1) / 2
    _, Ju = u.evaluate(rule.nodes)
    _, Jb = background.evaluate(rule.nodes)
    return integrate(rule, _fro2(Ju) ** p - _fro2(Jb) ** p)


def flat_grad_distance(u: PlaneField, v: PlaneField, rule, p=None) -> float:
    p = u.n - 1 if p is None else p
    _, Ju = u.evaluate(rule.nodes)
    _, Jv = v.evaluate(rule.nodes)
    return integrate(rule, _fro2(Ju - Jv) ** (p / 2))


def disc_volume(d, radius=1.0) -> float:
    return unit_ball_volume(d) * radius**d
