"""Points, tangent frames, stereographic charts and the Moebius group of S^{n-1}.

Everything here is vectorized over a leading batch axis: a batch of points is
an ``(N, n)`` array, a batch of tangent frames an ``(N, n, n-1)`` array whose
columns are the tangent vectors tau_1, ..., tau_{n-1}.  The frame matrix is the
tangential gradient of the identity map, so it doubles as ``P_T``.
"""

from __future__ import annotations

import json
from dataclasses import dataclass

import numpy as np

from .errors import DegenerateFrame, PoleSingularity

POLE_TOL = 1e-12
UNIT_TOL = 1e-12


@dataclass(frozen=True)
class SpherePoint:
    """A unit vector in R^n, n >= 3."""

    x: np.ndarray

    def __post_init__(self):
        x = np.asarray(self.x, dtype=float)
        if x.ndim != 1 or x.size < 3:
            raise ValueError("a sphere point needs a 1-d vector with n >= 3")
        if abs(np.linalg.norm(x) - 1.0) > UNIT_TOL:
            raise ValueError(f"|x| = {np.linalg.norm(x)!r} is not 1")
        x.setflags(write=False)
        object.__setattr__(self, "x", x)

    @property
    def n(self) -> int:
        return self.x.size

    @classmethod
    def normalized(cls, v) -> "SpherePoint":
        v = np.asarray(v, dtype=float)
        return cls(v / np.linalg.norm(v))


@dataclass(frozen=True)
class Frame:
    """Positively oriented tangent frame at ``base``.

    ``taus`` is the ``n x (n-1)`` matrix with columns tau_j, i.e. P_T.
    """

    base: SpherePoint
    taus: np.ndarray

    @property
    def P_T(self) -> np.ndarray:
        return self.taus


def tangent_frames(X) -> np.ndarray:
    """Tangent frames for a batch of unit vectors.

    For each point the coordinate axis most aligned with ``x`` is dropped; the
    remaining axes are Gram-Schmidt orthogonalized against ``x`` in index
    order and the last vector is flipped if needed so that
    ``det[tau_1, ..., tau_{n-1}, x] = +1``.

    Parameters
    ----------
    X : (N, n) array of unit vectors

    Returns
    -------
    (N, n, n-1) array
    """
    X = np.atleast_2d(np.asarray(X, dtype=float))
    N, n = X.shape
    drop = np.argmax(np.abs(X), axis=1)
    M = np.zeros((N, n, n))
    M[:, :, 0] = X
    keep = np.array([[i for i in range(n) if i != d] for d in range(n)])[drop]
    rows = np.arange(N)[:, None]
    M[rows, keep, np.arange(1, n)[None, :]] = 1.0
    Q, R = np.linalg.qr(M)
    diag = np.diagonal(R, axis1=1, axis2=2)
    if np.any(np.abs(diag) < 1e-8):
        raise DegenerateFrame("Gram-Schmidt pivot vanished")
    Q = Q * np.sign(diag)[:, None, :]
    taus = Q[:, :, 1:].copy()
    full = np.concatenate([taus, X[:, :, None]], axis=2)
    flip = np.linalg.det(full) < 0
    taus[flip, :, -1] *= -1.0
    return taus


def frame_at(x) -> Frame:
    p = x if isinstance(x, SpherePoint) else SpherePoint(x)
    taus = tangent_frames(p.x[None, :])[0]
    taus.setflags(write=False)
    return Frame(p, taus)


def _as_batch(x):
    if isinstance(x, SpherePoint):
        x = x.x
    x = np.asarray(x, dtype=float)
    return np.atleast_2d(x), x.ndim == 1


def stereo(xi, x):
    """Stereographic projection from ``-xi`` onto the tangent plane at ``xi``.

    Accepts a single point or an ``(N, n)`` batch.
    """
    xi = xi.x if isinstance(xi, SpherePoint) else np.asarray(xi, dtype=float)
    X, single = _as_batch(x)
    s = X @ xi
    if np.any(s <= -1.0 + POLE_TOL):
        raise PoleSingularity("point coincides with the projection pole -xi")
    y = -(X - s[:, None] * xi) / (1.0 + s)[:, None]
    return y[0] if single else y


def inverse_stereo(xi, y):
    """Inverse of :func:`stereo`; ``y`` lies in the tangent plane at ``xi``."""
    xi = xi.x if isinstance(xi, SpherePoint) else np.asarray(xi, dtype=float)
    Y, single = _as_batch(y)
    r2 = np.sum(Y * Y, axis=1)
    x = -(2.0 / (1.0 + r2))[:, None] * Y + ((1.0 - r2) / (1.0 + r2))[:, None] * xi
    return x[0] if single else x


def random_rotation(n, rng) -> np.ndarray:
    """Haar-distributed element of SO(n)."""
    Q, R = np.linalg.qr(rng.standard_normal((n, n)))
    Q = Q * np.sign(np.diag(R))
    if np.linalg.det(Q) < 0:
        Q[:, 0] *= -1.0
    return Q


def _dilation_values(xi, lam, X):
    s = X @ xi
    num = (-lam**2 * (1.0 - s) + (1.0 + s))[:, None] * xi + 2.0 * lam * (X - s[:, None] * xi)
    den = lam**2 * (1.0 - s) + (1.0 + s)
    return num, den


@dataclass(frozen=True)
class MobiusElement:
    """The orientation-preserving Moebius map ``x -> R phi_{xi,lam}(x)``.

    ``phi_{xi,lam}`` conjugates the dilation by ``lam`` in the tangent plane
    at ``xi`` with the stereographic projection from ``-xi``.
    """

    R: np.ndarray
    xi: np.ndarray
    lam: float

    def __post_init__(self):
        R = np.array(self.R, dtype=float)
        xi = self.xi.x if isinstance(self.xi, SpherePoint) else np.array(self.xi, dtype=float)
        n = xi.size
        if R.shape != (n, n):
            raise ValueError("R and xi dimensions disagree")
        if not np.allclose(R.T @ R, np.eye(n), atol=1e-10) or np.linalg.det(R) < 0:
            raise ValueError("R is not in SO(n)")
        if abs(np.linalg.norm(xi) - 1.0) > 1e-10:
            raise ValueError("xi is not a unit vector")
        if not self.lam > 0:
            raise ValueError("lambda must be positive")
        R.setflags(write=False)
        xi.setflags(write=False)
        object.__setattr__(self, "R", R)
        object.__setattr__(self, "xi", xi)
        object.__setattr__(self, "lam", float(self.lam))

    @property
    def n(self) -> int:
        return self.xi.size

    @classmethod
    def identity(cls, n) -> "MobiusElement":
        e = np.zeros(n)
        e[-1] = 1.0
        return cls(np.eye(n), e, 1.0)

    @classmethod
    def random(cls, n, rng, lam_range=(0.5, 2.0)) -> "MobiusElement":
        xi = rng.standard_normal(n)
        lo, hi = np.log(lam_range[0]), np.log(lam_range[1])
        return cls(random_rotation(n, rng), xi / np.linalg.norm(xi), float(np.exp(rng.uniform(lo, hi))))

    def __call__(self, X):
        return mobius_apply(self, X)

    def inverse(self) -> "MobiusElement":
        # (R phi_{xi,lam})^{-1} = phi_{xi,1/lam} R^t = R^t phi_{R xi, 1/lam}
        return MobiusElement(self.R.T, self.R @ self.xi, 1.0 / self.lam)

    def to_dict(self) -> dict:
        return {"R": self.R.tolist(), "xi": self.xi.tolist(), "lambda": self.lam}

    def to_json(self) -> str:
        return json.dumps(self.to_dict())

    @classmethod
    def from_dict(cls, d) -> "MobiusElement":
        return cls(np.asarray(d["R"], dtype=float), np.asarray(d["xi"], dtype=float), float(d["lambda"]))

    @classmethod
    def from_json(cls, s) -> "MobiusElement":
        return cls.from_dict(json.loads(s))


def mobius_apply(m: MobiusElement, x):
    """Evaluate ``R phi_{xi,lam}`` at a point or an ``(N, n)`` batch."""
    X, single = _as_batch(x)
    num, den = _dilation_values(m.xi, m.lam, X)
    out = (num / den[:, None]) @ m.R.T
    return out[0] if single else out


def mobius_ambient_jacobian(m: MobiusElement, X) -> np.ndarray:
    """Full ``n x n`` derivative of the rational extension of ``R phi_{xi,lam}``.

    The closed formula for phi_{xi,lam} is defined on a neighbourhood of the
    sphere, so its derivative restricted to tangent directions is the
    tangential gradient.
    """
    X = np.atleast_2d(np.asarray(X, dtype=float))
    xi, lam = m.xi, m.lam
    n = xi.size
    num, den = _dilation_values(xi, lam, X)
    xx = np.outer(xi, xi)
    dnum = (lam**2 + 1.0) * xx + 2.0 * lam * (np.eye(n) - xx)
    grad_den = (1.0 - lam**2) * xi
    D = dnum[None] / den[:, None, None] - np.einsum("ni,j->nij", num, grad_den) / (den**2)[:, None, None]
    return m.R[None] @ D


def mobius_jacobian(m: MobiusElement, f) -> np.ndarray:
    """Tangential gradient of ``R phi_{xi,lam}`` in the given frame(s).

    ``f`` is a :class:`Frame` (returns ``n x (n-1)``) or a pair of batches
    ``(X, P)`` with ``X`` of shape ``(N, n)`` and ``P`` of shape ``(N, n, n-1)``.
    """
    if isinstance(f, Frame):
        return (mobius_ambient_jacobian(m, f.base.x[None]) @ f.taus[None])[0]
    X, P = f
    return mobius_ambient_jacobian(m, X) @ P


def boost_from_vector(a) -> tuple[np.ndarray, float]:
    """Map ``a = log(lam) * xi`` to ``(xi, lam)``.

    ``phi_{xi,lam}`` and ``phi_{-xi,1/lam}`` coincide, and lam -> phi_{xi,lam}
    is a one-parameter subgroup, so ``a`` is a smooth chart of the dilation
    part that stays regular at the identity.
    """
    a = np.asarray(a, dtype=float)
    t = np.linalg.norm(a)
    if t == 0.0:
        xi = np.zeros(a.size)
        xi[-1] = 1.0
        return xi, 1.0
    return a / t, float(np.exp(t))


def conformality_residual(J) -> np.ndarray:
    """Per-node max-abs entry of ``J^t J - |J|^2/(n-1) I``."""
    J = np.asarray(J)
    G = np.swapaxes(J, -1, -2) @ J
    k = J.shape[-1]
    tr = np.trace(G, axis1=-2, axis2=-1)
    E = G - (tr / k)[..., None, None] * np.eye(k)
    return np.max(np.abs(E), axis=(-2, -1))
