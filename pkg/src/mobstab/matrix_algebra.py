"""Small dense matrix tools.

Elementary symmetric polynomials of the eigenvalues come from the
characteristic polynomial (Faddeev-LeVerrier), so no eigendecomposition is
involved and non-symmetric inputs are handled exactly.  All functions accept
a single matrix or a stack ``(..., n, n)``.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.optimize import minimize

from .errors import NotOrientationPreserving


def char_coefficients(M) -> np.ndarray:
    """Return ``[sigma_0, sigma_1, ..., sigma_n]`` of M (``sigma_0 = 1``).

    Faddeev-LeVerrier in Newton form: ``B_0 = I``,
    ``sigma_k = tr(M B_{k-1}) / k`` and ``B_k = sigma_k I - M B_{k-1}``.
    """
    M = np.asarray(M, dtype=float)
    n = M.shape[-1]
    I = np.eye(n)
    out = np.empty(M.shape[:-2] + (n + 1,))
    out[..., 0] = 1.0
    N = np.broadcast_to(I, M.shape).copy()
    for k in range(1, n + 1):
        MN = M @ N
        c = np.trace(MN, axis1=-2, axis2=-1) / k
        out[..., k] = c
        N = c[..., None, None] * I - MN
    return out


def sigma(k: int, M):
    """k-th elementary symmetric polynomial of the eigenvalues of M."""
    M = np.asarray(M, dtype=float)
    n = M.shape[-1]
    if not 0 <= k <= n:
        raise ValueError(f"k must lie in [0, {n}]")
    return char_coefficients(M)[..., k]


def sigma_grad(k: int, M):
    """Gradient of ``sigma_k`` with respect to the entries of M.

    ``sum_{j<k} (-1)^j sigma_{k-1-j}(M) (M^t)^j``; equals ``I`` for k = 1 and
    the cofactor matrix for k = n.
    """
    M = np.asarray(M, dtype=float)
    n = M.shape[-1]
    if not 1 <= k <= n:
        raise ValueError(f"k must lie in [1, {n}]")
    s = char_coefficients(M)
    Mt = np.swapaxes(M, -1, -2)
    P = np.broadcast_to(np.eye(n), M.shape).copy()
    G = np.zeros_like(P)
    for j in range(k):
        G = G + ((-1) ** j) * s[..., k - 1 - j][..., None, None] * P
        P = P @ Mt
    return G


def det_expansion_check(M) -> float:
    """``|det(I + M) - 1 - sum_k sigma_k(M)|``."""
    M = np.asarray(M, dtype=float)
    n = M.shape[-1]
    s = char_coefficients(M)
    return np.abs(np.linalg.det(np.eye(n) + M) - np.sum(s, axis=-1))


@dataclass(frozen=True)
class PolarDecomposition:
    """``A = R0 U`` with R0 in SO(n) and U symmetric positive definite."""

    R0: np.ndarray
    U: np.ndarray
    singular_shifts: np.ndarray
    Lambda: float

    @property
    def dist2(self) -> float:
        """Squared Frobenius distance from A to SO(n)."""
        return self.Lambda**2


def polar(A, tol=1e-15, maxiter=100) -> PolarDecomposition:
    """Polar decomposition by the scaled Newton iteration ``X <- (g X + X^{-t}/g)/2``.

    The rotation factor is the nearest rotation to A; U is recovered as the
    symmetrized ``R0^t A``.
    """
    A = np.asarray(A, dtype=float)
    n = A.shape[0]
    if np.linalg.det(A) <= 0:
        raise NotOrientationPreserving("polar factor in SO(n) needs det A > 0")
    X = A.copy()
    for _ in range(maxiter):
        Xinv_t = np.linalg.inv(X).T
        g = (np.linalg.norm(Xinv_t) / np.linalg.norm(X)) ** 0.5
        Xn = 0.5 * (g * X + Xinv_t / g)
        done = np.linalg.norm(Xn - X) <= tol * np.sqrt(n) * 10
        X = Xn
        if done:
            break
    # one unscaled step polishes orthogonality
    X = 0.5 * (X + np.linalg.inv(X).T)
    U = X.T @ A
    U = 0.5 * (U + U.T)
    alphas = np.linalg.eigvalsh(U)
    shifts = alphas - 1.0
    return PolarDecomposition(X, U, shifts, float(np.sqrt(np.sum(shifts**2))))


def dist2_SO(A) -> float:
    """``dist^2(A; SO(n))`` for det A > 0."""
    return polar(A).dist2


# ------------------------------------------------------------ Figalli-Zhang

def fz_margin(X, Y, p, kappa, c0):
    """Slack in the lower Taylor bound for ``|X + Y|^p``.

    ``|X+Y|^p - |X|^p - p|X|^{p-2}<X,Y> - (1-k)p/2 |X|^{p-2}|Y|^2 - c0|Y|^p``
    evaluated row-wise; the leading terms are combined through
    ``expm1/log1p`` so the cancellation for small ``|Y|/|X|`` is benign.
    """
    X = np.atleast_2d(X)
    Y = np.atleast_2d(Y)
    nx2 = np.sum(X * X, axis=1)
    ny2 = np.sum(Y * Y, axis=1)
    xy = np.sum(X * Y, axis=1)
    ny_p = ny2 ** (p / 2)
    out = np.empty_like(nx2)
    zero = nx2 == 0
    out[zero] = (1.0 - c0) * ny_p[zero]
    nz = ~zero
    a = nx2[nz]
    c = xy[nz] / a
    t2 = ny2[nz] / a
    z = 2.0 * c + t2
    lead = np.expm1((p / 2) * np.log1p(z)) - p * c
    scaled = lead - (1 - kappa) * p / 2 * t2 - c0 * t2 ** (p / 2)
    out[nz] = scaled * a ** (p / 2)
    return out


def _reduced_margin(t, theta, p, kappa):
    # |X| = 1, Y = t (cos theta, sin theta); returns margin / t^p with c0 = 0
    c = t * np.cos(theta)
    z = 2.0 * c + t * t
    lead = np.expm1((p / 2) * np.log1p(z)) - p * c
    return (lead - (1 - kappa) * p / 2 * t * t) / t**p


def figalli_zhang_c0(p: float, kappa: float, tol: float = 1e-9) -> float:
    """Largest admissible ``c0(p, kappa)``, to within ``tol``.

    By rotation invariance and joint p-homogeneity the inequality reduces to
    ``|X| = 1`` and ``Y = t (cos theta, sin theta)``; ``c0`` is the infimum of
    ``margin(t, theta)/t^p`` (the ``X = 0`` case contributes the bound 1).
    The infimum is located on a log-t by theta grid and polished with a
    bounded local search; ``tol`` is subtracted so the returned constant is
    on the admissible side.
    """
    if p < 2 or not 0 < kappa < 1:
        raise ValueError("need p >= 2 and kappa in (0, 1)")
    logt = np.linspace(np.log(1e-3), np.log(1e3), 1201)
    th = np.linspace(0.0, np.pi, 721)
    T, TH = np.meshgrid(np.exp(logt), th, indexing="ij")
    with np.errstate(invalid="ignore", divide="ignore"):
        G = _reduced_margin(T, TH, p, kappa)
    G = np.where(np.isfinite(G), G, np.inf)
    best = 1.0
    order = np.argsort(G, axis=None)[:8]
    for idx in order:
        i, j = np.unravel_index(idx, G.shape)
        x0 = np.array([logt[i], th[j]])

        def f(v):
            with np.errstate(invalid="ignore", divide="ignore"):
                val = _reduced_margin(np.exp(v[0]), v[1], p, kappa)
            return val if np.isfinite(val) else 1e300

        res = minimize(f, x0, method="L-BFGS-B",
                       bounds=[(logt[0] - 2, logt[-1] + 2), (0.0, np.pi)],
                       options={"ftol": 1e-15, "gtol": 1e-13})
        best = min(best, float(res.fun), float(G[i, j]))
    return best - tol


def _fz_samples(rng, count, dim):
    """Random and adversarial (X, Y) pairs with |Y|/|X| spread over 1e-4..1e4."""
    X = rng.standard_normal((count, dim))
    X *= np.exp(rng.uniform(-3, 3, count))[:, None] / np.linalg.norm(X, axis=1)[:, None]
    t = np.exp(rng.uniform(np.log(1e-4), np.log(1e4), count))
    mode = rng.integers(0, 5, count)
    V = rng.standard_normal((count, dim))
    nx = np.linalg.norm(X, axis=1)
    Xh = X / nx[:, None]
    perp = V - np.sum(V * Xh, axis=1)[:, None] * Xh
    perp /= np.linalg.norm(perp, axis=1)[:, None]
    Vh = V / np.linalg.norm(V, axis=1)[:, None]
    dirs = np.where((mode == 0)[:, None], Vh,
           np.where((mode == 1)[:, None], Xh,
           np.where((mode == 2)[:, None], -Xh,
           np.where((mode == 3)[:, None], perp,
                    np.cos(rng.uniform(0, np.pi, count))[:, None] * Xh
                    + np.sin(rng.uniform(0, np.pi, count))[:, None] * perp))))
    Y = (t * nx)[:, None] * dirs
    return X, Y


def figalli_zhang_check(p, kappa, c0, samples=10**6, seed=0, dim=6, batch=100_000,
                        rtol=1e-12):
    """Sample the vector inequality and count violations.

    Samples mix Gaussian directions with ``Y`` parallel, antiparallel and
    orthogonal to ``X``, over a log grid of ratios ``|Y|/|X|``.  A sample
    counts as a violation when its margin is below
    ``-rtol (|X|^p + |Y|^p)`` (floating-point slack).

    Returns
    -------
    violations : int
    worst : float
        Smallest margin normalized by ``|X|^p + |Y|^p``.
    """
    rng = np.random.default_rng(seed)
    violations = 0
    worst = np.inf
    done = 0
    while done < samples:
        m = min(batch, samples - done)
        X, Y = _fz_samples(rng, m, dim)
        scale = np.sum(X * X, axis=1) ** (p / 2) + np.sum(Y * Y, axis=1) ** (p / 2)
        rel = fz_margin(X, Y, p, kappa, c0) / scale
        violations += int(np.sum(rel < -rtol))
        worst = min(worst, float(rel.min()))
        done += m
    return violations, worst
