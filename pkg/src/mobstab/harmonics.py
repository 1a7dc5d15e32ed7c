"""Band-limited fields built from harmonic polynomials.

A homogeneous harmonic polynomial of degree k restricted to S^{n-1} is a
spherical harmonic of degree k, and it is its own harmonic extension to the
ball.  Finite sums of such polynomials are therefore exactly the fields on
which projections, Parseval sums and ball integrals are available in closed
form.
"""

from __future__ import annotations

from functools import lru_cache
from itertools import combinations_with_replacement

import numpy as np
from scipy.linalg import null_space

from .map_model import SphereField

BLOCK = 16384


@lru_cache(maxsize=None)
def monomial_exponents(n: int, k: int) -> np.ndarray:
    """Exponent vectors of the degree-k monomials in n variables."""
    rows = []
    for combo in combinations_with_replacement(range(n), k):
        e = np.zeros(n, dtype=int)
        for i in combo:
            e[i] += 1
        rows.append(e)
    if not rows:
        rows.append(np.zeros(n, dtype=int))
    E = np.array(rows)
    E.setflags(write=False)
    return E


@lru_cache(maxsize=None)
def harmonic_basis(n: int, k: int) -> np.ndarray:
    """Orthonormal coefficient basis of degree-k harmonic polynomials.

    Columns span the kernel of the Laplacian acting on degree-k monomial
    coefficients.
    """
    E = monomial_exponents(n, k)
    if k < 2:
        return np.eye(len(E))
    Elow = monomial_exponents(n, k - 2)
    index = {tuple(e): i for i, e in enumerate(Elow)}
    L = np.zeros((len(Elow), len(E)))
    for col, e in enumerate(E):
        for j in range(n):
            if e[j] >= 2:
                f = e.copy()
                f[j] -= 2
                L[index[tuple(f)], col] += e[j] * (e[j] - 1)
    B = null_space(L)
    B.setflags(write=False)
    return B


def eigenvalue(n: int, k: int) -> int:
    """Laplace-Beltrami eigenvalue k(k+n-2) of degree-k spherical harmonics."""
    return k * (k + n - 2)


def _eval_poly(E, C, X):
    """Values (N, p) and gradients (N, p, n) of sum_m C[:, m] x^{E_m}."""
    N, n = X.shape
    deg = int(E.max()) if E.size else 0
    pw = X[:, :, None] ** np.arange(deg + 1)[None, None, :]
    cols = np.arange(n)[None, :]
    mon = np.prod(pw[:, cols, E], axis=2)
    vals = mon @ C.T
    grad = np.empty((N, C.shape[0], n))
    for j in range(n):
        Ej = E.copy()
        Ej[:, j] = np.maximum(Ej[:, j] - 1, 0)
        dm = np.prod(pw[:, cols, Ej], axis=2) * E[:, j]
        grad[:, :, j] = dm @ C.T
    return vals, grad


class PolynomialField(SphereField):
    """A field ``x -> sum_k P_k(x)`` with each ``P_k`` homogeneous of degree k.

    ``components`` maps a degree ``k`` to an ``(n, m_k)`` coefficient array on
    :func:`monomial_exponents` ``(n, k)``.  When every component is harmonic
    the ambient polynomial is the harmonic extension of the field.
    """

    def __init__(self, n, components, harmonic=True, name="polynomial"):
        self.components = {int(k): np.asarray(c, dtype=float) for k, c in components.items()}
        self.harmonic = harmonic
        degs = sorted(self.components)
        self._E = np.vstack([monomial_exponents(n, k) for k in degs])
        self._C = np.hstack([self.components[k] for k in degs])
        super().__init__(n, self._ambient, sphere_valued=False, name=name)

    def _ambient(self, X):
        X = np.atleast_2d(np.asarray(X, dtype=float))
        parts = [_eval_poly(self._E, self._C, X[i:i + BLOCK]) for i in range(0, len(X), BLOCK)]
        return np.concatenate([p[0] for p in parts]), np.concatenate([p[1] for p in parts])

    def extension(self, Y):
        """Values and full gradients of the polynomial at points of the ball."""
        return self._ambient(Y)

    def component(self, k) -> "PolynomialField":
        return PolynomialField(self.n, {k: self.components[k]}, self.harmonic, f"{self.name}[{k}]")

    @property
    def degrees(self):
        return sorted(self.components)


def linear_field(B, c=None) -> PolynomialField:
    """``x -> B x + c``."""
    B = np.asarray(B, dtype=float)
    n = B.shape[0]
    comps = {1: B[:, _linear_order(n)]}
    if c is not None:
        comps[0] = np.asarray(c, dtype=float).reshape(n, 1)
    return PolynomialField(n, comps, True, "linear")


def _linear_order(n):
    # monomial_exponents(n, 1) lists x_1, ..., x_n in order
    return np.argmax(monomial_exponents(n, 1), axis=1)


def random_harmonic_field(n, degrees, rng, scale=1.0) -> PolynomialField:
    """Random vector field whose components are harmonic of the given degrees.

    Each degree gets coefficients drawn from an orthonormal harmonic basis with
    standard normal weights times ``scale``.
    """
    comps = {}
    for k in degrees:
        Bk = harmonic_basis(n, k)
        comps[k] = scale * (rng.standard_normal((n, Bk.shape[1])) @ Bk.T)
    return PolynomialField(n, comps, True, "harmonic")


def mean_square(n, C, E) -> float:
    """Exact ``avg_S |P|^2`` for ``P = C x^E`` from sphere moments."""
    from .quadrature import sphere_moment

    G = C.T @ C
    total = 0.0
    for a in range(len(E)):
        for b in range(len(E)):
            if G[a, b] != 0.0:
                total += G[a, b] * sphere_moment(E[a] + E[b])
    return total


def parseval_sums(u: PolynomialField):
    """Exact ``(avg |u|^2, avg |grad_T u|^2)`` from the degree decomposition.

    Uses orthogonality of spherical harmonics of different degree and the
    eigenvalues ``k(k+n-2)``; valid when every component is harmonic.
    """
    n = u.n
    l2 = 0.0
    h1 = 0.0
    for k in u.degrees:
        m = mean_square(n, u.components[k], monomial_exponents(n, k))
        l2 += m
        h1 += eigenvalue(n, k) * m
    return l2, h1
