"""Reference integrals on S^{n-1} computed without the package.

Maps are written as plain numpy functions that accept complex input, so
derivatives along the hyperspherical angle coordinates come from complex
steps (exact to rounding).  Integration is a tensor Gauss-Legendre rule in
the angles with the explicit area element.  Run as a script to print the
values frozen in the test-suite.
"""

import numpy as np

H = 1e-30


def embed(ang):
    """Hyperspherical angles (theta_1..theta_{n-2}, phi) -> points of S^{n-1}."""
    m = ang.shape[-1]
    n = m + 1
    out = []
    s = np.ones(ang.shape[:-1], dtype=ang.dtype)
    for i in range(m - 1):
        out.append(s * np.cos(ang[..., i]))
        s = s * np.sin(ang[..., i])
    out.append(s * np.cos(ang[..., m - 1]))
    out.append(s * np.sin(ang[..., m - 1]))
    assert len(out) == n
    return np.stack(out, axis=-1)


def grid(n, m):
    x, w = np.polynomial.legendre.leggauss(m)
    th = (x + 1) * np.pi / 2
    wt = w * np.pi / 2
    ph = (x + 1) * np.pi
    wp = w * np.pi
    axes = [th] * (n - 2) + [ph]
    waxes = [wt] * (n - 2) + [wp]
    A = np.stack(np.meshgrid(*axes, indexing="ij"), axis=-1).reshape(-1, n - 1)
    W = np.ones(A.shape[0])
    for k, wk in enumerate(np.meshgrid(*waxes, indexing="ij")):
        W = W * wk.ravel()
    return A, W


def derivatives(f, A):
    """Values f(y(A)) and derivatives along each angle, shape (N, n, n-1)."""
    cols = []
    for i in range(A.shape[1]):
        Ac = A.astype(complex)
        Ac[:, i] += 1j * H
        cols.append(np.imag(f(embed(Ac))) / H)
    return np.real(f(embed(A.astype(complex)))), np.stack(cols, axis=-1)


def integrals(f, n, m=48):
    """Averages over S^{n-1}: energy, area, volume (degree), |grad|^2, mean, n avg u x^t."""
    A, W = grid(n, m)
    Y = embed(A)
    _, Dy = derivatives(lambda y: y, A)
    g = np.sum(Dy * Dy, axis=1)                    # diagonal metric
    vol = np.sqrt(np.prod(g, axis=1))
    U, Du = derivatives(f, A)
    Dt = Du / np.sqrt(g)[:, None, :]               # orthonormal-direction derivatives
    k = n - 1
    fro = np.sum(Dt * Dt, axis=(1, 2))
    G = np.swapaxes(Dt, 1, 2) @ Dt
    # orientation: compare with the identity map in the same chart
    Dy_t = Dy / np.sqrt(g)[:, None, :]
    s_id = np.sign(np.linalg.det(np.concatenate([Dy_t, Y[:, :, None]], axis=2)))
    dens_deg = s_id * np.linalg.det(np.concatenate([Dt, U[:, :, None]], axis=2))
    w = W * vol
    w = w / w.sum()
    return {
        "energy": float(w @ (fro / k) ** (k / 2)),
        "area": float(w @ np.sqrt(np.clip(np.linalg.det(G), 0, None))),
        "degree": float(w @ dens_deg),
        "dirichlet": float(w @ fro),
        "mean": w @ U,
        "A": n * np.einsum("k,ki,kj->ij", w, U, Y),
    }


def normalized_linear(M):
    M = np.asarray(M, dtype=float)

    def f(y):
        z = y @ M.T
        return z / np.sqrt(np.sum(z * z, axis=-1))[..., None]

    return f


def mobius(R, xi, lam):
    R, xi = np.asarray(R, float), np.asarray(xi, float)

    def f(y):
        s = y @ xi
        num = (-lam**2 * (1 - s) + (1 + s))[..., None] * xi + 2 * lam * (y - s[..., None] * xi)
        den = lam**2 * (1 - s) + (1 + s)
        return (num / den[..., None]) @ R.T

    return f


if __name__ == "__main__":
    np.set_printoptions(precision=17)
    for m in (40, 56):
        r = integrals(normalized_linear(np.diag([1.2, 1, 1, 1])), 4, m)
        print("nl4", m, repr(r["energy"]), repr(r["area"]), repr(r["degree"]))
    for m in (60, 90):
        r = integrals(normalized_linear(np.diag([1.2, 1, 1])), 3, m)
        print("nl3", m, repr(r["energy"]), repr(r["degree"]))
    e = np.zeros(4); e[0] = 1.0
    for m in (40, 56):
        r = integrals(mobius(np.eye(4), e, 2.0), 4, m)
        print("mob_A", m, repr(r["A"].tolist()))
    for m in (40, 56):
        r = integrals(normalized_linear(np.diag([1.1, 1, 1, 1])), 4, m)
        print("nl4_t01", m, repr(r["energy"]), repr(r["degree"]))
