"""Deterministic product quadrature on spheres, balls and flat discs.

Sphere rules use hyperspherical coordinates: the leading polar angles are
integrated with Gauss-Jacobi rules in ``t = cos(theta)`` and the azimuth with
an equispaced rule shifted by half a step.  A rule of level ``L`` integrates
every polynomial of degree ``<= 2L - 1`` exactly.

Sphere and ball weights are normalized to sum to one, so ``integrate`` returns
averages; disc weights sum to the Euclidean volume of the disc.
"""

from __future__ import annotations

import json
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from functools import cached_property, lru_cache
from math import gamma, pi

import numpy as np
from scipy.special import roots_jacobi, roots_legendre

from .errors import ResourceLimit
from .sphere_geometry import tangent_frames

MAX_NODES = 3_000_000
CHUNK = 8192


def unit_ball_volume(d: int) -> float:
    """Volume of the unit ball in R^d."""
    return pi ** (d / 2) / gamma(d / 2 + 1)


def sphere_area(d: int) -> float:
    """Area of the unit sphere S^{d-1} in R^d."""
    return d * unit_ball_volume(d)


@lru_cache(maxsize=None)
def _sphere_nodes(d: int, level: int):
    """Unnormalized product rule on S^{d-1} in R^d, d >= 2."""
    if d == 2:
        m = 2 * level
        ang = (np.arange(m) + 0.5) * (2 * pi / m)
        return np.column_stack([np.cos(ang), np.sin(ang)]), np.full(m, 2 * pi / m)
    a = (d - 3) / 2
    t, wt = roots_jacobi(level, a, a) if a else roots_legendre(level)
    sub_x, sub_w = _sphere_nodes(d - 1, level)
    k = sub_x.shape[0]
    s = np.sqrt(1.0 - t * t)
    X = np.empty((level * k, d))
    X[:, 0] = np.repeat(t, k)
    X[:, 1:] = (s[:, None, None] * sub_x[None]).reshape(-1, d - 1)
    W = (wt[:, None] * sub_w[None]).ravel()
    return X, W


def _node_count(d, level):
    return 2 * level * level ** (d - 2)


@dataclass(frozen=True, eq=False)
class SphereRule:
    """Average-normalized quadrature on S^{n-1}."""

    n: int
    level: int
    nodes: np.ndarray
    weights: np.ndarray
    exactness: int

    @cached_property
    def frames(self) -> np.ndarray:
        """``(N, n, n-1)`` tangent frames (P_T) at the nodes."""
        return tangent_frames(self.nodes)

    def __len__(self):
        return self.weights.size


@dataclass(frozen=True, eq=False)
class BallRule:
    """Average-normalized quadrature on the unit ball B_1 in R^n."""

    n: int
    level: int
    nodes: np.ndarray
    weights: np.ndarray
    exactness: int

    def __len__(self):
        return self.weights.size


@dataclass(frozen=True, eq=False)
class DiscRule:
    """Quadrature on a closed disc in R^d; weights sum to the disc volume."""

    center: np.ndarray
    radius: float
    nodes: np.ndarray
    weights: np.ndarray
    exactness: int
    breaks: tuple = field(default=())

    @property
    def dim(self) -> int:
        return self.nodes.shape[1]

    def __len__(self):
        return self.weights.size


def _check_cap(count):
    if count > MAX_NODES:
        raise ResourceLimit(f"rule would have {count} nodes (cap {MAX_NODES})")


def sphere_rule(n: int, level: int) -> SphereRule:
    """Product Gauss rule on S^{n-1} with ``2 level^(n-1)`` nodes."""
    if n < 3:
        raise ValueError("n must be >= 3")
    if level < 1:
        raise ValueError("level must be >= 1")
    _check_cap(_node_count(n, level))
    return _sphere_rule_cached(n, level)


@lru_cache(maxsize=32)
def _sphere_rule_cached(n, level):
    X, W = _sphere_nodes(n, level)
    W = W / W.sum()
    X = X.copy()
    X.setflags(write=False)
    W.setflags(write=False)
    return SphereRule(n, level, X, W, 2 * level - 1)


def ball_rule(n: int, level: int) -> BallRule:
    """Radial Gauss-Jacobi (weight r^{n-1}) times the sphere rule."""
    _check_cap(level * _node_count(n, level))
    return _ball_rule_cached(n, level)


@lru_cache(maxsize=16)
def _ball_rule_cached(n, level):
    s, ws = roots_jacobi(level, 0.0, n - 1.0)
    r = (1.0 + s) / 2.0
    S = sphere_rule(n, level)
    X = (r[:, None, None] * S.nodes[None]).reshape(-1, n)
    W = (ws[:, None] * S.weights[None]).ravel()
    W = W / W.sum()
    X.setflags(write=False)
    W.setflags(write=False)
    return BallRule(n, level, X, W, 2 * level - 1)


def _radial_pieces(edges, level, d):
    r, w = [], []
    x, wx = roots_legendre(level)
    for a, b in zip(edges[:-1], edges[1:]):
        h = (b - a) / 2.0
        ri = a + h * (x + 1.0)
        r.append(ri)
        w.append(h * wx * ri ** (d - 1))
    return np.concatenate(r), np.concatenate(w)


def disc_rule(center, radius: float, level: int, breaks=()) -> DiscRule:
    """Polar product rule on the disc ``|x - center| <= radius`` in R^d.

    ``breaks`` are relative radii in (0, 1) where the radial integrand is
    allowed to lose smoothness; each radial piece gets its own Gauss-Legendre
    rule of ``level`` points.
    """
    center = np.asarray(center, dtype=float)
    d = center.size
    if d < 2:
        raise ValueError("discs live in R^d with d >= 2")
    edges = np.array([0.0, *sorted(breaks), 1.0]) * radius
    _check_cap((len(edges) - 1) * level * _node_count(d, level))
    r, wr = _radial_pieces(edges, level, d)
    U, wu = _sphere_nodes(d, level)
    X = center + (r[:, None, None] * U[None]).reshape(-1, d)
    W = (wr[:, None] * wu[None]).ravel()
    exact = 2 * level - d
    return DiscRule(center, float(radius), X, W, exact, tuple(breaks))


def plane_rule(d: int, level: int, r_max: float = 1e4, decades: int | None = None) -> DiscRule:
    """Rule for integrals over (effectively) all of R^d.

    The unit disc is integrated directly; ``1 <= r <= r_max`` is split into
    one Gauss piece per decade in ``log r``.  Suitable for integrands decaying
    at least like ``|x|^{-d-1}``.
    """
    if decades is None:
        decades = max(1, int(np.ceil(np.log10(r_max))))
    x, wx = roots_legendre(level)
    r = [(x + 1.0) / 2.0]
    w = [0.5 * wx * r[0] ** (d - 1)]
    edges = np.linspace(0.0, np.log(r_max), decades + 1)
    for a, b in zip(edges[:-1], edges[1:]):
        h = (b - a) / 2.0
        s = a + h * (x + 1.0)
        ri = np.exp(s)
        r.append(ri)
        w.append(h * wx * ri**d)
    r, wr = np.concatenate(r), np.concatenate(w)
    _check_cap(r.size * _node_count(d, level))
    U, wu = _sphere_nodes(d, level)
    X = (r[:, None, None] * U[None]).reshape(-1, d)
    W = (wr[:, None] * wu[None]).ravel()
    return DiscRule(np.zeros(d), float(r_max), X, W, 0, ())


def integrate(rule, integrand, workers: int = 1):
    """Weighted sum of ``integrand`` over the nodes of ``rule``.

    ``integrand`` is either an array of node values (leading axis = nodes) or
    a callable mapping an ``(M, n)`` block of nodes to such an array.  Nodes
    are processed in fixed blocks and the block sums are reduced in order, so
    the result does not depend on ``workers``.
    """
    w = rule.weights
    N = w.size
    starts = range(0, N, CHUNK)

    if callable(integrand):
        def block(i):
            vals = np.asarray(integrand(rule.nodes[i:i + CHUNK]), dtype=float)
            return np.tensordot(w[i:i + CHUNK], vals, axes=(0, 0))

        if workers > 1:
            with ThreadPoolExecutor(max_workers=workers) as ex:
                parts = list(ex.map(block, starts))
        else:
            parts = [block(i) for i in starts]
    else:
        vals = np.asarray(integrand, dtype=float)
        if vals.shape[0] != N:
            raise ValueError("integrand values do not match the node count")
        parts = [np.tensordot(w[i:i + CHUNK], vals[i:i + CHUNK], axes=(0, 0)) for i in starts]
    total = np.sum(np.stack(parts), axis=0)
    return float(total) if np.ndim(total) == 0 else total


def integrate_with_error(rule_coarse, rule_fine, integrand, workers: int = 1):
    """Return ``(fine value, |fine - coarse|)``."""
    fine = integrate(rule_fine, integrand, workers)
    coarse = integrate(rule_coarse, integrand, workers)
    return fine, np.max(np.abs(np.asarray(fine) - np.asarray(coarse)))


def coarse_level(level: int) -> int:
    """Companion level used for two-level error estimates."""
    return max(1, (3 * level) // 4)


# ---------------------------------------------------------------- disk cache

def rule_to_dict(rule) -> dict:
    kind = {SphereRule: "sphere", BallRule: "ball"}[type(rule)]
    return {
        "kind": kind,
        "n": rule.n,
        "level": rule.level,
        "nodes": rule.nodes.tolist(),
        "weights": rule.weights.tolist(),
        "exactness": rule.exactness,
    }


def rule_from_dict(d):
    cls = {"sphere": SphereRule, "ball": BallRule}[d["kind"]]
    X = np.asarray(d["nodes"], dtype=float)
    W = np.asarray(d["weights"], dtype=float)
    return cls(int(d["n"]), int(d["level"]), X, W, int(d["exactness"]))


class RuleCache:
    """On-disk cache of sphere/ball rules keyed by ``(kind, n, level)``.

    Rules are stored as ``.npz`` (default) or JSON.
    """

    builders = {"sphere": sphere_rule, "ball": ball_rule}

    def __init__(self, directory, fmt="npz"):
        if fmt not in ("npz", "json"):
            raise ValueError("fmt must be 'npz' or 'json'")
        self.directory = os.fspath(directory)
        self.fmt = fmt
        os.makedirs(self.directory, exist_ok=True)

    def path(self, kind, n, level):
        return os.path.join(self.directory, f"{kind}_n{n}_L{level}.{self.fmt}")

    def get(self, kind, n, level):
        p = self.path(kind, n, level)
        if os.path.exists(p):
            return self._load(p, kind)
        rule = self.builders[kind](n, level)
        self._save(p, rule)
        return rule

    def _save(self, p, rule):
        if self.fmt == "json":
            with open(p, "w") as fh:
                json.dump(rule_to_dict(rule), fh)
        else:
            np.savez(p, nodes=rule.nodes, weights=rule.weights,
                     meta=np.array([rule.n, rule.level, rule.exactness]))

    def _load(self, p, kind):
        if self.fmt == "json":
            with open(p) as fh:
                return rule_from_dict(json.load(fh))
        with np.load(p) as z:
            n, level, exact = (int(v) for v in z["meta"])
            cls = {"sphere": SphereRule, "ball": BallRule}[kind]
            return cls(n, level, z["nodes"], z["weights"], exact)


def sphere_moment(alpha) -> float:
    """Exact average of ``x^alpha`` over S^{n-1} (Beta-function formula)."""
    from scipy.special import gammaln

    a = np.asarray(alpha, dtype=int)
    if np.any(a % 2):
        return 0.0
    n = a.size
    b = (a + 1) / 2.0
    logv = np.sum(gammaln(b)) - gammaln(np.sum(b)) + gammaln(n / 2.0) - n * gammaln(0.5)
    return float(np.exp(logv))
