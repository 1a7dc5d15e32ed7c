import json

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

import mobstab.functionals as fn
from mobstab.errors import NotBandLimited
from mobstab.harmonics import harmonic_basis, linear_field, mean_square, monomial_exponents, random_harmonic_field, PolynomialField
from mobstab.map_model import (
    bump_sphere_field,
    compose,
    identity_field,
    mobius_field,
    normalized_linear_field,
    orthogonal_field,
)
from mobstab.quadrature import ball_rule, sphere_rule
from mobstab.sphere_geometry import MobiusElement, random_rotation
from strategies import mobius_elements, seeds

# dense angle-chart oracle (tests/oracles/angle_oracle.py), two levels agreeing
NL4_12_ENERGY = 1.0150752882401433
NL4_12_AREA = 1.0
# linear part of phi_{e1, 2} in n = 4 (oracle at two levels agrees with 64/81, 208/243)
MOB_A_DIAG = (64 / 81, 208 / 243, 208 / 243, 208 / 243)


def test_identity_report():
    r = fn.deficit(identity_field(4), sphere_rule(4, 8))
    assert (r.energy, r.deficit, r.degree) == pytest.approx((1.0, 0.0, 1.0), abs=1e-10)
    d = json.loads(r.to_json())
    assert set(d) == {"energy", "deficit", "degree", "quadrature_error"}


def test_mobius_report(rng):
    r = fn.deficit(mobius_field(MobiusElement.random(4, rng)), sphere_rule(4, 16))
    assert r.deficit <= 1e-6 and abs(r.degree - 1) <= 1e-6


def test_reflection_degree():
    R = np.diag([-1.0, 1.0, 1.0, 1.0])
    assert fn.degree(orthogonal_field(R), sphere_rule(4, 8)) == pytest.approx(-1.0, abs=1e-6)
    assert fn.deficit(orthogonal_field(R), sphere_rule(4, 8)).energy == pytest.approx(1.0)


@pytest.mark.parametrize("n", [3, 4])
def test_energy_at_least_degree_with_equality_only_when_conformal(n, rng):
    rule = sphere_rule(n, 16)
    for u in (normalized_linear_field(np.diag([1.3] + [1] * (n - 1))),
              bump_sphere_field(n, 0.5),
              mobius_field(MobiusElement.random(n, rng))):
        r = fn.deficit(u, rule)
        res = fn.conformality_residuals(u, rule).max()
        assert r.energy >= abs(r.degree) - r.quadrature_error - 1e-12
        if res <= 1e-8:
            assert r.deficit <= 1e-8
        else:
            assert r.deficit > 1e-8


@pytest.mark.parametrize("n", [3, 4])
def test_degree_is_integral(n, rng):
    rule = sphere_rule(n, 16)
    for u in (normalized_linear_field(np.eye(n) + 0.3 * rng.standard_normal((n, n))),
              bump_sphere_field(n, 0.6),
              compose(bump_sphere_field(n, 0.4), MobiusElement.random(n, rng))):
        d = fn.degree(u, rule)
        assert abs(d - round(d)) <= 1e-4


@given(mobius_elements(n=4, lam_range=(0.5, 2.0)))
def test_conformal_invariance(m):
    rule = sphere_rule(4, 16)
    u = normalized_linear_field(np.diag([1.2, 1, 1, 0.9]))
    a, b = fn.deficit(u, rule), fn.deficit(compose(u, m), rule)
    tol = max(1e-8, 10 * (a.quadrature_error + b.quadrature_error))
    assert abs(a.deficit - b.deficit) <= tol
    assert abs(a.degree - b.degree) <= tol


def test_wente_chain():
    rule = sphere_rule(4, 16)
    assert fn.wente_check(identity_field(4), rule) == pytest.approx((1, 1, 1), abs=1e-12)
    m = MobiusElement.random(4, np.random.default_rng(0))
    lhs, mid, rhs = fn.wente_check(mobius_field(m), rule)
    assert lhs == pytest.approx(mid, abs=1e-6) and mid == pytest.approx(rhs, abs=1e-6)
    lhs, mid, rhs = fn.wente_check(normalized_linear_field(np.diag([1.2, 1, 1, 1])), rule)
    assert lhs == pytest.approx(NL4_12_ENERGY, abs=1e-12)
    assert mid == pytest.approx(NL4_12_AREA, abs=1e-12)
    assert lhs > mid + 1e-3 and mid >= rhs - 1e-10


def test_wente_for_non_sphere_valued(rng):
    w = linear_field(np.eye(3) * 1.5)
    lhs, mid, rhs = fn.wente_check(w, sphere_rule(3, 8))
    assert lhs == pytest.approx(2.25) and mid == pytest.approx(2.25) and rhs == pytest.approx(3.375 ** (2 / 3))


def test_projections(rng):
    rule = sphere_rule(4, 12)
    B = rng.standard_normal((4, 4))
    lin = fn.projections(linear_field(B), rule)
    assert np.abs(lin.A - B).max() <= 1e-10 and np.abs(lin.mean).max() <= 1e-12
    c = rng.standard_normal(4)
    const = linear_field(np.zeros((4, 4)), c)
    lin = fn.projections(const, rule)
    assert np.allclose(lin.mean, c, atol=1e-12) and np.abs(lin.A).max() <= 1e-12
    lin = fn.projections(linear_field(B, c), rule)
    assert np.allclose(lin.A, B, atol=1e-10) and np.allclose(lin.mean, c, atol=1e-12)


def test_projection_of_mobius_matches_oracle():
    m = MobiusElement(np.eye(4), np.eye(4)[0], 2.0)
    A = fn.projections(mobius_field(m), sphere_rule(4, 32)).A
    assert np.abs(A - np.diag(MOB_A_DIAG)).max() <= 1e-6


def test_poincare_equality_cases(rng):
    rule = sphere_rule(4, 10)
    g1, _ = fn.poincare_gaps(linear_field(rng.standard_normal((4, 4))), rule)
    assert abs(g1) <= 1e-10
    B2 = harmonic_basis(4, 2)
    w = PolynomialField(4, {2: rng.standard_normal((4, B2.shape[1])) @ B2.T})
    _, g2 = fn.poincare_gaps(w, rule)
    assert abs(g2) <= 1e-8


@given(st.integers(3, 4), seeds)
def test_poincare_gaps_nonnegative(n, seed):
    w = random_harmonic_field(n, [0, 1, 2, 3], np.random.default_rng(seed))
    g1, g2 = fn.poincare_gaps(w, sphere_rule(n, 8))
    assert g1 >= -1e-8 and g2 >= -1e-8


def test_harmonic_energy_bound_closed_forms(rng):
    n = 4
    rule, ball = sphere_rule(n, 8), ball_rule(n, 8)
    B = rng.standard_normal((n, n))
    lhs, rhs = fn.harmonic_energy_bound(linear_field(B), ball, rule)
    assert lhs == pytest.approx(np.sum(B * B), abs=1e-10) and rhs == pytest.approx(np.sum(B * B), abs=1e-10)
    # degree-2 harmonic P: avg_B |grad P|^2 = 2n avg|P|^2, surface side n/(n-1) * 2n avg|P|^2
    B2 = harmonic_basis(n, 2)
    C = rng.standard_normal((n, B2.shape[1])) @ B2.T
    ms = mean_square(n, C, monomial_exponents(n, 2))
    lhs, rhs = fn.harmonic_energy_bound(PolynomialField(n, {2: C}), ball, rule)
    assert lhs == pytest.approx(2 * n * ms, rel=1e-10)
    assert rhs == pytest.approx(n / (n - 1) * 2 * n * ms, rel=1e-10)
    assert lhs < rhs
    zero = linear_field(np.zeros((n, n)))
    assert fn.harmonic_energy_bound(zero, ball, rule) == (0.0, 0.0)


def test_band_limited_required():
    with pytest.raises(NotBandLimited):
        fn.harmonic_energy_bound(identity_field(3), ball_rule(3, 4), sphere_rule(3, 4))
    with pytest.raises(NotBandLimited):
        fn.null_lagrangian_identity(bump_sphere_field(3, 0.1), ball_rule(3, 4), sphere_rule(3, 4))


def test_null_lagrangian_zero_and_linear(rng):
    n = 4
    rule, ball = sphere_rule(n, 8), ball_rule(n, 8)
    r = fn.null_lagrangian_identity(linear_field(np.zeros((n, n))), ball, rule)
    assert r.lhs == pytest.approx(1.0) and r.rhs == pytest.approx(1.0)
    B = 0.1 * rng.standard_normal((n, n))
    r = fn.null_lagrangian_identity(linear_field(B), ball, rule)
    assert r.lhs == pytest.approx(np.linalg.det(np.eye(n) + B), abs=1e-13)
    assert r.residual <= 1e-8
    r2 = fn.null_lagrangian_identity(linear_field(B), ball_rule(n, 12), sphere_rule(n, 12))
    assert abs(r.rhs - r2.rhs) <= 1e-12


@given(st.integers(3, 4), seeds)
def test_null_lagrangian_terms(n, seed):
    rng = np.random.default_rng(seed)
    w = random_harmonic_field(n, [1, 2, 3], rng, 0.3)
    rule, ball = sphere_rule(n, 12), ball_rule(n, 10)
    r = fn.null_lagrangian_identity(w, ball, rule)
    assert r.residual <= 1e-8
    terms = fn.null_lagrangian_terms(w, rule)
    v = w.values(rule.nodes)
    from mobstab.quadrature import integrate

    assert terms[0] == pytest.approx(n * integrate(rule, np.sum(v * rule.nodes, axis=1)), abs=1e-12)
    assert terms[-1] == pytest.approx(fn.ball_jacobian_average(w, ball), abs=1e-10)


def test_grad_distance(rng):
    rule = sphere_rule(3, 16)
    u = bump_sphere_field(3, 0.3)
    assert fn.grad_distance(u, u, rule) == 0.0
    c, s = 0.0, 1.0
    R = np.array([[c, -s, 0], [s, c, 0], [0, 0, 1.0]])
    # avg |(I - R) P_T|^2 = (n-1)/n |I - R|^2 = 2/3 * 4
    assert fn.grad_distance(identity_field(3), orthogonal_field(R), rule) == pytest.approx(8 / 3, abs=1e-12)


@given(seeds)
def test_grad_distance_symmetric_and_triangle(seed):
    rng = np.random.default_rng(seed)
    rule = sphere_rule(4, 8)
    f = [normalized_linear_field(np.eye(4) + 0.3 * rng.standard_normal((4, 4))) for _ in range(3)]
    p = 3
    d = lambda a, b: fn.grad_distance(a, b, rule, p) ** (1 / p)
    assert d(f[0], f[1]) == pytest.approx(d(f[1], f[0]), rel=1e-12)
    assert d(f[0], f[2]) <= d(f[0], f[1]) + d(f[1], f[2]) + 1e-12


@pytest.mark.parametrize("n", [3, 4, 5])
def test_moment_identities(n, rng):
    rule = sphere_rule(n, 6)
    for _ in range(5):
        A = rng.standard_normal((n, n))
        a, b = fn.linear_moments(A, rule)
        assert a == pytest.approx((n - 1) / n * np.sum(A * A), abs=1e-10)
        assert b == pytest.approx(np.sum(A * A) / n, abs=1e-10)
