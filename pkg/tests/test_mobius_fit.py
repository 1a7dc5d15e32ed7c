import json

import numpy as np
import pytest

import mobstab.functionals as fn
from mobstab.errors import CenteringFailed, MaxIterations
from mobstab.map_model import (
    PlanarMobiusElement,
    SphereField,
    bump_family_field,
    bump_sphere_field,
    compose,
    inverse_stereographic_field,
    mobius_field,
    normalized_linear_field,
    planar_mobius_field,
    rotate,
)
from mobstab.matrix_algebra import dist2_SO
from mobstab.mobius_fit import (
    PlanarObjective,
    center,
    fit_mobius,
    fit_objective,
    fit_planar,
    map_displacement,
    mean_after,
)
from mobstab.quadrature import disc_rule, sphere_rule
from mobstab.sphere_geometry import MobiusElement, random_rotation


@pytest.mark.parametrize("n", [3, 4])
def test_zero_residual_recovery(n):
    rng = np.random.default_rng(n)
    rule = sphere_rule(n, 12)
    for _ in range(2):
        m = MobiusElement.random(n, rng)
        res = fit_mobius(mobius_field(m), rule)
        assert res.objective <= 1e-8
        assert map_displacement(res.element, m, rule.nodes) <= 1e-4
        assert res.converged


def test_fit_result_json(rng):
    m = MobiusElement.random(3, rng)
    res = fit_mobius(mobius_field(m), sphere_rule(3, 8))
    d = json.loads(res.to_json())
    assert set(d) == {"element", "objective", "iterations", "converged", "gradient_norm"}
    assert set(d["element"]) == {"R", "xi", "lambda"}


def test_bump_fit_stable_across_restarts():
    n = 4
    rule = sphere_rule(n, 12)
    u = bump_sphere_field(n, 0.2)
    rng = np.random.default_rng(5)
    objs = []
    for k in range(5):
        init = None if k == 0 else MobiusElement.random(n, rng, (0.8, 1.25))
        res = fit_mobius(u, rule, init)
        assert res.objective > 0
        assert all(b <= a for a, b in zip(res.history, res.history[1:]))
        objs.append(res.objective)
    assert (max(objs) - min(objs)) / min(objs) <= 1e-6


def test_objective_never_exceeds_init(rng):
    n = 3
    rule = sphere_rule(n, 10)
    u = compose(bump_sphere_field(n, 0.4), MobiusElement.random(n, rng))
    init = MobiusElement.random(n, rng)
    res = fit_mobius(u, rule, init)
    assert res.objective <= fit_objective(u, init, rule) + 1e-15


def test_objective_invariant_under_pre_rotation(rng):
    n = 4
    rule = sphere_rule(n, 12)
    u = bump_sphere_field(n, 0.3)
    Q = random_rotation(n, rng)
    a = fit_mobius(u, rule)
    b = fit_mobius(rotate(u, Q), rule)
    assert a.objective == pytest.approx(b.objective, abs=1e-8)
    # the argmin transforms covariantly: Q R phi is optimal for Q u
    moved = MobiusElement(Q @ a.element.R, a.element.xi, a.element.lam)
    assert fit_objective(rotate(u, Q), moved, rule) == pytest.approx(a.objective, abs=1e-12)


@pytest.mark.parametrize("n", [3, 4])
def test_key_estimate_probe(n):
    rule = sphere_rule(n, 12)
    rng = np.random.default_rng(0)
    B = rng.standard_normal((n, n))
    B = (B + B.T) / 2
    ratios = []
    for t in (0.1, 0.03, 0.01, 0.003):
        u = normalized_linear_field(np.eye(n) + t * B)
        obj = fit_mobius(u, rule).objective
        A = fn.projections(u, rule).A
        ratios.append(obj / (fn.deficit(u, rule).deficit + dist2_SO(A)))
    assert max(ratios) < 10.0
    assert ratios[-1] <= 1.5 * ratios[0]


def test_max_iterations():
    rule = sphere_rule(3, 8)
    u = bump_sphere_field(3, 0.5)
    init = MobiusElement(np.eye(3), np.array([1.0, 0.0, 0.0]), 1.6)
    res = fit_mobius(u, rule, init, maxiter=1, warm_start=False)
    assert not res.converged and res.iterations == 1
    assert res.objective <= fit_objective(u, init, rule)
    with pytest.raises(MaxIterations):
        fit_mobius(u, rule, init, maxiter=1, warm_start=False, strict=True)


# ---------------------------------------------------------------- centering

def test_center_already_centred_returns_identity():
    rule = sphere_rule(4, 8)
    u = bump_sphere_field(4, 0.0)
    psi = center(u, rule)
    assert psi.lam == 1.0 and np.array_equal(psi.R, np.eye(4))


def test_center_mobius(rng):
    for n in (3, 4):
        rule = sphere_rule(n, 12)
        m = MobiusElement.random(n, rng, (0.3, 3.0))
        psi = center(mobius_field(m), rule)
        assert np.linalg.norm(mean_after(mobius_field(m), psi, rule)) <= 1e-6


def test_center_preserves_deficit():
    n = 4
    rule = sphere_rule(n, 16)
    xi0 = np.array([0.6, 0.0, 0.8, 0.0])
    u = compose(normalized_linear_field(np.diag([1.1, 1, 1, 1])), MobiusElement(np.eye(n), xi0, 2.0))
    psi = center(u, rule)
    assert np.linalg.norm(mean_after(u, psi, rule)) <= 1e-6
    before = fn.deficit(u, rule).deficit
    after = fn.deficit(compose(u, psi), rule).deficit
    assert abs(before - after) <= 1e-8


def test_centering_is_idempotent(rng):
    n = 3
    rule = sphere_rule(n, 16)
    u = compose(bump_sphere_field(n, 0.3), MobiusElement.random(n, rng))
    uc = compose(u, center(u, rule, tol=1e-10))
    psi2 = center(uc, rule, tol=1e-6)
    assert map_displacement(psi2, MobiusElement.identity(n), rule.nodes) <= 1e-3


def test_centering_failure_for_constant_map():
    n = 3
    e = np.array([1.0, 0.0, 0.0])
    const = SphereField(n, lambda X: (np.tile(e, (len(X), 1)), np.zeros((len(X), n, n))), True, "constant")
    with pytest.raises(CenteringFailed):
        center(const, sphere_rule(n, 6))


# ---------------------------------------------------------------- flat side

def test_planar_fit_phi_is_zero():
    n = 3
    phi = inverse_stereographic_field(n)
    disc = disc_rule(np.zeros(n - 1), 1.0, 12)
    res = fit_planar(phi, disc, phi, sphere_rule(n, 12))
    assert res.objective == 0.0 and res.iterations == 0


def test_planar_fit_bump_close_to_phi_value():
    n = 4
    eps = 0.05
    u = bump_family_field(n, eps)
    c, rad = u.support_hint
    disc = disc_rule(c, rad, 16, breaks=(0.5,))
    S = sphere_rule(n, 12)
    at_phi = PlanarObjective(u, disc, u.background, S)(PlanarMobiusElement.identity(n))
    res = fit_planar(u, disc, sphere=S)
    assert res.objective <= at_phi
    assert at_phi - res.objective <= 1e-3 * eps ** (n - 1)


def test_planar_zero_residual_recovery():
    n = 3
    target = PlanarMobiusElement(np.eye(n), np.array([0.3, -0.2]), 1.4)
    u = planar_mobius_field(target)
    disc = disc_rule(np.zeros(n - 1), 1.0, 12)
    res = fit_planar(u, disc, u, sphere_rule(n, 16))
    assert res.objective <= 1e-10
    assert res.element.rho == pytest.approx(1.4, abs=1e-5)
    assert np.allclose(res.element.x0, target.x0, atol=1e-5)
    assert json.loads(res.to_json())["element"]["rho"] == pytest.approx(1.4, abs=1e-5)
