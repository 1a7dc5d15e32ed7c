"""
Product quadrature on spheres, balls and discs
==============================================

The rules are average-normalized on spheres and balls, so integrating a
constant gives one.  Monomial averages have closed forms to compare with.
"""

import numpy as np

from mobstab import ball_rule, disc_rule, integrate, sphere_rule
from mobstab.quadrature import integrate_with_error, sphere_moment

for n in (3, 4, 5):
    rule = sphere_rule(n, 8)
    alpha = np.zeros(n, dtype=int)
    alpha[0], alpha[1] = 4, 2
    val = integrate(rule, np.prod(rule.nodes**alpha, axis=1))
    print(f"n={n}: {len(rule):6d} nodes, avg x1^4 x2^2 = {val:.15f} (exact {sphere_moment(alpha):.15f})")

# Ball rule: avg |y|^2 over the unit ball is n / (n + 2).
ball = ball_rule(4, 8)
print("ball second moment:", integrate(ball, np.sum(ball.nodes**2, axis=1)), "exact", 4 / 6)

# Disc rules integrate (not average) over a flat disc.
disc = disc_rule(np.zeros(3), 2.0, 16)
print("disc weights sum:", disc.weights.sum(), "exact", 4 / 3 * np.pi * 8)

# A coarse/fine pair gives a cheap error estimate for non-polynomial integrands.
f = lambda X: np.exp(X[:, 0])
val, err = integrate_with_error(sphere_rule(3, 6), sphere_rule(3, 12), f)
print(f"avg exp(x1) on S^2 = {val:.15f} (exact {np.sinh(1.0):.15f}), estimated error {err:.1e}")
