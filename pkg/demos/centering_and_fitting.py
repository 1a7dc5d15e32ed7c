"""
Centering and nearest-Moebius fitting
=====================================

Precomposing with a Moebius map does not change the deficit, so any map can
be centred (mean zero).  The fit then finds the Moebius map closest in the
gradient seminorm.
"""

import numpy as np

from mobstab import MobiusElement, center, deficit, fit_mobius, sphere_rule
from mobstab.map_model import compose, mobius_field, normalized_linear_field
from mobstab.mobius_fit import mean_after

n = 3
rule = sphere_rule(n, 32)
u = compose(normalized_linear_field(np.diag([1.1, 1.0, 1.0])), MobiusElement(np.eye(n), np.eye(n)[0], 2.0))
print("mean before centering:", np.linalg.norm(mean_after(u, MobiusElement.identity(n), rule)))

psi = center(u, rule)
uc = compose(u, psi)
print("mean after centering:", np.linalg.norm(mean_after(u, psi, rule)), " lambda =", psi.lam)
print("deficit before / after:", deficit(u, rule).deficit, deficit(uc, rule).deficit)

fit = fit_mobius(uc, rule)
print(f"fitted distance {fit.objective:.6e} in {fit.iterations} iterations, converged={fit.converged}")

# A Moebius map is recovered exactly.
m = MobiusElement.random(n, np.random.default_rng(3))
print("fit to a Moebius map:", fit_mobius(mobius_field(m), rule).objective)
