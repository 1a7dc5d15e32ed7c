"""
Moebius maps of the sphere
==========================

Build a few Moebius elements, check that they are conformal at every
quadrature node and that their conformal deficit vanishes.
"""

import numpy as np

from mobstab import MobiusElement, deficit, sphere_rule
from mobstab.functionals import conformality_residuals
from mobstab.map_model import mobius_field

rng = np.random.default_rng(0)
rule = sphere_rule(3, 24)
print(f"product rule on S^2 with {len(rule)} nodes, exact to degree {rule.exactness}")

# A Moebius element is a rotation R composed with a dilation phi_{xi, lam}
# conjugated through stereographic projection.
for _ in range(3):
    m = MobiusElement.random(3, rng, (0.25, 4.0))
    u = mobius_field(m)
    rep = deficit(u, rule)
    print(f"lam={m.lam:6.3f}  deficit={rep.deficit: .2e}  degree={rep.degree:.12f}  "
          f"conformality residual={conformality_residuals(u, rule).max():.1e}")

# (xi, lam) and (-xi, 1/lam) describe the same map; the inverse undoes it.
m = MobiusElement.random(3, rng)
twin = MobiusElement(m.R, -m.xi, 1.0 / m.lam)
x = rule.nodes[:5]
print("dual parameters agree:", np.allclose(m(x), twin(x)))
print("inverse round trip:", np.allclose(m.inverse()(m(x)), x))
