"""
Deficit, degree and the first harmonic projection
=================================================

Normalized linear maps ``x -> Ax/|Ax|`` have a positive deficit unless A is
conformal.  The first spherical-harmonic projection of u recovers a matrix
whose distance to the rotations controls the deficit.
"""

import numpy as np

from mobstab import deficit, projections, sphere_rule
from mobstab.functionals import wente_check
from mobstab.map_model import normalized_linear_field
from mobstab.matrix_algebra import polar

rule = sphere_rule(4, 24)
for t in (0.2, 0.1, 0.05):
    u = normalized_linear_field(np.diag([1.0 + t, 1.0, 1.0, 1.0]))
    rep = deficit(u, rule)
    A = projections(u, rule).A
    d2 = polar(A).dist2
    print(f"t={t:5.2f}  deficit={rep.deficit:.6e}  degree={rep.degree:.10f}  "
          f"dist^2(A, SO(4))={d2:.6e}  ratio={d2 / rep.deficit:.4f}")

# The isoperimetric chain: energy >= area >= volume^((n-1)/n).
lhs, mid, rhs = wente_check(normalized_linear_field(np.diag([1.3, 1.0, 0.8, 1.0])), rule)
print(f"energy {lhs:.6f} >= area {mid:.6f} >= volume power {rhs:.6f}")
