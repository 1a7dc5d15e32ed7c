"""
Sharpness of the exponent
=========================

A flat bump family makes both the deficit and the distance to the Moebius
group of order eps^(n-1).  The log-log slopes of a short sweep show it; the
full 8-point sweep is ``mobstab sharpness --n 4``.
"""

from mobstab import experiments as ex

rows, summary = ex.sharpness_sweep(4, ex.log_grid(0.02, 0.1, 4), level=24, sphere_level=12)
for r in rows:
    print(f"eps={r.eps:.4f}  flat deficit={r.flat_deficit:.6e}  distance={r.mobius_distance:.6e}  ratio={r.ratio:.6f}")
print(f"slopes: deficit {summary['slope_deficit']:.4f}, distance {summary['slope_distance']:.4f} (target 3)")
