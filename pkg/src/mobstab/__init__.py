"""Numerical toolkit for quantitative stability of conformal maps between spheres.

Submodules
----------
sphere_geometry
    Points, tangent frames, stereographic charts and Moebius elements.
map_model
    Sphere and flat fields with analytic gradients, built-in families, map specs.
quadrature
    Product Gauss rules on spheres, balls and discs.
functionals
    Conformal energy, deficit, degree, projections and related integrals.
matrix_algebra
    Elementary symmetric polynomials, polar decomposition, a vector inequality.
mobius_fit
    Centering and nearest-Moebius fitting.
experiments
    Verification suites, the sharpness sweep and the ratio probe.
"""

from .errors import (
    CenteringFailed,
    DegenerateFrame,
    InvalidEps,
    MalformedSpec,
    MaxIterations,
    MobstabError,
    NotBandLimited,
    NotOrientationPreserving,
    PoleSingularity,
    ResourceLimit,
    SingularMatrix,
    UnknownSuite,
)
from .functionals import DeficitReport, HarmonicLinearPart, deficit, degree, projections
from .map_model import PlaneField, SphereField, field_from_spec
from .mobius_fit import FitResult, center, fit_mobius, fit_planar
from .quadrature import ball_rule, disc_rule, integrate, sphere_rule
from .sphere_geometry import MobiusElement, SpherePoint, tangent_frames

__version__ = "0.1.0"
