"""Generating curves of rotational hypersurfaces with prescribed mean curvature.

The orbit space of a codimension-two isometric action is a planar cone
bounded by lines through the origin.  The generating curve satisfies a
second-order ODE with poles on those lines; this package integrates it away
from the poles and continues it through them with fixed-point startups.
"""

from .catalog import (Family, OrbitTypeSpec, A_theta, A_two_arg, builtin_types, closed_form_theta,
                      gamma_identity, sector_bounds, sector_ids, theta_star, type_I, type_II, type_III,
                      type_IV, type_IV_km, type_V)
from .continuation import (BoundaryInit, GeneratingCurve, OriginInit, RegularInit, solve_global,
                           stitch_check)
from .errors import (ConfigError, ConsistencyError, EvaluationError, HFieldError, ParameterError,
                     ParseError, PatchTooLarge, PoleError, RotogenError, SingularityError,
                     StartupFailure, StepFailure)
from .hfield import ConstantH, ExpressionH, PolynomialH, TableH, parse_h
from .integrator import CurveState, Tolerances, integrate, residual

__version__ = "0.1.0"
