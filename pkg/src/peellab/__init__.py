"""Convex hull peeling of Poisson samples in polytopes, with floating-body,
cap-covering and cone-like peeling tools plus Monte Carlo estimators."""

__version__ = "0.1.0"

from .errors import *  # noqa: F401,F403
from .geom_core import PointSet  # noqa: F401
from .polytope_model import HPolytope, builtin, cube, simplex, triangle  # noqa: F401
from .peeling import peel, PeelingResult  # noqa: F401
from .sampling import Seed, sample_poisson, sample_binomial, LimitWindow  # noqa: F401
