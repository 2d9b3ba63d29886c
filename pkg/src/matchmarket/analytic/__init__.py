"""Large-N evolution equations and the long-run married distribution."""

from .density import reconstruct_auto, reconstruct_density
from .poly import Poly, as_fraction
from .recursion import (
    GridDensity,
    MomentState,
    ModelSpec,
    PolyDensity,
    evolve,
    first_step_mean,
    initial_state,
    moment_step,
    moments_only_state,
)
from .stationary import (
    StationaryDensity,
    published_stationary_moment,
    stationary_married_density,
    stationary_moment,
)

__all__ = [
    "GridDensity",
    "MomentState",
    "ModelSpec",
    "Poly",
    "PolyDensity",
    "StationaryDensity",
    "as_fraction",
    "evolve",
    "first_step_mean",
    "initial_state",
    "moment_step",
    "moments_only_state",
    "published_stationary_moment",
    "reconstruct_auto",
    "reconstruct_density",
    "stationary_married_density",
    "stationary_moment",
]
