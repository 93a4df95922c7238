"""Optimal rendezvous and intercept guidance for a point mass in wind.

The flight time is the positive root of a quartic built from the boundary
values, the wind and the weight on elapsed time; costates, controls and
trajectories then follow in closed form.
"""

__version__ = "0.1.0"

from .core import (  # noqa: E402
    BoundaryConditions,
    ConstantWind,
    Costates,
    CrossTrackShear,
    DivergedBeyondMaxTime,
    GuidanceError,
    LinearWind,
    NoAdmissibleRoot,
    PiecewiseLinearWind,
    ProblemKind,
    SpatialField,
    WindSegment,
)
from .guidance import (  # noqa: E402
    GuidanceSolution,
    control_at,
    energy,
    hamiltonian_at,
    propagate,
    solve_intercept,
    solve_rendezvous,
    solve_shear,
)
from .polynomial import RootReport, TimePolynomial, solve_roots  # noqa: E402
from .sim import Law, SimConfig, TrajectoryLog, run  # noqa: E402

__all__ = [
    "BoundaryConditions", "ConstantWind", "Costates", "CrossTrackShear", "DivergedBeyondMaxTime",
    "GuidanceError", "LinearWind", "NoAdmissibleRoot", "PiecewiseLinearWind", "ProblemKind",
    "SpatialField", "WindSegment", "GuidanceSolution", "control_at", "energy", "hamiltonian_at",
    "propagate", "solve_intercept", "solve_rendezvous", "solve_shear", "RootReport",
    "TimePolynomial", "solve_roots", "Law", "SimConfig", "TrajectoryLog", "run",
]
