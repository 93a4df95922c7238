"""Zero-effort-miss / zero-effort-velocity feedback laws.

With a constant wind acceleration ``k`` these laws reproduce the open-loop
optimal control when evaluated on the optimal trajectory.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .core import BoundaryConditions, NonPositiveTgo, ProblemKind, Vec3, vec3


@dataclass(frozen=True, eq=False)
class ZemZevErrors:
    """Predicted terminal errors if no further control is applied.

    Attributes:
        zem: Position miss (m).
        zev: Velocity miss (m/s); zero for intercept.
        t_go: Time to go (s).
    """

    zem: Vec3
    zev: Vec3
    t_go: float

    def __post_init__(self):
        _check_tgo(self.t_go)
        object.__setattr__(self, "zem", vec3(self.zem, "zem"))
        object.__setattr__(self, "zev", vec3(self.zev, "zev"))
        object.__setattr__(self, "t_go", float(self.t_go))


def _check_tgo(t_go: float) -> None:
    if not t_go > 0.0:
        raise NonPositiveTgo(f"time to go must be positive, got {t_go}")


def compute_errors(r, vg, bc: BoundaryConditions, k, t_go: float) -> ZemZevErrors:
    """Zero-effort miss and velocity from the current state.

    Args:
        r: Current position (m).
        vg: Current ground velocity (m/s).
        bc: Boundary conditions holding the target state.
        k: Wind acceleration (m/s^2), included in the coasting prediction.
        t_go: Time to go (s).
    """
    _check_tgo(t_go)
    r, vg, k = np.asarray(r, float), np.asarray(vg, float), np.asarray(k, float)
    zem = bc.rf - r - vg * t_go - 0.5 * k * t_go**2
    if bc.kind is ProblemKind.RENDEZVOUS:
        zev = bc.vgf - (vg + k * t_go)
    else:
        zev = np.zeros(3)
    return ZemZevErrors(zem, zev, t_go)


def rendezvous_command(e: ZemZevErrors) -> Vec3:
    """``u = 6 ZEM / t_go^2 - 2 ZEV / t_go``."""
    _check_tgo(e.t_go)
    return 6.0 * e.zem / e.t_go**2 - 2.0 * e.zev / e.t_go


def intercept_command(e: ZemZevErrors) -> Vec3:
    """``u = 3 ZEM / t_go^2``."""
    _check_tgo(e.t_go)
    return 3.0 * e.zem / e.t_go**2


def feedback_command(r, vg, bc: BoundaryConditions, k, t_go: float) -> Vec3:
    """Pick the rendezvous or intercept law from the boundary conditions."""
    e = compute_errors(r, vg, bc, k, t_go)
    if bc.kind is ProblemKind.RENDEZVOUS:
        return rendezvous_command(e)
    return intercept_command(e)


def feedback_costates(r, vg, bc: BoundaryConditions, k, t_go: float):
    """Costates implied by the feedback law at the current state.

    Returns ``(p_r, p_v)`` with ``p_v`` the current velocity costate, so that
    the command equals ``-p_v``.
    """
    e = compute_errors(r, vg, bc, k, t_go)
    if bc.kind is ProblemKind.RENDEZVOUS:
        p_r = 12.0 * (0.5 * t_go * e.zev - e.zem) / t_go**3
        p_v = -rendezvous_command(e)
    else:
        p_r = -3.0 * e.zem / t_go**3
        p_v = -intercept_command(e)
    return p_r, p_v
