"""Closed-form open-loop optimal guidance.

The cost is ``J = int_0^tf (u.u/2 + C) dt`` for a point mass with
``r' = vg`` and ``vg' = u + w'``, where ``u`` is the airspeed rate. The
optimal control is linear in time, ``u(t) = t p_r - p_v0``, so every quantity
below is an explicit polynomial in ``t``.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional, Tuple

import numpy as np

from .core import (
    BoundaryConditions,
    ConstantWind,
    Costates,
    CrossTrackShear,
    LinearWind,
    OutOfHorizon,
    ProblemKind,
    UnsupportedWindModel,
    Vec3,
    WindModel,
    check_trade_off,
    wind_at,
    wind_integrals,
    wind_integrals_at,
    wind_rate,
)
from .polynomial import (
    CaseTag,
    RootReport,
    _check_shear_bc,
    build_intercept_poly,
    build_rendezvous_poly,
    build_shear_poly,
    shear_terminal_velocity,
    solve_roots,
)

_AT_TARGET_TOL = 1e-12


@dataclass(frozen=True, eq=False)
class GuidanceSolution:
    """An optimal trajectory fixed by its flight time and costates.

    Attributes:
        tf: Flight time (s). Zero marks the already-at-target case.
        costates: Position and initial velocity costates.
        cost: Optimal cost ``J``.
        case_tag: Problem case.
        bc: Boundary conditions.
        wind: Wind model used for the solution.
        ci: Weight on elapsed time.
        roots: Full root report when ``tf`` came from the polynomial solver.
    """

    tf: float
    costates: Costates
    cost: float
    case_tag: CaseTag
    bc: BoundaryConditions
    wind: WindModel
    ci: float
    roots: Optional[RootReport] = None

    @property
    def at_target(self) -> bool:
        return self.tf == 0.0


def _zero_costates() -> Costates:
    return Costates(np.zeros(3), np.zeros(3))


def _is_at_target(bc: BoundaryConditions) -> bool:
    scale = 1.0 + np.linalg.norm(bc.r0) + np.linalg.norm(bc.rf)
    if np.linalg.norm(bc.delta_r) > _AT_TARGET_TOL * scale:
        return False
    if bc.vgf is None:
        return True
    vscale = 1.0 + np.linalg.norm(bc.vg0) + np.linalg.norm(bc.vgf)
    return np.linalg.norm(bc.vg0 - bc.vgf) <= _AT_TARGET_TOL * vscale


def _energy_integral(cs: Costates, tf: float) -> float:
    pr, pv = cs.p_r, cs.p_v0
    return 0.5 * ((pr @ pr) * tf**3 / 3.0 - (pr @ pv) * tf**2 + (pv @ pv) * tf)


# Rendezvous --------------------------------------------------------------------


def rendezvous_costates(bc: BoundaryConditions, wind: WindModel, tf: float) -> Costates:
    """Costates that meet the rendezvous constraints at a given ``tf``.

    Valid for any wind with closed-form time integrals.
    """
    wi = wind_integrals(wind, tf)
    dr, vg0, vgf = bc.delta_r, bc.vg0, bc.vgf
    p_r = 6.0 * (2.0 * dr + (vg0 + vgf - wi.delta_wf) * tf + 2.0 * wi.varpi_f) / tf**3
    p_v0 = 2.0 * (3.0 * dr + (2.0 * vg0 + vgf - wi.delta_wf) * tf + 3.0 * wi.varpi_f) / tf**2
    return Costates(p_r, p_v0)


def rendezvous_cost_coefficients(bc: BoundaryConditions, wind: WindModel, tf: float) -> Tuple[float, float, float]:
    """Air-relative coefficients ``(a1, a2, a3)`` of ``J = C tf + a1/tf + a2/tf^2 + a3/tf^3``."""
    wi = wind_integrals(wind, tf)
    va0 = bc.vg0 - wind_at(wind, 0.0)
    vaf = bc.vgf - wind_at(wind, tf)
    d = bc.delta_r + wi.I_wf
    a1 = 2.0 * (va0 @ va0 + vaf @ vaf + va0 @ vaf)
    a2 = 6.0 * (d @ (va0 + vaf))
    a3 = 6.0 * (d @ d)
    return a1, a2, a3


def rendezvous_cost(bc: BoundaryConditions, wind: WindModel, ci: float, tf: float) -> float:
    """Optimal rendezvous cost for a fixed flight time."""
    a1, a2, a3 = rendezvous_cost_coefficients(bc, wind, tf)
    return ci * tf + a1 / tf + a2 / tf**2 + a3 / tf**3


def _rendezvous_tag(wind: WindModel) -> CaseTag:
    return CaseTag.RENDEZVOUS_CONST_WIND if isinstance(wind, ConstantWind) else CaseTag.RENDEZVOUS_GENERAL


def rendezvous_solution(
    bc: BoundaryConditions,
    wind: WindModel,
    ci: float,
    tf: float,
    roots: Optional[RootReport] = None,
) -> GuidanceSolution:
    """Rendezvous trajectory for a prescribed flight time.

    Useful for inspecting non-optimal stationary points or for winds that have
    no flight-time polynomial, such as piecewise-linear profiles.
    """
    if bc.kind is not ProblemKind.RENDEZVOUS:
        raise ValueError("rendezvous_solution needs rendezvous boundary conditions")
    ci = check_trade_off(ci)
    return GuidanceSolution(
        tf=float(tf),
        costates=rendezvous_costates(bc, wind, tf),
        cost=rendezvous_cost(bc, wind, ci, tf),
        case_tag=_rendezvous_tag(wind),
        bc=bc,
        wind=wind,
        ci=ci,
        roots=roots,
    )


def solve_rendezvous(bc: BoundaryConditions, wind: WindModel, ci: float) -> GuidanceSolution:
    """Optimal rendezvous in steady or constant-acceleration wind.

    Returns the admissible flight time of lowest cost. The complete root
    report is attached as ``roots``.

    Raises:
        NoAdmissibleRoot: If no positive flight time is a cost minimum.
    """
    ci = check_trade_off(ci)
    poly = build_rendezvous_poly(bc, wind, ci)
    if _is_at_target(bc):
        return GuidanceSolution(0.0, _zero_costates(), 0.0, poly.case_tag, bc, wind, ci)
    report = solve_roots(poly, lambda t: rendezvous_cost(bc, wind, ci, t))
    return rendezvous_solution(bc, wind, ci, report.best.tf, report)


# Intercept ---------------------------------------------------------------------


def intercept_costates(bc: BoundaryConditions, wind: WindModel, tf: float) -> Costates:
    """Intercept costates at a given ``tf``; ``p_v(tf) = 0`` by transversality."""
    k = wind_rate(wind)
    p_r = 3.0 * (bc.delta_r + bc.vg0 * tf + 0.5 * k * tf**2) / tf**3
    return Costates(p_r, p_r * tf)


def intercept_cost(bc: BoundaryConditions, wind: WindModel, ci: float, tf: float) -> float:
    """Optimal intercept cost for a fixed flight time."""
    k = wind_rate(wind)
    dr, v = bc.delta_r, bc.vg0
    return (
        (ci + 0.375 * (k @ k)) * tf
        + 1.5 * (v @ k)
        + 1.5 * (v @ v + dr @ k) / tf
        + 3.0 * (dr @ v) / tf**2
        + 1.5 * (dr @ dr) / tf**3
    )


def intercept_solution(
    bc: BoundaryConditions,
    wind: WindModel,
    ci: float,
    tf: float,
    roots: Optional[RootReport] = None,
) -> GuidanceSolution:
    """Intercept trajectory for a prescribed flight time."""
    if bc.kind is not ProblemKind.INTERCEPT:
        raise ValueError("intercept_solution needs intercept boundary conditions")
    ci = check_trade_off(ci)
    return GuidanceSolution(
        float(tf), intercept_costates(bc, wind, tf), intercept_cost(bc, wind, ci, tf),
        CaseTag.INTERCEPT, bc, wind, ci, roots,
    )


def solve_intercept(bc: BoundaryConditions, wind: WindModel, ci: float) -> GuidanceSolution:
    """Optimal intercept (free terminal velocity) in steady or linear wind."""
    ci = check_trade_off(ci)
    poly = build_intercept_poly(bc, wind, ci)
    if _is_at_target(bc):
        return GuidanceSolution(0.0, _zero_costates(), 0.0, CaseTag.INTERCEPT, bc, wind, ci)
    report = solve_roots(poly, lambda t: intercept_cost(bc, wind, ci, t))
    return intercept_solution(bc, wind, ci, report.best.tf, report)


def intercept_terminal_velocity(sol: GuidanceSolution) -> Vec3:
    """Ground velocity at ``tf`` for an intercept solution."""
    if sol.case_tag is not CaseTag.INTERCEPT:
        raise ValueError("not an intercept solution")
    if sol.at_target:
        return sol.bc.vg0.copy()
    k = wind_rate(sol.wind)
    tf, bc = sol.tf, sol.bc
    return bc.vg0 - 1.5 * (bc.delta_r + bc.vg0 * tf) / tf + 0.25 * k * tf


# Cross-track shear -------------------------------------------------------------


def shear_costates(bc: BoundaryConditions, k_shear: float, tf: float) -> Costates:
    """Costates for planar shear with terminal velocity ``(vgx0, -vgy0)``."""
    x0 = bc.r0[0]
    vx, vy = bc.vg0[0], bc.vg0[1]
    k = float(k_shear)
    p_r = np.array([12.0 * (x0 + vx * tf) / tf**3 + 2.0 * k * vy / tf, 0.0, 0.0])
    p_v0 = np.array([6.0 * (x0 + vx * tf) / tf**2 + k * vy, 2.0 * vy / tf, 0.0])
    return Costates(p_r, p_v0)


def _as_shear_bc(bc: BoundaryConditions) -> BoundaryConditions:
    if bc.vgf is None:
        return BoundaryConditions(bc.r0, bc.rf, bc.vg0, shear_terminal_velocity(bc.vg0))
    return bc


def shear_solution(
    bc: BoundaryConditions,
    k_shear: float,
    ci: float,
    tf: float,
    roots: Optional[RootReport] = None,
) -> GuidanceSolution:
    """Shear trajectory for a prescribed flight time."""
    _check_shear_bc(bc)
    ci = check_trade_off(ci)
    bc = _as_shear_bc(bc)
    cs = shear_costates(bc, k_shear, tf)
    cost = ci * tf + _energy_integral(cs, tf)
    return GuidanceSolution(float(tf), cs, cost, CaseTag.SHEAR, bc, CrossTrackShear(k_shear), ci, roots)


def solve_shear(bc: BoundaryConditions, k_shear: float, ci: float) -> GuidanceSolution:
    """Planar rendezvous through cross-track shear ``w_x = k y``.

    The terminal ground velocity mirrors the cross-track component,
    ``vgf = (vgx0, -vgy0)``, and the target sits at the origin with the
    start on the x axis.
    """
    ci = check_trade_off(ci)
    poly = build_shear_poly(bc, k_shear, ci)
    bc = _as_shear_bc(bc)
    if _is_at_target(bc):
        return GuidanceSolution(0.0, _zero_costates(), 0.0, CaseTag.SHEAR, bc, CrossTrackShear(k_shear), ci)
    report = solve_roots(poly, lambda t: ci * t + _energy_integral(shear_costates(bc, k_shear, t), t))
    return shear_solution(bc, k_shear, ci, report.best.tf, report)


# Evaluation --------------------------------------------------------------------


def _check_time(sol: GuidanceSolution, t: float) -> float:
    slack = 1e-12 * max(1.0, sol.tf)
    if not (-slack <= t <= sol.tf + slack):
        raise OutOfHorizon(f"t = {t} outside [0, {sol.tf}]")
    return min(max(float(t), 0.0), sol.tf)


def control_at(sol: GuidanceSolution, t: float) -> Vec3:
    """Optimal airspeed rate ``u(t) = t p_r - p_v0``."""
    t = _check_time(sol, t)
    return t * sol.costates.p_r - sol.costates.p_v0


def propagate(sol: GuidanceSolution, t: float) -> Tuple[Vec3, Vec3]:
    """Closed-form position and ground velocity at time ``t``."""
    t = _check_time(sol, t)
    pr, pv = sol.costates.p_r, sol.costates.p_v0
    r0, v0 = sol.bc.r0, sol.bc.vg0
    r = r0 + v0 * t + pr * t**3 / 6.0 - pv * t**2 / 2.0
    v = v0 + pr * t**2 / 2.0 - pv * t
    if isinstance(sol.wind, CrossTrackShear):
        k = sol.wind.k_shear
        y_rel = r[1] - r0[1]
        r = r + np.array([k * (pr[1] * t**4 / 24.0 - pv[1] * t**3 / 6.0 + v0[1] * t**2 / 2.0), 0.0, 0.0])
        v = v + np.array([k * y_rel, 0.0, 0.0])
    elif t > 0.0:
        wi = wind_integrals_at(sol.wind, t)
        r = r + wi.varpi_f
        v = v + wi.delta_wf
    return r, v


def hamiltonian_at(sol: GuidanceSolution, t: float) -> float:
    """Hamiltonian ``C + u.u/2 + p_r.vg + p_v.(k + u)`` along the solution.

    Only defined for steady or constant-acceleration wind, where it is
    conserved and equals zero at the optimal flight time.
    """
    if not isinstance(sol.wind, (ConstantWind, LinearWind)):
        raise UnsupportedWindModel("the Hamiltonian is evaluated only for constant wind acceleration")
    t = _check_time(sol, t)
    k = wind_rate(sol.wind)
    u = control_at(sol, t)
    _, v = propagate(sol, t)
    p_v = sol.costates.p_v(t)
    return float(sol.ci + 0.5 * (u @ u) + sol.costates.p_r @ v + p_v @ (k + u))


def energy(sol: GuidanceSolution) -> float:
    """Control energy ``int_0^tf u.u/2 dt``, integrated exactly."""
    return float(_energy_integral(sol.costates, sol.tf))


__all__ = [
    "GuidanceSolution",
    "control_at",
    "energy",
    "hamiltonian_at",
    "intercept_cost",
    "intercept_costates",
    "intercept_solution",
    "intercept_terminal_velocity",
    "propagate",
    "rendezvous_cost",
    "rendezvous_cost_coefficients",
    "rendezvous_costates",
    "rendezvous_solution",
    "shear_costates",
    "shear_solution",
    "solve_intercept",
    "solve_rendezvous",
    "solve_shear",
]
