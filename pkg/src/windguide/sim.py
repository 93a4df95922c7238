"""Fixed-step RK4 simulation of the guided point mass.

The vehicle obeys ``r' = vg`` and ``vg' = u + dw/dt`` where ``dw/dt`` is the
wind rate seen along the trajectory. Three guidance laws are available:
the precomputed open-loop optimum, ZEM/ZEV feedback with a fixed final
time, and a receding-horizon planner for spatial wind fields that
re-solves the constant-wind-acceleration problem at a fixed period.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass
from typing import Callable, List, Optional, Tuple

import numpy as np

from .core import (
    BoundaryConditions,
    ConstantWind,
    CrossTrackShear,
    DivergedBeyondMaxTime,
    LinearWind,
    NoAdmissibleRoot,
    PiecewiseLinearWind,
    ProblemKind,
    SpatialField,
    UnsupportedWindModel,
    Vec3,
    WindModel,
    check_trade_off,
    wind_at,
)
from .guidance import (
    GuidanceSolution,
    control_at,
    intercept_solution,
    rendezvous_solution,
    solve_intercept,
    solve_rendezvous,
    solve_shear,
)
from .polynomial import build_intercept_poly, build_rendezvous_poly, solve_roots
from .zemzev import feedback_command, feedback_costates

EPS_CI = 1e-9
_FIELD_DIFF_STEP = 1e-3
_ENDGAME_FRACTION = 0.05


class Law(enum.Enum):
    OPEN_LOOP = "open_loop"
    ZEM_ZEV = "zem_zev"
    ADAPTIVE_PIECEWISE = "adaptive_piecewise"


@dataclass(frozen=True)
class SimConfig:
    """Integration and guidance settings.

    Attributes:
        law: Guidance law.
        replan_period: Re-solve period of the adaptive planner (s).
        step: RK4 step (s). Open-loop and ZEM/ZEV runs shrink it slightly so
            that an integer number of steps lands exactly on ``tf``.
        t_go_min_fraction: ZEM/ZEV commands freeze once ``t_go`` falls below
            this fraction of ``tf``.
        max_time: Abort threshold on simulated time (s).
        capture_radius: Arrival distance for the adaptive planner (m).
    """

    law: Law = Law.OPEN_LOOP
    replan_period: float = 0.05
    step: float = 0.005
    t_go_min_fraction: float = 1e-4
    max_time: float = 1000.0
    capture_radius: float = 0.1

    def __post_init__(self):
        object.__setattr__(self, "law", Law(self.law))
        if not 0.0 < self.step <= self.replan_period:
            raise ValueError("require 0 < step <= replan_period")
        if not self.max_time > 0.0:
            raise ValueError("max_time must be positive")
        if not 0.0 < self.t_go_min_fraction < 1.0:
            raise ValueError("t_go_min_fraction must lie in (0, 1)")
        if not self.capture_radius > 0.0:
            raise ValueError("capture_radius must be positive")


@dataclass(frozen=True)
class TrajectorySummary:
    t_arrival: float
    position_error: float
    velocity_error: float
    energy: float
    cost: float


@dataclass(frozen=True, eq=False)
class TrajectoryLog:
    """Time-ordered samples of a run.

    Vector arrays have shape ``(n, 3)``; ``H`` and ``ci_eff`` have shape ``(n,)``.
    """

    t: np.ndarray
    r: np.ndarray
    vg: np.ndarray
    va: np.ndarray
    w: np.ndarray
    u: np.ndarray
    H: np.ndarray
    ci_eff: np.ndarray
    summary: TrajectorySummary
    events: Tuple[str, ...] = ()

    COLUMNS = ("t", "x", "y", "z", "vgx", "vgy", "vgz", "vax", "vay", "vaz",
               "wx", "wy", "wz", "ux", "uy", "uz", "H", "ci_eff")

    def __len__(self) -> int:
        return len(self.t)

    def rows(self):
        """Yield one tuple of floats per sample, in ``COLUMNS`` order."""
        for i in range(len(self.t)):
            yield (float(self.t[i]), *map(float, self.r[i]), *map(float, self.vg[i]),
                   *map(float, self.va[i]), *map(float, self.w[i]), *map(float, self.u[i]),
                   float(self.H[i]), float(self.ci_eff[i]))


class _Recorder:
    def __init__(self, model: WindModel):
        self.model = model
        self.samples: List[tuple] = []
        self.events: List[str] = []

    def add(self, t, r, vg, u, H, ci_eff):
        w = wind_at(self.model, t, r)
        self.samples.append((t, r.copy(), vg.copy(), vg - w, w, np.asarray(u, float).copy(), H, ci_eff))

    def finish(self, bc: BoundaryConditions, ci: float) -> TrajectoryLog:
        cols = list(zip(*self.samples))
        t = np.array(cols[0], dtype=float)
        r, vg, va, w, u = (np.array(c, dtype=float).reshape(-1, 3) for c in cols[1:6])
        H, ci_eff = np.array(cols[6], dtype=float), np.array(cols[7], dtype=float)
        u2 = np.einsum("ij,ij->i", u, u)
        e = 0.5 * float(np.sum(0.5 * (u2[1:] + u2[:-1]) * np.diff(t))) if len(t) > 1 else 0.0
        pos_err = float(np.linalg.norm(r[-1] - bc.rf))
        vel_err = float(np.linalg.norm(vg[-1] - bc.vgf)) if bc.vgf is not None else math.nan
        summary = TrajectorySummary(float(t[-1]), pos_err, vel_err, e, e + ci * float(t[-1]))
        return TrajectoryLog(t, r, vg, va, w, u, H, ci_eff, summary, tuple(self.events))


def _field_rate(field: SpatialField, r: Vec3, vg: Vec3, delta: float) -> Vec3:
    """Central difference of the field along ``vg``; exact for quadratic fields."""
    return (field(r + vg * delta) - field(r - vg * delta)) / (2.0 * delta)


def wind_rate_along(model: WindModel, t: float, r: Vec3, vg: Vec3) -> Vec3:
    """Total time derivative of the wind experienced by the vehicle."""
    if isinstance(model, ConstantWind):
        return np.zeros(3)
    if isinstance(model, LinearWind):
        return model.k
    if isinstance(model, PiecewiseLinearWind):
        return model.segments[model.segment_index(t)].k
    if isinstance(model, CrossTrackShear):
        return np.array([model.k_shear * vg[1], 0.0, 0.0])
    if isinstance(model, SpatialField):
        return _field_rate(model, r, vg, _FIELD_DIFF_STEP)
    raise UnsupportedWindModel(type(model).__name__)


def rk4_step(f: Callable[[float, np.ndarray], np.ndarray], t: float, y: np.ndarray, h: float) -> np.ndarray:
    """One classical fourth-order Runge-Kutta step of ``y' = f(t, y)``."""
    k1 = f(t, y)
    k2 = f(t + 0.5 * h, y + 0.5 * h * k1)
    k3 = f(t + 0.5 * h, y + 0.5 * h * k2)
    k4 = f(t + h, y + h * k3)
    return y + h / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4)


def _dynamics(model: WindModel, control: Callable[[float, Vec3, Vec3], Vec3]):
    def f(t, y):
        r, vg = y[:3], y[3:]
        return np.concatenate([vg, control(t, r, vg) + wind_rate_along(model, t, r, vg)])

    return f


def _hamiltonian(ci, u, p_r, p_v, vg, wdot) -> float:
    return float(ci + 0.5 * (u @ u) + p_r @ vg + p_v @ (wdot + u))


def _initial_solution(bc: BoundaryConditions, wind: WindModel, ci: float) -> GuidanceSolution:
    if isinstance(wind, CrossTrackShear):
        return solve_shear(bc, wind.k_shear, ci)
    if bc.kind is ProblemKind.RENDEZVOUS:
        return solve_rendezvous(bc, wind, ci)
    return solve_intercept(bc, wind, ci)


def _single_sample(bc, wind, ci) -> TrajectoryLog:
    rec = _Recorder(wind)
    rec.add(0.0, bc.r0, bc.vg0, np.zeros(3), ci, ci)
    rec.events.append("already at target")
    return rec.finish(bc, ci)


def _run_open_loop(bc, wind, ci, cfg: SimConfig) -> TrajectoryLog:
    sol = _initial_solution(bc, wind, ci)
    if sol.at_target:
        return _single_sample(bc, wind, ci)
    if sol.tf > cfg.max_time:
        raise DivergedBeyondMaxTime(f"flight time {sol.tf} exceeds max_time {cfg.max_time}")
    f = _dynamics(wind, lambda t, r, vg: control_at(sol, t))
    n = max(1, math.ceil(sol.tf / cfg.step - 1e-9))
    h = sol.tf / n
    rec = _Recorder(wind)
    y = np.concatenate([bc.r0, bc.vg0])
    for i in range(n + 1):
        t = sol.tf if i == n else i * h
        r, vg = y[:3], y[3:]
        u = control_at(sol, t)
        H = _hamiltonian(ci, u, sol.costates.p_r, sol.costates.p_v(t), vg, wind_rate_along(wind, t, r, vg))
        rec.add(t, r, vg, u, H, ci)
        if i < n:
            y = rk4_step(f, t, y, h)
    # sol.bc carries the implied terminal velocity for shear rendezvous
    return rec.finish(sol.bc, ci)


def _run_zem_zev(bc, wind, ci, cfg: SimConfig) -> TrajectoryLog:
    if not isinstance(wind, (ConstantWind, LinearWind)):
        raise UnsupportedWindModel("ZEM/ZEV feedback needs a constant wind acceleration")
    sol = _initial_solution(bc, wind, ci)
    if sol.at_target:
        return _single_sample(bc, wind, ci)
    if sol.tf > cfg.max_time:
        raise DivergedBeyondMaxTime(f"flight time {sol.tf} exceeds max_time {cfg.max_time}")
    tf = sol.tf
    k = wind.k if isinstance(wind, LinearWind) else np.zeros(3)
    t_go_min = cfg.t_go_min_fraction * tf
    t_freeze = tf - t_go_min

    def command(t, r, vg):
        return feedback_command(r, vg, bc, k, tf - t)

    f = _dynamics(wind, command)
    rec = _Recorder(wind)
    y = np.concatenate([bc.r0, bc.vg0])
    t = 0.0
    while True:
        r, vg = y[:3], y[3:]
        u = command(t, r, vg)
        p_r, p_v = feedback_costates(r, vg, bc, k, tf - t)
        rec.add(t, r, vg, u, _hamiltonian(ci, u, p_r, p_v, vg, k), ci)
        remaining = t_freeze - t
        if remaining <= 0.0:
            break
        # Feedback gains grow like 1/t_go; keep the step a fixed fraction of it.
        h = min(cfg.step, _ENDGAME_FRACTION * (tf - t))
        if h >= remaining * (1.0 - 1e-9):
            h = remaining
        elif remaining < 2.0 * h:
            h = 0.5 * remaining
        y = rk4_step(f, t, y, h)
        t = t_freeze if h == remaining else t + h
    held = u
    rec.events.append(f"command frozen at t_go = {t_go_min!r}")
    y = rk4_step(_dynamics(wind, lambda t, r, vg: held), t_freeze, y, t_go_min)
    rec.add(tf, y[:3], y[3:], held, math.nan, ci)  # H undefined while coasting
    return rec.finish(bc, ci)


def adaptive_tradeoff(c_base: float, k_est, vg0_seg, vgf) -> float:
    """Segment trade-off ``C + k.(vg0 - vgf)``, clamped below at ``EPS_CI``."""
    c = float(c_base) + float(np.dot(k_est, np.subtract(vg0_seg, vgf)))
    return max(c, EPS_CI)


def _plan_segment(bc_seg: BoundaryConditions, wind_seg: LinearWind, ci_eff: float) -> GuidanceSolution:
    if bc_seg.kind is ProblemKind.RENDEZVOUS:
        poly = build_rendezvous_poly(bc_seg, wind_seg, ci_eff)
        report = solve_roots(poly)
        return rendezvous_solution(bc_seg, wind_seg, ci_eff, report.best.tf, report)
    poly = build_intercept_poly(bc_seg, wind_seg, ci_eff)
    report = solve_roots(poly)
    return intercept_solution(bc_seg, wind_seg, ci_eff, report.best.tf, report)


def run_piecewise(bc: BoundaryConditions, field: SpatialField, c_base: float, cfg: SimConfig) -> TrajectoryLog:
    """Receding-horizon guidance through a steady spatial wind field.

    Every ``replan_period`` the local wind acceleration is estimated by a
    forward difference of the field along the current ground velocity over
    one period. For rendezvous the weight becomes ``C + k.(vg - vgf)``, the
    flight time is re-solved from the current state to the original target,
    and the resulting constant-wind-acceleration control is flown for the
    next period. Intercepts re-solve with the base weight.

    Raises:
        DivergedBeyondMaxTime: If the capture radius is not reached in time.
        NoAdmissibleRoot: If re-planning fails twice in a row.
    """
    if not isinstance(field, SpatialField):
        raise UnsupportedWindModel("run_piecewise expects a SpatialField")
    if not bc.is_planar:
        raise ValueError("the spatial field is planar; z components must be zero")
    c_base = check_trade_off(c_base)
    rec = _Recorder(field)
    r, vg = bc.r0.copy(), bc.vg0.copy()
    t = 0.0
    seg: Optional[GuidanceSolution] = None
    seg_t0 = 0.0
    failures = 0
    substeps = max(1, round(cfg.replan_period / cfg.step))
    h_nominal = cfg.replan_period / substeps
    u = np.zeros(3)
    H = math.nan
    ci_eff = c_base

    while True:
        if np.linalg.norm(r - bc.rf) < cfg.capture_radius:
            break
        if t > cfg.max_time:
            raise DivergedBeyondMaxTime(f"no capture within {cfg.max_time} s")
        w = field(r)
        k_est = (field(r + vg * cfg.replan_period) - w) / cfg.replan_period
        if bc.kind is ProblemKind.RENDEZVOUS:
            raw = c_base + float(k_est @ (vg - bc.vgf))
            ci_eff = adaptive_tradeoff(c_base, k_est, vg, bc.vgf)
            if raw < EPS_CI:
                rec.events.append(f"t={t!r}: trade-off clamped from {raw!r} to {ci_eff!r}")
        bc_seg = BoundaryConditions(r, bc.rf, vg, bc.vgf)
        try:
            seg = _plan_segment(bc_seg, LinearWind(w, k_est), ci_eff)
            seg_t0 = t
            failures = 0
        except NoAdmissibleRoot:
            failures += 1
            rec.events.append(f"t={t!r}: no admissible flight time; holding previous plan")
            if failures > 1 or seg is None:
                raise

        remaining = seg.tf - (t - seg_t0)
        span = min(cfg.replan_period, remaining)
        if span <= 0.0:
            rec.events.append(f"t={t!r}: segment horizon exhausted before capture")
            break
        n = max(1, math.ceil(span / h_nominal - 1e-9))
        h = span / n
        plan, t_plan0 = seg, seg_t0
        f = _dynamics(field, lambda tt, rr, vv: control_at(plan, tt - t_plan0))
        captured = False
        for _ in range(n):
            u = control_at(plan, t - t_plan0)
            wdot = _field_rate(field, r, vg, _FIELD_DIFF_STEP)
            H = _hamiltonian(ci_eff, u, plan.costates.p_r, plan.costates.p_v(t - t_plan0), vg, wdot)
            rec.add(t, r, vg, u, H, ci_eff)
            y = rk4_step(f, t, np.concatenate([r, vg]), h)
            r, vg = y[:3], y[3:]
            t += h
            if np.linalg.norm(r - bc.rf) < cfg.capture_radius:
                captured = True
                break
        if captured:
            break

    rec.add(t, r, vg, u, H, ci_eff)
    return rec.finish(bc, c_base)


def run(bc: BoundaryConditions, wind: WindModel, ci: float, cfg: SimConfig = SimConfig()) -> TrajectoryLog:
    """Simulate one guided flight.

    Raises:
        NoAdmissibleRoot: If the initial flight-time problem has no solution.
        DivergedBeyondMaxTime: If the flight would exceed ``cfg.max_time``.
    """
    ci = check_trade_off(ci)
    if cfg.law is Law.ADAPTIVE_PIECEWISE:
        return run_piecewise(bc, wind, ci, cfg)
    if cfg.law is Law.ZEM_ZEV:
        return _run_zem_zev(bc, wind, ci, cfg)
    return _run_open_loop(bc, wind, ci, cfg)
