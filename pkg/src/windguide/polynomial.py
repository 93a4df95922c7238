"""Flight-time polynomials and their admissible roots.

Every optimal flight time is a positive real root of a polynomial of degree
at most four, ``P(t) = c4 t^4 + c3 t^3 + c2 t^2 + c1 t + c0``. For the
rendezvous and intercept cases ``P(tf) = tf^4 dJ/dtf``, so a root where
``P`` crosses zero upward is a local minimum of the cost ``J``.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass
from typing import Callable, List, Optional, Sequence, Tuple

import numpy as np

from .core import (
    AllCoefficientsZero,
    BoundaryConditions,
    ConstantWind,
    LinearWind,
    NoAdmissibleRoot,
    NotPlanar,
    ProblemKind,
    UnsupportedWindModel,
    WindModel,
    check_trade_off,
    wind_rate,
)

MIN_FLIGHT_TIME = 1e-9
CRITICAL_SLOPE_TOL = 1e-6
TIE_REL_TOL = 1e-9
NEWTON_POLISH_STEPS = 5

_CLUSTER_REL = 1e-5
_DOUBLE_RESIDUAL_REL = 1e-13
_EPS = float(np.finfo(float).eps)


class CaseTag(enum.Enum):
    RENDEZVOUS_GENERAL = "rendezvous_general"
    RENDEZVOUS_CONST_WIND = "rendezvous_const_wind"
    INTERCEPT = "intercept"
    SHEAR = "shear"
    SHEAR_CONST_AIRSPEED = "shear_const_airspeed"


@dataclass(frozen=True)
class TimePolynomial:
    """Quartic (or lower) polynomial in the flight time.

    Attributes:
        coeffs: ``(c4, c3, c2, c1, c0)``.
        case_tag: Which problem case produced the coefficients.
    """

    coeffs: Tuple[float, float, float, float, float]
    case_tag: CaseTag

    def __post_init__(self):
        c = tuple(float(x) for x in self.coeffs)
        if len(c) != 5 or not all(math.isfinite(x) for x in c):
            raise ValueError("coeffs must hold 5 finite values (c4..c0)")
        object.__setattr__(self, "coeffs", c)

    def __call__(self, t):
        return np.polyval(self.coeffs, t)

    def derivative(self, t):
        return np.polyval(np.polyder(self.coeffs), t)


# Builders --------------------------------------------------------------------


def _require_kind(bc: BoundaryConditions, kind: ProblemKind) -> None:
    if bc.kind is not kind:
        raise ValueError(f"expected a {kind.value} problem, got {bc.kind.value}")


def _require_time_wind(wind: WindModel) -> None:
    if not isinstance(wind, (ConstantWind, LinearWind)):
        raise UnsupportedWindModel(
            f"{type(wind).__name__} is not supported here; only constant or linear-in-time wind"
        )


def build_rendezvous_poly(bc: BoundaryConditions, wind: WindModel, ci: float) -> TimePolynomial:
    """Rendezvous flight-time polynomial in ground-velocity form.

    With wind acceleration ``k`` (zero for steady wind) the coefficients are
    ``b4 = C + k.k/2``, ``b2 = -2(|vg0|^2 + |vgf|^2 + vg0.vgf)``,
    ``b1 = -12 dr.(vg0 + vgf)`` and ``b0 = -18 |dr|^2`` with ``dr = r0 - rf``.
    These do not depend on ``tf``, unlike the air-relative form.
    """
    _require_kind(bc, ProblemKind.RENDEZVOUS)
    _require_time_wind(wind)
    ci = check_trade_off(ci)
    k = wind_rate(wind)
    dr = bc.delta_r
    vg0, vgf = bc.vg0, bc.vgf
    b4 = ci + 0.5 * (k @ k)
    b2 = -2.0 * (vg0 @ vg0 + vgf @ vgf + vg0 @ vgf)
    b1 = -12.0 * (dr @ (vg0 + vgf))
    b0 = -18.0 * (dr @ dr)
    tag = CaseTag.RENDEZVOUS_CONST_WIND if isinstance(wind, ConstantWind) else CaseTag.RENDEZVOUS_GENERAL
    return TimePolynomial((b4, 0.0, b2, b1, b0), tag)


def build_intercept_poly(bc: BoundaryConditions, wind: WindModel, ci: float) -> TimePolynomial:
    """Intercept flight-time polynomial (free terminal velocity)."""
    _require_kind(bc, ProblemKind.INTERCEPT)
    _require_time_wind(wind)
    ci = check_trade_off(ci)
    k = wind_rate(wind)
    dr, vg0 = bc.delta_r, bc.vg0
    c4 = ci + 0.375 * (k @ k)
    c2 = -1.5 * (vg0 @ vg0 + dr @ k)
    c1 = -6.0 * (dr @ vg0)
    c0 = -4.5 * (dr @ dr)
    return TimePolynomial((c4, 0.0, c2, c1, c0), CaseTag.INTERCEPT)


def shear_terminal_velocity(vg0) -> np.ndarray:
    """Terminal ground velocity implied by the shear boundary convention."""
    return np.array([vg0[0], -vg0[1], 0.0])


def _check_shear_bc(bc: BoundaryConditions) -> None:
    if not bc.is_planar:
        raise NotPlanar("the cross-track shear model is planar; z components must be zero")
    if np.any(bc.rf != 0.0):
        raise ValueError("the shear solution is written in the target frame; rf must be 0")
    if bc.r0[1] != 0.0:
        raise ValueError("the shear solution assumes the start lies on the x axis (y0 = 0)")
    if bc.vgf is not None and not np.allclose(bc.vgf, shear_terminal_velocity(bc.vg0), rtol=0, atol=1e-12):
        raise ValueError("shear rendezvous requires vgf = (vgx0, -vgy0, 0)")


def build_shear_poly(bc: BoundaryConditions, k_shear: float, ci: float) -> TimePolynomial:
    """Flight-time quartic for planar cross-track shear ``w_x = k y``.

    The terminal velocity is fixed by convention to ``(vgx0, -vgy0)``; the odd
    ``t^3`` term appears only when the shear couples both axes.
    """
    _check_shear_bc(bc)
    ci = check_trade_off(ci)
    k = float(k_shear)
    x0 = bc.r0[0]
    vx, vy = bc.vg0[0], bc.vg0[1]
    return TimePolynomial(
        (
            2.0 * ci + k * k * vy * vy,
            4.0 * k * vx * vy,
            -4.0 * (3.0 * vx * vx + vy * vy),
            -48.0 * x0 * vx,
            -36.0 * x0 * x0,
        ),
        CaseTag.SHEAR,
    )


def build_const_airspeed_quadratic(bc: BoundaryConditions, k_shear: float) -> TimePolynomial:
    """Flight-time quadratic for shear when the initial airspeed is held at the end."""
    _check_shear_bc(bc)
    k = float(k_shear)
    x0 = bc.r0[0]
    vx, vy = bc.vg0[0], bc.vg0[1]
    va0 = math.hypot(vx, vy)
    return TimePolynomial((0.0, 0.0, -k * vy, -(2.0 * vx + 4.0 * va0), -6.0 * x0), CaseTag.SHEAR_CONST_AIRSPEED)


# Root finding ----------------------------------------------------------------


@dataclass(frozen=True)
class Root:
    """A positive real root.

    Attributes:
        tf: Flight time (s).
        cost: Cost at ``tf`` (``nan`` if no cost function was given).
        is_local_min: ``P`` crosses zero upward here.
        critical: Double-root (bifurcation) configuration.
    """

    tf: float
    cost: float
    is_local_min: bool
    critical: bool = False


@dataclass(frozen=True)
class RootReport:
    """Roots of a flight-time polynomial and their classification.

    Attributes:
        polynomial: The polynomial that was solved.
        all_real_roots: Every real root in ascending order, repeated by multiplicity.
        positive: Distinct roots above the flight-time cutoff.
        admissible: Subset of ``positive`` that are strict cost minima.
        global_best: Index into ``admissible`` of the lowest-cost root.
    """

    polynomial: TimePolynomial
    all_real_roots: Tuple[float, ...]
    positive: Tuple[Root, ...]
    admissible: Tuple[Root, ...]
    global_best: Optional[int]

    @property
    def critical(self) -> Tuple[float, ...]:
        return tuple(r.tf for r in self.positive if r.critical)

    @property
    def best(self) -> Root:
        if self.global_best is None:
            raise NoAdmissibleRoot("no admissible flight time")
        return self.admissible[self.global_best]


def _horner(c: Sequence[float], t: float) -> float:
    acc = 0.0
    for ci in c:
        acc = acc * t + ci
    return acc


def _deriv(c: Sequence[float]) -> Tuple[float, ...]:
    n = len(c) - 1
    return tuple(ci * (n - i) for i, ci in enumerate(c[:-1])) or (0.0,)


def _abs_scale(c: Sequence[float], t: float) -> float:
    return _horner([abs(x) for x in c], abs(t))


def _newton(c: Sequence[float], x: float, steps: int) -> float:
    dc = _deriv(c)
    fx = abs(_horner(c, x))
    for _ in range(steps):
        d = _horner(dc, x)
        if d == 0.0 or fx == 0.0:
            break
        cand = x - _horner(c, x) / d
        fc = abs(_horner(c, cand))
        if not fc < fx:
            break
        x, fx = cand, fc
    return x


def _pair_roots(c: Sequence[float], t0: float) -> List[Tuple[float, int]]:
    """Resolve two nearly coincident roots around ``t0``.

    Locate the nearby stationary point of ``P`` and decide from the value
    there whether the pair is a double root, two close real roots or a
    complex pair.
    """
    d1 = _deriv(c)
    d2 = _deriv(d1)
    t = t0
    for _ in range(60):
        curv = _horner(d2, t)
        if curv == 0.0:
            break
        step = _horner(d1, t) / curv
        t -= step
        if abs(step) <= 4 * _EPS * max(1.0, abs(t)):
            break
    value, curv = _horner(c, t), _horner(d2, t)
    if abs(value) <= _DOUBLE_RESIDUAL_REL * _abs_scale(c, t) or curv == 0.0:
        return [(t, 2)]
    if value * curv > 0.0:
        return []
    half = math.sqrt(-2.0 * value / curv)
    return [(_newton(c, t - half, 50), 1), (_newton(c, t + half, 50), 1)]


def _quadratic_roots(c: Sequence[float]) -> List[Tuple[float, int]]:
    a, b, c0 = c
    vertex = -b / (2.0 * a)
    if abs(_horner(c, vertex)) <= _DOUBLE_RESIDUAL_REL * _abs_scale(c, vertex):
        return [(vertex, 2)]
    disc = b * b - 4.0 * a * c0
    if disc < 0.0:
        return []
    q = -0.5 * (b + math.copysign(math.sqrt(disc), b))
    return [(q / a, 1), (c0 / q, 1)]


def _clusters(z: np.ndarray) -> List[List[complex]]:
    groups: List[List[complex]] = []
    for zi in sorted((complex(v) for v in z), key=lambda v: (v.real, v.imag)):
        if groups and any(abs(zi - zj) <= _CLUSTER_REL * max(1.0, abs(zj)) for zj in groups[-1]):
            groups[-1].append(zi)
        else:
            groups.append([zi])
    return groups


def _real_roots(c: Sequence[float]) -> List[Tuple[float, int]]:
    """Real roots with multiplicities of a polynomial with nonzero leading term."""
    c = [float(x) for x in c]
    out: List[Tuple[float, int]] = []
    zeros = 0
    while len(c) > 1 and c[-1] == 0.0:
        c.pop()
        zeros += 1
    if zeros:
        out.append((0.0, zeros))
    deg = len(c) - 1
    if deg == 1:
        out.append((-c[1] / c[0], 1))
    elif deg == 2:
        out.extend(_quadratic_roots(c))
    elif deg >= 3:
        companion = np.zeros((deg, deg))
        companion[0, :] = -np.array(c[1:]) / c[0]
        companion[1:, :-1] = np.eye(deg - 1)
        for group in _clusters(np.linalg.eigvals(companion)):
            centre = sum(g.real for g in group) / len(group)
            if len(group) == 1:
                if abs(group[0].imag) <= 1e-12 * max(1.0, abs(group[0])):
                    out.append((_newton(c, centre, NEWTON_POLISH_STEPS), 1))
            elif len(group) == 2:
                out.extend(_pair_roots(c, centre))
            elif abs(_horner(c, centre)) <= 1e-9 * _abs_scale(c, centre):
                out.append((centre, len(group)))
    return sorted(out)


def find_real_roots(poly: TimePolynomial) -> List[Tuple[float, int]]:
    """All real roots as ``(t, multiplicity)`` pairs in ascending order.

    Raises:
        AllCoefficientsZero: If every coefficient is zero.
    """
    raw = np.array(poly.coeffs)
    norm = np.max(np.abs(raw))
    if norm == 0.0:
        raise AllCoefficientsZero("all polynomial coefficients are zero")
    return [(float(t), m) for t, m in _real_roots(np.trim_zeros(raw / norm, "f"))]


def count_positive_roots(poly: TimePolynomial) -> int:
    """Number of real roots above the flight-time cutoff, with multiplicity."""
    return sum(m for t, m in find_real_roots(poly) if t > MIN_FLIGHT_TIME)


def solve_roots(
    poly: TimePolynomial,
    cost_eval: Optional[Callable[[float], float]] = None,
) -> RootReport:
    """Find all real roots and pick the admissible, lowest-cost flight time.

    Args:
        poly: Polynomial to solve.
        cost_eval: Maps a flight time to its cost ``J``. Without it all costs
            are ``nan`` and the smallest admissible root is preferred.

    Returns:
        RootReport with roots classified. A positive root whose slope is
        within ``CRITICAL_SLOPE_TOL`` of zero is marked critical and kept out
        of ``admissible``.

    Raises:
        AllCoefficientsZero: If every coefficient is zero.
        NoAdmissibleRoot: If no positive root has a non-negative slope.
    """
    roots = find_real_roots(poly)
    raw = np.array(poly.coeffs)
    dc = _deriv([float(x) for x in np.trim_zeros(raw / np.max(np.abs(raw)), "f")])

    all_real = tuple(float(t) for t, m in roots for _ in range(m))
    positive: List[Root] = []
    for t, mult in roots:
        if t <= MIN_FLIGHT_TIME:
            continue
        slope = _horner(dc, t)
        slope_scale = _abs_scale(dc, t)
        critical = mult > 1 or abs(slope) <= CRITICAL_SLOPE_TOL * slope_scale
        cost = float(cost_eval(t)) if cost_eval is not None else math.nan
        positive.append(Root(float(t), cost, is_local_min=bool(not critical and slope > 0.0), critical=bool(critical)))

    admissible = tuple(r for r in positive if r.is_local_min)
    if not admissible and not any(r.critical for r in positive):
        raise NoAdmissibleRoot(
            f"no positive flight time with increasing cost slope; real roots {list(all_real)}"
        )

    best: Optional[int] = None
    for i, r in enumerate(admissible):
        if best is None:
            best = i
            continue
        b = admissible[best].cost
        if r.cost < b - TIE_REL_TOL * max(abs(b), abs(r.cost)):
            best = i
    return RootReport(poly, all_real, tuple(positive), admissible, best)
