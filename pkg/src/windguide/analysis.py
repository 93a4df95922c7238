"""Existence, bifurcation and trade-off studies built on the flight-time polynomials.

Flight times are often expressed as multiples ``K`` of the reference time
``t_r = -x0 / vgx0``, the time needed to close the initial offset at the
initial closing speed.
"""

from __future__ import annotations

import enum
import itertools
import math
from dataclasses import dataclass, replace
from typing import Callable, List, Optional, Sequence, Tuple

import numpy as np

from .core import (
    BoundaryConditions,
    ConstantWind,
    Costates,
    InvalidReferenceTime,
    LinearWind,
    NoAdmissibleRoot,
    ProblemKind,
    WindModel,
    ZeroInitialOffset,
    ZeroJerkCostate,
    check_trade_off,
)
from .guidance import energy, intercept_solution, rendezvous_solution
from .polynomial import (
    MIN_FLIGHT_TIME,
    TimePolynomial,
    build_intercept_poly,
    build_rendezvous_poly,
    build_shear_poly,
    count_positive_roots,
    find_real_roots,
    solve_roots,
)

K_TOL = 1e-9
CRITICAL_K = 1.5
CRITICAL_ALPHA0 = -4.0


# Reference time and K classes --------------------------------------------------


@dataclass(frozen=True)
class ReferenceTime:
    t_r: float
    valid: bool


def reference_time(x0: float, vgx0: float) -> ReferenceTime:
    """``t_r = -x0 / vgx0``, valid only when the vehicle is closing on the target."""
    valid = x0 * vgx0 < 0.0
    t_r = -x0 / vgx0 if vgx0 != 0.0 else math.inf
    return ReferenceTime(t_r, valid)


class KCategory(enum.Enum):
    K1_CONSTANT_VELOCITY = "K1_constant_velocity"
    K2_CONSTANT_ACCEL = "K2_constant_accel"
    K3_ZERO_TERMINAL_ACCEL = "K3_zero_terminal_accel"
    REVERSAL_K_GT_3 = "reversal_K_gt_3"
    INTERMEDIATE = "intermediate"


@dataclass(frozen=True)
class KClass:
    category: KCategory
    K: float


_NAMED_K = {
    1: KCategory.K1_CONSTANT_VELOCITY,
    2: KCategory.K2_CONSTANT_ACCEL,
    3: KCategory.K3_ZERO_TERMINAL_ACCEL,
}


def classify_k(tf: float, t_r: ReferenceTime) -> KClass:
    """Classify a 1D zero-wind rendezvous response by ``K = tf / t_r``.

    ``K = 1`` coasts at constant velocity (possible when ``vgf = vg0``). For
    a rendezvous that ends at rest, ``K = 2`` uses constant acceleration,
    ``K = 3`` ends with zero acceleration, and ``K > 3`` makes the vehicle
    overshoot and come back along the x axis.
    """
    if not t_r.valid:
        raise InvalidReferenceTime("x0 * vgx0 must be negative for a reference time")
    K = tf / t_r.t_r
    for n, cat in _NAMED_K.items():
        if abs(K - n) < K_TOL:
            return KClass(cat, K)
    if K > 3.0:
        return KClass(KCategory.REVERSAL_K_GT_3, K)
    return KClass(KCategory.INTERMEDIATE, K)


# One-dimensional trade-off relations -------------------------------------------


def critical_ci_1d(x0: float, v0: float) -> float:
    """Weight at which the 1D zero-wind rendezvous quartic has a double root at ``6 t_r``."""
    if x0 == 0.0:
        raise ZeroInitialOffset("critical weight is undefined for a zero initial offset")
    return v0**4 / (72.0 * x0**2)


def velocity_quadratic_roots(costates: Costates, ci: float) -> Tuple[float, float]:
    """Instants where the along-track ground velocity vanishes (1D, zero wind).

    Their midpoint ``p_vx0 / p_rx`` is where the acceleration crosses zero.
    """
    ci = check_trade_off(ci)
    p_rx, p_vx0 = float(costates.p_r[0]), float(costates.p_v0[0])
    if p_rx == 0.0:
        raise ZeroJerkCostate("p_rx is zero; the velocity profile is not quadratic")
    half = math.sqrt(2.0 * ci)
    a, b = (p_vx0 - half) / p_rx, (p_vx0 + half) / p_rx
    return (a, b) if a <= b else (b, a)


# Critical headings at zero time weight ---------------------------------------


@dataclass(frozen=True)
class HeadingAnalysis:
    """Largest initial cross-track velocity with a finite minimum-energy solution.

    Attributes:
        alpha0: Leading coefficient of ``P(K) = alpha0 K^2 + 12 K - 9`` at the limit.
        theta_max: Limiting heading of the initial ground velocity (rad).
        theta_max_deg: The same limit in degrees, exact.
        v_gy0_max: Limiting ``|vgy0|`` (m/s) for the given ``|vgx0|``.
        k_critical: Double root of ``P(K)`` at the limit.
    """

    alpha0: float
    theta_max: float
    theta_max_deg: float
    v_gy0_max: float
    k_critical: float

    @property
    def discriminant(self) -> float:
        return 144.0 + 36.0 * self.alpha0


def k_polynomial_alpha0(kind: ProblemKind, vgx0: float, vgy0: float) -> float:
    """Leading coefficient of the zero-weight polynomial written in ``K``."""
    if kind is ProblemKind.RENDEZVOUS:
        return -3.0 * (vgx0**2 + vgy0**2 / 3.0) / vgx0**2
    return -3.0 * (vgx0**2 + vgy0**2) / vgx0**2


def max_heading(kind: ProblemKind, vgx0: float = 1.0) -> HeadingAnalysis:
    """Closed-form critical heading for zero time weight and steady wind.

    The rendezvous uses the mirrored terminal velocity ``(vgx0, -vgy0)``;
    the intercept leaves it free. Solving ``alpha0 = -4`` gives
    ``|vgy0| = |vgx0|`` (45 deg) and ``|vgy0| = |vgx0|/sqrt(3)`` (30 deg).
    """
    kind = ProblemKind(kind)
    # atan(1) = 45 deg and atan(1/sqrt(3)) = 30 deg.
    if kind is ProblemKind.RENDEZVOUS:
        ratio, degrees = 1.0, 45.0
    else:
        ratio, degrees = 1.0 / math.sqrt(3.0), 30.0
    return HeadingAnalysis(
        alpha0=CRITICAL_ALPHA0,
        theta_max=math.atan(ratio),
        theta_max_deg=degrees,
        v_gy0_max=ratio * abs(vgx0),
        k_critical=-12.0 / (2.0 * CRITICAL_ALPHA0),
    )


def _zero_weight_poly(kind: ProblemKind, x0: float, vgx0: float, vgy0: float) -> TimePolynomial:
    vg0 = (vgx0, vgy0, 0.0)
    if kind is ProblemKind.RENDEZVOUS:
        bc = BoundaryConditions((x0, 0.0, 0.0), (0.0, 0.0, 0.0), vg0, (vgx0, -vgy0, 0.0))
        return build_rendezvous_poly(bc, ConstantWind(), 0.0)
    bc = BoundaryConditions((x0, 0.0, 0.0), (0.0, 0.0, 0.0), vg0)
    return build_intercept_poly(bc, ConstantWind(), 0.0)


def critical_vgy0_by_bisection(
    kind: ProblemKind, vgx0: float = -1.0, x0: float = 3.0, tol: float = 1e-13
) -> float:
    """Locate the critical ``|vgy0|`` numerically.

    Bisects on the sign of the discriminant of the zero-weight flight-time
    quadratic built directly from the boundary conditions.
    """
    kind = ProblemKind(kind)

    def disc(vy: float) -> float:
        _, _, c2, c1, c0 = _zero_weight_poly(kind, x0, vgx0, vy).coeffs
        return (c1 * c1 - 4.0 * c2 * c0) / (c1 * c1)

    lo, hi = 0.0, 10.0 * abs(vgx0)
    if not (disc(lo) > 0.0 > disc(hi)):
        raise ValueError("discriminant does not change sign on the search interval")
    while hi - lo > tol * max(1.0, hi):
        mid = 0.5 * (lo + hi)
        if disc(mid) > 0.0:
            lo = mid
        else:
            hi = mid
    return 0.5 * (lo + hi)


# Pareto sweeps -----------------------------------------------------------------


@dataclass(frozen=True)
class ParetoPoint:
    """One stationary flight time at one weight.

    Attributes:
        c_i: Weight on elapsed time.
        t_f: Flight time (s).
        energy: Control energy of the corresponding trajectory.
        branch: Branch label, stable across the sweep.
        admissible: Whether this root is a strict cost minimum.
        critical: Whether this root is a double root.
    """

    c_i: float
    t_f: float
    energy: float
    branch: int
    admissible: bool
    critical: bool


class _BranchTracker:
    """Continue root branches across sweep steps.

    Real roots of a continuous polynomial family keep their order until two
    of them merge, so survivors are matched to new roots order-preservingly.
    When the count changes, the matching chosen is the one whose new roots
    lie closest, in log scale, to first-order predictions of the old ones.
    """

    def __init__(self):
        self._prev: List[Tuple[int, float]] = []
        self._prev_coeffs: Optional[np.ndarray] = None
        self._next_id = 0

    def _predict(self, coeffs: np.ndarray) -> List[float]:
        out = []
        for _, t_old in self._prev:
            slope = np.polyval(np.polyder(self._prev_coeffs), t_old)
            shift = np.polyval(coeffs, t_old) - np.polyval(self._prev_coeffs, t_old)
            guess = t_old - shift / slope if slope != 0.0 else t_old
            out.append(guess if guess > 0.0 else t_old)
        return out

    def assign(self, roots: Sequence[float], coeffs: Sequence[float]) -> List[int]:
        coeffs = np.asarray(coeffs, float)
        labels: List[Optional[int]] = [None] * len(roots)
        if self._prev and roots:
            predicted = self._predict(coeffs)
            n = min(len(predicted), len(roots))
            best, best_cost = None, math.inf
            for old in itertools.combinations(range(len(predicted)), n):
                for new in itertools.combinations(range(len(roots)), n):
                    cost = sum(abs(math.log(roots[j] / predicted[i])) for i, j in zip(old, new))
                    if cost < best_cost:
                        best, best_cost = (old, new), cost
            for i, j in zip(*best):
                labels[j] = self._prev[i][0]
        for j in range(len(roots)):
            if labels[j] is None:
                labels[j] = self._next_id
                self._next_id += 1
        self._prev = [(labels[j], float(t)) for j, t in enumerate(roots)]
        self._prev_coeffs = coeffs
        return [int(x) for x in labels]


def _problem_poly(bc: BoundaryConditions, wind: WindModel, ci: float) -> TimePolynomial:
    if bc.kind is ProblemKind.RENDEZVOUS:
        return build_rendezvous_poly(bc, wind, ci)
    return build_intercept_poly(bc, wind, ci)


def pareto_sweep(bc: BoundaryConditions, wind: WindModel, ci_grid: Sequence[float]) -> List[ParetoPoint]:
    """Flight time versus control energy for every stationary root over a weight grid.

    Non-admissible stationary points (cost maxima and double roots) are
    included and flagged so the full branch structure is visible; filter on
    ``admissible`` for the trade-off front itself.
    """
    grid = [check_trade_off(c) for c in ci_grid]
    if any(b < a for a, b in zip(grid, grid[1:])):
        raise ValueError("ci_grid must be sorted ascending")
    make = rendezvous_solution if bc.kind is ProblemKind.RENDEZVOUS else intercept_solution
    tracker = _BranchTracker()
    points: List[ParetoPoint] = []
    for ci in grid:
        poly = _problem_poly(bc, wind, ci)
        try:
            report = solve_roots(poly)
            roots = report.positive
        except NoAdmissibleRoot:
            roots = ()
        labels = tracker.assign([r.tf for r in roots], poly.coeffs)
        for root, label in zip(roots, labels):
            e = energy(make(bc, wind, ci, root.tf))
            points.append(ParetoPoint(ci, root.tf, e, label, root.is_local_min, root.critical))
    return points


# Root sweeps -------------------------------------------------------------------


class SweepParam(enum.Enum):
    VGY0 = "vgy0"
    INV_CI = "inv_ci"
    WIND_K = "wind_k"


class SweepCase(enum.Enum):
    RENDEZVOUS = "rendezvous"
    INTERCEPT = "intercept"
    SHEAR = "shear"


@dataclass(frozen=True)
class SweepScenario:
    """Planar scenario for root sweeps; the target is at the origin.

    Attributes:
        case: Which polynomial to build.
        x0: Initial along-track offset (m).
        vgx0: Initial along-track ground velocity (m/s).
        vgy0: Initial cross-track ground velocity (m/s).
        ci: Weight on elapsed time.
        wind_k: Along-track wind acceleration, or the shear gradient for ``SHEAR``.
        vgf: Rendezvous terminal velocity; ``None`` mirrors ``(vgx0, -vgy0)``.
    """

    case: SweepCase
    x0: float
    vgx0: float
    vgy0: float = 0.0
    ci: float = 0.0
    wind_k: float = 0.0
    vgf: Optional[Tuple[float, float, float]] = None

    def with_param(self, param: SweepParam, value: float) -> "SweepScenario":
        if param is SweepParam.VGY0:
            return replace(self, vgy0=value)
        if param is SweepParam.INV_CI:
            if not value > 0.0:
                raise ValueError("1/C sweep values must be positive")
            return replace(self, ci=1.0 / value)
        return replace(self, wind_k=value)

    def polynomial(self) -> TimePolynomial:
        r0, rf = (self.x0, 0.0, 0.0), (0.0, 0.0, 0.0)
        vg0 = (self.vgx0, self.vgy0, 0.0)
        if self.case is SweepCase.SHEAR:
            return build_shear_poly(BoundaryConditions(r0, rf, vg0), self.wind_k, self.ci)
        wind = LinearWind((0, 0, 0), (self.wind_k, 0, 0)) if self.wind_k else ConstantWind()
        if self.case is SweepCase.RENDEZVOUS:
            vgf = self.vgf if self.vgf is not None else (self.vgx0, -self.vgy0, 0.0)
            return build_rendezvous_poly(BoundaryConditions(r0, rf, vg0, vgf), wind, self.ci)
        return build_intercept_poly(BoundaryConditions(r0, rf, vg0), wind, self.ci)

    @property
    def reference(self) -> ReferenceTime:
        return reference_time(self.x0, self.vgx0)


@dataclass(frozen=True)
class SweepRow:
    param: float
    roots: Tuple[float, ...]
    K: Optional[Tuple[float, ...]]
    branches: Tuple[int, ...]


@dataclass(frozen=True)
class Bifurcation:
    """Parameter value where the number of positive roots changes.

    Attributes:
        param: Refined parameter value.
        count_before: Positive roots (with multiplicity) just below ``param``.
        count_after: Positive roots just above ``param``.
        t_f: Location of the merging root pair (s).
        K: ``t_f`` in reference times, when defined.
    """

    param: float
    count_before: int
    count_after: int
    t_f: float
    K: Optional[float]


@dataclass(frozen=True)
class RootSweep:
    rows: Tuple[SweepRow, ...]
    bifurcations: Tuple[Bifurcation, ...]


def _positive(poly: TimePolynomial) -> List[float]:
    return [t for t, m in find_real_roots(poly) if t > MIN_FLIGHT_TIME for _ in range(m)]


def _merge_point(poly: TimePolynomial) -> float:
    roots = sorted(set(_positive(poly)))
    if len(roots) < 2:
        return roots[0] if roots else math.nan
    gaps = np.diff(roots)
    i = int(np.argmin(gaps))
    return 0.5 * (roots[i] + roots[i + 1])


def _refine(count: Callable[[float], int], a: float, b: float, n_a: int, iters: int = 60) -> float:
    for _ in range(iters):
        mid = 0.5 * (a + b)
        if mid in (a, b):
            break
        if count(mid) == n_a:
            a = mid
        else:
            b = mid
    return 0.5 * (a + b)


def root_sweep(
    fixed: SweepScenario,
    sweep_param: SweepParam,
    grid: Sequence[float],
) -> RootSweep:
    """Positive flight-time roots along a one-parameter family.

    Args:
        fixed: Base scenario; the swept field is overwritten at each grid value.
        sweep_param: Which field to vary.
        grid: Parameter values, in the order they should appear.

    Returns:
        Rows of roots (seconds and, when ``t_r`` is valid, multiples of it)
        and the bifurcations found between consecutive grid values, each
        refined by bisection on the root count.
    """
    grid = [float(g) for g in grid]
    if not grid:
        raise ValueError("grid must not be empty")
    sweep_param = SweepParam(sweep_param)
    t_r = fixed.reference

    def poly_at(p: float) -> TimePolynomial:
        return fixed.with_param(sweep_param, p).polynomial()

    def count(p: float) -> int:
        return count_positive_roots(poly_at(p))

    tracker = _BranchTracker()
    rows: List[SweepRow] = []
    counts: List[int] = []
    for p in grid:
        poly = poly_at(p)
        positive = _positive(poly)
        roots = sorted(set(positive))
        counts.append(len(positive))
        labels = tracker.assign(roots, poly.coeffs)
        K = tuple(t / t_r.t_r for t in roots) if t_r.valid else None
        rows.append(SweepRow(p, tuple(roots), K, tuple(labels)))

    bifurcations: List[Bifurcation] = []
    for i in range(1, len(grid)):
        if counts[i] == counts[i - 1]:
            continue
        at = _refine(count, grid[i - 1], grid[i], counts[i - 1])
        side = grid[i - 1] if counts[i - 1] > counts[i] else grid[i]
        near = at + math.copysign(1e-6 * max(1.0, abs(at)), side - at)
        tf = _merge_point(poly_at(near))
        bifurcations.append(
            Bifurcation(at, counts[i - 1], counts[i], tf, tf / t_r.t_r if t_r.valid else None)
        )
    return RootSweep(tuple(rows), tuple(bifurcations))
