"""Shared value types, wind models and closed-form wind integrals.

Vectors are plain ``numpy`` arrays of shape ``(3,)``. Planar problems keep
``z = 0``. All records are frozen dataclasses whose array fields are marked
read-only on construction.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass, field
from typing import Mapping, Optional, Sequence, Tuple, Union

import numpy as np

Vec3 = np.ndarray


class GuidanceError(Exception):
    """Base class for all errors raised by this package."""


class UnsupportedWindModel(GuidanceError, TypeError):
    """The wind model cannot be used by the requested operation."""


class NotPlanar(GuidanceError, ValueError):
    """A planar-only operation received a nonzero out-of-plane component."""


class NoAdmissibleRoot(GuidanceError):
    """The flight-time polynomial has no positive root that is a cost minimum."""


class AllCoefficientsZero(GuidanceError, ValueError):
    """Every coefficient of the flight-time polynomial vanishes."""


class OutOfHorizon(GuidanceError, ValueError):
    """A time argument lies outside ``[0, tf]``."""


class NonPositiveTgo(GuidanceError, ValueError):
    """Time-to-go must be strictly positive."""


class InvalidReferenceTime(GuidanceError, ValueError):
    """The initial offset and closing velocity do not define a positive reference time."""


class ZeroInitialOffset(GuidanceError, ValueError):
    """The initial along-track offset is zero."""


class ZeroJerkCostate(GuidanceError, ValueError):
    """The position costate component is zero, so the velocity profile is not quadratic."""


class DivergedBeyondMaxTime(GuidanceError):
    """A simulation did not terminate before its time limit."""


def vec3(value, name: str = "vector") -> Vec3:
    """Return ``value`` as a read-only float64 array of shape ``(3,)``.

    Raises:
        ValueError: If the shape is wrong or any component is not finite.
    """
    arr = np.array(value, dtype=float).reshape(-1)
    if arr.shape != (3,):
        raise ValueError(f"{name} must have exactly 3 components, got {arr.shape[0]}")
    if not np.all(np.isfinite(arr)):
        raise ValueError(f"{name} must be finite, got {arr.tolist()}")
    arr.setflags(write=False)
    return arr


def check_trade_off(ci: float) -> float:
    """Validate a trade-off weight on elapsed time and return it as float."""
    ci = float(ci)
    if not np.isfinite(ci) or ci < 0.0:
        raise ValueError(f"trade-off weight must be finite and >= 0, got {ci}")
    return ci


class ProblemKind(enum.Enum):
    RENDEZVOUS = "rendezvous"
    INTERCEPT = "intercept"


@dataclass(frozen=True, eq=False)
class BoundaryConditions:
    """Initial and terminal constraints.

    Attributes:
        r0: Initial position (m).
        rf: Target position (m).
        vg0: Initial ground velocity (m/s).
        vgf: Terminal ground velocity (m/s); ``None`` for intercept.
        kind: Problem kind, derived from ``vgf`` when omitted.
    """

    r0: Vec3
    rf: Vec3
    vg0: Vec3
    vgf: Optional[Vec3] = None
    kind: Optional[ProblemKind] = None

    def __post_init__(self):
        object.__setattr__(self, "r0", vec3(self.r0, "r0"))
        object.__setattr__(self, "rf", vec3(self.rf, "rf"))
        object.__setattr__(self, "vg0", vec3(self.vg0, "vg0"))
        if self.vgf is not None:
            object.__setattr__(self, "vgf", vec3(self.vgf, "vgf"))
        inferred = ProblemKind.INTERCEPT if self.vgf is None else ProblemKind.RENDEZVOUS
        kind = inferred if self.kind is None else ProblemKind(self.kind)
        if kind is not inferred:
            raise ValueError("rendezvous requires vgf; intercept must leave vgf unset")
        object.__setattr__(self, "kind", kind)

    @classmethod
    def rendezvous(cls, r0, rf, vg0, vgf) -> "BoundaryConditions":
        return cls(r0, rf, vg0, vgf)

    @classmethod
    def intercept(cls, r0, rf, vg0) -> "BoundaryConditions":
        return cls(r0, rf, vg0, None)

    @property
    def delta_r(self) -> Vec3:
        """Initial offset from the target, ``r0 - rf``."""
        return self.r0 - self.rf

    @property
    def is_planar(self) -> bool:
        comps = [self.r0[2], self.rf[2], self.vg0[2]]
        if self.vgf is not None:
            comps.append(self.vgf[2])
        return all(c == 0.0 for c in comps)


# Wind models -----------------------------------------------------------------


@dataclass(frozen=True, eq=False)
class ConstantWind:
    """Uniform, steady wind ``w(t) = w0``."""

    w0: Vec3 = field(default_factory=lambda: np.zeros(3))

    def __post_init__(self):
        object.__setattr__(self, "w0", vec3(self.w0, "w0"))


@dataclass(frozen=True, eq=False)
class LinearWind:
    """Wind with constant acceleration, ``w(t) = w0 + k t``."""

    w0: Vec3
    k: Vec3

    def __post_init__(self):
        object.__setattr__(self, "w0", vec3(self.w0, "w0"))
        object.__setattr__(self, "k", vec3(self.k, "k"))


@dataclass(frozen=True)
class CrossTrackShear:
    """Planar shear ``w = (k_shear * y, 0, 0)``."""

    k_shear: float

    def __post_init__(self):
        if not np.isfinite(self.k_shear):
            raise ValueError("k_shear must be finite")
        object.__setattr__(self, "k_shear", float(self.k_shear))


@dataclass(frozen=True, eq=False)
class WindSegment:
    """One piece of a piecewise-linear profile, valid from ``t_start``.

    Inside the piece the wind is ``w0 + k (t - t_start)``.
    """

    t_start: float
    w0: Vec3
    k: Vec3

    def __post_init__(self):
        if not np.isfinite(self.t_start):
            raise ValueError("t_start must be finite")
        object.__setattr__(self, "t_start", float(self.t_start))
        object.__setattr__(self, "w0", vec3(self.w0, "w0"))
        object.__setattr__(self, "k", vec3(self.k, "k"))


@dataclass(frozen=True, eq=False)
class PiecewiseLinearWind:
    """Time-piecewise-linear wind; jumps between pieces are allowed."""

    segments: Tuple[WindSegment, ...]

    def __post_init__(self):
        segs = tuple(self.segments)
        if not segs:
            raise ValueError("at least one segment is required")
        if segs[0].t_start != 0.0:
            raise ValueError("the first segment must start at t = 0")
        starts = np.array([s.t_start for s in segs])
        if np.any(np.diff(starts) <= 0.0):
            raise ValueError("segment start times must be strictly increasing")
        object.__setattr__(self, "segments", segs)

    def segment_index(self, t: float) -> int:
        starts = [s.t_start for s in self.segments]
        return max(int(np.searchsorted(starts, t, side="right")) - 1, 0)


# Monomial order used for spatial polynomials: 1, x, y, x^2, xy, y^2.
MONOMIALS = ("1", "x", "y", "xx", "xy", "yy")


def _coeff_tuple(coeffs) -> Tuple[float, ...]:
    if isinstance(coeffs, Mapping):
        unknown = set(coeffs) - set(MONOMIALS)
        if unknown:
            raise ValueError(f"unknown monomials {sorted(unknown)}; expected {MONOMIALS}")
        coeffs = [coeffs.get(m, 0.0) for m in MONOMIALS]
    out = tuple(float(c) for c in coeffs)
    if len(out) != len(MONOMIALS) or not all(np.isfinite(out)):
        raise ValueError("spatial polynomial needs 6 finite coefficients")
    return out


@dataclass(frozen=True)
class SpatialField:
    """Steady planar field with quadratic bivariate components.

    Each component is ``c0 + c1 x + c2 y + c3 x^2 + c4 x y + c5 y^2``; the
    coefficients may also be given as a mapping keyed by ``MONOMIALS``.
    """

    wx: Tuple[float, ...]
    wy: Tuple[float, ...]

    def __post_init__(self):
        object.__setattr__(self, "wx", _coeff_tuple(self.wx))
        object.__setattr__(self, "wy", _coeff_tuple(self.wy))

    def __call__(self, r) -> Vec3:
        x, y = float(r[0]), float(r[1])
        basis = np.array([1.0, x, y, x * x, x * y, y * y])
        return np.array([basis @ self.wx, basis @ self.wy, 0.0])


WindModel = Union[ConstantWind, LinearWind, CrossTrackShear, PiecewiseLinearWind, SpatialField]


def wind_at(model: WindModel, t: float, r: Optional[Sequence[float]] = None) -> Vec3:
    """Wind velocity at time ``t`` and position ``r``.

    Time-varying models ignore ``r``; spatial models ignore ``t``. The shear
    model reads only ``r[1]``.
    """
    if isinstance(model, ConstantWind):
        return model.w0.copy()
    if isinstance(model, LinearWind):
        return model.w0 + model.k * t
    if isinstance(model, PiecewiseLinearWind):
        seg = model.segments[model.segment_index(t)]
        return seg.w0 + seg.k * (t - seg.t_start)
    if r is None:
        raise ValueError(f"{type(model).__name__} needs a position")
    if isinstance(model, CrossTrackShear):
        return np.array([model.k_shear * float(r[1]), 0.0, 0.0])
    if isinstance(model, SpatialField):
        return model(r)
    raise UnsupportedWindModel(f"unknown wind model {type(model).__name__}")


def wind_rate(model: WindModel) -> Vec3:
    """Constant wind acceleration ``k`` of a steady or linear-in-time model."""
    if isinstance(model, ConstantWind):
        return np.zeros(3)
    if isinstance(model, LinearWind):
        return model.k.copy()
    raise UnsupportedWindModel(f"{type(model).__name__} has no constant wind acceleration")


@dataclass(frozen=True, eq=False)
class WindIntegrals:
    """Time integrals of the wind over ``[0, tf]``.

    Attributes:
        I_wf: ``int_0^tf w dt`` (m).
        delta_wf: ``w(tf) - w(0)`` (m/s).
        varpi_f: ``I_wf - w(0) tf`` (m).
    """

    I_wf: Vec3
    delta_wf: Vec3
    varpi_f: Vec3


def _integrals(model: WindModel, tf: float) -> WindIntegrals:
    if isinstance(model, ConstantWind):
        w0 = model.w0
        return WindIntegrals(w0 * tf, np.zeros(3), np.zeros(3))
    if isinstance(model, LinearWind):
        return WindIntegrals(model.w0 * tf + 0.5 * model.k * tf**2, model.k * tf, 0.5 * model.k * tf**2)
    if isinstance(model, PiecewiseLinearWind):
        total = np.zeros(3)
        segs = model.segments
        for i, seg in enumerate(segs):
            if seg.t_start >= tf:
                break
            end = segs[i + 1].t_start if i + 1 < len(segs) else np.inf
            dt = min(end, tf) - seg.t_start
            total = total + seg.w0 * dt + 0.5 * seg.k * dt**2
        w_start = segs[0].w0
        w_end = wind_at(model, tf)
        return WindIntegrals(total, w_end - w_start, total - w_start * tf)
    raise UnsupportedWindModel(
        f"{type(model).__name__} has no closed-form time integral; use the replanning simulator"
    )


def wind_integrals(model: WindModel, tf: float) -> WindIntegrals:
    """Closed-form wind integrals for time-only wind models.

    Args:
        model: Constant, linear-in-time or piecewise-linear wind.
        tf: Horizon in seconds, strictly positive.

    Raises:
        UnsupportedWindModel: For position-dependent models.
    """
    if not tf > 0.0:
        raise ValueError(f"tf must be positive, got {tf}")
    return _integrals(model, float(tf))


def wind_integrals_at(model: WindModel, t: float) -> WindIntegrals:
    """Like :func:`wind_integrals` but also accepts ``t = 0``."""
    if t < 0.0:
        raise ValueError(f"t must be non-negative, got {t}")
    return _integrals(model, float(t))


@dataclass(frozen=True, eq=False)
class Costates:
    """Position costate ``p_r`` (constant) and initial velocity costate ``p_v0``.

    The velocity costate is ``p_v(t) = p_v0 - t p_r`` and the optimal control
    is ``u(t) = -p_v(t)``.
    """

    p_r: Vec3
    p_v0: Vec3

    def __post_init__(self):
        object.__setattr__(self, "p_r", vec3(self.p_r, "p_r"))
        object.__setattr__(self, "p_v0", vec3(self.p_v0, "p_v0"))

    def p_v(self, t: float) -> Vec3:
        return self.p_v0 - t * self.p_r
