"""Geodesics of the Clifton-Pohl metric du*dv/(u**2 + v**2) on R^2 minus the origin,
its complexification, and the torus obtained by dividing out multiplication by 2."""
from dataclasses import dataclass
import logging
import math
from typing import List, Optional, Sequence, Tuple

import numpy as np
from pydantic import BaseModel, ConfigDict, model_validator

from cp_geodesics.series import constant_term, cosh, sqrt
from cp_geodesics.utils import (
    BranchDegeneracyError,
    DegenerateCrossingError,
    NotNullError,
    NullGeodesicError,
    OnAxisError,
    SingularLocusError,
    StationaryCurveError,
)

logger = logging.getLogger("cp_geodesics.cp_model")


class RealIC(BaseModel):
    """Real initial condition: position (alpha, beta), velocity (x, y)"""
    model_config = ConfigDict(frozen=True)

    alpha: float
    beta: float
    x: float
    y: float

    @model_validator(mode="after")
    def _off_origin(self):
        if self.alpha == 0 and self.beta == 0:
            raise ValueError("the origin is not a point of the manifold")
        return self

    @property
    def is_null(self) -> bool:
        return self.x * self.y == 0

    def as_state(self) -> np.ndarray:
        return np.array([self.alpha, self.beta, self.x, self.y], dtype=complex)


class FirstIntegrals(BaseModel):
    model_config = ConfigDict(frozen=True)

    A: float
    B: float
    P: float


@dataclass(frozen=True)
class GeodesicState:
    u: complex
    v: complex
    du: complex
    dv: complex

    def __post_init__(self):
        if self.u * self.u + self.v * self.v == 0:
            raise SingularLocusError(f"({self.u}, {self.v}) lies on u^2 + v^2 = 0")

    @classmethod
    def from_array(cls, w: Sequence[complex]) -> "GeodesicState":
        return cls(*(complex(c) for c in w))

    @classmethod
    def from_ic(cls, ic: RealIC) -> "GeodesicState":
        return cls.from_array(ic.as_state())

    def as_array(self) -> np.ndarray:
        return np.array([self.u, self.v, self.du, self.dv], dtype=complex)


@dataclass(frozen=True)
class LogState:
    omega: complex
    eta: complex
    s_u: int
    s_v: int


@dataclass(frozen=True)
class AxisCrossing:
    axis: str
    sign_before: int
    sign_after: int
    state: GeodesicState


def metric_eval(u: complex, v: complex, V: Tuple[complex, complex], W: Tuple[complex, complex]) -> complex:
    d = u * u + v * v
    if d == 0:
        raise SingularLocusError(f"({u}, {v}) lies on u^2 + v^2 = 0")
    return (V[0] * W[1] + W[0] * V[1]) / (2 * d)


def geodesic_field(t, w):
    """Geodesic equations as a first order field on (u, v, du, dv); accepts series"""
    u, v, du, dv = w
    d = u * u + v * v
    if constant_term(d) == 0:
        raise SingularLocusError("state on the excluded lines u = +-i v")
    return [du, dv, 2 * u * du * du / d, 2 * v * dv * dv / d]


def geodesic_rhs(state: GeodesicState) -> GeodesicState:
    """Derivative of the state; the returned object packs (du, dv, ddu, ddv)"""
    return _derivative(geodesic_field(0.0, state.as_array()))


def _derivative(values) -> GeodesicState:
    # a derivative is not a point of M, so it skips the locus check
    derivative = object.__new__(GeodesicState)
    for name, value in zip(("u", "v", "du", "dv"), values):
        object.__setattr__(derivative, name, complex(value))
    return derivative


def first_integrals(ic: RealIC) -> FirstIntegrals:
    if ic.x * ic.y == 0:
        raise NullGeodesicError(
            f"velocity ({ic.x}, {ic.y}) is null; use null_closed_form for this geodesic"
        )
    A = ic.x * ic.y / (ic.alpha ** 2 + ic.beta ** 2)
    B = ic.alpha / ic.x + ic.beta / ic.y
    return FirstIntegrals(A=A, B=B, P=A * B ** 2)


def impulse(ic: RealIC) -> float:
    return first_integrals(ic).P


def first_integrals_along(states: np.ndarray) -> Tuple[np.ndarray, np.ndarray]:
    """A = du*dv/(u^2+v^2) and B = u/du + v/dv at every row of ``states``"""
    states = np.asarray(states, dtype=complex)
    u, v, du, dv = states.T
    return du * dv / (u * u + v * v), u / du + v / dv


@dataclass(frozen=True)
class NullGeodesic:
    """Closed-form null geodesic, evaluable at complex times.

    ``moving`` names the nonconstant coordinate. For a constant coordinate
    equal to zero the moving one is alpha**2/(alpha - x t); otherwise it is
    level*tan(rate*t + phase).
    """
    moving: str
    level: float
    start: float
    speed: float
    rate: Optional[float] = None
    phase: Optional[float] = None

    @property
    def kind(self) -> str:
        return "rational" if self.level == 0 else "tangent"

    def _moving(self, t) -> Tuple[complex, complex]:
        t = np.asarray(t, dtype=complex)
        if self.kind == "rational":
            denominator = self.start - self.speed * t
            return self.start ** 2 / denominator, self.start ** 2 * self.speed / denominator ** 2
        theta = self.rate * t + self.phase
        tangent = np.tan(theta)
        return self.level * tangent, self.level * self.rate * (1 + tangent * tangent)

    def evaluate(self, t) -> np.ndarray:
        """States (u, v, du, dv) at the given times, shape (..., 4)"""
        position, velocity = self._moving(t)
        level = np.full_like(position, self.level)
        zero = np.zeros_like(position)
        if self.moving == "u":
            return np.stack([position, level, velocity, zero], axis=-1)
        return np.stack([level, position, zero, velocity], axis=-1)

    def poles(self, t_min: float, t_max: float) -> List[float]:
        if self.kind == "rational":
            pole = self.start / self.speed
            return [pole] if t_min <= pole <= t_max else []
        period = math.pi / abs(self.rate)
        first = (math.pi / 2 - self.phase) / self.rate
        k_min = math.ceil((t_min - first) / period)
        k_max = math.floor((t_max - first) / period)
        return [first + k * period for k in range(k_min, k_max + 1)]

    def describe(self) -> str:
        fixed = "v" if self.moving == "u" else "u"
        if self.kind == "rational":
            return f"{self.moving}(t) = {self.start!r}**2/({self.start!r} - {self.speed!r}*t), {fixed} = 0"
        return (f"{self.moving}(t) = {self.level!r}*tan({self.rate!r}*t + {self.phase!r}), "
                f"{fixed} = {self.level!r}")


def null_closed_form(ic: RealIC) -> NullGeodesic:
    if ic.x == 0 and ic.y == 0:
        raise StationaryCurveError("zero velocity gives a constant curve")
    if ic.x != 0 and ic.y != 0:
        raise NotNullError(f"velocity ({ic.x}, {ic.y}) is not null")
    if ic.y == 0:
        moving, start, level, speed = "u", ic.alpha, ic.beta, ic.x
    else:
        moving, start, level, speed = "v", ic.beta, ic.alpha, ic.y
    if level == 0:
        return NullGeodesic(moving=moving, level=0.0, start=start, speed=speed)
    phase = math.atan(start / level)
    rate = speed * math.cos(phase) ** 2 / level
    return NullGeodesic(moving=moving, level=level, start=start, speed=speed, rate=rate, phase=phase)


def to_log(u: complex, v: complex) -> LogState:
    if u == 0 or v == 0:
        raise OnAxisError(f"({u}, {v}) lies on a coordinate axis; see axis_crossing")
    s_u = 1 if complex(u).real > 0 else -1
    s_v = 1 if complex(v).real > 0 else -1
    return LogState(omega=np.log(complex(s_u * u)), eta=np.log(complex(s_v * v)), s_u=s_u, s_v=s_v)


def from_log(state: LogState) -> Tuple[complex, complex]:
    return state.s_u * np.exp(state.omega), state.s_v * np.exp(state.eta)


def _reduced_root(phi, A: float, B: float, branch: int):
    chp = cosh(phi)
    if constant_term(A * chp) == 0:
        raise SingularLocusError("A*Ch(phi) vanishes")
    return branch * sqrt(B * B - 2 / (A * chp)), chp


def omega_eta_rhs(omega, eta, A: float, B: float, branch: int) -> Tuple[complex, complex]:
    s, _ = _reduced_root(omega - eta, A, B, branch)
    if constant_term(B - s) == 0 or constant_term(B + s) == 0:
        raise BranchDegeneracyError(f"B -+ s vanishes for B={B}")
    return 2 / (B - s), 2 / (B + s)


def phi_rhs(phi, A: float, B: float, branch: int):
    s, chp = _reduced_root(phi, A, B, branch)
    if constant_term(B - s) == 0 or constant_term(B + s) == 0:
        raise BranchDegeneracyError(f"B -+ s vanishes for B={B}")
    return 2 * A * chp * s


def phi_field(A: float, B: float, branch: int):
    def field(t, w):
        return [phi_rhs(w[0], A, B, branch)]
    return field


class ReducedProblem(BaseModel):
    """Constants of the log-coordinate reduction in the starting octant"""
    model_config = ConfigDict(frozen=True)

    A: float
    B: float
    branch: int
    omega0: float
    eta0: float
    s_u: int
    s_v: int

    @property
    def phi0(self) -> float:
        return self.omega0 - self.eta0


def reduced_problem(ic: RealIC) -> ReducedProblem:
    """In the chart u = s_u e^omega, v = s_v e^eta the energy constant enters
    as s_u*s_v*A; the branch reproduces omega'(0) = x/alpha, eta'(0) = y/beta."""
    integrals = first_integrals(ic)
    chart = to_log(ic.alpha, ic.beta)
    A = chart.s_u * chart.s_v * integrals.A
    B = integrals.B
    root = np.sqrt(complex(B * B - 2 / (A * math.cosh(chart.omega.real - chart.eta.real))))
    target = ic.beta / ic.y - ic.alpha / ic.x
    branch = 1 if abs(root - target) <= abs(-root - target) else -1
    return ReducedProblem(A=A, B=B, branch=branch, omega0=chart.omega.real, eta0=chart.eta.real,
                          s_u=chart.s_u, s_v=chart.s_v)


def axis_crossing(state: GeodesicState) -> AxisCrossing:
    """Chart change of a real trajectory passing through a coordinate axis"""
    u, v, du, dv = (complex(c).real for c in (state.u, state.v, state.du, state.dv))
    if (u == 0) == (v == 0):
        raise OnAxisError(f"({u}, {v}) is not on exactly one coordinate axis")
    axis, transversal = ("u", du) if u == 0 else ("v", dv)
    if transversal == 0:
        raise DegenerateCrossingError(f"zero transversal velocity crossing {axis} = 0")
    after = 1 if transversal > 0 else -1
    return AxisCrossing(axis=axis, sign_before=-after, sign_after=after, state=state)


def log_chart_path(states: np.ndarray) -> List[LogState]:
    """Log coordinates along a real trajectory, continuous in their imaginary
    parts, with the sign chart flipped wherever u or v changes sign between
    consecutive samples."""
    states = np.asarray(states, dtype=complex)
    charts: List[LogState] = []
    previous = None
    for u, v, du, dv in states:
        if u == 0 or v == 0:
            crossing = axis_crossing(GeodesicState(u, v, du, dv))
            logger.debug(f"sample on {crossing.axis} = 0, skipped")
            continue
        chart = to_log(u, v)
        if previous is not None:
            chart = LogState(
                omega=_unwrap(chart.omega, previous.omega),
                eta=_unwrap(chart.eta, previous.eta),
                s_u=chart.s_u,
                s_v=chart.s_v,
            )
        charts.append(chart)
        previous = chart
    return charts


def _unwrap(value: complex, reference: complex) -> complex:
    turns = round((reference.imag - value.imag) / (2 * math.pi))
    return complex(value.real, value.imag + 2 * math.pi * turns)


def chart_winding(states: np.ndarray) -> float:
    """Change of Im log(u/v) along sampled states.

    Consecutive samples must be close enough for log(u/v) to move by less than
    pi between them. Half a turn around a pole or zero of u/v adds pi times
    its order.
    """
    states = np.asarray(states, dtype=complex)
    phi = complex(np.log(states[0, 0] / states[0, 1]))
    start = phi
    for u, v in states[1:, :2]:
        phi = _unwrap(complex(np.log(u / v)), phi)
    return phi.imag - start.imag


def stays_in_chart(states: np.ndarray, tolerance: float) -> bool:
    return abs(chart_winding(states)) <= tolerance


def quotient_project(u: float, v: float) -> Tuple[float, float, int]:
    norm = math.hypot(u, v)
    if norm == 0:
        raise ValueError("the origin has no image on the torus")
    k = math.floor(math.log2(norm))
    while math.ldexp(norm, -k) >= 2:
        k += 1
    while math.ldexp(norm, -k) < 1:
        k -= 1
    return math.ldexp(u, -k), math.ldexp(v, -k), k
