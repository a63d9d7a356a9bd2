"""Complex-time continuation of analytic ODE solutions by Taylor elements.

A right-hand side is any callable ``rhs(t, w)`` taking a time and a sequence of
state components and returning the sequence of their derivatives. It is called
with plain complex numbers and with ``series.Series`` objects, so it must only
use arithmetic operators and the functions exported by ``series``.
"""
from dataclasses import dataclass, field
from enum import Enum
import logging
import math
from typing import Callable, List, Optional, Sequence, Tuple

import numpy as np

from cp_geodesics.config import EngineOptions, Orientation
from cp_geodesics.series import Series
from cp_geodesics.utils import (
    GeodesicError,
    InvalidBoundsError,
    InvalidRadiusError,
    Issue,
    Severity,
    SingularExpansionError,
    SingularLocusError,
    StepTooLargeError,
)

logger = logging.getLogger("cp_geodesics.cont_engine")

Rhs = Callable[[complex, Sequence], Sequence]
# Receives the states of a detour from its last real sample to its exit
ChartCheck = Callable[[np.ndarray], bool]

_TINY = 1e-280


class TraceStatus(str, Enum):
    reached_end = "reached_end"
    escaped = "escaped"
    stalled = "stalled"
    error = "error"


class StopReason(str, Enum):
    end = "end"
    collapse = "collapse"
    threshold = "threshold"
    max_steps = "max_steps"
    error = "error"
    detours_exhausted = "detours_exhausted"


@dataclass(frozen=True)
class PolydiscBounds:
    """Bounds of a holomorphic field on a time disc of radius ``a`` times a
    state polydisc of radius ``b``: ``M`` bounds the field, ``K`` each of its
    state partials."""
    a: float
    b: float
    M: float
    K: float

    def __post_init__(self):
        for name in ("a", "b", "M", "K"):
            value = getattr(self, name)
            if not (math.isfinite(value) and value > 0):
                raise InvalidBoundsError(f"{name} must be positive and finite, got {value}")


@dataclass(frozen=True)
class TaylorElement:
    center: complex
    coefficients: np.ndarray
    # None stands for an unknown radius
    estimated_radius: Optional[float] = None

    @property
    def order(self) -> int:
        return self.coefficients.shape[1] - 1

    @property
    def state(self) -> np.ndarray:
        return self.coefficients[:, 0]


@dataclass(frozen=True)
class ContinuationPath:
    waypoints: Tuple[complex, ...]

    def __post_init__(self):
        waypoints = tuple(complex(w) for w in self.waypoints)
        if len(waypoints) == 0:
            raise ValueError("a continuation path needs at least one waypoint")
        if waypoints[0].imag != 0:
            raise ValueError("the first waypoint must be real")
        if any(a == b for a, b in zip(waypoints, waypoints[1:])):
            raise ValueError("consecutive waypoints must be distinct")
        object.__setattr__(self, "waypoints", waypoints)


@dataclass(frozen=True)
class ContinuationTrace:
    times: np.ndarray
    states: np.ndarray
    # radius estimate of the element each sample was advanced from, None when unknown
    step_radii: Tuple[Optional[float], ...]
    singularities: Tuple[Tuple[complex, float], ...]
    exceptional_real_times: Tuple[float, ...]
    status: TraceStatus
    stop_reason: StopReason
    steps: int
    escape_time: Optional[complex] = None
    message: Optional[str] = None
    issues: Tuple[Issue, ...] = field(default_factory=tuple)

    @property
    def final_time(self) -> complex:
        return self.times[-1]

    @property
    def final_state(self) -> np.ndarray:
        return self.states[-1]


def guaranteed_step_radius(bounds: PolydiscBounds, safety: float = 0.9) -> float:
    if not 0 < safety < 1:
        raise ValueError(f"safety must lie in (0, 1), got {safety}")
    return safety * min(bounds.a, bounds.b / bounds.M, 1.0 / bounds.K)


def _coefficient(value, k: int) -> complex:
    if isinstance(value, Series):
        return value.coefficients[k] if k < len(value) else 0j
    return complex(value) if k == 0 else 0j


def taylor_expand(
    rhs: Rhs,
    state: Sequence[complex],
    center: complex,
    order: int,
    radius_min_terms: int = 8,
    radius_cap: float = 1e6,
    superlinear_ratio: float = 1.2,
) -> TaylorElement:
    """Expand the solution through ``state`` at ``center`` to the given order.

    Coefficient k+1 follows from coefficient k of the field evaluated on the
    series truncated after its first k+1 terms.
    """
    if order < 1:
        raise ValueError(f"order must be at least 1, got {order}")
    state = np.asarray(state, dtype=complex)
    dim = len(state)
    coefficients = np.zeros((dim, order + 1), dtype=complex)
    coefficients[:, 0] = state
    for k in range(order):
        t_series = Series([center, 1.0][: k + 1] + [0.0] * max(0, k - 1))
        w_series = [Series(coefficients[i, : k + 1]) for i in range(dim)]
        try:
            derivative = rhs(t_series, w_series)
        except (ZeroDivisionError, SingularLocusError) as exc:
            raise SingularExpansionError(f"field is singular at t={center}: {exc}") from exc
        for i in range(dim):
            coefficients[i, k + 1] = _coefficient(derivative[i], k) / (k + 1)
    element = TaylorElement(center=complex(center), coefficients=coefficients)
    radius = estimate_radius(
        element,
        radius_min_terms=radius_min_terms,
        radius_cap=radius_cap,
        superlinear_ratio=superlinear_ratio,
    )
    return TaylorElement(center=element.center, coefficients=coefficients, estimated_radius=radius)


def _fit_radius(n: np.ndarray, log_mag: np.ndarray) -> Optional[float]:
    if len(n) < 2:
        return None
    slope = float(np.polyfit(n, log_mag, 1)[0])
    if -slope > 700:
        return math.inf
    return math.exp(-slope)


def estimate_radius(
    element: TaylorElement,
    radius_min_terms: int = 8,
    radius_cap: float = 1e6,
    superlinear_ratio: float = 1.2,
) -> Optional[float]:
    """Convergence radius from the geometric decay of the coefficient tail.

    Fits log|c_n| linearly over the upper half of the coefficients (largest
    component at each n). Returns None ("unknown") when too few tail terms
    are above the underflow threshold, when the decay is superlinear (an
    entire-like tail, the later quarter fitting a radius more than
    ``superlinear_ratio`` times the earlier one) or when the fit exceeds the cap.
    """
    order = element.order
    if order < radius_min_terms:
        return None
    magnitudes = np.max(np.abs(element.coefficients), axis=0)
    n = np.arange(order + 1)
    tail = n >= max(1, order // 2)
    usable = tail & (magnitudes > _TINY)
    if usable.sum() < 3:
        return None
    n_used = n[usable].astype(float)
    log_used = np.log(magnitudes[usable])
    radius = _fit_radius(n_used, log_used)
    if radius is None or not math.isfinite(radius):
        return None
    middle = n_used[len(n_used) // 2]
    early = _fit_radius(n_used[n_used <= middle], log_used[n_used <= middle])
    late = _fit_radius(n_used[n_used >= middle], log_used[n_used >= middle])
    if early is not None and late is not None and late > superlinear_ratio * early:
        return None
    if radius > radius_cap:
        return None
    return radius


def advance(element: TaylorElement, dt: complex, step_fraction: float = 0.5) -> np.ndarray:
    radius = element.estimated_radius
    if radius is not None and abs(dt) > step_fraction * radius * (1 + 1e-12):
        raise StepTooLargeError(
            f"|dt|={abs(dt):.6g} exceeds {step_fraction} of the estimated radius {radius:.6g}"
        )
    coefficients = element.coefficients
    result = coefficients[:, -1].copy()
    for k in range(element.order - 1, -1, -1):
        result = result * dt + coefficients[:, k]
    return result


def _step_size(element: TaylorElement, opts: EngineOptions) -> float:
    coefficients = element.coefficients
    order = element.order
    scale = max(1.0, float(np.max(np.abs(element.state))))
    step = opts.max_step
    for k in (order - 1, order):
        if k < 1:
            continue
        magnitude = float(np.max(np.abs(coefficients[:, k])))
        if magnitude > _TINY:
            step = min(step, (opts.tolerance * scale / magnitude) ** (1.0 / k))
    if element.estimated_radius is not None:
        step = min(step, opts.step_fraction * element.estimated_radius)
    return step


def _trace(
    times, states, radii, status, stop_reason, steps,
    singularities=(), exceptional=(), escape_time=None, message=None, issues=(),
) -> ContinuationTrace:
    times = np.array(times, dtype=complex)
    states = np.array(states, dtype=complex)
    times.setflags(write=False)
    states.setflags(write=False)
    return ContinuationTrace(
        times=times,
        states=states,
        step_radii=tuple(radii),
        singularities=tuple(singularities),
        exceptional_real_times=tuple(exceptional),
        status=status,
        stop_reason=stop_reason,
        steps=steps,
        escape_time=escape_time,
        message=message,
        issues=tuple(issues),
    )


def continue_along_path(
    rhs: Rhs,
    initial: Sequence[complex],
    path: ContinuationPath,
    opts: EngineOptions = EngineOptions(),
) -> ContinuationTrace:
    """March Taylor elements along the straight segments of ``path``."""
    t = path.waypoints[0]
    w = np.array(initial, dtype=complex)
    times, states, radii = [t], [w], [None]
    steps = 0
    for target in path.waypoints[1:]:
        while t != target:
            if steps >= opts.max_steps:
                logger.info(f"stalled at t={t} after {steps} steps")
                return _trace(times, states, radii, TraceStatus.stalled, StopReason.max_steps, steps,
                              message=f"max_steps={opts.max_steps} exhausted")
            try:
                element = taylor_expand(
                    rhs, w, t, opts.order,
                    radius_min_terms=opts.radius_min_terms,
                    radius_cap=opts.radius_cap,
                    superlinear_ratio=opts.superlinear_ratio,
                )
            except GeodesicError as exc:
                logger.info(f"expansion failed at t={t}: {exc}")
                return _trace(times, states, radii, TraceStatus.error, StopReason.error, steps,
                              message=str(exc))
            remaining = target - t
            distance = abs(remaining)
            direction = remaining / distance
            radius = element.estimated_radius
            step = _step_size(element, opts)
            if radius is not None and radius < opts.singular_radius:
                location = t + radius * direction
                logger.info(f"singularity ahead of t={t}: estimate {location}, radius {radius:.3g}")
                return _trace(times, states, radii, TraceStatus.escaped, StopReason.collapse, steps,
                              singularities=[(location, radius)],
                              message="convergence radius collapsed")
            if step < opts.min_step:
                location = t + step * direction
                logger.info(f"step collapsed to {step:.3g} at t={t}")
                return _trace(times, states, radii, TraceStatus.escaped, StopReason.collapse, steps,
                              singularities=[(location, step)],
                              message="step size collapsed")
            if step >= distance:
                dt, t_next = remaining, target
            else:
                dt, t_next = step * direction, t + step * direction
            w = advance(element, dt, opts.step_fraction)
            t = t_next
            steps += 1
            times.append(t)
            states.append(w)
            radii.append(radius)
            logger.debug(f"step {steps}: t={t} |dt|={abs(dt):.3g} radius={radius}")
            if not np.all(np.isfinite(w)) or np.max(np.abs(w)) > opts.escape_threshold:
                logger.info(f"escaped at t={t}")
                return _trace(times, states, radii, TraceStatus.escaped, StopReason.threshold, steps,
                              escape_time=t, message="state exceeded escape threshold")
    return _trace(times, states, radii, TraceStatus.reached_end, StopReason.end, steps)


def flank(
    t_singular: float,
    detour_radius: float,
    orientation: Orientation = Orientation.upper,
    arc_points: int = 17,
) -> ContinuationPath:
    """Semicircle around ``t_singular`` from its left to its right on the real axis."""
    if not detour_radius > 0:
        raise InvalidRadiusError(f"detour radius must be positive, got {detour_radius}")
    if arc_points < 3:
        raise ValueError(f"a detour needs at least 3 arc points, got {arc_points}")
    sign = 1.0 if Orientation(orientation) == Orientation.upper else -1.0
    angles = np.linspace(np.pi, 0.0, arc_points)
    waypoints = [t_singular + detour_radius * complex(math.cos(a), sign * math.sin(a)) for a in angles]
    # the ends sit exactly on the real axis
    waypoints[0] = complex(t_singular - detour_radius)
    waypoints[-1] = complex(t_singular + detour_radius)
    return ContinuationPath(tuple(waypoints))


def is_real_state(state: np.ndarray, tolerance: float) -> bool:
    return bool(np.all(np.abs(state.imag) <= tolerance * np.maximum(1.0, np.abs(state))))


def exceptional_times_isolated(times: Sequence[float], spacing: float = 1e-3) -> bool:
    ordered = np.sort(np.asarray(times, dtype=float))
    return bool(np.all(np.diff(ordered) >= spacing))


def _arc_states(detour: ContinuationTrace) -> np.ndarray:
    off_axis = np.flatnonzero(detour.times.imag != 0)
    if off_axis.size == 0:
        return detour.states[-1:]
    return detour.states[max(off_axis[0] - 1, 0):]


def continue_real_with_detours(
    rhs: Rhs,
    initial: Sequence[complex],
    t_end: float,
    opts: EngineOptions = EngineOptions(),
    t_start: float = 0.0,
    issues: Optional[List[Issue]] = None,
    chart_check: Optional[ChartCheck] = None,
) -> ContinuationTrace:
    """Continue along the real axis, flanking real-axis singularities.

    Each detected singularity is bypassed by semicircles of growing radius from
    ``opts.detour_radii`` until the state at the exit point is real within
    ``opts.realness_tolerance``; that exit state is projected onto the reals
    and the singular time is recorded as exceptional.

    ``chart_check``, when given, must also accept the states sampled along the
    arc for the exit to count; a rejected arc is treated like a non-real exit.
    """
    if issues is None:
        issues = []
    if t_end == t_start:
        return _trace([complex(t_start)], [np.array(initial, dtype=complex)], [None],
                      TraceStatus.reached_end, StopReason.end, 0)
    direction = 1.0 if t_end > t_start else -1.0
    t = float(t_start)
    w = np.array(initial, dtype=complex)
    times, states, radii = [complex(t)], [w], [None]
    singularities: List[Tuple[complex, float]] = []
    exceptional: List[float] = []
    steps = 0

    def budget() -> EngineOptions:
        return opts.model_copy(update={"max_steps": max(1, opts.max_steps - steps)})

    def finish(status, reason, escape_time=None, message=None):
        return _trace(times, states, radii, status, reason, steps, singularities=singularities,
                      exceptional=exceptional, escape_time=escape_time, message=message,
                      issues=issues)

    while True:
        if steps >= opts.max_steps:
            return finish(TraceStatus.stalled, StopReason.max_steps,
                          message=f"max_steps={opts.max_steps} exhausted")
        leg_start = len(times) - 1
        leg = continue_along_path(rhs, w, ContinuationPath((complex(t), complex(t_end))), budget())
        steps += leg.steps
        times.extend(leg.times[1:])
        states.extend(leg.states[1:])
        radii.extend(leg.step_radii[1:])
        if leg.status == TraceStatus.reached_end:
            return finish(TraceStatus.reached_end, StopReason.end)
        if leg.stop_reason != StopReason.collapse or not opts.detours:
            singularities.extend(leg.singularities)
            return finish(leg.status, leg.stop_reason, escape_time=leg.escape_time, message=leg.message)

        location, radius = leg.singularities[-1]
        t_singular = location.real
        singularities.append((location, radius))
        crossed = False
        for detour_radius in opts.detour_radii[: opts.max_detours]:
            entry = t_singular - direction * detour_radius
            # restart from the last real sample of this leg at or before the entry point
            start = leg_start
            for i in range(leg_start, len(times)):
                if direction * (times[i].real - entry) <= 0:
                    start = i
            arc = flank(t_singular, detour_radius, opts.orientation, opts.arc_points).waypoints
            if direction < 0:
                arc = arc[::-1]
            waypoints = (times[start],) + tuple(p for p in arc if p != times[start])
            detour = continue_along_path(rhs, states[start], ContinuationPath(waypoints), budget())
            steps += detour.steps
            if detour.status != TraceStatus.reached_end:
                issues.append(Issue(Severity.warning,
                                    f"detour of radius {detour_radius} around t={t_singular:.6g} "
                                    f"ended {detour.status.value}", detour.message))
                logger.info(f"detour radius {detour_radius} around {t_singular:.6g} failed: {detour.message}")
                continue
            exit_state = detour.final_state
            if not is_real_state(exit_state, opts.realness_tolerance):
                issues.append(Issue(Severity.warning,
                                    f"detour of radius {detour_radius} around t={t_singular:.6g} "
                                    f"did not re-enter real values",
                                    f"max |Im|={np.max(np.abs(exit_state.imag)):.3g}"))
                logger.info(f"detour radius {detour_radius} around {t_singular:.6g} left the real domain")
                continue
            if chart_check is not None and not chart_check(_arc_states(detour)):
                issues.append(Issue(Severity.warning,
                                    f"detour of radius {detour_radius} around t={t_singular:.6g} "
                                    f"did not return to its starting chart"))
                logger.info(f"detour radius {detour_radius} around {t_singular:.6g} changed chart")
                continue
            del times[start + 1:], states[start + 1:], radii[start + 1:]
            times.extend(detour.times[1:-1])
            states.extend(detour.states[1:-1])
            radii.extend(detour.step_radii[1:-1])
            t = detour.final_time.real
            w = exit_state.real.astype(complex)
            times.append(complex(t))
            states.append(w)
            radii.append(detour.step_radii[-1])
            exceptional.append(t_singular)
            crossed = True
            break
        if not crossed:
            return finish(TraceStatus.escaped, StopReason.detours_exhausted, escape_time=complex(t_singular),
                          message=f"no detour around t={t_singular:.6g} re-entered real values")
        if t == t_end:
            return finish(TraceStatus.reached_end, StopReason.end)
