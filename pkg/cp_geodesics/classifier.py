from concurrent.futures import ProcessPoolExecutor
from enum import Enum
from functools import partial
import itertools
import logging
from typing import List, Optional, Sequence, Tuple, Union

import numpy as np
from pydantic import BaseModel

from cp_geodesics.config import EngineOptions, SweepOptions
from cp_geodesics.cont_engine import (
    StopReason,
    TraceStatus,
    continue_real_with_detours,
    exceptional_times_isolated,
    is_real_state,
)
from cp_geodesics.cp_model import RealIC, geodesic_field, impulse, stays_in_chart
from cp_geodesics.utils import EmptyGridError, GridSpecError, Issue, Severity, StationaryCurveError

logger = logging.getLogger("cp_geodesics.classifier")

GRID_VARIABLES = ("alpha", "beta", "x", "y")


class Decision(str, Enum):
    complete = "Complete"
    incomplete = "Incomplete"


class Basis(str, Enum):
    analytic = "analytic"
    numeric = "numeric"


class NumericEvidence(BaseModel):
    horizon: float
    forward_status: TraceStatus
    backward_status: TraceStatus
    forward_reason: StopReason
    backward_reason: StopReason
    exceptional_times: List[float]
    isolated: bool
    real_off_exceptions: bool
    escape_time: Optional[float] = None
    steps: int
    issues: List[str] = []


class Verdict(BaseModel):
    decision: Decision
    basis: Basis
    # None for null geodesics
    impulse_value: Optional[float] = None
    evidence: Optional[NumericEvidence] = None
    error: Optional[str] = None


class SweepRow(BaseModel):
    ic: RealIC
    P: Optional[float] = None
    analytic: Decision
    # None when the numeric classification was skipped
    numeric: Optional[Decision] = None
    agree: Optional[bool] = None
    numeric_error: Optional[str] = None


class ValidationReport(BaseModel):
    total: int
    compared: int
    agree: int
    disagree: int
    skipped: int
    applicable: bool
    disagreements: List[SweepRow]


def _check_velocity(ic: RealIC):
    if ic.x == 0 and ic.y == 0:
        raise StationaryCurveError("zero velocity gives a constant curve, not a geodesic to classify")


def classify_analytic(ic: RealIC) -> Verdict:
    _check_velocity(ic)
    if ic.is_null:
        return Verdict(decision=Decision.complete, basis=Basis.analytic)
    P = impulse(ic)
    decision = Decision.complete if 0 < P <= 2 else Decision.incomplete
    return Verdict(decision=decision, basis=Basis.analytic, impulse_value=P)


def classify_numeric(ic: RealIC, horizon: float, opts: EngineOptions = EngineOptions()) -> Verdict:
    """Continue the geodesic over [-horizon, horizon] through complex detours.

    A detour around a pole of a null geodesic re-enters as soon as (u, v) is
    real again. A nonnull geodesic must also come back to the log chart it
    left: u/v changing sign across the singularity shifts Im log(u/v) by pi,
    and that exit does not count.
    """
    _check_velocity(ic)
    if not horizon > 0:
        raise ValueError(f"horizon must be positive, got {horizon}")
    P = None if ic.is_null else impulse(ic)
    issues: List[Issue] = []
    chart_check = None if ic.is_null else partial(stays_in_chart, tolerance=opts.chart_tolerance)
    initial = ic.as_state()
    forward = continue_real_with_detours(geodesic_field, initial, horizon, opts, issues=issues,
                                         chart_check=chart_check)
    backward = continue_real_with_detours(geodesic_field, initial, -horizon, opts, issues=issues,
                                          chart_check=chart_check)

    exceptional = sorted(forward.exceptional_real_times + backward.exceptional_real_times)
    isolated = exceptional_times_isolated(exceptional, opts.min_exceptional_spacing)
    real_off_exceptions = all(
        is_real_state(state, opts.realness_tolerance)
        for trace in (forward, backward)
        for t, state in zip(trace.times, trace.states)
        if t.imag == 0
    )
    escapes = [trace.escape_time for trace in (forward, backward) if trace.escape_time is not None]
    evidence = NumericEvidence(
        horizon=horizon,
        forward_status=forward.status,
        backward_status=backward.status,
        forward_reason=forward.stop_reason,
        backward_reason=backward.stop_reason,
        exceptional_times=exceptional,
        isolated=isolated,
        real_off_exceptions=real_off_exceptions,
        escape_time=float(escapes[0].real) if escapes else None,
        steps=forward.steps + backward.steps,
        issues=[issue.msg for issue in issues],
    )
    errors = [trace.message for trace in (forward, backward) if trace.status == TraceStatus.error]
    if errors:
        logger.info(f"engine error classifying {ic}: {errors[0]}")
        return Verdict(decision=Decision.incomplete, basis=Basis.numeric, impulse_value=P,
                       evidence=evidence, error=errors[0])
    complete = (
        forward.status == TraceStatus.reached_end
        and backward.status == TraceStatus.reached_end
        and isolated
        and real_off_exceptions
    )
    decision = Decision.complete if complete else Decision.incomplete
    return Verdict(decision=decision, basis=Basis.numeric, impulse_value=P, evidence=evidence)


def parse_grid_spec(specs: Sequence[str]) -> List[Tuple[str, np.ndarray]]:
    """Parse ``name=start:stop:count`` items, keeping declaration order"""
    grid = []
    for spec in specs:
        try:
            name, ranges = spec.split("=")
            start, stop, count = ranges.split(":")
            values = np.linspace(float(start), float(stop), int(count))
        except ValueError as exc:
            raise GridSpecError(f"malformed grid item {spec!r}, expected name=start:stop:count") from exc
        name = name.strip()
        if name not in GRID_VARIABLES:
            raise GridSpecError(f"unknown grid variable {name!r}, expected one of {GRID_VARIABLES}")
        if int(count) < 1:
            raise GridSpecError(f"grid count must be at least 1 in {spec!r}")
        if name in dict(grid):
            raise GridSpecError(f"grid variable {name!r} declared twice")
        grid.append((name, values))
    missing = set(GRID_VARIABLES) - set(dict(grid))
    if missing:
        raise GridSpecError(f"grid is missing variables {sorted(missing)}")
    return grid


def _unclassifiable(ic: RealIC) -> Optional[str]:
    if ic.x == 0 and ic.y == 0:
        return f"zero velocity at ({ic.alpha}, {ic.beta}) gives a constant curve, skipped"
    return None


def grid_ics(grid: Sequence[Tuple[str, np.ndarray]], issues: Optional[List[Issue]] = None) -> List[RealIC]:
    """Grid points in declaration order, without the origin and zero velocities.

    Each skipped point leaves a warning in ``issues``.
    """
    if issues is None:
        issues = []
    names = [name for name, _ in grid]
    points = []
    for combination in itertools.product(*(values for _, values in grid)):
        values = {name: float(value) for name, value in zip(names, combination)}
        if values["alpha"] == 0 and values["beta"] == 0:
            issues.append(Issue(Severity.warning, f"grid point {values} lies at the origin, skipped"))
            continue
        ic = RealIC(**values)
        reason = _unclassifiable(ic)
        if reason is not None:
            issues.append(Issue(Severity.warning, reason))
            continue
        points.append(ic)
    return points


def _sweep_row(ic: RealIC, opts: SweepOptions) -> SweepRow:
    analytic = classify_analytic(ic)
    P = analytic.impulse_value
    run_numeric = opts.numeric
    if P is None:
        run_numeric = run_numeric and opts.numeric_for_null
    elif abs(P) < opts.boundary_margin or abs(P - 2) < opts.boundary_margin:
        run_numeric = False
    if not run_numeric:
        return SweepRow(ic=ic, P=P, analytic=analytic.decision)
    numeric = classify_numeric(ic, opts.horizon, opts.engine)
    if numeric.error is not None:
        return SweepRow(ic=ic, P=P, analytic=analytic.decision, numeric=numeric.decision,
                        agree=False, numeric_error=numeric.error)
    return SweepRow(ic=ic, P=P, analytic=analytic.decision, numeric=numeric.decision,
                    agree=numeric.decision == analytic.decision)


def sweep(
    grid: Union[Sequence[Tuple[str, np.ndarray]], Sequence[RealIC]],
    opts: SweepOptions = SweepOptions(),
    issues: Optional[List[Issue]] = None,
) -> List[SweepRow]:
    """One row per classifiable initial condition, in grid order"""
    if issues is None:
        issues = []
    if len(grid) == 0:
        raise EmptyGridError("empty grid")
    skipped = len(issues)
    if isinstance(grid[0], RealIC):
        ics = []
        for ic in grid:
            reason = _unclassifiable(ic)
            if reason is not None:
                issues.append(Issue(Severity.warning, reason))
                continue
            ics.append(ic)
    else:
        ics = grid_ics(grid, issues)
    if len(issues) > skipped:
        logger.warning(f"Issues found {[issue.msg for issue in issues[skipped:]]}")
    if len(ics) == 0:
        raise EmptyGridError("grid has no classifiable points")
    logger.info(f"sweeping {len(ics)} initial conditions with {opts.workers} worker(s)")
    if opts.workers == 1:
        return [_sweep_row(ic, opts) for ic in ics]
    with ProcessPoolExecutor(max_workers=opts.workers) as executor:
        return list(executor.map(_sweep_row, ics, itertools.repeat(opts)))


def validate(rows: Sequence[SweepRow]) -> ValidationReport:
    compared = [row for row in rows if row.agree is not None]
    disagreements = [row for row in compared if not row.agree]
    return ValidationReport(
        total=len(rows),
        compared=len(compared),
        agree=len(compared) - len(disagreements),
        disagree=len(disagreements),
        skipped=len(rows) - len(compared),
        applicable=len(compared) > 0,
        disagreements=disagreements,
    )
