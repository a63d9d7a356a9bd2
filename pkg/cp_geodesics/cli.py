from enum import Enum
import logging
from pathlib import Path
import sys
from typing import List, Optional

import typer

from cp_geodesics.classifier import (
    classify_analytic,
    classify_numeric,
    parse_grid_spec,
    sweep as sweep_rows,
    validate,
)
from cp_geodesics.config import (
    DEFAULT_BOUNDARY_MARGIN,
    DEFAULT_DETOUR_RADII,
    DEFAULT_HORIZON,
    DEFAULT_ORDER,
    DEFAULT_TOLERANCE,
    EngineOptions,
    Orientation,
    SweepOptions,
    configure_logging,
    load_settings,
)
from cp_geodesics.cont_engine import continue_real_with_detours
from cp_geodesics.cp_model import RealIC, first_integrals, geodesic_field, null_closed_form, quotient_project
from cp_geodesics.output_utils import format_number, render, render_record, sweep_frame, trace_frame
from cp_geodesics.utils import GeodesicError, GridSpecError, Issue

logger = logging.getLogger('cp_geodesics.cli')
# ClickException base of the click typer runs on; every usage error derives from it
UsageErrors = tuple(cls for cls in typer.BadParameter.__mro__ if cls.__name__ == "ClickException")
app = typer.Typer(add_completion=False, help="Geodesics of the Clifton-Pohl torus continued through complex time")


class OutputFormat(str, Enum):
    csv = "csv"
    json = "json"


IC_HELP = "Initial condition alpha,beta,x,y (position then velocity)"
TEND_HELP = "Real end time of the continuation (classify/sweep: symmetric horizon)"
ORDER_HELP = "Taylor order of each element"
TOL_HELP = "Local truncation error per step, relative to max(1, |state|)"
DETOUR_HELP = "Growing detour radii tried around each real singularity"
DETOUR_DEFAULT = ",".join(str(r) for r in DEFAULT_DETOUR_RADII)


def _floats(text: str, count: int, what: str) -> List[float]:
    try:
        values = [float(item) for item in text.split(",")]
    except ValueError:
        raise GridSpecError(f"{what} must be {count} comma separated numbers, got {text!r}")
    if len(values) != count:
        raise GridSpecError(f"{what} must be {count} comma separated numbers, got {text!r}")
    return values


def _ic(text: str) -> RealIC:
    alpha, beta, x, y = _floats(text, 4, "--ic")
    return RealIC(alpha=alpha, beta=beta, x=x, y=y)


def _engine(order: int, tol: float, detour_radius: str, orientation: Orientation, detours: bool) -> EngineOptions:
    try:
        radii = tuple(float(r) for r in detour_radius.split(","))
    except ValueError:
        raise GridSpecError(f"--detour-radius must be comma separated numbers, got {detour_radius!r}")
    return EngineOptions(order=order, tolerance=tol, detour_radii=radii, max_detours=max(len(radii), 1),
                         orientation=orientation, detours=detours)


def _emit(text: str, out: Optional[Path]):
    if out is None:
        typer.echo(text, nl=False)
    else:
        out.write_text(text)
        logger.info(f"wrote {out}")


@app.callback()
def main_callback():
    settings = load_settings()
    configure_logging(settings.log_level)


@app.command()
def trace(
    ic: str = typer.Option(..., "--ic", help=IC_HELP),
    t_end: float = typer.Option(DEFAULT_HORIZON, "--t-end", help=TEND_HELP),
    order: int = typer.Option(DEFAULT_ORDER, "--order", help=ORDER_HELP),
    tol: float = typer.Option(DEFAULT_TOLERANCE, "--tol", help=TOL_HELP),
    detour_radius: str = typer.Option(DETOUR_DEFAULT, "--detour-radius", help=DETOUR_HELP),
    orientation: Orientation = typer.Option(Orientation.upper, "--orientation"),
    detours: bool = typer.Option(True, "--detours/--no-detours", help="Flank real singularities"),
    fmt: OutputFormat = typer.Option(OutputFormat.csv, "--format"),
    out: Optional[Path] = typer.Option(None, "--out", help="Output file, standard output if omitted"),
):
    """Continue one geodesic from t=0 to --t-end and write its samples"""
    real_ic = _ic(ic)
    opts = _engine(order, tol, detour_radius, orientation, detours)
    issues: List[Issue] = []
    result = continue_real_with_detours(geodesic_field, real_ic.as_state(), t_end, opts, issues=issues)
    for issue in issues:
        logger.info(f"{issue.severity.value}: {issue.msg}")
    A = B = P = None
    if not real_ic.is_null:
        integrals = first_integrals(real_ic)
        A, B, P = integrals.A, integrals.B, integrals.P
    metadata = {
        "A": A,
        "B": B,
        "P": P,
        "status": result.status.value,
        "exceptional_times": list(result.exceptional_real_times),
        "escape_time": result.escape_time,
        "message": result.message,
    }
    _emit(render(trace_frame(result), fmt.value, metadata), out)


@app.command()
def classify(
    ic: str = typer.Option(..., "--ic", help=IC_HELP),
    t_end: float = typer.Option(DEFAULT_HORIZON, "--t-end", help=TEND_HELP),
    order: int = typer.Option(DEFAULT_ORDER, "--order", help=ORDER_HELP),
    tol: float = typer.Option(DEFAULT_TOLERANCE, "--tol", help=TOL_HELP),
    detour_radius: str = typer.Option(DETOUR_DEFAULT, "--detour-radius", help=DETOUR_HELP),
    orientation: Orientation = typer.Option(Orientation.upper, "--orientation"),
    numeric: bool = typer.Option(True, "--numeric/--no-numeric", help="Also classify by continuation"),
    fmt: OutputFormat = typer.Option(OutputFormat.csv, "--format"),
    out: Optional[Path] = typer.Option(None, "--out"),
):
    """Print the completeness verdict of one geodesic"""
    real_ic = _ic(ic)
    analytic = classify_analytic(real_ic)
    record = {
        "alpha": real_ic.alpha,
        "beta": real_ic.beta,
        "x": real_ic.x,
        "y": real_ic.y,
        "P": analytic.impulse_value,
        "analytic": analytic.decision.value,
        "numeric": None,
        "agree": None,
        "exceptional_times": None,
        "error": None,
    }
    if numeric:
        verdict = classify_numeric(real_ic, t_end, _engine(order, tol, detour_radius, orientation, True))
        times = verdict.evidence.exceptional_times
        record.update(
            numeric=verdict.decision.value,
            agree=verdict.decision == analytic.decision and verdict.error is None,
            exceptional_times=times if fmt == OutputFormat.json else ";".join(format_number(t) for t in times),
            error=verdict.error,
        )
    _emit(render_record(record, fmt.value), out)


@app.command()
def sweep(
    grid: Optional[List[str]] = typer.Option(None, "--grid", help="Grid item var=start:stop:count (repeat per variable)"),
    ic: Optional[List[str]] = typer.Option(None, "--ic", help="Explicit initial condition (repeatable) instead of --grid"),
    t_end: float = typer.Option(DEFAULT_HORIZON, "--t-end", help=TEND_HELP),
    boundary_margin: float = typer.Option(DEFAULT_BOUNDARY_MARGIN, "--boundary-margin",
                                          help="Skip numerics when P is this close to 0 or 2"),
    validate_rows: bool = typer.Option(False, "--validate", help="Exit 2 when any row disagrees"),
    numeric: bool = typer.Option(True, "--numeric/--no-numeric"),
    workers: Optional[int] = typer.Option(None, "--workers", help="Worker processes (default CPG_WORKERS or 1)"),
    order: int = typer.Option(DEFAULT_ORDER, "--order", help=ORDER_HELP),
    tol: float = typer.Option(DEFAULT_TOLERANCE, "--tol", help=TOL_HELP),
    detour_radius: str = typer.Option(DETOUR_DEFAULT, "--detour-radius", help=DETOUR_HELP),
    orientation: Orientation = typer.Option(Orientation.upper, "--orientation"),
    fmt: OutputFormat = typer.Option(OutputFormat.csv, "--format"),
    out: Optional[Path] = typer.Option(None, "--out"),
):
    """Classify every point of a grid both ways"""
    if grid and ic:
        raise GridSpecError("use either --grid or --ic, not both")
    points = [_ic(item) for item in ic] if ic else parse_grid_spec(grid or [])
    opts = SweepOptions(
        horizon=t_end,
        boundary_margin=boundary_margin,
        numeric=numeric,
        workers=workers if workers is not None else load_settings().workers,
        engine=_engine(order, tol, detour_radius, orientation, True),
    )
    rows = sweep_rows(points, opts)
    _emit(render(sweep_frame(rows), fmt.value), out)
    if validate_rows:
        report = validate(rows)
        if not report.applicable:
            logger.warning("validation not applicable: no row was classified numerically")
        typer.echo(f"total={report.total} compared={report.compared} agree={report.agree} "
                   f"disagree={report.disagree} skipped={report.skipped}", err=True)
        for row in report.disagreements:
            typer.echo(f"disagreement: {row.ic.alpha},{row.ic.beta},{row.ic.x},{row.ic.y} "
                       f"P={row.P} analytic={row.analytic.value} numeric={row.numeric} "
                       f"{row.numeric_error or ''}".rstrip(), err=True)
        if report.disagree > 0:
            raise typer.Exit(code=2)


@app.command("null-form")
def null_form(
    ic: str = typer.Option(..., "--ic", help=IC_HELP),
    t_end: float = typer.Option(DEFAULT_HORIZON, "--t-end", help="Poles are listed on [-t_end, t_end]"),
    fmt: OutputFormat = typer.Option(OutputFormat.csv, "--format"),
    out: Optional[Path] = typer.Option(None, "--out"),
):
    """Closed form of a null geodesic and its real poles"""
    geodesic = null_closed_form(_ic(ic))
    window = abs(t_end)
    poles = geodesic.poles(-window, window)
    record = {
        "kind": geodesic.kind,
        "moving": geodesic.moving,
        "formula": geodesic.describe(),
        "poles": poles if fmt == OutputFormat.json else ";".join(format_number(p) for p in poles),
    }
    _emit(render_record(record, fmt.value), out)


@app.command()
def quotient(
    point: str = typer.Option(..., "--point", help="Point u,v of R^2 minus the origin"),
    fmt: OutputFormat = typer.Option(OutputFormat.csv, "--format"),
    out: Optional[Path] = typer.Option(None, "--out"),
):
    """Project a point onto the fundamental annulus 1 <= |p| < 2 of the torus"""
    u, v = _floats(point, 2, "--point")
    u_q, v_q, k = quotient_project(u, v)
    if fmt == OutputFormat.json:
        _emit(render_record({"u": u_q, "v": v_q, "k": k}, "json"), out)
    else:
        _emit(f"{format_number(u_q)},{format_number(v_q)} k={k}\n", out)


def _one_line(exc: Exception) -> str:
    if isinstance(exc, UsageErrors):
        message = exc.format_message()
    else:
        message = str(exc)
    return " ".join(message.split())


def run(argv: Optional[List[str]] = None) -> int:
    """Entry point returning the exit code: 0 ok, 1 usage/input error, 2 validation disagreement"""
    try:
        result = app(args=argv, prog_name="cp-geodesics", standalone_mode=False)
    except UsageErrors + (GeodesicError, ValueError) as exc:
        typer.echo(f"error: {_one_line(exc)}", err=True)
        return 1
    except typer.Abort:
        return 1
    return result if isinstance(result, int) else 0


def main():
    sys.exit(run())


if __name__ == '__main__':
    main()
