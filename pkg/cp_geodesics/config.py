import logging
import os
from enum import Enum
from typing import Tuple

from dotenv import load_dotenv
from pydantic import BaseModel, ConfigDict, Field, PositiveFloat, PositiveInt, field_validator

DEFAULT_ORDER = 16
DEFAULT_TOLERANCE = 1e-13
DEFAULT_STEP_FRACTION = 0.5
DEFAULT_REALNESS_TOLERANCE = 1e-9
DEFAULT_CHART_TOLERANCE = 1e-6
DEFAULT_DETOUR_RADII = (0.05, 0.1, 0.2)
DEFAULT_MAX_DETOURS = 3
DEFAULT_ESCAPE_THRESHOLD = 1e12
DEFAULT_HORIZON = 10.0
DEFAULT_BOUNDARY_MARGIN = 0.05

LOG_FORMAT = '%(asctime)s [%(levelname)s] %(message)s'
LOG_DATEFMT = '%m/%d/%Y %I:%M:%S %p'


class Orientation(str, Enum):
    upper = "upper"
    lower = "lower"


class EngineOptions(BaseModel):
    """Knobs of the Taylor continuation engine.

    ``tolerance`` bounds the local truncation error of a step relative to
    max(1, |state|). ``singular_radius`` is the convergence radius below which
    the march declares a singularity ahead; it must stay below the smallest
    detour radius so a detour always starts behind the current point.
    """
    model_config = ConfigDict(frozen=True)

    order: int = Field(DEFAULT_ORDER, ge=1)
    tolerance: PositiveFloat = DEFAULT_TOLERANCE
    step_fraction: float = Field(DEFAULT_STEP_FRACTION, gt=0, lt=1)
    max_steps: PositiveInt = 20000
    escape_threshold: PositiveFloat = DEFAULT_ESCAPE_THRESHOLD
    radius_min_terms: PositiveInt = 8
    radius_cap: PositiveFloat = 1e6
    superlinear_ratio: float = Field(1.2, gt=1)
    singular_radius: PositiveFloat = 0.02
    min_step: PositiveFloat = 1e-6
    max_step: PositiveFloat = 1.0
    detours: bool = True
    detour_radii: Tuple[PositiveFloat, ...] = DEFAULT_DETOUR_RADII
    max_detours: PositiveInt = DEFAULT_MAX_DETOURS
    orientation: Orientation = Orientation.upper
    arc_points: int = Field(17, ge=3)
    realness_tolerance: PositiveFloat = DEFAULT_REALNESS_TOLERANCE
    # largest change of Im log(u/v) across a detour that still counts as re-entry
    chart_tolerance: PositiveFloat = DEFAULT_CHART_TOLERANCE
    min_exceptional_spacing: PositiveFloat = 1e-3

    @field_validator("detour_radii")
    @classmethod
    def _growing_schedule(cls, radii):
        if len(radii) == 0:
            raise ValueError("detour schedule must not be empty")
        if any(b <= a for a, b in zip(radii, radii[1:])):
            raise ValueError("detour radii must be strictly growing")
        return radii


class SweepOptions(BaseModel):
    model_config = ConfigDict(frozen=True)

    horizon: PositiveFloat = DEFAULT_HORIZON
    boundary_margin: float = Field(DEFAULT_BOUNDARY_MARGIN, ge=0)
    numeric: bool = True
    numeric_for_null: bool = True
    workers: PositiveInt = 1
    engine: EngineOptions = EngineOptions()


class Settings(BaseModel):
    """Process level settings read from the environment (and a .env file)"""
    log_level: str = "INFO"
    workers: PositiveInt = 1


def load_settings() -> Settings:
    load_dotenv()
    return Settings(
        log_level=os.getenv("CPG_LOG_LEVEL", "INFO"),
        workers=int(os.getenv("CPG_WORKERS", "1")),
    )


def configure_logging(level: str = "INFO") -> logging.Logger:
    logger = logging.getLogger('cp_geodesics')
    logger.setLevel(level)
    if not logger.handlers:
        handler = logging.StreamHandler()
        handler.setLevel(level)
        formatter = logging.Formatter(fmt=LOG_FORMAT, datefmt=LOG_DATEFMT)
        handler.setFormatter(formatter)
        logger.addHandler(handler)
    return logger
