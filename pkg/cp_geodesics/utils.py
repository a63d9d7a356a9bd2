from dataclasses import dataclass
from enum import Enum
from typing import Optional, Union


class Severity(str, Enum):
    warning = "warning"
    error = "error"


@dataclass
class Issue:
    severity: Severity
    msg: str
    exception: Optional[Union[str, None]] = None


class GeodesicError(Exception):
    """Base class for every error raised by cp_geodesics"""


class InvalidBoundsError(GeodesicError):
    pass


class SingularLocusError(GeodesicError):
    """Raised when a point lies on u**2 + v**2 = 0"""


class SingularExpansionError(GeodesicError):
    """The right-hand side cannot be expanded at the requested point"""


class StepTooLargeError(GeodesicError):
    pass


class InvalidRadiusError(GeodesicError):
    pass


class NullGeodesicError(GeodesicError):
    """Operation needs a nonnull geodesic (x*y != 0); use null_closed_form instead"""


class NotNullError(GeodesicError):
    pass


class StationaryCurveError(GeodesicError):
    pass


class BranchDegeneracyError(GeodesicError):
    pass


class OnAxisError(GeodesicError):
    pass


class DegenerateCrossingError(GeodesicError):
    pass


class EmptyGridError(GeodesicError):
    pass


class GridSpecError(GeodesicError):
    pass
