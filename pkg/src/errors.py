"""
Exception hierarchy for the elastic wave laboratory.

Every module raises one of these so the command-line front end can map
failures to exit codes without inspecting messages.
"""


class LabError(Exception):
    """Base exception for laboratory errors."""

    pass


class ParameterError(LabError, ValueError):
    """Invalid model, zone, grid or data parameters."""

    pass


class GridError(LabError):
    """Field dimensions or grid resolution do not fit the requested data."""

    pass


class ZeroModeError(LabError):
    """Displacement requested at the zero frequency, where W cannot recover it."""

    pass


class ReferenceRateError(LabError):
    """A reference-system rate is not positive at the requested frequency."""

    pass


class StabilityError(LabError):
    """A scan or fit contradicts the decay claims for the symbol."""

    pass


class AnalysisError(LabError):
    """Invalid series, fit window or study configuration."""

    pass


class AcceptanceError(LabError):
    """An acceptance criterion failed."""

    def __init__(self, criterion: str, message: str):
        super().__init__(f"{criterion}: {message}")
        self.criterion = criterion
