"""Exception types shared across the library."""


class DegenerateGeometryError(RuntimeError):
    """Normal equations are rank deficient (e.g. a single straight wall)."""


class EstimationFailedError(RuntimeError):
    """Velocity estimation could not proceed (e.g. no correspondences)."""


class SimulationDomainError(RuntimeError):
    """Simulated robot left the bounded region of the world."""


class AlignmentError(RuntimeError):
    """Trajectory alignment has too few associated pose pairs."""


class ScanFormatError(ValueError):
    """A scan/points/trajectory file failed to parse.

    Carries the 1-based line number where parsing failed, when known.
    """

    def __init__(self, message: str, line: int | None = None):
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)
        self.line = line
