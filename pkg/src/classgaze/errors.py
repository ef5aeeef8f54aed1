"""Exception types shared across the pipeline."""


class ClassgazeError(Exception):
    """Base class for all errors raised by this package."""


class GazeParseError(ClassgazeError):
    """A gaze export line could not be parsed."""

    def __init__(self, line_no: int, message: str):
        super().__init__(f"line {line_no}: {message}")
        self.line_no = line_no


class GazeOrderError(ClassgazeError):
    """Gaze timestamps are not strictly increasing."""

    def __init__(self, line_no: int, message: str):
        super().__init__(f"line {line_no}: {message}")
        self.line_no = line_no


class DegenerateGeometryError(ClassgazeError):
    """Geometric input admits no solution (coincident points, zero vector)."""


class ContractError(ClassgazeError):
    """A caller violated an interface contract (shape/length mismatch etc.)."""


class BackendError(ClassgazeError):
    """A detector or embedder backend failed."""


class SpecError(ClassgazeError):
    """Invalid model family or hyperparameter value."""


class DatasetError(ClassgazeError):
    """Labeled dataset unusable for training."""


class ConfigError(ClassgazeError):
    """Bad session, backend, or grid configuration."""


class SessionError(ClassgazeError):
    """Inconsistent per-session inputs (frame range mismatch etc.)."""
