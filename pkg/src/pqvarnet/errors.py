"""Exception hierarchy shared across the package."""


class PqvarnetError(Exception):
    """Base class for package errors."""


class DataError(PqvarnetError):
    """Raised when input data fails validation (bad files, degenerate panels)."""


class NumericalError(PqvarnetError):
    """Raised on numerical failure (rank deficiency, singular systems)."""


class RankDeficientError(NumericalError):
    """Design matrix is rank deficient; carries the suspect column indices."""

    def __init__(self, message, columns=None):
        super().__init__(message)
        self.columns = list(columns) if columns is not None else []


class ArtifactError(PqvarnetError):
    """Fit artifact is missing, corrupt, or from an incompatible version."""
