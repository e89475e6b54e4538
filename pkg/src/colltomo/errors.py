"""Exception types shared across the package."""


class TomographyError(Exception):
    """Base class for all colltomo errors."""


class DimensionError(TomographyError, ValueError):
    """Shapes or dimensions of inputs are inconsistent."""


class DegenerateInputError(TomographyError, ValueError):
    """Input is singular/zero/near-degenerate where the operation needs otherwise."""


class RankDeficientError(TomographyError, ValueError):
    """Design matrix lacks the column rank required by the chosen inversion."""


class GaugeAmbiguityError(TomographyError, ValueError):
    """Scale gauge between tensor factors cannot be fixed from the data given."""


class ProjectionFailureError(TomographyError, RuntimeError):
    """Alternating projections did not converge; carries the last iterate."""

    def __init__(self, message, last_iterate=None):
        super().__init__(message)
        self.last_iterate = last_iterate


class ConfigError(TomographyError, ValueError):
    """Invalid experiment or estimator configuration."""


class SchemaError(TomographyError, ValueError):
    """A data file does not match the expected schema."""


class SdpSizeError(TomographyError, ValueError):
    """Requested SDP exceeds the supported dense-solver size."""
