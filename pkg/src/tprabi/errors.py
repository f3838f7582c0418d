"""Exception types shared across the package."""


class TprabiError(Exception):
    """Base class for all package-specific errors."""


class InvalidDimension(TprabiError):
    """Requested Hilbert-space truncation is too small to be meaningful."""


class TruncationOverflow(TprabiError):
    """Requested state does not fit in the truncated Fock space."""


class NotHermitian(TprabiError):
    """Operator expected to be Hermitian is not."""


class InvalidIndex(TprabiError):
    """Eigenlevel index out of range."""


class DimensionMismatch(TprabiError):
    """Operator dimensions do not match the working Hilbert space."""


class ZeroPopulation(TprabiError):
    """Dressed excited-state population vanishes; g2 is undefined."""


class NumericalDrift(TprabiError):
    """Imaginary parts of a physical expectation exceed tolerance."""


class InvalidGap(TprabiError):
    """Transition energy must be positive for a thermal occupation."""


class IntegrationDiverged(TprabiError):
    """Propagation violated trace or positivity bounds at a checkpoint."""


class EpisodeFinished(TprabiError):
    """env_step called after the final control segment."""


class GradientOverflow(TprabiError):
    """Non-finite gradient passed to the optimizer."""


class ConfigError(TprabiError):
    """Experiment configuration file is invalid or incomplete."""
