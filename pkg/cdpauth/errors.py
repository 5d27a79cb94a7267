class CdpError(Exception):
    """Root of every error raised by cdpauth."""


class ParameterError(CdpError, ValueError):
    pass


class ShapeError(ParameterError):
    pass


class ConfigError(ParameterError):
    pass


class CompatibilityError(CdpError):
    """Raised when objects produced under different channel, estimator or neighbourhood settings are combined."""
