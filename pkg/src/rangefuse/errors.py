"""Exception types shared across the package."""


class RangefuseError(Exception):
    """Base class for errors raised by this package."""


class ConfigurationError(RangefuseError):
    """Invalid configuration values, CLI arguments, or input files."""


class NumericError(RangefuseError):
    """A numerical procedure failed to reach its accuracy target."""


class ModelConstructionError(NumericError):
    """A tabulated model violated its invariants while being built."""
