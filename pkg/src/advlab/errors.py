"""Exception types shared across the package."""


class AdvlabError(Exception):
    """Base class for all errors raised by this package."""


class ShapeError(AdvlabError):
    """Incompatible tensor or layer shapes."""


class ConfigError(AdvlabError):
    """Invalid configuration value or missing key/artifact."""


class ParseError(AdvlabError):
    """Malformed input file (IDX/CSV/JSON)."""


class FitError(AdvlabError):
    """A model fit could not be carried out (degenerate data, divergence)."""
