"""Exception types shared across the pipeline."""


class ConfigError(ValueError):
    """A parameter or configuration value violates its documented bounds."""


class FormatError(ValueError):
    """An input file is not in a supported image format."""


class DegenerateSampleError(ValueError):
    """A transform estimate was requested from degenerate correspondences."""


class RegistrationError(RuntimeError):
    """No transform with sufficient consensus could be found for a pair."""
