"""Exception types raised by gaugekit operations."""


class GaugekitError(Exception):
    """Base class for all gaugekit errors."""


class NonTransverseInput(GaugekitError):
    """A field required to be divergence-free has too much longitudinal content."""


class PoincareZeroModePresent(GaugekitError):
    """The multipolar line integral is undefined for a field with a nonzero box average."""


class NonNeutralSource(GaugekitError):
    """Periodic inversions of the divergence require a net-neutral source."""


class UnstableTimestep(GaugekitError):
    """Requested dt exceeds the leapfrog stability bound of the grid."""


class WrapAroundWindowExceeded(GaugekitError):
    """Requested time lies beyond the window where periodic images are causally excluded."""


class ConfigError(GaugekitError):
    """A run configuration is malformed or violates a module precondition."""
