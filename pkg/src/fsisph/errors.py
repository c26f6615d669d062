"""Exception types raised by the solver."""


class FsiSphError(Exception):
    """Base class for all solver errors."""


class InvalidParameterError(FsiSphError):
    """A physical or numerical parameter is out of its valid range."""


class DegeneratePairError(FsiSphError):
    """Two distinct particles are exactly coincident."""


class CorruptStateError(FsiSphError):
    """A particle field contains a non-finite value."""


class SetupError(FsiSphError):
    """Scenario or correction-matrix setup failed."""


class ElementInversionError(FsiSphError):
    """A solid particle's deformation gradient lost positive determinant."""


class ConfigError(FsiSphError):
    """A run configuration file or constraint region is invalid."""


class EmptyWindowError(FsiSphError):
    """Time-average finalization requested before any substep accumulated."""


class InsufficientSignalError(FsiSphError):
    """A probe series holds too few oscillations for amplitude/frequency extraction."""
