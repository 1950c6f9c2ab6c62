"""Exception types shared across the package."""


class ModelValidationError(ValueError):
    """A model's nonlinearities violate the structural assumptions."""


class StructuralError(RuntimeError):
    """A geometric construction (root, intersection) that the wave theory
    guarantees could not be located numerically."""


class CflViolationError(RuntimeError):
    """A time step moved the saturation out of its admissible range."""


class ConservationError(RuntimeError):
    """The conserved quantity c*s + a(c) left the attainable range of c."""


class ConfigError(ValueError):
    """Bad experiment configuration or command-line input."""


class CheckFailure(RuntimeError):
    """A requested consistency check on computed output did not hold."""
