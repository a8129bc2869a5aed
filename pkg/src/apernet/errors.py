"""Exception hierarchy shared by all apernet modules."""


class ApernetError(Exception):
    """Base class for errors raised by apernet."""


class DomainError(ApernetError, ValueError):
    """An argument lies outside the domain of an operation."""


class InjectivityError(ApernetError, ValueError):
    """The torus projection is not injective on the given set."""


class TransversalityError(ApernetError, ValueError):
    """A section plane is not transverse to the acting subspace."""


class ResonanceError(ApernetError, ArithmeticError):
    """An exact resonance ``m . v = 0`` made a sum infinite.

    The offending frequency vectors are stored on ``witnesses``.
    """

    def __init__(self, message, witnesses=()):
        super().__init__(message)
        self.witnesses = [tuple(int(c) for c in w) for w in witnesses]


class ConfigError(ApernetError, ValueError):
    """An experiment configuration failed validation."""
