"""Exception types raised across the package."""


class BChaosError(Exception):
    """Base class for all library errors."""


class LevelError(BChaosError, ValueError):
    """A truncation or cylinder level is out of range or inconsistent."""


class SupportError(BChaosError, ValueError):
    """A coefficient support escapes the domain an object is materialized on."""


class SymmetryError(BChaosError, ValueError):
    """An operation that needs the symmetric Bernoulli measure got another one."""


class CertificateError(BChaosError, ValueError):
    """A growth or integrability certificate does not hold on the materialized entries."""

    def __init__(self, message, witness=None):
        super().__init__(message)
        self.witness = witness


class PartitionError(BChaosError, ValueError):
    """Events handed in as a partition overlap or live on different levels."""


class ConvergenceError(BChaosError, RuntimeError):
    """Power iteration hit its iteration cap.

    ``vector`` is the last iterate and ``residual`` its relative eigen-residual.
    """

    def __init__(self, message, value, vector, residual, iterations):
        super().__init__(message)
        self.value = value
        self.vector = vector
        self.residual = residual
        self.iterations = iterations
