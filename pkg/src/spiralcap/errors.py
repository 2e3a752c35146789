"""Exception hierarchy shared by the library and the CLI exit-code mapping."""


class SpiralCapError(Exception):
    """Base class for all package errors."""


class DomainError(SpiralCapError, ValueError):
    """Argument outside the mathematical domain of a function."""


class ConfigError(SpiralCapError, ValueError):
    """Invalid physical or discretization parameters."""


class MeshError(SpiralCapError):
    """Mesh construction or validation failure."""


class MshParseError(MeshError):
    """Malformed MSH input; ``line`` is 1-based (0 when unknown)."""

    def __init__(self, message, line=0):
        self.line = line
        super().__init__(f"line {line}: {message}" if line else message)


class SolverError(SpiralCapError):
    """Linear solver failure."""


class NonConvergenceError(SolverError):
    def __init__(self, message, residual):
        self.residual = residual
        super().__init__(f"{message} (relative residual {residual:.3e})")


class SingularSystemError(SolverError):
    pass


class QuadratureError(SpiralCapError):
    pass


class OptimizationError(SpiralCapError):
    pass
