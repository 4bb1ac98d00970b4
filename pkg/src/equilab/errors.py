"""Exception types shared across the package."""


class EquilabError(Exception):
    """Base class for all package-specific errors."""


class ConfigError(EquilabError):
    """Invalid configuration; carries the list of violated invariants."""

    def __init__(self, violations):
        if isinstance(violations, str):
            violations = [violations]
        self.violations = list(violations)
        super().__init__("; ".join(self.violations))


class NonConvergenceError(EquilabError):
    """Iterative solver stopped at max_iter; carries the achieved residual."""

    def __init__(self, message, residual=None, iterations=None):
        super().__init__(message)
        self.residual = residual
        self.iterations = iterations


class QuadratureError(EquilabError):
    """Quadrature failed its self-convergence check."""


class PrecisionError(EquilabError):
    """Working precision is insufficient; escalation requested."""


class PrecisionDiagnosticWarning(UserWarning):
    """Non-fatal diagnostic about precision-limited output."""
