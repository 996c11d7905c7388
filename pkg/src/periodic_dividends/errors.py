"""Exception types shared across the package."""


class ModelError(ValueError):
    """Invalid model or problem parameters."""

    def __init__(self, violations):
        if isinstance(violations, str):
            violations = [violations]
        self.violations = list(violations)
        super().__init__("; ".join(self.violations))


class DomainError(ValueError):
    """Argument outside the domain of a function."""


class NumericalError(RuntimeError):
    """Root bracketing, convergence or conditioning failure."""
