"""Exception types shared across the package."""


class ShapeError(ValueError):
    """Operands have incompatible or malformed shapes."""


class ContractError(ValueError):
    """An input violates a documented precondition (not a shape issue)."""


class SingularityError(ArithmeticError):
    """A matrix factorization failed even after ridge escalation."""


class ConfigError(ValueError):
    """A config file, CLI argument combination, or spec object is invalid."""


class DivergenceError(RuntimeError):
    """Training produced a non-finite loss. Carries the failing step index."""

    def __init__(self, step: int, message: str = ""):
        self.step = step
        super().__init__(message or f"non-finite loss at step {step}")
