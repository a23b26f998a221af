"""Exception types shared across the package."""


class InvalidArgument(ValueError):
    """An argument is outside the documented domain of an operation."""


class NumericFailure(ArithmeticError):
    """A numerical routine produced a non-finite or untrustworthy value."""


class IllConditioned(NumericFailure):
    """A linear system is too ill-conditioned for the working precision."""

    def __init__(self, n: int, condition: float, budget: float):
        self.n = n
        self.condition = condition
        self.budget = budget
        super().__init__(
            f"Hankel system of degree n={n} has condition estimate {condition:.3e}, "
            f"beyond the precision budget {budget:.3e}"
        )


class OutOfRange(NumericFailure):
    """A root bracket could not be established inside the allowed range."""


class UsageError(Exception):
    """Malformed user input (CLI flags or distribution spec files)."""
