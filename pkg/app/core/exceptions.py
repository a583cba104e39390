"""Exceptions shared by the optimization engine and the experiment runner."""


class BayesOptError(Exception):
    """Base class for every error raised by the project."""


class InputError(BayesOptError, ValueError):
    """Raised when a caller passes an invalid argument or configuration."""


class NumericalError(BayesOptError, ArithmeticError):
    """Raised when a factorization or a variance computation breaks down."""


class RunError(BayesOptError):
    """Raised when a Bayesian optimization run fails at a given iteration."""

    def __init__(self, message: str, *, seed: int, iteration: int) -> None:
        super().__init__(f"{message} (seed={seed}, t={iteration})")
        self.seed = seed
        self.iteration = iteration


class PlanError(BayesOptError):
    """Raised when an experiment plan file is invalid.

    :param message: description of the problem.
    :param path: plan file the error was found in.
    :param line: 1-based line number of the offending key or section, if known.
    """

    def __init__(self, message: str, *, path: str = "<plan>", line: int | None = None) -> None:
        location = f"{path}:{line}" if line is not None else path
        super().__init__(f"{location}: {message}")
        self.path = path
        self.line = line


class SchemaError(BayesOptError):
    """Raised when a results file misses a required column."""

    def __init__(self, column: str, *, path: str = "results.csv") -> None:
        super().__init__(f"{path}: missing required column '{column}'")
        self.column = column


__all__ = [
    "BayesOptError",
    "InputError",
    "NumericalError",
    "PlanError",
    "RunError",
    "SchemaError",
]
