"""Exception hierarchy shared across the package."""

from __future__ import annotations

from pathlib import Path


class VaeConformalError(Exception):
    """Base class for all package errors."""


class StructuralError(VaeConformalError, ValueError):
    """Raised when tensor shapes or dimensions do not line up."""


class ContractViolation(VaeConformalError, ValueError):
    """Raised when an operation's precondition does not hold."""


class UsageError(VaeConformalError, RuntimeError):
    """Raised when an API is called out of order (e.g. backward without a trace)."""


class NumericError(VaeConformalError, ArithmeticError):
    """Raised when a NaN or Inf shows up where a finite value is required."""

    def __init__(self, message: str, *, term: str | None = None, epoch: int | None = None) -> None:
        self.term = term
        self.epoch = epoch
        details = []
        if term is not None:
            details.append(f"term={term}")
        if epoch is not None:
            details.append(f"epoch={epoch}")
        suffix = f" ({', '.join(details)})" if details else ""
        super().__init__(f"{message}{suffix}")


class FormatError(VaeConformalError):
    """Raised when a persisted artifact cannot be parsed."""

    def __init__(self, path: Path, message: str, line: int | None = None) -> None:
        self.path = path
        self.line = line
        location = f"{path}:{line}" if line is not None else str(path)
        super().__init__(f"{location}: {message}")


class ConfigError(VaeConformalError):
    """Raised when configuration loading, validation or artifact wiring fails."""

    def __init__(self, message: str, path: Path | None = None) -> None:
        self.path = path
        super().__init__(f"{path}: {message}" if path is not None else message)
