"""Exception types and the diagnostic record shared by every stage."""

from __future__ import annotations

from dataclasses import dataclass


@dataclass(frozen=True)
class Diagnostic:
    severity: str  # "error" or "warning"
    message: str
    line: int = 1
    column: int = 1
    origin: str = "<input>"

    def __str__(self) -> str:
        return f"{self.origin}:{self.line}:{self.column}: {self.severity}: {self.message}"


class BCError(Exception):
    """Base class for all toolkit errors."""


class UnknownSort(BCError):
    pass


class CyclicSortHierarchy(BCError):
    pass


class UnassignedConstant(BCError):
    pass


class NonIntegerArithmetic(BCError):
    pass


class ParseFailure(BCError):
    """Raised by the convenience wrappers when parsing produced diagnostics."""

    def __init__(self, diagnostics: list[Diagnostic]):
        self.diagnostics = list(diagnostics)
        super().__init__("\n".join(str(d) for d in self.diagnostics))


class ValidationFailure(BCError):
    def __init__(self, diagnostics: list[Diagnostic]):
        self.diagnostics = list(diagnostics)
        super().__init__("\n".join(str(d) for d in self.diagnostics))


class AdditiveHeadMisuse(BCError):
    pass


class ImpossibleContainsAction(BCError):
    pass


class DomainEmpty(BCError):
    pass


class GroundingBudgetExceeded(BCError):
    pass


class HorizonNegative(BCError):
    pass


class SolverBudgetExceeded(BCError):
    pass


class StateSpaceTooLarge(BCError):
    pass


class MissingFencedBlock(BCError):
    pass
