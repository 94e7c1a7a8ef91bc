"""Exception hierarchy shared by every safeplan module."""

from __future__ import annotations

from dataclasses import dataclass


@dataclass(frozen=True)
class SourceSpan:
    file: str
    line: int
    col_start: int
    col_end: int

    def __str__(self) -> str:
        return f"{self.file}:{self.line}:{self.col_start}-{self.col_end}"


class SafePlanError(Exception):
    """Base class. ``span`` is set for diagnostics that point into a source file."""

    def __init__(self, message: str, span: SourceSpan | None = None):
        self.message = message
        self.span = span
        super().__init__(message)

    def __str__(self) -> str:
        return f"{self.span}: {self.message}" if self.span else self.message


# domain model
class ArityMismatch(SafePlanError):
    pass


class TypeMismatch(SafePlanError):
    pass


class UnknownSchema(SafePlanError):
    pass


class ReservedFluentDeclared(SafePlanError):
    pass


class BindingArityMismatch(SafePlanError):
    pass


class InvalidDomain(SafePlanError):
    """Structural problem in a domain/problem that has no more specific class."""


# parser
class PddlSyntaxError(SafePlanError):
    pass


class UnsupportedConstruct(SafePlanError):
    pass


class UnknownSymbol(SafePlanError):
    pass


class UnknownSchemaInRule(UnknownSymbol):
    pass


# execution
class PreconditionViolated(SafePlanError):
    def __init__(self, message: str, unsatisfied: tuple[str, ...] = ()):
        self.unsatisfied = unsatisfied
        super().__init__(message)


class NumericOverflow(SafePlanError):
    pass


# planner
class Unsolvable(SafePlanError):
    pass


class LimitExceeded(SafePlanError):
    def __init__(self, message: str, which: str):
        self.which = which
        super().__init__(message)


# metrics / analysis
class DuplicateRecord(SafePlanError):
    pass


class EmptyInput(SafePlanError):
    pass


class DegenerateX(SafePlanError):
    pass


class TooFewPoints(SafePlanError):
    pass


class DenominatorSlopeNearZero(SafePlanError):
    pass


class ZeroPooledVariance(SafePlanError):
    pass


class MissingRecord(SafePlanError):
    pass


# noise
class VocabularyCollision(SafePlanError):
    pass


# runner
class ProviderError(SafePlanError):
    pass


class ProviderTimeout(ProviderError):
    pass


class ProviderHttpError(ProviderError):
    def __init__(self, message: str, status: int):
        self.status = status
        super().__init__(message)


class MissingPlanFile(ProviderError):
    pass
