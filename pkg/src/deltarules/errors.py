"""Exception hierarchy shared by every stage of the pipeline."""

from __future__ import annotations

from dataclasses import dataclass


@dataclass(frozen=True)
class Loc:
    line: int
    col: int
    file: str = "<input>"

    def __str__(self) -> str:
        return f"{self.file}:{self.line}:{self.col}"


class DeltaRulesError(Exception):
    """Base class for all errors raised by the package."""


class DSLError(DeltaRulesError):
    """A diagnostic tied (when possible) to a source location."""

    severity = "error"

    def __init__(self, message: str, loc: Loc | None = None):
        super().__init__(message)
        self.message = message
        self.loc = loc

    def render(self, file: str | None = None) -> str:
        if self.loc is None:
            where = file or "<input>"
        else:
            where = f"{file or self.loc.file}:{self.loc.line}:{self.loc.col}"
        return f"{where}: {self.severity}: {self.message}"

    def __str__(self) -> str:
        return self.render()


class ParseError(DSLError):
    pass


class ResolveError(DSLError):
    pass


class StratificationError(DSLError):
    pass


class CompileError(DSLError):
    """Raised when a rule cannot be turned into demons."""


class TranslationError(CompileError):
    """No rewrite chain isolates the sought variable."""


class NotInvertible(DeltaRulesError):
    """Signals that recursive inversion failed; callers may re-translate."""


class InfiniteDomain(DeltaRulesError):
    """Attempt to enumerate a domain that is not finite."""


class StoreError(DeltaRulesError):
    pass


class ValuationError(StoreError):
    """Mono operation on a multi relation or the reverse."""


class RangeError(StoreError):
    pass


class WorldError(DeltaRulesError):
    pass


class PropagationDepthError(DeltaRulesError):
    def __init__(self, message: str, rules: list[str]):
        super().__init__(message)
        self.rules = rules


class Contradiction(DeltaRulesError):
    """Failure signal raised by conclusions; caught by ``branch``."""


class RuntimeDSLError(DSLError):
    pass


class Diagnostic(DSLError):
    """A non-fatal diagnostic (warning)."""

    severity = "warning"
