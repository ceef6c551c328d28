from dataclasses import dataclass
from enum import Enum
from typing import Iterable, List, Optional


class Severity(Enum):
    ERROR = "error"
    WARNING = "warning"


@dataclass(frozen=True)
class Span:
    """Position of a construct in its source text (1-based line and column)."""
    line: int
    column: int
    length: int = 1


@dataclass(frozen=True)
class Diagnostic:
    severity: Severity
    rule: str
    message: str
    span: Optional[Span] = None

    @classmethod
    def error(cls, rule: str, message: str, span: Optional[Span] = None) -> "Diagnostic":
        return cls(Severity.ERROR, rule, message, span)

    @classmethod
    def warning(cls, rule: str, message: str, span: Optional[Span] = None) -> "Diagnostic":
        return cls(Severity.WARNING, rule, message, span)

    @property
    def is_error(self) -> bool:
        return self.severity is Severity.ERROR

    def __str__(self) -> str:
        where = f"{self.span.line}:{self.span.column}: " if self.span else ""
        return f"{where}{self.severity.value} [{self.rule}] {self.message}"


def errors_in(diagnostics: Iterable[Diagnostic]) -> List[Diagnostic]:
    return [d for d in diagnostics if d.is_error]
