"""Exception hierarchy shared by every engine.

Each class carries the process exit code the command line front end uses
for it: 1 for domain violations, 2 for capacity and budget limits, 3 for
I/O and parse failures.
"""
from typing import Any, Dict, List, Optional, Sequence


class SpanoidError(Exception):
    """Base class for all errors raised by spanoid_lab"""

    exit_code = 1


class ConstructionError(SpanoidError, ValueError):
    """A spanoid, family, code or instance could not be built from its inputs"""


class ValidationError(SpanoidError, ValueError):
    """An input violates a structural requirement; `witness` shows where"""

    def __init__(self, message: str, witness: Any = None):
        super().__init__(message)
        self.witness = witness


class DomainViolation(SpanoidError):
    """A computed result disagrees with a certified property"""


class LpError(SpanoidError):
    """The exact LP solver could not return an optimum"""


class InfeasibleError(LpError):
    """Phase one ended with positive infeasibility.

    `multipliers` are the phase-one dual values per original row; together
    with `rows` (names of rows with nonzero multiplier) they form a
    Farkas-style certificate.
    """

    def __init__(self, message: str, rows: Sequence[str], multipliers: Sequence[Any]):
        super().__init__(message)
        self.rows = list(rows)
        self.multipliers = list(multipliers)


class UnboundedError(LpError):
    """The objective improves without bound along `ray` (variable name -> direction)"""

    def __init__(self, message: str, ray: Dict[str, Any]):
        super().__init__(message)
        self.ray = ray


class CapacityError(SpanoidError):
    """An enumeration would exceed a configured cap"""

    exit_code = 2


class BudgetError(CapacityError):
    """A search ran out of budget; the best known bounds are attached"""

    def __init__(self, message: str, lower: Optional[Any] = None, upper: Optional[Any] = None):
        super().__init__(message)
        self.lower = lower
        self.upper = upper


class RetriesExhausted(BudgetError):
    """A randomized procedure failed on every allowed attempt"""

    def __init__(self, message: str, transcript: Optional[List[Any]] = None, **bounds: Any):
        super().__init__(message, bounds.get("lower"), bounds.get("upper"))
        self.transcript = transcript or []


class FormatError(SpanoidError):
    """A file could not be read or parsed"""

    exit_code = 3

    def __init__(self, message: str, line: Optional[int] = None):
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)
        self.line = line
