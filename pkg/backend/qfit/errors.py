"""Exception hierarchy shared by every qfit module.

Input problems derive from ``ValueError`` as well as ``FittingError`` so a
caller that only catches built-in errors still sees them; search-state
problems derive from ``RuntimeError``.
"""

from __future__ import annotations

from typing import Optional


class FittingError(Exception):
    """Base class for all qfit errors."""


class SchemaMismatch(FittingError, ValueError):
    pass


class ArityMismatch(FittingError, ValueError):
    pass


class WellDefinednessError(FittingError, ValueError):
    """A distinguished value lies outside the active domain."""


class NotCAcyclic(FittingError, ValueError):
    pass


class NonBinarySchema(FittingError, ValueError):
    pass


class NotATree(FittingError, ValueError):
    pass


class InvalidParameter(FittingError, ValueError):
    pass


class DocumentError(FittingError, ValueError):
    """Malformed input document; ``location`` names the line or field."""

    def __init__(self, message: str, location: Optional[str] = None):
        self.message = message
        self.location = location
        super().__init__(f"{location}: {message}" if location else message)


class FrontierNotExists(FittingError, RuntimeError):
    pass


class BudgetExceeded(FittingError, RuntimeError):
    def __init__(self, budget: int):
        self.budget = budget
        super().__init__(f"Search budget of {budget} nodes exceeded")


class CapTooSmall(FittingError, RuntimeError):
    def __init__(self, cap: int, detail: str = ""):
        self.cap = cap
        message = f"Size cap {cap} is too small"
        super().__init__(f"{message}: {detail}" if detail else message)
