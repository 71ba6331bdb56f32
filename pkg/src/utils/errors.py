"""
Error taxonomy for genericlab

Every failure raised by the library carries an ErrorCategory; the CLI maps
categories onto its exit-code contract. Verification outcomes (trace
verdicts, failing certificate rows, undecided regularity) are values and are
never raised.
"""

from enum import Enum
from typing import Any, Dict, Optional


class ErrorCategory(Enum):
    """Error categories used for classification and exit codes"""
    PRECONDITION = "precondition"
    BUDGET = "budget"
    INPUT = "input"
    UNKNOWN = "unknown"


EXIT_CODES = {
    ErrorCategory.PRECONDITION: 1,
    ErrorCategory.BUDGET: 1,
    ErrorCategory.INPUT: 2,
    ErrorCategory.UNKNOWN: 2,
}


class LabError(Exception):
    """Base class for all library errors"""

    category = ErrorCategory.UNKNOWN

    def __init__(self, message: str, details: Optional[Dict[str, Any]] = None):
        super().__init__(message)
        self.message = message
        self.details = details or {}

    def to_dict(self) -> Dict[str, Any]:
        return {
            'category': self.category.value,
            'message': self.message,
            'details': {key: str(value) for key, value in self.details.items()},
        }


class PreconditionError(LabError, ValueError):
    """An operation was called outside its documented preconditions"""
    category = ErrorCategory.PRECONDITION


class AlphabetError(PreconditionError):
    """A symbol lies outside the declared alphabet"""


class HorizonExceeded(PreconditionError):
    """A requested horizon reaches past a built prefix"""


class BudgetExceeded(PreconditionError):
    """A construction would exceed its configured length cap"""
    category = ErrorCategory.BUDGET


class InputError(LabError):
    """Unreadable or malformed input"""
    category = ErrorCategory.INPUT


def exit_code_for(error: BaseException) -> int:
    """Map an exception to the CLI exit code"""
    if isinstance(error, LabError):
        return EXIT_CODES[error.category]
    return 2
