# stieltjes_lab/app/errors.py
from __future__ import annotations

import logging
from typing import Any, Optional

# Every raise site passes the measured quantity (residual, condition estimate,
# eigenvalue, witness) through ``details`` so the CLI can report it verbatim.

from .reports import plain

log = logging.getLogger(__name__)

EXIT_OK = 0
EXIT_VIOLATION = 1
EXIT_INPUT_ERROR = 2
EXIT_NUMERICAL_FAILURE = 3


class StieltjesLabError(Exception):
    """Base class for every error raised by the library."""

    exit_code = EXIT_NUMERICAL_FAILURE

    def __init__(self, message: str = "", **details: Any) -> None:
        super().__init__(message or self.__class__.__name__)
        self.message = message or self.__class__.__name__
        self.details = dict(details)

    def to_payload(self) -> dict[str, Any]:
        payload: dict[str, Any] = {
            "ok": False,
            "error": self.__class__.__name__,
            "code": self.exit_code,
            "message": self.message,
        }
        for key, value in self.details.items():
            payload.setdefault(key, plain(value))
        return payload


class InputError(StieltjesLabError):
    exit_code = EXIT_INPUT_ERROR


class ViolationError(StieltjesLabError):
    exit_code = EXIT_VIOLATION


class NumericalFailure(StieltjesLabError):
    exit_code = EXIT_NUMERICAL_FAILURE


# input errors
class DimensionMismatch(InputError):
    pass


class ShapeMismatch(InputError):
    pass


class ParseError(InputError):
    pass


class BadPoint(InputError):
    pass


class GridDegenerate(InputError):
    pass


class EmptyDomain(InputError):
    pass


class NotContraction(InputError):
    pass


class NotHermitian(InputError):
    pass


class NotPSD(InputError):
    pass


class NotDecomposable(InputError):
    pass


class NotNonnegativeSelfadjoint(InputError):
    pass


class NotSectorial(InputError):
    pass


class NotAnOperator(InputError):
    pass


class CouplingMismatch(InputError):
    pass


class HypothesisViolated(InputError):
    pass


class PoleHit(InputError):
    pass


# violations
class IdentityResidualExceeded(ViolationError):
    pass


class MembershipViolated(ViolationError):
    pass


class SignViolation(ViolationError):
    pass


class BoundViolated(ViolationError):
    pass


# numerical failures
class IllConditioned(NumericalFailure):
    pass


class NotInResolventSet(NumericalFailure):
    pass


class NoConvergence(NumericalFailure):
    pass


class NonFiniteEntries(NumericalFailure):
    pass


def exit_code_for(exc: BaseException) -> int:
    """Map any exception onto the CLI exit-code contract."""
    if isinstance(exc, StieltjesLabError):
        return exc.exit_code
    if isinstance(exc, OSError):
        return EXIT_INPUT_ERROR
    log.error("Unexpected exception", exc_info=exc)
    return EXIT_NUMERICAL_FAILURE


def error_payload(exc: BaseException, *, command: Optional[str] = None) -> dict[str, Any]:
    if isinstance(exc, StieltjesLabError):
        payload = exc.to_payload()
    else:
        payload = {
            "ok": False,
            "error": exc.__class__.__name__,
            "code": exit_code_for(exc),
            "message": str(exc),
        }
    if command:
        payload["command"] = command
    return payload


__all__ = [
    "EXIT_OK",
    "EXIT_VIOLATION",
    "EXIT_INPUT_ERROR",
    "EXIT_NUMERICAL_FAILURE",
    "StieltjesLabError",
    "InputError",
    "ViolationError",
    "NumericalFailure",
    "DimensionMismatch",
    "ShapeMismatch",
    "ParseError",
    "BadPoint",
    "GridDegenerate",
    "EmptyDomain",
    "NotContraction",
    "NotHermitian",
    "NotPSD",
    "NotDecomposable",
    "NotNonnegativeSelfadjoint",
    "NotSectorial",
    "NotAnOperator",
    "CouplingMismatch",
    "HypothesisViolated",
    "PoleHit",
    "IdentityResidualExceeded",
    "MembershipViolated",
    "SignViolation",
    "BoundViolated",
    "IllConditioned",
    "NotInResolventSet",
    "NoConvergence",
    "NonFiniteEntries",
    "exit_code_for",
    "error_payload",
]
