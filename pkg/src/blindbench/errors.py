"""Exception taxonomy shared across the package.

Every error carries a stable machine-readable ``code`` so the HTTP layer
and the CLI can map failures without string matching.
"""

from __future__ import annotations


class BlindbenchError(Exception):
    """Base class for all package errors."""

    code = "ERROR"

    def __init__(self, detail: str = ""):
        self.detail = detail
        super().__init__(detail or self.code)


# --- numeric encoding ------------------------------------------------------

class BudgetExceeded(BlindbenchError):
    code = "BUDGET_EXCEEDED"


class PlaintextOutOfRange(BlindbenchError):
    code = "PLAINTEXT_OUT_OF_RANGE"


# --- keys / paillier -------------------------------------------------------

class WeakKeyRejected(BlindbenchError):
    code = "WEAK_KEY_REJECTED"


class KeyMismatch(BlindbenchError):
    code = "KEY_MISMATCH"


class DecryptFailure(BlindbenchError):
    code = "DECRYPT_FAILURE"


class KeyFileError(BlindbenchError):
    code = "KEY_FILE_ERROR"


# --- oblivious transfer ----------------------------------------------------

class InvalidGroupElement(BlindbenchError):
    code = "INVALID_GROUP_ELEMENT"


class PayloadLengthMismatch(BlindbenchError):
    code = "PAYLOAD_LENGTH_MISMATCH"


class UnwrapFailure(BlindbenchError):
    code = "UNWRAP_FAILURE"


# --- integrity -------------------------------------------------------------

class WrongTagCount(BlindbenchError):
    code = "WRONG_TAG_COUNT"


# --- protocol engine -------------------------------------------------------

class PhaseViolation(BlindbenchError):
    code = "PHASE_VIOLATION"


class DuplicateMessage(BlindbenchError):
    code = "DUPLICATE_MESSAGE"


class MissingInputs(BlindbenchError):
    code = "MISSING_INPUTS"


class PeerGroupTooSmall(BlindbenchError):
    code = "PEER_GROUP_TOO_SMALL"


# --- transport -------------------------------------------------------------

class SchemaViolation(BlindbenchError):
    code = "SCHEMA_VIOLATION"


class UnknownSession(BlindbenchError):
    code = "UNKNOWN_SESSION"


class NotEnrolled(BlindbenchError):
    code = "NOT_ENROLLED"


class CorruptLog(BlindbenchError):
    code = "CORRUPT_LOG"


class SessionRateLimited(BlindbenchError):
    code = "SESSION_RATE_LIMITED"


class TransportError(BlindbenchError):
    code = "TRANSPORT_ERROR"


#: code -> exception class, used by the HTTP client to re-raise server errors.
ERROR_CODES = {
    cls.code: cls
    for cls in [
        BudgetExceeded, PlaintextOutOfRange, WeakKeyRejected, KeyMismatch,
        DecryptFailure, KeyFileError, InvalidGroupElement,
        PayloadLengthMismatch, UnwrapFailure, WrongTagCount, PhaseViolation,
        DuplicateMessage, MissingInputs, PeerGroupTooSmall, SchemaViolation,
        UnknownSession, NotEnrolled, CorruptLog, SessionRateLimited,
        TransportError,
    ]
}
