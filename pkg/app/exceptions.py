"""
Exception hierarchy shared by the scheme, codec and simulator layers
"""

from enum import Enum


class RzmsError(Exception):
    """Base class for every error raised by the package"""


class ParamsError(RzmsError):
    """Parameter set violates its invariants or is unknown"""


class DimensionError(RzmsError):
    """Matrix/vector shapes do not line up"""


class SetupError(RzmsError):
    """System setup could not produce a public seed"""


class SigningAborted(RzmsError):
    """Rejection loop exceeded its retry limit"""

    def __init__(self, attempts: int):
        super().__init__(f"signing aborted after {attempts} attempts; check the parameter set")
        self.attempts = attempts


class ShareRejectReason(str, Enum):
    """Which share check failed"""
    NORM = "norm"
    CHALLENGE_MISMATCH = "challenge-mismatch"
    EXTRACTION_INCONSISTENT = "extraction-inconsistent"


class ShareRejected(RzmsError):
    """A peer's signature share failed verification or extraction"""

    def __init__(self, reason: ShareRejectReason, detail: str = ""):
        message = f"share rejected ({reason.value})"
        if detail:
            message += f": {detail}"
        super().__init__(message)
        self.reason = reason


class MessageMismatch(RzmsError):
    """Extracted shares were produced over different messages"""


class CodecError(RzmsError):
    """Malformed, truncated or non-canonical wire data"""


class TransactionError(RzmsError):
    """Mock transaction fields are missing or malformed"""
