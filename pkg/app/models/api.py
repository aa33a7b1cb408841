"""
HTTP request and response models
Binary values travel as lowercase hex; keys and signatures as hex WireObjects.
"""

from typing import Any, Dict, List, Optional

from pydantic import BaseModel, Field, field_validator

from app.models.ledger import BlockResponse
from app.models.simulation import MessageCounts, TranscriptEvent, Verdict


def _hex(value: Optional[str]) -> Optional[str]:
    if value is None:
        return value
    value = value.strip().lower()
    try:
        bytes.fromhex(value)
    except ValueError:
        raise ValueError("must be a hex string")
    return value


SIMULATION_OPENAPI_EXAMPLES: Dict[str, Dict[str, Any]] = {
    "two_of_three": {
        "summary": "Honest 2-of-3 session",
        "value": {"n_signers": 3, "participants": [1, 2], "seed": "00" * 32},
    },
    "tampered_share": {
        "summary": "Tamper the first share in flight",
        "value": {"n_signers": 3, "participants": [1, 2], "seed": "00" * 32, "faults": ["tamper:0@40"]},
    },
}


class ParamsResponse(BaseModel):
    """Active parameter set with derived constants and object sizes"""
    name: str
    n: int
    q: int
    k: int
    l: int
    gamma1: int
    gamma2: int
    tau: int
    eta: int
    beta: int
    alpha: int
    m_high: int
    acceptance_probability: float
    expected_attempts: float
    sizes: Dict[str, int]


class SetupRequest(BaseModel):
    security_level: int = Field(128, description="Security level in bits (only 128 is supported)")
    seed: Optional[str] = Field(None, description="Hex seed for a reproducible rho")

    @field_validator("seed")
    @classmethod
    def validate_hex(cls, v: Optional[str]) -> Optional[str]:
        return _hex(v)


class SetupResponse(BaseModel):
    success: bool
    message: str
    rho: Optional[str] = Field(None, description="Public seed, hex")
    error: Optional[str] = None


class KeygenRequest(BaseModel):
    rho: str = Field(..., description="Public seed from setup, hex (32 bytes)")
    seed: Optional[str] = Field(None, description="Signer seed, hex (32 bytes); random when omitted")

    @field_validator("rho", "seed")
    @classmethod
    def validate_hex(cls, v: Optional[str]) -> Optional[str]:
        return _hex(v)


class KeygenResponse(BaseModel):
    success: bool
    message: str
    public_key: Optional[str] = Field(None, description="Public key share WireObject, hex")
    secret_key: Optional[str] = Field(None, description="Secret key share WireObject, hex")
    address: Optional[str] = Field(None, description="Address of this single key")
    error: Optional[str] = None


class SignRequest(BaseModel):
    """Local multi-party signing: every signer's key pair is supplied"""
    public_keys: List[str] = Field(..., min_length=1, description="Public key WireObjects, hex, one per signer")
    secret_keys: List[str] = Field(..., min_length=1, description="Secret key WireObjects, hex, same order")
    message: str = Field(..., description="Message, hex")
    seed: Optional[str] = Field(None, description="Signing seed, hex (32 bytes); random when omitted")

    @field_validator("message", "seed")
    @classmethod
    def validate_hex(cls, v: Optional[str]) -> Optional[str]:
        return _hex(v)


class SignResponse(BaseModel):
    success: bool
    message: str
    signature: Optional[str] = Field(None, description="Multi-signature WireObject, hex")
    address: Optional[str] = None
    error: Optional[str] = None


class VerifyRequest(BaseModel):
    rho: str = Field(..., description="Public seed, hex")
    message: str = Field(..., description="Message, hex")
    signature: str = Field(..., description="Multi-signature WireObject, hex")

    @field_validator("rho", "message", "signature")
    @classmethod
    def validate_hex(cls, v: Optional[str]) -> Optional[str]:
        return _hex(v)


class VerifyResponse(BaseModel):
    valid: bool
    message: str


class SimulationRequest(BaseModel):
    n_signers: int = Field(3, ge=1, le=16)
    participants: Optional[List[int]] = Field(None, description="Participating signer indices (1-based)")
    seed: str = Field(..., description="Master seed, hex (32 bytes)")
    faults: List[str] = Field(default_factory=list, description="Fault specs such as drop:0, tamper:1@40, wrong-key:2")
    message: Optional[str] = Field(None, description="Message to sign, hex; default is a mock transaction")
    recipient: str = Field("BR", min_length=1)
    amount: int = Field(100000, gt=0)
    record: bool = Field(True, description="Persist the resulting block in the service ledger")

    @field_validator("seed", "message")
    @classmethod
    def validate_hex(cls, v: Optional[str]) -> Optional[str]:
        return _hex(v)


class SimulationResponse(BaseModel):
    verdict: Verdict
    address: Optional[str] = None
    counts: MessageCounts
    events: List[TranscriptEvent]
    block: Optional[BlockResponse] = Field(None, description="Block stored in the service ledger")
