"""
Simulation models
Session configuration, fault specs, transcript events and ledger blocks
"""

from enum import Enum
from typing import Dict, List, Optional

from pydantic import BaseModel, ConfigDict, Field, field_validator, model_validator


class Role(str, Enum):
    TTP = "TTP"
    BS = "BS"
    BR = "BR"
    MINER = "Miner"


class Phase(str, Enum):
    SETUP = "setup"
    KEYGEN = "keygen"
    SIGNING = "signing"
    AGGREGATION = "aggregation"
    SUBMISSION = "submission"
    VERIFICATION = "verification"


class FaultKind(str, Enum):
    DROP = "drop"
    TAMPER = "tamper"
    WRONG_KEY = "wrong-key"


class FaultSpec(BaseModel):
    """
    One injected fault.

    drop/tamper target the `index`-th message sent in `phase` (0-based, send order);
    tamper flips the lowest bit of the payload byte at `offset mod len(payload)`.
    Signing-phase shares fold the offset into the header and (z, c~) part instead,
    `offset mod (6 + |(z, c~)|)`, so an offset that points into the seed
    ciphertext lands in z or c~.
    wrong-key makes BS number `index` sign with a key that does not match its public key.
    """

    model_config = ConfigDict(frozen=True)

    kind: FaultKind
    index: int = Field(..., ge=0, description="Message index within the phase, or BS index for wrong-key")
    phase: Phase = Field(Phase.SIGNING, description="Phase whose messages are counted")
    offset: int = Field(0, ge=0, description="Payload byte to flip for tamper")

    @classmethod
    def parse(cls, text: str) -> "FaultSpec":
        """`drop:3`, `tamper:1@120`, `wrong-key:2`, optionally prefixed with `phase/`"""
        phase = Phase.SIGNING
        body = text.strip()
        if "/" in body:
            phase_name, body = body.split("/", 1)
            phase = Phase(phase_name)
        kind_name, _, target = body.partition(":")
        if not target:
            raise ValueError(f"fault '{text}' needs a target, e.g. drop:0")
        index_text, _, offset_text = target.partition("@")
        return cls(
            kind=FaultKind(kind_name),
            index=int(index_text),
            phase=phase,
            offset=int(offset_text) if offset_text else 0,
        )

    @classmethod
    def parse_list(cls, text: Optional[str]) -> List["FaultSpec"]:
        if not text:
            return []
        return [cls.parse(item) for item in text.split(",") if item.strip()]


class SimConfig(BaseModel):
    """Everything that determines a session; equal configs give equal transcripts"""

    n_signers: int = Field(3, ge=1, le=64, description="Number of Bitcoin Senders")
    participants: Optional[List[int]] = Field(None, description="Participating BS indices (1-based); default all")
    master_seed: bytes = Field(..., description="32-byte seed every actor's randomness derives from")
    faults: List[FaultSpec] = Field(default_factory=list)
    message: Optional[bytes] = Field(None, description="Message to sign; default is a mock transaction")
    recipient: str = Field("BR", min_length=1, description="Recipient address for the mock transaction")
    amount: int = Field(100000, gt=0, description="Amount for the mock transaction")
    params_name: str = Field("production", description="Parameter set name")

    @field_validator("master_seed")
    @classmethod
    def validate_seed(cls, v: bytes) -> bytes:
        if len(v) != 32:
            raise ValueError("master_seed must be 32 bytes")
        return v

    @model_validator(mode="after")
    def validate_participants(self):
        if self.participants is None:
            self.participants = list(range(1, self.n_signers + 1))
        if not self.participants:
            raise ValueError("participating subset must not be empty")
        if len(set(self.participants)) != len(self.participants):
            raise ValueError("participants must be distinct")
        for index in self.participants:
            if not 1 <= index <= self.n_signers:
                raise ValueError(f"participant {index} outside [1, {self.n_signers}]")
        self.participants = sorted(self.participants)
        for fault in self.faults:
            if fault.kind == FaultKind.WRONG_KEY and not 1 <= fault.index <= self.n_signers:
                raise ValueError(f"wrong-key fault names BS {fault.index}, outside [1, {self.n_signers}]")
        return self


class TranscriptEvent(BaseModel):
    """One message (or local step) as observed by the scheduler"""

    model_config = ConfigDict(populate_by_name=True)

    seq: int
    phase: Phase
    sender: str = Field(..., alias="from")
    receiver: str = Field(..., alias="to")
    size: int
    sha3: str = Field(..., description="SHA3-256 of the payload, hex")
    outcome: str
    local: bool = Field(False, description="Local computation rather than a sent message")


class Verdict(BaseModel):
    status: str = Field(..., description="accepted or rejected")
    reason: Optional[str] = Field(None, description="aborted, key, share, signature or timeout")

    @property
    def accepted(self) -> bool:
        return self.status == "accepted"


class Block(BaseModel):
    """Miner ledger entry"""

    model_config = ConfigDict(frozen=True)

    height: int
    prev_digest: str
    tx_digest: str
    sig_digest: str
    block_digest: str


class Transcript(BaseModel):
    events: List[TranscriptEvent] = Field(default_factory=list)
    verdict: Verdict = Field(default_factory=lambda: Verdict(status="rejected", reason="timeout"))
    address: Optional[str] = None
    message: Optional[str] = Field(None, description="Transaction the Miner accepted, hex")
    signature: Optional[str] = Field(None, description="Accepted multi-signature WireObject, hex")
    ledger: List[Block] = Field(default_factory=list)

    def to_jsonl(self) -> str:
        """One event per line, then the verdict line"""
        lines = [event.model_dump_json(by_alias=True, exclude={"local"}) for event in self.events]
        lines.append(self.verdict.model_dump_json())
        return "\n".join(lines) + "\n"


class MessageCounts(BaseModel):
    per_phase: Dict[str, int]
    signing: int
    one_send_per_pair: bool


class MockTransaction(BaseModel):
    senders: List[str]
    recipient: str
    amount: int
