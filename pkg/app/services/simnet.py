"""
Multi-party session simulator
TTP, n Bitcoin Senders, the Bitcoin Recipient and the Miner run as state
machines on a single-threaded, seeded message bus. Every delivery is
recorded in a replayable transcript.
"""

import heapq
import logging
import random
import struct
from dataclasses import dataclass, field, replace
from typing import Dict, List, Optional, Sequence, Set, Tuple

from app.exceptions import CodecError, RzmsError, ShareRejected, SigningAborted, TransactionError
from app.models.params import Params, get_params
from app.models.scheme import ExtractedShare, NonceState, PublicKeyShare, SecretKeyShare
from app.models.simulation import (
    Block,
    FaultKind,
    FaultSpec,
    MessageCounts,
    MockTransaction,
    Phase,
    Role,
    SimConfig,
    Transcript,
    TranscriptEvent,
    Verdict,
)
from app.services import codec, mscheme
from app.services.codec import WireKind
from app.services.ring_arith import get_ring
from app.services.sampling import DOMAIN_TRANSCRIPT, expand_a, hash_h

logger = logging.getLogger(__name__)

TX_MAGIC = b"RZTX"
GENESIS_DIGEST = bytes(32)
_U16 = struct.Struct("<H")
_U64 = struct.Struct("<Q")


# Mock transactions

def _field(value: str, what: str) -> bytes:
    if not value:
        raise TransactionError(f"{what} must not be empty")
    raw = value.encode("utf-8")
    if len(raw) > 0xFFFF:
        raise TransactionError(f"{what} longer than 65535 bytes")
    return _U16.pack(len(raw)) + raw


def build_mock_tx(senders: Sequence[str], recipient: str, amount: int) -> bytes:
    """RZTX || count || (len || sender)* || len || recipient || amount(8 B LE)"""
    if not senders:
        raise TransactionError("at least one sender address is required")
    if amount <= 0:
        raise TransactionError("amount must be positive")
    if amount >= 1 << 64:
        raise TransactionError("amount does not fit in 64 bits")
    body = _U16.pack(len(senders)) + b"".join(_field(s, "sender address") for s in senders)
    return TX_MAGIC + body + _field(recipient, "recipient address") + _U64.pack(amount)


def decode_mock_tx(data: bytes) -> MockTransaction:
    data = bytes(data)
    try:
        if data[:4] != TX_MAGIC:
            raise TransactionError("not a mock transaction")
        pos = 4
        (count,) = _U16.unpack_from(data, pos)
        pos += 2
        fields = []
        for _ in range(count + 1):
            (length,) = _U16.unpack_from(data, pos)
            pos += 2
            if pos + length > len(data):
                raise TransactionError("truncated transaction")
            fields.append(data[pos:pos + length].decode("utf-8"))
            pos += length
        (amount,) = _U64.unpack_from(data, pos)
        pos += 8
    except (struct.error, UnicodeDecodeError) as e:
        raise TransactionError(f"malformed transaction: {e}")
    if pos != len(data):
        raise TransactionError("trailing bytes after transaction")
    tx = MockTransaction(senders=fields[:-1], recipient=fields[-1], amount=amount)
    if build_mock_tx(tx.senders, tx.recipient, tx.amount) != data:
        raise TransactionError("non-canonical transaction encoding")
    return tx


# Miner ledger

def block_digest(height: int, prev_digest: bytes, tx_digest: bytes, sig_digest: bytes) -> bytes:
    return hash_h(_U64.pack(height) + prev_digest + tx_digest + sig_digest)


def make_block(height: int, prev_digest: bytes, tx: bytes, sig_bytes: bytes) -> Block:
    tx_digest, sig_digest = hash_h(tx), hash_h(sig_bytes)
    return Block(
        height=height,
        prev_digest=prev_digest.hex(),
        tx_digest=tx_digest.hex(),
        sig_digest=sig_digest.hex(),
        block_digest=block_digest(height, prev_digest, tx_digest, sig_digest).hex(),
    )


def verify_chain(blocks: Sequence[Block]) -> bool:
    """Heights count up from 0, links match and every digest re-derives"""
    prev = GENESIS_DIGEST.hex()
    for height, block in enumerate(blocks):
        if block.height != height or block.prev_digest != prev:
            return False
        expected = block_digest(
            height, bytes.fromhex(block.prev_digest), bytes.fromhex(block.tx_digest), bytes.fromhex(block.sig_digest)
        )
        if expected.hex() != block.block_digest:
            return False
        prev = block.block_digest
    return True


class Ledger:
    """Append-only in-memory block chain"""

    def __init__(self):
        self._blocks: List[Block] = []

    @property
    def blocks(self) -> Tuple[Block, ...]:
        return tuple(self._blocks)

    def append(self, tx: bytes, sig_bytes: bytes) -> Block:
        prev = bytes.fromhex(self._blocks[-1].block_digest) if self._blocks else GENESIS_DIGEST
        block = make_block(len(self._blocks), prev, tx, sig_bytes)
        self._blocks.append(block)
        return block

    def verify(self) -> bool:
        return verify_chain(self._blocks)

    def __len__(self) -> int:
        return len(self._blocks)


# Message bus

@dataclass(frozen=True)
class Envelope:
    phase: Phase
    sender: str
    receiver: str
    payload: bytes
    tampered: bool = False


class MessageBus:
    """
    Logical-clock scheduler: FIFO per (sender, receiver) channel, ties between
    channels broken by a seeded per-channel rank. Faults act on messages in flight.
    """

    def __init__(self, rng: random.Random, faults: Sequence[FaultSpec], params: Params):
        self._rng = rng
        self._params = params
        self._faults: Dict[Tuple[Phase, int], FaultSpec] = {
            (f.phase, f.index): f for f in faults if f.kind != FaultKind.WRONG_KEY
        }
        self._queue: list = []
        self._rank: Dict[Tuple[str, str], float] = {}
        self._channel_seq: Dict[Tuple[str, str], int] = {}
        self._phase_sent: Dict[Phase, int] = {}
        self._pushed = 0
        self.now = 0
        self.events: List[TranscriptEvent] = []

    def record(self, phase: Phase, sender: str, receiver: str, payload: bytes, outcome: str,
               local: bool = False) -> None:
        self.events.append(TranscriptEvent(
            seq=len(self.events), phase=phase, sender=sender, receiver=receiver,
            size=len(payload), sha3=hash_h(payload).hex(), outcome=outcome, local=local,
        ))

    def _tamper(self, envelope: Envelope, fault: FaultSpec) -> Envelope:
        payload = bytearray(envelope.payload)
        if envelope.phase == Phase.SIGNING:
            # shares: stay inside the signed part (header, z, c~); the seed ciphertext carries no integrity
            position = fault.offset % (codec.HEADER_LEN + self._params.zc_bytes)
        else:
            position = fault.offset % len(payload)
        payload[position] ^= 0x01
        return replace(envelope, payload=bytes(payload), tampered=True)

    def send(self, envelope: Envelope) -> None:
        index = self._phase_sent.get(envelope.phase, 0)
        self._phase_sent[envelope.phase] = index + 1
        fault = self._faults.get((envelope.phase, index))
        if fault is not None and fault.kind == FaultKind.DROP:
            logger.warning("dropping %s message %d (%s -> %s)", envelope.phase.value, index,
                           envelope.sender, envelope.receiver)
            self.record(envelope.phase, envelope.sender, envelope.receiver, envelope.payload, "dropped")
            return
        if fault is not None and fault.kind == FaultKind.TAMPER:
            envelope = self._tamper(envelope, fault)

        channel = (envelope.sender, envelope.receiver)
        if channel not in self._rank:
            self._rank[channel] = self._rng.random()
        seq = self._channel_seq.get(channel, 0)
        self._channel_seq[channel] = seq + 1
        heapq.heappush(self._queue, (self.now + 1, self._rank[channel], seq, self._pushed, envelope))
        self._pushed += 1

    def next(self) -> Optional[Envelope]:
        if not self._queue:
            return None
        time, _, _, _, envelope = heapq.heappop(self._queue)
        self.now = time
        return envelope


# Actors

def _bs_name(index: int) -> str:
    return f"{Role.BS.value}{index}"


def _bs_index(name: str) -> int:
    return int(name[len(Role.BS.value):])


@dataclass
class SessionContext:
    cfg: SimConfig
    params: Params
    bus: MessageBus
    max_attempts: Optional[int]
    ledger: Ledger = field(default_factory=Ledger)
    address: Optional[str] = None
    aborted: bool = False
    key_rejected: bool = False
    share_rejected: bool = False
    miner_rejected: bool = False
    accepted: Optional[Tuple[bytes, bytes]] = None

    def derive(self, label: str) -> bytes:
        return hash_h(self.cfg.master_seed + bytes([DOMAIN_TRANSCRIPT]) + label.encode())

    def send(self, phase: Phase, sender: str, receiver: str, payload: bytes) -> None:
        self.bus.send(Envelope(phase, sender, receiver, payload))


class Actor:
    name: str = ""

    def start(self, ctx: SessionContext) -> None:
        pass

    def handle(self, envelope: Envelope, ctx: SessionContext) -> str:
        raise NotImplementedError


class TrustedThirdParty(Actor):
    name = Role.TTP.value

    def start(self, ctx: SessionContext) -> None:
        rho = mscheme.setup(seed=ctx.derive("setup"))
        receivers = [_bs_name(i) for i in range(1, ctx.cfg.n_signers + 1)] + [Role.MINER.value]
        for receiver in receivers:
            ctx.send(Phase.SETUP, self.name, receiver, rho)
        logger.info("TTP published rho to %d parties", len(receivers))


class BitcoinSender(Actor):
    """One signer: keygen, key exchange, one signing round, extraction and aggregation"""

    def __init__(self, index: int, cfg: SimConfig):
        self.index = index
        self.name = _bs_name(index)
        self.participant = index in cfg.participants
        self.rogue = any(f.kind == FaultKind.WRONG_KEY and f.index == index for f in cfg.faults)
        self.rho: Optional[bytes] = None
        self.pk: Optional[PublicKeyShare] = None
        self.sk: Optional[SecretKeyShare] = None
        self.pks: Dict[int, PublicKeyShare] = {}
        self.nonce: Optional[NonceState] = None
        self.message: Optional[bytes] = None
        self.inbox: Dict[int, bytes] = {}
        self.extracted: Dict[int, ExtractedShare] = {}
        self.failed: Set[int] = set()
        self.signature: Optional[bytes] = None
        self.stalled = False

    def handle(self, envelope: Envelope, ctx: SessionContext) -> str:
        if envelope.phase == Phase.SETUP:
            return self._on_rho(envelope.payload, ctx)
        if envelope.phase == Phase.KEYGEN:
            return self._on_pk(_bs_index(envelope.sender), envelope.payload, ctx)
        if envelope.phase == Phase.SIGNING:
            self.inbox[_bs_index(envelope.sender)] = envelope.payload
            if self.nonce is None:
                return "buffered"
            return self._process_inbox(ctx)
        return "ignored"

    def _on_rho(self, rho: bytes, ctx: SessionContext) -> str:
        params = ctx.params
        self.rho = rho
        self.pk, self.sk = mscheme.keygen(rho, ctx.derive(f"keygen/{self.index}"), params, get_ring(params))
        if self.rogue:
            # signs with a key that does not match the published pk
            _, self.sk = mscheme.keygen(rho, ctx.derive(f"rogue/{self.index}"), params, get_ring(params))
            logger.warning("%s signs with a mismatched key", self.name)
        self.pks[self.index] = self.pk
        encoded = codec.wire_encode(self.pk, params)
        for other in range(1, ctx.cfg.n_signers + 1):
            if other != self.index:
                ctx.send(Phase.KEYGEN, self.name, _bs_name(other), encoded)
        self._maybe_sign(ctx)
        return "keygen"

    def _on_pk(self, sender: int, payload: bytes, ctx: SessionContext) -> str:
        try:
            pk = codec.wire_decode(payload, ctx.params, WireKind.PK)
        except CodecError as e:
            logger.warning("%s got a malformed public key from BS%d: %s", self.name, sender, e)
            self.stalled = True
            ctx.key_rejected = True
            return "rejected:malformed"
        if self.rho is not None and pk.rho != self.rho:
            logger.warning("%s got a public key from BS%d under a different rho", self.name, sender)
            self.stalled = True
            ctx.key_rejected = True
            return "rejected:rho"
        self.pks[sender] = pk
        self._maybe_sign(ctx)
        return "accepted"

    def _maybe_sign(self, ctx: SessionContext) -> None:
        if self.pk is None or self.nonce is not None or self.stalled:
            return
        if len(self.pks) < ctx.cfg.n_signers:
            return
        params = ctx.params
        address = mscheme.derive_address([self.pks[i] for i in sorted(self.pks)], params)
        if ctx.address is None:
            ctx.address = address
        ctx.bus.record(Phase.KEYGEN, self.name, self.name, bytes.fromhex(address), "address", local=True)
        if not self.participant:
            return

        self.message = ctx.cfg.message if ctx.cfg.message is not None else build_mock_tx(
            [address], ctx.cfg.recipient, ctx.cfg.amount
        )
        peers = {j: self.pks[j] for j in ctx.cfg.participants if j != self.index}
        try:
            shares, self.nonce = mscheme.sign_share(
                self.sk, self.pk, peers, self.message, ctx.derive(f"sign/{self.index}"), params,
                max_attempts=ctx.max_attempts, ring=get_ring(params),
            )
        except SigningAborted as e:
            logger.error("%s: %s", self.name, e)
            ctx.aborted = True
            self.stalled = True
            ctx.bus.record(Phase.SIGNING, self.name, self.name, b"", "aborted", local=True)
            return
        except RzmsError as e:
            logger.error("%s could not sign: %s", self.name, e)
            ctx.key_rejected = True
            self.stalled = True
            ctx.bus.record(Phase.SIGNING, self.name, self.name, b"", "rejected:keys", local=True)
            return
        for j, share in shares.items():
            ctx.send(Phase.SIGNING, self.name, _bs_name(j), codec.wire_encode(share, params))
        if not peers:
            self._finish(ctx)
        elif self.inbox:
            self._process_inbox(ctx, deferred=True)

    def _verify(self, sender: int, payload: bytes, ctx: SessionContext) -> str:
        params = ctx.params
        try:
            share = codec.wire_decode(payload, params, WireKind.SHARE)
            self.extracted[sender] = mscheme.verify_share_extract(
                self.sk, self.pks[sender], self.message, share, params, get_ring(params)
            )
        except CodecError as e:
            outcome = "rejected:malformed"
            logger.warning("%s: malformed share from BS%d: %s", self.name, sender, e)
        except ShareRejected as e:
            outcome = f"rejected:{e.reason.value}"
            logger.warning("%s: %s from BS%d", self.name, e, sender)
        else:
            return "accepted"
        self.failed.add(sender)
        ctx.share_rejected = True
        return outcome

    def _process_inbox(self, ctx: SessionContext, deferred: bool = False) -> str:
        outcome = "accepted"
        for sender in sorted(self.inbox):
            if sender in self.extracted or sender in self.failed:
                continue
            outcome = self._verify(sender, self.inbox[sender], ctx)
            if deferred:
                ctx.bus.record(Phase.SIGNING, _bs_name(sender), self.name, self.inbox[sender], outcome, local=True)
        expected = len(ctx.cfg.participants) - 1
        if not self.failed and len(self.extracted) == expected and self.signature is None:
            self._finish(ctx)
        return outcome

    def _finish(self, ctx: SessionContext) -> None:
        params = ctx.params
        extracted = [self.extracted[j] for j in sorted(self.extracted)]
        sig = mscheme.aggregate(self.nonce, extracted, self.message, expand_a(self.rho, params), params,
                                get_ring(params))
        self.signature = codec.wire_encode(sig, params)
        ctx.bus.record(Phase.AGGREGATION, self.name, self.name, self.signature, "aggregated", local=True)
        if self.index == ctx.cfg.participants[0]:
            payload = struct.pack("<I", len(self.message)) + self.message + self.signature
            ctx.send(Phase.SUBMISSION, self.name, Role.MINER.value, payload)
            logger.info("%s submitted the multi-signature to the Miner", self.name)


class Miner(Actor):
    name = Role.MINER.value

    def __init__(self):
        self.rho: Optional[bytes] = None

    def handle(self, envelope: Envelope, ctx: SessionContext) -> str:
        if envelope.phase == Phase.SETUP:
            self.rho = envelope.payload
            return "accepted"
        if envelope.phase != Phase.SUBMISSION:
            return "ignored"
        payload = envelope.payload
        try:
            (length,) = struct.unpack_from("<I", payload)
            message = payload[4:4 + length]
            if len(message) != length:
                raise CodecError("truncated submission")
            sig_bytes = payload[4 + length:]
            sig = codec.wire_decode(sig_bytes, ctx.params, WireKind.SIG)
        except (struct.error, CodecError) as e:
            logger.warning("Miner: malformed submission: %s", e)
            ctx.miner_rejected = True
            return "rejected:malformed"
        if self.rho is None or not mscheme.ms_verify(self.rho, message, sig, ctx.params, get_ring(ctx.params)):
            logger.warning("Miner rejected the multi-signature")
            ctx.miner_rejected = True
            return "rejected:signature"
        block = ctx.ledger.append(message, sig_bytes)
        ctx.accepted = (message, sig_bytes)
        logger.info("Miner appended block %d (%s)", block.height, block.block_digest[:16])
        ctx.send(Phase.VERIFICATION, self.name, Role.BR.value, bytes.fromhex(block.block_digest))
        return "accepted"


class BitcoinRecipient(Actor):
    name = Role.BR.value

    def __init__(self):
        self.confirmed: List[str] = []

    def handle(self, envelope: Envelope, ctx: SessionContext) -> str:
        if envelope.phase != Phase.VERIFICATION:
            return "ignored"
        self.confirmed.append(envelope.payload.hex())
        return "confirmed"


# Sessions

def _verdict(ctx: SessionContext, senders: Sequence[BitcoinSender]) -> Verdict:
    if ctx.aborted:
        return Verdict(status="rejected", reason="aborted")
    if ctx.key_rejected:
        return Verdict(status="rejected", reason="key")
    if ctx.share_rejected:
        return Verdict(status="rejected", reason="share")
    if ctx.miner_rejected:
        return Verdict(status="rejected", reason="signature")
    if len(ctx.ledger) == 1 and all(bs.signature is not None for bs in senders if bs.participant):
        return Verdict(status="accepted")
    return Verdict(status="rejected", reason="timeout")


def run_session(cfg: SimConfig, max_attempts: Optional[int] = None) -> Transcript:
    """
    Run one deterministic session. Faults never raise: they surface as
    transcript outcomes and a rejected verdict.
    """
    params = get_params(cfg.params_name)
    schedule_seed = int.from_bytes(hash_h(cfg.master_seed + b"schedule"), "little")
    bus = MessageBus(random.Random(schedule_seed), cfg.faults, params)
    ctx = SessionContext(cfg=cfg, params=params, bus=bus, max_attempts=max_attempts)

    senders = [BitcoinSender(i, cfg) for i in range(1, cfg.n_signers + 1)]
    actors: Dict[str, Actor] = {a.name: a for a in [TrustedThirdParty(), *senders, Miner(), BitcoinRecipient()]}
    logger.info("session: %d signer(s), participants %s, params %s",
                cfg.n_signers, cfg.participants, params.name)

    actors[Role.TTP.value].start(ctx)
    while (envelope := bus.next()) is not None:
        outcome = actors[envelope.receiver].handle(envelope, ctx)
        if envelope.tampered:
            outcome = f"tampered/{outcome}"
        bus.record(envelope.phase, envelope.sender, envelope.receiver, envelope.payload, outcome)

    verdict = _verdict(ctx, senders)
    if verdict.accepted:
        logger.info("session accepted; ledger height %d", len(ctx.ledger))
    else:
        logger.warning("session rejected (%s)", verdict.reason)
    message, signature = ctx.accepted if ctx.accepted else (None, None)
    return Transcript(
        events=bus.events, verdict=verdict, address=ctx.address,
        message=message.hex() if message is not None else None,
        signature=signature.hex() if signature is not None else None,
        ledger=list(ctx.ledger.blocks),
    )


def count_messages(t: Transcript) -> MessageCounts:
    """Per-phase counts of sent messages (local steps excluded)"""
    per_phase: Dict[str, int] = {phase.value: 0 for phase in Phase}
    pairs: List[Tuple[str, str]] = []
    for event in t.events:
        if event.local:
            continue
        per_phase[event.phase.value] += 1
        if event.phase == Phase.SIGNING:
            pairs.append((event.sender, event.receiver))
    return MessageCounts(
        per_phase=per_phase,
        signing=per_phase[Phase.SIGNING.value],
        one_send_per_pair=len(pairs) == len(set(pairs)) and all(s != r for s, r in pairs),
    )
