"""
Bit-exact serialization of protocol objects
Little-endian bit order inside bytes; every decoder re-encodes and rejects
anything that is not the canonical encoding.
"""

import logging
import struct
from enum import IntEnum
from typing import Callable, Optional, Tuple, Union

import numpy as np
import numpy.typing as npt

from app.exceptions import CodecError, ParamsError
from app.models.params import SEED_LEN, Params
from app.models.scheme import (
    MultiSignature,
    PublicKeyShare,
    SecretKeyShare,
    SeedCiphertext,
    SignatureShare,
)
from app.services.ring_arith import mod_pm

logger = logging.getLogger(__name__)

MAGIC = b"RZMS"
VERSION = 0x01
HEADER_LEN = len(MAGIC) + 2

WireObjectType = Union[PublicKeyShare, SecretKeyShare, SignatureShare, MultiSignature, Params]
BitPacker = Callable[[npt.ArrayLike, int], bytes]


class WireKind(IntEnum):
    PK = 1
    SK = 2
    SHARE = 3
    SIG = 4
    PARAMS = 5


# Bit packing

def pack_bits(values: npt.ArrayLike, bits: int) -> bytes:
    """Pack non-negative integers at a fixed width"""
    flat = np.asarray(values, dtype=np.int64).reshape(-1)
    if flat.size and (flat.min() < 0 or flat.max() >> bits):
        raise CodecError(f"value out of range for {bits}-bit packing")
    bit_matrix = (flat[:, np.newaxis] >> np.arange(bits, dtype=np.int64)) & 1
    return np.packbits(bit_matrix.astype(np.uint8).reshape(-1), bitorder="little").tobytes()


def unpack_bits(data: bytes, bits: int, count: int) -> npt.NDArray[np.int64]:
    """Exact inverse of pack_bits; padding bits must be zero"""
    expected = -(-count * bits // 8)
    if len(data) != expected:
        raise CodecError(f"expected {expected} bytes for {count} values at {bits} bits, got {len(data)}")
    stream = np.unpackbits(np.frombuffer(data, dtype=np.uint8), bitorder="little")
    if stream[count * bits:].any():
        raise CodecError("non-zero padding bits")
    chunks = stream[: count * bits].reshape(count, bits).astype(np.int64)
    return chunks @ (np.int64(1) << np.arange(bits, dtype=np.int64))


def pack_bits_reference(values, bits: int) -> bytes:
    """Coefficient-at-a-time packer; oracle for pack_bits"""
    acc = 0
    total = 0
    for value in np.asarray(values, dtype=np.int64).reshape(-1).tolist():
        if value < 0 or value >> bits:
            raise CodecError(f"value out of range for {bits}-bit packing")
        acc |= value << total
        total += bits
    return acc.to_bytes(-(-total // 8), "little")


def pack_poly(p: npt.NDArray[np.int64], bits: int, params: Params, offset: Optional[int] = None,
              packer: BitPacker = pack_bits) -> bytes:
    """Canonical coefficients, or centered coefficients shifted up by `offset`"""
    values = np.asarray(p, dtype=np.int64)
    if values.shape[-1] != params.n:
        raise CodecError(f"polynomial has {values.shape[-1]} coefficients, expected {params.n}")
    if offset is None:
        if values.size and (values.min() < 0 or values.max() >= params.q):
            raise CodecError("coefficient not canonical")
        return packer(values, bits)
    shifted = mod_pm(values, params.q) + offset
    if shifted.size and (shifted.min() < 0 or shifted.max() > 2 * offset):
        raise CodecError(f"coefficient outside [-{offset}, {offset}]")
    return packer(shifted, bits)


def unpack_poly(data: bytes, bits: int, params: Params, offset: Optional[int] = None,
                count: int = 1) -> npt.NDArray[np.int64]:
    """Inverse of pack_poly for `count` consecutive polynomials; returns (count, n)"""
    values = unpack_bits(data, bits, count * params.n).reshape(count, params.n)
    if offset is None:
        if values.max() >= params.q:
            raise CodecError("coefficient not canonical")
        return values
    if values.max() > 2 * offset:
        raise CodecError(f"coefficient outside [-{offset}, {offset}]")
    return np.mod(values - offset, params.q)


def pack_polys(polys: npt.NDArray[np.int64], bits: int, params: Params, offset: Optional[int] = None,
               packer: BitPacker = pack_bits) -> bytes:
    """Concatenated per-polynomial packings of any stack of polynomials"""
    stack = np.asarray(polys, dtype=np.int64).reshape(-1, params.n)
    return b"".join(pack_poly(p, bits, params, offset, packer) for p in stack)


def pack_coeffs(polys: npt.NDArray[np.int64], params: Params, packer: BitPacker = pack_bits) -> bytes:
    """Full R_q elements at q.bit_length() bits (24 at production)"""
    return pack_polys(polys, params.coeff_bits, params, packer=packer)


def pack_w1(w1: npt.NDArray[np.int64], params: Params, packer: BitPacker = pack_bits) -> bytes:
    """High-bits vector, the hash input for share challenges"""
    values = np.asarray(w1, dtype=np.int64)
    if values.size and (values.min() < 0 or values.max() >= params.m_high):
        raise CodecError(f"high-bits value outside [0, {params.m_high})")
    return pack_polys(values, params.w1_bits, params, packer=packer)


def unpack_w1(data: bytes, params: Params) -> npt.NDArray[np.int64]:
    values = unpack_bits(data, params.w1_bits, params.k * params.n).reshape(params.k, params.n)
    if values.max() >= params.m_high:
        raise CodecError(f"high-bits value outside [0, {params.m_high})")
    return values


class _Reader:
    """Sequential slicer that refuses to run past the buffer"""

    def __init__(self, data: bytes):
        self.data = bytes(data)
        self.pos = 0

    def take(self, length: int) -> bytes:
        if self.pos + length > len(self.data):
            raise CodecError("truncated input")
        chunk = self.data[self.pos:self.pos + length]
        self.pos += length
        return chunk

    def finish(self) -> None:
        if self.pos != len(self.data):
            raise CodecError(f"{len(self.data) - self.pos} trailing bytes")


def _canonical(decoded, encoder: Callable, params: Params, data: bytes):
    if encoder(decoded, params) != bytes(data):
        raise CodecError("non-canonical encoding")
    return decoded


# Object bodies

def encode_pk(pk: PublicKeyShare, params: Params) -> bytes:
    if len(pk.rho) != SEED_LEN:
        raise CodecError("rho must be 32 bytes")
    return pk.rho + pack_coeffs(pk.b, params)


def decode_pk(data: bytes, params: Params) -> PublicKeyShare:
    reader = _Reader(data)
    rho = reader.take(SEED_LEN)
    b = unpack_poly(reader.take(params.apk_bytes), params.coeff_bits, params, count=params.k)
    reader.finish()
    return _canonical(PublicKeyShare(rho=rho, b=b), encode_pk, params, data)


def encode_sk(sk: SecretKeyShare, params: Params) -> bytes:
    if len(sk.rnd_seed) != SEED_LEN:
        raise CodecError("rnd_seed must be 32 bytes")
    return (
        pack_polys(sk.s, params.eta_bits, params, offset=params.eta)
        + pack_polys(sk.e, params.eta_bits, params, offset=params.eta)
        + sk.rnd_seed
    )


def decode_sk(data: bytes, params: Params) -> SecretKeyShare:
    reader = _Reader(data)
    poly_len = params.poly_bytes(params.eta_bits)
    s = unpack_poly(reader.take(params.l * poly_len), params.eta_bits, params, params.eta, params.l)
    e = unpack_poly(reader.take(params.k * poly_len), params.eta_bits, params, params.eta, params.k)
    rnd_seed = reader.take(SEED_LEN)
    reader.finish()
    return _canonical(SecretKeyShare(s=s, e=e, rnd_seed=rnd_seed), encode_sk, params, data)


def _encode_z(z: npt.NDArray[np.int64], params: Params) -> bytes:
    return pack_polys(z, params.z_bits, params, offset=params.z_bound)


def _decode_z(reader: _Reader, params: Params) -> npt.NDArray[np.int64]:
    data = reader.take(params.l * params.poly_bytes(params.z_bits))
    return unpack_poly(data, params.z_bits, params, params.z_bound, params.l)


def encode_share(share: SignatureShare, params: Params) -> bytes:
    if len(share.c_tilde) != SEED_LEN:
        raise CodecError("challenge digest must be 32 bytes")
    if np.shape(share.ct.u)[0] != params.seed_chunks or np.shape(share.ct.v)[0] != params.seed_chunks:
        raise CodecError(f"ciphertext must carry {params.seed_chunks} chunk(s)")
    return (
        _encode_z(share.z, params)
        + share.c_tilde
        + pack_coeffs(share.ct.u, params)
        + pack_coeffs(share.ct.v, params)
    )


def decode_share(data: bytes, params: Params) -> SignatureShare:
    reader = _Reader(data)
    z = _decode_z(reader, params)
    c_tilde = reader.take(SEED_LEN)
    chunks, poly_len = params.seed_chunks, params.poly_bytes(params.coeff_bits)
    u = unpack_poly(reader.take(chunks * params.l * poly_len), params.coeff_bits, params,
                    count=chunks * params.l).reshape(chunks, params.l, params.n)
    v = unpack_poly(reader.take(chunks * poly_len), params.coeff_bits, params, count=chunks)
    reader.finish()
    share = SignatureShare(z=z, c_tilde=c_tilde, ct=SeedCiphertext(u=u, v=v))
    return _canonical(share, encode_share, params, data)


def encode_sig(sig: MultiSignature, params: Params) -> bytes:
    if len(sig.c) != SEED_LEN:
        raise CodecError("challenge must be 32 bytes")
    return _encode_z(sig.z, params) + sig.c + pack_coeffs(sig.b, params)


def decode_sig(data: bytes, params: Params) -> MultiSignature:
    reader = _Reader(data)
    z = _decode_z(reader, params)
    c = reader.take(SEED_LEN)
    b = unpack_poly(reader.take(params.apk_bytes), params.coeff_bits, params, count=params.k)
    reader.finish()
    return _canonical(MultiSignature(z=z, c=c, b=b), encode_sig, params, data)


_PARAMS_LAYOUT = struct.Struct("<HIBBIIHBHIH")


def encode_params(params: Params, _unused: Optional[Params] = None) -> bytes:
    name = params.name.encode("utf-8")
    if len(name) > 255:
        raise CodecError("parameter set name too long")
    return _PARAMS_LAYOUT.pack(
        params.n, params.q, params.k, params.l, params.gamma1, params.gamma2,
        params.tau, params.eta, params.beta, params.max_attempts, params.security_level,
    ) + bytes([len(name)]) + name


def decode_params(data: bytes, _unused: Optional[Params] = None) -> Params:
    reader = _Reader(data)
    fields = _PARAMS_LAYOUT.unpack(reader.take(_PARAMS_LAYOUT.size))
    name = reader.take(reader.take(1)[0])
    reader.finish()
    n, q, k, l, gamma1, gamma2, tau, eta, beta, max_attempts, level = fields
    try:
        params = Params(
            name=name.decode("utf-8"), n=n, q=q, k=k, l=l, gamma1=gamma1, gamma2=gamma2,
            tau=tau, eta=eta, beta=beta, max_attempts=max_attempts, security_level=level,
        )
    except (ParamsError, ValueError) as e:
        raise CodecError(f"invalid parameter set: {e}")
    return _canonical(params, encode_params, params, data)


# WireObject framing

def to_wire(kind: WireKind, body: bytes) -> bytes:
    return MAGIC + bytes([VERSION, int(kind)]) + body


def from_wire(data: bytes, expected: Optional[WireKind] = None) -> Tuple[WireKind, bytes]:
    if len(data) < HEADER_LEN:
        raise CodecError("truncated header")
    if data[:4] != MAGIC:
        raise CodecError("bad magic")
    if data[4] != VERSION:
        raise CodecError(f"unsupported version {data[4]}")
    try:
        kind = WireKind(data[5])
    except ValueError:
        raise CodecError(f"unknown object kind {data[5]}")
    if expected is not None and kind != expected:
        raise CodecError(f"expected {expected.name.lower()} object, found {kind.name.lower()}")
    return kind, bytes(data[HEADER_LEN:])


_ENCODERS = {
    PublicKeyShare: (WireKind.PK, encode_pk),
    SecretKeyShare: (WireKind.SK, encode_sk),
    SignatureShare: (WireKind.SHARE, encode_share),
    MultiSignature: (WireKind.SIG, encode_sig),
    Params: (WireKind.PARAMS, encode_params),
}

_DECODERS = {
    WireKind.PK: decode_pk,
    WireKind.SK: decode_sk,
    WireKind.SHARE: decode_share,
    WireKind.SIG: decode_sig,
    WireKind.PARAMS: decode_params,
}


def wire_encode(obj: WireObjectType, params: Params) -> bytes:
    """Framed encoding of any protocol object"""
    try:
        kind, encoder = _ENCODERS[type(obj)]
    except KeyError:
        raise CodecError(f"no wire format for {type(obj).__name__}")
    return to_wire(kind, encoder(obj, params))


def wire_decode(data: bytes, params: Params, expected: Optional[WireKind] = None) -> WireObjectType:
    kind, body = from_wire(data, expected)
    return _DECODERS[kind](body, params)


def to_hex(data: bytes) -> str:
    return data.hex()


def from_hex(text: str) -> bytes:
    try:
        return bytes.fromhex(text.strip())
    except ValueError as e:
        raise CodecError(f"invalid hex armor: {e}")
