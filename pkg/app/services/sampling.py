"""
Deterministic randomness expansion
Every sampler is a function of (seed, domain, nonce) over SHAKE-256; H is SHA3-256.
"""

import logging
from math import ceil

import numpy as np
import numpy.typing as npt
from Crypto.Hash import SHA3_256, SHAKE256

from app.exceptions import CodecError
from app.models.params import SEED_BITS, SEED_LEN, Params

logger = logging.getLogger(__name__)

Seed = bytes
ChallengePoly = npt.NDArray[np.int64]

# Domain-separation bytes
DOMAIN_MATRIX = 0x00
DOMAIN_MASK = 0x01
DOMAIN_ETA = 0x02
DOMAIN_BALL = 0x03
DOMAIN_ENCRYPTION = 0x04
DOMAIN_TRANSCRIPT = 0x05

ETA_CHUNK_BITS = 4


def require_seed(seed: bytes, what: str = "seed") -> Seed:
    if not isinstance(seed, (bytes, bytearray)) or len(seed) != SEED_LEN:
        raise CodecError(f"{what} must be exactly {SEED_LEN} bytes")
    return bytes(seed)


def hash_h(data: bytes) -> Seed:
    """H: {0,1}* -> {0,1}^256"""
    return SHA3_256.new(data).digest()


class XofStream:
    """Unbounded SHAKE-256 output over seed || domain || nonce (16-bit LE)"""

    def __init__(self, seed: Seed, domain: int, nonce: int):
        if not 0 <= domain <= 0xFF:
            raise ValueError("domain must fit in one byte")
        if not 0 <= nonce <= 0xFFFF:
            raise ValueError("nonce must fit in 16 bits")
        self._xof = SHAKE256.new(bytes(seed) + bytes([domain]) + nonce.to_bytes(2, "little"))

    def read(self, length: int) -> bytes:
        return self._xof.read(length)


def xof_stream(seed: Seed, domain: int, nonce: int) -> XofStream:
    return XofStream(seed, domain, nonce)


def _bit_chunks(data: bytes, width: int) -> npt.NDArray[np.int64]:
    """Little-endian bitstream cut into width-bit integers"""
    bits = np.unpackbits(np.frombuffer(data, dtype=np.uint8), bitorder="little")
    usable = len(bits) // width * width
    chunks = bits[:usable].reshape(-1, width).astype(np.int64)
    return chunks @ (np.int64(1) << np.arange(width, dtype=np.int64))


def _rejection_sample(stream: XofStream, width: int, bound: int, count: int) -> npt.NDArray[np.int64]:
    """First `count` width-bit chunks of the stream that are < bound, in stream order"""
    accepted = []
    have = 0
    while have < count:
        wanted = ceil((count - have) * (1 << width) / bound * 1.1) + 8
        # Whole groups of 8 chunks keep every read aligned to chunk boundaries
        candidates = _bit_chunks(stream.read(width * ceil(wanted / 8)), width)
        kept = candidates[candidates < bound]
        accepted.append(kept)
        have += len(kept)
    return np.concatenate(accepted)[:count]


def expand_a(rho: Seed, params: Params) -> npt.NDArray[np.int64]:
    """k x l matrix; entry (i, j) from nonce i*256 + j"""
    matrix = np.empty((params.k, params.l, params.n), dtype=np.int64)
    for i in range(params.k):
        for j in range(params.l):
            stream = xof_stream(rho, DOMAIN_MATRIX, i * 256 + j)
            matrix[i, j] = _rejection_sample(stream, params.coeff_bits, params.q, params.n)
    return matrix


def expand_mask(rho_prime: Seed, params: Params) -> npt.NDArray[np.int64]:
    """y in S_{gamma1-1}^l, one stream per component"""
    bound = params.gamma1 - 1
    mask = np.empty((params.l, params.n), dtype=np.int64)
    for i in range(params.l):
        stream = xof_stream(rho_prime, DOMAIN_MASK, i)
        mask[i] = _rejection_sample(stream, params.mask_bits, 2 * bound + 1, params.n) - bound
    return np.mod(mask, params.q)


def sample_eta(seed: Seed, nonce: int, params: Params, domain: int = DOMAIN_ETA) -> npt.NDArray[np.int64]:
    """One polynomial in S_eta from 4-bit chunks"""
    stream = xof_stream(seed, domain, nonce)
    values = _rejection_sample(stream, ETA_CHUNK_BITS, 2 * params.eta + 1, params.n) - params.eta
    return np.mod(values, params.q)


def sample_eta_vec(seed: Seed, first_nonce: int, count: int, params: Params,
                   domain: int = DOMAIN_ETA) -> npt.NDArray[np.int64]:
    return np.stack([sample_eta(seed, first_nonce + i, params, domain) for i in range(count)])


def sample_in_ball(c_tilde: Seed, params: Params) -> ChallengePoly:
    """Exactly tau coefficients in {+1, -1}; Fisher-Yates driven by the XOF"""
    stream = xof_stream(c_tilde, DOMAIN_BALL, 0)
    signs = int.from_bytes(stream.read(8), "little")
    coeffs = [0] * params.n
    for i in range(params.n - params.tau, params.n):
        while True:
            j = stream.read(1)[0]
            if j <= i:
                break
        coeffs[i] = coeffs[j]
        coeffs[j] = 1 - 2 * (signs & 1)
        signs >>= 1
    return np.mod(np.array(coeffs, dtype=np.int64), params.q)


def encode_seed(seed: Seed, params: Params) -> npt.NDArray[np.int64]:
    """256-bit seed -> (seed_chunks, n) ring elements, bit b -> b*(q-1)/2"""
    bits = np.unpackbits(np.frombuffer(require_seed(seed), dtype=np.uint8), bitorder="little")
    padded = np.zeros(params.seed_chunks * params.n, dtype=np.int64)
    padded[:SEED_BITS] = bits
    return padded.reshape(params.seed_chunks, params.n) * ((params.q - 1) // 2)


def decode_seed(encoded: npt.NDArray[np.int64], params: Params) -> Seed:
    """Inverse of encode_seed under noise below q/4; always returns 32 bytes"""
    values = np.mod(np.asarray(encoded, dtype=np.int64).reshape(-1), params.q)
    centered = np.where(values > params.q // 2, values - params.q, values)
    bits = (4 * np.abs(centered) > params.q).astype(np.uint8)[:SEED_BITS]
    return np.packbits(bits, bitorder="little").tobytes()
