"""
Razhi-ms protocol phases
Setup, key generation, one-round share signing with seed encryption,
share verification/extraction, aggregation and miner-side verification.
"""

import logging
import secrets
from typing import Dict, Mapping, Optional, Sequence, Tuple

import numpy as np
import numpy.typing as npt

from app.exceptions import (
    CodecError,
    DimensionError,
    MessageMismatch,
    SetupError,
    ShareRejected,
    ShareRejectReason,
    SigningAborted,
)
from app.models.params import SEED_LEN, SUPPORTED_SECURITY_LEVEL, Params
from app.models.scheme import (
    ExtractedShare,
    MultiSignature,
    NonceState,
    PublicKeyShare,
    SecretKeyShare,
    SeedCiphertext,
    SignatureShare,
)
from app.services import codec
from app.services.ring_arith import RingArithmetic, get_ring, mod_pm
from app.services.sampling import (
    DOMAIN_ENCRYPTION,
    decode_seed,
    encode_seed,
    expand_a,
    expand_mask,
    hash_h,
    require_seed,
    sample_eta_vec,
    sample_in_ball,
)

logger = logging.getLogger(__name__)

Array = npt.NDArray[np.int64]


def _ring(params: Params, ring: Optional[RingArithmetic]) -> RingArithmetic:
    return ring if ring is not None else get_ring(params)


def _packer(ring: RingArithmetic) -> codec.BitPacker:
    return codec.pack_bits_reference if ring.coefficientwise_packing else codec.pack_bits


def acceptance_probability(params: Params) -> float:
    """Analytic per-attempt acceptance of the signing loop"""
    gamma1, gamma2, beta = params.gamma1, params.gamma2, params.beta
    z_part = ((2 * (gamma1 - beta) - 1) / (2 * gamma1 - 1)) ** (params.n * params.l)
    r0_part = ((2 * (gamma2 - beta) - 1) / (2 * gamma2)) ** (params.n * params.k)
    return z_part * r0_part


def setup(security_level: int = SUPPORTED_SECURITY_LEVEL, seed: Optional[bytes] = None) -> bytes:
    """Public seed rho; `seed` makes it reproducible"""
    if security_level != SUPPORTED_SECURITY_LEVEL:
        raise SetupError(f"only security level {SUPPORTED_SECURITY_LEVEL} is supported")
    if seed is not None:
        return hash_h(b"RZMS-SETUP" + bytes(seed))
    try:
        return secrets.token_bytes(SEED_LEN)
    except OSError as e:
        raise SetupError(f"entropy source failure: {e}")


def keygen(rho: bytes, signer_seed: bytes, params: Params,
           ring: Optional[RingArithmetic] = None) -> Tuple[PublicKeyShare, SecretKeyShare]:
    """b = A s + e with s, e drawn from signer_seed"""
    ring = _ring(params, ring)
    rho = require_seed(rho, "rho")
    signer_seed = require_seed(signer_seed, "signer seed")
    a = expand_a(rho, params)
    s = sample_eta_vec(signer_seed, 0, params.l, params)
    e = sample_eta_vec(signer_seed, params.l, params.k, params)
    b = ring.add(ring.matvec_mul(a, s), e)
    rnd_seed = hash_h(signer_seed + bytes([DOMAIN_ENCRYPTION]))
    return PublicKeyShare(rho=rho, b=b), SecretKeyShare(s=s, e=e, rnd_seed=rnd_seed)


def derive_address(pks: Sequence[PublicKeyShare], params: Params) -> str:
    """Order-independent address of a signer set"""
    encoded = sorted(codec.encode_pk(pk, params) for pk in pks)
    return hash_h(b"RZMS-ADDR" + len(encoded).to_bytes(2, "little") + b"".join(encoded)).hex()


def encrypt_seed(a: Array, pk_peer: PublicKeyShare, rho_prime: bytes, rand: bytes, params: Params,
                 ring: Optional[RingArithmetic] = None) -> SeedCiphertext:
    """u = A^T r + e', v = b.r + e'' + encode(rho'), per seed chunk"""
    ring = _ring(params, ring)
    encoded = encode_seed(rho_prime, params)
    stride = params.k + params.l + 1
    us, vs = [], []
    for chunk in range(params.seed_chunks):
        base = chunk * stride
        r = sample_eta_vec(rand, base, params.k, params, DOMAIN_ENCRYPTION)
        e1 = sample_eta_vec(rand, base + params.k, params.l, params, DOMAIN_ENCRYPTION)
        e2 = sample_eta_vec(rand, base + params.k + params.l, 1, params, DOMAIN_ENCRYPTION)[0]
        us.append(ring.add(ring.matvec_mul_t(a, r), e1))
        vs.append(ring.canonical(ring.polyvec_dot(pk_peer.b, r) + e2 + encoded[chunk]))
    return SeedCiphertext(u=np.stack(us), v=np.stack(vs))


def _unmask(sk: SecretKeyShare, ct: SeedCiphertext, ring: RingArithmetic) -> Array:
    return np.stack([ring.sub(v, ring.polyvec_dot(u, sk.s)) for u, v in zip(ct.u, ct.v)])


def decrypt_seed(sk: SecretKeyShare, ct: SeedCiphertext, params: Params,
                 ring: Optional[RingArithmetic] = None) -> bytes:
    """decode(v - u.s); a wrong key yields an unrelated seed"""
    ring = _ring(params, ring)
    if len(ct.u) != params.seed_chunks or len(ct.v) != params.seed_chunks:
        raise DimensionError(f"ciphertext must carry {params.seed_chunks} chunk(s)")
    return decode_seed(_unmask(sk, ct, ring), params)


def decryption_noise(sk: SecretKeyShare, ct: SeedCiphertext, rho_prime: bytes, params: Params,
                     ring: Optional[RingArithmetic] = None) -> int:
    """||v - u.s - encode(rho')||_inf for a ciphertext whose plaintext is known"""
    ring = _ring(params, ring)
    residual = _unmask(sk, ct, ring) - encode_seed(rho_prime, params)
    return ring.inf_norm(residual)


def signing_attempt(sk: SecretKeyShare, a: Array, m: bytes, rho_prime: bytes, params: Params,
                    ring: Optional[RingArithmetic] = None) -> Tuple[bool, Dict[str, object]]:
    """One pass of the rejection loop; returns (accepted, intermediate values)"""
    ring = _ring(params, ring)
    y = expand_mask(rho_prime, params)
    w = ring.matvec_mul(a, y)
    w1 = ring.high_bits(w, params.alpha)
    c_tilde = hash_h(m + codec.pack_w1(w1, params, _packer(ring)))
    c = sample_in_ball(c_tilde, params)
    t = ring.scale(c, sk.s)
    z = ring.add(y, t)
    state = {"y": y, "w": w, "w1": w1, "c_tilde": c_tilde, "t": t, "z": z}
    if ring.inf_norm(z) >= params.gamma1 - params.beta:
        return False, state
    r0 = ring.low_bits(ring.sub(w, ring.scale(c, sk.e)), params.alpha)
    if int(np.abs(r0).max()) >= params.gamma2 - params.beta:
        return False, state
    return True, state


def sign_share(sk: SecretKeyShare, own_pk: PublicKeyShare, peer_pks: Mapping[int, PublicKeyShare],
               m: bytes, rng: bytes, params: Params, max_attempts: Optional[int] = None,
               ring: Optional[RingArithmetic] = None) -> Tuple[Dict[int, SignatureShare], NonceState]:
    """
    Run the rejection loop, then encrypt the accepted mask seed to every peer.

    Args:
        sk: signer's secret key share
        own_pk: signer's public key share (carries the shared rho)
        peer_pks: peer index -> public key share; the index salts encryption randomness
        m: message
        rng: per-signing seed; attempt i uses rho' = H(rng || i)
        params: parameter set
        max_attempts: retry limit override

    Returns:
        tuple: (peer index -> SignatureShare, accepted NonceState)
    """
    ring = _ring(params, ring)
    rng = require_seed(rng, "signing seed")
    for pk in peer_pks.values():
        if pk.rho != own_pk.rho:
            raise DimensionError("peer public key was generated under a different rho")
    a = expand_a(own_pk.rho, params)
    limit = max_attempts or params.max_attempts

    for attempt in range(limit):
        rho_prime = hash_h(rng + attempt.to_bytes(4, "little"))
        accepted, state = signing_attempt(sk, a, m, rho_prime, params, ring)
        if accepted:
            break
        logger.debug("signing attempt %d rejected", attempt + 1)
    else:
        logger.error("signing aborted after %d attempts", limit)
        raise SigningAborted(limit)

    nonce = NonceState(
        rho_prime=rho_prime, y=state["y"], w=state["w"], w1=state["w1"], t=state["t"],
        c_tilde=state["c_tilde"], message=bytes(m), attempts=attempt + 1,
    )
    shares = {}
    for index, pk_peer in sorted(peer_pks.items()):
        rand = hash_h(sk.rnd_seed + index.to_bytes(2, "little") + rho_prime)
        ct = encrypt_seed(a, pk_peer, rho_prime, rand, params, ring)
        shares[index] = SignatureShare(z=state["z"], c_tilde=nonce.c_tilde, ct=ct)
    logger.info("share signed after %d attempt(s) for %d peer(s)", nonce.attempts, len(shares))
    return shares, nonce


def verify_share_extract(sk_own: SecretKeyShare, pk_j: PublicKeyShare, m: bytes, share: SignatureShare,
                         params: Params, ring: Optional[RingArithmetic] = None) -> ExtractedShare:
    """Check a peer's share and recover its mask y_j and t_j = c_j s_j"""
    ring = _ring(params, ring)
    if np.shape(share.z) != (params.l, params.n):
        raise ShareRejected(ShareRejectReason.NORM, f"z has shape {np.shape(share.z)}")
    if ring.inf_norm(share.z) >= params.gamma1 - params.beta:
        raise ShareRejected(ShareRejectReason.NORM, "||z||_inf >= gamma1 - beta")

    a = expand_a(pk_j.rho, params)
    c = sample_in_ball(share.c_tilde, params)
    w_approx = ring.sub(ring.matvec_mul(a, share.z), ring.scale(c, pk_j.b))
    w1 = ring.high_bits(w_approx, params.alpha)
    if hash_h(m + codec.pack_w1(w1, params, _packer(ring))) != share.c_tilde:
        raise ShareRejected(ShareRejectReason.CHALLENGE_MISMATCH)

    try:
        rho_prime = decrypt_seed(sk_own, share.ct, params, ring)
    except DimensionError as e:
        raise ShareRejected(ShareRejectReason.EXTRACTION_INCONSISTENT, str(e))
    y = expand_mask(rho_prime, params)
    t = ring.sub(share.z, y)
    if ring.inf_norm(t) > params.beta:
        raise ShareRejected(ShareRejectReason.EXTRACTION_INCONSISTENT, "||z - y||_inf > beta")
    return ExtractedShare(y=y, t=t, message=bytes(m))


def aggregate(own: NonceState, extracted: Sequence[ExtractedShare], m: bytes, a: Array, params: Params,
              ring: Optional[RingArithmetic] = None) -> MultiSignature:
    """
    Combine the signer's own nonce with every extracted peer share:
    y = (sum y_i) mod± gamma1, t = (prod_i t_i) mod± beta, z = y + t, b = A t, c = H(m || A y)
    """
    ring = _ring(params, ring)
    if own.message != m or any(share.message != m for share in extracted):
        raise MessageMismatch("extractions cover different messages")

    masks = [own.y] + [share.y for share in extracted]
    products = [own.t] + [share.t for share in extracted]

    y_agg = mod_pm(sum(ring.centered(y) for y in masks), params.gamma1)
    t_prod = products[0]
    for t in products[1:]:
        t_prod = ring.hadamard(t_prod, t)
    t_agg = mod_pm(ring.centered(t_prod), params.beta)

    z = ring.canonical(y_agg + t_agg)
    b = ring.matvec_mul(a, ring.canonical(t_agg))
    c = hash_h(m + codec.pack_coeffs(ring.matvec_mul(a, ring.canonical(y_agg)), params, _packer(ring)))
    logger.info("aggregated %d signer(s) into one signature", len(masks))
    return MultiSignature(z=z, c=c, b=b)


def ms_verify(rho: bytes, m: bytes, sig: MultiSignature, params: Params,
              ring: Optional[RingArithmetic] = None) -> bool:
    """Accept iff c == H(m || A z - b)"""
    ring = _ring(params, ring)
    try:
        rho = require_seed(rho, "rho")
        a = expand_a(rho, params)
        w = ring.sub(ring.matvec_mul(a, np.asarray(sig.z, dtype=np.int64)), np.asarray(sig.b, dtype=np.int64))
        return hash_h(m + codec.pack_coeffs(w, params, _packer(ring))) == sig.c
    except (CodecError, DimensionError, ValueError) as e:
        logger.debug("malformed signature treated as invalid: %s", e)
        return False


KeyPair = Tuple[PublicKeyShare, SecretKeyShare]


def sign_round(keys: Sequence[KeyPair], m: bytes, rng: bytes, params: Params, max_attempts: Optional[int] = None,
               ring: Optional[RingArithmetic] = None) -> Tuple[Dict[int, Dict[int, SignatureShare]], Dict[int, NonceState]]:
    """Every signer (1-based index) runs sign_share against all others; signer i uses H(rng || i)"""
    if not keys:
        raise DimensionError("at least one signer is required")
    rng = require_seed(rng, "signing seed")
    indices = range(1, len(keys) + 1)
    outboxes, nonces = {}, {}
    for i, (pk, sk) in zip(indices, keys):
        peers = {j: keys[j - 1][0] for j in indices if j != i}
        outboxes[i], nonces[i] = sign_share(
            sk, pk, peers, m, hash_h(rng + i.to_bytes(2, "little")), params, max_attempts, ring
        )
    return outboxes, nonces


def combine_round(keys: Sequence[KeyPair], outboxes: Mapping[int, Mapping[int, SignatureShare]],
                  nonces: Mapping[int, NonceState], m: bytes, params: Params,
                  ring: Optional[RingArithmetic] = None) -> MultiSignature:
    """Signer 1 verifies and extracts every share addressed to it, then aggregates"""
    pk_first, sk_first = keys[0]
    extracted = [
        verify_share_extract(sk_first, keys[j - 1][0], m, outboxes[j][1], params, ring)
        for j in range(2, len(keys) + 1)
    ]
    return aggregate(nonces[1], extracted, m, expand_a(pk_first.rho, params), params, ring)


def multi_sign(keys: Sequence[KeyPair], m: bytes, rng: bytes, params: Params,
               max_attempts: Optional[int] = None, ring: Optional[RingArithmetic] = None) -> MultiSignature:
    """The whole protocol in one process, for holders of every key"""
    outboxes, nonces = sign_round(keys, m, rng, params, max_attempts, ring)
    return combine_round(keys, outboxes, nonces, m, params, ring)
