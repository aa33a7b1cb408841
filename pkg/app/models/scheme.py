"""
Protocol value objects
Ring elements are numpy int64 arrays of canonical coefficients.
"""

from dataclasses import dataclass, fields
from typing import Any

import numpy as np
import numpy.typing as npt

Array = npt.NDArray[np.int64]


def _field_equal(left: Any, right: Any) -> bool:
    if isinstance(left, np.ndarray) or isinstance(right, np.ndarray):
        return np.array_equal(np.asarray(left), np.asarray(right))
    return left == right


class ArrayRecord:
    """Field-wise equality that understands numpy arrays"""

    def __eq__(self, other: object) -> bool:
        if type(other) is not type(self):
            return NotImplemented
        return all(_field_equal(getattr(self, f.name), getattr(other, f.name)) for f in fields(self))

    __hash__ = None


@dataclass(frozen=True, eq=False)
class PublicKeyShare(ArrayRecord):
    """pk_i = (rho, b_i) with b_i = A s_i + e_i"""
    rho: bytes
    b: Array  # (k, n)


@dataclass(frozen=True, eq=False)
class SecretKeyShare(ArrayRecord):
    """Secrets plus the seed that drives per-signing encryption randomness"""
    s: Array  # (l, n), coefficients in [-eta, eta]
    e: Array  # (k, n), coefficients in [-eta, eta]
    rnd_seed: bytes

    def __repr__(self) -> str:
        return "SecretKeyShare(<redacted>)"


@dataclass(frozen=True, eq=False)
class SeedCiphertext(ArrayRecord):
    """LWE encryption of a mask seed, one (u, v) pair per seed chunk"""
    u: Array  # (chunks, l, n)
    v: Array  # (chunks, n)


@dataclass(frozen=True, eq=False)
class SignatureShare(ArrayRecord):
    """One signer's round-1 message to one peer"""
    z: Array  # (l, n)
    c_tilde: bytes
    ct: SeedCiphertext


@dataclass(frozen=True, eq=False)
class ExtractedShare(ArrayRecord):
    """A peer's mask and c*s recovered from its share"""
    y: Array
    t: Array
    message: bytes


@dataclass(frozen=True, eq=False)
class MultiSignature(ArrayRecord):
    """sigma = (z, c, b)"""
    z: Array  # (l, n)
    c: bytes
    b: Array  # (k, n)


@dataclass(frozen=True, eq=False)
class NonceState(ArrayRecord):
    """Accepted attempt of a signer's rejection loop"""
    rho_prime: bytes
    y: Array
    w: Array
    w1: Array
    t: Array  # c * s of this signer
    c_tilde: bytes
    message: bytes
    attempts: int

    def __repr__(self) -> str:
        return f"NonceState(attempts={self.attempts}, c_tilde={self.c_tilde.hex()[:16]}...)"
