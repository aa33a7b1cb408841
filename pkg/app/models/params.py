"""
Scheme parameter sets
Production constants plus a toy set small enough for exhaustive checks
"""

from math import ceil
from typing import Dict

from pydantic import BaseModel, ConfigDict, Field, model_validator
from sympy import isprime

from app.exceptions import ParamsError

SEED_LEN = 32
SEED_BITS = 8 * SEED_LEN
SUPPORTED_SECURITY_LEVEL = 128


class Params(BaseModel):
    """All scheme constants and the values derived from them"""

    model_config = ConfigDict(frozen=True)

    name: str = Field(..., description="Parameter set label")
    n: int = Field(..., gt=0, description="Ring degree")
    q: int = Field(..., gt=2, description="Prime modulus")
    k: int = Field(..., gt=0, description="Rows of A")
    l: int = Field(..., gt=0, description="Columns of A")
    gamma1: int = Field(..., gt=1, description="Mask coefficient bound")
    gamma2: int = Field(..., gt=1, description="Low-order rounding range")
    tau: int = Field(..., gt=0, description="Challenge weight")
    eta: int = Field(..., gt=0, description="Secret coefficient bound")
    beta: int = Field(..., gt=0, description="tau * eta")
    security_level: int = Field(SUPPORTED_SECURITY_LEVEL, description="Target classical security")
    max_attempts: int = Field(10000, gt=0, description="Signing retry limit")

    @model_validator(mode="after")
    def check_invariants(self):
        """Reject any set the samplers, NTT or rounding cannot work with"""
        if self.n & (self.n - 1):
            raise ParamsError(f"n={self.n} is not a power of two")
        if self.n > 256:
            raise ParamsError("challenge sampling draws byte positions; n must be <= 256")
        if not isprime(self.q):
            raise ParamsError(f"q={self.q} is not prime")
        if (self.q - 1) % (2 * self.n):
            raise ParamsError(f"q={self.q} is not 1 mod 2n; NTT unavailable")
        if (self.q - 1) % self.alpha:
            raise ParamsError(f"alpha={self.alpha} does not divide q-1")
        if self.beta != self.tau * self.eta:
            raise ParamsError(f"beta={self.beta} must equal tau*eta={self.tau * self.eta}")
        if not (self.beta < self.gamma2 and self.beta < self.gamma1):
            raise ParamsError("beta must be below both gamma1 and gamma2")
        if self.gamma1 & (self.gamma1 - 1):
            raise ParamsError(f"gamma1={self.gamma1} is not a power of two")
        if self.eta > 7:
            raise ParamsError("eta sampling uses 4-bit chunks; eta must be <= 7")
        if self.tau > min(self.n, 64):
            raise ParamsError("tau must not exceed n or the 64 available sign bits")
        return self

    # Derived constants

    @property
    def alpha(self) -> int:
        return 2 * self.gamma2

    @property
    def m_high(self) -> int:
        return (self.q - 1) // self.alpha

    @property
    def seed_len(self) -> int:
        return SEED_LEN

    @property
    def seed_chunks(self) -> int:
        """Ring elements needed to carry one 256-bit seed, one bit per coefficient"""
        return ceil(SEED_BITS / self.n)

    # Sampler and packing widths

    @property
    def coeff_bits(self) -> int:
        return self.q.bit_length()

    @property
    def mask_bits(self) -> int:
        return (2 * self.gamma1 - 2).bit_length()

    @property
    def eta_bits(self) -> int:
        return (2 * self.eta).bit_length()

    @property
    def z_bound(self) -> int:
        """Largest |z| coefficient a share or signature may carry"""
        return self.gamma1 - self.beta - 1

    @property
    def z_bits(self) -> int:
        return (2 * self.z_bound).bit_length()

    @property
    def w1_bits(self) -> int:
        return (self.m_high - 1).bit_length()

    def poly_bytes(self, bits: int) -> int:
        return ceil(self.n * bits / 8)

    # Encoded sizes (bodies, without the wire header)

    @property
    def apk_bytes(self) -> int:
        return self.k * self.poly_bytes(self.coeff_bits)

    @property
    def pk_bytes(self) -> int:
        return SEED_LEN + self.apk_bytes

    @property
    def sk_bytes(self) -> int:
        return (self.l + self.k) * self.poly_bytes(self.eta_bits) + SEED_LEN

    @property
    def zc_bytes(self) -> int:
        return self.l * self.poly_bytes(self.z_bits) + SEED_LEN

    @property
    def ciphertext_bytes(self) -> int:
        return self.seed_chunks * (self.l + 1) * self.poly_bytes(self.coeff_bits)

    @property
    def share_bytes(self) -> int:
        return self.zc_bytes + self.ciphertext_bytes

    @property
    def sig_bytes(self) -> int:
        return self.zc_bytes + self.apk_bytes

    @property
    def w1_bytes(self) -> int:
        return self.k * self.poly_bytes(self.w1_bits)

    def size_table(self) -> Dict[str, int]:
        return {
            "pk": self.pk_bytes,
            "sk": self.sk_bytes,
            "share": self.share_bytes,
            "sig": self.sig_bytes,
            "zc": self.zc_bytes,
            "apk": self.apk_bytes,
            "w1": self.w1_bytes,
        }


PRODUCTION = Params(
    name="production",
    n=256,
    q=8397313,
    k=4,
    l=4,
    gamma1=2**17,
    gamma2=63616,
    tau=41,
    eta=5,
    beta=205,
)

# Per-attempt acceptance is about 2.7e-4 here, hence the larger retry limit
TOY = Params(
    name="toy",
    n=8,
    q=257,
    k=2,
    l=2,
    gamma1=16,
    gamma2=8,
    tau=2,
    eta=1,
    beta=2,
    max_attempts=200000,
)

PARAM_SETS: Dict[str, Params] = {PRODUCTION.name: PRODUCTION, TOY.name: TOY}


def get_params(name: str) -> Params:
    """Resolve a parameter set by name"""
    try:
        return PARAM_SETS[name.strip().lower()]
    except KeyError:
        raise ParamsError(f"unknown parameter set '{name}' (expected one of {sorted(PARAM_SETS)})")
