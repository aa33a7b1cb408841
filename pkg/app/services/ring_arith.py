"""
Arithmetic in R_q = Z_q[x]/(x^n + 1)
Polynomials are int64 numpy arrays of canonical coefficients in [0, q):
a Poly has shape (n,), a PolyVec (m, n) and a PolyMat (k, l, n).
"""

import logging
from enum import Enum
from functools import lru_cache
from typing import Tuple, Union

import numpy as np
import numpy.typing as npt

from app.exceptions import DimensionError, ParamsError
from app.models.params import Params

logger = logging.getLogger(__name__)

Poly = npt.NDArray[np.int64]
PolyVec = npt.NDArray[np.int64]
PolyMat = npt.NDArray[np.int64]
IntOrArray = Union[int, npt.NDArray[np.int64]]


class RingOp(str, Enum):
    ADD = "add"
    SUB = "sub"
    MUL = "mul"


def mod_pm(r: IntOrArray, alpha: int) -> IntOrArray:
    """
    Centered reduction: the r' congruent to r mod alpha in (-alpha/2, alpha/2]
    for even alpha, [-(alpha-1)/2, (alpha-1)/2] for odd alpha.
    Works element-wise on arrays.
    """
    if alpha < 1:
        raise ValueError("alpha must be positive")
    if isinstance(r, np.ndarray):
        reduced = np.mod(r, alpha)
        return np.where(reduced > alpha // 2, reduced - alpha, reduced)
    reduced = int(r) % alpha
    return reduced - alpha if reduced > alpha // 2 else reduced


def decompose(r: IntOrArray, q: int, alpha: int) -> Tuple[IntOrArray, IntOrArray]:
    """Split r into (r1, r0) with r = r1*alpha + r0 (mod q) and centered r0"""
    scalar = not isinstance(r, np.ndarray)
    values = np.mod(np.asarray(r, dtype=np.int64), q)
    r0 = mod_pm(values, alpha)
    corner = (values - r0) == q - 1
    r1 = np.where(corner, 0, (values - r0) // alpha)
    r0 = np.where(corner, r0 - 1, r0)
    if scalar:
        return int(r1), int(r0)
    return r1.astype(np.int64), r0.astype(np.int64)


def high_bits(r: IntOrArray, q: int, alpha: int) -> IntOrArray:
    return decompose(r, q, alpha)[0]


def low_bits(r: IntOrArray, q: int, alpha: int) -> IntOrArray:
    return decompose(r, q, alpha)[1]


def inf_norm(x: IntOrArray, q: int) -> int:
    """max |c mod± q| over every coefficient of a Poly, PolyVec or PolyMat"""
    values = np.asarray(x, dtype=np.int64)
    if values.size == 0:
        return 0
    return int(np.abs(mod_pm(values, q)).max())


def _find_psi(n: int, q: int) -> int:
    """Smallest-base primitive 2n-th root of unity mod q"""
    exponent = (q - 1) // (2 * n)
    for base in range(2, q):
        psi = pow(base, exponent, q)
        # psi^(2n) = 1 always; psi^n = -1 pins the order to exactly 2n
        if pow(psi, n, q) == q - 1:
            return psi
    raise ParamsError(f"no primitive {2 * n}-th root of unity modulo {q}")


class RingArithmetic:
    """Ring, vector and matrix operations for one parameter set"""

    # hash inputs are packed one coefficient at a time when set
    coefficientwise_packing = False

    def __init__(self, params: Params):
        if (params.q - 1) % (2 * params.n):
            raise ParamsError(f"2n={2 * params.n} does not divide q-1={params.q - 1}")
        self.params = params
        self.n = params.n
        self.q = params.q

        n, q = self.n, self.q
        psi = _find_psi(n, q)
        psi_inv = pow(psi, -1, q)
        omega = psi * psi % q
        omega_inv = pow(omega, -1, q)

        self._twist = np.array([pow(psi, i, q) for i in range(n)], dtype=np.int64)
        self._untwist = np.array(
            [pow(psi_inv, i, q) * pow(n, -1, q) % q for i in range(n)], dtype=np.int64
        )
        bits = n.bit_length() - 1
        self._bitrev = np.array(
            [int(format(i, f"0{bits}b")[::-1], 2) if bits else 0 for i in range(n)], dtype=np.int64
        )
        self._fwd_stages = self._stage_twiddles(omega)
        self._inv_stages = self._stage_twiddles(omega_inv)
        logger.debug("NTT tables ready for n=%d q=%d (psi=%d)", n, q, psi)

    def _stage_twiddles(self, root: int):
        stages = []
        m = 2
        while m <= self.n:
            step = pow(root, self.n // m, self.q)
            stages.append(np.array([pow(step, j, self.q) for j in range(m // 2)], dtype=np.int64))
            m *= 2
        return stages

    def _cyclic_transform(self, a: npt.NDArray[np.int64], stages) -> npt.NDArray[np.int64]:
        q = self.q
        out = a[..., self._bitrev]
        m = 2
        for twiddles in stages:
            blocks = out.reshape(out.shape[:-1] + (self.n // m, m))
            lo = blocks[..., : m // 2]
            hi = blocks[..., m // 2:] * twiddles % q
            out = np.concatenate(((lo + hi) % q, (lo - hi) % q), axis=-1).reshape(a.shape)
            m *= 2
        return out

    # NTT

    def ntt(self, p: npt.NDArray[np.int64]) -> npt.NDArray[np.int64]:
        """Forward negacyclic NTT along the last axis"""
        return self._cyclic_transform(p * self._twist % self.q, self._fwd_stages)

    def intt(self, p_hat: npt.NDArray[np.int64]) -> npt.NDArray[np.int64]:
        """Inverse of ntt along the last axis"""
        return self._cyclic_transform(p_hat, self._inv_stages) * self._untwist % self.q

    # Polynomials

    def zero(self, *shape: int) -> npt.NDArray[np.int64]:
        return np.zeros(shape + (self.n,), dtype=np.int64)

    def canonical(self, values) -> npt.NDArray[np.int64]:
        """Map signed integers onto [0, q)"""
        return np.mod(np.asarray(values, dtype=np.int64), self.q)

    def centered(self, values) -> npt.NDArray[np.int64]:
        return mod_pm(np.asarray(values, dtype=np.int64), self.q)

    def add(self, a, b) -> npt.NDArray[np.int64]:
        self._same_shape(a, b)
        return (a + b) % self.q

    def sub(self, a, b) -> npt.NDArray[np.int64]:
        self._same_shape(a, b)
        return (a - b) % self.q

    def mul(self, a: Poly, b: Poly) -> Poly:
        """Ring product (broadcasts over leading axes)"""
        return self.intt(self.ntt(a) * self.ntt(b) % self.q)

    def poly_arith(self, a: Poly, b: Poly, op: RingOp) -> Poly:
        op = RingOp(op)
        if op is RingOp.ADD:
            return self.add(a, b)
        if op is RingOp.SUB:
            return self.sub(a, b)
        self._same_shape(a, b)
        return self.mul(a, b)

    def schoolbook_mul(self, a: Poly, b: Poly) -> Poly:
        """Direct negacyclic convolution; reference for the NTT path"""
        self._same_shape(a, b)
        full = np.convolve(np.asarray(a, dtype=np.int64), np.asarray(b, dtype=np.int64))
        result = full[: self.n].copy()
        result[: self.n - 1] -= full[self.n:]
        return result % self.q

    # Vectors and matrices

    def scale(self, c: Poly, v: PolyVec) -> PolyVec:
        """c times every component of v"""
        return self.mul(c[np.newaxis, :], v)

    def hadamard(self, u: PolyVec, v: PolyVec) -> PolyVec:
        """Component-wise ring product of two vectors"""
        self._same_shape(u, v)
        return self.mul(u, v)

    def polyvec_dot(self, u: PolyVec, v: PolyVec) -> Poly:
        if u.shape != v.shape:
            raise DimensionError(f"dot of vectors with shapes {u.shape} and {v.shape}")
        products = self.ntt(u) * self.ntt(v) % self.q
        return self.intt(products.sum(axis=0) % self.q)

    def matvec_mul(self, a: PolyMat, v: PolyVec) -> PolyVec:
        """A . v for A of shape (k, l, n) and v of shape (l, n)"""
        if a.ndim != 3 or v.ndim != 2 or a.shape[1] != v.shape[0]:
            raise DimensionError(f"cannot multiply matrix {a.shape} by vector {v.shape}")
        products = self.ntt(a) * self.ntt(v)[np.newaxis, :, :] % self.q
        return self.intt(products.sum(axis=1) % self.q)

    def matvec_mul_t(self, a: PolyMat, v: PolyVec) -> PolyVec:
        """A^T . v for A of shape (k, l, n) and v of shape (k, n)"""
        if a.ndim != 3 or v.ndim != 2 or a.shape[0] != v.shape[0]:
            raise DimensionError(f"cannot multiply transposed matrix {a.shape} by vector {v.shape}")
        return self.matvec_mul(np.transpose(a, (1, 0, 2)), v)

    def schoolbook_matvec(self, a: PolyMat, v: PolyVec) -> PolyVec:
        if a.ndim != 3 or v.ndim != 2 or a.shape[1] != v.shape[0]:
            raise DimensionError(f"cannot multiply matrix {a.shape} by vector {v.shape}")
        rows = []
        for row in a:
            acc = self.zero()
            for entry, component in zip(row, v):
                acc = (acc + self.schoolbook_mul(entry, component)) % self.q
            rows.append(acc)
        return np.stack(rows)

    # Rounding and norms

    def decompose(self, r, alpha: int):
        return decompose(r, self.q, alpha)

    def high_bits(self, r, alpha: int):
        return high_bits(r, self.q, alpha)

    def low_bits(self, r, alpha: int):
        return low_bits(r, self.q, alpha)

    def inf_norm(self, x) -> int:
        return inf_norm(x, self.q)

    @staticmethod
    def _same_shape(a, b) -> None:
        if np.shape(a) != np.shape(b):
            raise DimensionError(f"shape mismatch {np.shape(a)} vs {np.shape(b)}")


@lru_cache(maxsize=None)
def get_ring(params: Params) -> RingArithmetic:
    """Shared ring instance per parameter set (tables are built once)"""
    return RingArithmetic(params)


class ReferenceArithmetic(RingArithmetic):
    """
    Unoptimized evaluation: schoolbook products, coefficient-at-a-time
    rounding, and coefficient-at-a-time packing of hash inputs. Bit-for-bit
    equal to RingArithmetic; meant for small parameter sets.
    """

    coefficientwise_packing = True

    def _convolve(self, a, b):
        n, q = self.n, self.q
        out = [0] * n
        for i, ai in enumerate(a):
            for j, bj in enumerate(b):
                if i + j < n:
                    out[i + j] += ai * bj
                else:
                    out[i + j - n] -= ai * bj
        return [value % q for value in out]

    def mul(self, a: Poly, b: Poly) -> Poly:
        left, right = np.broadcast_arrays(np.asarray(a, dtype=np.int64), np.asarray(b, dtype=np.int64))
        flat_left = left.reshape(-1, self.n).tolist()
        flat_right = right.reshape(-1, self.n).tolist()
        rows = [self._convolve(x, y) for x, y in zip(flat_left, flat_right)]
        return np.array(rows, dtype=np.int64).reshape(left.shape)

    def polyvec_dot(self, u: PolyVec, v: PolyVec) -> Poly:
        if u.shape != v.shape:
            raise DimensionError(f"dot of vectors with shapes {u.shape} and {v.shape}")
        acc = self.zero()
        for x, y in zip(u, v):
            acc = (acc + self.mul(x, y)) % self.q
        return acc

    def matvec_mul(self, a: PolyMat, v: PolyVec) -> PolyVec:
        if a.ndim != 3 or v.ndim != 2 or a.shape[1] != v.shape[0]:
            raise DimensionError(f"cannot multiply matrix {a.shape} by vector {v.shape}")
        return np.stack([self.polyvec_dot(row, v) for row in a])

    def _coefficientwise(self, r, alpha: int, index: int):
        values = np.asarray(r, dtype=np.int64)
        flat = [decompose(int(x), self.q, alpha)[index] for x in values.reshape(-1).tolist()]
        return np.array(flat, dtype=np.int64).reshape(values.shape)

    def high_bits(self, r, alpha: int):
        return self._coefficientwise(r, alpha, 0)

    def low_bits(self, r, alpha: int):
        return self._coefficientwise(r, alpha, 1)
