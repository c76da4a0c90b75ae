"""Arithmetic and dense linear algebra over GF(2^m), 1 <= m <= 16.

Field elements are plain integers in ``[0, 2**m)``; vectors and matrices are
numpy arrays of dtype ``uint8`` (m <= 8) or ``uint16`` (m > 8).  Every
vectorised helper accepts scalars or arrays and broadcasts like numpy.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from functools import lru_cache

import numpy as np

from .errors import FieldError, FieldTooSmall, Singular, ZeroInversion

__all__ = [
    "DEFAULT_POLYNOMIALS",
    "FieldSpec",
    "is_irreducible",
    "gf_add",
    "gf_mul",
    "gf_inv",
    "build_cauchy",
    "mat_rank",
    "mat_inverse",
    "mat_mul",
    "pivot_columns",
    "identity",
]

# One irreducible (in fact primitive) polynomial per width, as a bitmask
# including the x^m term.
DEFAULT_POLYNOMIALS = {
    1: 0x3,
    2: 0x7,
    3: 0xB,
    4: 0x13,
    5: 0x25,
    6: 0x43,
    7: 0x89,
    8: 0x11D,
    9: 0x211,
    10: 0x409,
    11: 0x805,
    12: 0x1053,
    13: 0x201B,
    14: 0x4443,
    15: 0x8003,
    16: 0x1100B,
}

_TABLE_MAX_M = 8


def _clmul(a: int, b: int) -> int:
    r = 0
    while b:
        if b & 1:
            r ^= a
        a <<= 1
        b >>= 1
    return r


def _polymod(a: int, mod: int) -> int:
    dm = mod.bit_length()
    while a.bit_length() >= dm:
        a ^= mod << (a.bit_length() - dm)
    return a


def is_irreducible(poly: int) -> bool:
    """Trial division by every polynomial of degree 1 .. deg(poly) // 2."""
    deg = poly.bit_length() - 1
    if deg < 1:
        return False
    for d in range(2, 1 << (deg // 2 + 1)):
        if _polymod(poly, d) == 0:
            return False
    return True


@lru_cache(maxsize=None)
def _log_tables(m: int, poly: int):
    """exp/log tables built from the first primitive element found."""
    q = 1 << m
    for g in range(2, q) if q > 2 else [1]:
        exp = np.zeros(2 * q, dtype=np.int64)
        x = 1
        seen = set()
        for i in range(q - 1):
            exp[i] = x
            seen.add(x)
            x = _polymod(_clmul(x, g), poly)
        if len(seen) == q - 1:
            break
    else:  # pragma: no cover - every finite field has a primitive element
        raise FieldError(f"no primitive element for polynomial {poly:#x}")
    exp[q - 1: 2 * (q - 1)] = exp[: q - 1]
    log = np.zeros(q, dtype=np.int64)
    log[exp[: q - 1]] = np.arange(q - 1)
    return exp, log


@lru_cache(maxsize=None)
def _mul_table(m: int, poly: int) -> np.ndarray:
    exp, log = _log_tables(m, poly)
    idx = log[:, None] + log[None, :]
    table = exp[idx].astype(np.uint8)
    table[0, :] = 0
    table[:, 0] = 0
    table.setflags(write=False)
    return table


@lru_cache(maxsize=None)
def _inv_table(m: int, poly: int) -> np.ndarray:
    q = 1 << m
    exp, log = _log_tables(m, poly)
    inv = np.zeros(q, dtype=np.int64)
    inv[1:] = exp[(q - 1 - log[1:]) % (q - 1)]
    return inv


@dataclass(frozen=True)
class FieldSpec:
    """GF(2^m) described by its width and reduction polynomial.

    When ``reduction_polynomial`` is omitted the built-in default for ``m``
    is used.  The polynomial is checked for irreducibility on construction.
    """

    m: int
    reduction_polynomial: int = field(default=0)

    def __post_init__(self):
        if not 1 <= self.m <= 16:
            raise FieldError(f"field width must be in 1..16, got {self.m}")
        poly = self.reduction_polynomial or DEFAULT_POLYNOMIALS[self.m]
        if poly.bit_length() - 1 != self.m:
            raise FieldError(f"polynomial {poly:#x} does not have degree {self.m}")
        if not is_irreducible(poly):
            raise FieldError(f"polynomial {poly:#x} is reducible")
        object.__setattr__(self, "reduction_polynomial", poly)

    @property
    def order(self) -> int:
        return 1 << self.m

    @property
    def dtype(self):
        return np.uint8 if self.m <= _TABLE_MAX_M else np.uint16

    def __repr__(self):
        return f"FieldSpec(m={self.m}, reduction_polynomial={self.reduction_polynomial:#x})"

    # vectorised arithmetic ------------------------------------------------

    def asarray(self, values) -> np.ndarray:
        arr = np.asarray(values)
        if arr.size and (arr.min() < 0 or arr.max() >= self.order):
            raise FieldError(f"values outside GF(2^{self.m})")
        return arr.astype(self.dtype)

    def mul(self, a, b):
        """Elementwise product with numpy broadcasting."""
        a = np.asarray(a)
        b = np.asarray(b)
        if self.m <= _TABLE_MAX_M:
            return _mul_table(self.m, self.reduction_polynomial)[a, b]
        return self._clmul_reduce(a, b)

    def _clmul_reduce(self, a, b):
        a = a.astype(np.uint32)
        b = b.astype(np.uint32)
        r = np.zeros(np.broadcast(a, b).shape, dtype=np.uint32)
        for i in range(self.m):
            r ^= np.where((b >> i) & 1, a << i, 0).astype(np.uint32)
        poly = self.reduction_polynomial
        for i in range(2 * self.m - 2, self.m - 1, -1):
            r ^= np.where((r >> i) & 1, poly << (i - self.m), 0).astype(np.uint32)
        return r.astype(np.uint16)

    def inv(self, a):
        """Elementwise inverse; raises ZeroInversion if any entry is zero."""
        a = np.asarray(a)
        if np.any(a == 0):
            raise ZeroInversion("zero has no multiplicative inverse")
        if self.m <= _TABLE_MAX_M:
            return _inv_table(self.m, self.reduction_polynomial)[a].astype(self.dtype)
        # a^(2^m - 2) by square-and-multiply
        result = np.ones_like(a, dtype=np.uint16)
        base = a.astype(np.uint16)
        e = self.order - 2
        while e:
            if e & 1:
                result = self.mul(result, base)
            base = self.mul(base, base)
            e >>= 1
        return result


# scalar operations ---------------------------------------------------------


def gf_add(a: int, b: int) -> int:
    return int(a) ^ int(b)


def gf_mul(a: int, b: int, spec: FieldSpec) -> int:
    return int(_polymod(_clmul(int(a), int(b)), spec.reduction_polynomial))


def gf_inv(a: int, spec: FieldSpec) -> int:
    if a == 0:
        raise ZeroInversion("zero has no multiplicative inverse")
    # Fermat: a^(q-2)
    result, base, e = 1, int(a), spec.order - 2
    while e:
        if e & 1:
            result = gf_mul(result, base, spec)
        base = gf_mul(base, base, spec)
        e >>= 1
    return result


# matrices ------------------------------------------------------------------


def identity(n: int, spec: FieldSpec) -> np.ndarray:
    return np.eye(n, dtype=spec.dtype)


def build_cauchy(g: int, spec: FieldSpec) -> np.ndarray:
    """g x g Cauchy matrix with x_i = i and y_j = g + j (0-based i, j).

    Entry (i, j) is ``1 / (x_i + y_j)``.  Every square submatrix of the
    result is nonsingular.
    """
    if g < 1:
        raise ValueError("g must be positive")
    if spec.order < 2 * g:
        raise FieldTooSmall(f"GF(2^{spec.m}) has fewer than 2g = {2 * g} elements")
    xs = np.arange(g)
    ys = g + np.arange(g)
    mat = spec.inv((xs[:, None] ^ ys[None, :]).astype(spec.dtype))
    mat = np.ascontiguousarray(mat, dtype=spec.dtype)
    mat.setflags(write=False)
    return mat


def mat_mul(a, b, spec: FieldSpec) -> np.ndarray:
    """Matrix product over the field; ``b`` may be a vector or a matrix.

    Loops over the shared dimension so memory stays at one output-sized
    temporary, which keeps wide stripe matrices cheap.
    """
    a = np.asarray(a, dtype=spec.dtype)
    b = np.asarray(b, dtype=spec.dtype)
    vec = b.ndim == 1
    if vec:
        b = b[:, None]
    if a.shape[1] != b.shape[0]:
        raise ValueError(f"shape mismatch {a.shape} x {b.shape}")
    out = np.zeros((a.shape[0], b.shape[1]), dtype=spec.dtype)
    for j in range(a.shape[1]):
        col = a[:, j]
        if not col.any():
            continue
        out ^= spec.mul(col[:, None], b[j][None, :])
    return out[:, 0] if vec else out


def _row_reduce(work: np.ndarray, spec: FieldSpec, full: bool, ncols: int | None = None) -> list[int]:
    """In-place Gaussian elimination; returns the pivot columns.

    Pivot rows are normalised to 1.  With ``full`` the entries above each
    pivot are cleared too (reduced row echelon form).
    """
    rows, cols = work.shape
    ncols = cols if ncols is None else ncols
    if spec.m <= _TABLE_MAX_M:
        table = _mul_table(spec.m, spec.reduction_polynomial)
        inv_table = _inv_table(spec.m, spec.reduction_polynomial)

        def mul(a, b):
            return table[a, b]

        def inv(a):
            return inv_table[a]
    else:
        mul, inv = spec.mul, spec.inv
    pivots = []
    r = 0
    for c in range(ncols):
        if r == rows:
            break
        col = work[r:, c]
        if not col.any():
            continue
        p = r + int(np.flatnonzero(col)[0])
        if p != r:
            work[[r, p]] = work[[p, r]]
        lead = int(work[r, c])
        if lead != 1:
            work[r, c:] = mul(inv(lead), work[r, c:])
        lo = 0 if full else r + 1
        factors = work[lo:, c].copy()
        if full:
            factors[r] = 0
        idx = np.flatnonzero(factors)
        if idx.size:
            work[lo + idx, c:] ^= mul(factors[idx, None], work[r, c:][None, :])
        pivots.append(c)
        r += 1
    return pivots


def mat_rank(mat, spec: FieldSpec) -> int:
    work = np.array(mat, dtype=spec.dtype, copy=True)
    if work.size == 0:
        return 0
    if work.ndim != 2:
        raise ValueError("expected a 2-d matrix")
    # eliminate along the shorter side
    if work.shape[0] > work.shape[1]:
        work = np.ascontiguousarray(work.T)
    return len(_row_reduce(work, spec, full=False))


def mat_inverse(mat, spec: FieldSpec) -> np.ndarray:
    mat = np.asarray(mat, dtype=spec.dtype)
    n, n2 = mat.shape
    if n != n2:
        raise ValueError("matrix must be square")
    work = np.concatenate([mat, identity(n, spec)], axis=1)
    pivots = _row_reduce(work, spec, full=True, ncols=n)
    if len(pivots) < n:
        raise Singular(f"matrix has rank {len(pivots)} < {n}")
    return np.ascontiguousarray(work[:, n:])


def pivot_columns(mat, spec: FieldSpec) -> list[int]:
    """Pivot columns of a row echelon form of ``mat``, scanned left to right.

    The number of pivots among the first c columns equals the rank of
    ``mat[:, :c]``, so a single pass yields both ranks of ``[B | A]``.
    """
    work = np.array(mat, dtype=spec.dtype, copy=True)
    if work.size == 0:
        return []
    return _row_reduce(work, spec, full=False)
