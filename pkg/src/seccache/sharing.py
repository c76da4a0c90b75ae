"""Linear (G, P, Q) ramp secret sharing over GF(2^m) via a Cauchy matrix.

P secret symbols and Q uniformly random key symbols are mixed by a G x G
nonsingular matrix into G shares.  All G shares give back the secrets; any Q
or fewer reveal nothing about them.  Inputs may carry a trailing stripe axis
so whole subfiles are shared in one call.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import cached_property
from itertools import combinations

import numpy as np

from .errors import IndexOutOfRange, ShapeMismatch
from .gf import FieldSpec, build_cauchy, mat_inverse, mat_mul, mat_rank

__all__ = ["SharingParams", "make_shares", "reconstruct", "leakage_rank_check", "threshold_profile"]


@dataclass(frozen=True, eq=False)
class SharingParams:
    p: int
    q: int
    spec: FieldSpec
    matrix: np.ndarray | None = None

    def __post_init__(self):
        if self.p < 0 or self.q < 0 or self.p + self.q < 1:
            raise ValueError(f"invalid sharing shape P={self.p}, Q={self.q}")
        if self.matrix is None:
            object.__setattr__(self, "matrix", build_cauchy(self.g, self.spec))
        elif self.matrix.shape != (self.g, self.g):
            raise ShapeMismatch(f"matrix must be {self.g}x{self.g}, got {self.matrix.shape}")

    @property
    def g(self) -> int:
        return self.p + self.q

    @cached_property
    def inverse(self) -> np.ndarray:
        return mat_inverse(self.matrix, self.spec)

    @property
    def secret_columns(self) -> np.ndarray:
        return self.matrix[:, : self.p]

    @property
    def key_columns(self) -> np.ndarray:
        return self.matrix[:, self.p:]


def make_shares(secrets, keys, params: SharingParams) -> np.ndarray:
    """Return the G shares ``C @ (secrets || keys)``.

    ``secrets`` has leading length P and ``keys`` leading length Q; any
    trailing axis is treated as independent stripes.
    """
    secrets = np.asarray(secrets, dtype=params.spec.dtype)
    keys = np.asarray(keys, dtype=params.spec.dtype)
    if secrets.shape[:1] != (params.p,) or keys.shape[:1] != (params.q,):
        raise ShapeMismatch(
            f"expected {params.p} secrets and {params.q} keys, "
            f"got {secrets.shape[:1]} and {keys.shape[:1]}"
        )
    if params.q == 0:
        keys = keys.reshape((0,) + secrets.shape[1:])
    if secrets.shape[1:] != keys.shape[1:]:
        raise ShapeMismatch("secrets and keys must share the stripe axis")
    return mat_mul(params.matrix, np.concatenate([secrets, keys], axis=0), params.spec)


def reconstruct(stripe, params: SharingParams) -> tuple[np.ndarray, np.ndarray]:
    """Invert :func:`make_shares` given all G shares."""
    stripe = np.asarray(stripe, dtype=params.spec.dtype)
    if stripe.shape[:1] != (params.g,):
        raise ShapeMismatch(f"expected {params.g} shares, got {stripe.shape[:1]}")
    full = mat_mul(params.inverse, stripe, params.spec)
    return full[: params.p], full[params.p:]


def leakage_rank_check(share_indices, params: SharingParams) -> bool:
    """True iff the given shares are jointly independent of the secrets.

    For a linear observation ``V1 s + V2 k`` with uniform keys ``k`` this
    holds exactly when ``rank([V1 | V2]) == rank(V2)``.
    """
    rows = sorted(set(int(i) for i in share_indices))
    if any(i < 0 or i >= params.g for i in rows):
        raise IndexOutOfRange(f"share index outside 0..{params.g - 1}")
    if not rows:
        return True
    sub = params.matrix[rows]
    return mat_rank(sub, params.spec) == mat_rank(sub[:, params.p:], params.spec)


def threshold_profile(params: SharingParams, max_size: int | None = None) -> dict[int, tuple[int, int]]:
    """Map subset size -> (secure subsets, total subsets), exhaustively."""
    top = params.g if max_size is None else min(max_size, params.g)
    out = {}
    for size in range(top + 1):
        total = ok = 0
        for subset in combinations(range(params.g), size):
            total += 1
            ok += leakage_rank_check(subset, params)
        out[size] = (ok, total)
    return out
