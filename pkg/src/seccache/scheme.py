"""Secure coded caching with up to ``l`` colluding users.

Pipeline: :func:`derive_params` -> :func:`precode` -> :func:`make_key_pool`
-> :func:`place` -> :func:`deliver` -> :func:`decode`.

Users and files are 0-based.  Subsets of users are sorted tuples; the
t-subsets are enumerated lexicographically and that order fixes which row of
the sharing matrix produces which block.  All payloads are arrays of field
symbols with a trailing stripe axis of length ``params.stripe_len``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace
from fractions import Fraction
from functools import cached_property
from itertools import combinations
from typing import NamedTuple

import numpy as np

from .errors import (
    AlignmentError,
    DecodeFailure,
    FieldTooSmall,
    InvalidCollusion,
    InvalidDemand,
    InvalidParams,
    InvalidT,
    ShapeMismatch,
)
from .gf import FieldSpec
from .sharing import SharingParams, make_shares, reconstruct

__all__ = [
    "SCHEME_WIDTHS",
    "t_max",
    "SchemeParams",
    "derive_params",
    "reduce_q",
    "FileLibrary",
    "PrecodedLibrary",
    "KeyPool",
    "UserCache",
    "BroadcastMessage",
    "RatePair",
    "validate_demand",
    "precode",
    "make_key_pool",
    "drop_ekey",
    "place",
    "deliver",
    "decode",
    "rate_pair",
]

# Field widths the scheme picks from automatically.  Nibble/byte/word sized
# symbols keep packing simple.
SCHEME_WIDTHS = (4, 8, 16)

Subset = tuple[int, ...]


def t_max(n_users: int, collusion: int) -> int:
    """Largest admissible caching parameter: max(ceil((K+1)/l - 2), 0)."""
    return max(math.ceil(Fraction(n_users + 1, collusion) - 2), 0)


@dataclass(frozen=True, eq=False)
class SchemeParams:
    n_files: int
    n_users: int
    collusion: int
    t: int
    file_bits: int
    p: int
    q: int
    spec: FieldSpec
    mutated: bool = field(default=False)

    @property
    def g(self) -> int:
        return self.p + self.q

    @property
    def m(self) -> int:
        return self.spec.m

    @property
    def subfile_bits(self) -> int:
        return self.file_bits // self.p

    @property
    def stripe_len(self) -> int:
        """Field symbols per subfile, block or key."""
        return self.file_bits // (self.p * self.spec.m)

    @cached_property
    def subsets(self) -> list[Subset]:
        return list(combinations(range(self.n_users), self.t))

    @cached_property
    def subset_index(self) -> dict[Subset, int]:
        return {s: i for i, s in enumerate(self.subsets)}

    @cached_property
    def plus_subsets(self) -> list[Subset]:
        return list(combinations(range(self.n_users), self.t + 1))

    @cached_property
    def plus_index(self) -> dict[Subset, int]:
        return {s: i for i, s in enumerate(self.plus_subsets)}

    @cached_property
    def sharing(self) -> SharingParams:
        return SharingParams(self.p, self.q, self.spec)

    def describe(self) -> dict:
        return {
            "N": self.n_files,
            "K": self.n_users,
            "l": self.collusion,
            "t": self.t,
            "F": self.file_bits,
            "P": self.p,
            "Q": self.q,
            "G": self.g,
            "m": self.m,
            "reduction_polynomial": self.spec.reduction_polynomial,
            "mutated": self.mutated,
        }


def _check_ranges(n_files, n_users, collusion, t):
    if n_files < 1 or n_users < 1:
        raise InvalidParams("N and K must be at least 1")
    if not 1 <= collusion <= n_users - 1:
        raise InvalidCollusion(f"l must lie in 1..K-1 = 1..{n_users - 1}, got {collusion}")
    top = t_max(n_users, collusion)
    if not 0 <= t <= top:
        raise InvalidT(f"t must lie in 0..{top} for K={n_users}, l={collusion}, got {t}")


def _align(file_bits: int, unit: int, pad: bool) -> int:
    if file_bits < 1:
        raise AlignmentError("file size must be positive")
    if file_bits % unit:
        if not pad:
            raise AlignmentError(f"file size {file_bits} is not a multiple of P*m = {unit}")
        file_bits += unit - file_bits % unit
    return file_bits


def derive_params(
    n_files: int,
    n_users: int,
    collusion: int,
    t: int,
    file_bits: int,
    spec: FieldSpec | None = None,
    pad: bool = False,
) -> SchemeParams:
    """Validate ``(N, K, l, t, F)`` and derive P, Q, G and the field.

    The field is the narrowest of :data:`SCHEME_WIDTHS` with at least 2G
    elements unless ``spec`` is given.  ``F`` must be a multiple of ``P*m``;
    with ``pad=True`` it is rounded up instead.
    """
    _check_ranges(n_files, n_users, collusion, t)
    p = math.comb(n_users - collusion, t)
    q = math.comb(n_users, t) - p
    g = p + q
    if spec is None:
        for m in SCHEME_WIDTHS:
            if (1 << m) >= 2 * g:
                spec = FieldSpec(m)
                break
        else:
            raise FieldTooSmall(f"G = {g} needs more than 2^16 field elements")
    elif spec.order < 2 * g:
        raise FieldTooSmall(f"GF(2^{spec.m}) has fewer than 2G = {2 * g} elements")
    file_bits = _align(file_bits, p * spec.m, pad)
    return SchemeParams(n_files, n_users, collusion, t, file_bits, p, q, spec)


def reduce_q(params: SchemeParams, pad: bool = True) -> SchemeParams:
    """Negative control: same G and matrix, one key symbol fewer per stripe.

    The result still decodes but is no longer secure.
    """
    if params.q < 1:
        raise InvalidParams("Q is already zero")
    p = params.p + 1
    file_bits = _align(params.file_bits, p * params.m, pad)
    return replace(params, p=p, q=params.q - 1, file_bits=file_bits, mutated=True)


# data containers -------------------------------------------------------------


def _bits_to_symbols(bits: np.ndarray, m: int) -> np.ndarray:
    weights = (1 << np.arange(m - 1, -1, -1)).astype(np.int64)
    return bits.reshape(bits.shape[:-1] + (bits.shape[-1] // m, m)).astype(np.int64) @ weights


def _symbols_to_bits(symbols: np.ndarray, m: int) -> np.ndarray:
    shifts = np.arange(m - 1, -1, -1)
    bits = (symbols.astype(np.int64)[..., None] >> shifts) & 1
    return bits.reshape(symbols.shape[:-1] + (symbols.shape[-1] * m,)).astype(np.uint8)


@dataclass(eq=False)
class FileLibrary:
    """N files of F bits, held as ``symbols[n, p, s]`` (file, subfile, stripe)."""

    symbols: np.ndarray

    @property
    def n_files(self) -> int:
        return self.symbols.shape[0]

    @classmethod
    def from_bits(cls, bits, params: SchemeParams) -> "FileLibrary":
        bits = np.asarray(bits, dtype=np.uint8)
        if bits.shape != (params.n_files, params.file_bits):
            raise ShapeMismatch(f"expected bits of shape {(params.n_files, params.file_bits)}, got {bits.shape}")
        sym = _bits_to_symbols(bits, params.m).reshape(params.n_files, params.p, params.stripe_len)
        return cls(sym.astype(params.spec.dtype))

    @classmethod
    def from_bytes(cls, files, params: SchemeParams) -> "FileLibrary":
        """Build from byte strings, zero-padding each to ``params.file_bits``."""
        if len(files) != params.n_files:
            raise ShapeMismatch(f"expected {params.n_files} files, got {len(files)}")
        bits = np.zeros((params.n_files, params.file_bits), dtype=np.uint8)
        for n, data in enumerate(files):
            raw = np.unpackbits(np.frombuffer(bytes(data), dtype=np.uint8))
            if raw.size > params.file_bits:
                raise ShapeMismatch(f"file {n} has {raw.size} bits > F = {params.file_bits}")
            bits[n, : raw.size] = raw
        return cls.from_bits(bits, params)

    @classmethod
    def random(cls, params: SchemeParams, rng: np.random.Generator) -> "FileLibrary":
        shape = (params.n_files, params.p, params.stripe_len)
        return cls(rng.integers(0, params.spec.order, size=shape).astype(params.spec.dtype))

    def to_bits(self, m: int) -> np.ndarray:
        return _symbols_to_bits(self.symbols.reshape(self.n_files, -1), m)

    def file_bits(self, n: int, m: int) -> np.ndarray:
        return _symbols_to_bits(self.symbols[n].reshape(-1), m)


@dataclass(eq=False)
class PrecodedLibrary:
    blocks: np.ndarray  # (N, G, S), block i of file n is indexed by t-subset i
    y_keys: np.ndarray  # (N, Q, S)


@dataclass(eq=False)
class KeyPool:
    e_keys: np.ndarray  # (C(K, t+1), S), row j pads (t+1)-subset j
    dropped: frozenset = frozenset()


@dataclass(eq=False)
class UserCache:
    user: int
    blocks: dict[tuple[int, Subset], np.ndarray]
    e_keys: dict[Subset, np.ndarray]

    def n_items(self) -> int:
        return len(self.blocks) + len(self.e_keys)

    def size_bits(self, m: int) -> int:
        items = list(self.blocks.values()) + list(self.e_keys.values())
        return sum(int(v.size) for v in items) * m


@dataclass(eq=False)
class BroadcastMessage:
    demand: tuple[int, ...]
    symbols: dict[Subset, np.ndarray]

    def size_bits(self, m: int) -> int:
        return sum(int(v.size) for v in self.symbols.values()) * m


class RatePair(NamedTuple):
    memory: Fraction
    rate: Fraction

    @property
    def decimal(self) -> tuple[float, float]:
        return float(self.memory), float(self.rate)


# operations ---------------------------------------------------------------------


def validate_demand(demand, params: SchemeParams) -> tuple[int, ...]:
    demand = tuple(int(d) for d in demand)
    if len(demand) != params.n_users:
        raise InvalidDemand(f"demand needs {params.n_users} entries, got {len(demand)}")
    if any(not 0 <= d < params.n_files for d in demand):
        raise InvalidDemand(f"demand entries must lie in 0..{params.n_files - 1}")
    return demand


def _random_symbols(rng, shape, params: SchemeParams) -> np.ndarray:
    if rng is None:
        raise ValueError("either explicit keys or an rng is required")
    return rng.integers(0, params.spec.order, size=shape).astype(params.spec.dtype)


def precode(library: FileLibrary, params: SchemeParams, rng=None, y_keys=None) -> PrecodedLibrary:
    """Share every stripe of every file into G blocks using Q fresh keys."""
    n, p, s = params.n_files, params.p, params.stripe_len
    sym = np.asarray(library.symbols)
    if sym.shape[:2] != (n, p):
        raise ShapeMismatch(f"library shape {sym.shape} does not match N={n}, P={p}")
    s = sym.shape[2]
    if y_keys is None:
        y_keys = _random_symbols(rng, (n, params.q, s), params)
    y_keys = np.asarray(y_keys, dtype=params.spec.dtype)
    if y_keys.shape != (n, params.q, s):
        raise ShapeMismatch(f"Y keys must have shape {(n, params.q, s)}, got {y_keys.shape}")
    # fold files into the stripe axis so one matrix product covers the library
    secrets = sym.transpose(1, 0, 2).reshape(p, n * s)
    keys = y_keys.transpose(1, 0, 2).reshape(params.q, n * s)
    shares = make_shares(secrets, keys, params.sharing)
    blocks = shares.reshape(params.g, n, s).transpose(1, 0, 2)
    return PrecodedLibrary(np.ascontiguousarray(blocks), y_keys)


def make_key_pool(params: SchemeParams, rng=None, e_keys=None, stripe_len=None) -> KeyPool:
    s = params.stripe_len if stripe_len is None else stripe_len
    shape = (len(params.plus_subsets), s)
    if e_keys is None:
        e_keys = _random_symbols(rng, shape, params)
    e_keys = np.asarray(e_keys, dtype=params.spec.dtype)
    if e_keys.shape != shape:
        raise ShapeMismatch(f"E keys must have shape {shape}, got {e_keys.shape}")
    return KeyPool(e_keys)


def drop_ekey(pool: KeyPool, subset: Subset, params: SchemeParams) -> KeyPool:
    """Negative control: replace the pad of ``subset`` with zeros."""
    subset = tuple(sorted(subset))
    keys = pool.e_keys.copy()
    keys[params.plus_index[subset]] = 0
    return KeyPool(keys, pool.dropped | {subset})


def place(precoded: PrecodedLibrary, pool: KeyPool, params: SchemeParams) -> list[UserCache]:
    """User k stores every block whose subset contains k and every pad whose
    (t+1)-subset contains k."""
    caches = []
    for k in range(params.n_users):
        blocks = {
            (n, T): precoded.blocks[n, i]
            for n in range(params.n_files)
            for i, T in enumerate(params.subsets)
            if k in T
        }
        keys = {T: pool.e_keys[j] for j, T in enumerate(params.plus_subsets) if k in T}
        caches.append(UserCache(k, blocks, keys))
    return caches


def _without(subset: Subset, u: int) -> Subset:
    return tuple(x for x in subset if x != u)


def deliver(demand, precoded: PrecodedLibrary, pool: KeyPool, params: SchemeParams) -> BroadcastMessage:
    """One padded XOR per (t+1)-subset: E_T+ + sum over u in T+ of block(d_u, T+ minus u)."""
    demand = validate_demand(demand, params)
    symbols = {}
    for j, plus in enumerate(params.plus_subsets):
        acc = pool.e_keys[j].copy()
        for u in plus:
            acc ^= precoded.blocks[demand[u], params.subset_index[_without(plus, u)]]
        symbols[plus] = acc
    return BroadcastMessage(demand, symbols)


def decode_symbols(k: int, demand, cache: UserCache, message: BroadcastMessage, params: SchemeParams) -> np.ndarray:
    """Recover the requested file of user ``k`` as a ``(P, S)`` symbol array."""
    demand = validate_demand(demand, params)
    want = demand[k]
    stripe = []
    try:
        for T in params.subsets:
            if k in T:
                stripe.append(cache.blocks[(want, T)])
                continue
            plus = tuple(sorted(T + (k,)))
            acc = message.symbols[plus] ^ cache.e_keys[plus]
            for u in T:
                acc = acc ^ cache.blocks[(demand[u], _without(plus, u))]
            stripe.append(acc)
    except KeyError as exc:
        raise DecodeFailure(f"user {k} is missing {exc.args[0]!r}") from None
    secrets, _ = reconstruct(np.stack(stripe), params.sharing)
    return secrets


def decode(k: int, demand, cache: UserCache, message: BroadcastMessage, params: SchemeParams) -> np.ndarray:
    """Recover the requested file of user ``k`` as an F-bit array."""
    if cache.user != k:
        raise DecodeFailure(f"cache of user {cache.user} used to decode for user {k}")
    secrets = decode_symbols(k, demand, cache, message, params)
    return _symbols_to_bits(secrets.reshape(-1), params.m)


def rate_pair(params: SchemeParams) -> RatePair:
    """Exact (M, R) of the scheme, normalised by the file size."""
    n, k, l, t = params.n_files, params.n_users, params.collusion, params.t
    cached_blocks = n * math.comb(k - 1, t - 1) if t >= 1 else 0
    p = math.comb(k - l, t)
    memory = Fraction(cached_blocks + math.comb(k - 1, t), p)
    rate = Fraction(math.comb(k, t + 1), p)
    return RatePair(memory, rate)
