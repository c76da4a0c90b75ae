"""Exact certification of the two secrecy constraints.

Colluders observe linear combinations ``A w + B r`` of secret file symbols
``w`` and independent uniform symbols ``r`` (Y keys, E keys and any files the
colluders are entitled to).  Such an observation is independent of ``w``
exactly when ``rank([A | B]) == rank(B)``.  Everything here works on a single
stripe: stripes are processed identically and independently, so one stripe
certifies the whole file.

:func:`brute_force_mi_oracle` cross-checks the criterion by running the real
scheme on every realisation of a tiny instance and counting.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from itertools import combinations
from typing import Iterable, Sequence

import numpy as np

from .errors import MissingDemand, TooLarge, TooManySets
from .gf import FieldSpec, pivot_columns
from .scheme import (
    FileLibrary,
    KeyPool,
    SchemeParams,
    _bits_to_symbols,
    deliver,
    drop_ekey,
    place,
    precode,
    validate_demand,
)

__all__ = [
    "PRE_DELIVERY",
    "POST_DELIVERY",
    "ObservationSystem",
    "build_observation_system",
    "leakage_ranks",
    "verify_zero_leakage",
    "standard_demands",
    "SweepReport",
    "sweep_all_colluding_sets",
    "mutual_information",
    "brute_force_mi_oracle",
    "oracle_random_bits",
    "OracleRun",
]

PRE_DELIVERY = "pre_delivery"
POST_DELIVERY = "post_delivery"
MAX_SETS = 10**6
MAX_ORACLE_BITS = 24


@dataclass(eq=False)
class ObservationSystem:
    """Observed symbols as ``secret_map @ w + key_map @ r`` over one stripe."""

    secret_map: np.ndarray
    key_map: np.ndarray
    spec: FieldSpec
    row_labels: list = field(default_factory=list)
    secret_labels: list = field(default_factory=list)
    key_labels: list = field(default_factory=list)

    def __post_init__(self):
        if self.secret_map.shape[0] != self.key_map.shape[0]:
            raise ValueError("secret and key maps must have the same number of rows")

    @property
    def n_rows(self) -> int:
        return self.secret_map.shape[0]


def _variable_layout(params: SchemeParams):
    n, p, q = params.n_files, params.p, params.q
    labels = [("W", f, i) for f in range(n) for i in range(p)]
    labels += [("Y", f, i) for f in range(n) for i in range(q)]
    labels += [("E", T) for T in params.plus_subsets]
    return labels


def build_observation_system(
    colluders: Iterable[int],
    phase: str,
    params: SchemeParams,
    demand: Sequence[int] | None = None,
    target_files: Iterable[int] | None = None,
    dropped_ekeys: Iterable[tuple[int, ...]] = (),
) -> ObservationSystem:
    """Coefficient matrices of everything the colluders see.

    Rows: every block and pad in the union of their caches, plus every
    broadcast symbol when ``phase`` is post-delivery.  ``target_files``
    selects which file symbols count as secret; by default all files before
    delivery and the files no colluder requested after it.  Pads listed in
    ``dropped_ekeys`` are treated as zero.
    """
    L = sorted(set(int(u) for u in colluders))
    if phase not in (PRE_DELIVERY, POST_DELIVERY):
        raise ValueError(f"unknown phase {phase!r}")
    if phase == POST_DELIVERY:
        if demand is None:
            raise MissingDemand("post-delivery observations need a demand vector")
        demand = validate_demand(demand, params)
    if target_files is None:
        if phase == PRE_DELIVERY:
            target_files = range(params.n_files)
        else:
            asked = {demand[k] for k in L}
            target_files = [f for f in range(params.n_files) if f not in asked]
    targets = sorted(set(target_files))
    dropped = {tuple(sorted(T)) for T in dropped_ekeys}

    n, p, q, g = params.n_files, params.p, params.q, params.g
    n_vars = n * g + len(params.plus_subsets)
    mat = params.sharing.matrix

    def block_row(f: int, T) -> np.ndarray:
        row = np.zeros(n_vars, dtype=params.spec.dtype)
        i = params.subset_index[T]
        row[f * p:(f + 1) * p] = mat[i, :p]
        row[n * p + f * q: n * p + (f + 1) * q] = mat[i, p:]
        return row

    def ekey_row(T) -> np.ndarray:
        row = np.zeros(n_vars, dtype=params.spec.dtype)
        if T not in dropped:
            row[n * g + params.plus_index[T]] = 1
        return row

    rows, labels = [], []
    for f in range(n):
        for T in params.subsets:
            if set(T) & set(L):
                rows.append(block_row(f, T))
                labels.append(("block", f, T))
    for T in params.plus_subsets:
        if set(T) & set(L):
            rows.append(ekey_row(T))
            labels.append(("ekey", T))
    if phase == POST_DELIVERY:
        for T in params.plus_subsets:
            row = ekey_row(T)
            for u in T:
                row ^= block_row(demand[u], tuple(x for x in T if x != u))
            rows.append(row)
            labels.append(("message", T))

    full = np.array(rows, dtype=params.spec.dtype).reshape(len(rows), n_vars)
    var_labels = _variable_layout(params)
    secret_cols = [f * p + i for f in targets for i in range(p)]
    key_cols = [c for c in range(n_vars) if c not in set(secret_cols)]
    return ObservationSystem(
        secret_map=full[:, secret_cols],
        key_map=full[:, key_cols],
        spec=params.spec,
        row_labels=labels,
        secret_labels=[var_labels[c] for c in secret_cols],
        key_labels=[var_labels[c] for c in key_cols],
    )


def _prune(joint: np.ndarray, n_key: int) -> tuple[np.ndarray, int, int]:
    """Strip rows/columns whose rank contribution is known without elimination.

    Two exact reductions, iterated to a fixed point, each lowering both
    rank([B | A]) and rank(B) by one per removed row:

    * a row whose only nonzero sits in a key column c: clear c elsewhere,
      drop the row and c;
    * a key column with a single nonzero, in row r: drop r (the column and
      any other such column of r become zero and go too).
    """
    removed = 0
    while True:
        joint = joint[joint.any(axis=1)]
        keep = joint.any(axis=0)
        keep[n_key:] = True
        n_key = int(keep[:n_key].sum())
        joint = joint[:, keep]
        if joint.size == 0:
            return joint, n_key, removed
        nz = joint != 0
        row_nnz = nz.sum(axis=1)
        unit = np.flatnonzero((row_nnz == 1) & nz[:, :n_key].any(axis=1))
        if unit.size:
            cols = nz[unit].argmax(axis=1)
            cols, first = np.unique(cols, return_index=True)
            drop_rows = unit[first]
            joint[:, cols] = 0
            joint = np.delete(joint, drop_rows, axis=0)
            removed += cols.size
            continue
        col_nnz = nz[:, :n_key].sum(axis=0)
        single = np.flatnonzero(col_nnz == 1)
        if single.size:
            drop_rows = np.unique(nz[:, single].argmax(axis=0))
            joint = np.delete(joint, drop_rows, axis=0)
            removed += drop_rows.size
            continue
        return joint, n_key, removed


def leakage_ranks(system: ObservationSystem, prune: bool = True) -> tuple[int, int]:
    """Return ``(rank([A | B]), rank(B))``."""
    n_key = system.key_map.shape[1]
    joint = np.concatenate([system.key_map, system.secret_map], axis=1)
    removed = 0
    if prune:
        joint, n_key, removed = _prune(joint, n_key)
    pivots = pivot_columns(joint, system.spec)
    return removed + len(pivots), removed + sum(1 for c in pivots if c < n_key)


def verify_zero_leakage(system: ObservationSystem) -> bool:
    rank_ab, rank_b = leakage_ranks(system)
    return rank_ab == rank_b


# sweeping -------------------------------------------------------------------


def standard_demands(params: SchemeParams, n_random: int = 20, rng=None) -> list[tuple[int, ...]]:
    """All-distinct, all-equal, then ``n_random`` uniform demand vectors.

    With fewer files than users the "distinct" vector cycles through the
    files so that as many requests as possible differ.
    """
    k, n = params.n_users, params.n_files
    demands = [tuple(u % n for u in range(k)), tuple([0] * k)]
    if n_random:
        rng = np.random.default_rng(0) if rng is None else rng
        demands += [tuple(int(x) for x in rng.integers(0, n, size=k)) for _ in range(n_random)]
    return demands


@dataclass
class SweepReport:
    params: dict
    records: list[dict]
    demands_covered: list[tuple[int, ...]]

    @property
    def violations(self) -> list[dict]:
        return [r for r in self.records if not r["verdict"]]

    @property
    def ok(self) -> bool:
        return not self.violations

    def to_json(self) -> dict:
        return {
            "params": self.params,
            "demands_covered": [list(d) for d in self.demands_covered],
            "n_checks": len(self.records),
            "n_violations": len(self.violations),
            "records": self.records,
        }


def sweep_all_colluding_sets(
    params: SchemeParams,
    demands: Sequence[Sequence[int]],
    dropped_ekeys: Iterable[tuple[int, ...]] = (),
    max_sets: int = MAX_SETS,
) -> SweepReport:
    """Check the pre-delivery constraint for every l-subset of users and the
    post-delivery one for every (l-subset, demand) pair."""
    n_sets = math.comb(params.n_users, params.collusion)
    if n_sets > max_sets:
        raise TooManySets(f"C({params.n_users}, {params.collusion}) = {n_sets} exceeds {max_sets}")
    dropped = [tuple(sorted(T)) for T in dropped_ekeys]
    demands = [validate_demand(d, params) for d in demands]
    info = params.describe()
    if dropped:
        info["dropped_ekeys"] = [list(T) for T in dropped]
    records = []
    for L in combinations(range(params.n_users), params.collusion):
        checks = [("eq4", PRE_DELIVERY, None)] + [("eq5", POST_DELIVERY, d) for d in demands]
        for constraint, phase, d in checks:
            system = build_observation_system(L, phase, params, demand=d, dropped_ekeys=dropped)
            rank_ab, rank_b = leakage_ranks(system)
            records.append(
                {
                    "constraint": constraint,
                    "colluding_set": list(L),
                    "demand": None if d is None else list(d),
                    "verdict": rank_ab == rank_b,
                    "rank_A_B": rank_ab,
                    "rank_B": rank_b,
                }
            )
    return SweepReport(info, records, demands)


# brute-force oracle -----------------------------------------------------------

_DIRECT_BINS = 1 << 26


def _entropy(counts: np.ndarray, total: int) -> float:
    # counts repeat a lot, so take logs once per distinct count
    counts = np.asarray(counts, dtype=np.int64)
    counts = counts[counts > 0]
    if counts.size and counts.max() <= 4 * counts.size + 1024:
        mult = np.bincount(counts)
        c = np.flatnonzero(mult)
        weighted = float((mult[c] * c * np.log2(c)).sum())
    else:
        weighted = float((counts * np.log2(counts)).sum())
    return float(np.log2(total)) - weighted / total


def _densify(labels: np.ndarray) -> tuple[np.ndarray, int]:
    _, dense = np.unique(labels, return_inverse=True)
    dense = dense.reshape(-1).astype(np.int64)
    return dense, int(dense.max()) + 1 if dense.size else 1


def _column_labels(columns, base: int | None = None, start=None) -> tuple[np.ndarray, int]:
    """Injective int64 label per row, given the rows' columns as 1-D arrays,
    and an exclusive upper bound on the labels.

    Entries of each column must lie below ``base`` (default: inferred).
    Labels are relabelled densely whenever the next fold could overflow.
    ``start`` continues from an earlier ``(labels, bound)`` result.
    """
    labels, bound = (None, 1) if start is None else (start[0].copy(), start[1])
    for col in columns:
        col = np.asarray(col, dtype=np.int64)
        width = base if base is not None else (int(col.max()) + 1 if col.size else 1)
        if labels is None:
            labels, bound = col.copy(), width
            continue
        if bound * width >= 1 << 62:
            labels, bound = _densify(labels)
        labels *= width
        labels += col
        bound *= width
    if labels is None:
        return None, 1
    if bound > _DIRECT_BINS:
        labels, bound = _densify(labels)
    return labels, bound


def _row_labels(rows: np.ndarray, base: int | None = None) -> tuple[np.ndarray, int]:
    rows = np.asarray(rows).reshape(len(rows), -1)
    labels, bound = _column_labels(np.ascontiguousarray(rows.T), base)
    if labels is None:
        labels = np.zeros(len(rows), dtype=np.int64)
    return labels, bound


def _mi_from_rows(secrets: np.ndarray, observations: np.ndarray) -> float:
    return _mi_from_labels(_row_labels(secrets), _row_labels(observations))


def _mi_from_labels(secret_labels, observation_labels) -> float:
    (s, n_s), (o, n_o) = secret_labels, observation_labels
    total = len(s)
    if n_s * n_o <= max(4 * total, 1 << 16) and total < 1 << 31:
        # dense joint table; the law factorises iff table * total == cs (x) co
        table = np.bincount(s * n_o + o, minlength=n_s * n_o).reshape(n_s, n_o)
        cs, co = table.sum(axis=1), table.sum(axis=0)
        if np.array_equal(table * total, np.outer(cs, co)):
            return 0.0
        cso = table[table > 0]
    else:
        cs = np.bincount(s, minlength=n_s)
        co = np.bincount(o, minlength=n_o)
        joint = s * n_o + o
        if n_s * n_o < 1 << 31:
            joint = joint.astype(np.int32)
        cells, cso = np.unique(joint, return_counts=True)
        # independence needs every (s, o) pair with cs, co > 0 to occur
        if len(cells) == np.count_nonzero(cs) * np.count_nonzero(co):
            js, jo = np.divmod(cells.astype(np.int64), n_o)
            if total >= 1 << 31:
                cs, co, cso = cs.astype(object), co.astype(object), cso.astype(object)
            if bool(np.all(cso * total == cs[js] * co[jo])):
                return 0.0
    mi = _entropy(cs, total) + _entropy(co, total) - _entropy(cso, total)
    return max(mi, 0.0)


def mutual_information(secrets: np.ndarray, observations: np.ndarray) -> float:
    """I(S; O) in bits for equally likely realisations (one row each).

    Returns exactly 0.0 when the empirical joint law factorises, which is
    decided with integer arithmetic rather than by rounding.
    """
    secrets = np.asarray(secrets).reshape(len(secrets), -1)
    observations = np.asarray(observations).reshape(len(observations), -1)
    return _mi_from_rows(secrets, observations)


def oracle_random_bits(params: SchemeParams) -> int:
    sub = params.subfile_bits
    return (
        params.n_files * params.file_bits
        + params.n_files * params.q * sub
        + len(params.plus_subsets) * sub
    )


def _targets(params: SchemeParams, colluders, phase, demand):
    if phase == POST_DELIVERY:
        if demand is None:
            raise MissingDemand("post-delivery observations need a demand vector")
        demand = validate_demand(demand, params)
        asked = {demand[k] for k in colluders}
        return demand, [f for f in range(params.n_files) if f not in asked]
    if phase == PRE_DELIVERY:
        return None, list(range(params.n_files))
    raise ValueError(f"unknown phase {phase!r}")


class OracleRun:
    """Every file/key realisation of a tiny instance pushed through the real
    precode/place/deliver code once.

    Realisations are packed along the stripe axis, so a single call of each
    operation covers all of them; individual checks then only select and
    count observation columns.
    """

    def __init__(
        self,
        params: SchemeParams,
        dropped_ekeys: Iterable[tuple[int, ...]] = (),
        max_bits: int = MAX_ORACLE_BITS,
        chunk: int = 1 << 16,
    ):
        n_bits = oracle_random_bits(params)
        if n_bits > max_bits:
            raise TooLarge(f"{n_bits} random bits exceed the enumeration budget of {max_bits}")
        self.params = params
        self.total = 1 << n_bits
        n, p, q, m = params.n_files, params.p, params.q, params.m
        s, sub = params.stripe_len, params.subfile_bits
        n_keys = len(params.plus_subsets)
        shifts = np.arange(n_bits, dtype=np.int64)
        file_bits, files, ykeys, ekeys = [], [], [], []
        for start in range(0, self.total, chunk):
            idx = np.arange(start, min(start + chunk, self.total), dtype=np.int64)
            r = idx.size
            bits = ((idx[:, None] >> shifts[None, :]) & 1).astype(np.uint8)
            fb = bits[:, : n * params.file_bits].reshape(r, n, params.file_bits)
            off = n * params.file_bits
            yb = bits[:, off: off + n * q * sub].reshape(r, n, q, sub)
            off += n * q * sub
            eb = bits[:, off: off + n_keys * sub].reshape(r, n_keys, sub)
            file_bits.append(fb)
            files.append(_bits_to_symbols(fb, m).reshape(r, n, p, s))
            ykeys.append(_bits_to_symbols(yb, m).reshape(r, n, q, s))
            ekeys.append(_bits_to_symbols(eb, m).reshape(r, n_keys, s))

        def fold(parts, lead):
            # (r, *lead, s) -> (*lead, r*s): realisation-major stripes
            sym = np.moveaxis(np.concatenate(parts), 0, -2)
            return sym.reshape(lead + (self.total * s,)).astype(params.spec.dtype)

        self.file_bits = np.concatenate(file_bits)
        self.precoded = precode(FileLibrary(fold(files, (n, p))), params, y_keys=fold(ykeys, (n, q)))
        pool = KeyPool(fold(ekeys, (n_keys,)))
        for T in dropped_ekeys:
            pool = drop_ekey(pool, T, params)
        self.pool = pool
        self.caches = place(self.precoded, pool, params)
        self._messages: dict[tuple[int, ...], object] = {}
        self._cache_labels: dict = {}
        self._secret_labels: dict[tuple[int, ...], tuple[np.ndarray, int]] = {}

    def _column(self, symbols: np.ndarray) -> np.ndarray:
        return symbols.reshape(self.total, self.params.stripe_len)

    def _observed(self, colluders, phase, demand) -> list[np.ndarray]:
        seen = {}
        for k in colluders:
            for key, val in self.caches[k].blocks.items():
                seen[("block",) + key] = val
            for key, val in self.caches[k].e_keys.items():
                seen[("ekey", key)] = val
        if phase == POST_DELIVERY:
            if demand not in self._messages:
                self._messages[demand] = deliver(demand, self.precoded, self.pool, self.params)
            for key, val in self._messages[demand].symbols.items():
                seen[("message", key)] = val
        return [self._column(seen[key]) for key in sorted(seen)]

    def observations(self, colluders, phase, demand=None) -> np.ndarray:
        """One row per realisation: every symbol the colluders see."""
        L = sorted(set(int(u) for u in colluders))
        demand, _ = _targets(self.params, L, phase, demand)
        cols = self._observed(L, phase, demand)
        if not cols:
            return np.zeros((self.total, 0), dtype=self.params.spec.dtype)
        return np.concatenate(cols, axis=1)

    def _observation_labels(self, L: tuple[int, ...], phase, demand):
        # the cache part is shared by every check on the same colluding set
        if L not in self._cache_labels:
            cols = self._observed(L, PRE_DELIVERY, None)
            self._cache_labels[L] = _column_labels((c for b in cols for c in b.T), self.params.spec.order)
        labels, bound = self._cache_labels[L]
        if phase == POST_DELIVERY:
            if demand not in self._messages:
                self._messages[demand] = deliver(demand, self.precoded, self.pool, self.params)
            msg = self._messages[demand].symbols
            cols = [self._column(msg[T]) for T in self.params.plus_subsets]
            start = None if labels is None else (labels, bound)
            labels, bound = _column_labels((c for b in cols for c in b.T), self.params.spec.order, start)
        if labels is None:
            return np.zeros(self.total, dtype=np.int64), 1
        return labels, bound

    def mutual_information(self, colluders, phase, demand=None) -> float:
        L = tuple(sorted(set(int(u) for u in colluders)))
        demand, targets = _targets(self.params, L, phase, demand)
        if not targets:
            return 0.0
        key = tuple(targets)
        if key not in self._secret_labels:
            secrets = self.file_bits[:, targets, :].reshape(self.total, -1)
            self._secret_labels[key] = _row_labels(secrets, base=2)
        return _mi_from_labels(self._secret_labels[key], self._observation_labels(L, phase, demand))


def brute_force_mi_oracle(
    params: SchemeParams,
    colluders: Iterable[int],
    phase: str,
    demand: Sequence[int] | None = None,
    dropped_ekeys: Iterable[tuple[int, ...]] = (),
    max_bits: int = MAX_ORACLE_BITS,
    chunk: int = 1 << 16,
) -> float:
    """Exact mutual information (bits) between the protected files and the
    colluders' view, by enumerating every file/key realisation."""
    _targets(params, colluders, phase, demand)
    run = OracleRun(params, dropped_ekeys, max_bits=max_bits, chunk=chunk)
    return run.mutual_information(colluders, phase, demand)
