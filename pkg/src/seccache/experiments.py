"""End-to-end runs shared by the CLI and the test-suite."""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction
from itertools import combinations

import numpy as np

from .bounds import achievable_points, gap_ratio, outer_bound
from .gf import FieldSpec
from .scheme import (
    BroadcastMessage,
    FileLibrary,
    KeyPool,
    PrecodedLibrary,
    SchemeParams,
    UserCache,
    decode,
    deliver,
    derive_params,
    make_key_pool,
    place,
    precode,
    rate_pair,
)
from .security import (
    POST_DELIVERY,
    PRE_DELIVERY,
    OracleRun,
    build_observation_system,
    leakage_ranks,
)
from .streams import rng_streams

__all__ = [
    "DemoResult",
    "run_scheme",
    "golden_example",
    "minimal_field",
    "oracle_agreement",
    "curve_rows",
    "CURVE_CSV_COLUMNS",
    "gap_rows",
]


@dataclass(eq=False)
class DemoResult:
    params: SchemeParams
    library: FileLibrary
    demand: tuple[int, ...]
    precoded: PrecodedLibrary
    pool: KeyPool
    caches: list[UserCache]
    message: BroadcastMessage
    decoded_ok: list[bool] = field(default_factory=list)

    @property
    def measured_memory(self) -> Fraction:
        bits = {c.size_bits(self.params.m) for c in self.caches}
        if len(bits) != 1:
            raise AssertionError(f"users cache different amounts: {sorted(bits)}")
        return Fraction(bits.pop(), self.params.file_bits)

    @property
    def measured_rate(self) -> Fraction:
        return Fraction(self.message.size_bits(self.params.m), self.params.file_bits)

    @property
    def ok(self) -> bool:
        return all(self.decoded_ok) and (self.measured_memory, self.measured_rate) == tuple(rate_pair(self.params))


def run_scheme(params: SchemeParams, demand, seed: int = 0, library: FileLibrary | None = None) -> DemoResult:
    """precode -> place -> deliver -> decode for every user."""
    rngs = rng_streams(seed)
    if library is None:
        library = FileLibrary.random(params, rngs["files"])
    pre = precode(library, params, rngs["y_keys"])
    pool = make_key_pool(params, rngs["e_keys"])
    caches = place(pre, pool, params)
    message = deliver(demand, pre, pool, params)
    result = DemoResult(params, library, message.demand, pre, pool, caches, message)
    for k in range(params.n_users):
        got = decode(k, message.demand, caches[k], message, params)
        result.decoded_ok.append(bool(np.array_equal(got, library.file_bits(message.demand[k], params.m))))
    return result


def golden_example(seed: int = 0, file_bits: int = 1024) -> tuple[DemoResult, dict[str, bool]]:
    """The 4-file, 4-user, pairs-collude example with demand (1, 2, 3, 4).

    Returns the run and a dict of named structural checks.
    """
    params = derive_params(4, 4, 2, 1, file_bits)
    res = run_scheme(params, (0, 1, 2, 3), seed=seed)
    checks = {}
    checks["P=2,Q=2,G=4,m=4"] = (params.p, params.q, params.g, params.m) == (2, 2, 4, 4)
    structure = True
    for k, cache in enumerate(res.caches):
        want_blocks = {(n, (k,)) for n in range(4)}
        want_keys = {tuple(sorted((k, j))) for j in range(4) if j != k}
        structure &= set(cache.blocks) == want_blocks and set(cache.e_keys) == want_keys
        structure &= all(np.array_equal(cache.blocks[(n, (k,))], res.precoded.blocks[n, k]) for n in range(4))
    checks["caches hold 4 blocks + 3 pads in the listed pattern"] = structure
    checks["six broadcast symbols"] = sorted(res.message.symbols) == list(combinations(range(4), 2))
    composition = True
    for (a, b), x in res.message.symbols.items():
        # X_ab = W~_{d_b, a} + W~_{d_a, b} + E_ab
        e = res.pool.e_keys[params.plus_index[(a, b)]]
        expect = res.precoded.blocks[res.demand[b], a] ^ res.precoded.blocks[res.demand[a], b] ^ e
        composition &= bool(np.array_equal(x, expect))
    checks["each symbol is W~ + W~ + E as listed"] = composition
    checks["all users decode bit-exactly"] = all(res.decoded_ok)
    checks["M = 7/2, R = 3"] = (res.measured_memory, res.measured_rate) == (Fraction(7, 2), Fraction(3))
    return res, checks


def minimal_field(g: int) -> FieldSpec:
    """Narrowest GF(2^m) with at least 2g elements (for tiny oracle runs)."""
    return FieldSpec(max(1, math.ceil(math.log2(2 * g))))


def oracle_agreement(params: SchemeParams, demands, dropped_ekeys=()) -> list[dict]:
    """Rank verdict next to brute-force mutual information for every
    colluding set, phase and demand."""
    rows = []
    run = OracleRun(params, dropped_ekeys)
    for L in combinations(range(params.n_users), params.collusion):
        checks = [(PRE_DELIVERY, None)] + [(POST_DELIVERY, tuple(d)) for d in demands]
        for phase, d in checks:
            system = build_observation_system(L, phase, params, demand=d, dropped_ekeys=dropped_ekeys)
            rank_ab, rank_b = leakage_ranks(system)
            mi = run.mutual_information(L, phase, d)
            verdict = rank_ab == rank_b
            rows.append(
                {
                    "colluding_set": list(L),
                    "phase": phase,
                    "demand": None if d is None else list(d),
                    "verdict": verdict,
                    "mi_bits": mi,
                    "agree": verdict == (mi == 0.0),
                }
            )
    return rows


CURVE_CSV_COLUMNS = ["kind", "N", "K", "l", "t", "M_num", "M_den", "R_num", "R_den", "M", "R"]


def _curve_row(kind, n, k, l, t, memory: Fraction, rate: Fraction):
    return [
        kind, n, k, l, "" if t is None else t,
        memory.numerator, memory.denominator, rate.numerator, rate.denominator,
        f"{float(memory):.12g}", f"{float(rate):.12g}",
    ]


def curve_rows(n_files: int, n_users: int, collusions, grid_points: int = 41) -> list[list]:
    """Achievable points, envelope vertices and outer-bound samples per l."""
    rows = []
    curves = {l: achievable_points(n_files, n_users, l) for l in collusions}
    top = max(max(p.memory for p in c.points) for c in curves.values())
    grid = [1 + (top - 1) * Fraction(i, grid_points - 1) for i in range(grid_points)] if grid_points > 1 else [Fraction(1)]
    for l, curve in curves.items():
        for p in curve.points:
            rows.append(_curve_row("point", n_files, n_users, l, p.t, p.memory, p.rate))
        for p in curve.envelope:
            rows.append(_curve_row("envelope", n_files, n_users, l, p.t, p.memory, p.rate))
        for m in grid:
            rows.append(_curve_row("outer", n_files, n_users, l, None, m, outer_bound(m, n_files, n_users, l)))
    return rows


def gap_rows(n_files: int, n_users: int, collusions):
    out = []
    for l in collusions:
        out.extend(gap_ratio(n_files, n_users, l))
    return out
