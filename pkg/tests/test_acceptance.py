"""Acceptance criteria, one printed PASS/FAIL line each.

The lines are repeated in pytest's terminal summary; the file also runs
standalone with ``python3 tests/test_acceptance.py``.
"""

import secrets
import sys
import time
from fractions import Fraction
from itertools import combinations, product

import numpy as np
import pytest

from seccache.bounds import achievable_points, cutset_violations, gap_ratio, outer_bound_s_range
from seccache.experiments import golden_example, oracle_agreement, run_scheme
from seccache.gf import FieldSpec, build_cauchy, mat_rank
from seccache.scheme import (
    FileLibrary,
    decode,
    deliver,
    derive_params,
    make_key_pool,
    place,
    precode,
    rate_pair,
    reduce_q,
    t_max,
)
from seccache.security import standard_demands, sweep_all_colluding_sets
from seccache.sharing import SharingParams, leakage_rank_check, make_shares, reconstruct
from seccache.streams import rng_streams

from tiny import tiny_instances

FIXED_SEED = 20261016
RESULTS = {}


def report(number, title, ok, detail, elapsed=None):
    timing = "" if elapsed is None else f" [{elapsed:.2f}s]"
    line = f"[{'PASS' if ok else 'FAIL'}] criterion {number}: {title} - {detail}{timing}"
    RESULTS[number] = line
    print(line)
    return ok


def grid(max_k=8):
    for k in range(2, max_k + 1):
        for l in range(1, k):
            for t in range(t_max(k, l) + 1):
                yield k, l, t


# 1 -----------------------------------------------------------------------------


def check_golden():
    worst = 0.0
    failed = []
    for seed in (0, 1, 2, FIXED_SEED):
        start = time.perf_counter()
        _, checks = golden_example(seed=seed, file_bits=1024)
        worst = max(worst, time.perf_counter() - start)
        failed += [f"seed {seed}: {name}" for name, ok in checks.items() if not ok]
    ok = not failed and worst < 1.0
    detail = "structure, composition and decoding match" if not failed else "; ".join(failed)
    return report(1, "golden example (4,4,2,1,1024)", ok, f"{detail}, slowest run {worst:.3f}s < 1s", worst)


# 2 -----------------------------------------------------------------------------


def check_rate_formulas():
    start = time.perf_counter()
    bad, count = [], 0
    for k, l, t in grid(8):
        for n in range(1, k + 1):
            params = derive_params(n, k, l, t, 1, pad=True)
            res = run_scheme(params, tuple(u % n for u in range(k)))
            count += 1
            if (res.measured_memory, res.measured_rate) != tuple(rate_pair(params)):
                bad.append((n, k, l, t))
    top = {tuple(rate_pair(derive_params(30, 30, l, 0, 8))) for l in range(1, 30)}
    ok = not bad and top == {(Fraction(1), Fraction(30))}
    detail = f"{count} configurations (N=1..K, K<=8) measured == formula, (30,30,l,0) -> {sorted(top)}"
    if bad:
        detail += f"; mismatches {bad[:5]}"
    return report(2, "rate formulas", ok, detail, time.perf_counter() - start)


# 3 -----------------------------------------------------------------------------


def check_security_sweep():
    start = time.perf_counter()
    clean_bad, n_configs, n_checks = [], 0, 0
    drop_hit = drop_total = rq_hit = rq_total = 0
    drop_miss, rq_miss = [], []
    for k, l, t in grid(8):
        for n in sorted({1, 2, k}):
            params = derive_params(n, k, l, t, 1, pad=True)
            demands = standard_demands(params, 20, rng_streams(FIXED_SEED)["demands"])
            rep = sweep_all_colluding_sets(params, demands)
            n_configs += 1
            n_checks += len(rep.records)
            if not rep.ok:
                clean_bad.append((n, k, l, t))
            if n >= 2 and t + 1 <= k - l:
                drop_total += 1
                target = params.plus_subsets[-1]
                if sweep_all_colluding_sets(params, demands, dropped_ekeys=[target]).violations:
                    drop_hit += 1
                else:
                    drop_miss.append((n, k, l, t))
            if params.q >= 1:
                rq_total += 1
                if sweep_all_colluding_sets(reduce_q(params), demands[:1]).violations:
                    rq_hit += 1
                else:
                    rq_miss.append((n, k, l, t))
    elapsed = time.perf_counter() - start
    ok = not clean_bad and drop_hit >= 1 and rq_hit >= 1 and elapsed < 300
    detail = (
        f"{n_configs} schemes (N in {{1,2,K}}), {n_checks} checks, "
        f"{len(clean_bad)} with violations; drop-ekey caught in {drop_hit}/{drop_total}, "
        f"reduce-q caught in {rq_hit}/{rq_total}; < 300s"
    )
    if clean_bad:
        detail += f"; failing {clean_bad[:5]}"
    if drop_miss or rq_miss:
        detail += f"; controls not triggered by the demand sample: drop {drop_miss[:3]}, reduce-q {rq_miss[:3]}"
    return report(3, "security sweep K<=8", ok, detail, elapsed)


# 4 -----------------------------------------------------------------------------


def check_oracle():
    start = time.perf_counter()
    n_inst = n_rows = n_false = 0
    disagree = []
    for tag, params, dropped in tiny_instances(max_k=4, max_n=3):
        demands = list(product(range(params.n_files), repeat=params.n_users))
        rows = oracle_agreement(params, demands, dropped_ekeys=dropped)
        n_inst += 1
        n_rows += len(rows)
        n_false += sum(not r["verdict"] for r in rows)
        disagree += [(tag, r) for r in rows if not r["agree"]]
    elapsed = time.perf_counter() - start
    ok = not disagree and n_false > 0 and elapsed < 10
    detail = (
        f"{n_inst} instances (K<=4, N<=3, <=24 random bits, every demand), {n_rows} cases, "
        f"{n_false} rank-false cases all with MI > 0, {len(disagree)} disagreements; < 10s"
    )
    return report(4, "oracle agreement", ok, detail, elapsed)


# 5 -----------------------------------------------------------------------------


def check_soundness():
    start = time.perf_counter()
    points = inequalities = 0
    bad = []
    for n in range(1, 31):
        for k in range(2, 31):
            for l in range(1, k):
                n_s = len(outer_bound_s_range(n, k, l))
                for p in achievable_points(n, k, l).points:
                    points += 1
                    inequalities += n_s
                    if cutset_violations(p.memory, p.rate, n, k, l):
                        bad.append((n, k, l, p.t))
    detail = f"{points} points, {inequalities} inequalities over N<=30, 2<=K<=30, {len(bad)} violations"
    return report(5, "outer-bound soundness", not bad, detail, time.perf_counter() - start)


# 6 -----------------------------------------------------------------------------


def check_fig3():
    start = time.perf_counter()
    rows = [r for r in gap_ratio(30, 30, 5) if r.t >= 31 // 50 and r.memory >= 1]
    finite = all(r.ratio is not None for r in rows)
    worst = max(r.ratio for r in rows) if finite else None
    elapsed = time.perf_counter() - start
    ok = finite and worst < 3 and elapsed < 1
    detail = f"max ratio over {len(rows)} points = {worst} ~ {float(worst):.4f} < 3" if finite else "zero outer bound"
    return report(6, "(30,30,5) ratio", ok, detail, elapsed)


# 7 -----------------------------------------------------------------------------


def check_corollary():
    start = time.perf_counter()
    flagged, worst, bad = 0, Fraction(0), []
    for nk in range(6, 31):
        for l in range(1, nk):
            for r in gap_ratio(nk, nk, l):
                if not r.flagged:
                    continue
                flagged += 1
                if r.ratio is None or r.ratio > 12:
                    bad.append((nk, l, r.t))
                else:
                    worst = max(worst, r.ratio)
    detail = f"{flagged} flagged points, worst ratio {float(worst):.4f} <= 12, {len(bad)} exceptions"
    return report(7, "corollary envelope N=K in 6..30", not bad, detail, time.perf_counter() - start)


# 8 -----------------------------------------------------------------------------


def check_threshold():
    params = SharingParams(2, 2, FieldSpec(4))
    q_sets = [s for s in combinations(range(4), 2)]
    q1_sets = [s for s in combinations(range(4), 3)]
    pass_q = sum(leakage_rank_check(s, params) for s in q_sets)
    fail_q1 = sum(not leakage_rank_check(s, params) for s in q1_sets)
    ok = pass_q == 6 and fail_q1 == 4
    return report(8, "(4,2,2) threshold over GF(16)", ok, f"{pass_q}/6 Q-subsets pass, {fail_q1}/4 (Q+1)-subsets fail")


# 9 -----------------------------------------------------------------------------


def _field_axioms_exhaustive():
    for m in range(1, 9):
        spec = FieldSpec(m)
        a = np.arange(spec.order)
        t = spec.mul(a[:, None], a[None, :]).astype(np.int64)
        if not (np.array_equal(t, t.T) and np.array_equal(t[1], a) and not t[0].any()):
            return False
        if any(sorted(t[x, 1:]) != list(range(1, spec.order)) for x in range(1, spec.order)):
            return False
        for c in range(spec.order):
            if not np.array_equal(t[t, c], t[a[:, None], t[:, c][None, :]]):
                return False
            if not np.array_equal(t[a[:, None], a[None, :] ^ c], t ^ t[:, c][:, None]):
                return False
    return True


def _cauchy_exhaustive():
    spec = FieldSpec(4)
    for g in range(1, 6):
        c = build_cauchy(g, spec)
        for size in range(1, g + 1):
            for rows in combinations(range(g), size):
                for cols in combinations(range(g), size):
                    if mat_rank(c[np.ix_(rows, cols)], spec) != size:
                        return False
    return True


def _share_round_trip(seed):
    rng = np.random.default_rng(seed)
    for m in (4, 8, 16):
        spec = FieldSpec(m)
        for _ in range(25):
            g = int(rng.integers(1, min(spec.order // 2, 12) + 1))
            p = int(rng.integers(1, g + 1))
            params = SharingParams(p, g - p, spec)
            s = rng.integers(0, spec.order, size=(p, 4))
            k = rng.integers(0, spec.order, size=(g - p, 4))
            back_s, back_k = reconstruct(make_shares(s, k, params), params)
            if not (np.array_equal(back_s, s) and np.array_equal(back_k, k)):
                return False
    return True


def _decode_round_trip(seed):
    """100 random demands per configuration (K <= 6, all l and t, N = K)."""
    count = 0
    for k, l, t in grid(6):
        params = derive_params(k, k, l, t, 1, pad=True)
        rngs = rng_streams(seed * 1000 + k * 100 + l * 10 + t)
        lib = FileLibrary.random(params, rngs["files"])
        pre = precode(lib, params, rngs["y_keys"])
        pool = make_key_pool(params, rngs["e_keys"])
        caches = place(pre, pool, params)
        truth = [lib.file_bits(n, params.m) for n in range(k)]
        for _ in range(100):
            d = tuple(int(x) for x in rngs["demands"].integers(0, k, size=k))
            msg = deliver(d, pre, pool, params)
            for u in range(k):
                if not np.array_equal(decode(u, d, caches[u], msg, params), truth[d[u]]):
                    return False, count
            count += 1
    return True, count


def check_properties(seeds=None):
    start = time.perf_counter()
    seeds = seeds or [FIXED_SEED] + [secrets.randbits(32) for _ in range(5)]
    axioms = _field_axioms_exhaustive()
    cauchy = _cauchy_exhaustive()
    per_seed = []
    for seed in seeds:
        shares = _share_round_trip(seed)
        decoded, count = _decode_round_trip(seed)
        per_seed.append((seed, shares and decoded, count))
    ok = axioms and cauchy and all(s_ok for _, s_ok, _ in per_seed)
    detail = (
        f"field axioms m<=8 {'ok' if axioms else 'FAILED'}, Cauchy g<=5 {'ok' if cauchy else 'FAILED'}, "
        f"round trips for seeds {[s for s, _, _ in per_seed]}: "
        f"{['ok' if s_ok else 'FAILED' for _, s_ok, _ in per_seed]} ({per_seed[0][2]} demands per seed)"
    )
    return report(9, "property suites, fixed + 5 fresh seeds", ok, detail, time.perf_counter() - start)


CRITERIA = [
    check_golden,
    check_rate_formulas,
    check_security_sweep,
    check_oracle,
    check_soundness,
    check_fig3,
    check_corollary,
    check_threshold,
    check_properties,
]


@pytest.mark.slow
@pytest.mark.parametrize("check", CRITERIA, ids=[f"criterion_{i}" for i in range(1, 10)])
def test_criterion(check):
    assert check()


if __name__ == "__main__":
    outcomes = [c() for c in CRITERIA]
    print(f"{sum(outcomes)}/{len(outcomes)} criteria pass")
    sys.exit(0 if all(outcomes) else 1)
