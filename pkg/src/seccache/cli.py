"""Command-line front end.

Users and files are numbered from 1 on the command line and in reports, as
in the usual notation; the library itself is 0-based.

Exit codes: 0 success, 1 failed check or security violation, 2 invalid
configuration.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import sys
from itertools import combinations


from . import __version__
from .bounds import GAP_CSV_COLUMNS
from .container import SchemeContainer, file_digest, read_container, read_library, write_container
from .errors import ContainerError, DecodeFailure, SecCacheError
from .experiments import (
    CURVE_CSV_COLUMNS,
    curve_rows,
    gap_rows,
    golden_example,
    minimal_field,
    oracle_agreement,
    run_scheme,
)
from .scheme import FileLibrary, decode, derive_params, rate_pair, reduce_q, t_max
from .security import sweep_all_colluding_sets
from .streams import rng_streams

EXIT_OK, EXIT_FAIL, EXIT_CONFIG = 0, 1, 2
CSV_VERSION = 1


class ConfigError(Exception):
    pass


# argument helpers ------------------------------------------------------------


def _int_list(text: str) -> list[int]:
    return [int(x) for x in text.replace(" ", "").split(",") if x]


def _t_values(args, k: int, l: int) -> list[int]:
    if args.t_range:
        lo, _, hi = args.t_range.partition(":")
        hi = t_max(k, l) if hi in ("", "max") else int(hi)
        return list(range(int(lo or 0), hi + 1))
    return [args.t]


def _parse_demands(spec: str, n_files: int, n_users: int, rng, n_random: int) -> list[tuple[int, ...]]:
    """``distinct``, ``equal``, ``random``, ``standard`` or explicit 1-based
    vectors such as ``1,2,3,4`` (several separated by ``;``)."""
    cyclic = tuple(u % n_files for u in range(n_users))
    if spec == "distinct":
        return [cyclic]
    if spec == "equal":
        return [tuple([0] * n_users)]
    if spec == "random":
        return [tuple(int(x) for x in rng.integers(0, n_files, size=n_users))]
    if spec == "standard":
        out = [cyclic, tuple([0] * n_users)]
        out += [tuple(int(x) for x in rng.integers(0, n_files, size=n_users)) for _ in range(n_random)]
        return out
    vectors = []
    for part in spec.split(";"):
        vec = _int_list(part)
        if len(vec) != n_users or any(not 1 <= d <= n_files for d in vec):
            raise ConfigError(f"demand {part!r} must list {n_users} file numbers in 1..{n_files}")
        vectors.append(tuple(d - 1 for d in vec))
    return vectors


def _one_based(record: dict) -> dict:
    out = dict(record)
    out["colluding_set"] = [u + 1 for u in record["colluding_set"]]
    if record.get("demand") is not None:
        out["demand"] = [d + 1 for d in record["demand"]]
    return out


def _emit(text: str, path: str | None):
    if path:
        with open(path, "w", newline="") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)


def _csv_text(header_comment: str, columns, rows, footer: list[str] = ()) -> str:
    buf = io.StringIO()
    buf.write(f"# {header_comment} v{CSV_VERSION}\n")
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(columns)
    writer.writerows(rows)
    for line in footer:
        buf.write(f"# {line}\n")
    return buf.getvalue()


# commands --------------------------------------------------------------------


def _replay(path: str) -> int:
    try:
        c = read_container(path)
    except (ContainerError, OSError) as exc:
        print(f"container rejected: {exc}", file=sys.stderr)
        return EXIT_FAIL
    p = c.params
    ok = True
    for k in range(p.n_users):
        try:
            bits = decode(k, c.demand, c.caches[k], c.message, p)
            good = file_digest(bits) == c.digests[c.demand[k]]
        except DecodeFailure as exc:
            print(f"user {k + 1}: decode failure ({exc})")
            good = False
        ok &= good
        print(f"user {k + 1}: file {c.demand[k] + 1} {'OK' if good else 'MISMATCH'}")
    return EXIT_OK if ok else EXIT_FAIL


def cmd_demo(args) -> int:
    if args.replay:
        return _replay(args.replay)
    files = read_library(args.library) if args.library else None
    n_files = len(files) if files is not None else args.n
    file_bits = max(8 * len(f) for f in files) if files is not None else args.file_size
    params = derive_params(n_files, args.k, args.l, args.t, max(file_bits, 1), pad=True)
    rng = rng_streams(args.seed)["demands"]
    demand = _parse_demands(args.demands or "distinct", n_files, args.k, rng, 0)[0]
    library = FileLibrary.from_bytes(files, params) if files is not None else None
    res = run_scheme(params, demand, seed=args.seed, library=library)
    expected = rate_pair(params)
    summary = {
        "params": params.describe(),
        "demand": [d + 1 for d in res.demand],
        "users": [
            {"user": k + 1, "file": res.demand[k] + 1, "decoded": ok} for k, ok in enumerate(res.decoded_ok)
        ],
        "M_measured": str(res.measured_memory),
        "R_measured": str(res.measured_rate),
        "M_formula": str(expected.memory),
        "R_formula": str(expected.rate),
        "ok": res.ok,
    }
    if args.out:
        original = [8 * len(f) for f in files] if files is not None else [params.file_bits] * n_files
        digests = [file_digest(res.library.file_bits(n, params.m)) for n in range(n_files)]
        write_container(
            args.out,
            SchemeContainer(
                params, args.seed, res.demand, res.precoded, res.pool, res.caches, res.message, original, digests
            ),
        )
        summary["container"] = args.out
    if args.format == "json":
        print(json.dumps(summary, indent=2))
    else:
        for u in summary["users"]:
            print(f"user {u['user']}: file {u['file']} {'OK' if u['decoded'] else 'MISMATCH'}")
        print(f"M = {res.measured_memory} ({float(res.measured_memory):g})  formula {expected.memory}")
        print(f"R = {res.measured_rate} ({float(res.measured_rate):g})  formula {expected.rate}")
        if args.out:
            print(f"container written to {args.out}")
    return EXIT_OK if res.ok else EXIT_FAIL


def cmd_verify(args) -> int:
    exit_code = EXIT_OK
    reports = []
    for t in _t_values(args, args.k, args.l):
        if args.oracle:
            probe = derive_params(args.n, args.k, args.l, t, 1, pad=True)
            spec = minimal_field(probe.g)
            params = derive_params(args.n, args.k, args.l, t, args.file_size or probe.p * spec.m, spec=spec, pad=True)
        else:
            params = derive_params(args.n, args.k, args.l, t, args.file_size or 1, pad=True)
        dropped = []
        if args.mutate == "reduce-q":
            params = reduce_q(params)
        elif args.mutate == "drop-ekey":
            dropped = [params.plus_subsets[-1]]
        rng = rng_streams(args.seed)["demands"]
        demands = _parse_demands(args.demands or "standard", params.n_files, params.n_users, rng, args.n_random)
        report = sweep_all_colluding_sets(params, demands, dropped_ekeys=dropped)
        doc = report.to_json()
        doc["records"] = [_one_based(r) for r in doc["records"]]
        doc["demands_covered"] = [[d + 1 for d in v] for v in doc["demands_covered"]]
        doc["mutation"] = args.mutate
        if args.oracle:
            rows = oracle_agreement(params, demands, dropped_ekeys=dropped)
            doc["oracle"] = [_one_based(r) for r in rows]
            disagree = [r for r in rows if not r["agree"]]
            print(f"t={t}: oracle checked {len(rows)} cases, {len(disagree)} disagreements")
            if disagree:
                exit_code = EXIT_FAIL
        n_bad = len(report.violations)
        print(f"t={t}: {len(report.records)} checks over {len(demands)} demands, {n_bad} violations")
        if n_bad:
            first = _one_based(report.violations[0])
            print(
                f"  violation: {first['constraint']} colluding set {first['colluding_set']} "
                f"demand {first['demand']} rank[A|B]={first['rank_A_B']} rank B={first['rank_B']}"
            )
            exit_code = EXIT_FAIL
        reports.append(doc)
    if args.out:
        _emit(json.dumps(reports if len(reports) > 1 else reports[0], indent=2) + "\n", args.out)
    return exit_code


def cmd_curves(args) -> int:
    ls = _int_list(args.l_list)
    rows = curve_rows(args.n, args.k, ls, grid_points=args.grid)
    if args.format == "json":
        _emit(json.dumps([dict(zip(CURVE_CSV_COLUMNS, r)) for r in rows], indent=2) + "\n", args.out)
    else:
        _emit(_csv_text("seccache curves", CURVE_CSV_COLUMNS, rows), args.out)
    return EXIT_OK


def cmd_gap(args) -> int:
    ls = _int_list(args.l_list) if args.l_list else list(range(1, args.k))
    rows = gap_rows(args.n, args.k, ls)
    flagged = [r.ratio for r in rows if r.flagged and r.ratio is not None]
    worst = max(flagged) if flagged else None
    summary = f"max_flagged_ratio={'none' if worst is None else f'{float(worst):.12g}'} ({worst})"
    if args.format == "json":
        doc = {"rows": [dict(zip(GAP_CSV_COLUMNS, r.as_csv_row())) for r in rows], "max_flagged_ratio": None if worst is None else str(worst)}
        _emit(json.dumps(doc, indent=2) + "\n", args.out)
    else:
        _emit(_csv_text("seccache gap", GAP_CSV_COLUMNS, [r.as_csv_row() for r in rows], [summary]), args.out)
    print(summary, file=sys.stderr if not args.out else sys.stdout)
    return EXIT_OK


def cmd_golden(args) -> int:
    res, checks = golden_example(seed=args.seed, file_bits=args.file_size)
    p = res.params
    for k, cache in enumerate(res.caches):
        blocks = ",".join(f"W~{n + 1},{T[0] + 1}" for n, T in sorted(cache.blocks))
        keys = ",".join("E" + "".join(str(u + 1) for u in T) for T in sorted(cache.e_keys))
        print(f"Z{k + 1} = {{{blocks}, {keys}}}")
    for a, b in combinations(range(p.n_users), 2):
        print(
            f"X{a + 1}{b + 1} = W~{res.demand[b] + 1},{a + 1} + W~{res.demand[a] + 1},{b + 1} + E{a + 1}{b + 1}"
        )
    for name, ok in checks.items():
        print(f"[{'PASS' if ok else 'FAIL'}] {name}")
    return EXIT_OK if all(checks.values()) else EXIT_FAIL


# parser ----------------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="seccache", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    def scheme_args(p, t_range=False):
        p.add_argument("--n", type=int, default=4, help="number of files N")
        p.add_argument("--k", type=int, default=4, help="number of users K")
        p.add_argument("--l", type=int, default=2, help="number of colluding users l")
        p.add_argument("--t", type=int, default=1, help="caching parameter t")
        if t_range:
            p.add_argument("--t-range", help="LO:HI or LO:max, overrides --t")
        p.add_argument("--seed", type=int, default=0)
        p.add_argument("--demands", help="distinct | equal | random | standard | 1,2,3,4[;...]")

    p = sub.add_parser("demo", help="run precode/place/deliver/decode end to end")
    scheme_args(p)
    p.add_argument("--file-size", type=int, default=1024, help="file size F in bits (padded to P*m)")
    p.add_argument("--library", help="raw concatenated files with a <path>.json sidecar")
    p.add_argument("--out", help="write the scheme container here")
    p.add_argument("--replay", help="decode from an existing container and check digests")
    p.add_argument("--format", choices=("text", "json"), default="text")
    p.set_defaults(func=cmd_demo)

    p = sub.add_parser("verify", help="certify both secrecy constraints for every colluding set")
    scheme_args(p, t_range=True)
    p.add_argument("--file-size", type=int, default=None, help="file size in bits (default: one stripe)")
    p.add_argument("--n-random", type=int, default=20, help="random demands in the standard sample")
    p.add_argument("--mutate", choices=("none", "drop-ekey", "reduce-q"), default="none")
    p.add_argument("--oracle", action="store_true", help="confirm by brute-force mutual information")
    p.add_argument("--out", help="write the JSON report here")
    p.add_argument("--format", choices=("json",), default="json")
    p.set_defaults(func=cmd_verify)

    for name, func, helptext in (
        ("curves", cmd_curves, "achievable points, envelopes and outer-bound samples"),
        ("gap", cmd_gap, "inner/outer bound ratio at every achievable point"),
    ):
        p = sub.add_parser(name, help=helptext)
        p.add_argument("--n", type=int, default=30)
        p.add_argument("--k", type=int, default=30)
        p.add_argument("--l", dest="l_list", default="1,2,5,10" if name == "curves" else None,
                       help="comma-separated collusion sizes")
        if name == "curves":
            p.add_argument("--grid", type=int, default=41, help="outer-bound sample count")
        p.add_argument("--out")
        p.add_argument("--format", choices=("csv", "json"), default="csv")
        p.set_defaults(func=func)

    p = sub.add_parser("golden", help="the 4-file, 4-user worked example")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--file-size", type=int, default=1024)
    p.set_defaults(func=cmd_golden)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except (ConfigError, SecCacheError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG


if __name__ == "__main__":
    sys.exit(main())
