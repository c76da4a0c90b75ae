"""Achievable (M, R) points, their lower convex envelope, the outer bound
R_s*(M) and the inner/outer gap ratio, all in exact rational arithmetic."""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction
from typing import Iterable

from .errors import DomainError, InvalidCollusion, InvalidT
from .scheme import t_max

__all__ = [
    "RatePoint",
    "TradeoffCurve",
    "achievable_points",
    "lower_convex_envelope",
    "rc_of_t",
    "outer_bound",
    "outer_bound_s_range",
    "cutset_violations",
    "corollary_flag",
    "GapRow",
    "gap_ratio",
    "GAP_CSV_COLUMNS",
]


@dataclass(frozen=True)
class RatePoint:
    t: int | None  # None for envelope-only points
    memory: Fraction
    rate: Fraction


@dataclass
class TradeoffCurve:
    points: list[RatePoint]
    envelope: list[RatePoint]

    def envelope_at(self, memory) -> Fraction:
        """Piecewise-linear envelope value; constant beyond the last vertex."""
        memory = Fraction(memory)
        env = self.envelope
        if memory <= env[0].memory:
            if memory < env[0].memory:
                raise DomainError(f"M = {memory} lies left of the first achievable point")
            return env[0].rate
        for a, b in zip(env, env[1:]):
            if memory <= b.memory:
                w = (memory - a.memory) / (b.memory - a.memory)
                return a.rate + w * (b.rate - a.rate)
        return env[-1].rate


def _check(n_files: int, n_users: int, collusion: int):
    if n_files < 1 or n_users < 1:
        raise DomainError("N and K must be at least 1")
    if not 1 <= collusion <= n_users - 1:
        raise InvalidCollusion(f"l must lie in 1..{n_users - 1}, got {collusion}")


def _cross(o: RatePoint, a: RatePoint, b: RatePoint) -> Fraction:
    return (a.memory - o.memory) * (b.rate - o.rate) - (a.rate - o.rate) * (b.memory - o.memory)


def lower_convex_envelope(points: Iterable[RatePoint]) -> list[RatePoint]:
    """Lower hull (monotone chain) of the points, sorted by memory.

    Among points with equal memory only the lowest rate survives; collinear
    interior points are dropped.
    """
    pts = sorted(points, key=lambda p: (p.memory, p.rate))
    hull: list[RatePoint] = []
    for p in pts:
        if hull and hull[-1].memory == p.memory:
            continue
        while len(hull) >= 2 and _cross(hull[-2], hull[-1], p) <= 0:
            hull.pop()
        hull.append(p)
    return hull


def _memory(n_files: int, n_users: int, collusion: int, t: int) -> Fraction:
    blocks = n_files * math.comb(n_users - 1, t - 1) if t else 0
    return Fraction(blocks + math.comb(n_users - 1, t), math.comb(n_users - collusion, t))


def rc_of_t(n_files: int, n_users: int, collusion: int, t: int) -> Fraction:
    """Achievable rate as a function of t, via the binomial ratio and
    cross-checked against the telescoped product form."""
    _check(n_files, n_users, collusion)
    if not 0 <= t <= t_max(n_users, collusion):
        raise InvalidT(f"t = {t} outside 0..{t_max(n_users, collusion)}")
    k, l = n_users, collusion
    ratio = Fraction(math.comb(k, t + 1), math.comb(k - l, t))
    product = Fraction(k - t, t + 1)
    for j in range(t):
        product *= Fraction(k - j, k - l - j)
    if ratio != product:  # pragma: no cover - algebraic identity
        raise AssertionError(f"closed forms disagree at t={t}: {ratio} != {product}")
    return product


def achievable_points(n_files: int, n_users: int, collusion: int) -> TradeoffCurve:
    _check(n_files, n_users, collusion)
    pts = [
        RatePoint(t, _memory(n_files, n_users, collusion, t), rc_of_t(n_files, n_users, collusion, t))
        for t in range(t_max(n_users, collusion) + 1)
    ]
    pts.sort(key=lambda p: p.memory)
    return TradeoffCurve(pts, lower_convex_envelope(pts))


def outer_bound_s_range(n_files: int, n_users: int, collusion: int) -> range:
    """The s values of the first regime (empty in the second regime)."""
    top = min(n_files // 2, n_users)
    return range(collusion, top + 1) if collusion < top else range(0)


def outer_bound(memory, n_files: int, n_users: int, collusion: int) -> Fraction:
    """Lower bound R_s*(M) on any achievable rate at memory ``M >= 1``."""
    memory = Fraction(memory)
    if memory < 1:
        raise DomainError(f"outer bound needs M >= 1, got {memory}")
    top = min(n_files // 2, n_users)
    if collusion >= top:
        return Fraction(top)
    best = max(
        Fraction(s * (n_files // s) - collusion - (s - collusion) * memory, n_files // s - 1)
        for s in range(collusion, top + 1)
    )
    return max(best, Fraction(0))


def cutset_violations(memory, rate, n_files: int, n_users: int, collusion: int) -> list[int]:
    """s values for which (floor(N/s) - 1) R + (s - l) M >= s floor(N/s) - l fails."""
    memory, rate = Fraction(memory), Fraction(rate)
    l = collusion
    return [
        s
        for s in outer_bound_s_range(n_files, n_users, collusion)
        if (n_files // s - 1) * rate + (s - l) * memory < s * (n_files // s) - l
    ]


def corollary_flag(n_files: int, n_users: int, collusion: int, t: int) -> bool:
    """Whether a point meets t >= floor((K+1)/(10 l)) and K/N <= 3."""
    return t >= (n_users + 1) // (10 * collusion) and n_users <= 3 * n_files


@dataclass(frozen=True)
class GapRow:
    n_files: int
    n_users: int
    collusion: int
    t: int
    memory: Fraction
    rate: Fraction
    outer: Fraction
    ratio: Fraction | None  # None when the outer bound is zero
    flagged: bool

    def as_csv_row(self) -> list:
        return [
            self.n_files,
            self.n_users,
            self.collusion,
            self.t,
            self.memory.numerator,
            self.memory.denominator,
            self.rate.numerator,
            self.rate.denominator,
            f"{float(self.outer):.12g}",
            "inf" if self.ratio is None else f"{float(self.ratio):.12g}",
            int(self.flagged),
        ]


GAP_CSV_COLUMNS = ["N", "K", "l", "t", "M_num", "M_den", "R_num", "R_den", "Rs_star", "ratio", "flagged"]


def gap_ratio(n_files: int, n_users: int, collusion: int) -> list[GapRow]:
    """R^C(M) / R_s*(M) at every achievable point."""
    rows = []
    for pt in achievable_points(n_files, n_users, collusion).points:
        outer = outer_bound(pt.memory, n_files, n_users, collusion)
        ratio = pt.rate / outer if outer else None
        rows.append(
            GapRow(
                n_files,
                n_users,
                collusion,
                pt.t,
                pt.memory,
                pt.rate,
                outer,
                ratio,
                corollary_flag(n_files, n_users, collusion, pt.t),
            )
        )
    return rows
