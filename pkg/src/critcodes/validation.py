"""Exhaustive item-law checks over a finite enumeration budget.

cf1: two items of a continuous code on a common ball (directly or by
inheritance from a containing ball) have overlapping value intervals. lsc1: an item's bound is forced on every enumerated ball
strictly inside its ball. lsc2: a forced bound forces every smaller bound.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

from .codes import ContinuousCode, LscCode
from .rationals import pow2
from .spaces import Ball, ClosedInterval, iter_cover

PAIRWISE_LIMIT = 3000


@dataclass
class LawReport:
    code: str
    items: int
    pairs: int = 0
    failures: list = field(default_factory=list)

    @property
    def ok(self) -> bool:
        return not self.failures


def _canonical_levels(space, budget: int) -> dict:
    return {ball: k for _, k, _, ball in iter_cover(space, budget)}


_CONTAINMENT: dict = {}


def _containment(space, budget: int) -> tuple[dict, dict]:
    """Levels of the canonical balls within budget and, per ball, its strict canonical containers.

    The relation depends only on the space and the budget, so it is shared
    by every code checked on the same cover.
    """
    key = (space, budget)
    if key not in _CONTAINMENT:
        levels = _canonical_levels(space, budget)
        if isinstance(space, ClosedInterval):
            up = _interval_up(space, budget)
        else:
            up = {}
            for ball, lv in levels.items():
                found = []
                for k in range(lv + 1):
                    for _, b in space.cover_hits(k, ball.center):
                        if b in levels and b != ball and space.strictly_inside(ball, b):
                            found.append(b)
                up[ball] = tuple(found)
        if len(_CONTAINMENT) > 8:
            _CONTAINMENT.clear()
        _CONTAINMENT[key] = (levels, up)
    return _CONTAINMENT[key]


def _interval_up(space, budget: int) -> dict:
    """The same relation on an interval cover, in integers scaled by a common denominator."""
    entries = [(k, i, ball) for _, k, i, ball in iter_cover(space, budget)]
    den = 1
    for _, _, ball in entries:
        den = math.lcm(den, (ball.center - space.a).denominator, ball.radius.denominator)
    at = {}
    scaled = {}
    for k, i, ball in entries:
        c, r = (ball.center - space.a) * den, ball.radius * den
        scaled[ball] = (int(c), int(r))
        at[k, i] = ball
    step = {k: scaled[at[k, 0]][1] for k, _, _ in entries}
    last = {}
    for k, i, _ in entries:
        last[k] = max(last.get(k, 0), i)
    up = {}
    for k1, _, ball in entries:
        c1, r1 = scaled[ball]
        found = []
        for k in range(k1 + 1):
            j = c1 // step[k]
            for i in sorted({j - 1, j, j + 1, last[k]}):
                b = at.get((k, i))
                if b is None or b is ball:
                    continue
                c2, r2 = scaled[b]
                if abs(c1 - c2) + r1 < r2:
                    found.append(b)
        up[ball] = tuple(found)
    return up


def _containers(space, ball: Ball, index: dict, up: dict):
    """Enumerated balls B with ball strictly inside B."""
    if up:
        for b in up[ball]:
            if b in index:
                yield b
        return
    for b in index:
        if b != ball and space.strictly_inside(ball, b):
            yield b


def _canonical_up(space, index: dict, budget: int) -> dict:
    levels, up = _containment(space, budget)
    if all(b in levels for b in index):
        return up
    if len(index) > PAIRWISE_LIMIT:
        raise ValueError("too many non-canonical balls for a pairwise check")
    return {}


def check_cf1(code: ContinuousCode, budget: int) -> LawReport:
    """Open value intervals meet for items on a common ball, including inherited ones.

    A ball strictly inside an enumerated ball inherits its items, so every
    pair (B, B') with B inside B' is a pair on the common ball B.
    """
    rep = LawReport(getattr(code, "name", "code"), 0)
    index: dict = {}
    for ball, (u, v) in code.items(budget):
        rep.items += 1
        if ball in index:
            rep.pairs += 1
            lo, hi = index[ball]
            index[ball] = (max(lo, u), min(hi, v))
        else:
            index[ball] = (u, v)
    up = _canonical_up(code.space, index, budget)
    for ball, (lo, hi) in index.items():
        if not lo < hi:
            rep.failures.append(("cf1", ball, (lo, hi)))
        for b in _containers(code.space, ball, index, up):
            rep.pairs += 1
            u, v = index[b]
            if not max(lo, u) < min(hi, v):
                rep.failures.append(("cf1", ball, b, (lo, hi), (u, v)))
    return rep


def check_lsc_laws(code: LscCode, budget: int) -> LawReport:
    rep = LawReport(getattr(code, "name", "code"), 0)
    index: dict = {}
    for ball, q in code.items(budget):
        rep.items += 1
        if ball not in index or q > index[ball]:
            index[ball] = q
    up = _canonical_up(code.space, index, budget)
    sp = code.space
    for ball, q in index.items():
        forced = code.forced(ball, budget)
        # lsc2: q and everything below it is forced
        if not (q <= forced and q - pow2(-10) <= forced):
            rep.failures.append(("lsc2", ball, q, forced))
        # lsc1: containers' bounds pass down
        for b in _containers(sp, ball, index, up):
            rep.pairs += 1
            if not forced >= index[b]:
                rep.failures.append(("lsc1", ball, b, index[b], forced))
    return rep


def check_code_laws(code, budget: int) -> LawReport:
    if isinstance(code, ContinuousCode):
        return check_cf1(code, budget)
    return check_lsc_laws(code, budget)
