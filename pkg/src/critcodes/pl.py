"""Exact piecewise-linear functions on a closed rational interval."""

from __future__ import annotations

from bisect import bisect_right
from fractions import Fraction
from typing import Iterable, Sequence

from .errors import InvalidInput
from .rationals import Q


class PLFunction:
    """Continuous piecewise-linear function given by its breakpoints.

    Breakpoints are stored canonically: strictly increasing abscissae with
    collinear interior breakpoints removed, so two objects are equal exactly
    when they describe the same function.
    """

    __slots__ = ("ts", "vs", "_hash")

    def __init__(self, knots: Iterable[Sequence]):
        pts = [(Q(t), Q(v)) for t, v in knots]
        if not pts:
            raise InvalidInput("a piecewise-linear function needs at least one breakpoint")
        for (t0, _), (t1, _) in zip(pts, pts[1:]):
            if not t0 < t1:
                raise InvalidInput("breakpoints must be strictly increasing")
        kept = [pts[0]]
        for i in range(1, len(pts) - 1):
            (ta, va), (tb, vb), (tc, vc) = kept[-1], pts[i], pts[i + 1]
            if (vb - va) * (tc - ta) != (vc - va) * (tb - ta):
                kept.append(pts[i])
        if len(pts) > 1:
            kept.append(pts[-1])
        self.ts = tuple(t for t, _ in kept)
        self.vs = tuple(v for _, v in kept)
        self._hash = None

    @classmethod
    def constant(cls, value, lo=0, hi=1) -> "PLFunction":
        return cls([(lo, value), (hi, value)])

    @property
    def knots(self) -> list[tuple[Fraction, Fraction]]:
        return list(zip(self.ts, self.vs))

    @property
    def domain(self) -> tuple[Fraction, Fraction]:
        return self.ts[0], self.ts[-1]

    def __call__(self, t) -> Fraction:
        t = Q(t)
        ts, vs = self.ts, self.vs
        if t < ts[0] or t > ts[-1]:
            raise InvalidInput(f"{t} outside domain [{ts[0]}, {ts[-1]}]")
        i = bisect_right(ts, t) - 1
        if i >= len(ts) - 1:
            return vs[-1]
        t0, t1 = ts[i], ts[i + 1]
        return vs[i] + (vs[i + 1] - vs[i]) * (t - t0) / (t1 - t0)

    def __eq__(self, other) -> bool:
        return isinstance(other, PLFunction) and self.ts == other.ts and self.vs == other.vs

    def __hash__(self) -> int:
        if self._hash is None:
            self._hash = hash((self.ts, self.vs))
        return self._hash

    def __repr__(self) -> str:
        inner = ", ".join(f"({t}, {v})" for t, v in zip(self.ts, self.vs))
        return f"PLFunction([{inner}])"

    def sort_key(self):
        return (self.ts, self.vs)

    def _merged(self, other: "PLFunction", lo, hi) -> list[Fraction]:
        pts = {t for t in self.ts if lo <= t <= hi}
        pts.update(t for t in other.ts if lo <= t <= hi)
        pts.update((lo, hi))
        return sorted(pts)

    def sup_dist(self, other: "PLFunction") -> Fraction:
        """Exact sup-norm of the difference; the sup sits at a merged breakpoint."""
        if self.domain != other.domain:
            raise InvalidInput("piecewise-linear functions on different domains")
        if self.ts == other.ts:
            return max(abs(a - b) for a, b in zip(self.vs, other.vs))
        return max(_one_sided(self, other), _one_sided(other, self))

    def _values_on(self, lo, hi) -> list[Fraction]:
        lo, hi = Q(lo), Q(hi)
        a, b = self.domain
        lo, hi = max(lo, a), min(hi, b)
        if lo > hi:
            return []
        pts = [lo, hi] + [t for t in self.ts if lo < t < hi]
        return [self(t) for t in pts]

    def min_on(self, lo, hi) -> Fraction:
        """Minimum over the closed interval [lo, hi] clipped to the domain."""
        vals = self._values_on(lo, hi)
        if not vals:
            raise InvalidInput("empty interval")
        return min(vals)

    def max_on(self, lo, hi) -> Fraction:
        vals = self._values_on(lo, hi)
        if not vals:
            raise InvalidInput("empty interval")
        return max(vals)

    def norm_on(self, lo, hi) -> Fraction:
        """sup |h| over [lo, hi]."""
        vals = self._values_on(lo, hi)
        return max(abs(v) for v in vals) if vals else Fraction(0)

    def argmin_on(self, lo, hi) -> Fraction:
        lo, hi = Q(lo), Q(hi)
        a, b = self.domain
        lo, hi = max(lo, a), min(hi, b)
        pts = sorted({lo, hi, *[t for t in self.ts if lo < t < hi]})
        return min(pts, key=lambda t: (self(t), t))

    def map_values(self, fn) -> "PLFunction":
        return PLFunction((t, fn(v)) for t, v in zip(self.ts, self.vs))

    def rescale_domain(self, lo, hi) -> "PLFunction":
        """The same shape reparametrized affinely onto [lo, hi]."""
        a, b = self.domain
        lo, hi = Q(lo), Q(hi)
        return PLFunction((lo + (t - a) * (hi - lo) / (b - a), v) for t, v in zip(self.ts, self.vs))

    def combine(self, other: "PLFunction", op) -> "PLFunction":
        """Pointwise op, valid for ops that preserve linearity between merged breakpoints."""
        lo, hi = self.domain
        return PLFunction((t, op(self(t), other(t))) for t in self._merged(other, lo, hi))

    def __add__(self, other: "PLFunction") -> "PLFunction":
        return self.combine(other, lambda a, b: a + b)

    def __sub__(self, other: "PLFunction") -> "PLFunction":
        return self.combine(other, lambda a, b: a - b)


def _one_sided(p: PLFunction, q: PLFunction) -> Fraction:
    """max |p - q| over the breakpoints of p, walking q's segments in step."""
    qts, qvs = q.ts, q.vs
    last = len(qts) - 1
    j, best = 0, Fraction(0)
    for t, v in zip(p.ts, p.vs):
        while j < last - 1 and qts[j + 1] <= t:
            j += 1
        if last == 0 or t == qts[j]:
            w = qvs[j]
        elif t == qts[j + 1]:
            w = qvs[j + 1]
        else:
            t0, t1 = qts[j], qts[j + 1]
            w = qvs[j] + (qvs[j + 1] - qvs[j]) * (t - t0) / (t1 - t0)
        d = abs(v - w)
        if d > best:
            best = d
    return best


def concat(pieces: Sequence[PLFunction]) -> PLFunction:
    """Glue functions on adjacent intervals; shared endpoints must agree."""
    knots: list[tuple[Fraction, Fraction]] = []
    for piece in pieces:
        ks = piece.knots
        if knots:
            t, v = knots[-1]
            if ks[0][0] != t:
                raise InvalidInput(f"pieces are not adjacent at {t}")
            if ks[0][1] != v:
                raise InvalidInput(f"pieces disagree at {t}: {v} vs {ks[0][1]}")
            ks = ks[1:]
        knots.extend(ks)
    return PLFunction(knots)
