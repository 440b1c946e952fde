"""Codes for continuous and lower semi-continuous functions.

A code is a budgeted enumerator of items plus, where the construction is
explicit, exact oracles:

* continuous items ``(ball, (u, v))`` read "f maps the ball into (u, v)";
* lsc items ``(ball, q)`` read "f >= q on the ball".

Most codes here enumerate along the canonical cover levels of their space
(see :mod:`critcodes.spaces`), so the item at stream position ``p`` sits on
the ``p``-th canonical ball. ``budget`` always counts stream positions.

``None`` stands for +infinity wherever a value or bound may be infinite.
"""

from __future__ import annotations

from bisect import bisect_left, bisect_right
from collections import deque
from dataclasses import dataclass
from fractions import Fraction
from typing import Callable, Iterable, Iterator, Optional, Sequence

from .errors import BudgetExceeded, InvalidInput, ModulusViolation, PatchConflict
from .pl import PLFunction
from .rationals import Q, pow2
from .spaces import Ball, ClosedInterval, Space, iter_cover, level_offsets

Value = Optional[Fraction]
DEFAULT_BUDGET = 1 << 20


# extended-real helpers -------------------------------------------------


def ext_add(a: Value, b: Value) -> Value:
    return None if a is None or b is None else a + b


def ext_min(*vals: Value) -> Value:
    finite = [v for v in vals if v is not None]
    return min(finite) if finite else None


def ext_max(*vals: Value) -> Value:
    if any(v is None for v in vals):
        return None
    return max(vals)


def ext_le(a: Value, b: Value) -> bool:
    if b is None:
        return True
    if a is None:
        return False
    return a <= b


@dataclass(frozen=True)
class Bracket:
    """Closed enclosure ``lo <= value <= hi``; ``hi`` (or both) may be None for +inf."""

    lo: Value
    hi: Value

    def __post_init__(self):
        if self.lo is None and self.hi is not None:
            raise ValueError("lo = +inf requires hi = +inf")
        if self.lo is not None and self.hi is not None and self.lo > self.hi:
            raise ValueError(f"empty bracket [{self.lo}, {self.hi}]")

    @property
    def width(self) -> Value:
        if self.hi is None:
            return None if self.lo is not None else Fraction(0)
        return self.hi - self.lo

    @property
    def mid(self) -> Value:
        if self.hi is None:
            return None
        return (self.lo + self.hi) / 2

    def contains(self, v: Value) -> bool:
        if v is None:
            return self.hi is None
        return ext_le(self.lo, v) and ext_le(v, self.hi)

    @property
    def exact(self) -> bool:
        return self.lo == self.hi


# base classes ----------------------------------------------------------


class _Code:
    space: Space
    name: str = "code"
    has_value = False

    def value(self, x) -> Value:
        """Exact value; only available when ``has_value`` is true."""
        raise NotImplementedError(f"{self.name} has no exact value oracle")

    def descriptor(self) -> Optional[dict]:
        return getattr(self, "_descriptor", None)

    def with_descriptor(self, desc: dict):
        self._descriptor = desc
        return self


class LscCode(_Code):
    """Code for a lower semi-continuous function: items ``(ball, q)``."""

    honest = False
    exact = False

    def __init__(self, space: Space, lower_bound=0):
        self.space = space
        self.lower_bound = Q(lower_bound)

    def items(self, budget: int) -> Iterator[tuple[Ball, Fraction]]:
        raise NotImplementedError

    def _point_items(self, x, budget: int) -> Iterable[tuple[Ball, Fraction]]:
        return ((b, q) for b, q in self.items(budget) if self.space.in_ball(x, b))

    def _ball_items(self, ball: Ball, budget: int) -> Iterable[tuple[Ball, Fraction]]:
        sp = self.space
        return ((b, q) for b, q in self.items(budget) if b == ball or sp.strictly_inside(ball, b))

    def lower(self, x, budget: int) -> Fraction:
        """Item-route lower bound: sup of q over enumerated balls containing x."""
        best = self.lower_bound
        for _, q in self._point_items(x, budget):
            if q > best:
                best = q
        return best

    def forced(self, ball: Ball, budget: int) -> Fraction:
        """Largest q with ball ⊩ q found within budget (closure under ⋐ and downward in q)."""
        best = self.lower_bound
        for _, q in self._ball_items(ball, budget):
            if q > best:
                best = q
        return best

    def forces(self, ball: Ball, q, budget: int) -> bool:
        return Q(q) <= self.forced(ball, budget)

    def upper(self, x) -> Value:
        """Upper evidence for f(x); None when none is available."""
        if self.has_value:
            return self.value(x)
        return None


class HonestLscCode(LscCode):
    """Lsc code with a ball-infimum query: ball ⊩ q iff f >= q on the whole ball."""

    honest = True

    def ball_inf(self, ball: Ball) -> Optional[Bracket]:
        """Bracket for inf over the open ball; None when f is +inf on all of it."""
        raise NotImplementedError

    def ball_witness(self, ball: Ball):
        """Optional point of the ball where f is near its infimum, or None."""
        return None

    def forced(self, ball: Ball, budget: int) -> Fraction:
        br = self.ball_inf(ball)
        if br is None:
            return max(self.lower_bound, super().forced(ball, budget))
        return max(self.lower_bound, br.lo)


class CoverLsc(LscCode):
    """Lsc code whose item at stream position p lives on the p-th canonical ball."""

    def _q(self, ball: Ball, level: int, pos: int) -> Optional[Fraction]:
        raise NotImplementedError

    def items(self, budget: int):
        for pos, k, _, ball in iter_cover(self.space, budget):
            q = self._q(ball, k, pos)
            if q is not None:
                yield ball, q

    def _point_items(self, x, budget: int):
        for k, off in level_offsets(self.space, budget):
            for i, ball in self.space.cover_hits(k, x):
                pos = off + i
                if pos < budget:
                    q = self._q(ball, k, pos)
                    if q is not None:
                        yield ball, q

    def _ball_items(self, ball: Ball, budget: int):
        sp = self.space
        for k, off in level_offsets(sp, budget):
            for i, b in sp.cover_hits(k, ball.center):
                pos = off + i
                if pos < budget and (b == ball or sp.strictly_inside(ball, b)):
                    q = self._q(b, k, pos)
                    if q is not None:
                        yield b, q


class OracleLsc(CoverLsc, HonestLscCode):
    """Honest code built from exact oracles for f(x) and for inf of f over open balls.

    Items are the exact ball infima (an infinite infimum is enumerated as
    ``lower_bound + 2**level``, which diverges along the levels).
    """

    exact = True
    has_value = True

    def __init__(self, space: Space, value_fn: Callable, ball_inf_fn: Callable, lower_bound=0,
                 witness_fn: Optional[Callable] = None, name: str = "oracle"):
        super().__init__(space, lower_bound)
        self._value_fn = value_fn
        self._inf_fn = ball_inf_fn
        self._witness_fn = witness_fn
        self.name = name
        self._cache: dict = {}

    def value(self, x) -> Value:
        return self._value_fn(x)

    def _inf(self, ball: Ball) -> Value:
        try:
            return self._cache[ball]
        except KeyError:
            v = self._inf_fn(ball)
            self._cache[ball] = v
            return v

    def ball_inf(self, ball: Ball) -> Optional[Bracket]:
        v = self._inf(ball)
        return None if v is None else Bracket(v, v)

    def ball_witness(self, ball: Ball):
        return None if self._witness_fn is None else self._witness_fn(ball)

    def _q(self, ball, level, pos):
        v = self._inf(ball)
        return self.lower_bound + pow2(level) if v is None else v


class ListLsc(LscCode):
    """Explicit finite item list (as read from a code file)."""

    def __init__(self, space: Space, items: Sequence[tuple[Ball, Fraction]], lower_bound=0,
                 upper_items: Sequence[tuple] = ()):
        super().__init__(space, lower_bound)
        self._items = [(b, Q(q)) for b, q in items]
        self._upper = [(space.point(p), Q(v)) for p, v in upper_items]
        self.name = "items"

    def items(self, budget: int):
        return iter(self._items[:budget])

    def upper(self, x) -> Value:
        vals = [v for p, v in self._upper if self.space.dist(p, x) == 0]
        return min(vals) if vals else None


# continuous codes --------------------------------------------------------


class ContinuousCode(_Code):
    """Code for a continuous function: items ``(ball, (u, v))``."""

    def __init__(self, space: Space, modulus: Optional[Callable[[int], int]] = None):
        self.space = space
        self.modulus = modulus

    def items(self, budget: int) -> Iterator[tuple[Ball, tuple[Fraction, Fraction]]]:
        raise NotImplementedError

    def _point_items(self, x, budget: int):
        return ((b, uv) for b, uv in self.items(budget) if self.space.in_ball(x, b))

    def _ball_items(self, ball: Ball, budget: int):
        sp = self.space
        return ((b, uv) for b, uv in self.items(budget) if b == ball or sp.strictly_inside(ball, b))

    def bracket(self, x, precision: int, budget: int = DEFAULT_BUDGET) -> Bracket:
        """Nested enclosure of f(x) of width <= 2**-precision."""
        target = pow2(-precision)
        lo: Value = None
        hi: Value = None
        for _, (u, v) in self._point_items(x, budget):
            lo = u if lo is None else max(lo, u)
            hi = v if hi is None else min(hi, v)
            if hi - lo <= target:
                return Bracket(lo, hi)
        best = None if lo is None else Bracket(lo, hi)
        raise BudgetExceeded(f"budget {budget} exhausted before precision {precision}", best=best)

    def enclosure(self, x, budget: int) -> Optional[Bracket]:
        """Intersection of every enumerated interval around x, or None if there is none."""
        lo: Value = None
        hi: Value = None
        for _, (u, v) in self._point_items(x, budget):
            lo = u if lo is None else max(lo, u)
            hi = v if hi is None else min(hi, v)
        return None if lo is None else Bracket(lo, hi)

    def ball_range(self, ball: Ball, budget: int = DEFAULT_BUDGET) -> Optional[Bracket]:
        """(inf-lower, sup-upper) over the ball from items enclosing it."""
        lo: Value = None
        hi: Value = None
        for _, (u, v) in self._ball_items(ball, budget):
            lo = u if lo is None else max(lo, u)
            hi = v if hi is None else min(hi, v)
        return None if lo is None else Bracket(lo, hi)

    def upper(self, x, budget: int = DEFAULT_BUDGET) -> Value:
        if self.has_value:
            return self.value(x)
        br = self.enclosure(x, budget)
        return None if br is None else br.hi

    def lower(self, x, budget: int = DEFAULT_BUDGET) -> Value:
        if self.has_value:
            return self.value(x)
        br = self.enclosure(x, budget)
        return None if br is None else br.lo


class CoverContinuous(ContinuousCode):
    def _interval(self, ball: Ball, level: int) -> Optional[tuple[Fraction, Fraction]]:
        raise NotImplementedError

    def items(self, budget: int):
        for _, k, _, ball in iter_cover(self.space, budget):
            uv = self._interval(ball, k)
            if uv is not None:
                yield ball, uv

    def _point_items(self, x, budget: int):
        for k, off in level_offsets(self.space, budget):
            for i, ball in self.space.cover_hits(k, x):
                if off + i < budget:
                    uv = self._interval(ball, k)
                    if uv is not None:
                        yield ball, uv

    def _ball_items(self, ball: Ball, budget: int):
        sp = self.space
        for k, off in level_offsets(sp, budget):
            for i, b in sp.cover_hits(k, ball.center):
                if off + i < budget and (b == ball or sp.strictly_inside(ball, b)):
                    uv = self._interval(b, k)
                    if uv is not None:
                        yield b, uv


class ExactContinuous(CoverContinuous):
    """Continuous code from exact value and ball-range oracles.

    The item on a canonical ball of radius r is ``(inf - r, sup + r)``.
    """

    has_value = True

    def __init__(self, space: Space, value_fn: Callable, range_fn: Callable,
                 modulus: Optional[Callable[[int], int]] = None, name: str = "continuous"):
        super().__init__(space, modulus)
        self._value_fn = value_fn
        self._range_fn = range_fn
        self.name = name

    def value(self, x) -> Fraction:
        return self._value_fn(x)

    def exact_range(self, ball: Ball) -> tuple[Fraction, Fraction]:
        return self._range_fn(ball)

    def _interval(self, ball, level):
        lo, hi = self._range_fn(ball)
        return lo - ball.radius, hi + ball.radius


def interval_clip(space: ClosedInterval, ball: Ball) -> tuple[Fraction, Fraction]:
    """Closure of an open ball of an interval space, as [lo, hi]."""
    return max(space.a, ball.center - ball.radius), min(space.b, ball.center + ball.radius)


def pl_code(pl: PLFunction, space: Optional[ClosedInterval] = None, lipschitz=None) -> ExactContinuous:
    """Continuous code of a piecewise-linear function on its domain interval."""
    a, b = pl.domain
    if space is None:
        space = ClosedInterval(a, b) if (a, b) != (0, 1) else _unit()
    if (space.a, space.b) != (a, b):
        raise InvalidInput("piecewise-linear domain differs from the space")

    def rng(ball):
        lo, hi = interval_clip(space, ball)
        return pl.min_on(lo, hi), pl.max_on(lo, hi)

    slope = lipschitz
    if slope is None:
        slopes = [abs((v1 - v0) / (t1 - t0)) for (t0, v0), (t1, v1) in zip(pl.knots, pl.knots[1:])]
        slope = max(slopes, default=Fraction(0))
    code = ExactContinuous(space, pl, rng, modulus=lipschitz_modulus(slope), name="pl")
    code.pl = pl
    code.lipschitz = Q(slope)
    return code


def lipschitz_modulus(L) -> Callable[[int], int]:
    """Modulus of uniform continuity of an L-Lipschitz function."""
    L = Q(L)
    if L <= 1:
        shift = 0 if L == 0 else -_floor_log2_ratio(L)
        return lambda n: max(0, n - shift) if L else 0
    shift = _ceil_log2(L)
    return lambda n: n + shift


def _ceil_log2(x: Fraction) -> int:
    from .rationals import ceil_log2

    return ceil_log2(x)


def _floor_log2_ratio(x: Fraction) -> int:
    from .rationals import floor_log2

    return floor_log2(x)


def _unit():
    from .spaces import UnitInterval

    return UnitInterval()


def pl_lsc(pl: PLFunction, space: Optional[ClosedInterval] = None, lower_bound=None) -> OracleLsc:
    """Honest lsc code of a continuous piecewise-linear function."""
    code = pl_code(pl, space)
    sp = code.space

    def inf(ball):
        lo, hi = interval_clip(sp, ball)
        return pl.min_on(lo, hi)

    def witness(ball):
        lo, hi = interval_clip(sp, ball)
        return pl.argmin_on(lo, hi)

    lb = min(pl.vs) if lower_bound is None else Q(lower_bound)
    out = OracleLsc(sp, pl, inf, lower_bound=lb, witness_fn=witness, name="pl")
    out.pl = pl
    return out


def const_code(space: Space, c) -> OracleLsc:
    c = Q(c)
    return OracleLsc(space, lambda x: c, lambda b: c, lower_bound=min(c, Fraction(0)),
                     witness_fn=lambda b: b.center, name="const")


def const_continuous(space: Space, c) -> ExactContinuous:
    c = Q(c)
    return ExactContinuous(space, lambda x: c, lambda b: (c, c), modulus=lambda n: 0, name="const")


def step_lsc(breaks: Sequence, values: Sequence, space: Optional[ClosedInterval] = None) -> OracleLsc:
    """Lsc step function: ``values[j]`` on ``(t_j, t_{j+1})``, the smaller neighbour at each t_j.

    ``breaks`` lists ``t_0 < ... < t_m`` including both endpoints.
    """
    ts = [Q(t) for t in breaks]
    vs = [Q(v) for v in values]
    if len(ts) != len(vs) + 1 or len(vs) < 1:
        raise InvalidInput("need one more break than values")
    if any(not a < b for a, b in zip(ts, ts[1:])):
        raise InvalidInput("breaks must increase")
    if space is None:
        space = ClosedInterval(ts[0], ts[-1]) if (ts[0], ts[-1]) != (0, 1) else _unit()
    if (space.a, space.b) != (ts[0], ts[-1]):
        raise InvalidInput("breaks must span the space")

    def value(x):
        x = Q(x)
        for j in range(len(vs)):
            if ts[j] < x < ts[j + 1]:
                return vs[j]
            if x == ts[j]:
                return min(vs[max(j - 1, 0)], vs[j])
        return vs[-1]

    def meeting(ball):
        u, v = ball.center - ball.radius, ball.center + ball.radius
        return [(j, max(ts[j], u), min(ts[j + 1], v)) for j in range(len(vs))
                if max(ts[j], u) < min(ts[j + 1], v)]

    def inf(ball):
        return min(vs[j] for j, _, _ in meeting(ball))

    def witness(ball):
        j, lo, hi = min(meeting(ball), key=lambda t: (vs[t[0]], t[0]))
        return (lo + hi) / 2

    code = OracleLsc(space, value, inf, lower_bound=min(min(vs), Fraction(0)), witness_fn=witness, name="step")
    code.breaks, code.values = ts, vs
    return code


class SamplesCode(ContinuousCode):
    """Code built from samples and a modulus of uniform continuity.

    Item ``(n, i)`` is ``B(a_i, 2**-h(n)) ⊩ (y_i - 2**-n, y_i + 2**-n)``; the
    stream runs n-major, sample-minor.
    """

    def __init__(self, space: Space, samples, modulus: Callable[[int], int]):
        super().__init__(space, modulus)
        self.samples = [(space.point(a), Q(y)) for a, y in samples]
        if not self.samples:
            raise InvalidInput("no samples")
        self.name = "samples"
        self._sorted = None
        if isinstance(space, ClosedInterval):
            order = sorted(range(len(self.samples)), key=lambda i: self.samples[i][0])
            self._sorted = ([self.samples[i][0] for i in order], order)

    def _radius(self, n: int) -> Fraction:
        return pow2(-self.modulus(n))

    def items(self, budget: int):
        m = len(self.samples)
        pos = 0
        n = 0
        while pos < budget:
            r = self._radius(n)
            e = pow2(-n)
            for a, y in self.samples:
                if pos >= budget:
                    return
                yield Ball(a, r), (y - e, y + e)
                pos += 1
            n += 1

    def _point_items(self, x, budget: int):
        m = len(self.samples)
        n = 0
        while n * m < budget:
            r = self._radius(n)
            e = pow2(-n)
            if self._sorted is not None:
                keys, order = self._sorted
                lo, hi = bisect_right(keys, x - r), bisect_left(keys, x + r)
                idx = sorted(order[lo:hi])
            else:
                idx = [i for i, (a, _) in enumerate(self.samples) if self.space.dist(a, x) < r]
            for i in idx:
                if n * m + i < budget:
                    a, y = self.samples[i]
                    yield Ball(a, r), (y - e, y + e)
            n += 1


def _check_modulus(space: Space, samples, modulus, max_level: int = 64):
    """Reject samples violating: d(a_i,a_j) < 2**-h(n) implies |y_i - y_j| < 2**-n."""
    pts = [(space.point(a), Q(y)) for a, y in samples]
    prev = None
    for n in range(max_level + 1):
        h = modulus(n)
        if prev is not None and h < prev:
            raise InvalidInput("modulus must be nondecreasing")
        prev = h
    if isinstance(space, ClosedInterval):
        order = sorted(range(len(pts)), key=lambda i: pts[i][0])
        xs = [pts[i][0] for i in order]
        ys = [pts[i][1] for i in order]
        gaps = [b - a for a, b in zip(xs, xs[1:]) if b > a]
        min_gap = min(gaps) if gaps else Fraction(1)
        for n in range(max_level + 1):
            r = pow2(-modulus(n))
            e = pow2(-n)
            _window_check(xs, ys, order, r, e, n, pts)
            if r <= min_gap and n > 0:
                # windows now only pair coincident abscissae, already checked at every level
                break
        return
    for i in range(len(pts)):
        for j in range(i + 1, len(pts)):
            d = space.dist(pts[i][0], pts[j][0])
            dy = abs(pts[i][1] - pts[j][1])
            for n in range(max_level + 1):
                if d < pow2(-modulus(n)) and not dy < pow2(-n):
                    raise ModulusViolation(
                        f"samples {pts[i]} and {pts[j]} violate the modulus at n={n}", pair=(pts[i], pts[j]))
                if pow2(-n) <= dy and d >= pow2(-modulus(n)):
                    break


def _window_check(xs, ys, order, r, e, n, pts):
    """Sliding window over sorted abscissae: within distance < r the y-spread must be < e."""
    maxq: deque = deque()
    minq: deque = deque()
    left = 0
    for right in range(len(xs)):
        while xs[right] - xs[left] >= r:
            if maxq and maxq[0] == left:
                maxq.popleft()
            if minq and minq[0] == left:
                minq.popleft()
            left += 1
        while maxq and ys[maxq[-1]] <= ys[right]:
            maxq.pop()
        maxq.append(right)
        while minq and ys[minq[-1]] >= ys[right]:
            minq.pop()
        minq.append(right)
        if ys[maxq[0]] - ys[minq[0]] >= e:
            i, j = maxq[0], minq[0]
            a, b = pts[order[min(i, j)]], pts[order[max(i, j)]]
            raise ModulusViolation(f"samples {a} and {b} violate the modulus at n={n}", pair=(a, b))


def cont_from_samples(samples, modulus: Callable[[int], int], domain: Space) -> SamplesCode:
    """Continuous code agreeing with the samples; the modulus is checked exactly first."""
    _check_modulus(domain, samples, modulus)
    return SamplesCode(domain, samples, modulus)


# patching ----------------------------------------------------------------


@dataclass(frozen=True)
class OpenRegion:
    """Finite union of open balls."""

    balls: tuple

    def contains(self, space: Space, x) -> bool:
        return any(space.in_ball(x, b) for b in self.balls)

    def holds_ball(self, space: Space, ball: Ball) -> bool:
        return any(b == ball or space.strictly_inside(ball, b) for b in self.balls)


class PatchCode(ContinuousCode):
    """Union of continuous codes on open regions; items of each piece are kept inside its region."""

    def __init__(self, space: Space, pieces):
        super().__init__(space)
        self.pieces = list(pieces)
        self.name = "patch"
        self.has_value = all(c.has_value for _, c in self.pieces)

    def _piece_for(self, x):
        for region, code in self.pieces:
            if region.contains(self.space, x):
                return code
        raise InvalidInput(f"{x} is outside every patch region")

    def value(self, x):
        return self._piece_for(x).value(x)

    def items(self, budget: int):
        for _, k, _, ball in iter_cover(self.space, budget):
            for region, code in self.pieces:
                if region.holds_ball(self.space, ball):
                    uv = code._interval(ball, k) if isinstance(code, CoverContinuous) else None
                    if uv is not None:
                        yield ball, uv

    def _point_items(self, x, budget: int):
        for k, off in level_offsets(self.space, budget):
            for i, ball in self.space.cover_hits(k, x):
                if off + i >= budget:
                    continue
                for region, code in self.pieces:
                    if region.holds_ball(self.space, ball) and isinstance(code, CoverContinuous):
                        yield ball, code._interval(ball, k)


def patch(pieces, space: Optional[Space] = None, resolution: int = 8, budget: int = DEFAULT_BUDGET) -> PatchCode:
    """Glue continuous codes on open regions after checking overlaps on a shared net."""
    pieces = [(r if isinstance(r, OpenRegion) else OpenRegion(tuple(r)), c) for r, c in pieces]
    if not pieces:
        raise InvalidInput("patch needs at least one piece")
    space = space or pieces[0][1].space
    pts = space.net(resolution)
    for x in pts:
        brs = []
        for region, code in pieces:
            if region.contains(space, x):
                br = Bracket(code.value(x), code.value(x)) if code.has_value else code.bracket(x, resolution, budget)
                brs.append(br)
        if brs:
            lo = max(b.lo for b in brs)
            hi = min(b.hi for b in brs)
            if lo > hi:
                raise PatchConflict(f"pieces disagree at {x}", witness=x)
    return PatchCode(space, pieces)


# continuous -> lsc -------------------------------------------------------


class LscFromContinuous(LscCode):
    """ball ⊩ q whenever ball ⋐ b', b' ⊩ (u, v) and q < u; items carry the bound u itself."""

    def __init__(self, code: ContinuousCode):
        super().__init__(code.space)
        self.code = code
        self.name = "cont-to-lsc"
        self.has_value = code.has_value
        self.lower_bound = self._declared_lower()

    def _declared_lower(self) -> Fraction:
        return getattr(self.code, "lower_bound", Fraction(0))

    def value(self, x):
        return self.code.value(x)

    def items(self, budget: int):
        for b, (u, _) in self.code.items(budget):
            yield b, u

    def _point_items(self, x, budget: int):
        for b, (u, _) in self.code._point_items(x, budget):
            yield b, u

    def _ball_items(self, ball: Ball, budget: int):
        for b, (u, _) in self.code._ball_items(ball, budget):
            yield b, u

    def forces(self, ball: Ball, q, budget: int) -> bool:
        q = Q(q)
        if q <= self.lower_bound:
            return True
        sp = self.space
        for b, (u, _) in self.code._ball_items(ball, budget):
            if (sp.strictly_inside(ball, b) and q < u) or (b == ball and q <= u):
                return True
        return False

    def upper(self, x) -> Value:
        return self.code.upper(x)


def cont_to_lsc(code: ContinuousCode) -> LscFromContinuous:
    return LscFromContinuous(code)


# combinators -------------------------------------------------------------


class CombinedLsc(CoverLsc):
    """sum: q <= q0 + q1 with both forced; max: either forced; min: both forced."""

    OPS = ("sum", "max", "min")

    def __init__(self, f: LscCode, g: LscCode, op: str):
        if op not in self.OPS:
            raise InvalidInput(f"unknown combination {op!r}")
        if f.space != g.space:
            raise InvalidInput("combined codes must share a space")
        lb = {"sum": f.lower_bound + g.lower_bound, "max": max(f.lower_bound, g.lower_bound),
              "min": min(f.lower_bound, g.lower_bound)}[op]
        super().__init__(f.space, lb)
        self.f, self.g, self.op = f, g, op
        self.name = op
        self.has_value = f.has_value and g.has_value
        self.honest = op == "min" and f.honest and g.honest
        self.exact = self.honest and f.exact and g.exact

    def _combine(self, a: Value, b: Value) -> Value:
        if self.op == "sum":
            return ext_add(a, b)
        if self.op == "max":
            return ext_max(a, b)
        return ext_min(a, b)

    def _q(self, ball, level, pos):
        return self._combine(self.f.forced(ball, pos + 1), self.g.forced(ball, pos + 1))

    def value(self, x):
        return self._combine(self.f.value(x), self.g.value(x))

    def upper(self, x) -> Value:
        a, b = self.f.upper(x), self.g.upper(x)
        if self.op == "min":
            return ext_min(a, b)
        if a is None or b is None:
            return None
        return a + b if self.op == "sum" else max(a, b)

    def ball_inf(self, ball: Ball) -> Optional[Bracket]:
        if not self.honest:
            raise NotImplementedError("only min of honest codes is honest")
        a, b = self.f.ball_inf(ball), self.g.ball_inf(ball)
        if a is None or b is None:
            return a if b is None else b
        return Bracket(min(a.lo, b.lo), ext_min(a.hi, b.hi))

    def ball_witness(self, ball: Ball):
        if not self.honest:
            return None
        a, b = self.f.ball_inf(ball), self.g.ball_inf(ball)
        if b is None or (a is not None and a.lo <= b.lo):
            return self.f.ball_witness(ball)
        return self.g.ball_witness(ball)

    def forced(self, ball: Ball, budget: int) -> Fraction:
        if self.honest:
            br = self.ball_inf(ball)
            if br is not None:
                return max(self.lower_bound, br.lo)
        return super().forced(ball, budget)


def lsc_combine(f: LscCode, g: LscCode, op: str) -> CombinedLsc:
    return CombinedLsc(f, g, op)


class ClosedSet:
    """Closed set coded by an enumeration of open balls covering its complement.

    The enumeration is aligned with the canonical cover stream:
    ``in_complement(ball)`` says whether that canonical ball is enumerated.
    ``contains`` is an exact membership oracle used for values.
    """

    def __init__(self, space: Space, in_complement: Callable[[Ball], bool], contains: Callable):
        self.space = space
        self.in_complement = in_complement
        self.contains = contains

    def complement_items(self, budget: int) -> Iterator[Ball]:
        for _, _, _, ball in iter_cover(self.space, budget):
            if self.in_complement(ball):
                yield ball

    def encloses_in_complement(self, ball: Ball, budget: int) -> bool:
        """ball ⋐ some enumerated complement ball within the budget."""
        sp = self.space
        for k, off in level_offsets(sp, budget):
            for i, b in sp.cover_hits(k, ball.center):
                if off + i < budget and sp.strictly_inside(ball, b) and self.in_complement(b):
                    return True
        return False


def closed_from_distance(space: Space, dist_fn: Callable) -> ClosedSet:
    """Closed set from an exact distance-to-set oracle."""
    return ClosedSet(space, lambda b: dist_fn(b.center) >= b.radius, lambda x: dist_fn(x) == 0)


def closed_sublevel(g: LscCode, t, budget_of=lambda pos: pos + 1) -> ClosedSet:
    """``{x : g(x) <= t}``; its complement is enumerated from balls forcing g > t."""
    t = Q(t)
    sp = g.space
    positions = {}

    def in_comp(ball):
        return g.forced(ball, DEFAULT_BUDGET if g.honest else _position_budget(sp, ball)) > t

    def contains(x):
        v = g.value(x)
        return v is not None and v <= t

    return ClosedSet(sp, in_comp, contains)


def _position_budget(space: Space, ball: Ball) -> int:
    total = 0
    k = 0
    while True:
        size = space.cover_size(k)
        total += size
        if ball.radius >= space.cover_ball(k, 0).radius:
            return total
        k += 1
        if k > 64:
            return total


class ZeroOnClosed(CoverLsc):
    """0 on C and f off C: q <= min(0, f-bound), or ball⊩q with ball ⋐ a complement ball."""

    def __init__(self, f: LscCode, C: ClosedSet):
        super().__init__(f.space, min(Fraction(0), f.lower_bound))
        self.f, self.C = f, C
        self.name = "zero-on-closed"
        self.has_value = f.has_value

    def _q(self, ball, level, pos):
        fq = self.f.forced(ball, pos + 1)
        if self.C.encloses_in_complement(ball, pos + 1):
            return fq
        return min(Fraction(0), fq)

    def value(self, x):
        return Fraction(0) if self.C.contains(x) else self.f.value(x)

    def upper(self, x) -> Value:
        return Fraction(0) if self.C.contains(x) else self.f.upper(x)


def lsc_zero_on_closed(f: LscCode, C: ClosedSet) -> ZeroOnClosed:
    return ZeroOnClosed(f, C)


class AddScaledDistance(CoverLsc):
    """f + eps*d(., x0); the distance part of B_r(a) is eps*max(0, d(a, x0) - r)."""

    def __init__(self, f: LscCode, x0, eps):
        eps = Q(eps)
        if eps <= 0:
            raise InvalidInput("eps must be positive")
        super().__init__(f.space, f.lower_bound)
        self.f, self.x0, self.eps = f, f.space.point(x0), eps
        self.name = "add-scaled-distance"
        self.has_value = f.has_value

    def _q(self, ball, level, pos):
        fq = self.f.forced(ball, pos + 1)
        return fq + self.eps * max(Fraction(0), self.space.dist(ball.center, self.x0) - ball.radius)

    def value(self, x):
        return ext_add(self.f.value(x), self.eps * self.space.dist(x, self.x0))

    def upper(self, x) -> Value:
        return ext_add(self.f.upper(x), self.eps * self.space.dist(x, self.x0))


def lsc_add_scaled_distance(f: LscCode, x0, eps) -> AddScaledDistance:
    return AddScaledDistance(f, x0, eps)


class EpigraphSet:
    """Closed subset of X x R given by complement boxes ``ball x (u, v)``.

    ``box_in_complement(ball, u, v)`` decides whether the box is enumerated;
    ``contains(x, y)`` is the exact membership oracle. Values are searched on
    the dyadic grid of [lower, upper].
    """

    def __init__(self, space: Space, box_in_complement: Callable, contains: Callable, lower, upper):
        self.space = space
        self.box_in_complement = box_in_complement
        self.contains = contains
        self.lower, self.upper = Q(lower), Q(upper)
        if not self.lower < self.upper:
            raise InvalidInput("epigraph value range needs lower < upper")


class LscFromEpigraph(CoverLsc):
    """ball ⊩ q when some box B_s(b) x (u, v) of the complement has ball ⋐ B_s(b) and q < v."""

    def __init__(self, C: EpigraphSet):
        super().__init__(C.space, C.lower)
        self.C = C
        self.name = "epigraph"

    def _best_v(self, ball: Ball, level: int) -> Optional[Fraction]:
        C = self.C
        step = pow2(-level)
        n = int((C.upper - C.lower) / step)
        lo, hi = 0, n  # largest j with box (v - step, v), v = lower + j*step, in the complement
        if not C.box_in_complement(ball, C.lower - step, C.lower):
            return None
        while lo < hi:
            mid = (lo + hi + 1) // 2
            v = C.lower + mid * step
            if C.box_in_complement(ball, v - step, v):
                lo = mid
            else:
                hi = mid - 1
        return C.lower + lo * step

    def _q(self, ball, level, pos):
        sp = self.space
        best = None
        for k, off in level_offsets(sp, pos + 1):
            if k > level:
                break
            for i, b in sp.cover_hits(k, ball.center):
                if off + i <= pos and sp.strictly_inside(ball, b):
                    v = self._best_v(b, level)
                    if v is not None and (best is None or v > best):
                        best = v
        if best is None:
            return None
        return best - pow2(-(level + 2))

    def upper(self, x) -> Value:
        C = self.C
        if not C.contains(x, C.upper):
            return None
        lo, hi = C.lower, C.upper
        for _ in range(40):
            mid = (lo + hi) / 2
            if C.contains(x, mid):
                hi = mid
            else:
                lo = mid
        return hi


def epigraph_to_lsc(C: EpigraphSet, samples: int = 6) -> LscFromEpigraph:
    """Lsc code of the function whose epigraph is C; upward closure is checked on a net first."""
    try:
        pts = C.space.net(samples)
    except Exception:
        pts = [C.space.dense(i) for i in range(32)]
    ys = ClosedInterval(C.lower, C.upper).net(samples)
    for x in pts:
        inside = [C.contains(x, y) for y in ys]
        first = next((i for i, v in enumerate(inside) if v), None)
        if first is not None and not all(inside[first:]):
            raise InvalidInput(f"epigraph is not upward closed at {x}")
    return LscFromEpigraph(C)


def epigraph_of(f: HonestLscCode, upper) -> EpigraphSet:
    """Epigraph of an honest code, for round-trip checks."""

    def box(ball, u, v):
        br = f.ball_inf(ball)
        return br is None or v <= br.lo

    def contains(x, y):
        val = f.value(x)
        return val is not None and val <= y

    return EpigraphSet(f.space, box, contains, f.lower_bound, upper)


# honest promotion ---------------------------------------------------------


class PromotedHonest(HonestLscCode):
    """Honest queries answered by covering the ball with level-``resolution`` canonical balls."""

    def __init__(self, code: LscCode, resolution: int, budget: Optional[int] = None):
        super().__init__(code.space, code.lower_bound)
        if not code.space.compact:
            raise InvalidInput(f"honest promotion needs a compact space, got {code.space.kind}")
        self.code = code
        self.resolution = resolution
        self.budget = budget if budget is not None else sum(
            code.space.cover_size(k) for k in range(resolution + 1))
        self.has_value = code.has_value
        self.name = f"promoted({code.name})"
        self.slack = pow2(-resolution)
        self._cache: dict = {}
        self._cover = code.space.cover(resolution)
        self._forced = [code.forced(b, self.budget) for b in self._cover]
        self._net = code.space.net(resolution + 1)

    def value(self, x):
        return self.code.value(x)

    def items(self, budget: int):
        return self.code.items(budget)

    def _point_items(self, x, budget):
        return self.code._point_items(x, budget)

    def _ball_items(self, ball, budget):
        return self.code._ball_items(ball, budget)

    def upper(self, x) -> Value:
        return self.code.upper(x)

    def forced(self, ball: Ball, budget: int) -> Fraction:
        return max(self.code.forced(ball, budget), super().forced(ball, budget))

    def ball_inf(self, ball: Ball) -> Optional[Bracket]:
        if ball in self._cache:
            return self._cache[ball]
        sp = self.space
        lo = None
        for b, q in zip(self._cover, self._forced):
            if sp.may_meet(b, ball):
                lo = q if lo is None else min(lo, q)
        hi = ext_min(*[self.code.upper(y) for y in self._net if sp.in_ball(y, ball)]) if lo is not None else None
        if lo is None:
            lo = self.lower_bound
        br = Bracket(lo, hi if hi is None or hi >= lo else lo)
        self._cache[ball] = br
        return br

    def ball_witness(self, ball: Ball):
        sp = self.space
        best, arg = None, None
        for y in self._net:
            if sp.in_ball(y, ball):
                u = self.code.upper(y)
                if u is not None and (best is None or u < best):
                    best, arg = u, y
        return arg


def honest_promote_compact(code: LscCode, space: Optional[Space] = None, resolution: int = 8,
                           budget: Optional[int] = None) -> PromotedHonest:
    if space is not None and space != code.space:
        raise InvalidInput("space does not match the code")
    return PromotedHonest(code, resolution, budget)


# evaluation entry points ---------------------------------------------------


def eval_cont(code: ContinuousCode, x, precision: int, budget: int = DEFAULT_BUDGET) -> Bracket:
    return code.bracket(code.space.point(x), precision, budget)


def eval_lsc_lower(code: LscCode, x, budget: int) -> Fraction:
    """Nondecreasing lower bound; codes with an exact value oracle answer exactly once budget > 0."""
    x = code.space.point(x)
    if budget <= 0:
        return code.lower_bound
    if code.has_value:
        v = code.value(x)
        if v is not None:
            return max(code.lower_bound, v)
    return code.lower(x, budget)


def honest_ball_inf(code: HonestLscCode, ball: Ball) -> Optional[Bracket]:
    if not code.honest:
        raise InvalidInput("code is not honest; promote it first")
    return code.ball_inf(ball)


def evidence(f, x, budget: int = DEFAULT_BUDGET) -> Bracket:
    """Two-sided evidence for f(x) from any code or envelope."""
    if hasattr(f, "evidence"):
        return f.evidence(x, budget)
    if isinstance(f, ContinuousCode):
        if f.has_value:
            v = f.value(x)
            return Bracket(v, v)
        br = f.enclosure(x, budget)
        if br is None:
            raise BudgetExceeded(f"no enclosure of f({x}) within budget")
        return br
    lo = eval_lsc_lower(f, x, budget)
    hi = f.upper(x)
    if hi is not None and hi < lo:
        hi = lo
    return Bracket(lo, hi)


# rescaling -----------------------------------------------------------------


class ScaledLsc(LscCode):
    def __init__(self, f: LscCode, factor: Fraction):
        super().__init__(f.space, f.lower_bound * factor)
        self.f, self.factor = f, factor
        self.name = "scaled"
        self.has_value = f.has_value
        self.honest = f.honest
        self.exact = f.exact

    def items(self, budget):
        return ((b, q * self.factor) for b, q in self.f.items(budget))

    def _point_items(self, x, budget):
        return ((b, q * self.factor) for b, q in self.f._point_items(x, budget))

    def _ball_items(self, ball, budget):
        return ((b, q * self.factor) for b, q in self.f._ball_items(ball, budget))

    def forced(self, ball, budget):
        return self.f.forced(ball, budget) * self.factor

    def value(self, x):
        v = self.f.value(x)
        return None if v is None else v * self.factor

    def upper(self, x):
        v = self.f.upper(x)
        return None if v is None else v * self.factor

    def ball_inf(self, ball):
        br = self.f.ball_inf(ball)
        if br is None:
            return None
        return Bracket(br.lo * self.factor, None if br.hi is None else br.hi * self.factor)

    def ball_witness(self, ball):
        return self.f.ball_witness(ball) if self.honest else None


class ScaledContinuous(ContinuousCode):
    def __init__(self, f: ContinuousCode, factor: Fraction):
        super().__init__(f.space, None)
        self.f, self.factor = f, factor
        self.name = "scaled"
        self.has_value = f.has_value

    def _scale(self, uv):
        u, v = uv
        return u * self.factor, v * self.factor

    def items(self, budget):
        return ((b, self._scale(uv)) for b, uv in self.f.items(budget))

    def _point_items(self, x, budget):
        return ((b, self._scale(uv)) for b, uv in self.f._point_items(x, budget))

    def _ball_items(self, ball, budget):
        return ((b, self._scale(uv)) for b, uv in self.f._ball_items(ball, budget))

    def value(self, x):
        return self.f.value(x) * self.factor
