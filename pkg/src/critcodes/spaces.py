"""Coded complete separable metric spaces with exact metrics and finite nets.

Points are finitely represented so every distance is an exact rational:

* interval kinds: a ``Fraction``;
* ``cantor`` and ``baire``: a tuple of naturals read with an implicit zero
  tail (stored with trailing zeros stripped);
* ``c01``: a :class:`~critcodes.pl.PLFunction` on [0, 1];
* ``product``: a tuple with one point per factor.

Every space also carries a canonical hierarchy of *cover levels*: level ``k``
is a finite family of rational balls of radius at most ``2**-k`` covering the
space (or the bounded fragment of it the space was declared with). Codes
enumerate their items along these levels, which is what makes budgets
meaningful and lookups fast.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass
from fractions import Fraction
from functools import lru_cache
from typing import Any, Iterator, Optional, Sequence

from .errors import InvalidInput, UnsupportedNet
from .pl import PLFunction
from .rationals import Q, calkin_wilf, cantor_unpair, ceil_log2, dyadic_enum, pow2

Point = Any


@dataclass(frozen=True, eq=True)
class Ball:
    """Open rational ball ``{x : d(x, center) < radius}``."""

    center: Point
    radius: Fraction

    def __post_init__(self):
        if not isinstance(self.radius, Fraction):
            object.__setattr__(self, "radius", Q(self.radius))
        if self.radius <= 0:
            raise InvalidInput("ball radius must be positive")

    def __hash__(self) -> int:
        try:
            return self.__dict__["_hash"]
        except KeyError:
            h = hash((self.center, self.radius))
            object.__setattr__(self, "_hash", h)
            return h


def _strip(seq: Sequence[int]) -> tuple[int, ...]:
    seq = tuple(seq)
    n = len(seq)
    while n and seq[n - 1] == 0:
        n -= 1
    return seq[:n]


def _first_diff(p: tuple, q: tuple) -> Optional[int]:
    n = max(len(p), len(q))
    for i in range(n):
        a = p[i] if i < len(p) else 0
        b = q[i] if i < len(q) else 0
        if a != b:
            return i
    return None


class Space:
    """Base class. Subclasses fill in the metric, nets and cover levels."""

    kind: str = ""
    compact: bool = False

    def params(self) -> dict:
        return {}

    def point(self, p) -> Point:
        """Validate and canonicalize a point."""
        raise NotImplementedError

    def dist(self, p: Point, q: Point) -> Fraction:
        raise NotImplementedError

    def net(self, k: int, region: Optional[Ball] = None, **bounds) -> list:
        raise UnsupportedNet(f"no finite nets on {self.kind}")

    def dense(self, i: int) -> Point:
        raise NotImplementedError

    def sort_key(self, p: Point):
        return p

    # cover levels -----------------------------------------------------
    def cover_size(self, k: int) -> int:
        raise UnsupportedNet(f"no cover levels on {self.kind}")

    def cover_ball(self, k: int, i: int) -> Ball:
        raise UnsupportedNet(f"no cover levels on {self.kind}")

    def cover_hits(self, k: int, p: Point) -> list[tuple[int, Ball]]:
        """Indices and balls of level ``k`` that contain ``p``."""
        return [(i, b) for i, b in enumerate(self.cover(k)) if self.in_ball(p, b)]

    def cover(self, k: int) -> list[Ball]:
        return _cover_list(self, k)

    # ball geometry ----------------------------------------------------
    def in_ball(self, p: Point, ball: Ball) -> bool:
        return self.dist(p, ball.center) < ball.radius

    def strictly_inside(self, b1: Ball, b2: Ball) -> bool:
        return self.dist(b1.center, b2.center) + b1.radius < b2.radius

    def may_meet(self, b1: Ball, b2: Ball) -> bool:
        """Necessary condition for two balls to intersect."""
        return self.dist(b1.center, b2.center) < b1.radius + b2.radius

    def __eq__(self, other) -> bool:
        return type(self) is type(other) and self.params() == other.params()

    def __hash__(self) -> int:
        return hash((self.kind, repr(self.params())))

    def __repr__(self) -> str:
        return f"{type(self).__name__}({self.params()})"


@lru_cache(maxsize=256)
def _cover_list(space: Space, k: int) -> list[Ball]:
    return [space.cover_ball(k, i) for i in range(space.cover_size(k))]


# intervals -------------------------------------------------------------


class ClosedInterval(Space):
    kind = "closed-interval"
    compact = True

    def __init__(self, a, b):
        self.a, self.b = Q(a), Q(b)
        if not self.a < self.b:
            raise InvalidInput(f"closed-interval needs a < b, got [{self.a}, {self.b}]")

    def params(self) -> dict:
        return {"a": self.a, "b": self.b}

    def point(self, p) -> Fraction:
        p = Q(p)
        if not self.a <= p <= self.b:
            raise InvalidInput(f"{p} is outside [{self.a}, {self.b}]")
        return p

    def dist(self, p, q) -> Fraction:
        return abs(p - q)

    def dense(self, i: int) -> Fraction:
        return self.a + (self.b - self.a) * dyadic_enum(i)

    def _grid(self, lo: Fraction, hi: Fraction, step: Fraction) -> list[Fraction]:
        pts = []
        x = lo
        while x < hi:
            pts.append(x)
            x += step
        pts.append(hi)
        return pts

    def net(self, k: int, region: Optional[Ball] = None, **bounds) -> list[Fraction]:
        lo, hi = self.a, self.b
        if region is not None:
            lo = max(lo, region.center - region.radius)
            hi = min(hi, region.center + region.radius)
            if lo > hi:
                return []
        return self._grid(lo, hi, pow2(-k))

    def _step(self, k: int) -> Fraction:
        return pow2(-(k + 1))

    def cover_size(self, k: int) -> int:
        step = self._step(k)
        n = (self.b - self.a) / step
        return int(n) + 1 if n.denominator == 1 else int(n) + 2

    def cover_ball(self, k: int, i: int) -> Ball:
        cache = self.__dict__.setdefault("_balls", {})
        try:
            return cache[k, i]
        except KeyError:
            step = self._step(k)
            b = cache[k, i] = Ball(min(self.a + i * step, self.b), step)
            return b

    def cover_hits(self, k: int, p) -> list[tuple[int, Ball]]:
        step = self._step(k)
        size = _cached_size(self, k)
        j = int((p - self.a) // step)
        out = []
        for i in (j - 1, j, j + 1):
            if 0 <= i < size:
                b = self.cover_ball(k, i)
                if abs(p - b.center) < step:
                    out.append((i, b))
        if j + 1 < size - 1:
            b = self.cover_ball(k, size - 1)
            if abs(p - b.center) < step:
                out.append((size - 1, b))
        return out


class UnitInterval(ClosedInterval):
    kind = "unit-interval"

    def __init__(self):
        super().__init__(0, 1)

    def params(self) -> dict:
        return {}


# sequence spaces -------------------------------------------------------


def _cylinder_length(radius: Fraction, closed: bool) -> int:
    """Number of leading coordinates fixed by a ball of this radius.

    Open ball d < r: agree on [0, m) with m the least n such that 2**-n < r.
    Closed ball d <= r: least n with 2**-n <= r.
    """
    if radius > 1 or (closed and radius == 1):
        return 0
    m = ceil_log2(1 / radius)
    if not closed and pow2(-m) == radius:
        m += 1
    return max(m, 0)


class _SequenceSpace(Space):
    branching: Optional[int] = None
    depth: Optional[int] = None

    def point(self, p) -> tuple[int, ...]:
        try:
            seq = tuple(int(v) for v in p)
        except (TypeError, ValueError) as exc:
            raise InvalidInput(f"not a finite sequence: {p!r}") from exc
        if any(v < 0 for v in seq):
            raise InvalidInput("sequence entries must be natural numbers")
        return _strip(seq)

    def dist(self, p, q) -> Fraction:
        i = _first_diff(p, q)
        return Fraction(0) if i is None else pow2(-i)

    def sort_key(self, p):
        return p

    def _bounds(self, bounds: dict) -> tuple[int, Optional[int]]:
        b = bounds.get("branching", self.branching)
        d = bounds.get("depth", self.depth)
        if b is None:
            raise UnsupportedNet(f"{self.kind} nets need a branching bound")
        return int(b), (None if d is None else int(d))

    def net(self, k: int, region: Optional[Ball] = None, **bounds) -> list[tuple[int, ...]]:
        b, d = self._bounds(bounds)
        length = k if d is None else min(k, d)
        prefix: tuple = ()
        if region is not None:
            m = _cylinder_length(region.radius, closed=True)
            c = tuple(region.center) + (0,) * m
            prefix = c[:m]
            length = max(length, m)
        free = length - len(prefix)
        return [_strip(prefix + tail) for tail in itertools.product(range(b), repeat=free)]

    def cover_size(self, k: int) -> int:
        b, _ = self._bounds({})
        return b ** (k + 1)

    def cover_ball(self, k: int, i: int) -> Ball:
        b, _ = self._bounds({})
        digits = []
        for _ in range(k + 1):
            i, r = divmod(i, b)
            digits.append(r)
        return Ball(_strip(reversed(digits)), pow2(-k))

    def cover_hits(self, k: int, p) -> list[tuple[int, Ball]]:
        b, _ = self._bounds({})
        head = (tuple(p) + (0,) * (k + 1))[: k + 1]
        if any(v >= b for v in head):
            return []
        idx = 0
        for v in head:
            idx = idx * b + v
        return [(idx, Ball(_strip(head), pow2(-k)))]

    def in_ball(self, p, ball: Ball) -> bool:
        m = _cylinder_length(ball.radius, closed=False)
        return _first_diff(tuple(p)[:m], tuple(ball.center)[:m]) is None


class Cantor(_SequenceSpace):
    kind = "cantor"
    compact = True
    branching = 2

    def point(self, p):
        seq = super().point(p)
        if any(v > 1 for v in seq):
            raise InvalidInput("cantor entries must be 0 or 1")
        return seq

    def dense(self, i: int):
        return _strip(int(c) for c in reversed(bin(i)[2:])) if i else ()

    def net(self, k, region=None, **bounds):
        bounds = {**bounds, "branching": 2}
        return super().net(k, region, **bounds)


class Baire(_SequenceSpace):
    """Baire space; nets and cover levels need a branching bound (and nets a depth bound)."""

    kind = "baire"

    def __init__(self, branching: Optional[int] = None, depth: Optional[int] = None):
        self.branching = None if branching is None else int(branching)
        self.depth = None if depth is None else int(depth)
        if self.branching is not None and self.branching < 1:
            raise InvalidInput("branching bound must be positive")
        if self.depth is not None and self.depth < 0:
            raise InvalidInput("depth bound must be natural")

    @property
    def compact(self) -> bool:  # type: ignore[override]
        return self.branching is not None and self.depth is not None

    def params(self) -> dict:
        out = {}
        if self.branching is not None:
            out["branching"] = self.branching
        if self.depth is not None:
            out["depth"] = self.depth
        return out

    def net(self, k, region=None, **bounds):
        if bounds.get("depth", self.depth) is None:
            raise UnsupportedNet("baire nets need a depth bound")
        return super().net(k, region, **bounds)

    def dense(self, i: int):
        # gaps between the 1-bits of i enumerate all finite sequences
        seq, last = [], -1
        pos = 0
        while i:
            if i & 1:
                seq.append(pos - last - 1)
                last = pos
            i >>= 1
            pos += 1
        return _strip(seq)


# product ----------------------------------------------------------------


class Product(Space):
    kind = "product"

    def __init__(self, factors: Sequence[Space]):
        self.factors = tuple(factors)
        if not self.factors:
            raise InvalidInput("product needs at least one factor")

    @property
    def compact(self) -> bool:  # type: ignore[override]
        return all(f.compact for f in self.factors)

    def params(self) -> dict:
        return {"factors": list(self.factors)}

    def __hash__(self) -> int:
        return hash(("product", self.factors))

    def __eq__(self, other) -> bool:
        return isinstance(other, Product) and self.factors == other.factors

    def point(self, p):
        p = tuple(p)
        if len(p) != len(self.factors):
            raise InvalidInput(f"product point needs {len(self.factors)} coordinates")
        return tuple(f.point(c) for f, c in zip(self.factors, p))

    def dist(self, p, q) -> Fraction:
        return max(f.dist(a, b) for f, a, b in zip(self.factors, p, q))

    def sort_key(self, p):
        return tuple(f.sort_key(c) for f, c in zip(self.factors, p))

    def dense(self, i: int):
        coords = []
        for _ in range(len(self.factors) - 1):
            i, rest = cantor_unpair(i)
            coords.append(i)
            i = rest
        coords.append(i)
        return tuple(f.dense(j) for f, j in zip(self.factors, coords))

    def net(self, k, region=None, **bounds):
        if region is None:
            nets = [f.net(k, **bounds) for f in self.factors]
        else:
            nets = [f.net(k, Ball(c, region.radius), **bounds) for f, c in zip(self.factors, region.center)]
        return [tuple(p) for p in itertools.product(*nets)]

    def cover_size(self, k: int) -> int:
        n = 1
        for f in self.factors:
            n *= f.cover_size(k)
        return n

    def cover_ball(self, k: int, i: int) -> Ball:
        parts = []
        for f in reversed(self.factors):
            i, r = divmod(i, f.cover_size(k))
            parts.append(f.cover_ball(k, r))
        parts.reverse()
        return Ball(tuple(b.center for b in parts), max(b.radius for b in parts))

    def cover_hits(self, k: int, p) -> list[tuple[int, Ball]]:
        hits = [f.cover_hits(k, c) for f, c in zip(self.factors, p)]
        sizes = [f.cover_size(k) for f in self.factors]
        out = []
        for combo in itertools.product(*hits):
            idx = 0
            for (j, _), s in zip(combo, sizes):
                idx = idx * s + j
            ball = Ball(tuple(b.center for _, b in combo), max(b.radius for _, b in combo))
            out.append((idx, ball))
        return out


# C[0,1] -------------------------------------------------------------------


class C01(Space):
    """Continuous functions on [0,1] with the sup norm, represented by PL functions.

    Non-compact. A caller may declare a bounded grid (``knots`` equally spaced
    breakpoints, values in ``[lo, hi]``) on which finite nets are produced.
    """

    kind = "c01"

    def __init__(self, knots: Optional[int] = None, lo=None, hi=None):
        self.knots = None if knots is None else int(knots)
        self.lo = None if lo is None else Q(lo)
        self.hi = None if hi is None else Q(hi)
        if self.knots is not None and self.knots < 1:
            raise InvalidInput("knots must be positive")
        if (self.lo is None) != (self.hi is None) or (self.lo is not None and not self.lo < self.hi):
            raise InvalidInput("c01 grid needs lo < hi")

    def params(self) -> dict:
        out = {}
        if self.knots is not None:
            out.update({"knots": self.knots, "lo": self.lo, "hi": self.hi})
        return out

    def point(self, p) -> PLFunction:
        if not isinstance(p, PLFunction):
            p = PLFunction(p)
        if p.domain != (0, 1):
            raise InvalidInput("c01 points must be defined on exactly [0,1]")
        return p

    def dist(self, p: PLFunction, q: PLFunction) -> Fraction:
        return p.sup_dist(q)

    def sort_key(self, p: PLFunction):
        return p.sort_key()

    def dense(self, i: int) -> PLFunction:
        seq = Baire().dense(i) or (0,)
        n = len(seq)
        vals = []
        for j in seq:
            s, r = divmod(j, 2)
            v = calkin_wilf(s) - 1 if s else Fraction(0)
            vals.append(-v if r else v)
        if n == 1:
            return PLFunction.constant(vals[0])
        return PLFunction((Fraction(j, n - 1), v) for j, v in enumerate(vals))

    def _grid_values(self, k: int) -> list[Fraction]:
        if self.knots is None:
            raise UnsupportedNet("c01 has no nets without a declared grid")
        return ClosedInterval(self.lo, self.hi).net(k)

    def net(self, k, region=None, **bounds) -> list[PLFunction]:
        vals = self._grid_values(k)
        ts = [Fraction(j, self.knots) for j in range(self.knots + 1)]
        out = [PLFunction(zip(ts, combo)) for combo in itertools.product(vals, repeat=len(ts))]
        if region is not None:
            out = [p for p in out if p.sup_dist(region.center) <= region.radius]
        return out

    def cover_size(self, k: int) -> int:
        return len(self._grid_values(k + 1)) ** (self.knots + 1)

    def cover_ball(self, k: int, i: int) -> Ball:
        vals = self._grid_values(k + 1)
        m = len(vals)
        ts = [Fraction(j, self.knots) for j in range(self.knots + 1)]
        combo = []
        for _ in ts:
            i, r = divmod(i, m)
            combo.append(vals[r])
        combo.reverse()
        return Ball(PLFunction(zip(ts, combo)), pow2(-(k + 1)))


# closed balls -------------------------------------------------------------


class ClosedBallSpace(Space):
    """The closed ball ``{x : d(x, center) <= radius}`` of a parent space."""

    kind = "closed-ball"

    def __init__(self, parent: Space, center, radius):
        self.parent = parent
        self.center = parent.point(center)
        self.radius = Q(radius)
        if self.radius <= 0:
            raise InvalidInput("closed-ball radius must be positive")

    @property
    def compact(self) -> bool:  # type: ignore[override]
        return self.parent.compact

    def params(self) -> dict:
        return {"parent": self.parent, "center": self.center, "radius": self.radius}

    def __hash__(self) -> int:
        return hash(("closed-ball", self.parent, repr(self.center), self.radius))

    def point(self, p):
        p = self.parent.point(p)
        if self.parent.dist(p, self.center) > self.radius:
            raise InvalidInput("point outside the closed ball")
        return p

    def dist(self, p, q) -> Fraction:
        return self.parent.dist(p, q)

    def sort_key(self, p):
        return self.parent.sort_key(p)

    def _region(self) -> Ball:
        return Ball(self.center, self.radius)

    def net(self, k, region=None, **bounds):
        pts = self.parent.net(k, self._region(), **bounds)
        if region is not None:
            pts = [p for p in pts if self.parent.dist(p, region.center) <= region.radius]
        return pts

    def dense(self, i: int):
        p = self.parent.dense(i)
        if isinstance(self.parent, ClosedInterval):
            return min(max(p, self.center - self.radius), self.center + self.radius)
        if isinstance(self.parent, _SequenceSpace):
            m = _cylinder_length(self.radius, closed=True)
            head = (tuple(self.center) + (0,) * m)[:m]
            return _strip(head + tuple(p)[m:] if len(p) > m else head)
        raise UnsupportedNet(f"dense enumeration of closed balls in {self.parent.kind}")

    def _keep(self, ball: Ball) -> bool:
        return self.parent.dist(ball.center, self.center) < ball.radius + self.radius

    def cover_size(self, k: int) -> int:
        return len(self._kept(k))

    def _kept(self, k: int) -> list[int]:
        return _kept_indices(self, k)

    def cover_ball(self, k: int, i: int) -> Ball:
        return self.parent.cover_ball(k, self._kept(k)[i])

    def cover_hits(self, k: int, p):
        kept = self._kept(k)
        pos = {j: n for n, j in enumerate(kept)}
        return [(pos[j], b) for j, b in self.parent.cover_hits(k, p) if j in pos]


@lru_cache(maxsize=128)
def _kept_indices(space: ClosedBallSpace, k: int) -> list[int]:
    return [i for i, b in enumerate(space.parent.cover(k)) if space._keep(b)]


# construction -------------------------------------------------------------


KINDS = ("unit-interval", "closed-interval", "cantor", "baire", "product", "c01", "closed-ball")


def make_space(kind: str, params: Optional[dict] = None) -> Space:
    """Build a space descriptor; raises InvalidInput on malformed parameters."""
    params = dict(params or {})
    if kind == "unit-interval":
        return UnitInterval()
    if kind == "closed-interval":
        if "a" not in params or "b" not in params:
            raise InvalidInput("closed-interval needs a and b")
        return ClosedInterval(params["a"], params["b"])
    if kind == "cantor":
        return Cantor()
    if kind == "baire":
        return Baire(params.get("branching"), params.get("depth"))
    if kind == "product":
        factors = params.get("factors")
        if not factors:
            raise InvalidInput("product needs factors")
        return Product([f if isinstance(f, Space) else make_space(f["kind"], f.get("params")) for f in factors])
    if kind == "c01":
        return C01(params.get("knots"), params.get("lo"), params.get("hi"))
    if kind == "closed-ball":
        parent = params.get("parent")
        if parent is None or "center" not in params or "radius" not in params:
            raise InvalidInput("closed-ball needs parent, center and radius")
        if not isinstance(parent, Space):
            parent = make_space(parent["kind"], parent.get("params"))
        return ClosedBallSpace(parent, params["center"], params["radius"])
    raise InvalidInput(f"unknown space kind {kind!r}")


def dist(space: Space, p: Point, q: Point) -> Fraction:
    return space.dist(space.point(p), space.point(q))


def net(space: Space, resolution: int, region: Optional[Ball] = None, **bounds) -> list:
    if resolution < 0:
        raise InvalidInput("resolution must be natural")
    return space.net(resolution, region, **bounds)


def strictly_inside(b1: Ball, b2: Ball, space: Space) -> bool:
    """``b1 ⋐ b2``: d(c1, c2) + r1 < r2, exactly."""
    return space.strictly_inside(b1, b2)


def iter_cover(space: Space, budget: int) -> Iterator[tuple[int, int, int, Ball]]:
    """Canonical ball stream: (position, level, index-in-level, ball) below ``budget``."""
    pos = 0
    k = 0
    while pos < budget:
        size = space.cover_size(k)
        for i in range(min(size, budget - pos)):
            yield pos + i, k, i, space.cover_ball(k, i)
        pos += size
        k += 1


def _cached_size(space: Space, k: int) -> int:
    cache = space.__dict__.setdefault("_sizes", {})
    try:
        return cache[k]
    except KeyError:
        n = cache[k] = space.cover_size(k)
        return n


def level_offsets(space: Space, budget: int) -> list[tuple[int, int]]:
    """(level, offset) pairs for every level that starts below ``budget``."""
    cache = space.__dict__.setdefault("_offsets", {})
    try:
        return cache[budget]
    except KeyError:
        pass
    out = []
    pos, k = 0, 0
    while pos < budget:
        out.append((k, pos))
        pos += _cached_size(space, k)
        k += 1
    cache[budget] = out
    return out
