"""Search for epsilon-critical points and check criticality certificates.

A point x* is epsilon-critical for f when ``eps*d(x*, y) <= f(x*) - f(y)``
forces ``y = x*``. On a finite net the clause ``y = x*`` becomes
``d(x*, y) <= delta`` and every comparison is made in the conservative
direction: upper evidence at x*, lower evidence at y.
"""

from __future__ import annotations

import random
from bisect import bisect_left
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Callable, Optional, Sequence

from .codes import (
    DEFAULT_BUDGET,
    Bracket,
    ContinuousCode,
    LscCode,
    ScaledContinuous,
    ScaledLsc,
    closed_sublevel,
    const_code,
    cont_to_lsc,
    evidence,
    lsc_add_scaled_distance,
    lsc_combine,
    lsc_zero_on_closed,
)
from .errors import EmptySupport, InvalidInput, UnsupportedNet, UnsupportedPoint
from .rationals import Q, pow2
from .spaces import Ball, ClosedBallSpace, Space

ZERO = Fraction(0)
MAX_RATE_EXP = 60


@dataclass(frozen=True)
class SearchParams:
    epsilon: Fraction
    resolution: int = 8
    budget: int = 4096
    max_iters: int = 64
    slack: Optional[Fraction] = None
    region: Optional[Ball] = None
    delta: Optional[Fraction] = None
    order_seed: Optional[int] = None

    def __post_init__(self):
        object.__setattr__(self, "epsilon", Q(self.epsilon))
        if self.epsilon <= 0:
            raise InvalidInput("epsilon must be positive")
        if self.slack is not None:
            object.__setattr__(self, "slack", Q(self.slack))
            if self.slack < 0:
                raise InvalidInput("slack must be nonnegative")
        if self.delta is not None:
            object.__setattr__(self, "delta", Q(self.delta))
            if self.delta < 0:
                raise InvalidInput("delta must be nonnegative")
        if self.resolution < 0 or self.budget < 0 or self.max_iters < 0:
            raise InvalidInput("resolution, budget and max_iters must be nonnegative")

    @property
    def delta_value(self) -> Fraction:
        return self.delta if self.delta is not None else pow2(-self.resolution + 1)


@dataclass
class CheckRow:
    y: object
    d: Fraction
    f_lo: Optional[Fraction]


@dataclass
class Localization:
    x0: object
    f_x0: Bracket
    lhs: Fraction
    rhs: Fraction
    slack: Fraction

    @property
    def ok(self) -> bool:
        return self.lhs <= self.rhs + self.slack


@dataclass
class CriticalityCertificate:
    x_star: object
    epsilon: Fraction
    delta: Fraction
    slack: Fraction
    resolution: int
    budget: int
    f_x_star: Bracket
    rows: list
    passed: bool
    witness: Optional[CheckRow] = None
    localization: Optional[Localization] = None
    region: Optional[Ball] = None

    @property
    def verdict(self) -> str:
        ok = self.passed and (self.localization is None or self.localization.ok)
        return "pass" if ok else "fail"

    def recheck(self) -> bool:
        """Re-derive the verdict from the recorded rows alone."""
        fx = self.f_x_star.hi
        for row in self.rows:
            if row.d <= self.delta or row.f_lo is None:
                continue
            if not self.epsilon * row.d > fx - row.f_lo - self.slack:
                return False
        return True


def _ordered(points: Sequence, space: Space, seed: Optional[int]) -> list:
    pts = list(points)
    if seed is not None:
        random.Random(seed).shuffle(pts)
    return pts


def _domain(space: Space, region: Optional[Ball]) -> Space:
    if region is None:
        if not space.compact:
            raise UnsupportedNet(f"a region is required on the non-compact space {space.kind}")
        return space
    return ClosedBallSpace(space, region.center, region.radius)


def verification_net(space: Space, params: SearchParams) -> list:
    return _ordered(_domain(space, params.region).net(params.resolution + 1), space, params.order_seed)


class _Evidence:
    """Memoized two-sided evidence for one function."""

    def __init__(self, f, budget: int):
        self.f = f
        self.budget = budget
        self._cache: dict = {}

    def __call__(self, x) -> Bracket:
        try:
            return self._cache[x]
        except KeyError:
            br = evidence(self.f, x, self.budget)
            self._cache[x] = br
            return br


def is_critical(f, x_star, params: SearchParams, delta=None, net: Optional[Sequence] = None,
                ev: Optional[_Evidence] = None) -> CriticalityCertificate:
    """Exhaustive net check of epsilon-criticality at x_star.

    Passes iff every net point y with d(x*, y) > delta has
    ``eps*d(x*, y) > f_hi(x*) - f_lo(y) - slack``; the first failing y is
    the witness.
    """
    space = f.space
    x_star = space.point(x_star)
    delta = Q(delta) if delta is not None else params.delta_value
    ev = ev or _Evidence(f, params.budget)
    fx = ev(x_star)
    if fx.hi is None:
        raise UnsupportedPoint(f"no finite upper evidence at {x_star}")
    pts = verification_net(space, params) if net is None else list(net)
    rows = []
    widths = [fx.width]
    for y in pts:
        d = space.dist(x_star, y)
        br = ev(y)
        rows.append(CheckRow(y, d, br.lo))
        if br.width is not None:
            widths.append(br.width)
    slack = params.slack if params.slack is not None else max(widths)
    witness = None
    for row in rows:
        if row.d <= delta or row.f_lo is None:
            continue
        if not params.epsilon * row.d > fx.hi - row.f_lo - slack:
            witness = row
            break
    return CriticalityCertificate(x_star, params.epsilon, delta, slack, params.resolution, params.budget,
                                  fx, rows, witness is None, witness, region=params.region)


@dataclass
class SearchState:
    iterates: list = field(default_factory=list)
    qs: list = field(default_factory=list)
    u_history: list = field(default_factory=list)
    rate_cache: dict = field(default_factory=dict)
    evidence: dict = field(default_factory=dict)
    stopped: str = ""

    @property
    def a_n(self):
        return self.iterates[-1] if self.iterates else None

    @property
    def q_n(self):
        return self.qs[-1] if self.qs else None

    def tail_sum(self, n: int) -> Fraction:
        return sum(self.qs[n:], ZERO)

    def schedule_ok(self) -> bool:
        """Sum over k >= n of q_k stays below 2**-n for every recorded n."""
        return all(self.tail_sum(n) < pow2(-n) for n in range(len(self.qs)))

    def telescoping_ok(self, eps=1) -> bool:
        """eps*d(a_m, a_n) <= f_hi(a_n) - f_lo(a_m) + sum_{k>=n} q_k along the run."""
        eps = Q(eps)
        space = self._space
        for n in range(len(self.iterates)):
            for m in range(n + 1, len(self.iterates)):
                an, am = self.iterates[n], self.iterates[m]
                lhs = eps * space.dist(an, am)
                rhs = self.evidence[an].hi - self.evidence[am].lo + self.tail_sum(n)
                if lhs > rhs:
                    return False
        return True


class _Search:
    """The iteration with bracketed infima over a finite candidate set."""

    def __init__(self, f, params: SearchParams, net):
        self.f = f
        self.space = f.space
        self.params = params
        self.eps = params.epsilon
        self.ev = _Evidence(f, params.budget)
        self.net_fn: Optional[Callable] = net if callable(net) else None
        if self.net_fn is None:
            pts = list(net) if net is not None else _domain(self.space, params.region).net(params.resolution)
            self.points = _ordered(pts, self.space, params.order_seed)
        else:
            self.points = None

    def candidates(self, a) -> list:
        if self.net_fn is None:
            return self.points
        return _ordered(self.net_fn(a), self.space, self.params.order_seed)

    def thresholds(self, a, pool) -> list:
        """t_b with b in S(a, q) iff t_b < q (a itself always belongs)."""
        fa = self.ev(a).lo
        out = []
        for b in pool:
            hb = self.ev(b).hi
            if hb is None:
                continue
            if b == a:
                out.append((Fraction(-1), b))
                continue
            out.append((self.eps * self.space.dist(a, b) + hb - fa, b))
        return out

    def u(self, th, q) -> tuple[Bracket, list]:
        members = [b for t, b in th if t < q]
        lo = min(self.ev(b).lo for b in members)
        hi = min(self.ev(b).hi for b in members)
        return Bracket(min(lo, hi), hi), members

    def rate(self, a, p, th, state: SearchState) -> Fraction:
        key = (a, p)
        if key in state.rate_cache:
            return state.rate_cache[key]
        r_a = min(self.ev(b).hi for t, b in th if t <= 0)
        pairs = sorted((t, self.ev(b).hi) for t, b in th)
        ts = [t for t, _ in pairs]
        prefix = []
        best = None
        for _, h in pairs:
            best = h if best is None else min(best, h)
            prefix.append(best)
        out = pow2(-MAX_RATE_EXP)
        for n in range(MAX_RATE_EXP + 1):
            q = pow2(-n)
            k = bisect_left(ts, q)
            if k and prefix[k - 1] > r_a - p:
                out = q
                break
        state.rate_cache[key] = out
        return out

    def _inside(self, b, constraints) -> bool:
        hb = self.ev(b).hi
        for a, fa, q in constraints:
            if b != a and not self.eps * self.space.dist(a, b) + hb - fa < q:
                return False
        return True

    def run(self) -> tuple[object, SearchState]:
        state = SearchState()
        state._space = self.space
        start = self.candidates(None)
        a = next((b for b in start if self.ev(b).hi is not None), None)
        if a is None:
            raise EmptySupport("no finite upper evidence on the search net")
        pool = [b for b in self.candidates(a) if self.ev(b).hi is not None]
        if a not in pool:
            pool.insert(0, a)
        th = self.thresholds(a, pool)
        rates = [self.rate(a, Fraction(1), th, state)]
        q = pow2(-2) * rates[0]
        state.iterates.append(a)
        state.qs.append(q)
        state.evidence[a] = self.ev(a)
        target = pow2(-self.params.resolution)
        constraints: list = []
        for n in range(self.params.max_iters):
            ub, members = self.u(th, q)
            state.u_history.append(ub)
            if pow2(-(n + 1)) + ub.width < target:
                state.stopped = "converged"
                break
            bound = ub.hi + pow2(-(n + 1))
            nxt = next(b for b in members if self.ev(b).hi < bound)
            # S sets nest: later candidates must stay inside every earlier S
            constraints.append((a, self.ev(a).lo, q))
            if self.net_fn is None:
                pool = members
            else:
                fresh = [b for b in self.candidates(nxt) if self.ev(b).hi is not None]
                pool = [b for b in fresh if b == nxt or self._inside(b, constraints)]
                if nxt not in pool:
                    pool.insert(0, nxt)
            a = nxt
            th = self.thresholds(a, pool)
            rates.append(self.rate(a, pow2(-(n + 1)), th, state))
            prod = Fraction(1)
            for r in rates[1:]:
                prod *= r
            q = pow2(-(n + 3)) * prod
            state.iterates.append(a)
            state.qs.append(q)
            state.evidence[a] = self.ev(a)
        else:
            state.stopped = "max_iters"
        return a, state


def fvp_search(f, params: SearchParams, net=None, verify_net=None):
    """Run the iteration and certify the best iterate.

    ``net`` may be a list of candidates or a callable returning the local
    candidates around the current iterate.
    """
    search = _Search(f, params, net)
    _, state = search.run()
    best = None
    for a in state.iterates:
        if best is None or search.ev(a).hi <= search.ev(best).hi:
            best = a
    if verify_net is None and callable(net):
        verify_net = net(best)
    elif callable(verify_net):
        verify_net = verify_net(best)
    cert = is_critical(f, best, params, net=verify_net, ev=search.ev)
    return best, cert, state


def fvp_min_compact(f, space: Optional[Space], params: SearchParams):
    """Grid minimizer with a value bracket; the lower end comes from the cover."""
    space = space or f.space
    if not space.compact and params.region is None:
        raise UnsupportedNet(f"{space.kind} is not compact")
    dom = _domain(space, params.region)
    ev = _Evidence(f, params.budget)
    pts = _ordered(dom.net(params.resolution), space, params.order_seed)
    best, best_hi = None, None
    for y in pts:
        hi = ev(y).hi
        if hi is not None and (best_hi is None or hi < best_hi):
            best, best_hi = y, hi
    if best is None:
        raise EmptySupport("no finite upper evidence on the net")
    lo = None
    for ball in dom.cover(params.resolution):
        b = _ball_lower(f, ball, params.budget)
        if b is not None and (lo is None or b < lo):
            lo = b
    lo = best_hi if lo is None else min(lo, best_hi)
    return best, Bracket(lo, best_hi)


def _ball_lower(f, ball: Ball, budget: int) -> Optional[Fraction]:
    if getattr(f, "honest", False):
        br = f.ball_inf(ball)
        return None if br is None else br.lo
    if hasattr(f, "exact_range"):
        return f.exact_range(ball)[0]
    if isinstance(f, ContinuousCode):
        br = f.ball_range(ball, budget)
        return None if br is None else br.lo
    if isinstance(f, LscCode):
        return f.forced(ball, budget)
    return None


def _as_lsc(f) -> LscCode:
    if isinstance(f, LscCode):
        return f
    if isinstance(f, ContinuousCode):
        return cont_to_lsc(f)
    raise InvalidInput("expected a function code")


def bound_reduce(f, x0) -> LscCode:
    """``min(f, f(x0))``: a bounded code with the same localized critical points."""
    f = _as_lsc(f)
    x0 = f.space.point(x0)
    v = f.upper(x0)
    if v is None:
        raise UnsupportedPoint(f"no finite upper evidence at {x0}")
    return lsc_combine(f, const_code(f.space, v), "min")


def scale_reduce(f, epsilon):
    """``f / eps``: 1-criticality of the result is eps-criticality of f."""
    epsilon = Q(epsilon)
    if epsilon <= 0:
        raise InvalidInput("epsilon must be positive")
    factor = 1 / epsilon
    if isinstance(f, ContinuousCode):
        return ScaledContinuous(f, factor)
    return ScaledLsc(f, factor)


def localized_tilde(f, x0, epsilon, bounded: bool = True):
    """``max(f, eps*d(., x0) + f(x0))`` off C and f on C, C = {eps*d(x, x0) <= f(x0) - f(x)}.

    Returns ``(f_tilde, C, f_used)`` where ``f_used`` is the (possibly
    bound-reduced) potential the construction started from.
    """
    f = _as_lsc(f)
    x0 = f.space.point(x0)
    base = bound_reduce(f, x0) if bounded else f
    fx0 = base.upper(x0)
    if fx0 is None:
        raise UnsupportedPoint(f"no finite upper evidence at {x0}")
    g = lsc_add_scaled_distance(base, x0, epsilon)
    C = closed_sublevel(g, fx0)
    cone = lsc_add_scaled_distance(const_code(f.space, fx0), x0, epsilon)
    tilde = lsc_combine(base, lsc_zero_on_closed(cone, C), "max")
    return tilde, C, base


def localization_check(f, x0, x_star, epsilon, slack, budget: int = DEFAULT_BUDGET) -> Localization:
    space = f.space
    fx0 = evidence(f, x0, budget)
    fxs = evidence(f, x_star, budget)
    lhs = Q(epsilon) * space.dist(x0, x_star)
    rhs = fx0.lo - fxs.hi
    return Localization(x0, fx0, lhs, rhs, Q(slack))


def lvp_search(f, x0, params: SearchParams, bounded: bool = True, net=None):
    """Localized search through the tilde construction; certified against the original f."""
    x0 = f.space.point(x0)
    if evidence(f, x0, params.budget).hi is None:
        raise UnsupportedPoint(f"no finite upper evidence at {x0}")
    tilde, _, _ = localized_tilde(f, x0, params.epsilon, bounded)
    if net is None:
        # the anchor may sit off the grid; the iteration starts there and it is checked against
        grid = _ordered(_domain(f.space, params.region).net(params.resolution), f.space, params.order_seed)
        net = [x0] + [p for p in grid if p != x0]
        verify = [x0] + verification_net(f.space, params)
    elif callable(net):
        inner = net
        net = lambda a: [x0] + list(inner(x0 if a is None else a))
        verify = None
    else:
        net = [x0] + [p for p in net if p != x0]
        verify = [x0] + verification_net(f.space, params)
    x_star, tilde_cert, state = fvp_search(tilde, params, net=net, verify_net=verify)
    check = net(x_star) if callable(net) else verify
    cert = is_critical(f, x_star, params, net=check)
    slack = params.slack if params.slack is not None else cert.slack
    cert.localization = localization_check(f, x0, x_star, params.epsilon, slack, params.budget)
    state.tilde_certificate = tilde_cert
    return x_star, cert, state
