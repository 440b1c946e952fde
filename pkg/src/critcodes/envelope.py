"""Lower alpha-envelopes (inf-convolutions) with two-sided exact brackets."""

from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction
from typing import Callable, Optional

from .codes import (
    DEFAULT_BUDGET,
    Bracket,
    ContinuousCode,
    ExactContinuous,
    HonestLscCode,
    evidence,
)
from .errors import EmptySupport, InvalidInput
from .rationals import Q, ceil_log2, pow2
from .spaces import Ball, ClosedBallSpace, Product, Space

ZERO = Fraction(0)


def _search_space(space: Space, region: Optional[Ball]) -> Space:
    if region is None:
        if not space.compact:
            raise InvalidInput(f"a region is required on the non-compact space {space.kind}")
        return space
    return ClosedBallSpace(space, region.center, region.radius)


class EnvelopeCode:
    """``f_alpha(x) = inf_y f(y) + alpha*d(x, y)`` bracketed at a fixed resolution.

    Lower bounds come from honest infima over the level-``resolution`` cover,
    upper bounds from upper evidence on the next finer net plus the honest
    code's ball witnesses. The result is a two-sided evidence object usable by
    the search and certificate routines.
    """

    name = "envelope"
    has_value = False
    honest = False

    def __init__(self, f: HonestLscCode, alpha, resolution: int = 8, region: Optional[Ball] = None):
        if not getattr(f, "honest", False):
            raise InvalidInput("the envelope needs an honest code")
        alpha = Q(alpha)
        if alpha <= 0:
            raise InvalidInput("alpha must be positive")
        self.f = f
        self.space = f.space
        self.alpha = alpha
        self.resolution = resolution
        self.region = region
        self.lower_bound = f.lower_bound
        domain = _search_space(f.space, region)
        self._cover = []
        for ball in domain.cover(resolution):
            br = f.ball_inf(ball)
            if br is not None:
                self._cover.append((br.lo, ball))
        self._cover.sort(key=lambda t: t[0])
        samples = {}
        for y in domain.net(resolution + 1):
            samples[y] = f.upper(y)
        for _, ball in self._cover:
            w = f.ball_witness(ball)
            if w is not None and w not in samples:
                samples[w] = f.upper(w)
        self._samples = [(y, v) for y, v in samples.items() if v is not None]
        self._samples.sort(key=lambda t: t[1])
        if not self._samples:
            raise EmptySupport("no finite upper evidence in the searched region")
        self._cache: dict = {}
        self._attainers: dict = {}

    def evidence(self, x, budget: int = DEFAULT_BUDGET) -> Bracket:
        x = self.space.point(x)
        try:
            return self._cache[x]
        except KeyError:
            pass
        dist, a = self.space.dist, self.alpha
        hi = self.f.upper(x)  # the y = x term
        arg = x
        for y, v in self._samples:
            if hi is not None and v >= hi:
                break  # sorted by value: the distance term only adds
            t = v + a * dist(x, y)
            if hi is None or t < hi:
                hi, arg = t, y
        lo = None
        for q, ball in self._cover:
            if lo is not None and q >= lo:
                break
            t = q + a * max(ZERO, dist(x, ball.center) - ball.radius)
            if lo is None or t < lo:
                lo = t
        if lo > hi:
            lo = hi
        br = Bracket(lo, hi)
        self._cache[x] = br
        self._attainers[x] = arg
        return br

    def attainer(self, x):
        """The sample y realizing the upper bound f(y) + alpha*d(x, y)."""
        x = self.space.point(x)
        self.evidence(x)
        return self._attainers[x]

    def upper(self, x) -> Fraction:
        return self.evidence(x).hi

    def lower(self, x, budget: int = DEFAULT_BUDGET) -> Fraction:
        return self.evidence(x).lo

    def width_bound(self) -> Fraction:
        return self.alpha * pow2(-self.resolution)


def envelope_value(f: HonestLscCode, alpha, x, resolution: int = 8, region: Optional[Ball] = None) -> Bracket:
    return EnvelopeCode(f, alpha, resolution, region).evidence(x)


def distance_kernel(space: Space, alpha=1) -> ExactContinuous:
    """``h(x, y) = alpha*d(x, y)`` on ``space x space`` with exact sections."""
    alpha = Q(alpha)
    prod = Product([space, space])

    def value(p):
        return alpha * space.dist(p[0], p[1])

    def rng(ball):
        (a, b), r = ball.center, ball.radius
        d = space.dist(a, b)
        return alpha * max(ZERO, d - 2 * r), alpha * (d + 2 * r)

    code = ExactContinuous(prod, value, rng, modulus=envelope_modulus(alpha=alpha), name="distance")

    def section(x, ball):
        d = space.dist(x, ball.center)
        return alpha * max(ZERO, d - ball.radius), alpha * (d + ball.radius)

    code.section_range = section
    return code


def _section(h: ContinuousCode, x, ball: Ball) -> Optional[Bracket]:
    if hasattr(h, "section_range"):
        lo, hi = h.section_range(x, ball)
        return Bracket(lo, hi)
    pb = Ball((x, ball.center), ball.radius)
    if hasattr(h, "exact_range"):
        lo, hi = h.exact_range(pb)
        return Bracket(lo, hi)
    return h.ball_range(pb)


def inf_conv(h: ContinuousCode, f: HonestLscCode, x, resolution: int = 8,
             region: Optional[Ball] = None, budget: int = DEFAULT_BUDGET) -> Bracket:
    """Bracket for ``inf_y h(x, y) + f(y)``.

    Below: per cover ball B of Y, a lower bound of h on {x} x B plus the
    honest infimum of f on B. Above: h(x, y) + upper(f(y)) on the finer net
    and at the honest witnesses.
    """
    if not getattr(f, "honest", False):
        raise InvalidInput("inf_conv needs an honest code")
    domain = _search_space(f.space, region)
    lo = None
    for ball in domain.cover(resolution):
        br = f.ball_inf(ball)
        if br is None:
            continue
        hb = _section(h, x, ball)
        if hb is None:
            continue
        t = br.lo + hb.lo
        if lo is None or t < lo:
            lo = t
    pts = list(domain.net(resolution + 1))
    for ball in domain.cover(resolution):
        w = f.ball_witness(ball)
        if w is not None:
            pts.append(w)
    hi = None
    for y in pts:
        v = f.upper(y)
        if v is None:
            continue
        hv = evidence(h, (x, y), budget).hi
        t = v + hv
        if hi is None or t < hi:
            hi = t
    if hi is None or lo is None:
        raise EmptySupport("no finite upper evidence in the searched region")
    return Bracket(min(lo, hi), hi)


def envelope_modulus(h_modulus: Optional[Callable[[int], int]] = None, alpha=None) -> Callable[[int], int]:
    """Modulus of uniform continuity of the envelope.

    With a kernel modulus the envelope inherits it unchanged; for the
    distance kernel ``alpha*d`` it is the alpha-Lipschitz modulus.
    """
    if h_modulus is not None:
        return h_modulus
    if alpha is None:
        raise InvalidInput("need a kernel modulus or alpha")
    alpha = Q(alpha)
    if alpha <= 0:
        raise InvalidInput("alpha must be positive")
    shift = ceil_log2(alpha)
    return lambda n: max(0, n + shift)


@dataclass
class TransferReport:
    x_star: object
    point: object
    alpha: Fraction
    beta: Fraction
    f_value: Bracket
    envelope_value: Bracket
    gap_bound: Fraction
    tol: Fraction
    value_ok: bool
    certificate: object
    passed: bool = field(init=False)

    def __post_init__(self):
        self.passed = self.value_ok and self.certificate.passed


def transfer_critical(f: HonestLscCode, alpha, beta, x_star, resolution: int = 8, tol=None,
                      slack=None, region: Optional[Ball] = None, budget: int = DEFAULT_BUDGET,
                      order_seed: Optional[int] = None) -> TransferReport:
    """Check that an alpha-critical point of f_beta is alpha-critical for f with f = f_beta there.

    A critical point found at finite resolution is only approximately one
    where f meets f_beta. If x_star itself fails, the check moves to the
    sample y realizing f_beta(x_star); when x_star is critical for f_beta up
    to slack s, that y lies within s / (beta - alpha) of x_star. The report
    records which point was certified.
    """
    from .ekeland import SearchParams, is_critical

    alpha, beta = Q(alpha), Q(beta)
    if not 0 < alpha < beta:
        raise InvalidInput("transfer needs 0 < alpha < beta")
    env = EnvelopeCode(f, beta, resolution, region)
    x_star = f.space.point(x_star)
    tol = Q(tol) if tol is not None else env.width_bound()
    params = SearchParams(epsilon=alpha, resolution=resolution, budget=budget, slack=slack,
                          region=region, order_seed=order_seed)

    def check(p):
        fv = evidence(f, p, budget)
        ev = env.evidence(p)
        gap = None if fv.hi is None else max(fv.hi - ev.lo, ev.hi - fv.lo, ZERO)
        ok = gap is not None and gap <= tol
        cert = is_critical(f, p, params) if ok else None
        return fv, ev, gap, ok, cert

    point = x_star
    fv, ev, gap, ok, cert = check(x_star)
    if not (ok and cert.passed):
        y = env.attainer(x_star)
        if y != x_star:
            alt = check(y)
            if alt[3] and alt[4].passed:
                point = y
                fv, ev, gap, ok, cert = alt
    if cert is None:
        cert = is_critical(f, point, params)
    return TransferReport(x_star, point, alpha, beta, fv, ev, gap, tol, ok, cert)
