"""Reversal gadgets: explicit functions built from trees, injections and sequences.

Each gadget comes with exact value oracles, a code, and the decoding or
witness map that turns a critical point (or its absence) back into the
combinatorial data. Infinite objects are replaced by depth- and
branching-bounded fragments; every statement is relative to those bounds.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass
from fractions import Fraction
from typing import Iterable, Optional, Sequence

from .codes import (
    CoverLsc,
    ExactContinuous,
    OracleLsc,
    interval_clip,
    lipschitz_modulus,
    pl_code,
)
from .errors import InvalidInput
from .pl import PLFunction, concat
from .rationals import Q, cantor_pair, pow2
from .spaces import Ball, Baire, C01, Cantor, UnitInterval, _cylinder_length, _strip

ZERO = Fraction(0)


# trees -------------------------------------------------------------------


def _as_seq(s) -> tuple[int, ...]:
    if isinstance(s, str):
        if not s.isdigit() and s != "":
            raise InvalidInput(f"tree node {s!r} is not a digit string")
        return tuple(int(c) for c in s)
    return tuple(int(v) for v in s)


@dataclass(frozen=True)
class TreeSpec:
    """Finite tree of sequences with entries < ``branching`` and lengths <= ``depth``.

    "Has a path" means "has a node of length ``depth``".
    """

    nodes: frozenset
    depth: int
    branching: int = 2

    @classmethod
    def build(cls, nodes: Iterable, depth: Optional[int] = None, branching: int = 2) -> "TreeSpec":
        ns = {_as_seq(s) for s in nodes}
        ns.add(())
        if depth is None:
            depth = max(len(s) for s in ns) + 1
        spec = cls(frozenset(ns), int(depth), int(branching))
        spec.validate()
        return spec

    def validate(self):
        if self.depth < 1 or self.branching < 1:
            raise InvalidInput("tree bounds must be positive")
        for s in self.nodes:
            if len(s) > self.depth:
                raise InvalidInput(f"node {s} is longer than the depth bound {self.depth}")
            if any(v < 0 or v >= self.branching for v in s):
                raise InvalidInput(f"node {s} violates the branching bound {self.branching}")
            if s and s[:-1] not in self.nodes:
                raise InvalidInput(f"tree is not downward closed at {s}")

    def __contains__(self, s) -> bool:
        return tuple(s) in self.nodes

    def children(self, s) -> list[tuple[int, ...]]:
        return [s + (b,) for b in range(self.branching) if s + (b,) in self.nodes]

    def leaves(self) -> list[tuple[int, ...]]:
        return sorted(s for s in self.nodes if not self.children(s))

    def has_path(self) -> bool:
        """Bounded depth-first search for a node of length ``depth``."""
        return self.path() is not None

    def path(self) -> Optional[tuple[int, ...]]:
        stack = [()]
        while stack:
            s = stack.pop()
            if len(s) == self.depth:
                return s
            stack.extend(reversed(self.children(s)))
        return None

    def extends_to(self, prefix: tuple, length: int) -> bool:
        """Some node of exactly ``length`` extends ``prefix``."""
        prefix = tuple(prefix)
        if len(prefix) > length:
            return prefix[:length] in self.nodes
        return any(len(s) == length and s[: len(prefix)] == prefix for s in self.nodes)

    def to_json(self) -> dict:
        return {"nodes": ["".join(map(str, s)) if self.branching <= 10 else list(s) for s in sorted(self.nodes)],
                "depth": self.depth, "branching": self.branching}


# WKL gadget ----------------------------------------------------------------


def _tilde(sigma: tuple) -> tuple:
    out = []
    for b in sigma:
        out.extend((0, b))
    return tuple(out)


def _dyadic_interval(rho: tuple) -> tuple[Fraction, Fraction]:
    l = sum((Fraction(b, 2 ** (i + 1)) for i, b in enumerate(rho)), ZERO)
    return l, l + pow2(-len(rho))


class WklGadget:
    """Continuous function without critical points, from a binary tree without a long path.

    Regions: the interleaved copy of every leaf carries ``2 - sum_{i in A} 4**-i``,
    every escape string carries 3.
    """

    def __init__(self, tree: TreeSpec, target: str = "cantor"):
        if tree.branching != 2:
            raise InvalidInput("the WKL gadget needs a binary tree")
        if tree.has_path():
            raise InvalidInput(f"tree has a path of length {tree.depth}")
        if target not in ("cantor", "unit"):
            raise InvalidInput(f"unknown target {target!r}")
        self.tree = tree
        self.target = target
        self.leaves = tree.leaves()
        self.A = {s: self.a_set(s) for s in self.leaves}
        self.leaf_value = {s: 2 - sum((pow2(-2 * i) for i in self.A[s]), ZERO) for s in self.leaves}
        self.tilde = {s: _tilde(s) for s in tree.nodes}
        prefixes = set()
        for s in tree.nodes:
            t = self.tilde[s]
            prefixes.update(t[:j] for j in range(len(t) + 1))
        leaf_tildes = {self.tilde[s] for s in self.leaves}
        self.escape = sorted(
            rho + (b,)
            for rho in prefixes
            if rho not in leaf_tildes
            for b in (0, 1)
            if rho + (b,) not in prefixes
        )
        regions = [(self.tilde[s], self.leaf_value[s], s) for s in self.leaves]
        regions += [(t, Fraction(3), None) for t in self.escape]
        self.regions = sorted(regions, key=lambda r: _dyadic_interval(r[0])[0])
        if target == "cantor":
            self.space = Cantor()
            self.code = ExactContinuous(self.space, self.value, self._cantor_range, modulus=self._cantor_modulus,
                                        name="wkl")
        else:
            self.pl = self._unit_pl()
            self.space = UnitInterval()
            self.code = pl_code(self.pl, self.space)
        self.code.gadget = self

    def a_set(self, sigma: tuple) -> frozenset:
        """``{i < |s|-1 : no node of length |s|+1 extends (s|i) + (1 - s(i+1))}``."""
        n = len(sigma)
        out = set()
        for i in range(n - 1):
            branch = sigma[:i] + (1 - sigma[i + 1],)
            if not self.tree.extends_to(branch, n + 1):
                out.add(i)
        return frozenset(out)

    def _cantor_modulus(self, n: int) -> int:
        return max(len(r[0]) for r in self.regions)

    def _region_of_seq(self, x: tuple):
        for rho, v, leaf in self.regions:
            if (x + (0,) * len(rho))[: len(rho)] == rho:
                return rho, v, leaf
        raise AssertionError("regions cover the space")

    def _cantor_range(self, ball: Ball):
        m = _cylinder_length(ball.radius, closed=False)
        c = (tuple(ball.center) + (0,) * m)[:m]
        vals = [v for rho, v, _ in self.regions if rho[: m] == c[: len(rho)]]
        return min(vals), max(vals)

    def _unit_pl(self) -> PLFunction:
        pieces = []
        for rho, v, leaf in self.regions:
            l, r = _dyadic_interval(rho)
            if leaf is None:
                pieces.append(PLFunction([(l, 3), (r, 3)]))
            else:
                pieces.append(PLFunction([(l, 3), ((l + r) / 2, v), (r, 3)]))
        return concat(pieces)

    def value(self, x) -> Fraction:
        if self.target == "unit":
            return self.pl(x)
        return self._region_of_seq(tuple(x))[1]

    def region_interval(self, rho) -> tuple[Fraction, Fraction]:
        return _dyadic_interval(rho)

    def leaf_point(self, sigma: tuple):
        """Zero-tail point of [tilde sigma] (cantor) or the midpoint of its interval (unit)."""
        t = self.tilde[sigma]
        if self.target == "cantor":
            return _strip(t)
        l, r = _dyadic_interval(t)
        return (l + r) / 2

    def unit_pieces(self) -> list[tuple[tuple[Fraction, Fraction], PLFunction]]:
        """Per-region piecewise-linear pieces, each on its closed dyadic interval."""
        out = []
        for rho, v, leaf in self.regions:
            l, r = _dyadic_interval(rho)
            if leaf is None:
                out.append(((l, r), PLFunction([(l, 3), (r, 3)])))
            else:
                out.append(((l, r), PLFunction([(l, 3), ((l + r) / 2, v), (r, 3)])))
        return out

    def _leaf_of(self, x) -> Optional[tuple]:
        if self.target == "cantor":
            return self._region_of_seq(tuple(x))[2]
        for rho, v, leaf in self.regions:
            if leaf is None:
                continue
            l, r = _dyadic_interval(rho)
            if l < x < r:
                return leaf
        return None

    def _holds(self, x, y) -> bool:
        return self.value(x) - self.value(y) >= self.space.dist(x, y)

    def witness(self, x) -> tuple[object, str]:
        """The proof's refuting point y, with the case that produced it.

        Cases: ``escape``, ``leaf`` (the proof's sigma' construction),
        ``search`` (the construction failed the inequality at this finite
        depth and another leaf point was found), ``horizon`` (no refuting
        leaf point exists: x sits in a deepest valley of the finite gadget;
        y = x then).
        """
        x = self.space.point(x)
        leaf = self._leaf_of(x)
        if leaf is None:
            best = min(self.leaves, key=lambda s: (self.leaf_value[s], s))
            y = self.leaf_point(best)
            return y, "escape"
        sigma = leaf
        n = len(sigma)
        outside = [i for i in range(n - 1) if i not in self.A[sigma]]
        if outside:
            i0 = outside[-1]
            branch = sigma[:i0] + (1 - sigma[i0 + 1],)
            cands = [s for s in self.leaves if len(s) > n and s[: len(branch)] == branch]
            if not cands:
                tau = next(t for t in sorted(self.tree.nodes) if len(t) == n + 1 and t[: len(branch)] == branch)
                cands = [s for s in self.leaves if s[: len(tau)] == tau]
            y = self.leaf_point(cands[0])
            if y != x and self._holds(x, y):
                return y, "leaf"
        for s in sorted(self.leaves, key=lambda s: (self.leaf_value[s], s)):
            y = self.leaf_point(s)
            if y != x and self._holds(x, y):
                return y, "search"
        return x, "horizon"


def wkl_gadget(tree: TreeSpec, target: str = "cantor"):
    return WklGadget(tree, target).code


def wkl_witness(g, x):
    gadget = g if isinstance(g, WklGadget) else g.gadget
    return gadget.witness(x)[0]


# ACA gadget: range of an injection ---------------------------------------------


class AcaInjGadget:
    """``f = 1 - sum_{n<N} 2**(-2n-1+v_n(x(2**(n+1))))`` on Baire space.

    Naturals code finite sets by bitmask; ``v_n(D) = #{a in D : h(a) < n}``.
    """

    def __init__(self, table: dict, N: int):
        self.h = {int(a): int(b) for a, b in dict(table).items()}
        if len(set(self.h.values())) != len(self.h):
            raise InvalidInput("the table is not injective")
        if any(a < 0 or b < 0 for a, b in self.h.items()):
            raise InvalidInput("table entries must be naturals")
        self.N = int(N)
        if self.N < 0:
            raise InvalidInput("N must be a natural")
        self.bits = max(self.h, default=-1) + 1
        self.mask_bound = 1 << self.bits
        self.length = 2 ** (self.N + 1) + 1
        self.space = Baire(branching=self.mask_bound, depth=self.length)
        self.code = ExactContinuous(self.space, self.value, self._range, modulus=lambda n: 2 ** (n + 1),
                                    name="aca-inj")
        self.code.gadget = self

    @staticmethod
    def slot(n: int) -> int:
        return 2 ** (n + 1)

    def v(self, n: int, mask: int) -> int:
        return sum(1 for a, b in self.h.items() if b < n and (mask >> a) & 1)

    def v_max(self, n: int) -> int:
        return sum(1 for b in self.h.values() if b < n)

    def term(self, n: int, v: int) -> Fraction:
        return pow2(-2 * n - 1 + v)

    def entry(self, x, i: int) -> int:
        x = tuple(x)
        return x[i] if i < len(x) else 0

    def g(self, x) -> Fraction:
        return sum((self.term(n, self.v(n, self.entry(x, self.slot(n)))) for n in range(self.N)), ZERO)

    def value(self, x) -> Fraction:
        return 1 - self.g(x)

    def _range(self, ball: Ball):
        m = _cylinder_length(ball.radius, closed=False)
        c = tuple(ball.center)
        lo_g = hi_g = ZERO
        for n in range(self.N):
            s = self.slot(n)
            if s < m:
                t = self.term(n, self.v(n, self.entry(c, s)))
                lo_g += t
                hi_g += t
            else:
                lo_g += self.term(n, 0)
                hi_g += self.term(n, self.v_max(n))
        return 1 - hi_g, 1 - lo_g

    def preimage_mask(self, n: int) -> int:
        mask = 0
        for a, b in self.h.items():
            if b < n:
                mask |= 1 << a
        return mask

    def oracle_point(self) -> tuple:
        """D_n = h^-1[0, n) in every slot n <= N (slot N is read only by decoding)."""
        x = [0] * self.length
        for n in range(self.N + 1):
            x[self.slot(n)] = self.preimage_mask(n)
        return _strip(x)

    def perturb(self, x, n: int, mask: int) -> tuple:
        x = list(tuple(x)) + [0] * max(0, self.length - len(tuple(x)))
        x[self.slot(n)] = mask
        return _strip(x)

    def perturbation_net(self, x, slots: Optional[Sequence[int]] = None) -> list:
        """x and every single-slot change of x (all masks at each slot n < N)."""
        x = tuple(x) if x is not None else ()
        out = [x]
        for n in (range(self.N) if slots is None else slots):
            cur = self.entry(x, self.slot(n))
            out.extend(self.perturb(x, n, m) for m in range(self.mask_bound) if m != cur)
        return out

    def decode(self, x_star, N: Optional[int] = None) -> set:
        """``{n < N : some a in D_{n+1} has h(a) = n}``; needs slots up to N."""
        N = self.N if N is None else N
        out = set()
        for n in range(N):
            mask = self.entry(x_star, self.slot(n + 1))
            if any(b == n and (mask >> a) & 1 for a, b in self.h.items()):
                out.add(n)
        return out

    def table_range(self, N: Optional[int] = None) -> set:
        N = self.N if N is None else N
        return {b for b in self.h.values() if b < N}


def aca_injection_gadget(table: dict, N: int):
    return AcaInjGadget(table, N).code


def aca_decode_range(x_star, N: int, table: dict) -> set:
    return AcaInjGadget(table, N).decode(x_star, N)


# ACA gadget: supremum of a sequence ---------------------------------------------


class AcaSupGadget:
    """``f = 2`` below some c_n, ``f = x`` otherwise, for a finite increasing prefix of c."""

    def __init__(self, c: Sequence):
        cs = [Q(v) for v in c]
        if not cs:
            raise InvalidInput("need at least one term")
        for a, b in zip(cs, cs[1:]):
            if not a < b:
                raise InvalidInput("the sequence must be strictly increasing")
        if cs[0] < 0 or cs[-1] > 1:
            raise InvalidInput("terms must lie in [0, 1]")
        self.c = cs
        self.cmax = cs[-1]
        self.space = UnitInterval()
        self.code = OracleLsc(self.space, self.value, self.ball_inf, lower_bound=0, witness_fn=self.witness,
                              name="aca-sup")
        self.code.gadget = self

    def value(self, x) -> Fraction:
        x = Q(x)
        return Fraction(2) if x < self.cmax else x

    def ball_inf(self, ball: Ball) -> Fraction:
        """Exact infimum of f over the open interval."""
        u, v = ball.center - ball.radius, ball.center + ball.radius
        lo, hi = interval_clip(self.space, ball)
        if v <= self.cmax:
            return Fraction(2)
        return min(Fraction(2), max(lo, self.cmax))

    def witness(self, ball: Ball):
        if ball.center + ball.radius <= self.cmax:
            return ball.center
        lo, _ = interval_clip(self.space, ball)
        return max(lo, self.cmax)

    def rule_q(self, ball: Ball, honest: bool = True) -> Fraction:
        """Largest q granted by the enumeration rules on the interval (u, v)."""
        u, v = ball.center - ball.radius, ball.center + ball.radius
        q = u
        if v <= self.cmax:
            q = max(q, Fraction(2))
        if honest:
            inside = [cn for cn in self.c if cn < v]
            if inside:
                q = max(q, min(Fraction(2), inside[-1]))
        return q

    def raw_code(self) -> "RuleLsc":
        """Code with only the first two rules (not honest)."""
        return RuleLsc(self, honest=False)


class RuleLsc(CoverLsc):
    """The ACA-sup gadget enumerated literally by its rules on the canonical cover."""

    has_value = True

    def __init__(self, gadget: AcaSupGadget, honest: bool):
        super().__init__(gadget.space, 0)
        self.gadget = gadget
        self.honest_rules = honest
        self.name = "aca-sup-rules"

    def _q(self, ball, level, pos):
        return self.gadget.rule_q(ball, self.honest_rules)

    def value(self, x):
        return self.gadget.value(x)


def aca_sup_gadget(c: Sequence):
    return AcaSupGadget(c).code


def cn_prefix(expr: str, prefix: int) -> list[Fraction]:
    from .rationals import parse_expr

    fn = parse_expr(expr)
    return [fn(n=n) for n in range(prefix)]


# Pi11 gadget ------------------------------------------------------------------------


class Pi11Gadget:
    """``f(x) = sum {2**-i : (x)_i not in [T_i]}`` with ``(x)_i(n) = x(<i, n>)``.

    Paths are depth-bounded: ``(x)_i in [T_i]`` means ``(x)_i|D in T_i``.
    """

    def __init__(self, trees: Sequence[TreeSpec], depth: Optional[int] = None, branching: Optional[int] = None):
        if not trees:
            raise InvalidInput("need at least one tree")
        self.trees = list(trees)
        self.D = depth if depth is not None else max(t.depth for t in self.trees)
        self.B = branching if branching is not None else max(t.branching for t in self.trees)
        for t in self.trees:
            if t.depth != self.D:
                raise InvalidInput("all trees must share the depth bound")
        self.K = len(self.trees)
        self.length = max(cantor_pair(i, n) for i in range(self.K) for n in range(self.D)) + 1
        self.space = Baire(branching=self.B, depth=self.length)
        self._full = [{s for s in t.nodes if len(s) == self.D} for t in self.trees]
        self._prefix_ok = []
        for full in self._full:
            ok = set()
            for s in full:
                ok.update(s[:j] for j in range(self.D + 1))
            self._prefix_ok.append(ok)
        self.code = OracleLsc(self.space, self.value, self.ball_inf, lower_bound=0, witness_fn=self.ball_witness,
                              name="pi11")
        self.code.gadget = self

    def slice(self, x, i: int) -> tuple:
        x = tuple(x)
        return tuple(x[cantor_pair(i, n)] if cantor_pair(i, n) < len(x) else 0 for n in range(self.D))

    def partial_slice(self, prefix: tuple, i: int) -> tuple:
        out = []
        for n in range(self.D):
            k = cantor_pair(i, n)
            if k >= len(prefix):
                break
            out.append(prefix[k])
        return tuple(out)

    def value(self, x) -> Fraction:
        return sum((pow2(-i) for i in range(self.K) if self.slice(x, i) not in self._full[i]), ZERO)

    def _cylinder(self, ball: Ball) -> tuple:
        m = _cylinder_length(ball.radius, closed=False)
        return (tuple(ball.center) + (0,) * m)[:m]

    def ball_inf(self, ball: Ball) -> Fraction:
        c = self._cylinder(ball)
        return sum((pow2(-i) for i in range(self.K) if self.partial_slice(c, i) not in self._prefix_ok[i]), ZERO)

    def ball_witness(self, ball: Ball):
        c = self._cylinder(ball)
        x = list(c) + [0] * max(0, self.length - len(c))
        for i in range(self.K):
            part = self.partial_slice(c, i)
            ext = next((s for s in sorted(self._full[i]) if s[: len(part)] == part), None)
            if ext is not None:
                for n, v in enumerate(ext):
                    x[cantor_pair(i, n)] = v
        return _strip(x)

    def with_slice(self, x, i: int, seq: Sequence[int]) -> tuple:
        x = list(tuple(x)) + [0] * max(0, self.length - len(tuple(x)))
        for n, v in enumerate(seq):
            x[cantor_pair(i, n)] = v
        return _strip(x)

    def slice_net(self, x) -> list:
        """x and every replacement of one slice by a sequence in B**D."""
        x = tuple(x) if x is not None else ()
        out = [x]
        for i in range(self.K):
            cur = self.slice(x, i)
            for seq in itertools.product(range(self.B), repeat=self.D):
                if seq != cur:
                    out.append(self.with_slice(x, i, seq))
        return out

    def oracle_point(self) -> tuple:
        x: tuple = ()
        for i, t in enumerate(self.trees):
            p = t.path()
            if p is not None:
                x = self.with_slice(x, i, p)
        return x

    def decode(self, x_star) -> list[bool]:
        return [self.slice(x_star, i) in self._full[i] for i in range(self.K)]

    def oracle_bits(self) -> list[bool]:
        return [t.has_path() for t in self.trees]


def pi11_gadget(trees: Sequence[TreeSpec], depth: Optional[int] = None, branching: Optional[int] = None):
    return Pi11Gadget(trees, depth, branching).code


# pseudofibrations and embeddings into C[0,1] ----------------------------------------


def embed_unit(r) -> PLFunction:
    r = Q(r)
    if not 0 <= r <= 1:
        raise InvalidInput("embed_unit needs r in [0, 1]")
    return PLFunction.constant(r)


def unit_image_defect(h: PLFunction) -> Fraction:
    """``||h - I_{h(0)}||``: zero exactly on the constant functions."""
    return h.sup_dist(PLFunction.constant(h(0)))


def interval_I(n: int) -> tuple[Fraction, Fraction]:
    return 1 - pow2(-n), 1 - pow2(-(n + 1))


def interval_J(n: int, m: int) -> tuple[Fraction, Fraction]:
    base = 1 - pow2(-(n + 1))
    return base - pow2(-(n + m + 1)), base - pow2(-(n + m + 2))


def hat_knots(a: Fraction, b: Fraction, height: Fraction) -> list[tuple[Fraction, Fraction]]:
    return [(a, ZERO), ((a + b) / 2, height), (b, ZERO)]


def embed_baire(x: Sequence[int], depth: int) -> PLFunction:
    """``sum_{n < depth} 2**-n * hat(J_n^{x(n)})``, exact and piecewise linear."""
    x = tuple(int(v) for v in x)
    if any(v < 0 for v in x):
        raise InvalidInput("sequence entries must be naturals")
    if depth < len(_strip(x)):
        raise InvalidInput("depth must cover the sequence")
    knots = [(ZERO, ZERO)]
    for n in range(depth):
        m = x[n] if n < len(x) else 0
        for t, v in hat_knots(*interval_J(n, m), pow2(-n)):
            if t > knots[-1][0]:  # J_0^0 starts at 0
                knots.append((t, v))
    knots.append((Fraction(1), ZERO))
    return PLFunction(knots)


def decode_baire(h: PLFunction, depth: int, branching: int) -> tuple:
    """x(n) = the m < branching whose J_n^m carries the largest norm of h."""
    out = []
    for n in range(depth):
        norms = [(h.norm_on(*interval_J(n, m)), -m) for m in range(branching)]
        out.append(-max(norms)[1])
    return _strip(out)


def baire_image_defect(h: PLFunction, depth: int) -> Fraction:
    """Lower bound for the distance from h to the image of the depth-truncated embedding.

    Uses ``|h(0)|``, ``|h(1)|`` and ``| ||h||_{I_n} - 2**-n |`` for n < depth; it
    is a partial test (zero does not imply membership).
    """
    d = max(abs(h(0)), abs(h(1)))
    for n in range(depth):
        d = max(d, abs(h.norm_on(*interval_I(n)) - pow2(-n)))
    return d


def pseudofib_iota(fx: PLFunction, y, a=0, b=1) -> PLFunction:
    """``2t*f_x(0) + (1-2t)*y`` on [0, 1/2], ``f_x(2t-1)`` on [1/2, 1]."""
    y, a, b = Q(y), Q(a), Q(b)
    if not a <= y <= b:
        raise InvalidInput(f"y = {y} outside [{a}, {b}]")
    half = Fraction(1, 2)
    return PLFunction([(ZERO, y)] + [(half + t / 2, v) for t, v in fx.knots])


def pseudofib_pi(g: PLFunction, a=0, b=1) -> Fraction:
    a, b = Q(a), Q(b)
    if not a < b:
        raise InvalidInput("need a < b")
    return min(max(g(0), a), b)


def sharp(h: PLFunction) -> PLFunction:
    """``h_sharp(t) = h(t/2 + 1/2)``."""
    half = Fraction(1, 2)
    pts = [(2 * t - 1, v) for t, v in h.knots if t > half]
    return PLFunction([(ZERO, h(half))] + pts)


def chord_defect(h: PLFunction) -> Fraction:
    """``||h - h_flat||`` on [0, 1/2] with ``h_flat(t) = 2t*h(1/2) + (1-2t)*h(0)``."""
    half = Fraction(1, 2)
    h0, hh = h(0), h(half)
    pts = [t for t in h.ts if t < half] + [half]
    return max(abs(h(t) - (2 * t * hh + (1 - 2 * t) * h0)) for t in pts)


class Pseudofibration:
    """C[0,1] as an X-pseudofibration of [a, b] for X = unit interval or depth-bounded Baire space."""

    def __init__(self, source: str = "unit", a=0, b=1, depth: int = 6, branching: int = 4):
        if source not in ("unit", "baire"):
            raise InvalidInput(f"unknown source {source!r}")
        self.source = source
        self.a, self.b = Q(a), Q(b)
        if not self.a < self.b:
            raise InvalidInput("need a < b")
        self.depth, self.branching = depth, branching

    def embed(self, x) -> PLFunction:
        return embed_unit(x) if self.source == "unit" else embed_baire(x, self.depth)

    def iota(self, x, y) -> PLFunction:
        return pseudofib_iota(self.embed(x), y, self.a, self.b)

    def pi(self, z: PLFunction) -> Fraction:
        return pseudofib_pi(z, self.a, self.b)

    def decode(self, z: PLFunction):
        """Best source point for the right half of z."""
        h = sharp(z)
        if self.source == "unit":
            return min(max((h.min_on(0, 1) + h.max_on(0, 1)) / 2, ZERO), Fraction(1))
        return decode_baire(h, self.depth, self.branching)

    def image_defect(self, z: PLFunction) -> Fraction:
        h = sharp(z)
        if self.source == "unit":
            lo, hi = h.min_on(0, 1), h.max_on(0, 1)
            c = min(max((lo + hi) / 2, ZERO), Fraction(1))
            return max(hi - c, c - lo)
        return baire_image_defect(h, self.depth)

    def range_defect(self, z: PLFunction) -> Fraction:
        v = z(0)
        return max(ZERO, self.a - v, v - self.b)

    def in_image(self, z: PLFunction) -> bool:
        """The closed-image predicate: linear on [0,1/2], z(0) in [a,b], right half embedded."""
        if chord_defect(z) != 0 or self.range_defect(z) != 0:
            return False
        h = sharp(z)
        if self.source == "unit":
            return unit_image_defect(h) == 0
        x = decode_baire(h, self.depth, self.branching)
        return embed_baire(x, self.depth) == h


class LiftedCode(ExactContinuous):
    """``f~(z) = pi(z) + min(1, L(z))`` on C[0,1], vanishing second term exactly on Gamma.

    Gamma is the iota-image of the epigraph ``{(x, y) : f(x) <= y}``. L is a
    sum-free lower bound for the distance to Gamma built from the closed-image
    conditions: chord defect / 2, the range defect, the image defect, and the
    epigraph defect scaled by the declared Lipschitz constant of f.
    """

    def __init__(self, f, fib: Pseudofibration, lipschitz, space: Optional[C01] = None):
        self.f = f
        self.fib = fib
        self.lipschitz = Q(lipschitz)
        sp = space or C01()
        super().__init__(sp, self._value, self._range, modulus=lipschitz_modulus(2), name="lift")

    def defect(self, z: PLFunction) -> Fraction:
        fib = self.fib
        parts = [chord_defect(z) / 2, fib.range_defect(z), fib.image_defect(z)]
        x = fib.decode(z)
        fx = self.f.value(x)
        epi = max(ZERO, fx - z(0)) / (2 * self.lipschitz + 1)
        parts.append(epi)
        return max(parts)

    def g(self, z: PLFunction) -> Fraction:
        return min(Fraction(1), self.defect(z))

    def _value(self, z) -> Fraction:
        return self.fib.pi(z) + self.g(z)

    def _range(self, ball: Ball):
        v = self._value(ball.center)
        return v - 2 * ball.radius, v + 2 * ball.radius

    def gamma_contains(self, z: PLFunction) -> bool:
        if not self.fib.in_image(z):
            return False
        return self.f.value(self.fib.decode(z)) <= z(0)

    def base_point(self, x0) -> PLFunction:
        """``iota(x0, f(x0))``: the localization anchor."""
        return self.fib.iota(x0, self.f.value(x0))


def lvp_to_fvp_lift(f, fib: Optional[Pseudofibration] = None, lipschitz=None, y_range=(0, 1),
                    space: Optional[C01] = None) -> LiftedCode:
    """Lift a potential on X to a continuous potential on C[0,1]."""
    if lipschitz is None:
        lipschitz = getattr(f, "lipschitz", None)
    if lipschitz is None:
        raise InvalidInput("the lift needs a declared Lipschitz constant for f")
    if not f.has_value:
        raise InvalidInput("the lift needs exact values of f")
    fib = fib or Pseudofibration("unit", *y_range)
    return LiftedCode(f, fib, lipschitz, space)
