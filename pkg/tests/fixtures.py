"""Shared fixture data: trees, tables and sequences used by several test files."""

import itertools
from fractions import Fraction as F

from critcodes.gadgets import TreeSpec

# binary trees without a node of length `depth`
WKL_TREES = {
    "small": TreeSpec.build(["", "0", "1", "01"]),
    "branchy": TreeSpec.build(["", "0", "1", "00", "01", "010", "011", "0110"]),
    "full3": TreeSpec.build(["".join(b) for k in range(4) for b in itertools.product("01", repeat=k)],
                            depth=4),
    "comb": TreeSpec.build(["1" * k for k in range(8)] + ["1" * k + "0" for k in range(7)], depth=8),
    "two-arms": TreeSpec.build(["", "0", "00", "000", "0000", "1", "10", "101", "1010", "10101"], depth=6),
}

# depth-8 trees: two with a path, two without
PI11_TREES = [
    TreeSpec.build(["0" * k for k in range(9)], depth=8),
    TreeSpec.build(["", "0", "1", "10", "11"], depth=8),
    TreeSpec.build(["1" * k for k in range(9)] + ["0", "10", "110"], depth=8),
    TreeSpec.build(["", "0", "00", "01", "010"], depth=8),
]


def sup_terms(prefix=16, start=1):
    """c_n = 1/2 - 2**-(n+1) for n = start .. start+prefix-1."""
    return [F(1, 2) - F(1, 2 ** (n + 1)) for n in range(start, start + prefix)]


def window_lsc():
    """1 - x on [1/4, 3/4] and +inf elsewhere."""
    from critcodes.codes import OracleLsc
    from critcodes.spaces import UnitInterval

    lo, hi = F(1, 4), F(3, 4)

    def value(y):
        return None if y < lo or y > hi else 1 - y

    def inf(ball):
        if not (ball.center - ball.radius < hi and ball.center + ball.radius > lo):
            return None
        return 1 - min(hi, ball.center + ball.radius)

    def witness(ball):
        return min(hi, max(lo, ball.center))

    return OracleLsc(UnitInterval(), value, inf, witness_fn=witness, name="window")
