from fractions import Fraction as F

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from critcodes.codes import (
    Bracket,
    EpigraphSet,
    closed_from_distance,
    const_code,
    const_continuous,
    cont_from_samples,
    cont_to_lsc,
    epigraph_of,
    epigraph_to_lsc,
    eval_cont,
    eval_lsc_lower,
    honest_ball_inf,
    honest_promote_compact,
    lsc_add_scaled_distance,
    lsc_combine,
    lsc_zero_on_closed,
    patch,
    pl_code,
    pl_lsc,
    step_lsc,
)
from critcodes.errors import BudgetExceeded, InvalidInput, ModulusViolation, PatchConflict
from critcodes.gadgets import AcaSupGadget, TreeSpec, WklGadget, pi11_gadget
from critcodes.pl import PLFunction
from critcodes.spaces import Ball, UnitInterval, net
from critcodes.validation import check_code_laws

from oracles import closed_clip, grid, grid_min, leaf_value

U = UnitInterval()
X = PLFunction([(0, 0), (1, 1)])
ABS = PLFunction([(0, F(1, 3)), (F(1, 3), 0), (1, F(2, 3))])
SUP = AcaSupGadget([F(1, 2) - F(1, 2 ** (n + 1)) for n in range(1, 17)])
dyadics01 = st.integers(0, 256).map(lambda i: F(i, 256))


def test_bracket_rejects_empty_and_handles_infinity():
    with pytest.raises(ValueError):
        Bracket(F(1), F(0))
    inf = Bracket(F(0), None)
    assert inf.width is None and inf.contains(None) and inf.contains(F(7))
    assert Bracket(None, None).contains(None)


# eval_cont -----------------------------------------------------------------


def test_eval_cont_constant():
    br = eval_cont(const_continuous(U, F(3, 4)), F(1, 3), 10)
    assert br.contains(F(3, 4)) and br.width <= F(1, 2 ** 10)


def test_eval_cont_wkl_escape_and_leaf_values():
    t = TreeSpec.build(["", "0", "1", "01"])
    g = WklGadget(t, "cantor")
    esc = g.escape[0]
    assert eval_cont(g.code, esc + (1, 0, 1), 6).contains(3)
    for s in g.leaves:
        x = g.leaf_point(s)
        assert eval_cont(g.code, x, 6).contains(leaf_value(t.nodes, s))


def test_eval_cont_budget_exhaustion():
    with pytest.raises(BudgetExceeded):
        eval_cont(pl_code(X), F(1, 3), 30, budget=10)


# eval_lsc_lower -------------------------------------------------------------


def test_aca_sup_values():
    assert eval_lsc_lower(SUP.code, F(1, 4), 100) == 2
    assert eval_lsc_lower(SUP.code, F(3, 4), 100) == F(3, 4)


def test_pi11_all_paths_point_is_zero():
    trees = [TreeSpec.build(["", "0", "01"], depth=2), TreeSpec.build(["", "1", "10"], depth=2)]
    code = pi11_gadget(trees)
    x = code.gadget.oracle_point()
    assert eval_lsc_lower(code, x, 10) == 0


@pytest.mark.parametrize("code", [pl_lsc(X), SUP.code, step_lsc([0, F(1, 2), 1], [1, 0])],
                         ids=["x", "aca-sup", "step"])
def test_item_route_approaches_value_from_below(code):
    for x in net(U, 4):
        prev = code.lower_bound
        for budget in (8, 64, 512, 4096):
            lo = code.lower(x, budget)
            assert prev <= lo <= code.value(x)
            prev = lo
        assert code.value(x) - prev <= F(1, 2 ** 8) or code.value(x) == 2


# honest_ball_inf -----------------------------------------------------------


def test_aca_sup_honest_queries():
    assert honest_ball_inf(SUP.code, Ball(F(1, 8), F(1, 16))).lo == 2
    assert honest_ball_inf(SUP.code, Ball(F(3, 4), F(3, 20))).lo == F(3, 5)
    whole = Ball(F(1, 2), F(1))
    assert honest_ball_inf(pl_lsc(X), whole).lo == grid_min(X, 0, 1) == 0


def test_honest_query_needs_honest_code():
    with pytest.raises(InvalidInput):
        honest_ball_inf(cont_to_lsc(pl_code(X)), Ball(F(1, 2), F(1, 4)))


@given(dyadics01, st.integers(2, 8))
def test_ball_inf_never_exceeds_point_values(c, e):
    ball = Ball(c, F(1, 2 ** e))
    for code in (pl_lsc(ABS), SUP.code, step_lsc([0, F(1, 2), 1], [1, 0])):
        br = code.ball_inf(ball)
        for x in net(U, 9):
            if abs(x - c) < ball.radius:
                assert br.lo <= code.value(x)


@settings(max_examples=50)
@given(dyadics01, st.integers(2, 7))
def test_pl_ball_inf_matches_grid(c, e):
    ball = Ball(c, F(1, 2 ** e))
    lo, hi = closed_clip(c, ball.radius)
    exact = pl_lsc(ABS).ball_inf(ball).lo
    brute = grid_min(ABS, lo, hi, 10)
    assert exact <= brute <= exact + F(1, 2 ** 10)


# promotion -----------------------------------------------------------------


def test_promote_x():
    code = honest_promote_compact(cont_to_lsc(pl_code(X)), resolution=6)
    br = code.ball_inf(Ball(F(1, 2), F(1, 4)))
    assert br.lo <= F(1, 4) <= br.hi and F(1, 4) - br.lo <= F(1, 2 ** 6)


def test_promote_constant():
    code = honest_promote_compact(const_code(U, 5), resolution=4)
    for ball in (Ball(F(1, 3), F(1, 8)), Ball(F(0), F(1))):
        assert code.ball_inf(ball) == Bracket(F(5), F(5))


def test_promote_raw_aca_sup_matches_gadget():
    res = 6
    code = honest_promote_compact(SUP.raw_code(), resolution=res)
    for ball in (Ball(F(1, 2), F(1, 8)), Ball(F(15, 32), F(1, 16)), Ball(F(5, 8), F(1, 4))):
        promoted = code.ball_inf(ball)
        exact = SUP.ball_inf(ball)
        assert promoted.lo <= exact and exact - promoted.lo <= F(1, 2 ** res)


def test_promote_needs_compact_space():
    from critcodes.spaces import Baire

    with pytest.raises(InvalidInput):
        honest_promote_compact(const_code(Baire(), 1))


# samples ---------------------------------------------------------------------


def _samples(fn, k=8):
    return [(x, fn(x)) for x in grid(0, 1, k)]


def test_samples_identity():
    code = cont_from_samples(_samples(lambda x: x), lambda n: n, U)
    assert eval_cont(code, F(1, 3), 6).contains(F(1, 3))


def test_samples_abs():
    code = cont_from_samples(_samples(lambda x: abs(x - F(1, 3))), lambda n: n, U)
    assert eval_cont(code, F(1, 3), 6).contains(0)


def test_samples_modulus_violation_names_the_pair():
    with pytest.raises(ModulusViolation) as info:
        cont_from_samples([(0, 0), (F(1, 256), 1)], lambda n: n, U)
    assert set(info.value.pair) == {(F(0), F(0)), (F(1, 256), F(1))}


# patch -----------------------------------------------------------------------


def test_patch_constant_pieces():
    three = const_continuous(U, 3)
    code = patch([([Ball(F(1, 3), F(1, 3))], three), ([Ball(F(2, 3), F(1, 3))], three)])
    for x in (F(1, 8), F(1, 2), F(7, 8)):
        assert code.value(x) == 3
        assert eval_cont(code, x, 4).contains(3)


def test_patch_conflict():
    with pytest.raises(PatchConflict):
        patch([([Ball(F(1, 3), F(1, 3))], const_continuous(U, 0)),
               ([Ball(F(2, 3), F(1, 3))], const_continuous(U, 1))])


def test_wkl_unit_pieces_hit_three_at_endpoints():
    t = TreeSpec.build(["", "0", "1", "00", "01", "010", "011", "0110"])
    g = WklGadget(t, "unit")
    for (l, r), piece in g.unit_pieces():
        assert piece(l) == piece(r) == 3
        assert g.code.value(l) == g.code.value(r) == 3


# cont_to_lsc -----------------------------------------------------------------


def test_cont_to_lsc_constant_and_identity():
    two = cont_to_lsc(const_continuous(U, 2))
    assert all(eval_lsc_lower(two, x, 500) == 2 for x in net(U, 3))
    assert all(2 - F(1, 2 ** 7) <= two.lower(x, 500) < 2 for x in net(U, 3))
    ident = cont_to_lsc(pl_code(X))
    lows = [ident.lower(F(1, 2), b) for b in (10, 100, 1000, 10000)]
    assert lows == sorted(lows) and lows[-1] <= F(1, 2) and F(1, 2) - lows[-1] <= F(1, 2 ** 10)


def test_cont_to_lsc_agrees_with_eval_cont_on_wkl():
    t = TreeSpec.build(["", "0", "1", "01"])
    g = WklGadget(t, "unit")
    lsc = cont_to_lsc(g.code)
    for x in net(U, 6):
        br = eval_cont(g.code, x, 6)
        lo = lsc.lower(x, 4000)
        # finest level reached at this budget has radius 2**-10; items lose (L + 1) * radius
        assert lo <= br.hi and br.lo - lo <= (g.code.lipschitz + 1) * F(1, 2 ** 10)


# combinators -----------------------------------------------------------------


def test_zero_on_closed():
    C = closed_from_distance(U, lambda y: max(F(0), y - F(1, 2)))
    code = lsc_zero_on_closed(const_code(U, 1), C)
    assert code.value(F(1, 4)) == 0 and code.value(F(3, 4)) == 1
    assert code.lower(F(3, 4), 2000) == 1
    everywhere = lsc_zero_on_closed(const_code(U, 1), closed_from_distance(U, lambda y: F(0)))
    assert all(everywhere.lower(x, 500) == 0 for x in net(U, 3))
    point = lsc_zero_on_closed(const_code(U, 2), closed_from_distance(U, lambda y: y))
    assert all(point.lower(F(0), b) == 0 for b in (1, 10, 100, 1000))
    assert point.lower(F(1, 2), 1000) == 2


def test_combine():
    assert lsc_combine(const_code(U, 5), const_code(U, 3), "min").value(F(1, 3)) == 3
    total = lsc_combine(pl_lsc(X), const_code(U, 1), "sum")
    assert total.value(F(1, 2)) == F(3, 2)
    assert F(3, 2) - total.lower(F(1, 2), 3000) <= F(1, 2 ** 8)
    assert lsc_combine(SUP.code, const_code(U, 1), "max").value(F(3, 4)) == 1
    with pytest.raises(InvalidInput):
        lsc_combine(pl_lsc(X), const_code(U, 1), "product")


def test_min_of_honest_codes_is_honest():
    m = lsc_combine(pl_lsc(X), SUP.code, "min")
    assert m.honest
    assert m.ball_inf(Ball(F(1, 8), F(1, 16))).lo == F(1, 16)


def test_add_scaled_distance():
    assert lsc_add_scaled_distance(const_code(U, 0), 0, 1).value(F(1, 2)) == F(1, 2)
    g = lsc_add_scaled_distance(pl_lsc(X), 1, 1)
    assert g.value(0) == 1 and g.value(1) == 1
    assert 1 - g.lower(F(0), 3000) <= F(1, 2 ** 8)


# epigraphs ---------------------------------------------------------------------


def test_epigraph_of_identity():
    code = epigraph_to_lsc(epigraph_of(pl_lsc(X), 2))
    for x in net(U, 4):
        assert abs(code.upper(x) - x) <= F(1, 2 ** 30)
        assert x - code.lower(x, 3000) <= F(1, 2 ** 6)


def test_epigraph_half_line():
    c = F(3, 8)
    C = EpigraphSet(U, lambda ball, u, v: v <= c, lambda x, y: y >= c, 0, 1)
    code = epigraph_to_lsc(C)
    for x in net(U, 3):
        assert abs(code.upper(x) - c) <= F(1, 2 ** 30)
        assert code.lower(x, 2000) <= c


def test_epigraph_of_aca_sup():
    code = epigraph_to_lsc(epigraph_of(SUP.code, 3))
    for x in net(U, 6):
        v = SUP.value(x)
        assert abs(code.upper(x) - v) <= F(1, 2 ** 30)
        assert code.lower(x, 3000) <= v


def test_epigraph_not_upward_closed():
    C = EpigraphSet(U, lambda b, u, v: False, lambda x, y: y <= F(1, 2), 0, 1)
    with pytest.raises(InvalidInput):
        epigraph_to_lsc(C)


# laws at a moderate budget for the heavier combinators ------------------------


@pytest.mark.parametrize("code", [
    lsc_combine(pl_lsc(X), const_code(U, 1), "sum"),
    lsc_zero_on_closed(const_code(U, 1), closed_from_distance(U, lambda y: max(F(0), y - F(1, 2)))),
    lsc_add_scaled_distance(pl_lsc(X), F(1), F(1, 2)),
    cont_to_lsc(pl_code(X)),
    honest_promote_compact(SUP.raw_code(), resolution=5),
    epigraph_to_lsc(epigraph_of(pl_lsc(X), 2)),
], ids=["sum", "zero-on-closed", "add-distance", "cont-to-lsc", "promoted", "epigraph"])
def test_combinator_laws(code):
    report = check_code_laws(code, 1500)
    assert report.ok, report.failures[:3]
