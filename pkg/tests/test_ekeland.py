from fractions import Fraction as F

import pytest
from hypothesis import given
from hypothesis import strategies as st

from critcodes.codes import OracleLsc, const_code, pl_code, pl_lsc, step_lsc
from critcodes.ekeland import (
    SearchParams,
    bound_reduce,
    fvp_min_compact,
    fvp_search,
    is_critical,
    localized_tilde,
    lvp_search,
    scale_reduce,
)
from critcodes.envelope import EnvelopeCode, transfer_critical
from critcodes.errors import EmptySupport, InvalidInput, UnsupportedNet, UnsupportedPoint
from critcodes.gadgets import AcaSupGadget, TreeSpec, WklGadget
from critcodes.pl import PLFunction
from critcodes.spaces import Baire, UnitInterval, net

from oracles import leaf_value

U = UnitInterval()
X = PLFunction([(0, 0), (1, 1)])
ABS = PLFunction([(0, F(1, 3)), (F(1, 3), 0), (1, F(2, 3))])
SUP = AcaSupGadget([F(1, 2) - F(1, 2 ** (n + 1)) for n in range(1, 17)])
HALF = SearchParams(epsilon=F(1, 2))


def test_params_validation():
    with pytest.raises(InvalidInput):
        SearchParams(epsilon=0)
    with pytest.raises(InvalidInput):
        SearchParams(epsilon=1, slack=F(-1, 2))
    assert SearchParams(epsilon=1, resolution=8).delta_value == F(1, 128)


# is_critical -------------------------------------------------------------------


def test_minimum_of_x_is_critical():
    cert = is_critical(pl_code(X), 0, HALF)
    assert cert.passed and cert.witness is None and cert.recheck()


def test_right_end_of_x_is_refuted_by_zero():
    cert = is_critical(pl_code(X), 1, HALF)
    assert not cert.passed
    assert cert.witness.y == 0
    assert cert.epsilon * cert.witness.d <= 1 - cert.witness.f_lo


def test_aca_sup_sup_is_critical():
    assert is_critical(SUP.code, F(1, 2), SearchParams(epsilon=1, resolution=8)).passed


def test_unsupported_point():
    f = OracleLsc(U, lambda y: None if y > F(1, 2) else y, lambda b: max(F(0), b.center - b.radius))
    with pytest.raises(UnsupportedPoint):
        is_critical(f, F(3, 4), HALF)


@given(st.integers(0, 32).map(lambda i: F(i, 32)), st.sampled_from([F(1, 4), F(1, 2), F(1), F(2)]))
def test_pass_iff_no_witness(x, eps):
    f = pl_code(ABS)
    cert = is_critical(f, x, SearchParams(epsilon=eps, resolution=5))
    brute = all(eps * abs(x - y) > f.value(x) - f.value(y) for y in net(U, 6) if abs(x - y) > cert.delta)
    assert cert.passed == brute == cert.recheck()


# fvp_search --------------------------------------------------------------------


def test_fvp_search_x():
    x, cert, state = fvp_search(pl_code(X), HALF)
    assert x <= F(1, 2 ** 8) and cert.passed
    assert state.schedule_ok() and state.telescoping_ok(HALF.epsilon)


def test_fvp_search_abs():
    x, cert, state = fvp_search(pl_code(ABS), HALF)
    assert abs(x - F(1, 3)) <= F(1, 2 ** 8) and cert.passed


def test_fvp_search_on_honest_lsc():
    x, cert, _ = fvp_search(SUP.code, SearchParams(epsilon=1))
    assert abs(x - F(1, 2)) <= F(1, 2 ** 8) and cert.passed


def test_fvp_search_on_aca_sup_envelope_transfers():
    env = EnvelopeCode(SUP.code, 2, resolution=8)
    x, cert, _ = fvp_search(env, SearchParams(epsilon=1))
    assert abs(x - F(1, 2)) <= F(1, 2 ** 6)
    rep = transfer_critical(SUP.code, 1, 2, x)
    assert rep.passed and abs(rep.point - x) <= F(1, 2 ** 6)


def test_fvp_search_schedule_and_telescoping_on_step():
    f = step_lsc([0, F(1, 3), F(2, 3), 1], [2, 1, F(3, 2)])
    x, cert, state = fvp_search(f, SearchParams(epsilon=1, resolution=7))
    assert F(1, 3) <= x <= F(2, 3) and cert.passed
    assert state.schedule_ok() and state.telescoping_ok(1)
    for n in range(len(state.qs) - 1):
        assert state.qs[n + 1] <= F(1, 2 ** (n + 3))


def test_fvp_search_empty_support():
    never = OracleLsc(U, lambda y: None, lambda b: None)
    with pytest.raises(EmptySupport):
        fvp_search(never, HALF)


def test_fvp_search_needs_region_on_non_compact_space():
    f = const_code(Baire(branching=2), 1)
    with pytest.raises(UnsupportedNet):
        fvp_search(f, HALF)


def test_seed_order_changes_nothing_in_the_verdict():
    for seed in (None, 1, 2, 3):
        x, cert, _ = fvp_search(pl_code(ABS), SearchParams(epsilon=F(1, 2), order_seed=seed))
        assert cert.passed and abs(x - F(1, 3)) <= F(1, 2 ** 8)


# fvp_min_compact -----------------------------------------------------------------


def test_min_compact_parabola():
    f = pl_code(PLFunction([(t, t * (1 - t)) for t in (F(i, 16) for i in range(17))]))
    x, br = fvp_min_compact(f, None, SearchParams(epsilon=1, resolution=6))
    assert x in (0, 1) and br.lo <= 0 <= br.hi


def test_min_compact_constant():
    x, br = fvp_min_compact(const_code(U, F(5, 7)), None, SearchParams(epsilon=1, resolution=4))
    assert br.lo == br.hi == F(5, 7)


def test_min_compact_wkl_cantor():
    t = TreeSpec.build(["", "0", "1", "00", "01", "010", "011", "0110"])
    g = WklGadget(t, "cantor")
    x, br = fvp_min_compact(g.code, None, SearchParams(epsilon=1, resolution=10))
    best = min(leaf_value(t.nodes, s) for s in g.leaves)
    assert br.hi == best and br.lo <= best


@pytest.mark.parametrize("eps", [F(2), F(1), F(1, 2), F(1, 4)])
def test_minimizers_are_critical(eps):
    for f in (pl_code(ABS), pl_lsc(X), step_lsc([0, F(1, 2), 1], [1, 0])):
        x, _ = fvp_min_compact(f, None, SearchParams(epsilon=eps, resolution=6))
        assert is_critical(f, x, SearchParams(epsilon=eps, resolution=6)).passed


def test_min_compact_refuses_non_compact():
    with pytest.raises(UnsupportedNet):
        fvp_min_compact(const_code(Baire(), 1), None, HALF)


# lvp_search ----------------------------------------------------------------------


def test_lvp_from_the_right_end():
    x, cert, _ = lvp_search(pl_code(X), 1, HALF)
    assert x <= F(1, 2 ** 8) and cert.passed
    loc = cert.localization
    assert loc.ok and loc.lhs == F(1, 2) * (1 - x)


def test_lvp_from_the_minimizer():
    x, cert, _ = lvp_search(pl_code(ABS), F(1, 3), HALF)
    assert abs(x - F(1, 3)) <= F(1, 2 ** 8) and cert.verdict == "pass"
    assert cert.localization.lhs <= F(1, 2 ** 9)


def test_lvp_aca_sup_from_zero():
    x, cert, _ = lvp_search(SUP.code, 0, SearchParams(epsilon=1))
    assert abs(x - F(1, 2)) <= F(1, 2 ** 8) and cert.verdict == "pass"
    assert cert.localization.lhs <= cert.localization.rhs


def test_lvp_keeps_the_anchor_region():
    # two valleys: the deeper one at 0 is too far from x0 = 1 to be reached with eps = 2
    f = pl_code(PLFunction([(0, 0), (F(1, 4), 1), (F(1, 2), 1), (F(3, 4), F(1, 4)), (1, 1)]))
    x, cert, _ = lvp_search(f, 1, SearchParams(epsilon=2))
    assert abs(x - F(3, 4)) <= F(1, 2 ** 8) and cert.verdict == "pass"
    assert cert.localization.ok


# reductions -------------------------------------------------------------------------


def test_bound_reduce():
    g = bound_reduce(pl_code(X), F(1, 2))
    assert [g.value(t) for t in (0, F(1, 4), F(3, 4), 1)] == [0, F(1, 4), F(1, 2), F(1, 2)]
    c = const_code(U, 3)
    assert all(bound_reduce(c, 0).value(t) == 3 for t in net(U, 3))
    steep = OracleLsc(U, lambda y: 1 / y if y else None, lambda b: 1 / min(F(1), b.center + b.radius))
    capped = bound_reduce(steep, F(1, 2))
    assert all(v is None or v <= 2 for v in (capped.upper(t) for t in net(U, 6)))


def test_scale_reduce():
    f = pl_code(X)
    g = scale_reduce(f, F(1, 2))
    assert g.value(F(1, 3)) == F(2, 3)
    assert is_critical(g, 0, SearchParams(epsilon=1)).passed
    assert is_critical(f, 0, HALF).passed
    assert scale_reduce(f, 1).value(F(1, 3)) == F(1, 3)
    assert scale_reduce(const_code(U, 3), F(1, 4)).value(0) == 12
    with pytest.raises(InvalidInput):
        scale_reduce(f, 0)


@pytest.mark.parametrize("eps", [F(1, 4), F(1, 2), F(2)])
def test_scale_reduce_argcheck_invariance(eps):
    f = pl_code(ABS)
    g = scale_reduce(f, eps)
    p, p1 = SearchParams(epsilon=eps, resolution=5), SearchParams(epsilon=1, resolution=5)
    a = {x for x in net(U, 5) if is_critical(f, x, p).passed}
    b = {x for x in net(U, 5) if is_critical(g, x, p1).passed}
    assert a == b


def test_localized_tilde_is_f_on_the_cone():
    f = pl_lsc(X)
    tilde, C, base = localized_tilde(f, F(1, 2), 1)
    for t in net(U, 5):
        inside = 1 * abs(t - F(1, 2)) <= F(1, 2) - t
        assert C.contains(t) == inside
        if inside:
            assert tilde.value(t) == t
        else:
            assert tilde.value(t) == max(min(t, F(1, 2)), abs(t - F(1, 2)) + F(1, 2))
