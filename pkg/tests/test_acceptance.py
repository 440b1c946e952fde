"""End-to-end acceptance checks, one test per criterion.

Each test records a single PASS/FAIL line (see report.py) before asserting,
so the summary lists every criterion even when one of them fails.
"""

import itertools
import json
import math
import random
import time
from collections import Counter
from fractions import Fraction as F

import numpy as np

from critcodes import cli
from critcodes.codes import const_code, const_continuous, pl_code, pl_lsc, step_lsc
from critcodes.ekeland import SearchParams, fvp_search, is_critical, lvp_search
from critcodes.envelope import EnvelopeCode, envelope_value, transfer_critical
from critcodes.gadgets import AcaInjGadget, AcaSupGadget, Pi11Gadget, Pseudofibration, WklGadget, embed_baire
from critcodes.pl import PLFunction
from critcodes.spaces import C01, UnitInterval, net
from critcodes.validation import check_code_laws

from fixtures import PI11_TREES, WKL_TREES, sup_terms, window_lsc
from oracles import (
    baire_dist,
    closed_clip,
    envelope_grid,
    grid_min,
    has_depth_path,
    leaf_value,
    pl_sup_dist,
)
from report import record

U = UnitInterval()
X = PLFunction([(0, 0), (1, 1)])
ABS = PLFunction([(0, F(1, 3)), (F(1, 3), 0), (1, F(2, 3))])
TWO_VALLEYS = PLFunction([(0, 0), (F(1, 4), 1), (F(1, 2), 1), (F(3, 4), F(1, 4)), (1, 1)])
SUP = AcaSupGadget(sup_terms(16, start=0))


def lsc_fixtures():
    return {
        "step": step_lsc([0, F(1, 2), 1], [1, 0]),
        "aca-sup": SUP.code,
        "x": pl_lsc(X),
        "abs": pl_lsc(ABS),
        "window": window_lsc(),
    }


def run_cli(*argv):
    return cli.main([str(a) for a in argv])


# 1 ------------------------------------------------------------------------------------


def test_criterion_01_code_laws():
    fixtures = {
        "const-continuous": const_continuous(U, F(3, 4)),
        "pl x": pl_code(X),
        "pl |x-1/3|": pl_code(ABS),
        "wkl cantor": WklGadget(WKL_TREES["branchy"]).code,
        "wkl unit": WklGadget(WKL_TREES["branchy"], "unit").code,
        "aca-inj": AcaInjGadget({a: a for a in range(4)}, 3).code,
        "const lsc": const_code(U, 2),
        "pl-lsc |x-1/3|": pl_lsc(ABS),
        "step": step_lsc([0, F(1, 2), 1], [1, 0]),
        "aca-sup": SUP.code,
        "pi11": Pi11Gadget(PI11_TREES[:2]).code,
    }
    t0 = time.perf_counter()
    bad, pairs = [], 0
    for name, code in fixtures.items():
        rep = check_code_laws(code, 10 ** 4)
        pairs += rep.pairs
        if not rep.ok or rep.items != 10 ** 4:
            bad.append(name)
    elapsed = time.perf_counter() - t0
    ok = not bad and elapsed < 30
    record(1, ok, f"{len(fixtures)} fixtures at budget 10^4, {pairs} item pairs, failures {bad}, {elapsed:.1f} s")
    assert ok


# 2 ------------------------------------------------------------------------------------


def test_criterion_02_envelope_brackets():
    rng = random.Random(2024)
    worst, lip_bad = F(0), 0
    width_ok = True
    for alpha in (F(1), F(2)):
        for name, f in lsc_fixtures().items():
            env = EnvelopeCode(f, alpha, resolution=8)
            for x in net(U, 8):
                br = env.evidence(x)
                excess = br.width - (alpha * F(1, 2 ** 8) + F(1, 2 ** 7))
                width_ok &= br.lo <= br.hi and excess <= 0
                worst = max(worst, br.width)
            if alpha == 2:
                for _ in range(1000):
                    x, y = F(rng.randrange(1025), 1024), F(rng.randrange(1025), 1024)
                    bx, by = env.evidence(x), env.evidence(y)
                    if abs(bx.mid - by.mid) > alpha * abs(x - y) + bx.width + by.width:
                        lip_bad += 1
    step = lsc_fixtures()["step"]
    br = envelope_value(step, 1, 0, resolution=8)
    brute = envelope_grid(step.value, 1, F(0))
    step_ok = brute == F(1, 2) and br.lo <= brute <= br.hi
    ok = width_ok and lip_bad == 0 and step_ok
    record(2, ok, f"widest bracket {worst}, Lipschitz violations {lip_bad}/5000, "
                  f"f_1(0) bracket [{br.lo}, {br.hi}] vs grid {brute}")
    assert ok


# 3 ------------------------------------------------------------------------------------


def test_criterion_03_transfer():
    t0 = time.perf_counter()
    rows, ok = [], True
    for name, f in lsc_fixtures().items():
        env = EnvelopeCode(f, 2, resolution=8)
        x, env_cert, _ = fvp_search(env, SearchParams(epsilon=1, resolution=8))
        rep = transfer_critical(f, 1, 2, x, resolution=8, slack=F(1, 2 ** 6))
        good = env_cert.passed and rep.passed and rep.certificate.slack <= F(1, 2 ** 6)
        ok &= good
        moved = "" if rep.point == x else f" -> {rep.point}"
        rows.append(f"{name}: x*={x}{moved} {'ok' if good else 'FAIL'}")
    elapsed = time.perf_counter() - t0
    ok &= elapsed < 60
    record(3, ok, "; ".join(rows) + f"; {elapsed:.1f} s")
    assert ok


# 4 ------------------------------------------------------------------------------------


def test_criterion_04_known_minimizers(tmp_path):
    out = []
    ok = True
    for name, knots, target in (("x", "0:0,1:1", F(0)), ("|x-1/3|", "0:1/3,1/3:0,1:2/3", F(1, 3))):
        code, cert = tmp_path / f"{len(out)}.json", tmp_path / f"c{len(out)}.json"
        ok &= run_cli("gadget", "--type", "pl", "--knots", knots, "--out", code) == 0
        ok &= run_cli("search", "--code", code, "--epsilon", "1/2", "--out", cert) == 0
        obj = json.loads(cert.read_text())
        x = F(int(obj["x_star"]["num"]), int(obj["x_star"]["den"]))
        status = run_cli("verify", "--code", code, "--cert", cert)
        good = abs(x - target) <= F(1, 2 ** 8) and status == 0 and obj["verdict"] == "pass"
        ok &= good
        out.append(f"{name}: x*={x}, verify exit {status}")
    record(4, ok, "; ".join(out))
    assert ok


# 5 ------------------------------------------------------------------------------------


def test_criterion_05_wkl_gadget():
    failures, checked, cases = 0, 0, Counter()
    spot_ok = True
    for name, tree in WKL_TREES.items():
        for target in ("cantor", "unit"):
            g = WklGadget(tree, target)
            for x in net(g.space, 10):
                y, case = g.witness(x)
                cases[case] += 1
                checked += 1
                if not g.value(x) - g.value(y) >= g.space.dist(x, y):
                    failures += 1
        g = WklGadget(tree)
        spot_ok &= all(g.value(tau) == 3 for tau in g.escape)
        spot_ok &= all(g.value(g.leaf_point(s)) == leaf_value(tree.nodes, s) for s in g.leaves)
    ok = failures == 0 and spot_ok
    record(5, ok, f"{checked} net points on 5 trees x 2 targets, {failures} failures, cases {dict(cases)}, "
                  f"escape/leaf spot checks {'ok' if spot_ok else 'FAIL'}")
    assert ok


# 6 ------------------------------------------------------------------------------------


def test_criterion_06_aca_injection():
    parts, ok = [], True
    for label, table in (("id", {a: a for a in range(8)}), ("2a", {a: 2 * a for a in range(8)})):
        g = AcaInjGadget(table, 6)
        decoded = g.decode(g.oracle_point())
        truth = {b for b in table.values() if b < 6}
        ok &= decoded == truth
        x = g.oracle_point()
        exact = True
        for n in range(6):
            v = g.v(n, g.entry(x, g.slot(n)))
            for mask in (0, 1, 3, g.mask_bound - 1):
                if mask == g.entry(x, g.slot(n)):
                    continue
                y = g.perturb(x, n, mask)
                v2 = g.v(n, mask)
                exact &= g.value(x) - g.value(y) == F(2) ** (-2 * n - 1 + v2) - F(2) ** (-2 * n - 1 + v)
                exact &= g.space.dist(x, y) == F(1, 2 ** (2 ** (n + 1)))
        searched = AcaInjGadget(table, 7)
        xs, cert, _ = fvp_search(searched.code, SearchParams(epsilon=1, resolution=16, delta=0),
                                 net=searched.perturbation_net)
        ok &= exact and cert.passed and searched.decode(xs, 6) == truth
        parts.append(f"h={label}: decoded {sorted(decoded)}, search decode {sorted(searched.decode(xs, 6))}, "
                     f"perturbations {'exact' if exact else 'WRONG'}")
    record(6, ok, "; ".join(parts))
    assert ok


# 7 ------------------------------------------------------------------------------------


def test_criterion_07_aca_sup():
    x, cert, _ = fvp_search(SUP.code, SearchParams(epsilon=1, resolution=8))
    mismatches, checked = 0, 0
    for k in range(9):
        for ball in SUP.space.cover(k):
            lo, hi = closed_clip(ball.center, ball.radius)
            if lo <= SUP.cmax <= hi:
                continue
            checked += 1
            if SUP.code.ball_inf(ball).lo != grid_min(SUP.value, lo, hi):
                mismatches += 1
    ok = cert.passed and abs(x - F(1, 2)) <= F(1, 2 ** 8) and mismatches == 0
    record(7, ok, f"x*={x} (|x*-1/2| <= 2^-8: {abs(x - F(1, 2)) <= F(1, 2 ** 8)}), "
                  f"honest vs grid: {checked} balls, {mismatches} mismatches")
    assert ok


# 8 ------------------------------------------------------------------------------------


def test_criterion_08_pi11():
    g = Pi11Gadget(PI11_TREES)
    x, cert, _ = fvp_search(g.code, SearchParams(epsilon=1, resolution=10, delta=0), net=g.slice_net)
    bits = g.decode(x)
    oracle = [has_depth_path(t.nodes, 8) for t in PI11_TREES]
    ok = cert.passed and bits == oracle and sum(oracle) == 2
    record(8, ok, f"decoded {bits}, DFS oracle {oracle}, certificate {cert.verdict}")
    assert ok


# 9 ------------------------------------------------------------------------------------


def _all_depth6_violations() -> int:
    """Exhaustive Baire isometry check for length-6 sequences over {0,..,3}.

    The images share one breakpoint set, and the difference of two of them is
    linear between shared breakpoints, so the sup distance is the max gap at
    those points. Values are dyadic, so scaling by the common denominator
    makes the comparison exact integer arithmetic.
    """
    seqs = list(itertools.product(range(4), repeat=6))
    funcs = [embed_baire(p, 6) for p in seqs]
    ts = sorted({t for h in funcs for t, _ in h.knots})
    vals = [[h(t) for t in ts] for h in funcs]
    scale = math.lcm(*{v.denominator for row in vals for v in row}, 2 ** 5)
    m = np.array([[int(v * scale) for v in row] for row in vals], dtype=np.int64)
    codes = np.array(seqs, dtype=np.int64)
    bad = 0
    for i in range(len(seqs)):
        sup = np.abs(m - m[i]).max(axis=1)
        diff = codes != codes[i]
        first = np.where(diff.any(axis=1), diff.argmax(axis=1), -1)
        want = np.where(first < 0, 0, scale >> np.maximum(first, 0))
        bad += int((sup != want).sum())
    return bad



def test_criterion_09_pseudofibration():
    rng = random.Random(9)
    unit, baire = Pseudofibration("unit"), Pseudofibration("baire", depth=6, branching=4)
    bad = Counter()
    for _ in range(1000):
        y0, y1 = F(rng.randrange(257), 256), F(rng.randrange(257), 256)
        x0, x1 = F(rng.randrange(257), 256), F(rng.randrange(257), 256)
        z0, z1 = unit.iota(x0, y0), unit.iota(x1, y1)
        bad["unit pi.iota"] += unit.pi(z0) != y0
        bad["unit iso"] += z0.sup_dist(z1) != max(abs(x0 - x1), abs(y0 - y1))
        s0 = tuple(rng.randrange(4) for _ in range(rng.randrange(7)))
        s1 = tuple(rng.randrange(4) for _ in range(rng.randrange(7)))
        w0, w1 = baire.iota(s0, y0), baire.iota(s1, y1)
        bad["baire pi.iota"] += baire.pi(w0) != y0
        bad["baire iso"] += pl_sup_dist(w0.knots, w1.knots) != max(baire_dist(s0, s1), abs(y0 - y1))
    c = C01()
    for _ in range(1000):
        g, h = c.dense(rng.randrange(5000)), c.dense(rng.randrange(5000))
        bad["pi 1-Lipschitz"] += abs(unit.pi(g) - unit.pi(h)) > g.sup_dist(h)
    # mixed lengths through sup_dist, then every ordered pair of the 4^6 full-depth sequences
    short = [p for k in range(4) for p in itertools.product(range(4), repeat=k)]
    imgs = {p: embed_baire(p, 6) for p in short}
    for p, q in itertools.product(short, repeat=2):
        bad["embed iso"] += imgs[p].sup_dist(imgs[q]) != baire_dist(p, q)
    bad["embed iso"] += _all_depth6_violations()
    pairs = len(short) ** 2 + 4 ** 12
    ok = sum(bad.values()) == 0
    record(9, ok, f"1000 (x, y) samples per embedding, 1000 c01 pairs, {pairs} Baire pairs (all 4^6 x 4^6 at depth 6); "
                  f"violations {dict(bad) if not ok else 0}")
    assert ok


# 10 -----------------------------------------------------------------------------------


def test_criterion_10_lvp():
    cases = [
        ("x from 1", pl_code(X), F(1), F(1, 2)),
        ("|x-1/3| from 0", pl_code(ABS), F(0), F(1, 2)),
        ("aca-sup from 0", SUP.code, F(0), F(1)),
        ("two valleys from 1", pl_code(TWO_VALLEYS), F(1), F(2)),
        ("step from 1/8", step_lsc([0, F(1, 2), 1], [1, 0]), F(1, 8), F(1)),
    ]
    rows, ok = [], True
    for name, f, x0, eps in cases:
        params = SearchParams(epsilon=eps, resolution=8)
        x, cert, _ = lvp_search(f, x0, params)
        loc = cert.localization
        plain = is_critical(f, x, params)
        good = cert.verdict == "pass" and loc.ok and loc.slack <= F(1, 2 ** 6) and plain.passed
        ok &= good
        rows.append(f"{name}: x*={x} eps*d={loc.lhs} <= {loc.rhs}+{loc.slack} {'ok' if good else 'FAIL'}")
    record(10, ok, "; ".join(rows))
    assert ok


# 11 -----------------------------------------------------------------------------------


def test_criterion_11_determinism(tmp_path):
    code = tmp_path / "abs.json"
    run_cli("gadget", "--type", "pl", "--knots", "0:1/3,1/3:0,1:2/3", "--out", code)
    cert, man = tmp_path / "c.json", tmp_path / "m.json"
    run_cli("--manifest", man, "search", "--code", code, "--epsilon", "1/2", "--out", cert)
    first = cert.read_bytes()
    replay = run_cli("--manifest", man)
    identical = replay == 0 and cert.read_bytes() == first

    suite = {
        "x": (pl_code(X), SearchParams(epsilon=F(1, 2))),
        "abs": (pl_code(ABS), SearchParams(epsilon=F(1, 2))),
        "aca-sup": (SUP.code, SearchParams(epsilon=1)),
        "step": (step_lsc([0, F(1, 3), F(2, 3), 1], [2, 1, F(3, 2)]), SearchParams(epsilon=1, resolution=7)),
    }
    flips, moved = [], 0
    for name, (f, base) in suite.items():
        verdicts, paths = set(), set()
        for seed in (None, 1, 2, 3, 4):
            p = SearchParams(epsilon=base.epsilon, resolution=base.resolution, order_seed=seed)
            x, c, state = fvp_search(f, p)
            verdicts.add(c.verdict)
            paths.add(tuple(state.iterates))
        if verdicts != {"pass"}:
            flips.append(name)
        moved += len(paths) > 1
    ok = identical and not flips
    record(11, ok, f"manifest replay byte-identical: {identical}; verdict flips under --seed-order: {flips or 'none'}"
                   f" ({moved}/{len(suite)} fixtures changed iterates)")
    assert ok
