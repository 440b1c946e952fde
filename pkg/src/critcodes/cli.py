"""Command-line front end: gadget, search, verify, envelope, embed.

Exit codes: 0 success, 2 invalid input, 3 budget exhausted, 4 verification failed.
Outputs are canonical text written atomically; a run manifest records the
argument vector and the digests of inputs and outputs so it can be replayed.
"""

from __future__ import annotations

import argparse
import csv
import hashlib
import io
import json
import os
import sys
import tempfile
from fractions import Fraction
from typing import Optional, Sequence

from . import __version__
from .ekeland import SearchParams, fvp_search, is_critical, localization_check, lvp_search
from .errors import CodesError, InvalidInput, VerificationFailed
from .rationals import fmt, parse_rational
from .serialize import (
    MANIFEST_SCHEMA,
    certificate_from_json,
    certificate_to_json,
    code_descriptor,
    code_from_json,
    digest,
    dumps,
    loads,
    parse_point_literal,
    point_to_json,
    space_to_json,
)
from .spaces import Ball


def _read(path: str) -> str:
    try:
        with open(path, encoding="utf-8") as fh:
            return fh.read()
    except OSError as exc:
        raise InvalidInput(f"cannot read {path}: {exc.strerror}") from exc


def _load_json(path: str):
    return loads(_read(path), path)


def write_atomic(path: str, text: str):
    d = os.path.dirname(os.path.abspath(path))
    fd, tmp = tempfile.mkstemp(dir=d, prefix=".tmp-", suffix=os.path.basename(path))
    try:
        with os.fdopen(fd, "w", encoding="utf-8", newline="") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


class _Run:
    """Collects inputs and outputs for the manifest."""

    def __init__(self, out: Optional[str]):
        self.out = out
        self.inputs: dict[str, str] = {}
        self.outputs: dict[str, str] = {}
        self.outcome: dict = {}

    def read_json(self, path: str):
        text = _read(path)
        self.inputs[path] = hashlib.sha256(text.encode()).hexdigest()
        return loads(text, path)

    def emit(self, text: str):
        if self.out:
            write_atomic(self.out, text)
            self.outputs[self.out] = hashlib.sha256(text.encode()).hexdigest()
        else:
            sys.stdout.write(text)
            self.outputs["-"] = hashlib.sha256(text.encode()).hexdigest()


def _rat(text: str, name: str) -> Fraction:
    try:
        return parse_rational(text)
    except InvalidInput as exc:
        raise InvalidInput(f"--{name}: {exc}") from exc


# gadget ------------------------------------------------------------------------


def _table(text: str) -> list[list[int]]:
    out = []
    for part in text.split(","):
        if not part.strip():
            continue
        try:
            a, b = part.split(":")
            out.append([int(a), int(b)])
        except ValueError as exc:
            raise InvalidInput(f"--table: malformed entry {part!r} (want a:b)") from exc
    return out


def _tree_json(run: _Run, path: str):
    obj = run.read_json(path)
    if isinstance(obj, list):
        obj = {"nodes": obj}
    return obj


def cmd_gadget(args, run: _Run) -> int:
    from .rationals import to_json

    spec = run.read_json(args.spec) if args.spec else {}
    t = args.type
    if t == "wkl":
        tree = spec.get("tree") or (_tree_json(run, args.tree) if args.tree else None)
        if tree is None:
            raise InvalidInput("wkl needs --tree or a spec with a tree")
        desc = code_descriptor("wkl", tree=tree, target=args.target or spec.get("target", "cantor"))
    elif t == "aca-inj":
        table = spec.get("table") or (_table(args.table) if args.table else None)
        N = args.N if args.N is not None else spec.get("N")
        if table is None or N is None:
            raise InvalidInput("aca-inj needs --table and --N")
        desc = code_descriptor("aca-inj", table=table, N=N)
    elif t == "aca-sup":
        if args.cn:
            from .gadgets import cn_prefix

            cs = cn_prefix(args.cn, args.prefix)
            desc = code_descriptor("aca-sup", c=[to_json(c) for c in cs], cn=args.cn, prefix=args.prefix)
        elif "c" in spec:
            desc = code_descriptor("aca-sup", c=spec["c"])
        else:
            raise InvalidInput("aca-sup needs --cn or a spec with c")
    elif t == "pi11":
        trees = spec.get("trees") or (run.read_json(args.trees).get("trees") if args.trees else None)
        if trees is None:
            raise InvalidInput("pi11 needs --trees or a spec with trees")
        desc = code_descriptor("pi11", trees=trees)
    elif t == "pl":
        knots = spec.get("knots") or _knots_arg(args.knots)
        desc = code_descriptor("pl", knots=knots, role=args.role)
    else:
        knots = spec.get("breaks")
        if knots is None:
            raise InvalidInput("step needs a spec with breaks and values")
        desc = code_descriptor("step", breaks=spec["breaks"], values=spec["values"], role="lsc")
    code = code_from_json(desc)
    run.outcome = {"kind": desc["kind"], "space": space_to_json(code.space)}
    run.emit(dumps(desc))
    return 0


def _knots_arg(text: Optional[str]):
    from .rationals import to_json

    if not text:
        raise InvalidInput("pl needs --knots t:v,t:v,...")
    out = []
    for part in text.split(","):
        try:
            t, v = part.split(":")
        except ValueError as exc:
            raise InvalidInput(f"--knots: malformed entry {part!r}") from exc
        out.append([to_json(_rat(t, "knots")), to_json(_rat(v, "knots"))])
    return out


# search / verify -----------------------------------------------------------------


def _local_net(code):
    g = getattr(code, "gadget", None)
    if g is None:
        return None
    for name in ("perturbation_net", "slice_net"):
        if hasattr(g, name):
            return getattr(g, name)
    return None


def _params(args, code, local: bool) -> SearchParams:
    region = None
    if args.region_center is not None:
        if args.region_radius is None:
            raise InvalidInput("--region-center needs --region-radius")
        region = Ball(parse_point_literal(code.space, args.region_center), _rat(args.region_radius, "region-radius"))
    delta = _rat(args.delta, "delta") if args.delta is not None else (Fraction(0) if local else None)
    return SearchParams(
        epsilon=_rat(args.epsilon, "epsilon"),
        resolution=args.resolution,
        budget=args.budget,
        max_iters=args.max_iters,
        slack=_rat(args.slack, "slack") if args.slack is not None else None,
        region=region,
        delta=delta,
        order_seed=args.seed_order,
    )


def cmd_search(args, run: _Run) -> int:
    desc = run.read_json(args.code)
    code = code_from_json(desc)
    net = _local_net(code)
    params = _params(args, code, net is not None)
    if args.principle == "lvp":
        if args.x0 is None:
            raise InvalidInput("lvp needs --x0")
        x0 = parse_point_literal(code.space, args.x0)
        x_star, cert, state = lvp_search(code, x0, params, net=net)
    else:
        x_star, cert, state = fvp_search(code, params, net=net)
    out = certificate_to_json(cert, code.space, code.descriptor(), args.principle, state, params.order_seed)
    run.outcome = {"verdict": cert.verdict, "x_star": point_to_json(code.space, x_star)}
    run.emit(dumps(out))
    return 0


def verify_certificate(code, cert_obj) -> tuple[bool, Optional[object], str]:
    """Re-check a certificate against a code; returns (passed, witness, message)."""
    c = certificate_from_json(cert_obj)
    desc = code.descriptor()
    if c["code_digest"] is not None and desc is not None and c["code_digest"] != digest(desc):
        raise InvalidInput("certificate was issued for a different function code")
    if c["space"] != code.space:
        raise InvalidInput("certificate space differs from the code's space")
    params = SearchParams(epsilon=c["epsilon"], resolution=c["resolution"], budget=c["budget"], slack=c["slack"],
                          region=c["region"], delta=c["delta"], order_seed=c["order_seed"])
    cert = is_critical(code, c["x_star"], params, net=c["ys"])
    if not cert.passed:
        return False, cert.witness.y, "criticality check failed"
    if c["localization"] is not None:
        loc = c["localization"]
        lc = localization_check(code, loc["x0"], c["x_star"], c["epsilon"], loc["slack"], c["budget"])
        if not lc.ok:
            return False, loc["x0"], "localization check failed"
    return True, None, "pass"


def cmd_verify(args, run: _Run) -> int:
    desc = run.read_json(args.code)
    code = code_from_json(desc)
    cert_obj = run.read_json(args.cert)
    ok, witness, msg = verify_certificate(code, cert_obj)
    report = {"verdict": "pass" if ok else "fail", "message": msg,
              "witness": None if witness is None else point_to_json(code.space, witness)}
    run.outcome = report
    run.emit(dumps(report))
    if not ok:
        raise VerificationFailed(msg, witness=witness)
    return 0


# envelope / embed -----------------------------------------------------------------


def cmd_envelope(args, run: _Run) -> int:
    from .envelope import EnvelopeCode

    desc = run.read_json(args.code)
    code = code_from_json(desc)
    alpha = _rat(args.alpha, "alpha")
    env = EnvelopeCode(_honest(code), alpha, args.resolution)
    if args.at:
        pts = [parse_point_literal(code.space, p) for p in args.at.split(";")]
    else:
        pts = code.space.net(args.grid)
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["x", "lo", "hi", "alpha", "resolution"])
    for x in pts:
        br = env.evidence(x)
        w.writerow([json.dumps(point_to_json(code.space, x), sort_keys=True) if not isinstance(x, Fraction) else fmt(x),
                    fmt(br.lo), fmt(br.hi), fmt(alpha), args.resolution])
    run.outcome = {"rows": len(pts)}
    run.emit(buf.getvalue())
    return 0


def _honest(code):
    from .codes import cont_to_lsc, honest_promote_compact, pl_lsc, ContinuousCode

    if getattr(code, "honest", False):
        return code
    if hasattr(code, "pl"):
        return pl_lsc(code.pl)
    if isinstance(code, ContinuousCode):
        code = cont_to_lsc(code)
    return honest_promote_compact(code)


def cmd_embed(args, run: _Run) -> int:
    from .gadgets import embed_baire, embed_unit, pseudofib_iota
    from .rationals import to_json
    from .spaces import Baire, UnitInterval

    if args.kind == "unit":
        x = UnitInterval().point(_rat(args.point, "point"))
        h = embed_unit(x)
    else:
        x = parse_point_literal(Baire(), args.point)
        h = embed_baire(x, args.depth)
    if args.y is not None:
        h = pseudofib_iota(h, _rat(args.y, "y"))
    out = {"knots": [[to_json(t), to_json(v)] for t, v in h.knots]}
    run.outcome = {"knots": len(h.knots)}
    run.emit(dumps(out))
    return 0


# parser -------------------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="critcodes", description="Exact critical-point search and reversal gadgets.")
    p.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    p.add_argument("--seed-order", type=int, default=None, help="permute the enumeration of search nets")
    p.add_argument("--manifest", default=None, help="write a run manifest here; alone, replay it")
    sub = p.add_subparsers(dest="command")

    g = sub.add_parser("gadget", help="emit a function code")
    g.add_argument("--type", required=True, choices=["wkl", "aca-inj", "aca-sup", "pi11", "pl", "step"])
    g.add_argument("--spec", help="JSON spec file with the gadget parameters")
    g.add_argument("--tree", help="wkl: tree file (list of nodes or {nodes, depth})")
    g.add_argument("--target", choices=["cantor", "unit"])
    g.add_argument("--table", help="aca-inj: a:b,a:b,...")
    g.add_argument("--N", type=int)
    g.add_argument("--cn", help="aca-sup: expression in n")
    g.add_argument("--prefix", type=int, default=16)
    g.add_argument("--trees", help="pi11: file with {trees: [...]}")
    g.add_argument("--knots", help="pl: t:v,t:v,...")
    g.add_argument("--role", choices=["continuous", "lsc"], default="continuous")
    g.add_argument("--out")

    s = sub.add_parser("search", help="search for a critical point and emit a certificate")
    s.add_argument("--code", required=True)
    s.add_argument("--principle", choices=["fvp", "lvp"], default="fvp")
    s.add_argument("--epsilon", default="1")
    s.add_argument("--resolution", type=int, default=8)
    s.add_argument("--budget", type=int, default=4096)
    s.add_argument("--max-iters", type=int, default=64)
    s.add_argument("--slack")
    s.add_argument("--delta")
    s.add_argument("--x0")
    s.add_argument("--region-center")
    s.add_argument("--region-radius")
    s.add_argument("--out")

    v = sub.add_parser("verify", help="re-check a certificate (exit 0 iff it passes)")
    v.add_argument("--code", required=True)
    v.add_argument("--cert", required=True)
    v.add_argument("--out")

    e = sub.add_parser("envelope", help="CSV of envelope brackets")
    e.add_argument("--code", required=True)
    e.add_argument("--alpha", required=True)
    e.add_argument("--resolution", type=int, default=8)
    e.add_argument("--grid", type=int, default=3, help="sample the level-k net")
    e.add_argument("--at", help="semicolon-separated points instead of a net")
    e.add_argument("--out")

    m = sub.add_parser("embed", help="emit a C[0,1] point as a breakpoint list")
    m.add_argument("--kind", choices=["unit", "baire"], required=True)
    m.add_argument("--point", required=True)
    m.add_argument("--depth", type=int, default=6)
    m.add_argument("--y", help="also apply iota with this y")
    m.add_argument("--out")
    return p


COMMANDS = {"gadget": cmd_gadget, "search": cmd_search, "verify": cmd_verify,
            "envelope": cmd_envelope, "embed": cmd_embed}


def _replay(path: str) -> int:
    man = _load_json(path)
    if man.get("schema") != MANIFEST_SCHEMA:
        raise InvalidInput(f"{path}: not a run manifest")
    argv = man["argv"]
    code = main(argv)
    if code != man.get("exit_code", 0):
        raise VerificationFailed(f"replay exit code {code} differs from {man.get('exit_code')}")
    for out, h in man.get("outputs", {}).items():
        if out == "-":
            continue
        now = hashlib.sha256(_read(out).encode()).hexdigest()
        if now != h:
            raise VerificationFailed(f"replayed output {out} differs from the manifest")
    return 0


def _run(argv: Sequence[str]) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    if args.command is None:
        if args.manifest:
            return _replay(args.manifest)
        parser.print_help(sys.stderr)
        return 2
    run = _Run(getattr(args, "out", None))
    status = 0
    try:
        status = COMMANDS[args.command](args, run)
    except VerificationFailed:
        status = 4
        raise
    finally:
        if args.manifest:
            argv_clean = _strip_manifest(list(argv))
            man = {
                "schema": MANIFEST_SCHEMA,
                "version": 1,
                "command": args.command,
                "argv": argv_clean,
                "parameters": {k: v for k, v in sorted(vars(args).items()) if k not in ("manifest",)},
                "inputs": run.inputs,
                "outputs": run.outputs,
                "tool_version": __version__,
                "outcome": run.outcome,
                "exit_code": status,
            }
            write_atomic(args.manifest, dumps(man))
    return status


def _strip_manifest(argv: list[str]) -> list[str]:
    out, skip = [], False
    for a in argv:
        if skip:
            skip = False
            continue
        if a == "--manifest":
            skip = True
            continue
        if a.startswith("--manifest="):
            continue
        out.append(a)
    return out


def main(argv: Optional[Sequence[str]] = None) -> int:
    argv = list(sys.argv[1:] if argv is None else argv)
    try:
        return _run(argv)
    except CodesError as exc:
        msg = f"critcodes: error: {exc}"
        w = getattr(exc, "witness", None)
        if isinstance(exc, VerificationFailed) and w is not None:
            msg += f" (witness {w})"
        print(msg, file=sys.stderr)
        return exc.exit_code
    except RecursionError:
        print("critcodes: error: input too deeply nested", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
