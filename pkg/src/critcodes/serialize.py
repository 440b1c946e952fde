"""Versioned JSON forms for spaces, points, function codes and certificates.

Rationals are ``{"num": "...", "den": "..."}`` string pairs throughout.
Decoding errors carry the JSON path of the offending field.
"""

from __future__ import annotations

import hashlib
import json
from fractions import Fraction
from typing import Any, Optional

from .codes import (
    ListLsc,
    cont_from_samples,
    const_code,
    const_continuous,
    lipschitz_modulus,
    lsc_combine,
    pl_code,
    pl_lsc,
    step_lsc,
)
from .ekeland import CheckRow, CriticalityCertificate
from .errors import InvalidInput
from .pl import PLFunction
from .rationals import from_json, parse_expr, parse_rational, to_json
from .spaces import Ball, Space, make_space

VERSION = 1
CODE_SCHEMA = "critcodes.code"
CERT_SCHEMA = "critcodes.certificate"
MANIFEST_SCHEMA = "critcodes.manifest"


def dumps(obj) -> str:
    """Canonical text: sorted keys, two-space indent, trailing newline."""
    return json.dumps(obj, sort_keys=True, indent=2) + "\n"


def digest(obj) -> str:
    return hashlib.sha256(json.dumps(obj, sort_keys=True, separators=(",", ":")).encode()).hexdigest()


def loads(text: str, source: str = "<input>"):
    try:
        return json.loads(text)
    except json.JSONDecodeError as exc:
        raise InvalidInput(f"{source}: line {exc.lineno} column {exc.colno}: {exc.msg}") from exc


def _get(obj, key: str, path: str):
    if not isinstance(obj, dict):
        raise InvalidInput(f"{path}: expected an object")
    if key not in obj:
        raise InvalidInput(f"{path}: missing field {key!r}")
    return obj[key]


def _rat(obj, path: str) -> Fraction:
    try:
        return from_json(obj)
    except InvalidInput as exc:
        raise InvalidInput(f"{path}: {exc}") from exc


def _opt_rat(obj, path: str) -> Optional[Fraction]:
    return None if obj is None else _rat(obj, path)


# spaces and points ---------------------------------------------------------------


def space_to_json(space: Space) -> dict:
    params = {}
    for k, v in space.params().items():
        if isinstance(v, Space):
            params[k] = space_to_json(v)
        elif k == "factors":
            params[k] = [space_to_json(f) for f in v]
        elif k == "center":
            params[k] = point_to_json(space.parent, v)
        elif isinstance(v, Fraction):
            params[k] = to_json(v)
        else:
            params[k] = v
    return {"kind": space.kind, "params": params}


def space_from_json(obj, path: str = "space") -> Space:
    kind = _get(obj, "kind", path)
    raw = obj.get("params") or {}
    params: dict[str, Any] = {}
    for k, v in raw.items():
        p = f"{path}.params.{k}"
        if k in ("a", "b", "lo", "hi", "radius"):
            params[k] = _opt_rat(v, p)
        elif k == "factors":
            params[k] = [space_from_json(f, f"{p}[{i}]") for i, f in enumerate(v)]
        elif k == "parent":
            params[k] = space_from_json(v, p)
        else:
            params[k] = v
    if "center" in params:
        params["center"] = point_from_json(params["parent"], params["center"], f"{path}.params.center")
    try:
        return make_space(kind, params)
    except InvalidInput as exc:
        raise InvalidInput(f"{path}: {exc}") from exc


def _base_kind(space: Space) -> Space:
    while space.kind == "closed-ball":
        space = space.parent
    return space


def point_to_json(space: Space, p):
    base = _base_kind(space)
    k = base.kind
    if k in ("unit-interval", "closed-interval"):
        return to_json(p)
    if k in ("cantor", "baire"):
        return list(p)
    if k == "c01":
        return [[to_json(t), to_json(v)] for t, v in p.knots]
    if k == "product":
        return [point_to_json(f, q) for f, q in zip(base.factors, p)]
    raise InvalidInput(f"cannot serialize points of {k}")


def point_from_json(space: Space, obj, path: str = "point"):
    base = _base_kind(space)
    k = base.kind
    try:
        if k in ("unit-interval", "closed-interval"):
            return space.point(_rat(obj, path))
        if k in ("cantor", "baire"):
            if not isinstance(obj, list):
                raise InvalidInput("expected a list of naturals")
            return space.point(tuple(obj))
        if k == "c01":
            return space.point(PLFunction([(_rat(t, path), _rat(v, path)) for t, v in obj]))
        if k == "product":
            return space.point(tuple(point_from_json(f, q, f"{path}[{i}]") for i, (f, q) in enumerate(zip(base.factors, obj))))
    except (TypeError, ValueError) as exc:
        raise InvalidInput(f"{path}: malformed point") from exc
    except InvalidInput as exc:
        if str(exc).startswith(path):
            raise
        raise InvalidInput(f"{path}: {exc}") from exc
    raise InvalidInput(f"{path}: cannot read points of {k}")


def parse_point_literal(space: Space, text: str):
    """Command-line point: JSON, a rational like ``1/3``, or ``0,1,1`` for sequences."""
    base = _base_kind(space)
    try:
        obj = json.loads(text)
    except json.JSONDecodeError:
        obj = None
    if base.kind in ("unit-interval", "closed-interval"):
        if isinstance(obj, (dict, int)):
            return point_from_json(space, obj)
        return space.point(parse_rational(text))
    if base.kind in ("cantor", "baire"):
        if isinstance(obj, list):
            return point_from_json(space, obj)
        text = text.strip()
        if not text:
            return space.point(())
        try:
            return space.point(tuple(int(t) for t in text.replace(" ", "").split(",")))
        except ValueError as exc:
            raise InvalidInput(f"malformed sequence {text!r}") from exc
    if obj is None:
        raise InvalidInput(f"malformed point literal {text!r}")
    return point_from_json(space, obj)


def ball_to_json(space: Space, ball: Ball) -> dict:
    return {"center": point_to_json(space, ball.center), "radius": to_json(ball.radius)}


def ball_from_json(space: Space, obj, path: str = "ball") -> Ball:
    c = point_from_json(space, _get(obj, "center", path), f"{path}.center")
    return Ball(c, _rat(_get(obj, "radius", path), f"{path}.radius"))


# codes -------------------------------------------------------------------------


def _knots(obj, path):
    if not isinstance(obj, list) or len(obj) < 2:
        raise InvalidInput(f"{path}: need at least two knots")
    return [(_rat(t, f"{path}[{i}][0]"), _rat(v, f"{path}[{i}][1]")) for i, (t, v) in enumerate(obj)]


def _tree(obj, path):
    from .gadgets import TreeSpec

    nodes = _get(obj, "nodes", path)
    if not isinstance(nodes, list):
        raise InvalidInput(f"{path}.nodes: expected a list")
    try:
        return TreeSpec.build(nodes, obj.get("depth"), obj.get("branching", 2))
    except InvalidInput as exc:
        raise InvalidInput(f"{path}: {exc}") from exc


def code_from_json(obj, path: str = "code"):
    """Build a code from its JSON descriptor; the descriptor is kept on the code."""
    from . import gadgets as G

    if obj.get("schema", CODE_SCHEMA) != CODE_SCHEMA:
        raise InvalidInput(f"{path}: not a function code")
    if obj.get("version", VERSION) != VERSION:
        raise InvalidInput(f"{path}: unsupported version {obj.get('version')!r}")
    kind = _get(obj, "kind", path)
    role = obj.get("role", "continuous")
    try:
        if kind == "pl":
            pl = PLFunction(_knots(_get(obj, "knots", path), f"{path}.knots"))
            lip = _opt_rat(obj.get("lipschitz"), f"{path}.lipschitz")
            if role == "lsc":
                code = pl_lsc(pl)
                code.lipschitz = pl_code(pl, lipschitz=lip).lipschitz
            else:
                code = pl_code(pl, lipschitz=lip)
        elif kind == "const":
            space = space_from_json(_get(obj, "space", path), f"{path}.space")
            c = _rat(_get(obj, "value", path), f"{path}.value")
            code = const_code(space, c) if role == "lsc" else const_continuous(space, c)
        elif kind == "step":
            breaks = [_rat(t, f"{path}.breaks[{i}]") for i, t in enumerate(_get(obj, "breaks", path))]
            values = [_rat(v, f"{path}.values[{i}]") for i, v in enumerate(_get(obj, "values", path))]
            code = step_lsc(breaks, values)
        elif kind == "samples":
            space = space_from_json(_get(obj, "space", path), f"{path}.space")
            samples = [(point_from_json(space, a, f"{path}.samples[{i}][0]"), _rat(v, f"{path}.samples[{i}][1]"))
                       for i, (a, v) in enumerate(_get(obj, "samples", path))]
            mod = _get(obj, "modulus", path)
            if "lipschitz" in mod:
                modulus = lipschitz_modulus(_rat(mod["lipschitz"], f"{path}.modulus.lipschitz"))
            else:
                fn = parse_expr(_get(mod, "expr", f"{path}.modulus"))
                modulus = lambda n: int(fn(n=n))
            code = cont_from_samples(samples, modulus, space)
        elif kind == "items":
            space = space_from_json(_get(obj, "space", path), f"{path}.space")
            items = [(ball_from_json(space, it, f"{path}.items[{i}]"), _rat(_get(it, "q", f"{path}.items[{i}]"), f"{path}.items[{i}].q"))
                     for i, it in enumerate(_get(obj, "items", path))]
            upper = [(point_from_json(space, u["x"], f"{path}.upper[{i}].x"), _rat(u["value"], f"{path}.upper[{i}].value"))
                     for i, u in enumerate(obj.get("upper", []))]
            code = ListLsc(space, items, _rat(obj.get("lower_bound", 0), f"{path}.lower_bound"), upper)
        elif kind == "wkl":
            code = G.wkl_gadget(_tree(_get(obj, "tree", path), f"{path}.tree"), obj.get("target", "cantor"))
        elif kind == "aca-inj":
            table = {int(a): int(b) for a, b in _get(obj, "table", path)}
            code = G.aca_injection_gadget(table, int(_get(obj, "N", path)))
        elif kind == "aca-sup":
            cs = [_rat(c, f"{path}.c[{i}]") for i, c in enumerate(_get(obj, "c", path))]
            code = G.aca_sup_gadget(cs)
        elif kind == "pi11":
            trees = [_tree(t, f"{path}.trees[{i}]") for i, t in enumerate(_get(obj, "trees", path))]
            code = G.pi11_gadget(trees, obj.get("depth"), obj.get("branching"))
        elif kind == "combine":
            f = code_from_json(_get(obj, "f", path), f"{path}.f")
            g = code_from_json(_get(obj, "g", path), f"{path}.g")
            code = lsc_combine(_lsc(f), _lsc(g), _get(obj, "op", path))
        elif kind == "envelope":
            from .envelope import EnvelopeCode

            f = code_from_json(_get(obj, "f", path), f"{path}.f")
            alpha = _rat(_get(obj, "alpha", path), f"{path}.alpha")
            code = EnvelopeCode(f, alpha, int(obj.get("resolution", 8)))
        else:
            raise InvalidInput(f"{path}.kind: unknown code kind {kind!r}")
    except InvalidInput as exc:
        if str(exc).startswith(path):
            raise
        raise InvalidInput(f"{path}: {exc}") from exc
    except (TypeError, ValueError, KeyError) as exc:
        raise InvalidInput(f"{path}: malformed {kind} code ({exc})") from exc
    desc = dict(obj)
    desc.setdefault("schema", CODE_SCHEMA)
    desc.setdefault("version", VERSION)
    code._descriptor = desc
    return code


def _lsc(code):
    from .codes import LscCode, cont_to_lsc

    return code if isinstance(code, LscCode) else cont_to_lsc(code)


def code_descriptor(kind: str, **fields) -> dict:
    out = {"schema": CODE_SCHEMA, "version": VERSION, "kind": kind}
    out.update(fields)
    return out


def tree_to_json(tree) -> dict:
    return tree.to_json()


# certificates ---------------------------------------------------------------------


def _row_to_json(space, row: CheckRow) -> dict:
    return {"y": point_to_json(space, row.y), "d": to_json(row.d), "f_lo": to_json(row.f_lo)}


def certificate_to_json(cert: CriticalityCertificate, space: Space, code_desc: Optional[dict] = None,
                        principle: str = "fvp", state=None, order_seed: Optional[int] = None) -> dict:
    out = {
        "schema": CERT_SCHEMA,
        "version": VERSION,
        "principle": principle,
        "space": space_to_json(space),
        "code_digest": digest(code_desc) if code_desc is not None else None,
        "epsilon": to_json(cert.epsilon),
        "delta": to_json(cert.delta),
        "slack": to_json(cert.slack),
        "resolution": cert.resolution,
        "budget": cert.budget,
        "order_seed": order_seed,
        "region": None if cert.region is None else ball_to_json(space, cert.region),
        "x_star": point_to_json(space, cert.x_star),
        "f_x_star": {"lo": to_json(cert.f_x_star.lo), "hi": to_json(cert.f_x_star.hi)},
        "verdict": cert.verdict,
        "witness": None if cert.witness is None else _row_to_json(space, cert.witness),
        "rows": [_row_to_json(space, r) for r in cert.rows],
        "localization": None,
    }
    loc = cert.localization
    if loc is not None:
        out["localization"] = {
            "x0": point_to_json(space, loc.x0),
            "f_x0": {"lo": to_json(loc.f_x0.lo), "hi": to_json(loc.f_x0.hi)},
            "lhs": to_json(loc.lhs),
            "rhs": to_json(loc.rhs),
            "slack": to_json(loc.slack),
            "ok": loc.ok,
        }
    if state is not None:
        out["search"] = {
            "iterates": [point_to_json(space, a) for a in state.iterates],
            "stopped": state.stopped,
            "schedule_ok": state.schedule_ok(),
            "telescoping_ok": state.telescoping_ok(cert.epsilon),
        }
    return out


def certificate_from_json(obj, path: str = "certificate") -> dict:
    """Parsed certificate fields (points decoded against the recorded space)."""
    if _get(obj, "schema", path) != CERT_SCHEMA:
        raise InvalidInput(f"{path}: not a certificate")
    if _get(obj, "version", path) != VERSION:
        raise InvalidInput(f"{path}: unsupported version {obj['version']!r}")
    space = space_from_json(_get(obj, "space", path), f"{path}.space")
    out = {
        "space": space,
        "principle": obj.get("principle", "fvp"),
        "code_digest": obj.get("code_digest"),
        "epsilon": _rat(_get(obj, "epsilon", path), f"{path}.epsilon"),
        "delta": _rat(_get(obj, "delta", path), f"{path}.delta"),
        "slack": _rat(_get(obj, "slack", path), f"{path}.slack"),
        "resolution": int(_get(obj, "resolution", path)),
        "budget": int(_get(obj, "budget", path)),
        "order_seed": obj.get("order_seed"),
        "region": None if obj.get("region") is None else ball_from_json(space, obj["region"], f"{path}.region"),
        "x_star": point_from_json(space, _get(obj, "x_star", path), f"{path}.x_star"),
        "verdict": _get(obj, "verdict", path),
        "ys": [point_from_json(space, _get(r, "y", f"{path}.rows[{i}]"), f"{path}.rows[{i}].y")
               for i, r in enumerate(_get(obj, "rows", path))],
        "localization": None,
    }
    loc = obj.get("localization")
    if loc is not None:
        out["localization"] = {"x0": point_from_json(space, _get(loc, "x0", f"{path}.localization"),
                                                     f"{path}.localization.x0"),
                               "slack": _rat(_get(loc, "slack", f"{path}.localization"), f"{path}.localization.slack")}
    return out
