"""Exact rational helpers: parsing, serialization, dyadic utilities."""

from __future__ import annotations

import ast
import math
import operator
from fractions import Fraction
from typing import Callable, Optional, Union

from .errors import InvalidInput

RationalLike = Union[Fraction, int, str]


def Q(value: RationalLike) -> Fraction:
    """Coerce ``value`` to a Fraction without ever going through floats."""
    if isinstance(value, Fraction):
        return value
    if isinstance(value, bool):
        raise InvalidInput(f"not a rational: {value!r}")
    if isinstance(value, int):
        return Fraction(value)
    if isinstance(value, str):
        return parse_rational(value)
    if isinstance(value, dict):
        return from_json(value)
    raise InvalidInput(f"not an exact rational: {value!r}")


def pow2(n: int) -> Fraction:
    """2**n as a Fraction (n may be negative)."""
    return Fraction(2) ** n


def is_dyadic(x: Fraction) -> bool:
    d = x.denominator
    return d & (d - 1) == 0


def floor_log2(x: Fraction) -> int:
    """Largest n with 2**n <= x, for x > 0."""
    if x <= 0:
        raise ValueError("floor_log2 of a non-positive number")
    n = x.numerator.bit_length() - x.denominator.bit_length()
    if pow2(n) > x:
        n -= 1
    elif pow2(n + 1) <= x:
        n += 1
    return n


def ceil_log2(x: Fraction) -> int:
    """Smallest n with x <= 2**n, for x > 0."""
    n = floor_log2(x)
    return n if pow2(n) == x else n + 1


def to_json(x: Optional[Fraction]) -> Optional[dict]:
    if x is None:
        return None
    x = Q(x)
    return {"num": str(x.numerator), "den": str(x.denominator)}


def from_json(obj) -> Fraction:
    if isinstance(obj, dict):
        try:
            num, den = int(obj["num"]), int(obj["den"])
        except (KeyError, TypeError, ValueError) as exc:
            raise InvalidInput(f"malformed rational {obj!r}") from exc
        if den == 0:
            raise InvalidInput("zero denominator")
        return Fraction(num, den)
    if isinstance(obj, (int, str)) and not isinstance(obj, bool):
        return Q(obj)
    raise InvalidInput(f"malformed rational {obj!r}")


_BINOPS = {
    ast.Add: operator.add,
    ast.Sub: operator.sub,
    ast.Mult: operator.mul,
    ast.Div: operator.truediv,
    ast.Pow: None,
}


def _eval_node(node, env):
    if isinstance(node, ast.Expression):
        return _eval_node(node.body, env)
    if isinstance(node, ast.Constant) and isinstance(node.value, int) and not isinstance(node.value, bool):
        return Fraction(node.value)
    if isinstance(node, ast.Name):
        if node.id in env:
            return Fraction(env[node.id])
        raise InvalidInput(f"unknown name {node.id!r}")
    if isinstance(node, ast.UnaryOp) and isinstance(node.op, (ast.USub, ast.UAdd)):
        v = _eval_node(node.operand, env)
        return -v if isinstance(node.op, ast.USub) else v
    if isinstance(node, ast.BinOp) and type(node.op) in _BINOPS:
        a = _eval_node(node.left, env)
        b = _eval_node(node.right, env)
        if isinstance(node.op, ast.Pow):
            if b.denominator != 1:
                raise InvalidInput("non-integer exponent")
            return a ** int(b)
        if isinstance(node.op, ast.Div) and b == 0:
            raise InvalidInput("division by zero")
        return _BINOPS[type(node.op)](a, b)
    raise InvalidInput("unsupported expression")


def parse_expr(text: str) -> Callable[..., Fraction]:
    """Compile an arithmetic expression over named integers into an exact evaluator.

    ``^`` is read as exponentiation, so ``"1/2-2^-(n+1)"`` works.
    """
    src = text.strip().replace("^", "**")
    try:
        tree = ast.parse(src, mode="eval")
    except SyntaxError as exc:
        raise InvalidInput(f"cannot parse expression {text!r}") from exc

    def evaluate(**env) -> Fraction:
        return _eval_node(tree, env)

    return evaluate


def parse_rational(text: str) -> Fraction:
    """Parse ``"3"``, ``"-1/3"``, ``"2^-8"`` or a small constant expression."""
    text = text.strip()
    if not text:
        raise InvalidInput("empty rational")
    if "." in text or "e" in text.lower():
        raise InvalidInput(f"decimal literals are not exact rationals: {text!r}")
    try:
        return Fraction(text)
    except ValueError:
        return parse_expr(text)()


def fmt(x: Optional[Fraction]) -> str:
    """Compact exact text form, ``inf`` for None."""
    if x is None:
        return "inf"
    return str(x)


def dyadic_enum(i: int) -> Fraction:
    """i-th dyadic rational of [0,1]: 0, 1, 1/2, 1/4, 3/4, 1/8, ..."""
    if i < 0:
        raise ValueError("negative index")
    if i < 2:
        return Fraction(i)
    level = (i - 1).bit_length()
    offset = i - 1 - (1 << (level - 1))
    return Fraction(2 * offset + 1, 1 << level)


def cantor_pair(x: int, y: int) -> int:
    """Bijective pairing, increasing in each argument."""
    return (x + y) * (x + y + 1) // 2 + y


def cantor_unpair(z: int) -> tuple[int, int]:
    w = (math.isqrt(8 * z + 1) - 1) // 2
    y = z - w * (w + 1) // 2
    return w - y, y


def calkin_wilf(i: int) -> Fraction:
    """i-th positive rational in Calkin-Wilf order (i >= 0)."""
    a, b = 1, 1
    for bit in bin(i + 1)[3:]:
        if bit == "0":
            a, b = a, a + b
        else:
            a, b = a + b, b
    return Fraction(a, b)
