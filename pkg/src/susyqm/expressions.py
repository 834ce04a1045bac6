"""Textual polynomial expressions for the command line.

Grammar (whitespace-insensitive):

    expr := ['+'|'-'] term (('+'|'-') term)*
    term := number ['*' atom] | number atom | atom
    atom := 'x' ['^' number] | '|x|' '^' number

Powers of x must be non-negative integers; |x| powers may be any
positive real.  parse(print(ast)) round-trips exactly.
"""
from __future__ import annotations

import math
import re
from dataclasses import dataclass
from typing import Tuple

from .potentials import Potential, PolyTerm
from .superpotential import Superpotential

__all__ = [
    "ExprTerm",
    "ExpressionAst",
    "ParseError",
    "parse_expression",
    "expression_to_text",
    "ast_to_potential",
    "ast_to_superpotential",
    "parse_potential",
    "parse_superpotential",
    "potential_to_text",
    "coeffs_to_text",
]


class ParseError(ValueError):
    """Syntax error with position information."""

    def __init__(self, message: str, position: int):
        super().__init__(f"{message} (at position {position})")
        self.position = position


@dataclass(frozen=True)
class ExprTerm:
    """Signed monomial: coeff * x^power (or |x|^power)."""

    coeff: float
    power: float
    absolute: bool = False


@dataclass(frozen=True)
class ExpressionAst:
    terms: Tuple[ExprTerm, ...]


_NUMBER = re.compile(r"(\d+\.?\d*(?:[eE][+-]?\d+)?|\.\d+(?:[eE][+-]?\d+)?)")


class _Scanner:
    def __init__(self, text: str):
        self.text = text
        self.pos = 0

    def skip_ws(self):
        while self.pos < len(self.text) and self.text[self.pos].isspace():
            self.pos += 1

    def peek(self) -> str:
        self.skip_ws()
        return self.text[self.pos] if self.pos < len(self.text) else ""

    def take(self, token: str) -> bool:
        self.skip_ws()
        if self.text.startswith(token, self.pos):
            self.pos += len(token)
            return True
        return False

    def number(self) -> float:
        self.skip_ws()
        m = _NUMBER.match(self.text, self.pos)
        if not m:
            raise ParseError("expected a number", self.pos)
        self.pos = m.end()
        return float(m.group(0))


def parse_expression(text: str) -> ExpressionAst:
    """Parse a polynomial in x; raises ParseError with the failing position."""
    sc = _Scanner(text)
    terms = []
    sign = 1.0
    if sc.take("-"):
        sign = -1.0
    elif sc.take("+"):
        pass
    while True:
        terms.append(_parse_term(sc, sign))
        sc.skip_ws()
        if sc.pos >= len(sc.text):
            break
        if sc.take("+"):
            sign = 1.0
        elif sc.take("-"):
            sign = -1.0
        else:
            raise ParseError(f"unexpected character {sc.peek()!r}", sc.pos)
    return ExpressionAst(tuple(terms))


def _parse_term(sc: _Scanner, sign: float) -> ExprTerm:
    sc.skip_ws()
    start = sc.pos
    ch = sc.peek()
    coeff = 1.0
    have_number = False
    if ch and (ch.isdigit() or ch == "."):
        coeff = sc.number()
        have_number = True
        if sc.take("*"):
            pass  # explicit product; an atom must follow
        elif sc.peek() not in ("x", "|"):
            return ExprTerm(sign * coeff, 0.0, False)  # bare literal
    if sc.take("|x|"):
        if not sc.take("^"):
            raise ParseError("|x| requires an explicit power", sc.pos)
        power = sc.number()
        if power <= 0:
            raise ParseError("|x| power must be positive", sc.pos)
        return ExprTerm(sign * coeff, power, True)
    if sc.take("x"):
        power = 1.0
        if sc.take("^"):
            power = sc.number()
            if power < 0 or power != int(power):
                raise ParseError("x power must be a non-negative integer", sc.pos)
        return ExprTerm(sign * coeff, power, False)
    bad = sc.peek()
    if bad and bad.isalpha():
        raise ParseError(f"unknown identifier {bad!r}; only x is allowed", sc.pos)
    if sc.take("|"):
        raise ParseError("malformed absolute-value factor; write |x|^m", sc.pos)
    if have_number:
        raise ParseError("dangling '*' without a factor", sc.pos)
    raise ParseError("expected a term", start)


def _fmt(v: float) -> str:
    if v == int(v) and abs(v) < 1e16:
        return str(int(v))
    return repr(v)


def expression_to_text(ast: ExpressionAst) -> str:
    """Canonical text form; parse(expression_to_text(ast)) == ast."""
    if not ast.terms:
        return "0"
    parts = []
    for i, t in enumerate(ast.terms):
        c = t.coeff
        sign = "-" if math.copysign(1.0, c) < 0 else "+"
        mag = abs(c)
        if t.power == 0 and not t.absolute:
            body = _fmt(mag)
        else:
            atom = f"|x|^{_fmt(t.power)}" if t.absolute else (
                "x" if t.power == 1 else f"x^{_fmt(t.power)}"
            )
            body = atom if mag == 1.0 else f"{_fmt(mag)}*{atom}"
        if i == 0:
            parts.append(body if sign == "+" else f"-{body}")
        else:
            parts.append(f" {sign} {body}")
    return "".join(parts)


def ast_to_potential(ast: ExpressionAst, wall=None) -> Potential:
    terms = []
    const = 0.0
    for t in ast.terms:
        if t.power == 0 and not t.absolute:
            const += t.coeff
        else:
            terms.append(PolyTerm(t.coeff, t.power if t.absolute else int(t.power), t.absolute))
    return Potential(tuple(terms), const, wall).canonical()


def ast_to_superpotential(ast: ExpressionAst) -> Superpotential:
    if any(t.absolute for t in ast.terms):
        raise ParseError("superpotentials must be plain polynomials (no |x| terms)", 0)
    deg = int(max((t.power for t in ast.terms), default=0))
    coeffs = [0.0] * (deg + 1)
    for t in ast.terms:
        coeffs[int(t.power)] += t.coeff
    return Superpotential(tuple(coeffs))


def parse_potential(text: str, wall=None) -> Potential:
    return ast_to_potential(parse_expression(text), wall)


def parse_superpotential(text: str) -> Superpotential:
    return ast_to_superpotential(parse_expression(text))


def potential_to_text(V: Potential) -> str:
    terms = [ExprTerm(t.coeff, float(t.power), t.absolute) for t in V.terms]
    if V.constant != 0.0 or not terms:
        terms.append(ExprTerm(V.constant, 0.0, False))
    return expression_to_text(ExpressionAst(tuple(terms)))


def coeffs_to_text(coeffs) -> str:
    terms = [ExprTerm(c, float(k), False) for k, c in enumerate(coeffs) if c != 0.0]
    if not terms:
        return "0"
    return expression_to_text(ExpressionAst(tuple(sorted(terms, key=lambda t: -t.power))))
