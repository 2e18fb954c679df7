"""Text syntax for expressions and differential forms.

Expressions::

    expr   := term (("+" | "-") term)*
    term   := factor (("*" | "/") factor)*
    factor := ("-" | "+") factor | atom ("^" ["-"] int)?
    atom   := number | "i" | "pi" | variable | "(" expr ")"
            | conj(expr) | abs(expr) | pow(expr, real, real, real)

Forms are comma separated ``expr:dz1`` pieces; a 2-form component is written
``expr:dz1^dz2``.
"""
from __future__ import annotations

import math
import re
from fractions import Fraction

from .errors import ParseError
from .expr import (
    VARIABLES, BranchPow, CExpr, Const, GaussQ, IntPow, TWO_PI, Var, add, cabs, conj,
    constant_value, mul, neg, normal_form,
)

_TOKEN = re.compile(r"\s*(?:(?P<num>\d+(?:\.\d*)?(?:[eE][-+]?\d+)?|\.\d+(?:[eE][-+]?\d+)?)"
                    r"|(?P<name>[A-Za-z_][A-Za-z_0-9]*)|(?P<op>[-+*/^(),]))")

_PI = Const(GaussQ(Fraction(math.pi)))


def _tokenize(text):
    pos = 0
    out = []
    full = len(text)
    text = text.rstrip()
    while pos < len(text):
        m = _TOKEN.match(text, pos)
        if not m or m.end() == pos:
            raise ParseError(f"unexpected character {text[pos]!r}", pos)
        kind = m.lastgroup
        out.append((kind, m.group(kind), m.start(kind)))
        pos = m.end()
    out.append(("end", "", full))
    return out


class _Parser:
    def __init__(self, text):
        self.text = text
        self.toks = _tokenize(text)
        self.i = 0

    def peek(self):
        return self.toks[self.i]

    def take(self):
        t = self.toks[self.i]
        self.i += 1
        return t

    def expect(self, value):
        t = self.take()
        if t[1] != value:
            found = t[1] or "end of input"
            raise ParseError(f"expected {value!r}, found {found!r}", t[2])
        return t

    def parse(self):
        e = self.expr()
        t = self.peek()
        if t[0] != "end":
            raise ParseError(f"unexpected token {t[1]!r}", t[2])
        return e

    def expr(self):
        e = self.term()
        while self.peek()[1] in ("+", "-"):
            op = self.take()[1]
            rhs = self.term()
            e = add(e, rhs) if op == "+" else add(e, neg(rhs))
        return e

    def term(self):
        e = self.factor()
        while self.peek()[1] in ("*", "/"):
            op = self.take()[1]
            rhs = self.factor()
            e = mul(e, rhs) if op == "*" else mul(e, IntPow(rhs, -1))
        return e

    def factor(self):
        t = self.peek()
        if t[1] == "-":
            self.take()
            return neg(self.factor())
        if t[1] == "+":
            self.take()
            return self.factor()
        base = self.atom()
        if self.peek()[1] == "^":
            self.take()
            sign = 1
            if self.peek()[1] == "-":
                self.take()
                sign = -1
            t = self.take()
            if t[0] != "num" or not t[1].isdigit():
                raise ParseError("exponent after '^' must be an integer literal "
                                 "(use pow(...) for fractional powers)", t[2])
            base = IntPow(base, sign * int(t[1]))
        return base

    def atom(self):
        kind, val, off = self.take()
        if kind == "num":
            return Const(GaussQ(Fraction(val)))
        if kind == "op" and val == "(":
            e = self.expr()
            self.expect(")")
            return e
        if kind == "name":
            if val == "i":
                return Const(GaussQ(0, 1))
            if val == "pi":
                return _PI
            if val in VARIABLES:
                return Var(val)
            if val in ("conj", "abs"):
                self.expect("(")
                e = self.expr()
                self.expect(")")
                return conj(e) if val == "conj" else cabs(e)
            if val == "pow":
                return self.branch_pow(off)
            raise ParseError(f"unknown identifier {val!r}", off)
        raise ParseError(f"unexpected token {val or 'end of input'!r}", off)

    def real(self):
        start = self.peek()[2]
        e = self.expr()
        v = constant_value(e)
        if v is None or v.imag != 0:
            raise ParseError("expected a real constant", start)
        nf = normal_form(e)
        return nf[()].re if nf else Fraction(0)

    def branch_pow(self, off):
        self.expect("(")
        base = self.expr()
        if self.peek()[1] != ",":
            raise ParseError("pow(...) needs an exponent and an arg range "
                             "pow(base, exponent, argMin, argMax)", self.peek()[2])
        self.take()
        exponent = self.real()
        args = []
        for _ in range(2):
            if self.peek()[1] != ",":
                raise ParseError("branch power is missing its arg range "
                                 "pow(base, exponent, argMin, argMax)", self.peek()[2])
            self.take()
            args.append(float(self.real()))
        self.expect(")")
        lo, hi = args
        if not 0 < hi - lo <= TWO_PI + 1e-9:
            raise ParseError("branch arg sector needs 0 < argMax - argMin <= 2*pi", off)
        return BranchPow(base, exponent, lo, hi)


def parse_expr(text: str) -> CExpr:
    """Parse the textual expression syntax; raises ``ParseError`` with an offset."""
    if not isinstance(text, str):
        raise TypeError("expression text must be a string")
    return _Parser(text).parse()


def _split_top(text, sep=","):
    parts, depth, cur, start = [], 0, [], 0
    for i, ch in enumerate(text):
        if ch == "(":
            depth += 1
        elif ch == ")":
            depth -= 1
        if ch == sep and depth == 0:
            parts.append((start, "".join(cur)))
            cur, start = [], i + 1
        else:
            cur.append(ch)
    parts.append((start, "".join(cur)))
    return parts


_DIFF = re.compile(r"^\s*d\s*([zw])\s*([123])((?:\s*\^\s*d\s*[zw]\s*[123])*)\s*$")


def parse_form(text: str):
    """Parse ``"expr:dz1, expr:dz2"`` into a :class:`~dbar.forms.Form`."""
    from .forms import Form

    comps = {}
    family = None
    for start, piece in _split_top(text):
        if not piece.strip():
            raise ParseError("empty form component", start)
        colon = piece.rfind(":")
        if colon < 0:
            raise ParseError("form component must look like 'expr:dz1'", start)
        body, diff = piece[:colon], piece[colon + 1:]
        m = _DIFF.match(diff)
        if not m:
            raise ParseError(f"bad differential {diff.strip()!r}", start + colon + 1)
        letters = re.findall(r"d\s*([zw])\s*([123])", diff)
        fam = {l for l, _ in letters}
        if len(fam) != 1 or (family and fam != {family}):
            raise ParseError("all differentials must use the same variable family", start + colon + 1)
        family = letters[0][0]
        idx = tuple(int(d) for _, d in letters)
        if list(idx) != sorted(set(idx)):
            raise ParseError("wedge indices must be strictly increasing", start + colon + 1)
        try:
            e = parse_expr(body)
        except ParseError as exc:
            raise ParseError(str(exc).split(" (at offset")[0],
                             start + (exc.offset or 0)) from None
        if idx in comps:
            comps[idx] = add(comps[idx], e)
        else:
            comps[idx] = e
    degrees = {len(k) for k in comps}
    if len(degrees) != 1:
        raise ParseError("all components must have the same degree", 0)
    return Form.from_components(comps, family=family)
