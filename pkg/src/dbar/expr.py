"""Symbolic expressions in complex variables and their conjugates.

Expressions are immutable trees (``CExpr``).  Every tree has a canonical
*normal form*: a finite sum of Laurent monomials with exact Gaussian rational
coefficients, where the generators are the variables, their conjugates and
opaque atoms (branch powers ``pow(g, a)``, moduli powers ``|g|^a`` and
negative powers of non-monomial bases).  Wirtinger derivatives, equality
testing and numeric evaluation all go through the normal form.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction
from functools import lru_cache
from numbers import Rational

import numpy as np

from .errors import ConfigurationError, SingularEvaluationError, UnsupportedError

VARIABLES = ("z", "w", "z1", "z2", "z3", "w1", "w2", "w3", "zeta")
TWO_PI = 2.0 * math.pi
CUT_TOL = 1e-12


# ---------------------------------------------------------------------------
# exact Gaussian rationals


class GaussQ:
    """Exact complex number with rational real and imaginary parts."""

    __slots__ = ("re", "im")

    def __init__(self, re=0, im=0):
        self.re = Fraction(re)
        self.im = Fraction(im)

    @classmethod
    def of(cls, x) -> "GaussQ":
        if isinstance(x, GaussQ):
            return x
        if isinstance(x, (int, Rational)):
            return cls(Fraction(x))
        if isinstance(x, (float, np.floating)):
            if not math.isfinite(x):
                raise SingularEvaluationError(f"non-finite constant {x!r}")
            return cls(Fraction(float(x)))
        if isinstance(x, (complex, np.complexfloating)):
            x = complex(x)
            if not (math.isfinite(x.real) and math.isfinite(x.imag)):
                raise SingularEvaluationError(f"non-finite constant {x!r}")
            return cls(Fraction(x.real), Fraction(x.imag))
        raise TypeError(f"cannot convert {type(x).__name__} to a constant")

    def __add__(self, o):
        o = GaussQ.of(o)
        return GaussQ(self.re + o.re, self.im + o.im)

    __radd__ = __add__

    def __neg__(self):
        return GaussQ(-self.re, -self.im)

    def __sub__(self, o):
        return self + (-GaussQ.of(o))

    def __mul__(self, o):
        o = GaussQ.of(o)
        return GaussQ(self.re * o.re - self.im * o.im, self.re * o.im + self.im * o.re)

    __rmul__ = __mul__

    def inverse(self):
        d = self.re * self.re + self.im * self.im
        if d == 0:
            raise SingularEvaluationError("division by zero")
        return GaussQ(self.re / d, -self.im / d)

    def __truediv__(self, o):
        return self * GaussQ.of(o).inverse()

    def __pow__(self, n: int):
        if n < 0:
            return self.inverse() ** (-n)
        out, base = GaussQ(1), self
        while n:
            if n & 1:
                out = out * base
            base = base * base
            n >>= 1
        return out

    def conj(self):
        return GaussQ(self.re, -self.im)

    def is_zero(self):
        return self.re == 0 and self.im == 0

    def __bool__(self):
        return not self.is_zero()

    def __eq__(self, o):
        try:
            o = GaussQ.of(o)
        except TypeError:
            return NotImplemented
        return self.re == o.re and self.im == o.im

    def __hash__(self):
        return hash((self.re, self.im))

    def __complex__(self):
        return complex(float(self.re), float(self.im))

    def __repr__(self):
        return f"GaussQ({self.re}, {self.im})"

    def __str__(self):
        if self.im == 0:
            return _frac_str(self.re)
        if self.re == 0:
            return f"{_frac_str(self.im)}*i"
        return f"{_frac_str(self.re)}+{_frac_str(self.im)}*i"


def _frac_str(q: Fraction) -> str:
    if q.denominator == 1:
        return str(q.numerator)
    return f"{q.numerator}/{q.denominator}"


# ---------------------------------------------------------------------------
# expression tree


class CExpr:
    """Base class of expression nodes.  Nodes compare structurally."""

    __slots__ = ()

    def __add__(self, o):
        return add(self, as_expr(o))

    def __radd__(self, o):
        return add(as_expr(o), self)

    def __sub__(self, o):
        return add(self, neg(as_expr(o)))

    def __rsub__(self, o):
        return add(as_expr(o), neg(self))

    def __mul__(self, o):
        return mul(self, as_expr(o))

    def __rmul__(self, o):
        return mul(as_expr(o), self)

    def __truediv__(self, o):
        return mul(self, IntPow(as_expr(o), -1))

    def __rtruediv__(self, o):
        return mul(as_expr(o), IntPow(self, -1))

    def __neg__(self):
        return neg(self)

    def __pow__(self, n):
        if isinstance(n, int) or (isinstance(n, Fraction) and n.denominator == 1):
            return IntPow(self, int(n))
        raise TypeError("use branch_pow for non-integer exponents")

    def conj(self):
        return Conj(self)

    def __str__(self):
        return to_string(self)


@dataclass(frozen=True, eq=True)
class Const(CExpr):
    value: GaussQ


@dataclass(frozen=True, eq=True)
class Var(CExpr):
    name: str

    def __post_init__(self):
        if self.name not in VARIABLES:
            raise ValueError(f"unknown variable {self.name!r}")


@dataclass(frozen=True, eq=True)
class Conj(CExpr):
    arg: CExpr


@dataclass(frozen=True, eq=True)
class Abs(CExpr):
    arg: CExpr


@dataclass(frozen=True, eq=True)
class Add(CExpr):
    terms: tuple


@dataclass(frozen=True, eq=True)
class Mul(CExpr):
    factors: tuple


@dataclass(frozen=True, eq=True)
class IntPow(CExpr):
    base: CExpr
    n: int


@dataclass(frozen=True, eq=True)
class BranchPow(CExpr):
    """``|b|^a exp(i a arg b)`` with ``arg b`` taken in the sector ``(arg_min, arg_max)``.

    The sector has opening at most 2*pi.  A full 2*pi sector is an ordinary
    branch with its cut on the ray ``arg = arg_min``; a narrower sector also
    declares every base value outside it singular.
    """

    base: CExpr
    exponent: Fraction
    arg_min: float
    arg_max: float

    def __post_init__(self):
        span = self.arg_max - self.arg_min
        if not 0 < span <= TWO_PI + 1e-9:
            raise ValueError("branch arg sector must satisfy 0 < argMax - argMin <= 2*pi")


ZERO = Const(GaussQ(0))
ONE = Const(GaussQ(1))
I = Const(GaussQ(0, 1))


def as_expr(x) -> CExpr:
    if isinstance(x, CExpr):
        return x
    return Const(GaussQ.of(x))


def const(x) -> Const:
    return Const(GaussQ.of(x))


def var(name: str) -> Var:
    return Var(name)


def conj(e) -> CExpr:
    return Conj(as_expr(e))


def cabs(e) -> CExpr:
    return Abs(as_expr(e))


def branch_pow(base, exponent, arg_min=-math.pi, arg_max=None) -> BranchPow:
    if arg_max is None:
        arg_max = arg_min + TWO_PI
    return BranchPow(as_expr(base), Fraction(exponent), float(arg_min), float(arg_max))


def add(*terms) -> CExpr:
    flat = []
    for t in terms:
        if isinstance(t, Add):
            flat.extend(t.terms)
        elif not (isinstance(t, Const) and t.value.is_zero()):
            flat.append(t)
    if not flat:
        return ZERO
    if len(flat) == 1:
        return flat[0]
    return Add(tuple(flat))


def mul(*factors) -> CExpr:
    flat = []
    for f in factors:
        if isinstance(f, Mul):
            flat.extend(f.factors)
        elif isinstance(f, Const) and f.value.is_zero():
            return ZERO
        elif not (isinstance(f, Const) and f.value == 1):
            flat.append(f)
    if not flat:
        return ONE
    if len(flat) == 1:
        return flat[0]
    return Mul(tuple(flat))


def neg(e) -> CExpr:
    if isinstance(e, Const):
        return Const(-e.value)
    return mul(Const(GaussQ(-1)), e)


# ---------------------------------------------------------------------------
# printing

_PREC_ADD, _PREC_MUL, _PREC_POW, _PREC_ATOM = 1, 2, 3, 4


def _prec(e):
    if isinstance(e, Add):
        return _PREC_ADD
    if isinstance(e, Mul):
        return _PREC_MUL
    if isinstance(e, IntPow):
        return _PREC_POW
    if isinstance(e, Const):
        v = e.value
        if v.im == 0 and v.re >= 0 and v.re.denominator == 1:
            return _PREC_ATOM
        return _PREC_ADD
    return _PREC_ATOM


def _wrap(e, level):
    s = to_string(e)
    return f"({s})" if _prec(e) < level else s


def _float_str(x: float) -> str:
    for name, val in (("pi", math.pi), ("-pi", -math.pi), ("pi/2", math.pi / 2),
                      ("3*pi/2", 1.5 * math.pi), ("-pi/2", -math.pi / 2), ("0", 0.0),
                      ("2*pi", TWO_PI)):
        if x == val:
            return name
    return repr(float(x))


def to_string(e: CExpr) -> str:
    if isinstance(e, Const):
        return str(e.value)
    if isinstance(e, Var):
        return e.name
    if isinstance(e, Conj):
        return f"conj({to_string(e.arg)})"
    if isinstance(e, Abs):
        return f"abs({to_string(e.arg)})"
    if isinstance(e, Add):
        out = to_string(e.terms[0])
        for t in e.terms[1:]:
            s = _wrap(t, _PREC_MUL)
            out += (" - " + s[1:]) if s.startswith("-") else (" + " + s)
        return out
    if isinstance(e, Mul):
        parts = [_wrap(f, _PREC_POW) for f in e.factors]
        if parts[0] == "(-1)" and len(parts) > 1:
            return "-" + "*".join(parts[1:])
        return "*".join(parts)
    if isinstance(e, IntPow):
        return f"{_wrap(e.base, _PREC_ATOM)}^{e.n}"
    if isinstance(e, BranchPow):
        return (f"pow({to_string(e.base)}, {_frac_str(e.exponent)}, "
                f"{_float_str(e.arg_min)}, {_float_str(e.arg_max)})")
    raise TypeError(type(e))


# ---------------------------------------------------------------------------
# normal form
#
# A normal form is a dict {monomial: GaussQ}.  A monomial is a sorted tuple of
# (generator, exponent) pairs.  Generators:
#   ("v", name, is_conj)        exponent: nonzero int
#   ("b", base_key, lo, hi)     exponent: non-integer Fraction (branch power)
#   ("a", base_key)             exponent: Fraction, not an even integer (|g|^e)
#   ("P", base_key)             exponent: negative int, base not a monomial
# base_key is the frozen normal form of the base (see ``freeze``).


def freeze(nf: dict) -> tuple:
    return tuple(sorted(nf.items(), key=lambda kv: _mono_key(kv[0])))


@lru_cache(maxsize=None)
def _gen_key(g) -> str:
    return repr(g)


@lru_cache(maxsize=None)
def _mono_key(m) -> tuple:
    deg = 0
    for g, e in m:
        if g[0] == "v":
            deg += e
    return (deg, tuple((_gen_key(g), e) for g, e in m))


def _const_nf(c) -> dict:
    c = GaussQ.of(c)
    return {} if c.is_zero() else {(): c}


def _acc(out: dict, m, c):
    v = out.get(m)
    v = c if v is None else v + c
    if v.is_zero():
        out.pop(m, None)
    else:
        out[m] = v


def nf_add(a: dict, b: dict) -> dict:
    out = dict(a)
    for m, c in b.items():
        _acc(out, m, c)
    return out


def nf_scale(a: dict, c) -> dict:
    c = GaussQ.of(c)
    if c.is_zero():
        return {}
    return {m: v * c for m, v in a.items()}


@lru_cache(maxsize=200000)
def _combine(m1, m2):
    """Product of two monomials, returned as a frozen normal form."""
    exps = dict(m1)
    for g, e in m2:
        exps[g] = exps.get(g, 0) + e
    return _settle(exps)


def _settle(exps: dict):
    """Turn a generator->exponent map into a frozen normal form."""
    plain = {}
    extra = [{(): GaussQ(1)}]
    for g, e in exps.items():
        if e == 0:
            continue
        kind = g[0]
        if kind == "v":
            plain[g] = int(e)
        elif kind == "b":
            e = Fraction(e)
            if e.denominator == 1:
                extra.append(nf_pow(dict(g[1]), int(e)))
            else:
                plain[g] = e
        elif kind == "a":
            e = Fraction(e)
            if e.denominator == 1 and e.numerator % 2 == 0:
                base = dict(g[1])
                extra.append(nf_pow(nf_mul(base, nf_conj(base)), e.numerator // 2))
            else:
                plain[g] = e
        elif kind == "P":
            e = int(e)
            if e >= 0:
                extra.append(nf_pow(dict(g[1]), e))
            else:
                plain[g] = e
    mono = tuple(sorted(plain.items(), key=lambda ge: _gen_key(ge[0])))
    out = {mono: GaussQ(1)}
    for x in extra[1:]:
        out = nf_mul(out, x)
    return freeze(out)


def nf_mul(a: dict, b: dict) -> dict:
    if len(a) > len(b):
        a, b = b, a
    out = {}
    for m1, c1 in a.items():
        for m2, c2 in b.items():
            c = c1 * c2
            if not m1:
                _acc(out, m2, c)
                continue
            if not m2:
                _acc(out, m1, c)
                continue
            for m, cc in _combine(m1, m2):
                _acc(out, m, c * cc)
    return out


def nf_pow(a: dict, n: int) -> dict:
    if n < 0:
        if not a:
            raise SingularEvaluationError("zero raised to a negative power")
        if len(a) == 1:
            (m, c), = a.items()
            exps = {g: e * n for g, e in m}
            return nf_scale(dict(_settle(exps)), c ** n)
        return {((("P", freeze(a)), n),): GaussQ(1)}
    if len(a) == 1 and n > 1:
        # raise generator exponents directly, so |g|^3 stays one atom
        (m, c), = a.items()
        return nf_scale(dict(_settle({g: e * n for g, e in m})), c ** n)
    out = {(): GaussQ(1)}
    base = a
    while n:
        if n & 1:
            out = nf_mul(out, base)
        n >>= 1
        if n:
            base = nf_mul(base, base)
    return out


@lru_cache(maxsize=100000)
def _conj_key(key):
    return freeze(nf_conj(dict(key)))


@lru_cache(maxsize=100000)
def _conj_mono(m):
    exps = {}
    for g, e in m:
        kind = g[0]
        if kind == "v":
            ng = ("v", g[1], not g[2])
        elif kind == "b":
            ng = ("b", _conj_key(g[1]), -g[3], -g[2])
        elif kind == "a":
            ng = g
        else:
            ng = ("P", _conj_key(g[1]))
        exps[ng] = e
    return tuple(sorted(exps.items(), key=lambda ge: _gen_key(ge[0])))


def nf_conj(a: dict) -> dict:
    return {_conj_mono(m): c.conj() for m, c in a.items()}


def _is_const(a: dict) -> bool:
    return all(not m for m in a)


def _const_value(a: dict) -> GaussQ:
    return a.get((), GaussQ(0))


def branch_value(base, a, lo, hi):
    """Numeric branch power; raises on the cut or at a pole."""
    base = np.asarray(base, dtype=complex)
    a = float(a)
    mod = np.abs(base)
    theta = lo + np.mod(np.angle(base) - lo, TWO_PI)
    nz = mod > 0
    hi = min(hi, lo + TWO_PI)
    on_cut = nz & ((theta - lo < CUT_TOL) | (hi - theta < CUT_TOL))
    if np.any(on_cut):
        idx = np.argwhere(on_cut)[0]
        raise SingularEvaluationError(
            f"branch power evaluated on or beyond its cut (arg sector ({lo!r}, {hi!r})) "
            f"at base value {complex(base.reshape(on_cut.shape)[tuple(idx)])!r}")
    if a < 0 and not np.all(nz):
        raise SingularEvaluationError("branch power with negative exponent at base 0")
    with np.errstate(divide="ignore", invalid="ignore"):
        out = np.where(nz, mod ** a * np.exp(1j * a * theta), 0.0)
    return out


def _abs_key(base: dict):
    k1 = freeze(base)
    k2 = freeze(nf_conj(base))
    return min(k1, k2, key=repr)


def nf_abs_pow(base: dict, e: Fraction) -> dict:
    """Normal form of ``|base|^e``."""
    e = Fraction(e)
    if e == 0:
        return {(): GaussQ(1)}
    if not base:
        if e < 0:
            raise SingularEvaluationError("modulus of zero raised to a negative power")
        return {}
    if _is_const(base):
        v = abs(complex(_const_value(base)))
        if e.denominator == 1:
            c = _const_value(base)
            m2 = c * c.conj()
            if e.numerator % 2 == 0:
                return _const_nf(m2 ** (e.numerator // 2))
        return _const_nf(v ** float(e))
    if len(base) == 1:
        # |c m| = |c| |m| with |m| split generator-wise where safe
        (m, c), = base.items()
        if all(g[0] in ("v", "a") for g, _ in m):
            out = nf_abs_pow({(): c}, e)
            for g, ge in m:
                if g[0] == "v":
                    gen = ("a", _abs_key({((("v", g[1], False), 1),): GaussQ(1)}))
                    out = nf_mul(out, dict(_settle({gen: Fraction(ge) * e})))
                else:
                    out = nf_mul(out, dict(_settle({g: Fraction(ge) * e})))
            return out
    return dict(_settle({("a", _abs_key(base)): e}))


def nf_branch(base: dict, a: Fraction, lo: float, hi: float) -> dict:
    a = Fraction(a)
    if a.denominator == 1:
        return nf_pow(base, int(a))
    if not base:
        if a < 0:
            raise SingularEvaluationError("branch power with negative exponent at base 0")
        return {}
    if _is_const(base):
        v = branch_value(complex(_const_value(base)), a, lo, hi)
        return _const_nf(complex(v))
    if len(base) == 1:
        (m, c), = base.items()
        positive = c.im == 0 and c.re > 0 and all(g[0] == "a" for g, _ in m)
        t0 = lo + (-lo) % TWO_PI
        arg0_inside = lo + CUT_TOL < t0 < hi - CUT_TOL
        if positive and arg0_inside:
            out = _const_nf(float(c.re) ** float(a)) if c != 1 else {(): GaussQ(1)}
            exps = {g: Fraction(ge) * a for g, ge in m}
            return nf_mul(out, dict(_settle(exps)))
    return dict(_settle({("b", freeze(base), float(lo), float(hi)): a}))


@lru_cache(maxsize=100000)
def _normalize_cached(e: CExpr) -> tuple:
    return freeze(_normalize(e))


def normal_form(e: CExpr) -> dict:
    return dict(_normalize_cached(e))


def _normalize(e: CExpr) -> dict:
    if isinstance(e, Const):
        return _const_nf(e.value)
    if isinstance(e, Var):
        return {((("v", e.name, False), 1),): GaussQ(1)}
    if isinstance(e, Conj):
        return nf_conj(normal_form(e.arg))
    if isinstance(e, Add):
        out = {}
        for t in e.terms:
            for m, c in normal_form(t).items():
                _acc(out, m, c)
        return out
    if isinstance(e, Mul):
        out = {(): GaussQ(1)}
        for f in e.factors:
            out = nf_mul(out, normal_form(f))
            if not out:
                break
        return out
    if isinstance(e, IntPow):
        return nf_pow(normal_form(e.base), e.n)
    if isinstance(e, Abs):
        return nf_abs_pow(normal_form(e.arg), Fraction(1))
    if isinstance(e, BranchPow):
        return nf_branch(normal_form(e.base), e.exponent, e.arg_min, e.arg_max)
    raise TypeError(type(e))


def from_normal_form(nf: dict) -> CExpr:
    items = sorted(nf.items(), key=lambda kv: _mono_key(kv[0]))
    terms = []
    for m, c in items:
        factors = [] if c == 1 else [Const(c)]
        for g, ex in m:
            factors.append(_gen_expr(g, ex))
        terms.append(mul(*factors) if factors else Const(c))
    return add(*terms)


def _gen_expr(g, ex) -> CExpr:
    kind = g[0]
    if kind == "v":
        base = Var(g[1])
        if g[2]:
            base = Conj(base)
        return base if ex == 1 else IntPow(base, int(ex))
    base = from_normal_form(dict(g[1]))
    if kind == "b":
        return BranchPow(base, Fraction(ex), g[2], g[3])
    if kind == "a":
        ex = Fraction(ex)
        if ex.denominator == 1:
            return Abs(base) if ex == 1 else IntPow(Abs(base), int(ex))
        return BranchPow(Abs(base), ex, -math.pi, math.pi)
    return IntPow(base, int(ex))


def normalize(e: CExpr) -> CExpr:
    """Canonical expanded form of ``e``."""
    return from_normal_form(normal_form(as_expr(e)))


def equivalent(a, b) -> bool:
    return normal_form(as_expr(a)) == normal_form(as_expr(b))


def is_zero(e) -> bool:
    return not normal_form(as_expr(e))


def constant_value(e) -> complex | None:
    nf = normal_form(as_expr(e))
    if not _is_const(nf):
        return None
    return complex(_const_value(nf))


# ---------------------------------------------------------------------------
# free variables


@lru_cache(maxsize=100000)
def _key_vars(key) -> frozenset:
    out = set()
    for m, _ in key:
        out |= _mono_vars(m)
    return frozenset(out)


@lru_cache(maxsize=100000)
def _mono_vars(m) -> frozenset:
    out = set()
    for g, _ in m:
        if g[0] == "v":
            out.add(g[1])
        else:
            out |= _key_vars(g[1])
    return frozenset(out)


def free_vars(e) -> frozenset:
    return _key_vars(freeze(normal_form(as_expr(e))))


def nf_free_vars(nf: dict) -> frozenset:
    out = set()
    for m in nf:
        out |= _mono_vars(m)
    return frozenset(out)


# ---------------------------------------------------------------------------
# Wirtinger derivatives


def _replace_exp(m, g, new_e):
    out = [(h, e) for h, e in m if h != g]
    if new_e != 0:
        out.append((g, new_e))
    return tuple(sorted(out, key=lambda ge: _gen_key(ge[0])))


@lru_cache(maxsize=100000)
def _d_key(key, name, anti):
    return freeze(nf_diff(dict(key), name, anti))


@lru_cache(maxsize=200000)
def _d_mono(m, name, anti):
    out = {}
    for g, e in m:
        kind = g[0]
        if kind == "v":
            if g[1] == name and g[2] == anti:
                rest = _replace_exp(m, g, e - 1)
                _acc(out, rest, GaussQ(e))
            continue
        if name not in _key_vars(g[1]):
            continue
        base = dict(g[1])
        if kind == "a":
            # d |g|^e = e/2 |g|^(e-2) d(g conj g)
            dbase = nf_diff(nf_mul(base, nf_conj(base)), name, anti)
            coef = GaussQ(Fraction(e) / 2)
            rest = dict(_settle(dict(_replace_exp(m, g, Fraction(e) - 2))))
        else:
            dbase = nf_diff(base, name, anti)
            coef = GaussQ(e)
            rest = dict(_settle(dict(_replace_exp(m, g, e - 1))))
        if not dbase:
            continue
        for mm, cc in nf_mul(nf_scale(rest, coef), dbase).items():
            _acc(out, mm, cc)
    return freeze(out)


def nf_diff(nf: dict, name: str, anti: bool) -> dict:
    out = {}
    for m, c in nf.items():
        if not m or name not in _mono_vars(m):
            continue
        for mm, cc in _d_mono(m, name, anti):
            _acc(out, mm, c * cc)
    return out


def wirt_d(e, name: str, kind: str = "holo") -> CExpr:
    """Wirtinger derivative d/d name (``kind='holo'``) or d/d conj(name) (``'anti'``)."""
    if kind not in ("holo", "anti"):
        raise ValueError("kind must be 'holo' or 'anti'")
    if name not in VARIABLES:
        raise ValueError(f"unknown variable {name!r}")
    return from_normal_form(nf_diff(normal_form(as_expr(e)), name, kind == "anti"))


def wirt_d_word(e, word) -> CExpr:
    """Apply a sequence of (name, kind) derivatives."""
    nf = normal_form(as_expr(e))
    for name, kind in word:
        nf = nf_diff(nf, name, kind == "anti")
    return from_normal_form(nf)


# ---------------------------------------------------------------------------
# substitution


def substitute(e, mapping: dict) -> CExpr:
    """Replace variables by expressions; ``conj(v)`` becomes ``conj(mapping[v])``."""
    mapping = {k: as_expr(v) for k, v in mapping.items()}
    return _subs(normalize(as_expr(e)), mapping)


def _subs(e, mapping):
    if isinstance(e, Var):
        return mapping.get(e.name, e)
    if isinstance(e, Const):
        return e
    if isinstance(e, Conj):
        return Conj(_subs(e.arg, mapping))
    if isinstance(e, Abs):
        return Abs(_subs(e.arg, mapping))
    if isinstance(e, Add):
        return Add(tuple(_subs(t, mapping) for t in e.terms))
    if isinstance(e, Mul):
        return Mul(tuple(_subs(f, mapping) for f in e.factors))
    if isinstance(e, IntPow):
        return IntPow(_subs(e.base, mapping), e.n)
    if isinstance(e, BranchPow):
        return BranchPow(_subs(e.base, mapping), e.exponent, e.arg_min, e.arg_max)
    raise TypeError(type(e))


# ---------------------------------------------------------------------------
# numeric evaluation


def evaluate(e, env: dict):
    """Evaluate on numpy arrays (broadcast) or scalars.

    ``env`` maps variable names to complex values.  Raises
    ``SingularEvaluationError`` on a branch cut or a pole.
    """
    nf = normal_form(as_expr(e))
    return eval_nf(nf, env)


def eval_nf(nf: dict, env: dict):
    arrays = {k: np.asarray(v, dtype=complex) for k, v in env.items()}
    shape = np.broadcast_shapes(*(a.shape for a in arrays.values())) if arrays else ()
    ev = _NFEvaluator(arrays, shape)
    out = ev.nf(nf)
    if shape == ():
        return complex(out)
    return np.array(np.broadcast_to(out, shape))


class _NFEvaluator:
    def __init__(self, env, shape):
        self.env = env
        self.shape = shape
        self.pows = {}
        self.keys = {}

    def var(self, name, is_conj):
        try:
            v = self.env[name]
        except KeyError:
            raise ValueError(f"no value given for variable {name!r}") from None
        return np.conj(v) if is_conj else v

    def nf(self, nf):
        out = np.zeros(self.shape, dtype=complex)
        for m, c in nf.items():
            term = complex(c)
            for g, e in m:
                term = term * self.gen(g, e)
            out = out + term
        return out

    def base(self, key):
        v = self.keys.get(key)
        if v is None:
            v = self.nf(dict(key))
            self.keys[key] = v
        return v

    def gen(self, g, e):
        k = (g, e)
        v = self.pows.get(k)
        if v is not None:
            return v
        kind = g[0]
        if kind == "v":
            x = self.var(g[1], g[2])
            if e < 0 and np.any(x == 0):
                raise SingularEvaluationError(f"pole of {g[1]}^{e} at {g[1]} = 0")
            v = x ** e
        elif kind == "b":
            v = branch_value(self.base(g[1]), e, g[2], g[3])
        elif kind == "a":
            x = np.abs(self.base(g[1]))
            if e < 0 and np.any(x == 0):
                raise SingularEvaluationError("modulus raised to a negative power at 0")
            v = x ** float(e)
        else:
            x = self.base(g[1])
            if np.any(x == 0):
                raise SingularEvaluationError("division by zero")
            v = x ** e
        self.pows[k] = v
        return v


def lambdify(e, variables):
    """Return ``f(*arrays)`` evaluating ``e`` with the given variable order."""
    nf = normal_form(as_expr(e))
    variables = tuple(variables)
    extra = nf_free_vars(nf) - set(variables)
    if extra:
        raise ConfigurationError(f"expression has unbound variables {sorted(extra)}")

    def f(*args):
        return eval_nf(nf, dict(zip(variables, args)))

    return f


# ---------------------------------------------------------------------------
# monomial inspection used by closed-form operators


def split_power(nf_mono, name: str):
    """Return (a, b, rest_monomial) separating name^a conj(name)^b.

    Raises UnsupportedError if the remaining generators depend on ``name``.
    """
    a = b = 0
    rest = []
    for g, e in nf_mono:
        if g[0] == "v" and g[1] == name:
            if g[2]:
                b = e
            else:
                a = e
        else:
            if g[0] != "v" and name in _key_vars(g[1]):
                raise UnsupportedError(f"coefficient depends on {name} through a nonpolynomial atom")
            rest.append((g, e))
    return a, b, tuple(rest)


def total_degree_range(e, names):
    """(min, max) total degree in the given variables and conjugates, or None
    if the expression is not a Laurent polynomial in them."""
    nf = normal_form(as_expr(e))
    lo = hi = None
    for m in nf:
        d = 0
        for g, ex in m:
            if g[0] == "v" and g[1] in names:
                if ex < 0:
                    return None
                d += ex
            elif g[0] != "v" and _key_vars(g[1]) & set(names):
                return None
        lo = d if lo is None else min(lo, d)
        hi = d if hi is None else max(hi, d)
    return lo, hi
