"""Solid and boundary Cauchy transforms on a disc.

``T h(z) = (1/pi) int_D h(zeta) / (z - zeta) dV(zeta)`` inverts dbar on the
disc and ``S h(z) = (1/2 pi i) oint h(zeta) / (zeta - z) dzeta`` is the
boundary Cauchy integral; together ``h = S h + T dbar h``.

The solid transform is computed after subtracting ``h(z)`` (whose transform
is known in closed form) and expanding each circle |zeta - c| = r in a
Fourier series, which integrates the Cauchy kernel in angle exactly.  The
radial integral is split at |z - c|, where the kernel expansion switches.
"""
from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field
from fractions import Fraction
from math import factorial

import numpy as np

from .errors import (
    AccuracyWarning, ContractViolation, DomainError, SingularEvaluationError, UnsupportedError,
)
from .expr import (
    GaussQ, as_expr, from_normal_form, lambdify, nf_diff, normal_form, split_power,
    _acc, _settle,
)
from .grids import (
    DEFAULT_NR, DEFAULT_NTHETA, DiscDomain, PolarGrid, UNIT_DISC, boundary_nodes,
    build_polar_grid, fsum_complex, gl_interval, _check_finite,
)

NEAR_BOUNDARY = 0.95


@dataclass(frozen=True)
class CauchyEvaluator:
    disc: DiscDomain
    n_r: int = DEFAULT_NR
    n_theta: int = DEFAULT_NTHETA
    grid: PolarGrid = field(repr=False, default=None)
    zeta_b: np.ndarray = field(repr=False, default=None)
    dzeta_b: np.ndarray = field(repr=False, default=None)

    @classmethod
    def build(cls, disc: DiscDomain = UNIT_DISC, n_r: int = DEFAULT_NR,
              n_theta: int = DEFAULT_NTHETA):
        grid = build_polar_grid(disc, n_r, n_theta)
        zb, dzb = boundary_nodes(disc, n_theta)
        return cls(disc, n_r, n_theta, grid, zb, dzb)


def _as_callable(h, variable):
    if callable(h) and not hasattr(h, "__dataclass_fields__"):
        return h
    f = lambdify(as_expr(h), (variable,))
    return f


def _check_inside(ev, z):
    if not abs(z - ev.disc.center) < ev.disc.radius:
        raise DomainError(f"evaluation point {z!r} is not inside the disc")


def _fourier_transform(h, ev, z):
    """T h(z) by the polar Fourier method (h callable, already regular)."""
    c, R = ev.disc.center, ev.disc.radius
    zr = complex(z - c)
    rho = abs(zr)
    N = ev.n_theta
    e = np.exp(2j * np.pi * np.arange(N) / N)
    half = N // 2
    total = 0j
    parts = []
    if rho > 0:
        r, w = gl_interval(0.0, rho, ev.n_r)
        vals = np.asarray(h(c + r[:, None] * e[None, :]), dtype=complex)
        _check_finite(vals, c + r[:, None] * e[None, :])
        hat = np.fft.fft(vals, axis=1) / N
        n = np.arange(half)
        neg = hat[:, (-n) % N]
        ratio = (r[:, None] / zr) ** n[None, :]
        J = -(1.0 / zr) * np.sum(neg * ratio, axis=1)
        parts.append(r * J * w)
    r, w = gl_interval(rho, R, ev.n_r)
    vals = np.asarray(h(c + r[:, None] * e[None, :]), dtype=complex)
    _check_finite(vals, c + r[:, None] * e[None, :])
    hat = np.fft.fft(vals, axis=1) / N
    m = np.arange(1, half)
    ratio = (zr / r[:, None]) ** (m[None, :] - 1)
    J = (1.0 / r) * np.sum(hat[:, 1:half] * ratio, axis=1)
    parts.append(r * J * w)
    total = fsum_complex(np.concatenate(parts))
    return -2.0 * total


def cauchy_T(h, ev: CauchyEvaluator, z, *, variable="zeta", h_at_z=None) -> complex:
    """Solid Cauchy transform at one interior point.

    ``h`` is a CExpr in ``variable``, a callable on complex arrays, or an
    array of values on ``ev.grid`` nodes.  For node values the fixed grid is
    used with the same singularity subtraction (``h_at_z`` required).
    """
    z = complex(z)
    _check_inside(ev, z)
    c = ev.disc.center
    if isinstance(h, np.ndarray):
        if h_at_z is None:
            raise ContractViolation("node-sampled input needs h_at_z")
        vals = h.ravel() - h_at_z
        pts = ev.grid.points
        _check_finite(vals, pts)
        d = z - pts
        with np.errstate(divide="ignore", invalid="ignore"):
            k = np.where(d != 0, vals / d, 0)
        return fsum_complex(k * ev.grid.weights) / math.pi + h_at_z * np.conj(z - c)
    f = _as_callable(h, variable)
    hz = complex(np.asarray(f(np.array([z])))[0]) if h_at_z is None else complex(h_at_z)
    if not math.isfinite(abs(hz)):
        raise DomainError(f"integrand not finite at the evaluation point {z!r}")
    reg = lambda zeta: np.asarray(f(zeta), dtype=complex) - hz  # noqa: E731
    return _fourier_transform(reg, ev, z) + hz * np.conj(z - c)


def cauchy_T_many(h, ev, zs, **kw):
    return np.array([cauchy_T(h, ev, z, **kw) for z in np.ravel(zs)]).reshape(np.shape(zs))


def _warn_near(ev, z):
    if abs(z - ev.disc.center) > NEAR_BOUNDARY * ev.disc.radius:
        warnings.warn(f"boundary Cauchy integral evaluated at {z!r}, close to the circle; "
                      "trapezoid accuracy degrades there", AccuracyWarning, stacklevel=3)


def cauchy_S(h, ev: CauchyEvaluator, z, *, variable="zeta") -> complex:
    """Boundary Cauchy integral at an interior point by the trapezoid rule."""
    z = complex(z)
    _check_inside(ev, z)
    _warn_near(ev, z)
    f = _as_callable(h, variable)
    vals = np.asarray(f(ev.zeta_b), dtype=complex)
    _check_finite(vals, ev.zeta_b)
    # subtracting h(z) (S 1 = 1) makes the rule exact on polynomials in zeta
    try:
        hz = complex(np.asarray(f(np.array([z])), dtype=complex).ravel()[0])
    except (SingularEvaluationError, ArithmeticError, ValueError):
        hz = complex("nan")
    if not math.isfinite(abs(hz)):
        return fsum_complex(vals * ev.dzeta_b / (ev.zeta_b - z)) / (2j * math.pi)
    return fsum_complex((vals - hz) * ev.dzeta_b / (ev.zeta_b - z)) / (2j * math.pi) + hz


def cauchy_S_derivative(h, ev: CauchyEvaluator, z, order: int = 1, *, variable="zeta") -> complex:
    """d^order/dz^order of S h, by differentiating the kernel."""
    z = complex(z)
    _check_inside(ev, z)
    _warn_near(ev, z)
    f = _as_callable(h, variable)
    vals = np.asarray(f(ev.zeta_b), dtype=complex)
    k = factorial(order) / (ev.zeta_b - z) ** (order + 1)
    return fsum_complex(vals * ev.dzeta_b * k) / (2j * math.pi)


def boundary_conj_term(h, ev, z, power: int, *, variable="zeta") -> complex:
    """(1/2 pi i) oint h(zeta) / (zeta - z)^power dzeta-bar."""
    f = _as_callable(h, variable)
    vals = np.asarray(f(ev.zeta_b), dtype=complex)
    return fsum_complex(vals * np.conj(ev.dzeta_b) / (ev.zeta_b - complex(z)) ** power) / (2j * math.pi)


def cauchy_T_derivative(h, ev: CauchyEvaluator, z, order: int, *, variable="zeta") -> complex:
    """d^t/dz^t of T h at z for a symbolic ``h``.

    Uses  d^t T h = T(d^t h) - sum_{m<t} (t-1-m)!/(2 pi i) oint d^m h / (zeta-z)^(t-m) dzeta-bar.
    """
    if order == 0:
        return cauchy_T(h, ev, z, variable=variable)
    nf = normal_form(as_expr(h))
    derivs = [nf]
    for _ in range(order):
        derivs.append(nf_diff(derivs[-1], variable, False))
    out = cauchy_T(from_normal_form(derivs[order]), ev, z, variable=variable)
    for m in range(order):
        g = from_normal_form(derivs[m])
        out -= factorial(order - 1 - m) * boundary_conj_term(g, ev, z, order - m, variable=variable)
    return out


# ---------------------------------------------------------------------------
# slices of functions on product domains


def _slice_callable(h, variables, j, w):
    f = lambdify(as_expr(h), variables) if not callable(h) else h
    w = [complex(x) for x in w]

    def g(zeta):
        zeta = np.asarray(zeta, dtype=complex)
        args = [np.full(zeta.shape, x) if i != j else zeta for i, x in enumerate(w)]
        return f(*args)

    return g


def slice_T(j: int, h, evs, w, variables) -> complex:
    """T in the j-th coordinate (0-based) with the others frozen at w."""
    return cauchy_T(_slice_callable(h, variables, j, w), evs[j], w[j])


def slice_S(j: int, h, evs, w, variables) -> complex:
    return cauchy_S(_slice_callable(h, variables, j, w), evs[j], w[j])


# ---------------------------------------------------------------------------
# closed forms on a disc centred at 0: monomials zeta^a conj(zeta)^b


def _radius_q(radius):
    rq = Fraction(radius).limit_denominator(10 ** 12) if not isinstance(radius, Fraction) else radius
    return rq


def symbolic_T(h, variable: str, radius=1) -> "CExpr":
    """Exact T in ``variable`` on the disc of given radius centred at 0.

    Each monomial v^a conj(v)^b (b >= 0, a + b >= -1) maps to
    (v^a conj(v)^(b+1) - [a - b >= 1] R^(2b+2) v^(a-b-1)) / (b + 1);
    coefficients must not depend on ``variable``.
    """
    R = GaussQ(_radius_q(radius))
    out = {}
    hol, anti = ("v", variable, False), ("v", variable, True)
    for m, c in normal_form(as_expr(h)).items():
        a, b, rest = split_power(m, variable)
        if b < 0 or a + b < -1:
            raise UnsupportedError("monomial not integrable for the closed-form transform")
        base = dict(rest)
        t1 = dict(base)
        if a:
            t1[hol] = a
        t1[anti] = b + 1
        for mm, cc in _settle(t1):
            _acc(out, mm, c * cc / (b + 1))
        if a - b >= 1:
            t2 = dict(base)
            if a - b - 1:
                t2[hol] = a - b - 1
            coef = -(R ** (2 * b + 2)) / (b + 1)
            for mm, cc in _settle(t2):
                _acc(out, mm, c * cc * coef)
    return from_normal_form(out)


def symbolic_S(h, variable: str, radius=1) -> "CExpr":
    """Exact S on the circle |v| = R: v^a conj(v)^b -> R^(2b) v^(a-b) if a >= b else 0."""
    R = GaussQ(_radius_q(radius))
    out = {}
    hol = ("v", variable, False)
    for m, c in normal_form(as_expr(h)).items():
        a, b, rest = split_power(m, variable)
        if a < b:
            continue
        t = dict(rest)
        if a - b:
            t[hol] = a - b
        for mm, cc in _settle(t):
            _acc(out, mm, c * cc * R ** (2 * b))
    return from_normal_form(out)
