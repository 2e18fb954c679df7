"""Weighted Hardy inequality and truncated Cauchy identities on a disc.

Functions here live in a single complex variable ``w``.  Every check that
needs a vanishing Taylor polynomial verifies it exactly from monomial
degrees before integrating.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction

import numpy as np

from .cauchy import (
    CauchyEvaluator, cauchy_S, cauchy_S_derivative, cauchy_T, cauchy_T_derivative, symbolic_T,
)
from .errors import (
    ConfigurationError, PreconditionError, SingularEvaluationError, UnsupportedError,
)
from .expr import (
    GaussQ, Const, Var, add, as_expr, conj, equivalent, is_zero, lambdify, mul, normalize,
    freeze, normal_form, wirt_d, _key_vars,
)
from .grids import UNIT_DISC, DiscDomain, build_polar_grid, fsum_complex
from .transport import taylor_holo_P2k
from .weights import gradient_exprs

VAR = "w"
HYP_VANISH = "vanishing Taylor polynomial P_k h = 0"
HYP_P = "p > 4 for the weighted Hardy inequality"


def _monomial_degree(m, var):
    """Homogeneity degree of a monomial in (var, conj var, |var|), or None."""
    d = Fraction(0)
    modulus = freeze({((("v", var, False), 1),): GaussQ(1)})
    for g, ex in m:
        if g[0] == "v":
            if g[1] != var:
                continue
            if ex < 0:
                return None
            d += ex
        elif g[0] == "a" and g[1] == modulus:
            if ex < 0:
                return None
            d += Fraction(ex)
        elif _key_vars(g[1]) & {var}:
            return None
    return d


def require_vanishing(h, k: int, var: str = VAR):
    """Check P_k h = 0 exactly: every monomial in (var, conj var, |var|) must
    be homogeneous of degree > k - 1 (degree >= k for polynomials)."""
    h = normalize(as_expr(h))
    if is_zero(h) or k <= 0:
        return
    degs = [_monomial_degree(m, var) for m in normal_form(h)]
    if any(d is None for d in degs):
        raise PreconditionError(
            f"cannot certify P_{k} h = 0: {h} is not a sum of homogeneous terms in "
            f"{var}, conj({var}), |{var}|", hypothesis=HYP_VANISH)
    low = min(degs)
    if low <= k - 1:
        raise PreconditionError(
            f"P_{k} h != 0: {h} has a term of degree {low} <= {k - 1}", hypothesis=HYP_VANISH)


@dataclass
class HardyResult:
    lhs: float
    rhs: float
    ratio: float
    k: int
    p: float
    j: int
    exploratory: bool = False
    grid: dict = field(default_factory=dict)

    def as_dict(self):
        return {"lhs": self.lhs, "rhs": self.rhs, "ratio": self.ratio, "k": self.k,
                "p": self.p, "j": self.j, "exploratory": self.exploratory, "grid": self.grid}


def _grad_sq(h, order, pts):
    sq = np.zeros(pts.shape)
    for d, m in gradient_exprs(h, (VAR,), order):
        sq = sq + m * np.abs(lambdify(d, (VAR,))(pts)) ** 2
    return sq


def hardy_ratio(h, k: int, p: float, j: int = 0, domain: DiscDomain = UNIT_DISC, *,
                n_r=64, n_theta=256, allow_p_le_4=False) -> HardyResult:
    """lhs = int |nabla^j h|^p |w|^(2-(k-j)p),  rhs = int |nabla^k h|^p |w|^2.

    For p <= 4 the inequality is not known to hold; such runs need
    ``allow_p_le_4`` and are flagged exploratory.
    """
    if not 0 <= j <= k:
        raise ConfigurationError("need 0 <= j <= k")
    exploratory = False
    if not p > 4:
        if not allow_p_le_4:
            raise PreconditionError(f"p = {p} is not > 4", hypothesis=HYP_P)
        exploratory = True
    h = normalize(as_expr(h))
    require_vanishing(h, k)
    grid = build_polar_grid(domain, n_r, n_theta)
    pts, wts = grid.points, grid.weights
    aw = np.abs(pts)
    lhs_int = _grad_sq(h, j, pts) ** (p / 2) * aw ** (2 - (k - j) * p)
    rhs_int = _grad_sq(h, k, pts) ** (p / 2) * aw ** 2
    lhs = math.fsum(lhs_int * wts)
    rhs = math.fsum(rhs_int * wts)
    ratio = lhs / rhs if rhs > 0 else (0.0 if lhs == 0 else math.inf)
    return HardyResult(lhs, rhs, ratio, k, p, j, exploratory, grid.metadata())


def random_vanishing_polynomial(k: int, rng: np.random.Generator, span: int = 4, var: str = VAR):
    """sum c_ab w^a conj(w)^b over k <= a+b <= k+span, c_ab uniform in the unit disc
    (rounded to rationals with denominator 2^20)."""
    w, wb = Var(var), conj(Var(var))
    terms = []
    for deg in range(k, k + span + 1):
        for a in range(deg + 1):
            rad = math.sqrt(rng.uniform())
            ang = rng.uniform(0, 2 * math.pi)
            c = GaussQ(Fraction(round(rad * math.cos(ang) * 2 ** 20), 2 ** 20),
                       Fraction(round(rad * math.sin(ang) * 2 ** 20), 2 ** 20))
            terms.append(mul(Const(c), w ** a, wb ** (deg - a)))
    return normalize(add(*terms))


def hardy_battery(k: int, count: int = 200, seed: int = 0):
    rng = np.random.default_rng(seed)
    return [random_vanishing_polynomial(k, rng) for _ in range(count)]


def boundary_flux(h, k: int, p: float, eps: float, n_theta: int = 256) -> float:
    """eps^(3-kp) oint_{|w|=eps} |h|^p dsigma."""
    th = 2 * np.pi * np.arange(n_theta) / n_theta
    vals = np.abs(lambdify(as_expr(h), (VAR,))(eps * np.exp(1j * th))) ** p
    return eps ** (3 - k * p) * math.fsum(vals) * (2 * math.pi * eps / n_theta)


# ---------------------------------------------------------------------------
# truncated Cauchy identities


@dataclass
class IdentityReport:
    which: str
    lhs: complex | None
    rhs: complex | None
    residual: float
    symbolic: bool = False
    points: list = field(default_factory=list)

    def as_dict(self):
        enc = lambda z: None if z is None else [z.real, z.imag]  # noqa: E731
        return {"which": self.which, "lhs": enc(self.lhs), "rhs": enc(self.rhs),
                "residual": self.residual, "symbolic": self.symbolic,
                "points": [[complex(z).real, complex(z).imag] for z in self.points]}


def truncated_cauchy_identity_i(h, k: int, z, *, n_r=64, n_theta=256) -> IdentityReport:
    """|2 pi i z^-k h(z) - [oint h/(zeta^k (zeta-z)) dzeta + 2 pi i T(dbar h / zeta^k)(z)]|.

    The area term uses  int g/(zeta - z) dzeta-bar ^ dzeta = -2 pi i T g.
    """
    z = complex(z)
    if not 0 < abs(z) <= 0.8:
        raise ConfigurationError("identity i is evaluated at 0 < |z| <= 0.8")
    h = normalize(as_expr(h))
    require_vanishing(h, k)
    ev = CauchyEvaluator.build(UNIT_DISC, n_r, n_theta)
    hf = lambdify(h, (VAR,))
    lhs = 2j * math.pi * z ** (-k) * complex(hf(np.array([z]))[0])
    zb, dzb = ev.zeta_b, ev.dzeta_b
    contour = fsum_complex(hf(zb) * dzb / (zb ** k * (zb - z)))
    g = normalize(wirt_d(h, VAR, "anti") * Var(VAR) ** (-k))
    area = 0j if is_zero(g) else cauchy_T(g, ev, z, variable=VAR)
    rhs = contour + 2j * math.pi * area
    return IdentityReport("i", lhs, rhs, abs(lhs - rhs), False, [z])


def _sample_5x5():
    xs = np.linspace(-0.5, 0.5, 5) + 0.07
    return [complex(x, y) for x in xs for y in xs]


def truncated_cauchy_identity_ii(h, k: int, *, numeric=None, n_r=64, n_theta=256) -> IdentityReport:
    """T h - P~_k(T h) = w^k T(w^-k h), with P~_k the holomorphic Taylor
    polynomial of order k-1 at 0.

    Polynomial h is compared symbolically unless ``numeric`` is set; other
    data, or ``numeric=True``, use the max residual over a 5x5 sample.
    """
    h = normalize(as_expr(h))
    require_vanishing(h, k)
    wk = Var(VAR) ** k if k else as_expr(1)
    g = normalize(h * Var(VAR) ** (-k)) if k else h
    if not numeric:
        try:
            th = symbolic_T(h, VAR)
            lhs = normalize(th - taylor_holo_P2k(th, k, VAR))
            rhs = normalize(wk * symbolic_T(g, VAR))
            ok = equivalent(lhs, rhs)
            res = 0.0 if ok else _expr_gap(lhs, rhs)
            return IdentityReport("ii", None, None, res, True, [])
        except (UnsupportedError, SingularEvaluationError):  # fall back to quadrature
            if numeric is False:
                raise
    ev = CauchyEvaluator.build(UNIT_DISC, n_r, n_theta)
    coeffs = [cauchy_T_derivative(h, ev, 0.0, l, variable=VAR) / math.factorial(l) for l in range(k)]
    pts = _sample_5x5()
    worst, wl, wr = -1.0, 0j, 0j
    for z in pts:
        lhs = cauchy_T(h, ev, z, variable=VAR) - sum(c * z ** l for l, c in enumerate(coeffs))
        rhs = z ** k * (0j if is_zero(g) else cauchy_T(g, ev, z, variable=VAR))
        if abs(lhs - rhs) > worst:
            worst, wl, wr = abs(lhs - rhs), lhs, rhs
    return IdentityReport("ii", wl, wr, worst, False, pts)


def _expr_gap(a, b):
    f = lambdify(normalize(a - b), (VAR,))
    return float(np.max(np.abs(f(np.array(_sample_5x5())))))


def identity_2s(h, z, *, n_theta=256) -> IdentityReport:
    """|S(dh)(z) - [d(S h)(z) + S(conj(w)^2 dbar h)(z)]| on the unit circle."""
    z = complex(z)
    h = normalize(as_expr(h))
    ev = CauchyEvaluator.build(UNIT_DISC, 8, n_theta)
    dh = normalize(wirt_d(h, VAR, "holo"))
    corr = normalize(conj(Var(VAR)) ** 2 * wirt_d(h, VAR, "anti"))
    lhs = 0j if is_zero(dh) else cauchy_S(dh, ev, z, variable=VAR)
    rhs = cauchy_S_derivative(h, ev, z, 1, variable=VAR)
    if not is_zero(corr):
        rhs += cauchy_S(corr, ev, z, variable=VAR)
    return IdentityReport("2s", lhs, rhs, abs(lhs - rhs), False, [z])
