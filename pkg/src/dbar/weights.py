"""Weighted Sobolev norms and Muckenhoupt-type constants."""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from itertools import combinations_with_replacement
from math import factorial

import numpy as np

from .errors import ConfigurationError, DomainError, PreconditionError, SingularEvaluationError
from .expr import (
    CExpr, Abs, BranchPow, Conj, IntPow, Add, Mul, Var, as_expr, const, constant_value,
    free_vars, is_zero, lambdify, normal_form, normalize, substitute, wirt_d, _key_vars,
)
from .forms import Form
from .grids import (
    DiscDomain, HartogsDomain, ProductDomain, ProductGrid, UNIT_DISC, build_polar_grid,
    build_product_grid, fsum_complex, _check_finite,
)


@dataclass(frozen=True)
class WeightSpec:
    expr: CExpr
    label: str = ""

    @classmethod
    def of(cls, w, label=None):
        if w is None:
            return None
        if isinstance(w, WeightSpec):
            return w
        if isinstance(w, str):
            from .parser import parse_expr
            return cls(parse_expr(w), label or w)
        e = as_expr(w)
        return cls(e, label or str(e))

    def values(self, env):
        v = np.asarray(lambdify(self.expr, tuple(env))(*env.values()), dtype=complex)
        scale = max(1.0, float(np.max(np.abs(v)))) if v.size else 1.0
        if np.any(np.abs(v.imag) > 1e-12 * scale):
            raise ConfigurationError(f"weight {self.label} is not real valued on the grid")
        if np.any(v.real < -1e-12 * scale):
            raise ConfigurationError(f"weight {self.label} is negative somewhere on the grid")
        return np.maximum(v.real, 0.0)


UNIT_WEIGHT = None


@dataclass
class NormReport:
    total: float
    per_order: list
    k: int
    p: float
    weight: str
    grid: dict = field(default_factory=dict)

    def as_dict(self):
        return {"total": self.total, "per_order": list(self.per_order), "k": self.k,
                "p": self.p, "weight": self.weight, "grid": self.grid}


def derivative_words(variables, order):
    """Multisets of (variable, kind) letters of the given size, with multiplicity."""
    letters = [(v, kind) for v in variables for kind in ("holo", "anti")]
    for combo in combinations_with_replacement(range(len(letters)), order):
        counts = {}
        for c in combo:
            counts[c] = counts.get(c, 0) + 1
        mult = factorial(order)
        for c in counts.values():
            mult //= factorial(c)
        yield [letters[c] for c in combo], mult


def gradient_exprs(h, variables, order, letters=None):
    """[(derivative expression, multiplicity)] of all order-th Wirtinger
    derivatives, sharing work across words with common prefixes."""
    if letters is None:
        letters = [(v, kind) for v in variables for kind in ("holo", "anti")]
    cache = {(): as_expr(h)}
    out = []
    for combo in combinations_with_replacement(range(len(letters)), order):
        d = cache[()]
        for i in range(1, len(combo) + 1):
            key = combo[:i]
            if key not in cache:
                cache[key] = wirt_d(cache[combo[:i - 1]], *_letter(letters[combo[i - 1]]))
            d = cache[key]
            if is_zero(d):
                break
        if is_zero(d):
            continue
        counts = {}
        for c in combo:
            counts[c] = counts.get(c, 0) + 1
        mult = factorial(order)
        for c in counts.values():
            mult //= factorial(c)
        out.append((d, mult))
    return out


def _letter(lt):
    return lt[0], lt[1]


def _components(h):
    if isinstance(h, Form):
        return [v for _, v in h.components]
    return [as_expr(h)]


def _default_variables(h, domain):
    names = set()
    for c in _components(h):
        names |= set(free_vars(c))
    if isinstance(domain, DiscDomain):
        if isinstance(h, Form):
            return h.variables
        if len(names) > 1:
            raise DomainError(f"expression on a disc must have one variable, got {sorted(names)}")
        return (names.pop(),) if names else ("zeta",)
    if isinstance(domain, HartogsDomain):
        return ("z1", "z2")
    if isinstance(h, Form):
        return h.variables
    fam = "w" if any(n.startswith("w") for n in names) or not names else "z"
    return tuple(f"{fam}{j}" for j in range(1, domain.n + 1))


def sobolev_norm(h, domain, k: int, p: float, weight=None, *, variables=None, grid=None,
                 n_r=None, n_theta=None, letters=None) -> NormReport:
    """||h||_{W^{k,p}(domain, mu)} with |nabla^l h|^2 summed over all Wirtinger words.

    ``domain`` is a DiscDomain, ProductDomain or HartogsDomain.  On the
    Hartogs triangle the integral is pulled back to the bidisc through
    (w1, w2) -> (w1 w2, w2), whose real Jacobian is |w2|^2.
    """
    if k < 0 or p < 1:
        raise ConfigurationError("need k >= 0 and p >= 1")
    variables = tuple(variables) if variables else _default_variables(h, domain)
    w = WeightSpec.of(weight)
    comps = _components(h)

    if isinstance(domain, DiscDomain):
        grid = grid or build_polar_grid(domain, n_r or 64, n_theta or 256)
        env_pts = {variables[0]: grid.points}
        wts = grid.weights
        jac = 1.0
        meta = grid.metadata()
        subst = None
    elif isinstance(domain, ProductDomain):
        grid = grid or build_product_grid(domain, n_r or 24, n_theta or 48)
        env_pts = dict(zip(variables, grid.points))
        wts = grid.weights
        jac = 1.0
        meta = grid.metadata()
        subst = None
    elif isinstance(domain, HartogsDomain):
        grid = grid or build_product_grid(ProductDomain.unit(2), n_r or 24, n_theta or 48)
        w1, w2 = grid.points
        env_pts = {"w1": w1, "w2": w2}
        wts = grid.weights
        jac = np.abs(w2) ** 2
        meta = dict(grid.metadata(), chart="bidisc pullback")
        subst = {"z1": Var("w1") * Var("w2"), "z2": Var("w2")}
    else:
        raise DomainError(f"unsupported domain {domain!r}")

    def ev(e):
        if subst is not None:
            e = substitute(e, subst)
        vals = np.asarray(lambdify(e, tuple(env_pts))(*env_pts.values()), dtype=complex)
        if vals.ndim == 0:
            vals = np.full(wts.shape, complex(vals))
        return vals

    mu = 1.0
    if w is not None:
        wexpr = substitute(w.expr, subst) if subst is not None else w.expr
        mu = WeightSpec(wexpr, w.label).values(env_pts)
    per_order = []
    for l in range(k + 1):
        sq = np.zeros(wts.shape)
        for c in comps:
            for d, mult in gradient_exprs(c, variables, l, letters):
                try:
                    vals = ev(d)
                except SingularEvaluationError as exc:
                    raise SingularEvaluationError(f"derivative of order {l} singular on the grid: {exc}") from None
                sq = sq + mult * np.abs(vals) ** 2
        integrand = sq ** (p / 2) * mu * jac
        _check_finite(integrand, env_pts[variables[0]] if not subst else env_pts["w1"])
        per_order.append(float(math.fsum(integrand * wts)))
    total = sum(per_order) ** (1.0 / p)
    return NormReport(total, per_order, k, p, w.label if w else "1", meta)


# ---------------------------------------------------------------------------
# Muckenhoupt constants


@dataclass
class DiscEstimate:
    center: complex
    radius: float
    avg: float
    dual_avg: float
    value: float
    divergent: bool
    raw_value: float


@dataclass
class ApEstimate:
    value: float
    raw_value: float
    p: float
    divergent: bool
    discs: list
    worst: DiscEstimate | None = None

    def as_dict(self):
        return {"value": self.value, "raw_value": self.raw_value, "p": self.p,
                "divergent": self.divergent, "n_discs": len(self.discs),
                "worst_center": None if self.worst is None else [self.worst.center.real, self.worst.center.imag],
                "worst_radius": None if self.worst is None else self.worst.radius}


def singular_points(e, variable: str):
    """Roots of affine bases of moduli/branch/negative powers in ``variable``
    (a heuristic for where a weight degenerates)."""
    pts = set()

    def visit(x):
        if isinstance(x, (Abs, BranchPow, IntPow)):
            base = x.arg if isinstance(x, Abs) else x.base
            if not isinstance(x, IntPow) or x.n < 0 or isinstance(base, Abs):
                r = _affine_root(base.arg if isinstance(base, Abs) else base, variable)
                if r is not None:
                    pts.add(r)
            visit(base)
        elif isinstance(x, (Add,)):
            for t in x.terms:
                visit(t)
        elif isinstance(x, Mul):
            for t in x.factors:
                visit(t)
        elif isinstance(x, Conj):
            visit(x.arg)

    visit(as_expr(e))
    # a bare modulus of a variable, e.g. |w|^2 normalised into w conj(w)
    nf = normal_form(as_expr(e))
    if nf and all(any(g[0] == "v" and g[1] == variable and ex > 0 for g, ex in m) for m in nf):
        pts.add(0j)
    return sorted(pts, key=lambda c: (c.real, c.imag))


def _affine_root(base, variable):
    nf = normal_form(base)
    c0 = nf.get((), None)
    lin = None
    for m, c in nf.items():
        if not m:
            continue
        if len(m) == 1 and m[0][0][0] == "v" and m[0][0][1] == variable and m[0][1] == 1:
            if lin is not None:
                return None
            lin = (c, m[0][0][2])
        else:
            return None
    if lin is None:
        return None
    c, is_conj = lin
    root = -complex(c0 or 0) / complex(c)
    return root.conjugate() if is_conj else root


def _disc_averages(wfun, disc, p, n_r, n_theta, grading):
    g = build_polar_grid(disc, n_r, n_theta, grading)
    mu = wfun(g.points)
    area = disc.area()
    avg = math.fsum(mu * g.weights) / area
    with np.errstate(divide="ignore"):
        dual = np.where(mu > 0, mu, 0.0) ** (1.0 / (1.0 - p))
    if np.any(~np.isfinite(dual)):
        return avg, math.inf
    dual_avg = math.fsum(dual * g.weights) / area
    return avg, dual_avg


def default_disc_family(sing, seed=0, n_random=20):
    rng = np.random.default_rng(seed)
    discs = []
    centers = list(sing) if sing else [0j]
    for c in centers:
        for r in (1.0, 0.1, 0.01):
            discs.append(DiscDomain(c, r))
    while len([d for d in discs if d.center not in centers]) < n_random:
        rad = 10 ** rng.uniform(-2, 0)
        c = complex(*rng.uniform(-1, 1, size=2))
        if abs(c) >= 1:
            continue
        if any(abs(c - s) <= rad for s in sing):
            continue
        discs.append(DiscDomain(c, rad))
    return discs


def ap_constant_estimate(weight, p: float, discs=None, *, variable=None, n_r=96,
                         n_theta=64, grading=2, seed=0, divergence_tol=0.05) -> ApEstimate:
    """sup over discs of avg(mu) * avg(mu^(1/(1-p)))^(p-1).

    The dual average is recomputed with twice the radial resolution; growth
    beyond ``divergence_tol`` marks mu^(1/(1-p)) non-integrable on that disc
    and the estimate becomes +inf (the finite-resolution values are kept in
    ``raw_value``).
    """
    if p <= 1:
        raise ConfigurationError("A_p requires p > 1")
    w = WeightSpec.of(weight)
    names = sorted(free_vars(w.expr))
    if variable is None:
        if len(names) > 1:
            raise ConfigurationError(f"one-variable weight expected, got {names}")
        variable = names[0] if names else "zeta"
    f = lambdify(w.expr, (variable,))

    def wfun(z):
        return _real_weight(f(z), w.label)

    if discs is None:
        discs = default_disc_family(singular_points(w.expr, variable), seed)
    rows = []
    for d in discs:
        avg, dual = _disc_averages(wfun, d, p, n_r, n_theta, grading)
        avg2, dual2 = _disc_averages(wfun, d, p, 2 * n_r, n_theta, grading)
        raw = avg2 * dual2 ** (p - 1) if math.isfinite(dual2) else math.inf
        divergent = (not math.isfinite(dual2)) or abs(dual2 - dual) > divergence_tol * abs(dual)
        val = math.inf if divergent else raw
        rows.append(DiscEstimate(d.center, d.radius, avg2, dual2, val, divergent, raw))
    worst = max(rows, key=lambda r: r.value)
    return ApEstimate(worst.value, max(r.raw_value for r in rows), p,
                      any(r.divergent for r in rows), rows, worst)


def _real_weight(v, label):
    v = np.asarray(v, dtype=complex)
    scale = max(1.0, float(np.max(np.abs(v)))) if v.size else 1.0
    if np.any(np.abs(v.imag) > 1e-12 * scale) or np.any(v.real < -1e-12 * scale):
        raise ConfigurationError(f"weight {label} must be real and nonnegative")
    return np.maximum(v.real, 0.0)


def default_frozen_values(count=16):
    """Interior sample values used to freeze the other coordinates."""
    vals = [0j]
    radii = (0.3, 0.6, 0.9)
    per = (count - 1) // len(radii)
    for r in radii:
        for k in range(per):
            vals.append(r * complex(math.cos(2 * math.pi * (k + 0.5 * (r > 0.5)) / per),
                                    math.sin(2 * math.pi * (k + 0.5 * (r > 0.5)) / per)))
    return vals[:count]


def apstar_constant_estimate(weight, p: float, variables=("w1", "w2"), frozen=None,
                             *, n_r=96, n_theta=64, grading=2, seed=0) -> ApEstimate:
    """A_p^* constant: the A_p constant of every one-variable slice.

    Slices along which the weight vanishes identically are skipped (they
    have measure zero).  Frozen values include the weight's singular points.
    """
    w = WeightSpec.of(weight)
    variables = tuple(variables)
    rows = []
    best = None
    for j, v in enumerate(variables):
        others = [u for u in variables if u != v]
        base_vals = list(frozen) if frozen is not None else default_frozen_values()
        extra = []
        for u in others:
            for s in singular_points(w.expr, u):
                if abs(s) <= 1 + 1e-12:
                    extra.append(s)
        for x in base_vals + extra:
            sub = substitute(w.expr, {u: const(complex(x)) for u in others})
            try:
                if is_zero(sub):
                    continue
            except SingularEvaluationError:
                continue
            try:
                est = ap_constant_estimate(WeightSpec(sub, f"{w.label}|{v}"), p, variable=v,
                                           n_r=n_r, n_theta=n_theta, grading=grading, seed=seed)
            except SingularEvaluationError:
                continue
            rows.append((v, x, est))
            if best is None or est.value > best[2].value:
                best = (v, x, est)
    if best is None:
        raise ConfigurationError("weight vanishes on every slice")
    est = best[2]
    return ApEstimate(est.value, max(r[2].raw_value for r in rows), p,
                      any(r[2].divergent for r in rows), [r[2].worst for r in rows], est.worst)
