"""Solution operators on the Hartogs triangle H = {|z1| < |z2| < 1}.

``solve_hartogs_basic`` transports the data to the bidisc, solves there and
pulls the solution back; it loses a weight |z2|^(kp).  ``solve_hartogs_optimal``
first removes the Taylor polynomial of the data at the origin (solved
separately on the bidisc in z), then subtracts from the bidisc solution its
holomorphic Taylor part along w2 = 0, which gives unweighted W^{k,p} bounds
for p > 4.
"""
from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field
from fractions import Fraction
from math import factorial

import numpy as np

from .cauchy import CauchyEvaluator, boundary_conj_term, cauchy_T
from .errors import (
    ContractViolation, HypothesisWarning, PreconditionError, SingularEvaluationError,
)
from .expr import (
    ZERO, CExpr, Var, as_expr, branch_pow, cabs, conj, is_zero, lambdify, normalize, substitute, wirt_d,
    wirt_d_word,
)
from .forms import Form, dbar, dbar_closed_check
from .grids import (
    HARTOGS, DiscDomain, ProductDomain, UNIT_DISC, build_polar_grid, build_product_grid,
    fsum_complex,
)
from .product import ProductSolution, solve_product
from .transport import (
    W, Z, pullback_psi, pushforward_phi, taylor_holo_P2k, taylor_P2k, taylor_Pk,
)
from .weights import WeightSpec, gradient_exprs, sobolev_norm

BIDISC = ProductDomain.unit(2)


@dataclass
class HartogsSolution:
    mode: str
    u: CExpr | None
    data: Form
    k: int | None = None
    p: float | None = None
    provenance: dict = field(default_factory=dict)
    checks: dict = field(default_factory=dict)
    evaluator: object = field(default=None, repr=False)

    @property
    def symbolic(self):
        return self.u is not None

    def __call__(self, z1, z2):
        z1 = np.asarray(z1, dtype=complex)
        z2 = np.asarray(z2, dtype=complex)
        if self.u is not None:
            return lambdify(self.u, Z)(z1, z2)
        return self.evaluator(z1, z2)

    def as_dict(self):
        return {"mode": self.mode, "k": self.k, "p": self.p,
                "solution": None if self.u is None else str(self.u),
                "symbolic": self.symbolic,
                "provenance": {k: str(v) for k, v in self.provenance.items()},
                "checks": dict(self.checks)}


def hartogs_sample_points(count=48, seed=1):
    rng = np.random.default_rng(seed)
    r2 = rng.uniform(0.1, 0.95, count)
    r1 = r2 * rng.uniform(0.05, 0.95, count)
    return np.stack([r1 * np.exp(2j * np.pi * rng.uniform(size=count)),
                     r2 * np.exp(2j * np.pi * rng.uniform(size=count))], axis=1)


def _require_closed_on_H(f: Form):
    if f.degree != 1 or f.variables != Z:
        raise ContractViolation("data on the Hartogs triangle is a (0,1)-form in z1, z2")
    rep = dbar_closed_check(f, points=hartogs_sample_points())
    if not rep.closed:
        raise PreconditionError(
            f"data is not dbar-closed on the Hartogs triangle: residual {rep.max_residual:.3e} "
            f"at {rep.worst_point}", hypothesis="dbar-closed data (dbar f = 0)")
    return rep


def _pushed_evaluator(sol: ProductSolution):
    def ev(z1, z2):
        z1, z2 = np.broadcast_arrays(np.asarray(z1, complex), np.asarray(z2, complex))
        pts = np.stack([(z1 / z2).ravel(), z2.ravel()], axis=1)
        return sol.evaluate(pts).reshape(z1.shape)
    return ev


def solve_hartogs_basic(f: Form, *, method="auto", n_r=24, n_theta=128) -> HartogsSolution:
    """T f = (NW solution of psi^* f) o phi."""
    _require_closed_on_H(f)
    g = pullback_psi(f)
    sol = solve_product(g, BIDISC, method=method, n_r=n_r, n_theta=n_theta, check_closed=False)
    prov = {"pullback": g}
    checks = {}
    if sol.symbolic:
        prov["u_star"] = sol.expr
        u = pushforward_phi(sol.expr)
        checks["dbar_u_eq_f"] = dbar(Form.function(u, Z)).equivalent(f)
        return HartogsSolution("basic", u, f, provenance=prov, checks=checks)
    return HartogsSolution("basic", None, f, provenance=prov, checks=checks,
                           evaluator=_pushed_evaluator(sol))


def _check_p(p):
    if p is None:
        return
    if p <= 2:
        raise PreconditionError(f"p = {p} is outside the admissible range p > 2",
                                hypothesis="p > 4 (optimal operator)")
    if p <= 4:
        warnings.warn(f"p = {p} <= 4: the construction runs but the W^(k,p) bound is only "
                      "proven for p > 4", HypothesisWarning, stacklevel=3)


def solve_hartogs_optimal(f: Form, k: int, p: float, *, method="auto", n_r=24,
                          n_theta=128) -> HartogsSolution:
    """T_k f = phi^* u_tilde + u_k with stage provenance."""
    if k < 1:
        raise PreconditionError("k must be at least 1", hypothesis="k >= 1")
    _check_p(p)
    _require_closed_on_H(f)
    Pf = taylor_Pk(f, k)
    uk_sol = solve_product(Pf, ProductDomain.unit(2), method=method, n_r=n_r,
                           n_theta=n_theta, check_closed=False) if not Pf.is_zero() else None
    ft = pullback_psi(f - Pf)
    prov = {"Pk_f": Pf, "f_tilde": ft}
    checks = {"P2k_f_tilde_zero": taylor_P2k(ft, k).is_zero()}
    if not checks["P2k_f_tilde_zero"]:
        raise PreconditionError("pulled-back remainder has nonvanishing Taylor part along w2 = 0",
                                hypothesis="vanishing Taylor part of the transported data")
    ustar = solve_product(ft, BIDISC, method=method, n_r=n_r, n_theta=n_theta,
                          check_closed=False) if not ft.is_zero() else None
    uk_expr = ZERO if uk_sol is None else (uk_sol.expr if uk_sol.symbolic else None)
    if uk_sol is not None and uk_sol.symbolic:
        prov["u_k"] = uk_sol.expr
    elif uk_sol is None:
        prov["u_k"] = ZERO
    if ustar is None or ustar.symbolic:
        us = ZERO if ustar is None else ustar.expr
        ut = normalize(us - taylor_holo_P2k(us, k))
        prov["u_star"] = us
        prov["u_tilde"] = ut
        checks["P2k_u_tilde_zero"] = is_zero(taylor_P2k(ut, k))
        checks["dbar_u_tilde_eq_f_tilde"] = dbar(Form.function(ut, W)).equivalent(ft)
        if uk_expr is not None:
            u = normalize(pushforward_phi(ut) + uk_expr)
            checks["dbar_u_eq_f"] = dbar(Form.function(u, Z)).equivalent(f)
            return HartogsSolution("optimal", u, f, k, p, prov, checks)
        push_ut = lambdify(pushforward_phi(ut), Z)
        uk_ev = _pushed_identity(uk_sol)
        return HartogsSolution("optimal", None, f, k, p, prov, checks,
                               evaluator=lambda z1, z2: push_ut(z1, z2) + uk_ev(z1, z2))
    # numeric bidisc solution: subtract the traces computed from the data
    taylor = numeric_holo_taylor(ft, k, n_theta=n_theta)

    def ut_eval(w1, w2):
        pts = np.stack([np.ravel(w1), np.ravel(w2)], axis=1)
        return ustar.evaluate(pts).reshape(np.shape(w1)) - taylor(w1, w2)

    uk_ev = _pushed_identity(uk_sol) if uk_sol is not None else (lambda z1, z2: 0 * z1)

    def total(z1, z2):
        z1, z2 = np.broadcast_arrays(np.asarray(z1, complex), np.asarray(z2, complex))
        return ut_eval(z1 / z2, z2) + (uk_ev(z1, z2) if uk_expr is None else
                                       lambdify(uk_expr, Z)(z1, z2))

    return HartogsSolution("optimal", None, f, k, p, prov, checks, evaluator=total)


def _pushed_identity(sol: ProductSolution):
    """Evaluate a bidisc solution given in z coordinates directly."""
    def ev(z1, z2):
        z1, z2 = np.broadcast_arrays(np.asarray(z1, complex), np.asarray(z2, complex))
        return sol.evaluate(np.stack([z1.ravel(), z2.ravel()], axis=1)).reshape(z1.shape)
    return ev


# ---------------------------------------------------------------------------
# traces of the bidisc solution along w2 = 0


def trace_coefficients(f_tilde: Form, t: int, l: int, w1, *, k: int | None = None,
                       n_r=32, n_theta=128, area_grid=(64, 256)):
    """d^t_{w1} d^l_{w2} u*(w1, 0) for the NW solution u* of ``f_tilde``.

    Assembled from the boundary term
        (l!/2 pi i) oint d^t_{w1} T_1 f1(w1, zeta) zeta^-(l+1) dzeta
    and the area term  -(l!/pi) int d^t_{w1} f2(w1, zeta) zeta^-(l+1) dV,
    which converges because f_tilde vanishes to order > l along w2 = 0.
    """
    if f_tilde.variables != W or f_tilde.degree != 1:
        raise ContractViolation("trace_coefficients expects a (0,1)-form in w1, w2")
    k = l + 1 if k is None else k
    if l > k - 1:
        raise PreconditionError("trace order l must be below k", hypothesis="l <= k - 1")
    if not taylor_P2k(f_tilde, l + 1).is_zero():
        raise PreconditionError("data must vanish to the trace order along w2 = 0; the "
                                "area integral is not integrable otherwise",
                                hypothesis="vanishing Taylor part along w2 = 0")
    w1 = np.atleast_1d(np.asarray(w1, dtype=complex))
    if f_tilde.is_zero():
        return np.zeros(w1.shape, complex)
    f1, f2 = f_tilde.comp((1,)), f_tilde.comp((2,))
    d1 = [f1]
    for _ in range(t):
        d1.append(wirt_d(d1[-1], "w1", "holo"))
    F1 = [lambdify(d, W) for d in d1]
    F2 = lambdify(wirt_d_word(f2, [("w1", "holo")] * t), W)
    ev = CauchyEvaluator.build(UNIT_DISC, n_r, n_theta)
    grid = build_polar_grid(UNIT_DISC, *area_grid)
    zb, dzb = ev.zeta_b, ev.dzeta_b
    lf = factorial(l)
    out = np.empty(w1.shape, complex)
    for i, a in enumerate(w1):
        hv = np.empty(zb.size, complex)
        for b, zeta in enumerate(zb):
            def sl(F, zeta=zeta):
                return lambda x: F(x, np.full(np.shape(x), zeta))
            val = cauchy_T(sl(F1[t]), ev, a)
            for m in range(t):
                val -= factorial(t - 1 - m) * boundary_conj_term(sl(F1[m]), ev, a, t - m)
            hv[b] = val
        A3 = lf * fsum_complex(hv * dzb / zb ** (l + 1)) / (2j * math.pi)
        vals = F2(np.full(grid.points.shape, a), grid.points) / grid.points ** (l + 1)
        A12 = -lf * fsum_complex(vals * grid.weights) / math.pi
        out[i] = A3 + A12
    return out


def numeric_holo_taylor(f_tilde: Form, k: int, n_theta=128):
    """Callable (w1, w2) -> sum_{l<k} w2^l d^l_{w2} u*(w1, 0) / l!."""
    def fn(w1, w2):
        w1, w2 = np.broadcast_arrays(np.asarray(w1, complex), np.asarray(w2, complex))
        out = np.zeros(w1.shape, complex)
        for l in range(k):
            c = trace_coefficients(f_tilde, 0, l, w1.ravel(), k=k, n_theta=n_theta).reshape(w1.shape)
            out = out + c * w2 ** l / factorial(l)
        return out
    return fn


def symbolic_trace(u_star, t: int, l: int) -> CExpr:
    d = wirt_d_word(u_star, [("w1", "holo")] * t + [("w2", "holo")] * l)
    return normalize(substitute(d, {"w2": 0}))


# ---------------------------------------------------------------------------
# refined integrability along w2 = 0


def refined_integrals(F, k: int, p: float, *, holomorphic_only=False, n_r=24, n_theta=48):
    """{(t, s): int |D^t_{w1} D^s_{w2} F|^p |w2|^(2 + (s-k)p) dV} on the bidisc.

    ``F`` is a CExpr or a Form in (w1, w2).  With ``holomorphic_only`` the
    derivatives are d/dw only (as for the solution), else all Wirtinger words.
    """
    comps = [v for _, v in F.components] if isinstance(F, Form) else [as_expr(F)]
    grid = build_product_grid(BIDISC, n_r, n_theta)
    w1, w2 = grid.points
    wts = grid.weights
    aw2 = np.abs(w2)
    out = {}
    kinds = ("holo",) if holomorphic_only else ("holo", "anti")
    for t in range(k + 1):
        for s in range(k + 1 - t):
            sq = np.zeros(wts.shape)
            for c in comps:
                for d1, m1 in gradient_exprs(c, ("w1",), t, [("w1", kd) for kd in kinds]):
                    for d, m2 in gradient_exprs(d1, ("w2",), s, [("w2", kd) for kd in kinds]):
                        v = np.asarray(lambdify(d, W)(w1, w2), complex)
                        sq = sq + m1 * m2 * np.abs(v) ** 2
            integrand = sq ** (p / 2) * aw2 ** (2 + (s - k) * p)
            out[(t, s)] = float(math.fsum(integrand * wts))
    return out


def weight_loss_study(family, k: int, p: float, *, n_r=12, n_theta=24, refine=False):
    """Rows comparing the weighted basic bound with the unweighted optimal one.

    ``family`` is a list of (label, Form).  With ``refine`` each norm is
    recomputed after doubling both grid counts and the relative drift of
    the optimal ratio is reported.
    """
    weight = WeightSpec(branch_pow(cabs(Var("z2")), Fraction(k) * Fraction(p).limit_denominator(10 ** 6)),
                        f"|z2|^{k * p:g}")
    grids = [(n_r, n_theta)] + ([(2 * n_r, 2 * n_theta)] if refine else [])
    rows = []
    for label, f in family:
        basic = solve_hartogs_basic(f)
        opt = solve_hartogs_optimal(f, k, p)
        if basic.u is None or opt.u is None:
            raise ContractViolation("weight-loss study needs symbolic solutions")
        vals = []
        for nr, nt in grids:
            nf = sobolev_norm(f, HARTOGS, k, p, n_r=nr, n_theta=nt).total
            nb = sobolev_norm(basic.u, HARTOGS, k, p, weight, n_r=nr, n_theta=nt).total
            no = sobolev_norm(opt.u, HARTOGS, k, p, n_r=nr, n_theta=nt).total
            vals.append((nf, nb, no))
        nf, nb, no = vals[0]
        row = {"member": label, "basic_solution": str(basic.u),
               "optimal_solution": str(opt.u), "data_norm": nf,
               "basic_weighted_norm": nb, "optimal_norm": no,
               "basic_ratio": nb / nf, "optimal_ratio": no / nf,
               "n_r": n_r, "n_theta": n_theta}
        if refine:
            rf, rb, ro = vals[-1]
            row["optimal_ratio_refined"] = ro / rf
            row["basic_ratio_refined"] = rb / rf
            row["drift"] = abs(no / nf - ro / rf) / (ro / rf)
        rows.append(row)
    return rows
