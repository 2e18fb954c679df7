"""Divergence experiments showing that the regularity gains are sharp.

Each experiment builds a solution symbolically, integrates a derivative
energy over a region with an excised delta-ball around the singular point
and fits the growth of the energy as delta shrinks.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction

import numpy as np
from scipy.stats import linregress

from .cauchy import symbolic_T
from .errors import ConfigurationError, ContractViolation
from .expr import (
    Var, branch_pow, cabs, conj, equivalent, lambdify, normalize, wirt_d_word,
)
from .forms import Form
from .grids import (
    UNIT_DISC, annulus_rule, build_polar_grid, clipped_annulus_rule, gl_interval, log_breaks,
)
from .hartogs import solve_hartogs_basic
from .product import solve_product
from .weights import gradient_exprs

CUT = (math.pi / 2, 3 * math.pi / 2)
Z = ("z1", "z2")


def _frac(x):
    return Fraction(x).limit_denominator(10 ** 6) if not isinstance(x, Fraction) else x


def _check_schedule(deltas, upper):
    deltas = sorted((float(d) for d in deltas), reverse=True)
    if len(deltas) < 4:
        raise ConfigurationError("delta schedule too coarse for a fit: need at least 4 points")
    if not all(0 < d < upper for d in deltas) or len(set(deltas)) != len(deltas):
        raise ConfigurationError(f"deltas must be distinct and lie in (0, {upper})")
    return deltas


def contour_z1(expr, r, z2, n=32):
    """oint_{|z1| = r} expr(z1, z2) dz1 for arrays r, z2 of equal shape."""
    f = lambdify(expr, Z)
    r = np.asarray(r, float)
    z2 = np.asarray(z2, complex)
    th = 2 * np.pi * np.arange(n) / n
    e = np.exp(1j * th)
    z1 = r[..., None] * e
    vals = f(z1, np.broadcast_to(z2[..., None], z1.shape))
    return np.sum(vals * 1j * z1, axis=-1) * (2 * np.pi / n)


def _fit_log(deltas, energies):
    x = np.log(1.0 / np.asarray(deltas))
    res = linregress(x, np.asarray(energies))
    return float(res.slope), float(res.intercept), float(res.rvalue ** 2)


def _shell_energies(density, rho_breaks, r_in, r_out, r_nodes, r_w, n_rho, n_phi):
    """Integral of density(r, z2) over (r-interval) x shell, per radial segment."""
    out = []
    for a, b in zip(rho_breaks[:-1], rho_breaks[1:]):
        pts, w = clipped_annulus_rule(1.0, [a, b], r_in, r_out, n_rho, n_phi)
        if pts.size == 0:
            out.append(0.0)
            continue
        R = np.repeat(r_nodes[:, None], pts.size, axis=1)
        Zp = np.broadcast_to(pts[None, :], R.shape)
        vals = density(R, Zp)
        out.append(float(math.fsum((vals * (r_w[:, None] * w[None, :])).ravel())))
    return out


@dataclass
class DivergenceReport:
    name: str
    rows: list
    slope: float
    intercept: float
    r2: float
    half_change: float
    checks: dict = field(default_factory=dict)
    info: dict = field(default_factory=dict)

    def as_dict(self):
        return {"name": self.name, "rows": self.rows, "log_fit_slope": self.slope,
                "log_fit_intercept": self.intercept, "r2": self.r2,
                "half_exponent_last_change": self.half_change, "checks": self.checks,
                "info": self.info}


def kerzman_counterexample(k: int = 1, p: float = 5, deltas=(1e-1, 1e-2, 1e-3, 1e-4), *,
                           n_rho=24, n_phi=32, n_r=12, n_contour=32) -> DivergenceReport:
    """f = (z2 - 1)^(k - 2/p) dzbar1 on the Hartogs triangle.

    v(r, z2) = oint_{|z1|=r} u dz1 for the basic solution u, on
    U = (0, 1/2) x {1/2 < |z2| < 1}.  The energy int_U |d^k v|^p over
    |z2 - 1| > delta grows like log(1/delta); with exponent p/2 it converges.
    """
    if k < 1 or not p > 2:
        raise ConfigurationError("need k >= 1 and p > 2")
    deltas = _check_schedule(deltas, 0.5)
    a = Fraction(k) - Fraction(2) / _frac(p)
    g = branch_pow(Var("z2") - 1, a, *CUT)
    f = Form.from_components({(1,): g}, variables=Z)
    sol = solve_hartogs_basic(f)
    u = sol.u

    rng = np.random.default_rng(7)
    rs = rng.uniform(0.05, 0.45, 40)
    z2s = rng.uniform(0.55, 0.95, 40) * np.exp(1j * rng.uniform(0, 2 * np.pi, 40))
    v = contour_z1(u, rs, z2s, n_contour)
    gv = lambdify(g, Z)(0 * z2s, z2s)
    literal = 2 * np.pi * rs ** 2 * 1j * z2s * gv
    corrected = 2 * np.pi * rs ** 2 * 1j * gv
    err_literal = float(np.max(np.abs(v - literal)))
    err_corrected = float(np.max(np.abs(v - corrected)))

    dku = normalize(wirt_d_word(u, [("z2", "holo")] * k))
    r_nodes, r_w = gl_interval(0.0, 0.5, n_r)

    def density(expo):
        def fn(R, Zp):
            dv = contour_z1(dku, R, Zp, n_contour)
            return np.abs(dv) ** expo
        return fn

    shells = sorted(deltas)
    far = [deltas[0]] + [b for b in (0.5, 1.5, 2.0) if b > deltas[0]]
    out = {}
    for tag, expo in (("p", p), ("half", p / 2)):
        dens = density(expo)
        far_e = sum(_shell_energies(dens, far, 0.5, 1.0, r_nodes, r_w, n_rho, n_phi))
        sh = _shell_energies(dens, shells, 0.5, 1.0, r_nodes, r_w, n_rho, n_phi)
        # cumulative energies from the largest delta down
        e, acc = [], far_e
        e.append(acc)
        for s in reversed(sh):
            acc += s
            e.append(acc)
        out[tag] = e
    rows = [{"delta": d, "integral": ep, "integral_half_exponent": eh}
            for d, ep, eh in zip(deltas, out["p"], out["half"])]
    slope, icp, r2 = _fit_log(deltas, out["p"])
    half = out["half"]
    change = abs(half[-1] - half[-2]) / abs(half[-1])
    checks = {"v_matches_literal_formula": err_literal <= 1e-6,
              "v_matches_cauchy_value": err_corrected <= 1e-6,
              "divergent_fit": slope > 0 and r2 >= 0.99,
              "half_exponent_converges": change < 0.01}
    info = {"solution": str(u), "v_error_literal": err_literal,
            "v_error_cauchy": err_corrected, "k": k, "p": p,
            "grid": {"n_rho": n_rho, "n_phi": n_phi, "n_r": n_r, "n_contour": n_contour}}
    return DivergenceReport("kerzman", rows, slope, icp, r2, change, checks, info)


def weighted_counterexample(k: int = 1, p: float = 3, s: float = 1.5, eps: float = 1.0,
                            deltas=(1e-2, 1e-3, 1e-4, 1e-5), *, n_rho=24, n_phi=32,
                            n_r=12, n_contour=32) -> DivergenceReport:
    """f = (z2 - 1)^(k - s) dzbar1 on the bidisc with mu = |z2 - 1|^(s(p-1)).

    The L^(p+eps)(U, mu) energy of d^k v, U = (0,1) x unit disc, behaves like
    delta^(2 - s(1+eps)) over |z2 - 1| > delta.
    """
    s_q, eps_q = _frac(s), _frac(eps)
    if not (Fraction(2) / (1 + eps_q) < s_q < 2) or s_q == 1:
        raise ConfigurationError("s must lie in (2/(1+eps), 2) and differ from 1")
    if k < 1 or not p > 1:
        raise ConfigurationError("need k >= 1 and p > 1")
    deltas = _check_schedule(deltas, 1.0)
    g = branch_pow(Var("z2") - 1, Fraction(k) - s_q, *CUT)
    f = Form.from_components({(1,): g}, variables=Z)
    sol = solve_product(f)
    u = sol.expr
    dku = normalize(wirt_d_word(u, [("z2", "holo")] * k))
    coef = 2 * math.pi * 1j
    for j in range(k):
        coef *= float(k - j - s_q)

    rng = np.random.default_rng(11)
    rs = rng.uniform(0.05, 0.95, 40)
    z2s = rng.uniform(0.05, 0.95, 40) * np.exp(1j * rng.uniform(0, 2 * np.pi, 40))
    dv = contour_z1(dku, rs, z2s, n_contour)
    closed = coef * rs ** 2 * lambdify(branch_pow(Var("z2") - 1, -s_q, *CUT), Z)(0 * z2s, z2s)
    err = float(np.max(np.abs(dv - closed)))

    mu = lambdify(branch_pow(cabs(Var("z2") - 1), s_q * (_frac(p) - 1)), Z)
    expo = float(_frac(p) + eps_q)
    r_nodes, r_w = gl_interval(0.0, 1.0, n_r)

    def dens(R, Zp):
        d = contour_z1(dku, R, Zp, n_contour)
        return np.abs(d) ** expo * np.real(mu(0 * Zp, Zp))

    shells = sorted(deltas)
    far = [deltas[0]] + [b for b in (0.5, 1.0, 2.0) if b > deltas[0]]
    far_e = sum(_shell_energies(dens, far, 0.0, 1.0, r_nodes, r_w, n_rho, n_phi))
    sh = _shell_energies(dens, shells, 0.0, 1.0, r_nodes, r_w, n_rho, n_phi)
    sh_desc = list(reversed(sh))  # shell between deltas[i] and deltas[i+1]
    energies, acc = [far_e], far_e
    for x in sh_desc:
        acc += x
        energies.append(acc)
    inner = np.asarray(deltas[1:])
    fit = linregress(np.log(inner), np.log(np.asarray(sh_desc)))
    expected = 2 - float(s_q) * (1 + float(eps_q))
    rows = [{"delta": d, "integral": e} for d, e in zip(deltas, energies)]
    rel = abs(fit.slope - expected) / abs(expected)
    checks = {"dv_matches_closed_form": err <= 1e-6, "exponent_within_5pct": rel <= 0.05}
    info = {"solution": str(u), "dv_error": err, "fitted_exponent": float(fit.slope),
            "expected_exponent": expected, "exponent_rel_error": rel,
            "shell_energies": sh_desc, "k": k, "p": p, "s": float(s_q), "eps": float(eps_q)}
    return DivergenceReport("weighted", rows, float(fit.slope), float(fit.intercept),
                            float(fit.rvalue ** 2), float("nan"), checks, info)


def t1_optimality(k: int = 1, p: float = 5, deltas=(1e-1, 1e-2, 1e-3, 1e-4), *,
                  n_r=16, n_theta=32, n_rho=16, n_ang=32) -> DivergenceReport:
    """h = |w2|^(k - 2/p) on the bidisc: T_1 h = conj(w1) h, whose W^{k,p}
    energy over delta < |w2| < 1 grows like log(1/delta)."""
    if k < 1 or not p > 2:
        raise ConfigurationError("need k >= 1 and p > 2")
    deltas = _check_schedule(deltas, 1.0)
    a = Fraction(k) - Fraction(2) / _frac(p)
    h = branch_pow(cabs(Var("w2")), a)
    t1h = symbolic_T(h, "w1")
    expected = normalize(conj(Var("w1")) * h)
    grid1 = build_polar_grid(UNIT_DISC, n_r, n_theta)
    derivs = gradient_exprs(t1h, ("w1", "w2"), k)
    W = ("w1", "w2")

    def energy(expo, breaks):
        pts, wts = annulus_rule(0j, breaks, n_rho, n_ang)
        A, B = np.meshgrid(grid1.points, pts, indexing="ij")
        sq = np.zeros(A.shape)
        for d, m in derivs:
            sq = sq + m * np.abs(lambdify(d, W)(A, B)) ** 2
        return float(math.fsum((sq ** (expo / 2) * np.multiply.outer(grid1.weights, wts)).ravel()))

    out = {}
    for tag, expo in (("p", p), ("half", p / 2)):
        far = energy(expo, [deltas[0], 1.0]) if deltas[0] < 1 else 0.0
        e, acc = [far], far
        for hi, lo in zip(deltas[:-1], deltas[1:]):
            acc += energy(expo, [lo, hi])
            e.append(acc)
        out[tag] = e
    slope, icp, r2 = _fit_log(deltas, out["p"])
    half = out["half"]
    change = abs(half[-1] - half[-2]) / abs(half[-1])
    rows = [{"delta": d, "integral": ep, "integral_half_exponent": eh}
            for d, ep, eh in zip(deltas, out["p"], out["half"])]
    checks = {"T1h_closed_form": equivalent(t1h, expected),
              "divergent_fit": slope > 0 and r2 >= 0.99,
              "half_exponent_converges": change < 0.01}
    return DivergenceReport("t1-optimality", rows, slope, icp, r2, change, checks,
                            {"T1h": str(t1h), "h": str(h), "k": k, "p": p})
