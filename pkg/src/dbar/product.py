"""The Nijenhuis-Woolf solution operator on polydiscs.

For a dbar-closed (0,q)-form f on D_1 x ... x D_n,

    T f = T_1 pi_1 f + T_2 S_1 pi_2 f + ... + T_n S_1 ... S_{n-1} pi_n f

solves dbar u = f, where T_j, S_j are the one-variable solid and boundary
Cauchy transforms acting in the j-th coordinate and pi_j keeps the
components whose first index is j.
"""
from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field
from itertools import combinations

import numpy as np

from .cauchy import NEAR_BOUNDARY, CauchyEvaluator, cauchy_T, symbolic_S, symbolic_T
from .errors import (
    AccuracyWarning, ContractViolation, DomainError, PreconditionError, UnsupportedError,
)
from .expr import ZERO, as_expr, is_zero, lambdify, normalize
from .forms import Form, dbar, dbar_closed_check
from .grids import DiscDomain, ProductDomain, fsum_complex
from .transport import project_pi

NUMERIC_NR = 24
NUMERIC_NTHETA = 128


@dataclass
class ProductSolution:
    """Output of :func:`solve_product`.

    ``form`` is the symbolic (q-1)-form when the closed-form path applied,
    otherwise None and values come from :meth:`evaluate`.
    """

    data: Form
    domain: ProductDomain
    form: Form | None
    symbolic: bool
    n_r: int = NUMERIC_NR
    n_theta: int = NUMERIC_NTHETA
    closed_exact: bool = True
    _numeric: dict = field(default_factory=dict, repr=False)

    @property
    def variables(self):
        return self.data.variables

    @property
    def degree(self):
        return self.data.degree - 1

    @property
    def expr(self):
        if self.form is None:
            raise ContractViolation("numeric solution has no expression")
        if self.degree != 0:
            raise ContractViolation("solution is a form, not a function")
        return self.form.expr

    def component_indices(self):
        return list(combinations(range(1, self.data.n + 1), self.degree))

    def evaluate(self, points, idx=()):
        """Values of component ``idx`` at points of shape (M, n)."""
        pts = np.atleast_2d(np.asarray(points, dtype=complex))
        if pts.shape[-1] != self.data.n:
            raise ContractViolation("points must have one column per coordinate")
        if self.form is not None:
            return lambdify(self.form.comp(idx), self.variables)(*pts.T)
        fn = self._numeric.get(tuple(idx))
        if fn is None:
            fn = _numeric_component(self, tuple(idx))
            self._numeric[tuple(idx)] = fn
        return fn(pts)

    def __call__(self, *coords):
        pts = np.stack(np.broadcast_arrays(*[np.asarray(c, complex) for c in coords]), axis=-1)
        shape = pts.shape[:-1]
        return self.evaluate(pts.reshape(-1, self.data.n)).reshape(shape)


def _check_domain(f: Form, domain):
    if domain is None:
        domain = ProductDomain.unit(f.n)
    if domain.n != f.n:
        raise DomainError("domain and form dimensions differ")
    return domain


def require_closed(f: Form, tol=1e-10):
    rep = dbar_closed_check(f, tol=tol)
    if not rep.closed:
        raise PreconditionError(
            f"data is not dbar-closed: residual {rep.max_residual:.3e} in component "
            f"{rep.component} at {rep.worst_point}",
            hypothesis="dbar-closed data (dbar f = 0)")
    return rep


def solve_product(f: Form, domain: ProductDomain | None = None, *, method: str = "auto",
                  n_r: int = NUMERIC_NR, n_theta: int = NUMERIC_NTHETA,
                  check_closed: bool = True) -> ProductSolution:
    """Apply the Nijenhuis-Woolf operator to a closed (0,q)-form."""
    if not isinstance(f, Form) or f.degree < 1:
        raise ContractViolation("solve_product expects a (0,q)-form with q >= 1")
    domain = _check_domain(f, domain)
    rep = require_closed(f) if check_closed else None
    exact = rep.exact if rep else True
    if method not in ("auto", "symbolic", "numeric"):
        raise ContractViolation(f"unknown method {method!r}")
    if method != "numeric":
        try:
            form = nw_symbolic(f, domain)
            return ProductSolution(f, domain, form, True, n_r, n_theta, exact)
        except UnsupportedError:
            if method == "symbolic":
                raise
    return ProductSolution(f, domain, None, False, n_r, n_theta, exact)


def _centered(domain):
    for d in domain.factors:
        if d.center != 0:
            raise UnsupportedError("closed forms need discs centred at the origin")


def nw_symbolic(f: Form, domain: ProductDomain) -> Form:
    _centered(domain)
    q, n = f.degree, f.n
    names = f.variables
    out = {}
    for j in range(1, n + 1):
        pj = project_pi(j, f)
        for idx, comp in pj.components:
            v = comp
            for s in range(j - 1, 0, -1):
                v = symbolic_S(v, names[s - 1], domain.factors[s - 1].radius)
                if is_zero(v):
                    break
            if is_zero(v):
                continue
            v = symbolic_T(v, names[j - 1], domain.factors[j - 1].radius)
            out[idx] = out.get(idx, ZERO) + v
    if q == 1:
        return Form.function(normalize(out.get((), ZERO)), names)
    return Form.from_components(out, variables=names) if out else Form(q - 1, names, ())


# ---------------------------------------------------------------------------
# numeric path: operators acting on vectorized callables F(P), P of shape (..., n)


def _op_S(F, ev, j):
    zb, dzb = ev.zeta_b, ev.dzeta_b

    def G(P):
        P = np.asarray(P, dtype=complex)
        far = np.abs(P[..., j] - ev.disc.center) > NEAR_BOUNDARY * ev.disc.radius
        if np.any(far):
            warnings.warn("boundary Cauchy integral evaluated close to the distinguished "
                          "boundary; accuracy degrades", AccuracyWarning, stacklevel=2)
        Q = np.repeat(P[..., None, :], zb.size, axis=-2)
        Q[..., j] = zb
        vals = F(Q)
        k = dzb / (zb - P[..., j][..., None])
        return np.sum(vals * k, axis=-1) / (2j * math.pi)

    return G


def _op_T(F, ev, j):
    def G(P):
        P = np.asarray(P, dtype=complex)
        flat = P.reshape(-1, P.shape[-1])
        out = np.empty(flat.shape[0], dtype=complex)
        for i, p in enumerate(flat):
            def h(zeta, p=p):
                zeta = np.asarray(zeta, dtype=complex)
                Q = np.broadcast_to(p, zeta.shape + p.shape).copy()
                Q[..., j] = zeta
                return F(Q)
            out[i] = cauchy_T(h, ev, p[j])
        return out.reshape(P.shape[:-1])

    return G


def _expr_callable(e, variables):
    f = lambdify(e, variables)

    def F(P):
        P = np.asarray(P, dtype=complex)
        return f(*np.moveaxis(P, -1, 0))

    return F


def _numeric_component(sol: ProductSolution, idx):
    f, domain = sol.data, sol.domain
    evs = [CauchyEvaluator.build(d, sol.n_r, sol.n_theta) for d in domain.factors]
    terms = []
    for j in range(1, f.n + 1):
        pj = project_pi(j, f)
        comp = pj.comp(idx) if pj.degree else (pj.expr if pj.components else ZERO)
        if is_zero(comp):
            continue
        F = _expr_callable(comp, f.variables)
        for s in range(j - 1, 0, -1):
            F = _op_S(F, evs[s - 1], s - 1)
        terms.append(_op_T(F, evs[j - 1], j - 1))

    def total(P):
        P = np.asarray(P, dtype=complex)
        out = np.zeros(P.shape[:-1], dtype=complex)
        for t in terms:
            out = out + t(P)
        return out

    return total


def fd_dbar_residual(sol: ProductSolution, points, h=1e-4):
    """Max |dbar_j u - f_j| by central differences (q = 1)."""
    if sol.data.degree != 1:
        raise ContractViolation("finite-difference check implemented for q = 1")
    pts = np.atleast_2d(np.asarray(points, dtype=complex))
    n = sol.data.n
    worst = 0.0
    for j in range(n):
        e = np.zeros(n, complex)
        e[j] = 1
        ux = (sol.evaluate(pts + h * e) - sol.evaluate(pts - h * e)) / (2 * h)
        uy = (sol.evaluate(pts + 1j * h * e) - sol.evaluate(pts - 1j * h * e)) / (2 * h)
        d = 0.5 * (ux + 1j * uy)
        target = lambdify(sol.data.comp((j + 1,)), sol.variables)(*pts.T)
        worst = max(worst, float(np.max(np.abs(d - target))))
    return worst


def residual_symbolic(sol: ProductSolution) -> Form:
    """dbar u - f, exactly (requires a symbolic solution)."""
    if sol.form is None:
        raise ContractViolation("symbolic residual needs a symbolic solution")
    return dbar(sol.form) - sol.data
