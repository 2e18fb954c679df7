"""Coordinate transport between the Hartogs triangle and the bidisc, and
Taylor-polynomial projections.

psi(w1, w2) = (w1 w2, w2) maps the bidisc minus {w2 = 0} onto the triangle;
phi(z1, z2) = (z1/z2, z2) is its inverse.
"""
from __future__ import annotations

from itertools import product as iproduct
from math import factorial

from .errors import ContractViolation, PreconditionError, SingularEvaluationError
from .expr import (
    ZERO, CExpr, Var, as_expr, conj, const, free_vars, is_zero, normalize, substitute,
    wirt_d_word,
)
from .forms import Form

Z = ("z1", "z2")
W = ("w1", "w2")


def project_pi(k: int, f: Form) -> Form:
    """Keep the components whose first index is k, dropping that index."""
    if not 1 <= k <= f.n:
        raise ContractViolation(f"index {k} out of range for a form on C^{f.n}")
    comps = {J[1:]: v for J, v in f.components if J[0] == k}
    if f.degree == 1:
        return Form.function(comps.get((), ZERO), f.variables)
    return Form.from_components(comps, variables=f.variables) if comps else \
        Form(f.degree - 1, f.variables, ())


def _psi_map():
    return {"z1": Var("w1") * Var("w2"), "z2": Var("w2")}


def _phi_map():
    return {"w1": Var("z1") * Var("z2") ** -1, "w2": Var("z2")}


def pullback_psi(f: Form) -> Form:
    """psi^* of a (0,1)-form on the triangle, as a (0,1)-form in w."""
    if f.degree != 1 or f.variables != Z:
        raise ContractViolation("pullback expects a (0,1)-form in z1, z2")
    m = _psi_map()
    g1 = substitute(f.comp((1,)), m)
    g2 = substitute(f.comp((2,)), m)
    w1b, w2b = conj(Var("w1")), conj(Var("w2"))
    return Form.from_components({(1,): w2b * g1, (2,): w1b * g1 + g2}, variables=W)


def pullback_function(h) -> CExpr:
    return normalize(substitute(as_expr(h), _psi_map()))


def pushforward_phi(u) -> CExpr:
    """u o phi for a function u(w1, w2)."""
    if isinstance(u, Form):
        if u.degree != 0:
            raise ContractViolation("pushforward is defined for functions")
        u = u.expr
    return normalize(substitute(as_expr(u), _phi_map()))


def _at_zero(e, names):
    try:
        return normalize(substitute(e, {n: const(0) for n in names}))
    except SingularEvaluationError as exc:
        raise SingularEvaluationError(f"Taylor coefficient is singular at the origin: {exc}") from None


def _taylor(h, k, names, holo_only=False):
    """sum over multi-indices of order <= k-1 of D h(0) / alpha! * monomial."""
    h = as_expr(h)
    if k <= 0 or is_zero(h):
        return ZERO
    letters = [(n, "holo") for n in names] + ([] if holo_only else [(n, "anti") for n in names])
    out = ZERO
    for alpha in iproduct(range(k), repeat=len(letters)):
        if sum(alpha) > k - 1:
            continue
        word = [lt for lt, a in zip(letters, alpha) for _ in range(a)]
        d = wirt_d_word(h, word)
        if is_zero(d):
            continue
        c = _at_zero(d, names)
        if is_zero(c):
            continue
        mono = c
        denom = 1
        for (n, kind), a in zip(letters, alpha):
            v = Var(n) if kind == "holo" else conj(Var(n))
            for _ in range(a):
                mono = mono * v
            denom *= factorial(a)
        out = out + mono * const(1) / const(denom)
    return normalize(out)


def taylor_Pk(f, k: int, variables=Z):
    """Real Taylor polynomial of total order <= k-1 at the origin.

    Works on a CExpr or a Form (componentwise).
    """
    if isinstance(f, Form):
        return f.map(lambda v: _taylor(v, k, f.variables))
    return _taylor(f, k, variables)


def taylor_P2k(h, k: int, var: str = "w2"):
    """Taylor polynomial in (var, conj var) at var = 0 of order <= k-1;
    the other variables are left as coefficients."""
    if isinstance(h, Form):
        return h.map(lambda v: _taylor(v, k, (var,)))
    return _taylor(h, k, (var,))


def taylor_holo_P2k(u, k: int, var: str = "w2", f_tilde: Form | None = None):
    """Holomorphic Taylor polynomial sum_l var^l d^l u(., 0) / l! (l < k).

    For a symbolic u the derivatives are exact.  A numeric solution needs
    its data ``f_tilde``; the coefficients then come from the boundary and
    area formulas for the traces (see ``hartogs.trace_coefficients``).
    """
    from .product import ProductSolution

    if isinstance(u, ProductSolution):
        if u.symbolic:
            u = u.expr
        elif f_tilde is None:
            raise ContractViolation("numeric solution: pass f_tilde to compute the traces")
        else:
            from .hartogs import numeric_holo_taylor

            return numeric_holo_taylor(f_tilde, k)
    if isinstance(u, Form):
        u = u.expr
    return _taylor(u, k, (var,), holo_only=True)


def require_vanishing_P2k(f: Form, k: int, var="w2"):
    p = taylor_P2k(f, k, var)
    if not p.is_zero():
        raise PreconditionError(
            f"data must have vanishing Taylor polynomial of order {k - 1} in {var}; got {p}",
            hypothesis="vanishing low-order Taylor coefficients along w2 = 0")
