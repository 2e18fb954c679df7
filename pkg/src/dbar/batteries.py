"""Seeded test batteries and empirical norm-ratio studies.

Closed forms are manufactured as dbar of random polynomial forms, so they
are closed by construction.  Coefficients are small Gaussian rationals so
that everything stays exact on the symbolic path.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction
from itertools import combinations, product as iproduct

import numpy as np

from .cauchy import symbolic_T
from .errors import ConfigurationError, PreconditionError
from .expr import GaussQ, Const, Var, add, conj, is_zero, mul, normalize
from .forms import Form, dbar
from .grids import UNIT_DISC, ProductDomain
from .product import solve_product
from .weights import WeightSpec, apstar_constant_estimate, sobolev_norm

Z2 = ("z1", "z2")
W2 = ("w1", "w2")


def _coef(rng, denom=4):
    re = int(rng.integers(-denom, denom + 1))
    im = int(rng.integers(-denom, denom + 1))
    if re == 0 and im == 0:
        re = 1
    return Const(GaussQ(Fraction(re, denom), Fraction(im, denom)))


def random_polynomial(variables, rng, max_degree=3, n_terms=4, min_degree=0):
    """Sum of ``n_terms`` distinct monomials in the variables and their
    conjugates with total degree in [min_degree, max_degree]."""
    letters = [Var(v) for v in variables] + [conj(Var(v)) for v in variables]
    exps = [e for e in iproduct(range(max_degree + 1), repeat=len(letters))
            if min_degree <= sum(e) <= max_degree]
    pick = rng.choice(len(exps), size=min(n_terms, len(exps)), replace=False)
    terms = []
    for i in sorted(pick):
        terms.append(mul(_coef(rng), *[lt ** a for lt, a in zip(letters, exps[i])]))
    return normalize(add(*terms))


def random_closed_form(n, q, rng, variables=None, max_degree=3, n_terms=4):
    """dbar of a random polynomial (0, q-1)-form, retried until nonzero."""
    variables = tuple(variables) if variables else tuple(f"w{j}" for j in range(1, n + 1))
    while True:
        if q == 1:
            u = Form.function(random_polynomial(variables, rng, max_degree, n_terms), variables)
        else:
            comps = {J: random_polynomial(variables, rng, max_degree, n_terms)
                     for J in combinations(range(1, n + 1), q - 1)}
            u = Form.from_components(comps, variables=variables)
        f = dbar(u)
        if not f.is_zero():
            return f


def product_battery(n=2, q=1, count=10, seed=0, max_degree=3, n_terms=4):
    rng = np.random.default_rng([seed, n, q])
    return [random_closed_form(n, q, rng, None, max_degree, n_terms) for _ in range(count)]


def hartogs_battery(count=8, seed=0, max_degree=3, n_terms=3):
    """Closed polynomial (0,1)-forms in (z1, z2)."""
    rng = np.random.default_rng([seed, 17])
    return [random_closed_form(2, 1, rng, Z2, max_degree, n_terms) for _ in range(count)]


def ft_family(ts=(1, 2, 3, 4)):
    """f_t = conj(z2)^t dzbar1 + t conj(z1) conj(z2)^(t-1) dzbar2 = dbar(conj(z1) conj(z2)^t)."""
    z1b, z2b = conj(Var("z1")), conj(Var("z2"))
    out = []
    for t in ts:
        f = Form.from_components({(1,): z2b ** t, (2,): t * z1b * z2b ** (t - 1)}, variables=Z2)
        out.append((f"f_{t}", f))
    return out


def disc_battery(count=20, seed=0):
    """Polynomials in one variable w for the disc transform study."""
    rng = np.random.default_rng([seed, 3])
    return [random_polynomial(("w",), rng, 4, 3) for _ in range(count)]


# ---------------------------------------------------------------------------
# studies


@dataclass
class RatioStudy:
    rows: list
    max_ratio: float
    max_drift: float
    info: dict = field(default_factory=dict)

    def as_dict(self):
        return {"rows": self.rows, "max_ratio": self.max_ratio, "max_drift": self.max_drift,
                "info": self.info}


def _drift(a, b):
    return abs(a - b) / abs(b) if b else (0.0 if a == 0 else math.inf)


def disc_ratio_study(hs, k: int, p: float, weight=None, *, n_r=32, n_theta=64, refine=True):
    """||T h||_{W^{k+1,p}(disc, mu)} / ||h||_{W^{k,p}(disc, mu)} for symbolic T."""
    weight = WeightSpec.of(weight)
    rows = []
    for i, h in enumerate(hs):
        th = symbolic_T(h, "w")
        grids = [(n_r, n_theta)] + ([(2 * n_r, 2 * n_theta)] if refine else [])
        vals = []
        for nr, nt in grids:
            num = sobolev_norm(th, UNIT_DISC, k + 1, p, weight, variables=("w",), n_r=nr, n_theta=nt).total
            den = sobolev_norm(h, UNIT_DISC, k, p, weight, variables=("w",), n_r=nr, n_theta=nt).total
            vals.append(num / den)
        rows.append({"member": i, "h": str(h), "ratio": vals[0],
                     "ratio_refined": vals[-1], "drift": _drift(vals[0], vals[-1]),
                     "n_r": n_r, "n_theta": n_theta})
    return _summary(rows, k=k, p=p, weight=weight.label if weight else "1")


def _summary(rows, **info):
    return RatioStudy(rows, max(r["ratio"] for r in rows) if rows else 0.0,
                      max(r["drift"] for r in rows) if rows else 0.0, info)


def norm_ratio_study(family, k: int, p: float, weight=None, *, domain=None, n_r=12,
                     n_theta=24, refine=True, check_weight=True):
    """||T f||_{W^{k,p}(Omega, mu)} / ||f||_{W^{k+n-2,p}(Omega, mu)} over a family
    of closed forms, with T the Nijenhuis-Woolf operator.

    Rows give the ratio at (n_r, n_theta) and after doubling both counts.
    """
    weight = WeightSpec.of(weight)
    family = list(family)
    if not family:
        raise ConfigurationError("empty family")
    n = family[0].n
    domain = domain or ProductDomain.unit(n)
    if weight is not None and check_weight:
        est = apstar_constant_estimate(weight.expr, p, family[0].variables)
        if est.divergent:
            raise PreconditionError(f"weight {weight.label} fails the A_p* check at p={p}",
                                    hypothesis="weight in the A_p* class")
    rows = []
    for i, f in enumerate(family):
        sol = solve_product(f, domain)
        if sol.form is None:
            raise ConfigurationError("ratio study needs the closed-form solution path")
        u = sol.form if sol.degree else sol.form.expr
        grids = [(n_r, n_theta)] + ([(2 * n_r, 2 * n_theta)] if refine else [])
        vals = []
        for nr, nt in grids:
            nu = sobolev_norm(u, domain, k, p, weight, variables=f.variables, n_r=nr, n_theta=nt).total
            nf = sobolev_norm(f, domain, k + n - 2, p, weight, variables=f.variables,
                              n_r=nr, n_theta=nt).total
            vals.append(nu / nf)
        rows.append({"member": i, "form": str(f), "solution": str(u), "ratio": vals[0],
                     "ratio_refined": vals[-1], "drift": _drift(vals[0], vals[-1]),
                     "n_r": n_r, "n_theta": n_theta})
    return _summary(rows, k=k, p=p, weight=weight.label if weight else "1", n=n)


def scaled_family(f: Form, scales):
    return [f.scale(c) for c in scales]
