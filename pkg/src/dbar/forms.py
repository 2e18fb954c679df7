"""(0,q)-forms with symbolic coefficients and the dbar operator on them."""
from __future__ import annotations

from dataclasses import dataclass, field
from itertools import combinations

import numpy as np

from .errors import ContractViolation
from .expr import (
    ZERO, CExpr, as_expr, free_vars, is_zero, lambdify, normalize, wirt_d,
)


@dataclass(frozen=True)
class Form:
    """A (0,q)-form sum_J f_J dzbar_J on C^n.

    ``variables`` are the coordinate names (``("z1", "z2")`` etc).  Components
    are keyed by strictly increasing 1-based index tuples; degree 0 forms
    (functions) use the empty tuple.  Coefficients are stored normalized and
    zero coefficients are dropped.
    """

    degree: int
    variables: tuple
    components: tuple = field(default=())

    @classmethod
    def from_components(cls, comps: dict, family: str | None = None, n: int | None = None,
                        variables=None):
        comps = {tuple(k): as_expr(v) for k, v in comps.items()}
        degrees = {len(k) for k in comps}
        if len(degrees) > 1:
            raise ContractViolation("mixed degree components")
        degree = degrees.pop() if degrees else 1
        if variables is None:
            if family is None:
                names = set().union(*(free_vars(v) for v in comps.values())) if comps else set()
                family = "w" if any(x.startswith("w") for x in names) else "z"
            used = set().union(*(free_vars(v) for v in comps.values())) if comps else set()
            top = max([i for k in comps for i in k] + [int(x[1]) for x in used
                                                       if x[0] == family and x[1:].isdigit()] + [2])
            n = max(n or 2, top)
            variables = tuple(f"{family}{j}" for j in range(1, n + 1))
        variables = tuple(variables)
        n = len(variables)
        if not 2 <= n <= 3 and degree > 0:
            raise ContractViolation("forms live on C^2 or C^3")
        out = []
        for k in sorted(comps):
            if any(not 1 <= j <= n for j in k) or list(k) != sorted(set(k)):
                raise ContractViolation(f"bad component index {k}")
            v = normalize(comps[k])
            if not is_zero(v):
                out.append((k, v))
        return cls(degree, variables, tuple(out))

    @classmethod
    def function(cls, expr, variables):
        return cls.from_components({(): expr}, variables=variables) if not is_zero(expr) \
            else cls(0, tuple(variables), ())

    @property
    def n(self):
        return len(self.variables)

    def comp(self, idx) -> CExpr:
        idx = tuple(idx)
        for k, v in self.components:
            if k == idx:
                return v
        return ZERO

    def as_dict(self):
        return dict(self.components)

    @property
    def expr(self) -> CExpr:
        if self.degree != 0:
            raise ContractViolation("only degree 0 forms have a scalar expression")
        return self.comp(())

    def indices(self):
        return list(combinations(range(1, self.n + 1), self.degree))

    def __add__(self, other: "Form"):
        self._check(other)
        comps = self.as_dict()
        for k, v in other.components:
            comps[k] = comps.get(k, ZERO) + v
        return self._mk(comps)

    def __sub__(self, other: "Form"):
        return self + other.scale(-1)

    def scale(self, c):
        c = as_expr(c)
        return self._mk({k: c * v for k, v in self.components})

    def map(self, fn):
        return self._mk({k: fn(v) for k, v in self.components})

    def _mk(self, comps):
        if self.degree == 0:
            return Form.function(comps.get((), ZERO), self.variables)
        return Form(self.degree, self.variables, Form.from_components(
            comps, variables=self.variables).components)

    def _check(self, other):
        if self.degree != other.degree or self.variables != other.variables:
            raise ContractViolation("forms of different type")

    def equivalent(self, other: "Form") -> bool:
        try:
            return is_zero_form(self - other)
        except ContractViolation:
            return False

    def is_zero(self):
        return not self.components

    def evaluator(self, idx=()):
        return lambdify(self.comp(idx), self.variables)

    def __str__(self):
        if self.degree == 0:
            return str(self.expr)
        fam = self.variables[0][0]
        if not self.components:
            return f"0:d{fam}{self.indices()[0][0]}" if self.degree == 1 else \
                "0:" + "^".join(f"d{fam}{j}" for j in self.indices()[0])
        return ", ".join(f"{v}:" + "^".join(f"d{fam}{j}" for j in k) for k, v in self.components)


def is_zero_form(f: Form) -> bool:
    return not f.components


def dbar(u) -> Form:
    """dbar of a degree-q form (or of a function given as ``Form`` of degree 0)."""
    if not isinstance(u, Form):
        raise TypeError("dbar expects a Form; wrap functions with Form.function")
    n, q = u.n, u.degree
    if q >= n:
        return Form(q + 1, u.variables, ())
    comps = {}
    for J in combinations(range(1, n + 1), q + 1):
        acc = ZERO
        for m, j in enumerate(J):
            rest = J[:m] + J[m + 1:]
            c = u.comp(rest)
            if is_zero(c):
                continue
            d = wirt_d(c, u.variables[j - 1], "anti")
            acc = acc + d if m % 2 == 0 else acc - d
        comps[J] = acc
    return Form.from_components(comps, variables=u.variables)


def dbar_function(h, variables) -> Form:
    return dbar(Form.function(as_expr(h), variables))


@dataclass(frozen=True)
class ClosedReport:
    closed: bool
    exact: bool
    max_residual: float
    worst_point: tuple | None = None
    component: tuple | None = None


def _sample_points(n, count=64, radius=0.9, seed=0):
    rng = np.random.default_rng(seed)
    r = radius * np.sqrt(rng.uniform(0, 1, size=(count, n)))
    t = rng.uniform(0, 2 * np.pi, size=(count, n))
    return r * np.exp(1j * t)


def dbar_closed_check(f: Form, tol: float = 1e-10, points=None) -> ClosedReport:
    """Check dbar f = 0: symbolically, then numerically on sample points."""
    res = dbar(f)
    if res.is_zero():
        return ClosedReport(True, True, 0.0)
    if points is None:
        points = _sample_points(f.n)
    points = np.asarray(points, dtype=complex)
    worst, where, comp = 0.0, None, None
    for k, v in res.components:
        vals = np.abs(lambdify(v, f.variables)(*points.T))
        i = int(np.argmax(vals))
        if vals[i] > worst:
            worst, where, comp = float(vals[i]), tuple(complex(x) for x in points[i]), k
    return ClosedReport(worst <= tol, False, worst, where, comp)
