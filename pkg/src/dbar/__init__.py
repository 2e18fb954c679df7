"""Constructive solution operators for the dbar equation.

Cauchy transforms on discs, the Nijenhuis-Woolf operator on products of
discs, solution operators on the Hartogs triangle, weighted Sobolev norms,
Muckenhoupt constants, Hardy-type checks and divergence experiments.
"""

__version__ = "0.1.0"

from .errors import (  # noqa: E402
    AccuracyWarning, ConfigurationError, DbarError, DomainError, EvaluationError,
    HypothesisWarning, ParseError, PreconditionError, SingularEvaluationError, UnsupportedError,
)
from .expr import (  # noqa: E402
    branch_pow, cabs, conj, equivalent, evaluate, is_zero, lambdify, normalize, var, wirt_d,
)
from .parser import parse_expr, parse_form  # noqa: E402
from .forms import Form, dbar, dbar_closed_check  # noqa: E402
from .grids import HARTOGS, UNIT_DISC, DiscDomain, HartogsDomain, ProductDomain  # noqa: E402
from .cauchy import CauchyEvaluator, cauchy_S, cauchy_T, symbolic_S, symbolic_T  # noqa: E402
from .product import solve_product  # noqa: E402
from .hartogs import solve_hartogs_basic, solve_hartogs_optimal, trace_coefficients  # noqa: E402
from .weights import ap_constant_estimate, apstar_constant_estimate, sobolev_norm  # noqa: E402
