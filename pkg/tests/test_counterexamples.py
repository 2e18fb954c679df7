import math

import numpy as np
import pytest

from dbar.counterexamples import (
    contour_z1, kerzman_counterexample, t1_optimality, weighted_counterexample,
)
from dbar.errors import ConfigurationError
from dbar.expr import Var, branch_pow, equivalent, lambdify
from dbar.parser import parse_expr

P = parse_expr


@pytest.fixture(scope="module")
def kerzman():
    return kerzman_counterexample(1, 5)


def test_contour_rule():
    r = np.array([0.3, 0.2])
    z2 = np.array([0.5j, -0.1])
    got = contour_z1(P("conj(z1)*z2"), r, z2)
    # oint conj(z1) dz1 = 2 pi i r^2 on |z1| = r
    assert np.allclose(got, 2j * math.pi * r ** 2 * z2, atol=1e-14)


def test_kerzman_cauchy_value(kerzman):
    assert kerzman.checks["v_matches_cauchy_value"]
    assert kerzman.info["v_error_cauchy"] <= 1e-6


def test_kerzman_literal_formula_has_extra_factor(kerzman):
    # the formula with an extra factor z2 disagrees with the contour values
    assert kerzman.info["v_error_literal"] > 1e-2
    assert not kerzman.checks["v_matches_literal_formula"]


def test_kerzman_example_point():
    # closed form at (r, z2) = (0.3, 0.2i), p = 5, in the oint conj(z1) g dz1 form
    g = lambdify(branch_pow(Var("z2") - 1, 0.6, math.pi / 2, 3 * math.pi / 2), ("z2",))
    z2 = 0.2j
    want = 2j * math.pi * 0.09 * complex(g(np.array([z2]))[0])
    from dbar.hartogs import solve_hartogs_basic
    from dbar.parser import parse_form
    u = solve_hartogs_basic(parse_form("pow(z2 - 1, 3/5, pi/2, 3*pi/2):dz1")).u
    got = contour_z1(u, np.array([0.3]), np.array([z2]))[0]
    assert abs(got - want) <= 1e-12


def test_kerzman_divergence(kerzman):
    assert kerzman.slope > 0 and kerzman.r2 >= 0.99
    assert kerzman.checks["divergent_fit"]
    assert kerzman.half_change < 0.01 and kerzman.checks["half_exponent_converges"]
    energies = [r["integral"] for r in kerzman.rows]
    assert all(a < b for a, b in zip(energies, energies[1:]))


def test_weighted_example():
    rep = weighted_counterexample()
    assert rep.checks["dv_matches_closed_form"] and rep.info["dv_error"] <= 1e-6
    assert rep.checks["exponent_within_5pct"]
    assert rep.info["fitted_exponent"] == pytest.approx(-1.0, rel=0.05)


def test_weighted_example_k2():
    rep = weighted_counterexample(k=2, p=3, s=1.25, eps=1.0)
    assert rep.checks["dv_matches_closed_form"]
    assert rep.info["expected_exponent"] == pytest.approx(-0.5)
    assert rep.checks["exponent_within_5pct"]


def test_t1_optimality():
    rep = t1_optimality(1, 5)
    assert rep.checks["T1h_closed_form"]
    assert rep.checks["divergent_fit"] and rep.checks["half_exponent_converges"]
    assert equivalent(P(rep.info["T1h"]), P("conj(w1)*pow(abs(w2), 3/5, -pi, pi)"))


@pytest.mark.parametrize("fn,deltas", [(kerzman_counterexample, (1e-1, 1e-2, 1e-3)),
                                       (t1_optimality, (1e-1, 1e-2, 1e-1, 1e-3)),
                                       (weighted_counterexample, (1e-2, 1e-3, 1e-4))])
def test_schedule_validation(fn, deltas):
    with pytest.raises(ConfigurationError, match="delta"):
        fn(deltas=deltas)


def test_parameter_validation():
    with pytest.raises(ConfigurationError):
        kerzman_counterexample(1, 2)
    with pytest.raises(ConfigurationError):
        kerzman_counterexample(1, 5, (0.6, 0.1, 0.01, 0.001))
    with pytest.raises(ConfigurationError):
        weighted_counterexample(s=2.5)
    with pytest.raises(ConfigurationError):
        t1_optimality(0, 5)
