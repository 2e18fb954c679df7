import math

import numpy as np
import pytest
from hypothesis import given, strategies as st

from dbar.errors import ConfigurationError, SingularEvaluationError
from dbar.expr import Var, conj
from dbar.grids import HARTOGS, UNIT_DISC, DiscDomain, ProductDomain
from dbar.parser import parse_expr, parse_form
from dbar.weights import (
    WeightSpec, ap_constant_estimate, apstar_constant_estimate, derivative_words,
    gradient_exprs, sobolev_norm,
)

from conftest import poly_strategy

P = parse_expr
BIDISC = ProductDomain.unit(2)


def test_norm_examples():
    r = sobolev_norm(P("1"), UNIT_DISC, 0, 5)
    assert abs(r.total - math.pi ** 0.2) <= 1e-10 * math.pi ** 0.2
    r = sobolev_norm(P("conj(z1)"), UNIT_DISC, 1, 2)
    assert abs(r.total - math.sqrt(1.5 * math.pi)) <= 1e-12
    assert r.per_order[0] == pytest.approx(math.pi / 2, rel=1e-13)
    assert r.k == 1 and r.p == 2 and r.weight == "1" and r.grid["n_r"] == 64


def test_norm_weighted_bidisc():
    # int_{bidisc} |w2|^2 * |w2|^2 = pi * (pi / 3)
    r = sobolev_norm(P("conj(w2)"), BIDISC, 0, 2, "abs(w2)^2")
    assert abs(r.total - math.sqrt(math.pi * math.pi / 3)) <= 1e-12
    assert r.weight == "abs(w2)^2"


def test_norm_report_invariant():
    r = sobolev_norm(P("w1^2*conj(w2) + w2"), BIDISC, 2, 3)
    assert abs(r.total ** 3 - sum(r.per_order)) <= 1e-12 * sum(r.per_order)


def test_form_norm_is_l2_over_components():
    f = parse_form("1:dw1, 1:dw2")
    r = sobolev_norm(f, BIDISC, 0, 2)
    assert r.total == pytest.approx(math.sqrt(2) * math.pi, rel=1e-12)


def test_hartogs_norm_uses_jacobian():
    # vol(H) = int_{bidisc} |w2|^2 = pi * pi / 2
    r = sobolev_norm(P("1"), HARTOGS, 0, 1, n_r=8, n_theta=16)
    assert r.total == pytest.approx(math.pi ** 2 / 2, rel=1e-12)
    assert r.grid["chart"] == "bidisc pullback"


def test_singular_derivative_reported():
    with pytest.raises(SingularEvaluationError, match="order 0"):
        sobolev_norm(P("pow(zeta - 0.5, 1/2, -pi, pi)"), UNIT_DISC, 1, 2)


def test_validation():
    with pytest.raises(ConfigurationError):
        sobolev_norm(P("1"), UNIT_DISC, -1, 2)
    with pytest.raises(ConfigurationError):
        sobolev_norm(P("1"), UNIT_DISC, 0, 2, "z1")  # not real
    with pytest.raises(ConfigurationError):
        ap_constant_estimate(P("1"), 1.0)


def test_derivative_word_multiplicities():
    for n_vars, order in ((1, 3), (2, 2), (2, 3)):
        vs = ("w1", "w2")[:n_vars]
        assert sum(m for _, m in derivative_words(vs, order)) == (2 * n_vars) ** order
    # |nabla z^2 conj z|^2 = |2 z conj z|^2 + |z^2|^2
    g = gradient_exprs(P("z1^2*conj(z1)"), ("z1",), 1)
    assert len(g) == 2 and all(m == 1 for _, m in g)


@given(poly_strategy(("zeta",), 3), st.complex_numbers(min_magnitude=0.1, max_magnitude=5,
                                                       allow_nan=False, allow_infinity=False))
def test_norm_scaling(h, c):
    a = sobolev_norm(h, UNIT_DISC, 1, 3, n_r=12, n_theta=24).total
    b = sobolev_norm(h * c, UNIT_DISC, 1, 3, n_r=12, n_theta=24).total
    assert abs(b - abs(c) * a) <= 1e-12 * max(abs(c) * a, 1e-300)


@given(poly_strategy(("zeta",), 3))
def test_norm_monotone_in_k(h):
    vals = [sobolev_norm(h, UNIT_DISC, k, 3, "abs(zeta)^2", n_r=12, n_theta=24).total
            for k in range(4)]
    assert all(a <= b for a, b in zip(vals, vals[1:]))


def test_ap_examples():
    assert ap_constant_estimate(P("1"), 3).value == pytest.approx(1.0, abs=1e-10)
    discs = [DiscDomain(0j, r) for r in (1.0, 0.1, 0.01)]
    est = ap_constant_estimate(P("abs(w)^2"), 3, discs)
    for d in est.discs:
        assert d.value == pytest.approx(2.0, rel=0.02)
    bad = ap_constant_estimate(P("abs(w)^2"), 2, discs)
    assert bad.divergent and bad.value == math.inf
    coarse = ap_constant_estimate(P("abs(w)^2"), 2, discs, n_r=48)
    assert bad.raw_value > coarse.raw_value


def test_ap_dual_exponent_closed_form():
    # |w|^a, centred disc: A_p = (2/(a+2)) * ((p-1)(2/(2(p-1)-a)))^(p-1)
    for a, p in ((1.0, 3.0), (0.5, 2.5)):
        closed = (2 / (a + 2)) * (2 * (p - 1) / (2 * (p - 1) - a)) ** (p - 1)
        est = ap_constant_estimate(f"pow(abs(w), {a}, -pi, pi)", p, [DiscDomain(0j, 0.5)])
        assert est.value == pytest.approx(closed, rel=0.02)


def test_apstar_examples():
    one = apstar_constant_estimate(P("1"), 3)
    assert abs(one.value - 1) <= 1e-10
    three = apstar_constant_estimate(P("abs(w2)^2"), 3)
    assert three.value == pytest.approx(2.0, rel=0.02) and not three.divergent
    two = apstar_constant_estimate(P("abs(w2)^2"), 2)
    assert two.divergent and two.raw_value >= 10 * three.value


@pytest.mark.parametrize("weight", ["abs(w2)^2", "abs(w1)^2 + 1", "abs(w1 - 0.5)^2*abs(w2)^2 + 1"])
def test_apstar_at_least_one(weight):
    assert apstar_constant_estimate(P(weight), 3).raw_value >= 1 - 1e-12


@pytest.mark.parametrize("s,p", [(1.5, 3), (0.5, 2), (1.2, 5)])
def test_example_weight_in_apstar(s, p):
    w = f"pow(abs(z2 - 1), {s * (p - 1)}, -pi, pi)"
    est = apstar_constant_estimate(P(w), p, ("z1", "z2"))
    assert math.isfinite(est.value) and not est.divergent
    fine = apstar_constant_estimate(P(w), p, ("z1", "z2"), n_r=192)
    assert abs(fine.value - est.value) <= 0.1 * est.value


def test_weight_spec_values():
    w = WeightSpec.of("abs(w1)^2")
    vals = w.values({"w1": np.array([0.5, 1j])})
    assert np.allclose(vals, [0.25, 1.0])
    assert WeightSpec.of(None) is None
    assert WeightSpec.of(conj(Var("w1")) * Var("w1")).label
