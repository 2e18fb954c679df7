import math
import warnings

import numpy as np
import pytest
from hypothesis import given

from dbar.batteries import disc_battery, disc_ratio_study, random_polynomial
from dbar.cauchy import (
    CauchyEvaluator, cauchy_S, cauchy_T, cauchy_T_derivative, slice_S, slice_T, symbolic_S,
    symbolic_T,
)
from dbar.errors import AccuracyWarning, DomainError, UnsupportedError
from dbar.expr import Var, cabs, conj, equivalent, lambdify, normalize, wirt_d
from dbar.grids import UNIT_DISC, DiscDomain
from dbar.hardy import identity_2s
from dbar.parser import parse_expr

from conftest import poly_strategy, random_disc_points

P = parse_expr
ZETA = Var("zeta")


@pytest.fixture(scope="module")
def ev():
    return CauchyEvaluator.build()


def test_evaluator_boundary_on_circle(ev):
    assert np.max(np.abs(np.abs(ev.zeta_b) - 1)) <= 1e-14
    assert ev.grid.disc == ev.disc


def test_T_of_one(ev):
    for z in (0.0, 0.3, 0.5 - 0.6j, -0.95j):
        assert abs(cauchy_T(P("1"), ev, z) - np.conj(z)) <= 1e-13


def test_T_of_conj_zeta(ev):
    assert abs(cauchy_T(conj(ZETA), ev, 0.3) - 0.045) <= 1e-8


def test_T_zero_and_domain(ev):
    assert cauchy_T(P("0"), ev, 0.2) == 0
    with pytest.raises(DomainError):
        cauchy_T(P("1"), ev, 1.0)
    with pytest.raises(DomainError):
        cauchy_T(P("1"), ev, 2j)


def test_T_off_centre_disc():
    d = DiscDomain(0.5 + 0.5j, 2.0)
    e = CauchyEvaluator.build(d)
    z = 0.7 - 0.1j
    assert abs(cauchy_T(P("1"), e, z) - np.conj(z - d.center)) <= 1e-13


def test_T_node_values_path(ev):
    z = 0.3 + 0.1j
    vals = np.ones(ev.grid.points.shape, complex)
    assert abs(cauchy_T(vals, ev, z, h_at_z=1.0) - np.conj(z)) <= 1e-13


def test_S_examples(ev):
    for z in random_disc_points(25, 0.9, 1):
        for m in range(9):
            assert abs(cauchy_S(ZETA ** m, ev, z) - z ** m) <= 1e-10
        assert abs(cauchy_S(conj(ZETA), ev, z)) <= 1e-10
        assert abs(cauchy_S(P("1"), ev, z) - 1) <= 1e-14


def test_S_near_boundary_warns(ev):
    with pytest.warns(AccuracyWarning):
        cauchy_S(P("1"), ev, 0.97)


def test_slices():
    evs = [CauchyEvaluator.build()] * 2
    vs = ("w1", "w2")
    w = (0.3 - 0.2j, -0.1 + 0.4j)
    b1, b2 = np.conj(w[0]), np.conj(w[1])
    assert abs(slice_T(0, P("1"), evs, w, vs) - b1) <= 1e-13
    assert abs(slice_T(0, P("conj(w2)"), evs, w, vs) - b1 * b2) <= 1e-13
    assert abs(slice_T(1, P("conj(w1)"), evs, w, vs) - b1 * b2) <= 1e-13
    g = lambda x: 1 + x ** 2  # noqa: E731
    assert abs(slice_S(0, P("w1^3*(1 + w2^2)"), evs, w, vs) - w[0] ** 3 * g(w[1])) <= 1e-10
    assert abs(slice_S(0, P("conj(w1)*(1 + w2^2)"), evs, w, vs)) <= 1e-10
    assert abs(slice_S(0, P("1"), evs, w, vs) - 1) <= 1e-14


def test_symbolic_T_examples():
    assert equivalent(symbolic_T(P("1"), "zeta"), conj(ZETA))
    assert equivalent(symbolic_T(conj(ZETA), "zeta"), conj(ZETA) ** 2 * P("1/2"))
    with pytest.raises(UnsupportedError):
        symbolic_T(cabs(ZETA) ** 3 * 0 + P("pow(zeta, 1/2, -pi, pi)"), "zeta")


def test_symbolic_T_inverts_dbar_battery():
    rng = np.random.default_rng(50)
    for _ in range(50):
        h = random_polynomial(("zeta",), rng, 5, 4)
        assert equivalent(wirt_d(symbolic_T(h, "zeta"), "zeta", "anti"), h)


@given(poly_strategy(("zeta",), max_deg=4))
def test_symbolic_matches_quadrature(h):
    ev = CauchyEvaluator.build(UNIT_DISC, 24, 64)
    z = 0.35 - 0.2j
    exact = complex(lambdify(symbolic_T(h, "zeta"), ("zeta",))(np.array([z]))[0])
    assert abs(cauchy_T(h, ev, z) - exact) <= 1e-10
    exact_s = complex(lambdify(symbolic_S(h, "zeta"), ("zeta",))(np.array([z]))[0])
    assert abs(cauchy_S(h, ev, z) - exact_s) <= 1e-10


def test_symbolic_T_radius():
    # on a disc of radius 2, T(zeta) = zeta conj(zeta) - 4
    assert equivalent(symbolic_T(ZETA, "zeta", 2), P("zeta*conj(zeta) - 4"))
    ev = CauchyEvaluator.build(DiscDomain(0j, 2.0))
    z = 0.5 + 0.5j
    assert abs(cauchy_T(ZETA, ev, z) - (abs(z) ** 2 - 4)) <= 1e-12


def test_cauchy_green_decomposition(ev):
    rng = np.random.default_rng(7)
    pts = random_disc_points(25, 0.8, 8)
    worst = 0.0
    for _ in range(20):
        h = random_polynomial(("zeta",), rng, 4, 4)
        dh = normalize(wirt_d(h, "zeta", "anti"))
        hf = lambdify(h, ("zeta",))
        for z in pts:
            rhs = cauchy_S(h, ev, z) + cauchy_T(dh, ev, z)
            worst = max(worst, abs(complex(hf(np.array([z]))[0]) - rhs))
    assert worst <= 1e-6


def test_T_is_a_right_inverse_of_dbar(ev):
    hs = [P("zeta^2*conj(zeta) + 3"), P("pow(abs(zeta), 5/2, -pi, pi)"),
          P("pow(zeta - 2, 1/2, 0, 2*pi)")]
    step = 1e-4
    for h in hs:
        hf = lambdify(h, ("zeta",))
        for z in random_disc_points(6, 0.8, 2):
            fx = (cauchy_T(h, ev, z + step) - cauchy_T(h, ev, z - step)) / (2 * step)
            fy = (cauchy_T(h, ev, z + 1j * step) - cauchy_T(h, ev, z - 1j * step)) / (2 * step)
            d = 0.5 * (fx + 1j * fy)
            assert abs(d - complex(hf(np.array([z]))[0])) <= 1e-4


def test_T_derivative_matches_symbolic(ev):
    h = P("zeta^2*conj(zeta)^2 + conj(zeta)")
    th = symbolic_T(h, "zeta")
    z = 0.2 + 0.3j
    for t in (1, 2):
        d = th
        for _ in range(t):
            d = wirt_d(d, "zeta", "holo")
        exact = complex(lambdify(d, ("zeta",))(np.array([z]))[0])
        assert abs(cauchy_T_derivative(h, ev, z, t) - exact) <= 1e-9


def test_S_derivative_identity_on_polynomials():
    rng = np.random.default_rng(47)
    for _ in range(10):
        h = random_polynomial(("w",), rng, 4, 4)
        for z in random_disc_points(5, 0.8, 3):
            assert identity_2s(h, z).residual <= 1e-8


@pytest.mark.parametrize("weight", [None, "abs(w)^2"])
def test_disc_transform_ratio_stable(weight):
    hs = disc_battery(20, seed=0)
    with warnings.catch_warnings():
        warnings.simplefilter("error")
        for k in (0, 1, 2):
            st = disc_ratio_study(hs, k, 5, weight, n_r=16, n_theta=32)
            assert all(math.isfinite(r["ratio"]) for r in st.rows)
            assert st.max_drift < 0.10
