import numpy as np
import pytest

from dbar.errors import ContractViolation, ParseError
from dbar.expr import Var, conj, equivalent
from dbar.forms import Form, dbar, dbar_closed_check, dbar_function
from dbar.parser import parse_expr, parse_form

P = parse_expr


def test_parse_form_components():
    f = parse_form("conj(z2):dz1, conj(z1):dz2")
    assert f.degree == 1 and f.variables == ("z1", "z2")
    assert equivalent(f.comp((1,)), P("conj(z2)"))
    g = parse_form("1:dw1^dw2")
    assert g.degree == 2 and g.variables == ("w1", "w2")
    assert equivalent(g.comp((1, 2)), 1)


@pytest.mark.parametrize("text", ["conj(z1)", "1:dz1, 1:dw2", "1:dz2^dz1", "1:dz1, 1:dz1^dz2",
                                  "1:dq1", ", 1:dz1"])
def test_parse_form_errors(text):
    with pytest.raises(ParseError):
        parse_form(text)


def test_parse_form_offset_of_bad_component():
    with pytest.raises(ParseError) as exc:
        parse_form("1:dz1, z1 + :dz2")
    assert exc.value.offset is not None and exc.value.offset >= 7


def test_closed_check_examples():
    r = dbar_closed_check(parse_form("1:dz2"))
    assert r.closed and r.exact
    r = dbar_closed_check(parse_form("conj(z2):dz1, conj(z1):dz2"))
    assert r.closed and r.exact
    r = dbar_closed_check(parse_form("conj(z2):dz1"))
    assert not r.closed and not r.exact
    assert r.max_residual == pytest.approx(1.0)
    assert r.worst_point is not None and r.component == (1, 2)


def test_dbar_squares_to_zero(rng):
    from dbar.batteries import random_polynomial
    for n in (2, 3):
        vs = tuple(f"w{j}" for j in range(1, n + 1))
        for _ in range(5):
            u = Form.function(random_polynomial(vs, rng, 3, 4), vs)
            assert dbar(dbar(u)).is_zero()


def test_dbar_function_components():
    f = dbar_function(P("conj(z1)*conj(z2)^2"), ("z1", "z2"))
    assert equivalent(f.comp((1,)), P("conj(z2)^2"))
    assert equivalent(f.comp((2,)), P("2*conj(z1)*conj(z2)"))


def test_form_algebra_and_validation():
    f = parse_form("conj(z2):dz1")
    assert (f - f).is_zero()
    assert f.scale(2).equivalent(parse_form("2*conj(z2):dz1"))
    with pytest.raises(ContractViolation):
        Form.from_components({(2, 1): Var("z1")}, variables=("z1", "z2"))
    with pytest.raises(ContractViolation):
        Form.from_components({(1,): 1, (1, 2): 1}, variables=("z1", "z2"))
    assert str(parse_form(str(f))) == str(f)


def test_closed_check_numeric_points():
    f = Form.from_components({(1,): conj(Var("z2")) * 1e-12}, variables=("z1", "z2"))
    pts = np.array([[0.1, 0.2], [0.3j, -0.5]])
    r = dbar_closed_check(f, tol=1e-10, points=pts)
    assert r.closed and not r.exact
