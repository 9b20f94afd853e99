import math

import pytest
import sympy as sp

from pseudosurf.errors import (
    DomainError,
    ParseError,
    SingularPoint,
    UnboundVariable,
    UninstantiatedFunction,
    UnknownFunction,
)
from pseudosurf.evaluate import eval_at, eval_many
from pseudosurf.expr import (
    DELTA,
    Z,
    abstract,
    equal_rational,
    instantiate_functions,
    is_rational,
    jet,
    jet_name,
    jet_order,
    normalize,
    parse_jet_name,
    to_text,
)
from pseudosurf.parser import parse_expr


@pytest.mark.parametrize(
    "a, b, name",
    [(0, 0, "z"), (1, 0, "z_x"), (0, 1, "z_t"), (1, 1, "z_xt"), (3, 2, "z_xxxtt")],
)
def test_jet_names_roundtrip(a, b, name):
    assert jet_name(a, b) == name
    assert parse_jet_name(name) == (a, b)
    assert jet_order(jet(a, b)) == (a, b)


def test_mixed_jet_letters_are_counted():
    assert parse_expr("z_tx") == parse_expr("z_xt") == jet(1, 1)


def test_numbers_are_exact():
    assert parse_expr("0.5*z") == Z / 2
    assert parse_expr("1e-1") == sp.Rational(1, 10)


def test_power_is_right_associative_and_binds_tighter_than_unary():
    assert parse_expr("2^3^2") == 2**9
    assert parse_expr("-z^2") == -(Z**2)


def test_abstract_functions_with_primes():
    e = parse_expr("rho''(z) + rho' + rho", ["rho"])
    assert e == abstract("rho", 2) + abstract("rho", 1) + abstract("rho", 0)


def test_unknown_function_reports_position():
    with pytest.raises(UnknownFunction) as info:
        parse_expr("z + foo(z)")
    assert info.value.pos == 4


@pytest.mark.parametrize("src", ["z+*2", "(z", "z)", "", "sin()", "z $ 2"])
def test_malformed_input(src):
    with pytest.raises(ParseError):
        parse_expr(src)


def test_to_text_roundtrip_with_functions():
    e = parse_expr("rho'(z)^2 + z_x/2 - delta*sin(z)", ["rho"])
    assert parse_expr(to_text(e), ["rho"]) == e


def test_normalize_cancels_and_reduces_delta_powers():
    e = parse_expr("(z^2 - 1)/(z - 1) + delta^3 - delta")
    assert normalize(e) == Z + 1
    assert normalize(DELTA**2) == 1


def test_normalize_radicals():
    e = parse_expr("sqrt(z^2 + 1)^2 - z^2")
    assert normalize(e) == 1


def test_rational_classification():
    assert is_rational(parse_expr("z_x^2/(z + 1)"))
    assert not is_rational(parse_expr("sin(z)"))
    assert equal_rational(parse_expr("1/(1 - z) + 1/(1 + z)"), parse_expr("2/(1 - z^2)"))


def test_instantiate_functions_handles_derivatives():
    e = parse_expr("rho' * z_x + rho", ["rho"])
    got = instantiate_functions(e, {"rho": Z**3})
    assert sp.expand(got - (3 * Z**2 * jet(1, 0) + Z**3)) == 0


class TestEvaluate:
    def test_simple_value(self):
        assert eval_at(parse_expr("sin(z) + z_x^2"), {"z": 0.5, "z_x": 2}) == pytest.approx(math.sin(0.5) + 4)

    def test_singular_point(self):
        with pytest.raises(SingularPoint):
            eval_at(parse_expr("1/z"), {"z": 0})

    @pytest.mark.parametrize("src", ["ln(z)", "sqrt(z)"])
    def test_domain_errors(self, src):
        with pytest.raises(DomainError):
            eval_at(parse_expr(src), {"z": -1})

    def test_unbound_variable(self):
        with pytest.raises(UnboundVariable):
            eval_at(parse_expr("z + q"), {"z": 1})

    def test_uninstantiated_function(self):
        with pytest.raises(UninstantiatedFunction):
            eval_at(parse_expr("rho(z)", ["rho"]), {"z": 1})

    def test_abstract_value_can_be_bound(self):
        assert eval_at(parse_expr("rho'(z) * 2", ["rho"]), {"z": 1, abstract("rho", 1): 3}) == 6

    def test_high_precision(self):
        v = eval_at(parse_expr("exp(z)"), {"z": 1}, digits=40)
        assert abs(v - sp.E) < sp.Float("1e-38", 40)

    def test_mask_mode_flags_bad_points(self):
        import numpy as np

        (v,), ok = eval_many([parse_expr("1/z")], {"z": np.array([1.0, 0.0, 2.0])})
        assert ok.tolist() == [True, False, True]
        assert v[0] == 1.0 and v[2] == 0.5
