"""Canonical form and term algebra."""

import pytest

from hamalg import (CoincidentDeltaError, MaxDerivativeError, ParseError,
                    RandomSymbolGenerator, ZERO, canonicalize, equals,
                    multiply, parse_symbol)
from hamalg.parser import format_expression


def P(text):
    return parse_symbol(text)


def C(text):
    # parse returns the raw tree; canonical behavior is asserted on this
    return canonicalize(parse_symbol(text))


def test_parse_is_the_raw_tree():
    s = P("int[x](phi(x)^2) + int[y](phi(y)^2)")
    assert len(s.terms) == 2


def test_like_terms_merge():
    assert format_expression(C("int[x](phi(x)^2) + int[y](phi(y)^2)")) \
        == "int[x]( 2*phi(x)^2 )"


def test_dummy_names_do_not_matter():
    assert equals(P("int[x](phi(x)*pi(x))"), P("int[y](phi(y)*pi(y))"))


def test_cancellation_to_zero():
    s = C("int[x](f(x)*pi(x)) - int[y](f(y)*pi(y))")
    assert s.is_zero
    assert format_expression(s) == "0"


def test_scalar_arithmetic_is_exact():
    s = C("(1/3)*int[x](phi(x)) + (1/6)*int[x](phi(x))")
    assert format_expression(s) == "int[x]( (1/2)*phi(x) )"


def test_total_derivative_integrates_to_zero():
    assert C("int[x]( phi(x)*D(phi,1)(x) )").is_zero


def test_parts_moves_derivative_off_the_greatest_factor():
    # the weight function absorbs the derivative, not the field
    s = C("int[x]( f(x)*phi(x)*D(phi,1)(x) )")
    assert format_expression(s) == "int[x]( -(1/2)*D(f,1)(x)*phi(x)^2 )"


def test_delta_contraction_and_orientation():
    s = C("int[x,y]( delta(y-x)*phi(x)*pi(y) )")
    assert format_expression(s) == "int[x]( phi(x)*pi(x) )"


def test_anchored_delta_substitutes_the_free_point():
    assert format_expression(C("int[x]( delta(x-u)*phi(x)^2 )")) == "phi(u)^2"


def test_derivative_delta_acts_by_parts():
    assert format_expression(C("int[x]( delta(x-u;1)*phi(x) )")) == "-D(phi,1)(u)"


def test_coincident_classical_deltas_are_refused():
    with pytest.raises(CoincidentDeltaError):
        C("int[x]( delta(x-u)*delta(x-u)*phi(x) )")


def test_derivative_order_bound():
    with pytest.raises((MaxDerivativeError, ParseError)):
        P("int[x]( D(phi,9)(x) )")


def test_multiply_merges_integrals_with_fresh_dummies():
    s = multiply(P("int[x]((1/2)*phi(x)^2)"), P("int[x]((1/2)*phi(x)^2)"))
    assert format_expression(s) == "int[x,y]( (1/4)*phi(x)^2*phi(y)^2 )"


def test_multiply_distributes_over_sums():
    gen = RandomSymbolGenerator(5)
    for _ in range(20):
        a, b, c = gen.symbol(), gen.symbol(), gen.symbol()
        lhs = multiply(a, b + c)
        rhs = multiply(a, b) + multiply(a, c)
        assert equals(lhs, rhs)


def test_multiply_commutes():
    gen = RandomSymbolGenerator(6)
    for _ in range(20):
        a, b = gen.symbol(), gen.symbol()
        assert equals(multiply(a, b), multiply(b, a))


def test_zero_is_absorbing():
    a = P("int[x](phi(x)*f(x))")
    assert multiply(a, ZERO).is_zero
    assert equals(a + ZERO, a)


def test_canonicalize_is_idempotent():
    gen = RandomSymbolGenerator(7)
    for _ in range(40):
        s = gen.symbol()
        assert canonicalize(s) == s
