import math
import warnings

import numpy as np
import pytest
from hypothesis import assume, given, settings, strategies as st

from wavectl.expr import (
    DomainError,
    NonDifferentiableWarning,
    ParseError,
    UnknownIdentifierError,
    differentiate,
    evaluate,
    parse,
)


# -- grammar ---------------------------------------------------------------


@pytest.mark.parametrize(
    "text, printed",
    [
        ("sin(2*pi*x)", "sin(2 * pi * x)"),
        ("x^2 + 1", "x^2 + 1"),
        ("2^3^2", "2^3^2"),
        ("-x^2", "-x^2"),
        ("(-x)^2", "(-x)^2"),
        ("a - (b - c)", None),
    ],
)
def test_parse_structure(text, printed):
    if printed is None:
        with pytest.raises(UnknownIdentifierError):
            parse(text)
        return
    assert str(parse(text)) == printed


@pytest.mark.parametrize(
    "text, x, expected",
    [
        ("x^2 + 1", 2.0, 5.0),
        ("pi", 0.0, math.pi),
        ("e", 0.0, math.e),
        ("2^3^2", 0.0, 512.0),
        ("-3^2", 0.0, -9.0),
        ("2**-1", 0.0, 0.5),
        ("1 - 2 - 3", 0.0, -4.0),
        ("8 / 4 / 2", 0.0, 1.0),
        ("  sqrt( x )*abs(-x) ", 4.0, 8.0),
        ("1.5e2 + .5", 0.0, 150.5),
        ("exp(ln(x)) - x", 3.0, 0.0),
        ("tan(pi/4)", 0.0, 1.0),
    ],
)
def test_evaluate_examples(text, x, expected):
    assert evaluate(parse(text), x) == pytest.approx(expected, abs=1e-14)


def test_pi_is_exact():
    assert evaluate(parse("pi"), 0) == 3.141592653589793


def test_whitespace_insensitive():
    a, b = parse("sin( 2*pi * x )"), parse("sin(2*pi*x)")
    x = np.linspace(-1, 1, 11)
    assert np.array_equal(a(x), b(x))


@pytest.mark.parametrize(
    "text, offset",
    [("sin(", 4), ("x +", 3), ("(x", 2), ("x )", 2), ("2 * * x", 4)],
)
def test_syntax_error_offsets(text, offset):
    with pytest.raises(ParseError) as info:
        parse(text)
    assert info.value.offset == offset
    assert "expected" in str(info.value)


def test_empty_text_rejected():
    with pytest.raises(ParseError) as info:
        parse("   ")
    assert info.value.offset == 0


def test_unknown_identifier():
    with pytest.raises(UnknownIdentifierError) as info:
        parse("2*y + x")
    assert info.value.offset == 2
    assert "y" in str(info.value)


def test_unknown_function():
    with pytest.raises(UnknownIdentifierError):
        parse("sinh(x)")


@pytest.mark.parametrize(
    "text, x",
    [("ln(x)", -1.0), ("ln(x)", 0.0), ("1/x", 0.0), ("sqrt(x)", -2.0), ("x^0.5", -1.0), ("x^-1", 0.0)],
)
def test_domain_errors(text, x):
    with pytest.raises(DomainError) as info:
        evaluate(parse(text), x)
    assert info.value.offset >= 0


def test_domain_error_location():
    with pytest.raises(DomainError) as info:
        evaluate(parse("1 + ln(x - 2)"), 1.0)
    assert info.value.offset == 4


def test_abs_kink_warns():
    d = differentiate(parse("abs(x)"), 1)
    with pytest.warns(NonDifferentiableWarning):
        evaluate(d, 0.0)
    with warnings.catch_warnings():
        warnings.simplefilter("error")
        assert evaluate(d, -2.0) == -1.0


def test_deterministic():
    e = parse("exp(sin(3*x)) / (2 + cos(x))")
    x = np.linspace(-3, 3, 101)
    assert np.array_equal(e(x), e(x))


# -- differentiation -------------------------------------------------------


@pytest.mark.parametrize(
    "text, order, printed",
    [
        ("sin(x)", 1, "cos(x)"),
        ("x^3", 2, "6 * x"),
        ("x^3", 3, "6"),
        ("x^3", 0, "x^3"),
        ("5", 2, "0"),
    ],
)
def test_differentiate_symbolic(text, order, printed):
    assert str(differentiate(parse(text), order)) == printed


def test_order_limit():
    with pytest.raises(ValueError):
        differentiate(parse("x"), 4)


@pytest.mark.parametrize(
    "text, x, d1",
    [
        ("exp(2*x)", 0.3, 2 * math.exp(0.6)),
        ("ln(x)", 2.0, 0.5),
        ("sqrt(x)", 4.0, 0.25),
        ("tan(x)", 0.2, 1 / math.cos(0.2) ** 2),
        ("x^x", 2.0, 4 * (math.log(2) + 1)),
        ("2^x", 1.0, 2 * math.log(2)),
        ("1/(1+x^2)", 1.0, -0.5),
    ],
)
def test_derivative_values(text, x, d1):
    assert evaluate(differentiate(parse(text), 1), x) == pytest.approx(d1, rel=1e-13)


_LEAVES = ["x", "1", "2", "0.5", "pi"]
_UNARY = ["sin", "cos"]


def _random_tree(rng, depth):
    if depth == 0 or rng.random() < 0.2:
        return rng.choice(_LEAVES)
    kind = rng.integers(0, 5)
    a = _random_tree(rng, depth - 1)
    if kind == 0:
        return f"{rng.choice(_UNARY)}({a})"
    if kind == 1:
        return f"({a})^{int(rng.integers(1, 4))}"
    if kind == 2:
        return f"-({a})"
    op = "+" if kind == 3 else "*"
    return f"({a}) {op} ({_random_tree(rng, depth - 1)})"


@pytest.mark.parametrize("seed", range(20))
def test_derivative_vs_central_difference(seed):
    rng = np.random.default_rng(seed)
    text = f"({_random_tree(rng, 3)}) * ({_random_tree(rng, 2)})"
    e = parse(text)
    d = differentiate(e, 1)
    x0 = rng.uniform(-1.5, 1.5, 50)
    h = 1e-5
    fd = (e(x0 + h) - e(x0 - h)) / (2 * h)
    scale = np.maximum(1.0, np.abs(e(x0)))
    assert np.all(np.abs(d(x0) - fd) <= 1e-6 * scale), text


# -- properties ------------------------------------------------------------


def _exprs():
    leaf = st.sampled_from(["x", "1", "2.5", "pi", "e", "0.25"])

    def extend(sub):
        return st.one_of(
            st.tuples(sub, st.sampled_from(["+", "-", "*"]), sub).map(lambda t: f"({t[0]}) {t[1]} ({t[2]})"),
            st.tuples(st.sampled_from(["sin", "cos", "exp"]), sub).map(lambda t: f"{t[0]}({t[1]})"),
            sub.map(lambda s: f"-({s})"),
            st.tuples(sub, st.integers(0, 3)).map(lambda t: f"({t[0]})^{t[1]}"),
        )

    return st.recursive(leaf, extend, max_leaves=6)


def _close(a, b, rel=1e-12):
    a, b = np.asarray(a), np.asarray(b)
    return np.all(np.abs(a - b) <= rel * np.maximum(1.0, np.maximum(np.abs(a), np.abs(b))))


X = np.random.default_rng(7).uniform(-1.0, 1.0, 100)


@given(_exprs())
@settings(max_examples=60, deadline=None)
def test_print_round_trip(text):
    e = parse(text)
    again = parse(str(e))
    assert str(again) == str(e)
    assert _close(e(X), again(X))


@given(_exprs(), _exprs(), st.floats(-3, 3))
@settings(max_examples=40, deadline=None)
def test_linearity(t1, t2, a):
    e1, e2 = parse(t1), parse(t2)
    combo = parse(f"{a!r} * ({t1}) + ({t2})")
    lhs = differentiate(combo, 1)(X)
    rhs = a * differentiate(e1, 1)(X) + differentiate(e2, 1)(X)
    assume(np.all(np.isfinite(lhs)))
    assert _close(lhs, rhs)


@given(_exprs())
@settings(max_examples=40, deadline=None)
def test_order_consistency(text):
    e = parse(text)
    once = differentiate(differentiate(e, 1), 1)(X)
    twice = differentiate(e, 2)(X)
    assume(np.all(np.isfinite(twice)))
    assert _close(once, twice)
