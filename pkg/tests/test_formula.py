import pytest

from troplim.formula import (Atom, And, Exists, Not, Or, Parameter,
                             ParameterEnvironment, ParseError, Power, Product,
                             Sum, Variable, formula_to_str, free_variables,
                             is_positive, normalize_polynomial, parse_formula,
                             parse_term, term_to_str)


def roundtrip(text: str) -> str:
    return term_to_str(parse_term(text))


def froundtrip(text: str) -> str:
    return formula_to_str(parse_formula(text))


def test_term_roundtrips():
    assert roundtrip("x1 + x2*x3") == "x1 + x2*x3"
    assert roundtrip("(x1 + x2)*x3") == "(x1 + x2)*x3"
    assert roundtrip("x1^2*x2") == "x1^2*x2"
    assert roundtrip("x1^(1/2)") == "x1^(1/2)"
    assert roundtrip("2*x1 + 3/4") == "2*x1 + 3/4"
    assert roundtrip("(x1*x2)^3") == "(x1*x2)^3"
    with pytest.raises(ParseError):
        parse_term("x1^2^3")  # exponent chains must be parenthesized


def test_power_of_sum_keeps_parens():
    t = parse_term("(x1 + 1)^2")
    assert term_to_str(t) == "(x1 + 1)^2"
    assert isinstance(t, Power) and isinstance(t.base, Sum)


def test_formula_roundtrips():
    assert froundtrip("x1 <= x2") == "x1 <= x2"
    assert froundtrip("x1 = x2 & x2 <= 1") == "x1 = x2 & x2 <= 1"
    assert froundtrip("x1 <= 1 | x2 <= 1 & x3 <= 1") == \
        "x1 <= 1 | x2 <= 1 & x3 <= 1"
    assert froundtrip("(x1 <= 1 | x2 <= 1) & x3 <= 1") == \
        "(x1 <= 1 | x2 <= 1) & x3 <= 1"
    assert froundtrip("!(x1 <= x2)") == "!(x1 <= x2)"


def test_quantifier_parsing():
    f = parse_formula("E x2 . x1 <= x2 & x2 <= 1")
    assert isinstance(f, Exists)
    # the quantifier scopes over the whole conjunction
    assert isinstance(f.body, And)
    assert froundtrip("E x2 . x1 <= x2") == "E x2 . x1 <= x2"
    assert froundtrip("A x1 . x1 <= x1") == "A x1 . x1 <= x1"


def test_parse_errors_carry_position():
    with pytest.raises(ParseError):
        parse_term("x1 +* x2")
    with pytest.raises(ParseError):
        parse_formula("x1 <=")
    with pytest.raises(ParseError):
        parse_formula("x1 < x2")  # strict inequalities are not in the language
    err = None
    try:
        parse_term("x1 + ")
    except ParseError as exc:
        err = exc
    assert err is not None and err.position >= 0


def test_free_variables():
    assert free_variables(parse_formula("x1 <= x3")) == {0, 2}
    assert free_variables(parse_formula("E x2 . x1 <= x2")) == {0}


def test_is_positive():
    assert is_positive(parse_formula("x1 <= x2 | x1 = 1"))
    assert not is_positive(parse_formula("!(x1 <= x2)"))


def test_parameter_environment():
    env = ParameterEnvironment({"a1": 2.5})
    assert env["a1"] == 2.5
    assert env["3/4"] == 0.75  # literal names fall back to their value
    assert "a1" in env and "3/4" in env and "b9" not in env
    with pytest.raises(KeyError):
        env["b9"]
    with pytest.raises(ValueError):
        ParameterEnvironment({"a1": -1.0})


def test_normalize_polynomial_splits_signs():
    f = normalize_polynomial("x^2 - 4x + y^2 - 6y + 27/4 = 0")
    assert formula_to_str(f) == "x1^2 + x2^2 + 27/4 = 4*x1 + 6*x2"
    assert isinstance(f, Atom) and f.rel == "eq"


def test_normalize_polynomial_cubic():
    f = normalize_polynomial("x^2 + y^2 + 1 - 2y - x^3 = 0")
    assert formula_to_str(f) == "x1^2 + x2^2 + 1 = x1^3 + 2*x2"


def test_normalize_polynomial_three_vars():
    f = normalize_polynomial("x^2 - x^2*(z - 2)^2 - x^4 - (y - 1)^2 = 0")
    s = formula_to_str(f)
    # expanded into positive coefficients on both sides
    assert "=" in s and "-" not in s
    assert free_variables(f) == {0, 1, 2}
