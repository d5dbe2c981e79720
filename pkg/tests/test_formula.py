import numpy as np
import pytest

from dbpsense.errors import (
    FormulaDomainError,
    FormulaSyntaxError,
    MissingVariableError,
    UnknownCharacterError,
)
from dbpsense.formula import BinOp, Num, Var, eval_formula, parse_formula, to_source


def ev(source, **bindings):
    return eval_formula(parse_formula(source), bindings)


def test_unit_variables_expose_coefficient():
    assert ev("0.04121 * TOC^1.098 * Cl2^0.152", TOC=1.0, Cl2=1.0) == pytest.approx(0.04121)


def test_power_right_associative():
    assert ev("2^3^2") == 512.0


def test_double_caret_syntax_error_position():
    with pytest.raises(FormulaSyntaxError) as ei:
        parse_formula("TOC^^2")
    assert ei.value.position == 4
    assert "offset 4" in str(ei.value)


def test_constant_formula_ignores_bindings():
    assert ev("42", a=1.0) == 42.0


def test_average():
    assert ev("(a+b)/2", a=10.0, b=20.0) == 15.0


def test_precedence():
    assert ev("2+3*4") == 14.0
    assert ev("2*3^2") == 18.0
    assert ev("-2^2") == -4.0       # unary minus binds looser than power
    assert ev("(-2)^2") == 4.0
    assert ev("2^-1") == 0.5
    assert ev("10-4-3") == 3.0      # left associative


def test_scientific_notation_literals():
    assert ev("1.5e-3 + 2E2") == pytest.approx(200.0015)
    assert ev(".5 * 4") == 2.0


def test_division_by_zero_reports_subexpression():
    with pytest.raises(FormulaDomainError) as ei:
        ev("1/(a-b)", a=2.0, b=2.0)
    assert ei.value.subexpression == "1.0/(a - b)"


def test_fractional_power_of_negative_base():
    with pytest.raises(FormulaDomainError):
        ev("x^0.5", x=-4.0)
    # integer exponents of negative bases are fine
    assert ev("x^2", x=-3.0) == 9.0


def test_zero_base_negative_exponent():
    with pytest.raises(FormulaDomainError):
        ev("x^-1", x=0.0)


def test_missing_variable_named():
    with pytest.raises(MissingVariableError) as ei:
        ev("TOC + 1")
    assert ei.value.name == "TOC"


def test_unknown_character_offset():
    with pytest.raises(UnknownCharacterError) as ei:
        parse_formula("TOC + $2")
    assert ei.value.position == 6


def test_unbalanced_parens():
    with pytest.raises(FormulaSyntaxError):
        parse_formula("(a + b")
    with pytest.raises(FormulaSyntaxError):
        parse_formula("a + b)")


def test_empty_formula_rejected():
    with pytest.raises(FormulaSyntaxError):
        parse_formula("   ")


@pytest.mark.parametrize("source", [
    "0.04121 * TOC^1.098 * Cl2^0.152",
    "2^3^2",
    "-(a+b)/2 - c*d",
    "a - (b - c)",
    "a - b - c",
    "(a*b)^2",
    "-x^2",
    "(-x)^2",
    "1/(a-b)",
    "(2^3)^2",
    "a/(b/c)",
    "1.5e-3 + x",
])
def test_pretty_print_fixed_point(source):
    f1 = parse_formula(source)
    printed = to_source(f1.ast)
    f2 = parse_formula(printed)
    assert f2.ast == f1.ast
    assert to_source(f2.ast) == printed


def test_ast_shape():
    f = parse_formula("2 + x*3")
    assert f.ast == BinOp("+", Num(2.0), BinOp("*", Var("x"), Num(3.0)))
    assert f.variables == frozenset({"x"})


def test_array_bindings_evaluate_elementwise():
    got = ev("a*x + b", a=2.0, x=np.array([1.0, 2.0, 3.0]), b=1.0)
    assert np.array_equal(got, [3.0, 5.0, 7.0])


def test_array_domain_violation_detected():
    with pytest.raises(FormulaDomainError):
        ev("x^0.5", x=np.array([4.0, -1.0]))


def test_no_nan_ever_returned():
    with pytest.raises(FormulaDomainError):
        ev("x - x + y", x=float("inf"), y=1.0)
