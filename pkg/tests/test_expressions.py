import math

import pytest

from lorentz_inverse import expressions
from lorentz_inverse.errors import ConfigError, EvaluationError


@pytest.mark.parametrize("text,x,expected", [
    ("1 + 0.5*exp(-x1^2)", [0.0], 1.5),
    ("x1**2 + 2*x2", [3.0, 1.0], 11.0),
    ("sqrt(x1)*cos(pi*x2)", [4.0, 1.0], -2.0),
    ("-x1/2 + e", [1.0], math.e - 0.5),
    ("1e-3*x1", [2.0], 2e-3),
])
def test_parse_and_evaluate(text, x, expected):
    expr = expressions.parse(text, len(x))
    f = expressions.compile_array([[expr]], len(x))
    assert f(x)[0, 0] == pytest.approx(expected, rel=1e-15)


def test_time_variable_rejected_by_name():
    with pytest.raises(ConfigError, match="x0"):
        expressions.parse("x0 + 1", 1)


@pytest.mark.parametrize("text", ["x3", "foo(x1)", "__import__('os')", "x1; 2", "", "1 +", "log(x1)"])
def test_rejects_outside_grammar(text):
    with pytest.raises(ConfigError):
        expressions.parse(text, 2)


def test_undefined_value_is_evaluation_error():
    f = expressions.compile_array([[expressions.parse("sqrt(x1)", 1)]], 1)
    with pytest.raises(EvaluationError):
        f([-1.0])
    g = expressions.compile_array([[expressions.parse("1/x1", 1)]], 1)
    with pytest.raises(EvaluationError):
        g([0.0])


def test_numbers_accepted():
    assert float(expressions.parse(2, 1)) == 2.0
    assert float(expressions.parse(-0.25, 1)) == -0.25
