"""Coefficient expressions: parsing, validation and compilation.

Metric coefficients are arithmetic strings over the spatial variables
``x1 .. xn`` using ``+ - * / ^``, the functions ``exp, sin, cos, sqrt`` and
the constants ``pi`` and ``e``.  Parsing and differentiation are delegated
to sympy; the input is tokenized against a whitelist first so nothing
outside that grammar reaches sympy's parser.
"""

from __future__ import annotations

import math
import re
from typing import Callable, Sequence

import numpy as np
import sympy as sp
from sympy.parsing.sympy_parser import (
    convert_xor,
    parse_expr,
    standard_transformations,
)

from .errors import ConfigError, EvaluationError

FUNCTIONS = {"exp": sp.exp, "sin": sp.sin, "cos": sp.cos, "sqrt": sp.sqrt}
CONSTANTS = {"pi": sp.pi, "e": sp.E}

_TOKEN = re.compile(
    r"\s*(?:"
    r"(?P<num>(?:\d+\.?\d*|\.\d+)(?:[eE][+-]?\d+)?)"
    r"|(?P<name>[A-Za-z_][A-Za-z_0-9]*)"
    r"|(?P<op>\*\*|[-+*/^()])"
    r")"
)
_VAR = re.compile(r"x(\d+)$")
_TRANSFORMS = standard_transformations + (convert_xor,)


def spatial_symbols(n: int) -> list[sp.Symbol]:
    return [sp.Symbol(f"x{i}", real=True) for i in range(1, n + 1)]


def _check_tokens(text: str, n: int) -> None:
    pos = 0
    text = text.rstrip()
    if not text:
        raise ConfigError("empty expression")
    while pos < len(text):
        m = _TOKEN.match(text, pos)
        if m is None or m.end() == pos:
            raise ConfigError(f"unexpected character {text[pos]!r} in expression {text!r}")
        name = m.group("name")
        if name is not None and name not in FUNCTIONS and name not in CONSTANTS:
            v = _VAR.match(name)
            if v is None:
                raise ConfigError(f"unknown name {name!r} in expression {text!r}")
            idx = int(v.group(1))
            if idx == 0:
                raise ConfigError(
                    f"illegal variable 'x0' in expression {text!r}: "
                    "coefficients must not depend on the time coordinate"
                )
            if idx > n:
                raise ConfigError(f"illegal variable {name!r} in expression {text!r} (n={n})")
        pos = m.end()


def parse(text: str | float | int, n: int) -> sp.Expr:
    """Parse one coefficient expression in ``n`` spatial variables."""
    if isinstance(text, (int, float)) and not isinstance(text, bool):
        if not math.isfinite(text):
            raise ConfigError(f"non-finite constant {text!r}")
        return sp.Float(text) if isinstance(text, float) else sp.Integer(text)
    if not isinstance(text, str):
        raise ConfigError(f"expression must be a string or number, got {type(text).__name__}")
    _check_tokens(text, n)
    local = {s.name: s for s in spatial_symbols(n)}
    local.update(FUNCTIONS)
    local.update(CONSTANTS)
    try:
        expr = parse_expr(text, local_dict=local, transformations=_TRANSFORMS)
    except (SyntaxError, TypeError, ValueError, sp.SympifyError) as exc:
        raise ConfigError(f"cannot parse expression {text!r}: {exc}") from None
    if not isinstance(expr, sp.Expr):
        raise ConfigError(f"expression {text!r} is not scalar")
    return expr


def compile_array(
    exprs, n: int
) -> Callable[[Sequence[float]], np.ndarray]:
    """Compile a nested list of sympy expressions into ``f(x) -> ndarray``."""
    xs = spatial_symbols(n)
    raw = sp.lambdify(xs, exprs, modules="math", cse=True)

    def evaluate(x):
        try:
            out = np.array(raw(*x), dtype=float)
        except (ValueError, ZeroDivisionError, OverflowError, TypeError) as exc:
            raise EvaluationError(f"coefficient undefined at x={list(map(float, x))}: {exc}") from None
        if not np.all(np.isfinite(out)):
            raise EvaluationError(f"non-finite coefficient at x={list(map(float, x))}")
        return out

    return evaluate


def gradient_exprs(matrix: sp.Matrix, n: int) -> list:
    """Nested list ``[l][j][k] = d matrix[j,k] / d x_{l+1}``."""
    xs = spatial_symbols(n)
    rows, cols = matrix.shape
    return [
        [[sp.diff(matrix[j, k], x) for k in range(cols)] for j in range(rows)]
        for x in xs
    ]
