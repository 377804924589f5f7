import math

import numpy as np
import pytest

from chcontrol.exprparse import (
    BinOp,
    Call,
    Neg,
    Num,
    ParseError,
    Pi,
    Var,
    evaluate,
    parse,
    pretty,
    uses_y,
)

CATALOG_FORMULAS = [
    "cos(2*pi*x)",
    "cos(2*pi*x)*exp(-t)",
    "sin(pi*x)*(t^2+1)",
    "0.1*exp(cos(pi*x))*(3*t^2+1)",
    "cos(2*pi*x*y)",
    "0.5*cos(2*pi*x)*cos(2*pi*y)*(exp(-0.1*t)+2*t)",
    "0.5*sin(x*y)*(1-2*t)",
]


class TestParseAndEvaluate:
    def test_cosine_at_half(self):
        ast = parse("cos(2*pi*x)")
        assert evaluate(ast, x=0.5) == pytest.approx(-1.0, abs=1e-15)

    def test_exp_cos_target(self):
        ast = parse("0.1*exp(cos(pi*x))*(3*t^2+1)")
        got = evaluate(ast, x=1.0, t=0.0)
        assert got == pytest.approx(0.1 * math.exp(-1.0), rel=1e-12)
        assert got == pytest.approx(0.0367879441, abs=1e-9)

    def test_truncated_call(self):
        with pytest.raises(ParseError) as err:
            parse("sin(")
        assert err.value.offset == 4

    def test_constant(self):
        assert evaluate(parse("3"), x=123.0) == 3.0

    def test_2d_target_zero_line(self):
        ast = parse("0.5*sin(x*y)*(1-2*t)")
        for y in (0.0, 0.7, -2.0):
            assert evaluate(ast, x=0.0, y=y, t=0.3) == 0.0

    def test_number_forms(self):
        assert evaluate(parse("1.5e-3"), x=0.0) == 1.5e-3
        assert evaluate(parse("2E2"), x=0.0) == 200.0

    def test_unknown_identifier(self):
        with pytest.raises(ParseError, match="unknown identifier"):
            parse("foo(x)")

    def test_trailing_garbage(self):
        with pytest.raises(ParseError):
            parse("1+2)")

    def test_unexpected_character(self):
        with pytest.raises(ParseError) as err:
            parse("1 + #")
        assert err.value.offset == 4

    def test_missing_y(self):
        with pytest.raises(ValueError, match="references 'y'"):
            evaluate(parse("x*y"), x=1.0)

    def test_uses_y(self):
        assert uses_y(parse("sin(x*y)+1"))
        assert not uses_y(parse("sin(x*t)+1"))

    def test_vectorized_evaluation(self):
        ast = parse("cos(2*pi*x)*exp(-t)")
        xs = np.linspace(0, 1, 11)
        got = evaluate(ast, x=xs, t=0.5)
        np.testing.assert_allclose(got, np.cos(2 * np.pi * xs) * np.exp(-0.5),
                                   rtol=1e-14)


class TestPrecedence:
    def test_power_binds_tightest(self):
        assert evaluate(parse("2+3*4^2"), x=0.0) == 50.0

    def test_unary_minus_below_power(self):
        assert evaluate(parse("-2^2"), x=0.0) == -4.0

    def test_power_right_associative(self):
        assert evaluate(parse("2^3^2"), x=0.0) == 512.0

    def test_negative_exponent(self):
        assert evaluate(parse("2^-3"), x=0.0) == 0.125

    def test_division_left_associative(self):
        assert evaluate(parse("8/4/2"), x=0.0) == 1.0

    def test_subtraction_left_associative(self):
        assert evaluate(parse("10-3-2"), x=0.0) == 5.0


def random_ast(rng, depth):
    """Random expression tree over the supported node kinds."""
    if depth == 0:
        kind = rng.integers(0, 3)
        if kind == 0:
            return Num(round(float(rng.uniform(0.1, 3.0)), 4))
        if kind == 1:
            return Var(str(rng.choice(["x", "y", "t"])))
        return Pi()
    kind = rng.integers(0, 3)
    if kind == 0:
        return Neg(random_ast(rng, depth - 1))
    if kind == 1:
        return Call(str(rng.choice(["sin", "cos", "exp"])),
                    random_ast(rng, depth - 1))
    op = str(rng.choice(["+", "-", "*", "/"]))
    return BinOp(op, random_ast(rng, depth - 1), random_ast(rng, depth - 1))


def eval_oracle(node, env):
    """Independent tree walk used to cross-check evaluate()."""
    if isinstance(node, Num):
        return node.value
    if isinstance(node, Pi):
        return math.pi
    if isinstance(node, Var):
        return env[node.name]
    if isinstance(node, Neg):
        return -eval_oracle(node.operand, env)
    if isinstance(node, Call):
        fn = {"sin": math.sin, "cos": math.cos, "exp": math.exp}[node.func]
        return fn(eval_oracle(node.arg, env))
    a = eval_oracle(node.left, env)
    b = eval_oracle(node.right, env)
    return {"+": a + b, "-": a - b, "*": a * b, "/": a / b,
            "^": a ** b}[node.op]


def oracle_or_none(ast, env):
    try:
        value = eval_oracle(ast, env)
    except (ZeroDivisionError, OverflowError, ValueError):
        return None
    return value if math.isfinite(value) and abs(value) < 1e12 else None


class TestRandomizedProperties:
    def test_evaluate_matches_tree_walk_oracle(self):
        rng = np.random.default_rng(100)
        checked = 0
        while checked < 60:
            ast = random_ast(rng, int(rng.integers(1, 5)))
            env = {"x": float(rng.uniform(-1, 1)),
                   "y": float(rng.uniform(-1, 1)),
                   "t": float(rng.uniform(0, 1))}
            expected = oracle_or_none(ast, env)
            if expected is None:
                continue
            got = evaluate(ast, x=env["x"], y=env["y"], t=env["t"])
            assert got == pytest.approx(expected, rel=1e-12, abs=1e-12)
            checked += 1

    def test_pretty_round_trip(self):
        rng = np.random.default_rng(101)
        checked = 0
        while checked < 100:
            ast = random_ast(rng, int(rng.integers(1, 5)))
            text = pretty(ast)
            reparsed = parse(text)
            env = {"x": float(rng.uniform(-1, 1)),
                   "y": float(rng.uniform(-1, 1)),
                   "t": float(rng.uniform(0, 1))}
            expected = oracle_or_none(ast, env)
            if expected is None:
                continue
            got = evaluate(reparsed, x=env["x"], y=env["y"], t=env["t"])
            assert got == pytest.approx(expected, rel=1e-15, abs=1e-15)
            checked += 1

    @pytest.mark.parametrize("formula", CATALOG_FORMULAS)
    def test_catalog_formulas_parse_and_evaluate_finitely(self, formula):
        ast = parse(formula)
        rng = np.random.default_rng(102)
        for _ in range(20):
            val = evaluate(ast, x=float(rng.uniform(0, 1)),
                           y=float(rng.uniform(0, 1)),
                           t=float(rng.uniform(0, 0.1)))
            assert math.isfinite(val)

    @pytest.mark.parametrize("formula", CATALOG_FORMULAS)
    def test_catalog_formulas_round_trip(self, formula):
        ast = parse(formula)
        again = parse(pretty(ast))
        rng = np.random.default_rng(103)
        for _ in range(10):
            x, y, t = rng.uniform(0, 1, 3)
            a = evaluate(ast, x=x, y=y, t=t)
            b = evaluate(again, x=x, y=y, t=t)
            assert a == pytest.approx(b, rel=1e-15, abs=1e-16)
