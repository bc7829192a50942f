"""Expression language: grammar, precedence, evaluation, round-trips."""

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from fermisphere.expr import (
    BinOp,
    Coord,
    EvaluationError,
    Expression,
    ExpressionError,
    Neg,
    Num,
    Pow,
    ScalarVar,
    parse,
    to_scalar_function,
    to_spherical_function,
)


class TestParsing:
    def test_examples(self):
        assert parse("1 + 2*w1")(np.array([1.0, 0.0, 0.0])) == 3.0
        val = parse("w1^2 - w2*w3")(np.array([0.5, 0.8660254, 0.0]))
        assert val == 0.25

    def test_syntax_error_position(self):
        with pytest.raises(ExpressionError) as err:
            parse("w1 + * 2")
        assert err.value.position == 5
        assert "offset 5" in str(err.value)
        assert err.value.expected

    def test_whitespace_insensitive(self):
        assert parse(" 1+2 * w1 ").root == parse("1+2*w1").root

    @pytest.mark.parametrize("text,pos", [
        ("", 0),
        ("(", 1),
        ("w1+", 3),
        (")", 0),
        ("1 2", 2),
        ("w1 @ 2", 3),
        ("1..2", 2),
    ])
    def test_malformed_inputs_positioned(self, text, pos):
        with pytest.raises(ExpressionError) as err:
            parse(text)
        assert err.value.position == pos

    def test_unknown_identifiers(self):
        for bad in ("foo", "w0", "w", "y", "ww1"):
            with pytest.raises(ExpressionError):
                parse(bad)

    def test_exponent_rules(self):
        assert parse("w1^0")(np.array([5.0, 0.0])) == 1.0
        with pytest.raises(ExpressionError):
            parse("w1^-2")
        with pytest.raises(ExpressionError):
            parse("w1^2.5")
        with pytest.raises(ExpressionError):
            parse("w1^(2)")
        with pytest.raises(ExpressionError):
            parse("w1^5000")
        with pytest.raises(ExpressionError):
            parse("2^100^2")


class TestPrecedence:
    @pytest.mark.parametrize("text,value", [
        ("2+3*4", 14.0),
        ("2*3^2", 18.0),
        ("-2^2", -4.0),
        ("2-3-4", -5.0),
        ("2/4/2", 0.25),
        ("2^3^2", 512.0),
        ("(2+3)*4", 20.0),
        ("-(2+3)", -5.0),
        ("--2", 2.0),
    ])
    def test_table(self, text, value):
        assert parse(text)(np.zeros(2)) == value

    def test_power_binds_tighter_than_unary_minus(self):
        assert parse("-w2^2")(np.array([0.0, 3.0, 0.0])) == -9.0

    @given(st.floats(-5, 5), st.floats(-5, 5), st.floats(-5, 5))
    def test_against_python_semantics(self, a, b, c):
        pt = np.array([a, b, c])
        assert parse("w1+w2*w3")(pt) == a + b * c
        assert parse("w1-w2-w3")(pt) == (a - b) - c
        assert parse("-w1^2")(pt) == -(a ** 2)
        assert parse("w1*w2^2")(pt) == a * b ** 2


class TestEvaluation:
    def test_dimension_mismatch(self):
        with pytest.raises(EvaluationError):
            parse("w4")(np.array([1.0, 0.0, 0.0]))

    def test_division_by_zero(self):
        with pytest.raises(EvaluationError):
            parse("1/ (w1 - w1)")(np.array([1.0, 0.0]))
        with pytest.raises(EvaluationError):
            parse("1/w1")(np.array([[1.0, 0.0], [0.0, 1.0]]))

    def test_batch_evaluation(self):
        pts = np.array([[1.0, 2.0], [3.0, 4.0], [0.0, 0.5]])
        out = parse("w1 + 10*w2")(pts)
        assert np.array_equal(out, [21.0, 43.0, 5.0])

    def test_constant_expression_shapes(self):
        assert parse("2+3")(np.zeros((7, 4))).shape == (7,)
        assert parse("5").eval_scalar(np.zeros(3)).shape == (3,)

    def test_scalar_variable(self):
        h = parse("2.5*x - x^3")
        assert h.eval_scalar(1.0) == 1.5
        assert np.allclose(h.eval_scalar(np.array([0.0, 2.0])), [0.0, -3.0])

    def test_scalar_and_coordinates_do_not_mix(self):
        with pytest.raises(EvaluationError):
            parse("x + w1")(np.array([1.0, 0.0]))
        with pytest.raises(EvaluationError):
            parse("x + w1").eval_scalar(1.0)
        with pytest.raises(EvaluationError):
            parse("w1").eval_scalar(1.0)

    def test_zero_to_zero_is_one(self):
        assert parse("w1^0")(np.array([0.0, 1.0])) == 1.0


def random_tree(rng, depth, allow_scalar):
    roll = rng.random()
    if depth <= 0 or roll < 0.3:
        if allow_scalar and rng.random() < 0.3:
            return ScalarVar()
        if rng.random() < 0.5:
            # literals are nonnegative: the tokenizer never produces a
            # negative Num (unary minus is its own node)
            return Num(float(np.round(rng.uniform(0, 9), 3)))
        return Coord(int(rng.integers(1, 5)))
    if roll < 0.45:
        return Neg(random_tree(rng, depth - 1, allow_scalar))
    if roll < 0.6:
        return Pow(random_tree(rng, depth - 1, allow_scalar),
                   int(rng.integers(0, 5)))
    op = rng.choice(["+", "-", "*", "/"])
    return BinOp(op, random_tree(rng, depth - 1, allow_scalar),
                 random_tree(rng, depth - 1, allow_scalar))


class TestRoundTrip:
    def test_fuzzed_pretty_print_reparse(self):
        # Structural identity after print/reparse for 1000 random trees.
        rng = np.random.default_rng(2024)
        for _ in range(1000):
            tree = random_tree(rng, 4, allow_scalar=True)
            printed = Expression("<gen>", tree).pretty()
            reparsed = parse(printed)
            assert reparsed.root == tree, printed

    def test_negative_literals_round_trip(self):
        e = parse("-2.5")
        assert parse(e.pretty()).root == e.root

    @given(st.text(max_size=30))
    @settings(max_examples=300)
    def test_total_parsing(self, text):
        # Any input either parses or raises a positioned error; nothing
        # else escapes.
        try:
            parse(text)
        except ExpressionError as err:
            assert 0 <= err.position <= len(text)


class TestWrappers:
    def test_to_spherical_function(self):
        f = to_spherical_function("1 + 2*w1", 3, 1.0)
        assert f.dim == 3
        assert f.descriptor == "1 + 2*w1"
        assert f(np.array([1.0, 0.0, 0.0])) == 3.0

    def test_to_spherical_function_checks_dimension(self):
        with pytest.raises(EvaluationError):
            to_spherical_function("w5", 3, 1.0)
        with pytest.raises(EvaluationError):
            to_spherical_function("x", 3, 1.0)

    def test_to_scalar_function(self):
        h = to_scalar_function("-3*x")
        assert h(2.0) == -6.0
        with pytest.raises(EvaluationError):
            to_scalar_function("w1")

    def test_zero_function(self):
        f = to_spherical_function("0", 3, 1.0)
        assert np.all(f(np.random.default_rng(0).standard_normal((10, 3)))
                      == 0.0)
