"""Problem-file parser: grammar, diagnostics, lowering, print round-trip."""

import random
from fractions import Fraction

import mpmath
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from mpmath import mpc, mpf

from residuum.dsl import (
    Bin,
    ExpCall,
    Name,
    Num,
    ParseError,
    ProblemError,
    ProblemSpec,
    load_problem,
    parse_problem,
    random_spec,
)

EXAMPLE = """\
vars x y;
cone (1,0) (-1,1);
param s1=1 n1=2;
num n1^(i*x - s1) * exp(2*pi*i*y);
den (x - i) (y - i) (x + y - 2*i)^2;
"""


def test_example_parses():
    spec = parse_problem(EXAMPLE)
    assert spec.variables == ("x", "y")
    assert spec.cone == ((Fraction(1), Fraction(0)), (Fraction(-1), Fraction(1)))
    assert [n for n, _ in spec.parameters] == ["s1", "n1"]
    assert isinstance(spec.numerator, Bin)
    assert [m for _, m in spec.denominator] == [1, 1, 2]


def test_example_lowers():
    arr = parse_problem(EXAMPLE).arrangement()
    assert arr.dim == 2
    assert [h.f for h in arr.hyperplanes] == [(1, 0), (0, 1), (1, 1)]
    for h, expected_s in zip(arr.hyperplanes, (1, 1, 2)):
        assert abs(h.s - expected_s) < mpf("1e-30")
    assert arr.multiplicities == (1, 1, 2)


def test_statement_order_free():
    reordered = """\
den (x - i) (y - i) (x + y - 2*i)^2;
num n1^(i*x - s1) * exp(2*pi*i*y);
cone (1,0) (-1,1);
param s1=1 n1=2;
vars x y;
"""
    assert parse_problem(reordered) == parse_problem(EXAMPLE)


def test_comments_and_whitespace():
    text = """\
# three-plane example
vars x   y;   # integration variables
cone (1, 0)   (-1, 1);
den (x-i)(y-i);
"""
    spec = parse_problem(text)
    assert spec.variables == ("x", "y")
    assert len(spec.denominator) == 2


def test_numerator_defaults_to_one():
    spec = parse_problem("vars x; cone (1); den (x - i);")
    assert spec.numerator is None
    numer = spec.arrangement().numerator
    assert abs(numer.evaluate([mpf("0.37")]) - 1) < mpf("1e-30")


def test_missing_semicolon_reports_position():
    text = "vars x y\ncone (1,0) (0,1);\nden (x - i) (y - i);"
    with pytest.raises(ParseError) as exc:
        parse_problem(text)
    assert exc.value.line == 2
    assert exc.value.col == 1
    assert "';'" in exc.value.expected


def test_unknown_statement_lists_keywords():
    with pytest.raises(ParseError) as exc:
        parse_problem("vars x; foo (1);")
    assert exc.value.line == 1
    assert exc.value.col == 9
    assert set(exc.value.expected) == {"cone", "den", "num", "param", "vars"}


def test_expression_error_expected_set():
    with pytest.raises(ParseError) as exc:
        parse_problem("vars x; cone (1); num 2*; den (x - i);")
    assert exc.value.line == 1
    assert "integer" in exc.value.expected
    assert "name" in exc.value.expected


def test_stray_character():
    with pytest.raises(ParseError) as exc:
        parse_problem("vars x; cone (1); den (x - i); @")
    assert exc.value.col == 32


def test_duplicate_statement():
    with pytest.raises(ParseError, match="duplicate 'vars'"):
        parse_problem("vars x; vars y; cone (1); den (x - i);")


def test_duplicate_variable():
    with pytest.raises(ParseError, match="duplicate variable"):
        parse_problem("vars x x; cone (1); den (x - i);")


def test_reserved_names_rejected():
    with pytest.raises(ParseError, match="reserved"):
        parse_problem("vars pi; cone (1); den (pi - i);")
    with pytest.raises(ParseError, match="reserved"):
        parse_problem("vars x; cone (1); param exp=2; den (x - i);")


def test_missing_statements():
    with pytest.raises(ParseError, match="missing 'den'"):
        parse_problem("vars x; cone (1);")
    with pytest.raises(ParseError, match="missing 'cone'"):
        parse_problem("vars x; den (x - i);")
    with pytest.raises(ParseError, match="missing 'vars'"):
        parse_problem("cone (1); den (x - i);")


def test_cone_shape_errors():
    with pytest.raises(ProblemError, match="generators"):
        parse_problem("vars x y; cone (1,0); den (x - i) (y - i);")
    with pytest.raises(ProblemError, match="entries"):
        parse_problem("vars x y; cone (1,0) (1,0,2); den (x - i) (y - i);")
    with pytest.raises(ProblemError, match="dependent"):
        parse_problem("vars x y; cone (1,0) (2,0); den (x - i) (y - i);")


def test_fractional_cone_entries():
    spec = parse_problem("vars x y; cone (1,0) (-1/2,1); den (x - i) (y - i);")
    assert spec.cone[1][0] == Fraction(-1, 2)
    assert spec.polyhedron().det() == 1


def test_unbound_parameter_positions():
    with pytest.raises(ProblemError) as exc:
        parse_problem("vars x; cone (1); num n3*x; den (x - i);")
    assert "unbound parameter 'n3'" in str(exc.value)
    assert exc.value.line == 1
    assert exc.value.col == 23

    with pytest.raises(ProblemError, match="unbound parameter 'b'"):
        parse_problem("vars x; cone (1); param a=b; den (x - i);")
    with pytest.raises(ProblemError, match="integration variable"):
        parse_problem("vars x; cone (1); param a=2*x; den (x - i);")
    with pytest.raises(ProblemError, match="unbound parameter 'q'"):
        parse_problem("vars x; cone (1); den (x - q*i);")


def test_parameter_must_be_scalar():
    spec = parse_problem(
        "vars x; cone (1); param a=1+exp(2); den (x - a*i);"
    )
    arr = spec.arrangement()
    assert abs(arr.hyperplanes[0].s - (1 + mpmath.exp(2))) < mpf("1e-25")


def test_power_numerator_matches_direct():
    spec = parse_problem(
        "vars x y; cone (1,0) (0,1); param s1=1 s2=1;"
        "num 2^(i*x - s1)*3^(i*y - s2); den (x - i) (y - i);"
    )
    with mpmath.mp.workprec(160):
        numer = spec.arrangement().numerator
        pt = [mpf("0.3"), mpf("-0.7")]
        direct = mpmath.power(2, mpc(0, 1) * pt[0] - 1) * mpmath.power(
            3, mpc(0, 1) * pt[1] - 1
        )
        assert abs(numer.evaluate(pt) - direct) < mpf("1e-30")


def test_exp_numerator_matches_direct():
    spec = parse_problem(
        "vars x y; cone (1,0) (0,1);"
        "num exp(2*pi*i*(x + 2*y)); den (x - i) (y - i);"
    )
    with mpmath.mp.workprec(160):
        numer = spec.arrangement().numerator
        pt = [mpf("0.25"), mpf("0.125")]
        direct = mpmath.exp(2 * mpmath.pi * mpc(0, 1) * (pt[0] + 2 * pt[1]))
        assert abs(numer.evaluate(pt) - direct) < mpf("1e-30")


def test_parameter_chain_and_rationals():
    spec = parse_problem(
        "vars x; cone (1); param a=1/2 b=4*a;"
        "num exp(i*b*x); den (x - b*i);"
    )
    arr = spec.arrangement()
    assert abs(arr.hyperplanes[0].s - 2) < mpf("1e-30")
    val = arr.numerator.evaluate([mpf(3)])
    assert abs(val - mpmath.exp(mpc(0, 6))) < mpf("1e-30")


def test_coincident_factors_merge():
    arr = parse_problem(
        "vars x; cone (1); den (x - i) (2*x - 2*i);"
    ).arrangement()
    assert len(arr.hyperplanes) == 1
    assert arr.multiplicities == (2,)

    arr2 = parse_problem("vars x; cone (1); den (x - i)^3;").arrangement()
    assert arr2.multiplicities == (3,)


def test_non_affine_factor_rejected():
    with pytest.raises(ProblemError, match="not affine"):
        parse_problem("vars x y; cone (1,0) (0,1); den (x*y - i);").arrangement()
    with pytest.raises(ProblemError, match="not affine"):
        parse_problem("vars x; cone (1); den (exp(x) - i);").arrangement()
    with pytest.raises(ProblemError, match="constant"):
        parse_problem("vars x; cone (1); den (2 - i);").arrangement()


def test_real_hyperplane_rejected():
    with pytest.raises(ProblemError, match="real locus"):
        parse_problem("vars x; cone (1); den (x - 1);").arrangement()


def test_misaligned_complex_row_rejected():
    with pytest.raises(ProblemError, match="not parallel"):
        parse_problem(
            "vars x y; cone (1,0) (0,1); den ((1+i)*x + y - i) (y - i);"
        ).arrangement()


def test_irrational_coefficient_rejected():
    with pytest.raises(ProblemError, match="exact rationals"):
        parse_problem("vars x; cone (1); den (pi*x - i);").arrangement()


def test_irrational_offset_allowed():
    arr = parse_problem("vars x; cone (1); den (x - pi*i);").arrangement()
    assert abs(arr.hyperplanes[0].s - mpmath.pi) < mpf("1e-30")


def test_complex_rational_row_canonicalizes():
    arr = parse_problem("vars x; cone (1); den (i*x - 1);").arrangement()
    h = arr.hyperplanes[0]
    assert h.f == (-1,)
    assert abs(h.s - 1) < mpf("1e-30")


def test_division_rules():
    spec = parse_problem("vars x; cone (1); num x/2; den (x - i);")
    assert abs(spec.arrangement().numerator.evaluate([mpf(3)]) - mpf("1.5")) < mpf(
        "1e-30"
    )
    with pytest.raises(ProblemError, match="division"):
        parse_problem("vars x; cone (1); num 2/x; den (x - i);").arrangement()
    with pytest.raises(ProblemError, match="zero"):
        parse_problem("vars x; cone (1); num x/(2 - 2); den (x - i);").arrangement()


def test_power_rules():
    spec = parse_problem("vars x y; cone (1,0) (0,1); num (x + y)^2; den (x - i) (y - i);")
    numer = spec.arrangement().numerator
    assert abs(numer.evaluate([mpf(2), mpf(3)]) - 25) < mpf("1e-28")

    scalar = parse_problem(
        "vars x; cone (1); num 2^pi; den (x - i);"
    ).arrangement()
    assert abs(scalar.numerator.evaluate([mpf(0)]) - mpmath.power(2, mpmath.pi)) < mpf(
        "1e-28"
    )

    with pytest.raises(ProblemError, match="negative power"):
        parse_problem("vars x; cone (1); num x^(-1); den (x - i);").arrangement()
    with pytest.raises(ProblemError, match="scalar base"):
        parse_problem(
            "vars x y; cone (1,0) (0,1); num (x + y)^x; den (x - i) (y - i);"
        ).arrangement()


def test_load_problem(tmp_path):
    path = tmp_path / "p.rsd"
    path.write_text(EXAMPLE)
    assert load_problem(str(path)) == parse_problem(EXAMPLE)


def test_error_message_format():
    try:
        parse_problem("vars x;\ncone 1;\nden (x - i);")
    except ParseError as exc:
        text = str(exc)
        assert text.startswith("line 2, column 6:")
        assert "expected" in text
    else:
        raise AssertionError("expected a parse error")


def test_pretty_roundtrip_example():
    spec = parse_problem(EXAMPLE)
    printed = spec.pretty()
    assert parse_problem(printed) == spec
    assert parse_problem(printed).pretty() == printed


def test_pretty_canonical_layout():
    printed = parse_problem(EXAMPLE).pretty()
    assert printed.splitlines()[0] == "vars x y;"
    assert printed.splitlines()[1] == "cone (1,0) (-1,1);"
    assert printed.splitlines()[4] == "den (x - i) (y - i) (x + y - 2*i)^2;"


@given(st.integers(min_value=0, max_value=2**32 - 1))
@settings(max_examples=100, deadline=None)
def test_pretty_roundtrip_random(seed):
    spec = random_spec(random.Random(seed))
    printed = spec.pretty()
    reparsed = parse_problem(printed)
    assert reparsed == spec
    assert reparsed.pretty() == printed


def test_ast_equality_ignores_positions():
    a = parse_problem("vars x; cone (1); num x + 1; den (x - i);")
    b = parse_problem("vars x; cone (1); num   x+1; den (x - i);")
    assert a == b
    assert a.numerator == Bin("+", Name("x"), Num(1))
    assert parse_problem(
        "vars x; cone (1); num exp(x); den (x - i);"
    ).numerator == ExpCall(Name("x"))
