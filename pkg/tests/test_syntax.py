"""Tests for the shared tokenizer and expression/atom parsing."""

from fractions import Fraction as F

import pytest
from hypothesis import given
from hypothesis import strategies as st

from streettsm.expr import LinForm, Poly, Rel
from streettsm.syntax import (
    ModeTest,
    SourceError,
    TokenStream,
    logical_lines,
    parse_atom,
    parse_conjunction,
    parse_expression,
    parse_number,
    strip_comment,
    tokenize,
)


def _ts(text, line=1):
    return TokenStream(tokenize(text, line=line))


def _resolver(variables=("x", "y"), params=("kappa", "alpha")):
    def resolve(name):
        if name in variables:
            return LinForm.var(name)
        if name in params:
            return LinForm.from_poly(Poly.param(name))
        return None

    return resolve


def test_token_positions():
    toks = tokenize("x <= 10", line=7)
    assert [(t.kind, t.text) for t in toks] == [
        ("ident", "x"),
        ("op", "<="),
        ("num", "10"),
        ("eof", ""),
    ]
    assert toks[0].line == 7 and toks[0].col == 1
    assert toks[2].col == 6


def test_tokenize_rejects_stray_characters():
    with pytest.raises(SourceError) as e:
        tokenize("x @ 1")
    assert e.value.col == 3


def test_parse_number_forms():
    assert parse_number(_ts("3")) == 3
    assert parse_number(_ts("0.125")) == F(1, 8)
    assert parse_number(_ts("-7/2")) == F(-7, 2)
    assert parse_number(_ts("--5")) == 5  # signs compose
    with pytest.raises(SourceError):
        parse_number(_ts("x"))


def test_expression_affine_arithmetic():
    form = parse_expression(_ts("2*x - (x + 1)/2"), _resolver())
    assert form.coeff("x") == Poly.const(F(3, 2))
    assert form.const == Poly.const(F(-1, 2))


def test_expression_parameter_products():
    # parameters may multiply variables; the coefficient stays polynomial
    form = parse_expression(_ts("kappa*x + alpha*kappa"), _resolver())
    assert form.coeff("x") == Poly.param("kappa")
    assert form.const == Poly.param("alpha") * Poly.param("kappa")


def test_expression_rejects_nonaffine():
    with pytest.raises(SourceError) as e:
        parse_expression(_ts("x * y"), _resolver())
    assert "not affine" in str(e.value)
    with pytest.raises(SourceError):
        parse_expression(_ts("1 / x"), _resolver())
    with pytest.raises(SourceError):
        parse_expression(_ts("x / 0"), _resolver())


def test_expression_unknown_name_position():
    with pytest.raises(SourceError) as e:
        parse_expression(_ts("x + zz", line=12), _resolver())
    assert e.value.line == 12 and e.value.col == 5


def test_atom_relations():
    a = parse_atom(_ts("x + 1 >= 2*y"), _resolver())
    assert a.rel == Rel.GE
    # lhs - rhs is stored
    assert a.form.coeff("y") == Poly.const(-2)

    with pytest.raises(SourceError):
        parse_atom(_ts("x + 1"), _resolver())


def test_mode_atoms_need_mode_list():
    t = parse_atom(_ts("mode == ev"), _resolver(), modes=("ev", "od"))
    assert t == ModeTest("ev", equal=True)
    assert t.holds("ev") and not t.holds("od")
    t2 = parse_atom(_ts("mode != ev"), _resolver(), modes=("ev", "od"))
    assert not t2.holds("ev") and t2.holds("od")

    with pytest.raises(SourceError):
        parse_atom(_ts("mode == hot"), _resolver(), modes=("ev", "od"))
    # without a mode list, 'mode' is an ordinary (unknown) identifier
    with pytest.raises(SourceError):
        parse_atom(_ts("mode == ev"), _resolver())


def test_conjunction_true_and_lists():
    atoms, tests = parse_conjunction(_ts("true"), _resolver())
    assert atoms == [] and tests == []

    atoms, tests = parse_conjunction(
        _ts("x >= 1 and mode == od and x < 2"),
        _resolver(),
        modes=("ev", "od"),
    )
    assert len(atoms) == 2 and len(tests) == 1
    assert atoms[1].rel == Rel.LT


def test_comment_and_line_handling():
    assert strip_comment("x >= 1  # boundary") == "x >= 1  "
    text = "a: 1\n\n# full comment line\nb: 2  # tail\n"
    assert logical_lines(text) == [(1, "a: 1"), (4, "b: 2")]


@st.composite
def linear_texts(draw):
    """A random affine expression as source text plus its exact meaning."""
    rationals = st.fractions(min_value=-4, max_value=4, max_denominator=6)
    terms = []
    coeff = {"x": F(0), "y": F(0)}
    const = F(0)
    for _ in range(draw(st.integers(1, 4))):
        c = draw(rationals)
        v = draw(st.sampled_from(["x", "y", None]))
        lit = f"({c.numerator}/{c.denominator})" if c.denominator != 1 else (
            f"({c.numerator})"
        )
        if v is None:
            terms.append(lit)
            const += c
        else:
            terms.append(f"{lit}*{v}")
            coeff[v] += c
    return " + ".join(terms), coeff, const


@given(linear_texts())
def test_parse_expression_matches_direct_meaning(case):
    text, coeff, const = case
    form = parse_expression(_ts(text), _resolver())
    for v, c in coeff.items():
        assert form.coeff(v) == Poly.const(c)
    assert form.const == Poly.const(const)
