"""Tests for the polynomial / affine-form layer."""

from fractions import Fraction as F

import pytest
from hypothesis import given
from hypothesis import strategies as st

from streettsm.expr import Atom, LinForm, Poly, Rel, rat


def test_rat_coercions():
    assert rat(3) == F(3)
    assert rat(F(2, 7)) == F(2, 7)
    assert rat("3/7") == F(3, 7)
    assert rat("0.1") == F(1, 10)  # decimal strings parse exactly
    assert rat("-2.5e-1") == F(-1, 4)
    with pytest.raises(TypeError):
        rat(True)
    with pytest.raises(TypeError):
        rat(0.1)  # binary floats are rejected, not silently converted


def test_poly_canonical_form():
    assert Poly.const(0).is_zero()
    p = Poly.param("a") - Poly.param("a")
    assert p.is_zero() and p == Poly()
    q = Poly.param("a") * Poly.param("b")
    assert q.degree() == 2 and q.params() == {"a", "b"}
    # monomials are sorted, so a*b == b*a structurally
    assert q == Poly.param("b") * Poly.param("a")
    assert hash(q) == hash(Poly.param("b") * Poly.param("a"))


def test_poly_constant_value():
    assert Poly.const("5/2").constant_value() == F(5, 2)
    assert Poly().constant_value() == 0
    with pytest.raises(ValueError):
        Poly.param("a").constant_value()


def test_poly_partial_substitution():
    p = Poly.param("a") * Poly.param("b") + Poly.const(1)
    q = p.substitute({"a": F(2)})
    assert q == Poly.param("b").scale(2) + Poly.const(1)
    assert q.eval({"b": F(3)}) == F(7)
    with pytest.raises(KeyError):
        q.eval({})


def test_linform_cancellation():
    x = LinForm.var("x")
    s = (x.scale(F(1, 2)) + LinForm.constant(1)) + x.scale(F(1, 2))
    assert s.coeff("x") == Poly.const(1)
    assert s.const == Poly.const(1)
    assert (x - x).is_zero()
    assert "x" not in (x - x).coeffs  # zero coefficients are dropped


def test_linform_eval_frozen():
    # control-affine offset alpha*x + beta at a concrete valuation
    form = LinForm.var("x").mul_poly(Poly.param("alpha")) + LinForm.from_poly(
        Poly.param("beta")
    )
    val = form.eval({"alpha": F(-1, 32), "beta": F(4787, 512)}, {"x": F(280)})
    assert val == F(307, 512)


def test_linform_state_composition():
    # substituting x -> 2x + 3 into a form composes affinely
    x = LinForm.var("x")
    v = x.scale(F(5)) + LinForm.constant(-1)
    w = v.substitute_state({"x": x.scale(2) + LinForm.constant(3)})
    assert w.coeff("x") == Poly.const(10)
    assert w.const == Poly.const(14)
    # unmapped variables pass through
    u = (LinForm.var("x") + LinForm.var("y")).substitute_state(
        {"x": LinForm.constant(0)}
    )
    assert u.variables() == {"y"}


def test_linform_param_coefficients():
    a = Poly.param("a")
    form = LinForm.var("x").mul_poly(a)
    sub = form.substitute_state({"x": LinForm.var("x").mul_poly(a)})
    assert sub.coeff("x") == a * a
    assert sub.degree() == 2
    conc = form.substitute_params({"a": F(3)})
    assert conc.is_param_free() and conc.coeff("x") == Poly.const(3)


def test_atom_normalization():
    x = LinForm.var("x")
    ge = Atom(x - LinForm.constant(3), Rel.GE).normalized_le()
    assert len(ge) == 1 and ge[0].rel == Rel.LE
    assert ge[0].form.coeff("x") == Poly.const(-1)
    assert ge[0].form.const == Poly.const(3)

    gt = Atom(x, Rel.GT).normalized_le()
    assert len(gt) == 1 and gt[0].rel == Rel.LT

    eq = Atom(x - LinForm.constant(1), Rel.EQ).normalized_le()
    assert len(eq) == 2 and {a.rel for a in eq} == {Rel.LE}

    le = Atom(x, Rel.LE).normalized_le()
    assert list(le) == [Atom(x, Rel.LE)]


def test_atom_holds():
    x = LinForm.var("x")
    lt = Atom(x - LinForm.constant(1), Rel.LT)
    assert lt.holds({}, {"x": F(0)})
    assert not lt.holds({}, {"x": F(1)})  # strict at the boundary
    le = Atom(x - LinForm.constant(1), Rel.LE)
    assert le.holds({}, {"x": F(1)})


rationals = st.fractions(
    min_value=-5, max_value=5, max_denominator=8
)


@st.composite
def polys(draw):
    names = ["a", "b", "c"]
    terms = {}
    for _ in range(draw(st.integers(0, 4))):
        mono = tuple(
            sorted(draw(st.lists(st.sampled_from(names), max_size=2)))
        )
        terms[mono] = draw(rationals)
    return Poly(terms)


@given(polys(), polys(), polys())
def test_poly_ring_laws(p, q, r):
    assert p + q == q + p
    assert (p + q) + r == p + (q + r)
    assert p * q == q * p
    assert p * (q + r) == p * q + p * r
    assert (p - p).is_zero()


@given(polys(), polys(), rationals, rationals, rationals)
def test_poly_eval_is_homomorphism(p, q, va, vb, vc):
    env = {"a": va, "b": vb, "c": vc}
    assert (p + q).eval(env) == p.eval(env) + q.eval(env)
    assert (p * q).eval(env) == p.eval(env) * q.eval(env)


@given(rationals, rationals, rationals, rationals)
def test_linform_substitution_commutes_with_eval(c1, c0, d1, d0):
    # eval(V[x -> g(x)], s) == eval(V, x = eval(g, s))
    v = LinForm.var("x").scale(c1) + LinForm.constant(c0)
    g = LinForm.var("x").scale(d1) + LinForm.constant(d0)
    composed = v.substitute_state({"x": g})
    for xv in (F(0), F(1), F(-7, 3)):
        inner = g.eval({}, {"x": xv})
        assert composed.eval({}, {"x": xv}) == v.eval({}, {"x": inner})
