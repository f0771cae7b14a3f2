"""Tests for certificate/invariant templates and post-expectation tables."""

from fractions import Fraction as F

import pytest
from hypothesis import given
from hypothesis import strategies as st

from streettsm.benchmarks import load_benchmark, read_corpus_text
from streettsm.expr import Atom, LinForm, Poly, Rel
from streettsm.model import parse_model
from streettsm.templates import (
    FALSE_ATOM,
    CertTemplate,
    InvTemplate,
    locations,
    manual_post_lookup,
    parse_invariant,
    post_expectation,
    post_table,
)


def _e2():
    b = load_benchmark("example2")
    return b.model, b.dsa


def test_locations_are_the_state_mode_product():
    model, dsa = _e2()
    assert locations(model, dsa) == [("q0", "_"), ("q1", "_"), ("q2", "_")]
    eon = load_benchmark("evenOrNegative")
    locs = locations(eon.model, eon.dsa)
    assert len(locs) == len(eon.dsa.states) * 2 and ("q_ae", "od") in locs


def test_fresh_cert_template_parameters():
    model, dsa = _e2()
    V = CertTemplate.fresh(model, dsa, 0)
    assert len(V.params) == 3 * 2  # one slope + one offset per location
    piece = V.pieces[("q0", "_")]
    assert piece.coeff("x") == Poly.param("th0_q0___x")
    assert piece.const == Poly.param("th0_q0___c")


def test_concrete_templates_reject_parameters():
    model, dsa = _e2()
    sym = {loc: LinForm.from_poly(Poly.param("a")) for loc in locations(model, dsa)}
    with pytest.raises(ValueError, match="parameter in concrete V"):
        CertTemplate.concrete(0, sym)
    with pytest.raises(ValueError, match="parameter in concrete invariant"):
        InvTemplate.concrete({("q0", "_"): (Atom(sym[("q0", "_")], Rel.LE),)})


def test_fresh_invariant_row_count():
    model, dsa = _e2()
    inv = InvTemplate.fresh(model, dsa, nrows=3)
    assert all(len(rows) == 3 for rows in inv.rows.values())
    assert len(inv.params) == 3 * 3 * 2  # location x row x (slope, rhs)
    with pytest.raises(ValueError, match="at least one row"):
        InvTemplate.fresh(model, dsa, nrows=0)


def test_box_mean_substitution_is_symbolic_in_controls():
    model, dsa = _e2()
    V = CertTemplate.fresh(model, dsa, 0)
    table = post_expectation(V, model, dsa)
    # dynamics kappa*x + w with E[w] = 0: Post V at the self-loop piece is
    # th*kappa*x + th_c, bilinear in template and control parameters
    piece = next(
        p
        for p in table.pieces
        if p.location == ("q0", "_") and p.edge.target == "q0"
    )
    assert piece.form.coeff("x") == Poly.param("th0_q0___x") * Poly.param("kappa")
    assert piece.form.const == Poly.param("th0_q0___c")
    assert piece.form.degree() == 2


def test_piece_count_prunes_infeasible_guards():
    model, dsa = _e2()
    V = CertTemplate.fresh(model, dsa, 0)
    # 7 automaton edges, one branch, no infeasible joint guards
    assert len(post_expectation(V, model, dsa).pieces) == 7


def test_box_quadratic_disturbance_rejected():
    text = """
state_dim: 1
init: x = 0
disturbance: w box { lo = -1, hi = 1, mean = 0 }
branch _ -> _:
  guard: true
  update: x' = x + w*w
"""
    dsa_text = "states: a\ninit: a\ntrans a -> a: true\npair: A { } B { }\n"
    model = parse_model(text)
    from streettsm.automata import parse_dsa

    dsa = parse_dsa(dsa_text, variables=("x",))
    V = CertTemplate.fresh(model, dsa, 0)
    with pytest.raises(ValueError, match="quadratic disturbance"):
        post_expectation(V, model, dsa)


def test_finite_support_post_is_the_exact_mixture():
    # Post V at the parity-flip band: (V(q', 1) + V(q', -1)) / 2
    b = load_benchmark("evenOrNegative")
    vals = {loc: i + 1 for i, loc in enumerate(locations(b.model, b.dsa))}
    V = CertTemplate.concrete(
        0,
        {
            loc: LinForm.var("x").scale(F(vals[loc])) + LinForm.constant(1)
            for loc in locations(b.model, b.dsa)
        },
    )
    table = post_expectation(V, b.model, b.dsa)
    piece = next(
        p
        for p in table.pieces
        if p.location == ("q_ae", "ev")
        and all(a.holds({}, {"x": F(0)}) for a in p.guard)
    )
    c = F(vals[("q_ae", "od")])
    # E[c*x' + 1] over x' uniform on {1, -1} is exactly 1
    assert piece.form.coeff("x") == Poly.const(0)
    assert piece.form.const == Poly.const((c * 1 + 1 + c * (-1) + 1) / 2)


def _eval_post(table, loc, x):
    hits = [
        p
        for p in table.at_location(loc)
        if all(a.holds({}, {"x": x}) for a in p.guard)
    ]
    assert len(hits) == 1
    return hits[0].form.eval({}, {"x": x})


rationals = st.fractions(min_value=-5, max_value=5, max_denominator=8)


@given(rationals)
def test_branch_and_manual_routes_agree(x):
    # the parity walk carries both a branch form and a manual post table;
    # their Post V tables must evaluate identically everywhere
    b = load_benchmark("evenOrNegative")
    V = CertTemplate.concrete(
        0,
        {
            loc: LinForm.var("x").scale(F(i - 3)) + LinForm.constant(i)
            for i, loc in enumerate(locations(b.model, b.dsa))
        },
    )
    branch_route = post_expectation(V, b.model, b.dsa)
    manual_route = manual_post_lookup(b.model, V, b.dsa)
    assert post_table(V, b.model, b.dsa).pieces == manual_route.pieces
    for loc in locations(b.model, b.dsa):
        assert _eval_post(branch_route, loc, x) == _eval_post(
            manual_route, loc, x
        )


def test_manual_lookup_requires_a_table():
    model, dsa = _e2()
    V = CertTemplate.fresh(model, dsa, 0)
    with pytest.raises(ValueError, match="no manual post table"):
        manual_post_lookup(model, V, dsa)


def test_parse_invariant_normal_form():
    model, dsa = _e2()
    inv = parse_invariant(read_corpus_text("example2.inv"), model, dsa)
    (row,) = inv.rows[("q0", "_")]
    # x >= -1/5 arrives in <= normal form
    assert row.rel == Rel.LE
    assert row.form.coeff("x") == Poly.const(-1)
    assert row.form.const == Poly.const(F(-1, 5))
    assert inv.rows[("q2", "_")] == (FALSE_ATOM,)
    assert len(inv.rows[("q1", "_")]) == 2


def test_parse_invariant_rejects_bad_locations():
    model, dsa = _e2()
    from streettsm.syntax import SourceError

    with pytest.raises(SourceError, match="unknown automaton state"):
        parse_invariant("at q9: true\n", model, dsa)
    with pytest.raises(SourceError, match="duplicate location"):
        parse_invariant("at q0: true\nat q0: x >= 0\n", model, dsa)
    eon = load_benchmark("evenOrNegative")
    with pytest.raises(SourceError, match="needs one"):
        parse_invariant("at q_ae: x >= 0\n", eon.model, eon.dsa)


def test_unlisted_invariant_locations_default_to_true():
    model, dsa = _e2()
    inv = parse_invariant("at q2: false\n", model, dsa)
    assert inv.rows[("q0", "_")] == ()
    assert inv.rows[("q1", "_")] == ()
