"""Affine certificate templates, polyhedral invariant templates, and
symbolic post-expectations over the product process.

A certificate template assigns each product location (automaton state,
model mode) one affine form theta . x + theta_0 with fresh parameters; an
invariant template assigns each location a conjunction of R rows
eta . x <= eta' with fresh parameters (R configurable, default 2).  A
"false" location needs no special literal: the solver can pick an
infeasible row such as 0 <= -1.

The post-expectation of V at location (q, m) is computed piecewise, one
piece per automaton edge from q times model branch from m:

    Post V(x) = sum_w p(w) . V(f(x, w), (edge target, branch target mode))

on the conjunction of the branch guard and the edge guard.  The automaton
target depends only on the current observation, never on w.  For finitely
supported disturbances the sum is exact; for box-supported disturbances
the mean is substituted, which is exact for affine V provided no update
monomial carries two disturbance factors.  Models may instead supply a
manual post table (an explicit successor distribution per region), which
is consumed verbatim after cover validation.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction

from .automata import GuardedDSA, Transition
from .expr import Atom, LinForm, Param, ParamKind, Poly, Rel
from .lp import atoms_feasible
from .model import StochModel
from .syntax import (
    SourceError,
    TokenStream,
    logical_lines,
    parse_conjunction,
    tokenize,
)

# A product location: (automaton state, model mode).
Location = tuple[str, str]

# Canonical unsatisfiable row used for provided "false" invariants.
FALSE_ATOM = Atom(LinForm.constant(1), Rel.LE)


def locations(model: StochModel, dsa: GuardedDSA) -> list[Location]:
    return [(q, m) for q in dsa.states for m in model.modes]


@dataclass(frozen=True)
class CertTemplate:
    """One affine piece of V per product location, for one Streett pair."""

    pair_index: int
    pieces: dict[Location, LinForm]
    params: tuple[Param, ...] = ()

    @staticmethod
    def fresh(
        model: StochModel, dsa: GuardedDSA, pair_index: int
    ) -> "CertTemplate":
        pieces: dict[Location, LinForm] = {}
        params: list[Param] = []
        for q, m in locations(model, dsa):
            form = LinForm()
            for v in model.state_vars:
                name = f"th{pair_index}_{q}_{m}_{v}"
                params.append(Param(name, ParamKind.CERT))
                form = form + LinForm.var(v).mul_poly(Poly.param(name))
            cname = f"th{pair_index}_{q}_{m}_c"
            params.append(Param(cname, ParamKind.CERT))
            form = form + LinForm.from_poly(Poly.param(cname))
            pieces[(q, m)] = form
        return CertTemplate(pair_index, pieces, tuple(params))

    @staticmethod
    def concrete(
        pair_index: int, pieces: dict[Location, LinForm]
    ) -> "CertTemplate":
        for loc, form in pieces.items():
            if not form.is_param_free():
                raise ValueError(f"parameter in concrete V at {loc}")
        return CertTemplate(pair_index, dict(pieces), ())


@dataclass(frozen=True)
class InvTemplate:
    """Conjunction of parameter-bearing rows per location."""

    rows: dict[Location, tuple[Atom, ...]]
    params: tuple[Param, ...] = ()

    @staticmethod
    def fresh(
        model: StochModel, dsa: GuardedDSA, nrows: int = 2
    ) -> "InvTemplate":
        if nrows < 1:
            raise ValueError("invariant template needs at least one row")
        rows: dict[Location, tuple[Atom, ...]] = {}
        params: list[Param] = []
        for q, m in locations(model, dsa):
            here = []
            for r in range(nrows):
                form = LinForm()
                for v in model.state_vars:
                    name = f"eta_{q}_{m}_{r}_{v}"
                    params.append(Param(name, ParamKind.INV))
                    form = form + LinForm.var(v).mul_poly(Poly.param(name))
                rhs = f"eta_{q}_{m}_{r}_rhs"
                params.append(Param(rhs, ParamKind.INV))
                here.append(
                    Atom(form - LinForm.from_poly(Poly.param(rhs)), Rel.LE)
                )
            rows[(q, m)] = tuple(here)
        return InvTemplate(rows, tuple(params))

    @staticmethod
    def concrete(rows: dict[Location, tuple[Atom, ...]]) -> "InvTemplate":
        for loc, atoms in rows.items():
            for a in atoms:
                if not a.form.is_param_free():
                    raise ValueError(f"parameter in concrete invariant at {loc}")
        return InvTemplate(dict(rows), ())


@dataclass(frozen=True)
class PostPiece:
    location: Location
    edge: Transition
    guard: tuple[Atom, ...]  # branch guard && edge guard
    form: LinForm  # symbolic Post V piece over x
    source_line: int = 0

    def premise_atoms(self) -> tuple[Atom, ...]:
        return self.guard


@dataclass(frozen=True)
class PostTable:
    pair_index: int
    pieces: tuple[PostPiece, ...]

    def at_location(self, loc: Location) -> list[PostPiece]:
        return [p for p in self.pieces if p.location == loc]


def _image_with_sample(
    update: dict[str, LinForm],
    wnames: tuple[str, ...],
    sample: tuple[Fraction, ...],
) -> dict[str, LinForm]:
    val = dict(zip(wnames, sample))
    return {v: f.substitute_params(val) for v, f in update.items()}


def _joint_guard_feasible(
    guard: tuple[Atom, ...], variables: tuple[str, ...]
) -> bool:
    """False only when the guard is parameter-free and LP-infeasible."""
    if not all(a.form.is_param_free() for a in guard):
        return True
    return atoms_feasible(list(guard), variables).status == "optimal"


def post_expectation(
    V: CertTemplate, model: StochModel, dsa: GuardedDSA
) -> PostTable:
    """Symbolic Post V, one piece per (location, automaton edge, branch)."""
    if not model.branches:
        raise ValueError(
            "model has no branch form; use manual_post_lookup"
        )
    dist = model.disturbance
    wnames = dist.component_names()
    if dist.kind == "box":
        # mean substitution demands at most one disturbance factor per
        # monomial, otherwise E[V(f)] is not V(f) at the mean
        for br in model.branches:
            for form in br.update.values():
                for poly in list(form.coeffs.values()) + [form.const]:
                    for mono in poly.terms:
                        if sum(1 for n in mono if n in wnames) > 1:
                            raise ValueError(
                                "box disturbance with a quadratic "
                                "disturbance monomial in an update"
                            )
    pieces: list[PostPiece] = []
    for q, m in locations(model, dsa):
        for edge in dsa.outgoing(q):
            if not edge.applies_in_mode(m):
                continue
            for br in model.branches_for_mode(m):
                guard = br.guard + edge.atoms
                if not _joint_guard_feasible(guard, model.state_vars):
                    continue
                target = (edge.target, br.mode_to)
                vnext = V.pieces[target]
                if dist.kind == "finite":
                    assert dist.support is not None
                    form = LinForm()
                    for value, prob in dist.support:
                        image = _image_with_sample(br.update, wnames, value)
                        form = form + vnext.substitute_state(image).scale(prob)
                else:
                    image = _image_with_sample(
                        br.update, wnames, dist.mean_vector()
                    )
                    form = vnext.substitute_state(image)
                pieces.append(
                    PostPiece((q, m), edge, guard, form, br.line)
                )
    return PostTable(V.pair_index, tuple(pieces))


def manual_post_lookup(
    model: StochModel, V: CertTemplate, dsa: GuardedDSA
) -> PostTable:
    """PostTable from the model's manual successor-distribution table."""
    if not model.manual_post:
        raise ValueError("model has no manual post table")
    pieces: list[PostPiece] = []
    for q, m in locations(model, dsa):
        for edge in dsa.outgoing(q):
            if not edge.applies_in_mode(m):
                continue
            for blk in model.post_blocks_for_mode(m):
                guard = blk.guard + edge.atoms
                if not _joint_guard_feasible(guard, model.state_vars):
                    continue
                form = LinForm()
                for case in blk.cases:
                    vnext = V.pieces[(edge.target, case.mode_to)]
                    form = form + vnext.substitute_state(case.image).scale(
                        case.prob
                    )
                pieces.append(PostPiece((q, m), edge, guard, form, blk.line))
    return PostTable(V.pair_index, tuple(pieces))


def post_table(
    V: CertTemplate, model: StochModel, dsa: GuardedDSA
) -> PostTable:
    """The model's preferred post-expectation route."""
    if model.manual_post:
        return manual_post_lookup(model, V, dsa)
    return post_expectation(V, model, dsa)


# -- invariant files ----------------------------------------------------------


def parse_invariant(
    text: str, model: StochModel, dsa: GuardedDSA
) -> InvTemplate:
    """Concrete invariant document.

    One line per location: ``at <state> [<mode>]: conjunction|true|false``;
    locations not listed default to true.  All atoms parameter-free.
    """
    rows: dict[Location, tuple[Atom, ...]] = {
        loc: () for loc in locations(model, dsa)
    }
    seen: set[Location] = set()

    def resolve(name: str) -> LinForm | None:
        return LinForm.var(name) if name in model.state_vars else None

    for lineno, line in logical_lines(text):
        ts = TokenStream(tokenize(line, line=lineno))
        key = ts.expect_ident("'at'")
        if key.text != "at":
            raise SourceError("expected 'at <state> [<mode>]:'", key.line, key.col)
        q = ts.expect_ident("automaton state").text
        if q not in dsa.states:
            raise SourceError(f"unknown automaton state {q!r}", lineno, 1)
        if ts.peek().kind == "ident":
            mode = ts.advance().text
            if mode not in model.modes:
                raise SourceError(f"unknown mode {mode!r}", lineno, 1)
        else:
            if len(model.modes) > 1:
                raise SourceError(
                    "model has several modes; location needs one", lineno, 1
                )
            mode = model.modes[0]
        ts.expect(":")
        loc = (q, mode)
        if loc in seen:
            raise SourceError(f"duplicate location {loc}", lineno, 1)
        seen.add(loc)
        tok = ts.peek()
        if tok.kind == "ident" and tok.text == "false":
            ts.advance()
            rows[loc] = (FALSE_ATOM,)
        else:
            atoms, tests = parse_conjunction(ts, resolve)
            assert not tests
            # keep rows in the same <= / < normal form fresh templates use
            rows[loc] = tuple(a for atom in atoms for a in atom.normalized_le())
        if not ts.at_end():
            raise ts.error("trailing input")
    return InvTemplate.concrete(rows)
