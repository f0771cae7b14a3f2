"""Verification-condition generation over the product process.

The product of the model and the automaton is stepped in lockstep: the
automaton reads the current model state, then the model branch fires.
Six families of universally quantified implications over the state
variables (plus box disturbance components) express that the certificate
templates witness almost-sure satisfaction of every Streett pair:

    init       each invariant row holds at the initial product location
    consec     the invariant is closed under every product transition
    dec        Post V <= V - eps     at locations with q in A \\ B
    inc        Post V <= V + M       at locations with q in B
    noninc     Post V <= V           elsewhere
    nonneg     V >= 0                on the invariant

Every implication is normalized to non-strict premises (strict atoms
relaxed and logged) with a single non-strict consequent, so that Farkas'
Lemma applies directly.  Premises are kept even when they are plainly
infeasible; vacuity is discharged downstream by the feasibility screen.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction
from typing import Sequence

from .automata import GuardedDSA
from .expr import Atom, LinForm, Param, ParamKind, Poly, Rel
from .model import StochModel
from .templates import CertTemplate, InvTemplate, Location, PostTable


class StrictConsequentError(ValueError):
    """A consequent atom is strict; Farkas' Lemma does not apply."""


@dataclass(frozen=True)
class Implication:
    """forall variables: premise atoms (all <=) imply consequent (<= )."""

    family: str  # init | consec | dec | inc | noninc | nonneg
    location: Location | None
    variables: tuple[str, ...]
    premise: tuple[Atom, ...]
    consequent: Atom
    note: str = ""
    strictness_log: tuple[str, ...] = ()

    @property
    def tag(self) -> str:
        where = f" at {self.location}" if self.location else ""
        extra = f" [{self.note}]" if self.note else ""
        return f"{self.family}{where}{extra}"

    def params(self) -> set[str]:
        out: set[str] = set()
        for a in self.premise:
            out |= a.form.params()
        out |= self.consequent.form.params()
        return out


@dataclass(frozen=True)
class VCSet:
    implications: tuple[Implication, ...]
    params: tuple[Param, ...]
    side_atoms: tuple[Atom, ...]  # over params only (kappa boxes, M >= 0, ...)

    def dump(self) -> str:
        lines = []
        names = ", ".join(p.name for p in self.params)
        lines.append(f"params: {names or '(none)'}")
        for a in self.side_atoms:
            lines.append(f"  side: {a}")
        for i, impl in enumerate(self.implications):
            lines.append(f"[{i}] {impl.tag}")
            lines.append(f"    forall {', '.join(impl.variables)}:")
            for a in impl.premise:
                lines.append(f"      {a}")
            lines.append(f"      ==> {impl.consequent}")
            for entry in impl.strictness_log:
                lines.append(f"      (relaxed: {entry})")
        return "\n".join(lines) + "\n"


def normalize_strict(atoms: Sequence[Atom]) -> tuple[list[Atom], list[str]]:
    """Premise atoms in <= normal form; strict ones relaxed and logged."""
    out: list[Atom] = []
    log: list[str] = []
    for atom in atoms:
        for le in atom.normalized_le():
            if le.rel == Rel.LT:
                log.append(f"{le} relaxed to non-strict")
                out.append(Atom(le.form, Rel.LE))
            else:
                out.append(le)
    return out, log


def normalize_consequent(atom: Atom) -> Atom:
    """A single non-strict consequent; strictness is an error, not a
    relaxation (weakening a consequent would be unsound)."""
    les = atom.normalized_le()
    if len(les) != 1:
        raise StrictConsequentError(
            f"consequent {atom} is not a single inequality"
        )
    if les[0].rel == Rel.LT:
        raise StrictConsequentError(
            f"strict consequent {atom} is unsupported"
        )
    return les[0]


def promote_disturbance(form: LinForm, wnames: tuple[str, ...]) -> LinForm:
    """Rewrite disturbance parameters into universal variables.

    Branch updates carry disturbance components as parameters inside the
    coefficient polynomials; universal quantification over a box demands
    they become LP columns.  Only constant-term monomials that are linear
    in a single component can move; anything else is genuinely bilinear
    in the universals and has no affine Farkas form.
    """
    wset = set(wnames)
    for v in form.coeffs:
        if form.coeff(v).params() & wset:
            raise ValueError(
                f"state-times-disturbance product on {v!r}: not affine in "
                "the universally quantified variables"
            )
    out = LinForm({v: p for v, p in form.coeffs.items()}, Poly())
    for mono, c in form.const.terms.items():
        hits = [n for n in mono if n in wset]
        if not hits:
            out = out + LinForm.from_poly(Poly({mono: c}))
        elif len(hits) == 1:
            rest = tuple(n for n in mono if n not in wset)
            out = out + LinForm.var(hits[0]).mul_poly(Poly({rest: c}))
        else:
            raise ValueError(
                f"disturbance monomial {mono} of degree >= 2: expectation "
                "and support reasoning are affine-only"
            )
    return out


def _mk(
    family: str,
    location: Location | None,
    variables: Sequence[str],
    premise: Sequence[Atom],
    consequent: Atom,
    note: str = "",
) -> Implication:
    prem, log = normalize_strict(premise)
    return Implication(
        family,
        location,
        tuple(variables),
        tuple(prem),
        normalize_consequent(consequent),
        note,
        tuple(log),
    )


def build_product_vcs(
    model: StochModel,
    dsa: GuardedDSA,
    Vs: Sequence[CertTemplate],
    inv: InvTemplate,
    tables: Sequence[PostTable],
    eps: Fraction = Fraction(1),
    M: Sequence[Fraction] | None = None,
) -> VCSet:
    """All six VC families for the given templates.

    `tables` holds one PostTable per Streett pair, aligned with `Vs`.
    `M` gives concrete increase bounds per pair; when omitted, fresh
    parameters M0, M1, ... are declared with M >= 0 side constraints.
    """
    if len(Vs) != len(dsa.pairs) or len(tables) != len(dsa.pairs):
        raise ValueError("one V template and one PostTable per Streett pair")
    if eps <= 0:
        raise ValueError("eps must be positive")
    xs = model.state_vars
    dist = model.disturbance
    wnames = dist.component_names()
    implications: list[Implication] = []

    # initiation: every invariant row at the initial product location
    init_loc = (dsa.init, model.init_mode)
    x0 = {v: LinForm.constant(c) for v, c in zip(xs, model.init_state)}
    for i, row in enumerate(inv.rows[init_loc]):
        implications.append(
            _mk(
                "init",
                init_loc,
                xs,
                [],
                Atom(row.form.substitute_state(x0), row.rel),
                note=f"row {i}",
            )
        )

    # consecution: closure under every (edge, branch) product transition
    for q, m in inv.rows:
        src_rows = inv.rows[(q, m)]
        for edge in dsa.outgoing(q):
            if not edge.applies_in_mode(m):
                continue
            for br in model.branches_for_mode(m):
                target = (edge.target, br.mode_to)
                base = list(src_rows) + list(edge.atoms) + list(br.guard)
                note = f"edge {q}->{edge.target}, branch line {br.line}"
                if dist.kind == "finite":
                    assert dist.support is not None
                    for value, _prob in dist.support:
                        wsub = dict(zip(wnames, value))
                        image = {
                            v: f.substitute_params(wsub)
                            for v, f in br.update.items()
                        }
                        for i, row in enumerate(inv.rows[target]):
                            implications.append(
                                _mk(
                                    "consec",
                                    (q, m),
                                    xs,
                                    base,
                                    Atom(
                                        row.form.substitute_state(image),
                                        row.rel,
                                    ),
                                    note=f"{note}, w={tuple(value)}, row {i}",
                                )
                            )
                else:
                    image = {
                        v: promote_disturbance(f, wnames)
                        for v, f in br.update.items()
                    }
                    for i, row in enumerate(inv.rows[target]):
                        implications.append(
                            _mk(
                                "consec",
                                (q, m),
                                tuple(xs) + wnames,
                                base + dist.box_atoms(),
                                Atom(
                                    row.form.substitute_state(image), row.rel
                                ),
                                note=f"{note}, row {i}",
                            )
                        )

    # drift: one implication per PostTable piece, dispatched on the pair
    params: list[Param] = []
    side: list[Atom] = []
    m_polys: list[Poly] = []
    for k in range(len(dsa.pairs)):
        if M is not None:
            m_polys.append(Poly.const(M[k]))
        else:
            p = Param(f"M{k}", ParamKind.SLACK)
            params.append(p)
            m_polys.append(Poly.param(p.name))
            side.append(Atom(-LinForm.from_poly(m_polys[-1]), Rel.LE))

    for k, (V, table) in enumerate(zip(Vs, tables)):
        if table.pair_index != V.pair_index:
            raise ValueError("PostTable/CertTemplate pair mismatch")
        pair = dsa.pairs[k]
        for piece in table.pieces:
            q, m = piece.location
            family = pair.classify(q)
            gap = {
                "dec": LinForm.constant(eps),
                "inc": -LinForm.from_poly(m_polys[k]),
                "noninc": LinForm(),
            }[family]
            implications.append(
                _mk(
                    family,
                    piece.location,
                    xs,
                    list(inv.rows[piece.location]) + list(piece.guard),
                    Atom(piece.form - V.pieces[piece.location] + gap, Rel.LE),
                    note=f"pair {k}, edge {q}->{piece.edge.target}, "
                    f"piece line {piece.source_line}",
                )
            )

        # nonnegativity on the invariant
        for loc in inv.rows:
            implications.append(
                _mk(
                    "nonneg",
                    loc,
                    xs,
                    list(inv.rows[loc]),
                    Atom(LinForm() - V.pieces[loc], Rel.LE),
                    note=f"pair {k}",
                )
            )

    # declared existentials: template, invariant and control parameters
    for V in Vs:
        params.extend(V.params)
    params.extend(inv.params)
    for c in model.controls:
        params.append(Param(c.name, ParamKind.CONTROL))
        form = LinForm.from_poly(Poly.param(c.name))
        side.append(Atom(LinForm.constant(c.lo) - form, Rel.LE))
        side.append(Atom(form - LinForm.constant(c.hi), Rel.LE))
    side.extend(model.side_constraints)

    declared = {p.name for p in params}
    for impl in implications:
        stray = impl.params() - declared
        if stray:
            raise ValueError(
                f"undeclared parameters {sorted(stray)} in {impl.tag}"
            )
    return VCSet(tuple(implications), tuple(params), tuple(side))
