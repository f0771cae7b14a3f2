"""Guarded deterministic Streett automata.

An automaton reads the current model state through transition guards:
conjunctions of linear inequalities over the state variables, optionally
constrained to a model mode (``mode == name``).  Determinism and totality
are proved at parse time by exact LP checks: for every source state and
mode, the outgoing guards must be pairwise unsatisfiable together and
their complements must have no common solution.

Acceptance is state-based: a list of pairs (A, B) of state sets, read as
"visit A finitely often or visit B infinitely often".  For each pair the
states partition into the epsilon-decrease region A minus B, the
M-increase region B, and the non-increase remainder.

File format (# comments):

    states: q0 q1
    init: q0
    trans q0 -> q1: x >= 100
    trans q0 -> q0: x < 100
    trans q1 -> q1: true
    pair: A { q1 } B { }
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass
from fractions import Fraction
from typing import Mapping

from .expr import Atom, LinForm
from .lp import atoms_feasible
from .model import guards_cover_space
from .syntax import (
    ModeTest,
    SourceError,
    TokenStream,
    logical_lines,
    parse_conjunction,
    tokenize,
)


@dataclass(frozen=True)
class StreettPair:
    a: frozenset[str]
    b: frozenset[str]

    def classify(self, q: str) -> str:
        """Drift obligation at q: 'dec' (A minus B), 'inc' (B), 'noninc'."""
        if q in self.b:
            return "inc"
        if q in self.a:
            return "dec"
        return "noninc"


@dataclass(frozen=True)
class Transition:
    source: str
    target: str
    atoms: tuple[Atom, ...]
    mode_tests: tuple[ModeTest, ...] = ()
    line: int = 0

    def applies_in_mode(self, mode: str) -> bool:
        return all(t.holds(mode) for t in self.mode_tests)


@dataclass(frozen=True)
class GuardedDSA:
    states: tuple[str, ...]
    init: str
    transitions: tuple[Transition, ...]
    pairs: tuple[StreettPair, ...]

    def outgoing(self, q: str) -> list[Transition]:
        return [t for t in self.transitions if t.source == q]

    def step(
        self,
        q: str,
        state_env: Mapping[str, Fraction],
        mode: str,
    ) -> str:
        """The unique successor state under the current observation."""
        hit: str | None = None
        for t in self.outgoing(q):
            if t.applies_in_mode(mode) and all(
                a.holds({}, state_env) for a in t.atoms
            ):
                if hit is not None:
                    raise ValueError(
                        f"nondeterministic step from {q!r} at {dict(state_env)}"
                    )
                hit = t.target
        if hit is None:
            raise ValueError(
                f"no transition from {q!r} at {dict(state_env)} mode {mode!r}"
            )
        return hit


def dsa_step(
    dsa: GuardedDSA,
    q: str,
    state_env: Mapping[str, Fraction],
    mode: str,
) -> str:
    return dsa.step(q, state_env, mode)


def parse_dsa(
    text: str,
    variables: tuple[str, ...] | None = None,
    modes: tuple[str, ...] | None = None,
) -> GuardedDSA:
    """Parse and validate an automaton document.

    When variables/modes are omitted they are inferred from the guards;
    pass the model's to validate against the intended universe.
    """
    states: tuple[str, ...] | None = None
    init: str | None = None
    raw_trans: list[tuple[str, str, TokenStream, int]] = []
    pairs: list[StreettPair] = []
    pending_infer = variables is None

    # names are collected in a first pass when inferring the universe
    inferred_vars: list[str] = []
    inferred_modes: list[str] = []

    lines = logical_lines(text)
    if pending_infer:
        for lineno, line in lines:
            toks = tokenize(line, line=lineno)
            for i, tok in enumerate(toks):
                if tok.kind != "ident" or tok.text != "mode":
                    continue
                if i + 2 < len(toks) and toks[i + 2].kind == "ident":
                    if toks[i + 2].text not in inferred_modes:
                        inferred_modes.append(toks[i + 2].text)
        modes = tuple(inferred_modes) or None

    for lineno, line in lines:
        ts = TokenStream(tokenize(line, line=lineno))
        key = ts.expect_ident("statement keyword")
        if key.text == "states":
            ts.expect(":")
            names = [ts.expect_ident("state name").text]
            while not ts.at_end():
                names.append(ts.expect_ident("state name").text)
            if len(set(names)) != len(names):
                raise ts.error("duplicate state name")
            states = tuple(names)
        elif key.text == "init":
            ts.expect(":")
            if init is not None:
                raise ts.error("duplicate init")
            init = ts.expect_ident("state name").text
        elif key.text == "trans":
            src = ts.expect_ident("state name").text
            ts.expect("->")
            dst = ts.expect_ident("state name").text
            ts.expect(":")
            raw_trans.append((src, dst, ts, lineno))
        elif key.text == "pair":
            ts.expect(":")
            def parse_set(label: str) -> frozenset[str]:
                tok = ts.expect_ident()
                if tok.text != label:
                    raise SourceError(
                        f"expected {label!r}", tok.line, tok.col
                    )
                ts.expect("{")
                out = set()
                while ts.peek().text != "}":
                    out.add(ts.expect_ident("state name").text)
                ts.expect("}")
                return frozenset(out)
            a = parse_set("A")
            b = parse_set("B")
            pairs.append(StreettPair(a, b))
        else:
            raise SourceError(
                f"unknown statement {key.text!r}", key.line, key.col
            )

    if states is None:
        raise SourceError("missing states declaration", 1, 1)
    if init is None:
        raise SourceError("missing init declaration", 1, 1)
    if init not in states:
        raise SourceError(f"init state {init!r} not declared", 1, 1)
    if not pairs:
        raise SourceError("missing acceptance pairs", 1, 1)
    for p in pairs:
        stray = (p.a | p.b) - set(states)
        if stray:
            raise SourceError(
                f"acceptance set mentions unknown states {sorted(stray)}", 1, 1
            )

    known_vars = set(variables) if variables is not None else None

    def resolve(name: str) -> LinForm | None:
        if known_vars is not None:
            return LinForm.var(name) if name in known_vars else None
        if name not in inferred_vars:
            inferred_vars.append(name)
        return LinForm.var(name)

    transitions: list[Transition] = []
    for src, dst, ts, lineno in raw_trans:
        if src not in states or dst not in states:
            raise SourceError("transition names unknown state", lineno, 1)
        atoms, tests = parse_conjunction(ts, resolve, modes or ())
        if not ts.at_end():
            raise ts.error("trailing input")
        transitions.append(
            Transition(src, dst, tuple(atoms), tuple(tests), lineno)
        )

    var_universe = (
        tuple(variables) if variables is not None else tuple(inferred_vars)
    )
    mode_universe = modes or ("_",)

    dsa = GuardedDSA(states, init, tuple(transitions), tuple(pairs))
    validate_dsa(dsa, var_universe, mode_universe)
    return dsa


def validate_dsa(
    dsa: GuardedDSA,
    variables: tuple[str, ...],
    modes: tuple[str, ...],
) -> None:
    """LP proof of determinism and totality per source state and mode."""
    for atom in (a for t in dsa.transitions for a in t.atoms):
        if not atom.form.is_param_free():
            raise SourceError("automaton guards must be parameter-free", 1, 1)
    for q in dsa.states:
        outgoing = dsa.outgoing(q)
        for mode in modes:
            live = [t for t in outgoing if t.applies_in_mode(mode)]
            for t1, t2 in itertools.combinations(live, 2):
                res = atoms_feasible(list(t1.atoms + t2.atoms), variables)
                if res.status == "optimal":
                    pt = {v: res.assignment[v] for v in variables}
                    raise SourceError(
                        f"nondeterminism from {q!r} in mode {mode!r}: "
                        f"transitions at lines {t1.line} and {t2.line} "
                        f"both fire at {pt}",
                        t2.line,
                        1,
                    )
            guards = [t.atoms for t in live]
            ok, region, point = guards_cover_space(guards, variables)
            if not ok:
                desc = " and ".join(str(a) for a in region) or "true"
                raise SourceError(
                    f"automaton incomplete from {q!r} in mode {mode!r}: "
                    f"no transition on {{{desc}}}, e.g. {point}",
                    1,
                    1,
                )
