"""Piecewise-affine stochastic systems with finite modes.

A model is a guarded system of affine updates

    x' = f(x, w; kappa)      on guard g(x) and mode m -> m',

driven by an i.i.d. disturbance w that is either finitely supported
(list of value/probability pairs) or box-supported (componentwise bounds
plus a mean vector).  Updates are affine in the state with coefficients
polynomial in the control parameters and the disturbance components, so
bilinear state-times-disturbance dynamics are representable.  Guards may
carry control parameters (synthesized switching logic); such models are
flagged and exempted from the static cover checks.

Branch guards within each mode must be pairwise disjoint and jointly
exhaustive over R^n; both properties are decided exactly by the strict
LP feasibility transform at parse time.

The file format is line-oriented (# comments):

    state_dim: 1
    vars: x                      # optional; defaults to x or x0..x{n-1}
    modes: ev od                 # optional; default single mode "_"
    init: x = 0, mode = ev
    disturbance: w finite { (1): 1/2, (0): 1/2 }
    disturbance: w box { lo = -1/10, hi = 1/10, mean = 0 }
    control: kappa in [-4, 4]
    constraint: 305*alpha + beta < 5.24
    branch ev -> od:
      guard: -1/2 < x and x < 1/2
      update: x' = 2*w - 1
    post ev:                     # optional manual post-expectation table
      guard: -1/2 < x and x < 1/2
      case 1/2 -> od: x' = 1
      case 1/2 -> od: x' = -1
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass
from fractions import Fraction
from typing import Iterable, Mapping

from .expr import Atom, LinForm, Poly, Rel
from .lp import atoms_feasible
from .syntax import (
    SourceError,
    TokenStream,
    logical_lines,
    parse_conjunction,
    parse_expression,
    parse_number,
    tokenize,
)

DEFAULT_MODE = "_"


@dataclass(frozen=True)
class Disturbance:
    """I.i.d. disturbance: finite support or a box with known mean."""

    name: str
    dim: int
    # finite support: ((value vector, probability), ...)
    support: tuple[tuple[tuple[Fraction, ...], Fraction], ...] | None = None
    lo: tuple[Fraction, ...] | None = None
    hi: tuple[Fraction, ...] | None = None
    mean: tuple[Fraction, ...] | None = None

    @property
    def kind(self) -> str:
        return "finite" if self.support is not None else "box"

    def component_names(self) -> tuple[str, ...]:
        if self.dim == 1:
            return (self.name,)
        return tuple(f"{self.name}{i}" for i in range(self.dim))

    def mean_vector(self) -> tuple[Fraction, ...]:
        if self.support is not None:
            acc = [Fraction(0)] * self.dim
            for value, prob in self.support:
                for i, v in enumerate(value):
                    acc[i] += prob * v
            return tuple(acc)
        assert self.mean is not None
        return self.mean

    def box_atoms(self) -> list[Atom]:
        """lo <= w <= hi as atoms over the component names (box kind)."""
        assert self.lo is not None and self.hi is not None
        out = []
        for nm, lo, hi in zip(self.component_names(), self.lo, self.hi):
            w = LinForm.var(nm)
            out.append(Atom(LinForm.constant(lo) - w, Rel.LE))
            out.append(Atom(w - LinForm.constant(hi), Rel.LE))
        return out


@dataclass(frozen=True)
class Branch:
    mode_from: str
    mode_to: str
    guard: tuple[Atom, ...]  # over state vars; coefficients may carry params
    update: dict[str, LinForm]  # per state var, over state + disturbance names
    line: int = 0

    def guard_params(self) -> set[str]:
        out: set[str] = set()
        for atom in self.guard:
            out |= atom.form.params()
        return out


@dataclass(frozen=True)
class PostCase:
    prob: Fraction
    image: dict[str, LinForm]  # over state vars only
    mode_to: str


@dataclass(frozen=True)
class PostBlock:
    mode_from: str
    guard: tuple[Atom, ...]
    cases: tuple[PostCase, ...]
    line: int = 0


@dataclass(frozen=True)
class ControlParam:
    name: str
    lo: Fraction
    hi: Fraction


@dataclass(frozen=True)
class StochModel:
    state_vars: tuple[str, ...]
    modes: tuple[str, ...]
    init_state: tuple[Fraction, ...]
    init_mode: str
    disturbance: Disturbance
    branches: tuple[Branch, ...]
    controls: tuple[ControlParam, ...] = ()
    side_constraints: tuple[Atom, ...] = ()  # over control params only
    manual_post: tuple[PostBlock, ...] = ()
    guards_parameter_bearing: bool = False

    @property
    def state_dim(self) -> int:
        return len(self.state_vars)

    def control_names(self) -> tuple[str, ...]:
        return tuple(c.name for c in self.controls)

    def branches_for_mode(self, mode: str) -> list[Branch]:
        return [b for b in self.branches if b.mode_from == mode]

    def post_blocks_for_mode(self, mode: str) -> list[PostBlock]:
        return [p for p in self.manual_post if p.mode_from == mode]

    def state_env(self, state: Iterable[Fraction]) -> dict[str, Fraction]:
        return dict(zip(self.state_vars, state))

    def step(
        self,
        state: tuple[Fraction, ...],
        mode: str,
        sample: tuple[Fraction, ...],
        control: Mapping[str, Fraction] | None = None,
    ) -> tuple[tuple[Fraction, ...], str]:
        """Exact one-step successor; exactly one branch guard must hold."""
        control = dict(control or {})
        env = self.state_env(state)
        hits = [
            b
            for b in self.branches_for_mode(mode)
            if all(a.holds(control, env) for a in b.guard)
        ]
        if not hits:
            raise ValueError(
                f"no branch applicable at state {state} in mode {mode!r}"
            )
        if len(hits) > 1:
            lines = ", ".join(str(b.line) for b in hits)
            raise ValueError(
                f"guard cover violated: branches at lines {lines} all fire "
                f"at state {state} in mode {mode!r}"
            )
        branch = hits[0]
        wenv = dict(zip(self.disturbance.component_names(), sample))
        params = {**control, **wenv}
        nxt = tuple(
            branch.update[v].eval(params, env) for v in self.state_vars
        )
        return nxt, branch.mode_to

    def post_step(
        self,
        state: tuple[Fraction, ...],
        mode: str,
        u: Fraction,
        control: Mapping[str, Fraction] | None = None,
    ) -> tuple[tuple[Fraction, ...], str]:
        """One-step successor drawn from the manual post table: the unique
        applicable block's cases are sampled by cumulative probability
        against u in [0, 1).  This is the stepper for models whose mode
        switching is itself randomized and therefore has no branch form."""
        if not (0 <= u < 1):
            raise ValueError("u must lie in [0, 1)")
        control = dict(control or {})
        env = self.state_env(state)
        hits = [
            p
            for p in self.post_blocks_for_mode(mode)
            if all(a.holds(control, env) for a in p.guard)
        ]
        if len(hits) != 1:
            raise ValueError(
                f"expected exactly one post block at state {state} in mode "
                f"{mode!r}, found {len(hits)}"
            )
        acc = Fraction(0)
        case = hits[0].cases[-1]
        for c in hits[0].cases:
            acc += c.prob
            if u < acc:
                case = c
                break
        nxt = tuple(
            case.image[v].eval(control, env) for v in self.state_vars
        )
        return nxt, case.mode_to


# -- parsing -----------------------------------------------------------------


class _ModelBuilder:
    def __init__(self) -> None:
        self.state_dim: int | None = None
        self.vars: tuple[str, ...] | None = None
        self.modes: tuple[str, ...] | None = None
        self.init_env: dict[str, Fraction] | None = None
        self.init_mode: str | None = None
        self.disturbance: Disturbance | None = None
        self.controls: list[ControlParam] = []
        self.side_constraints: list[TokenStream] = []  # parsed in _finish
        self.branches: list[dict] = []
        self.posts: list[dict] = []
        self.current: dict | None = None  # open branch/post block


def _parse_vector(ts: TokenStream, dim: int | None = None) -> tuple[Fraction, ...]:
    """(n1, n2, ...) or a bare number (1-dimensional)."""
    if ts.peek().text == "(":
        ts.advance()
        vals = [parse_number(ts)]
        while ts.match(","):
            vals.append(parse_number(ts))
        ts.expect(")")
    else:
        vals = [parse_number(ts)]
    if dim is not None and len(vals) != dim:
        raise ts.error(f"expected {dim} components, got {len(vals)}")
    return tuple(vals)


def parse_model(text: str) -> StochModel:
    """Parse and fully validate a model document."""
    b = _ModelBuilder()
    for lineno, line in logical_lines(text):
        ts = TokenStream(tokenize(line, line=lineno))
        head = ts.peek()
        if head.kind != "ident":
            raise SourceError("expected a statement keyword", head.line, head.col)
        if head.text in ("guard", "update", "case"):
            _parse_block_line(b, ts)
        else:
            b.current = None
            _parse_statement(b, ts)
    return _finish(b)


def _parse_statement(b: _ModelBuilder, ts: TokenStream) -> None:
    key = ts.advance()
    if key.text == "state_dim":
        ts.expect(":")
        n = parse_number(ts)
        if n.denominator != 1 or n <= 0:
            raise ts.error("state_dim must be a positive integer")
        b.state_dim = int(n)
    elif key.text == "vars":
        ts.expect(":")
        names = [ts.expect_ident("variable name").text]
        while not ts.at_end():
            names.append(ts.expect_ident("variable name").text)
        if len(set(names)) != len(names):
            raise ts.error("duplicate variable name")
        b.vars = tuple(names)
    elif key.text == "modes":
        ts.expect(":")
        names = [ts.expect_ident("mode name").text]
        while not ts.at_end():
            names.append(ts.expect_ident("mode name").text)
        if len(set(names)) != len(names):
            raise ts.error("duplicate mode name")
        b.modes = tuple(names)
    elif key.text == "init":
        ts.expect(":")
        env: dict[str, Fraction] = {}
        while True:
            name = ts.expect_ident()
            ts.expect("=")
            if name.text == "mode":
                b.init_mode = ts.expect_ident("mode name").text
            else:
                if name.text in env:
                    raise SourceError(
                        f"duplicate init for {name.text!r}", name.line, name.col
                    )
                env[name.text] = parse_number(ts)
            if not ts.match(","):
                break
        b.init_env = env
    elif key.text == "disturbance":
        ts.expect(":")
        if b.disturbance is not None:
            raise ts.error("duplicate disturbance declaration")
        name = ts.expect_ident("disturbance name").text
        kind = ts.expect_ident("'finite' or 'box'").text
        ts.expect("{")
        if kind == "finite":
            support: list[tuple[tuple[Fraction, ...], Fraction]] = []
            while True:
                value = _parse_vector(ts)
                ts.expect(":")
                prob = parse_number(ts)
                support.append((value, prob))
                if not ts.match(","):
                    break
            ts.expect("}")
            dims = {len(v) for v, _ in support}
            if len(dims) != 1:
                raise ts.error("support points of mixed dimension")
            if any(p <= 0 for _, p in support):
                raise ts.error("probabilities must be positive")
            if sum(p for _, p in support) != 1:
                raise ts.error("probabilities sum != 1")
            b.disturbance = Disturbance(
                name, dims.pop(), support=tuple(support)
            )
        elif kind == "box":
            fields: dict[str, tuple[Fraction, ...]] = {}
            while True:
                fname = ts.expect_ident("'lo', 'hi' or 'mean'").text
                ts.expect("=")
                fields[fname] = _parse_vector(ts)
                if not ts.match(","):
                    break
            ts.expect("}")
            if set(fields) != {"lo", "hi", "mean"}:
                raise ts.error("box needs exactly lo, hi, mean")
            dims = {len(v) for v in fields.values()}
            if len(dims) != 1:
                raise ts.error("box fields of mixed dimension")
            lo, hi, mean = fields["lo"], fields["hi"], fields["mean"]
            if not all(l <= m <= h for l, m, h in zip(lo, mean, hi)):
                raise ts.error("box requires lo <= mean <= hi per dimension")
            b.disturbance = Disturbance(
                name, dims.pop(), lo=lo, hi=hi, mean=mean
            )
        else:
            raise ts.error("disturbance kind must be 'finite' or 'box'")
    elif key.text == "control":
        ts.expect(":")
        name = ts.expect_ident("control name").text
        word = ts.expect_ident()
        if word.text != "in":
            raise ts.error("expected 'in [lo, hi]'")
        ts.expect("[")
        lo = parse_number(ts)
        ts.expect(",")
        hi = parse_number(ts)
        ts.expect("]")
        if lo > hi:
            raise ts.error("empty control interval")
        if any(c.name == name for c in b.controls):
            raise ts.error(f"duplicate control {name!r}")
        b.controls.append(ControlParam(name, lo, hi))
    elif key.text == "constraint":
        ts.expect(":")
        b.side_constraints.append(ts)
    elif key.text == "branch":
        mode_from = ts.expect_ident("mode name").text
        ts.expect("->")
        mode_to = ts.expect_ident("mode name").text
        ts.expect(":")
        blk = {
            "kind": "branch",
            "from": mode_from,
            "to": mode_to,
            "guard": None,
            "update": None,
            "line": key.line,
        }
        b.branches.append(blk)
        b.current = blk
    elif key.text == "post":
        mode_from = ts.expect_ident("mode name").text
        ts.expect(":")
        blk = {
            "kind": "post",
            "from": mode_from,
            "guard": None,
            "cases": [],
            "line": key.line,
        }
        b.posts.append(blk)
        b.current = blk
    else:
        raise SourceError(
            f"unknown statement {key.text!r}", key.line, key.col
        )
    if key.text not in ("constraint",) and not ts.at_end():
        raise ts.error("trailing input")


def _parse_block_line(b: _ModelBuilder, ts: TokenStream) -> None:
    key = ts.advance()
    blk = b.current
    if blk is None:
        raise SourceError(
            f"{key.text!r} outside a branch/post block", key.line, key.col
        )
    if key.text == "guard":
        ts.expect(":")
        if blk["guard"] is not None:
            raise ts.error("duplicate guard")
        blk["guard"] = ts  # parsed in _finish once names are known
    elif key.text == "update":
        if blk["kind"] != "branch":
            raise ts.error("'update' only allowed in branch blocks")
        ts.expect(":")
        if blk["update"] is not None:
            raise ts.error("duplicate update")
        blk["update"] = ts
    elif key.text == "case":
        if blk["kind"] != "post":
            raise ts.error("'case' only allowed in post blocks")
        prob = parse_number(ts)
        ts.expect("->")
        mode_to = ts.expect_ident("mode name").text
        ts.expect(":")
        blk["cases"].append({"prob": prob, "to": mode_to, "stream": ts})


def _parse_updates(
    ts: TokenStream, state_vars: tuple[str, ...], resolve
) -> dict[str, LinForm]:
    out: dict[str, LinForm] = {}
    while True:
        name = ts.expect_ident("state variable")
        if name.text not in state_vars:
            raise SourceError(
                f"unknown state variable {name.text!r}", name.line, name.col
            )
        ts.expect("'")
        ts.expect("=")
        if name.text in out:
            raise SourceError(
                f"duplicate update for {name.text!r}", name.line, name.col
            )
        out[name.text] = parse_expression(ts, resolve)
        if not ts.match(","):
            break
    if not ts.at_end():
        raise ts.error("trailing input")
    missing = set(state_vars) - set(out)
    if missing:
        raise ts.error(f"missing update for {sorted(missing)}")
    return out


def _finish(b: _ModelBuilder) -> StochModel:
    if b.state_dim is None and b.vars is None:
        raise SourceError("missing state_dim or vars", 1, 1)
    if b.vars is None:
        assert b.state_dim is not None
        b.vars = (
            ("x",)
            if b.state_dim == 1
            else tuple(f"x{i}" for i in range(b.state_dim))
        )
    if b.state_dim is not None and len(b.vars) != b.state_dim:
        raise SourceError(
            f"state_dim {b.state_dim} != {len(b.vars)} declared vars", 1, 1
        )
    state_vars = b.vars
    modes = b.modes or (DEFAULT_MODE,)
    if b.disturbance is None:
        raise SourceError("missing disturbance declaration", 1, 1)
    dist = b.disturbance
    if b.init_env is None:
        raise SourceError("missing init declaration", 1, 1)
    if set(b.init_env) != set(state_vars):
        raise SourceError(
            f"init must assign exactly the state variables {state_vars}", 1, 1
        )
    init_state = tuple(b.init_env[v] for v in state_vars)
    if b.init_mode is None:
        if len(modes) > 1:
            raise SourceError("init must name a mode (several declared)", 1, 1)
        b.init_mode = modes[0]
    if b.init_mode not in modes:
        raise SourceError(f"unknown init mode {b.init_mode!r}", 1, 1)

    name_clash = (
        set(state_vars)
        & ({dist.name} | set(dist.component_names()))
    ) | ({c.name for c in b.controls} & set(state_vars))
    if name_clash:
        raise SourceError(f"name used twice: {sorted(name_clash)}", 1, 1)

    control_names = {c.name for c in b.controls}

    def resolve_guard(name: str) -> LinForm | None:
        # guards range over state vars; control params may appear in them
        if name in state_vars:
            return LinForm.var(name)
        if name in control_names:
            return LinForm.from_poly(Poly.param(name))
        return None

    wnames = set(dist.component_names())

    def resolve_update(name: str) -> LinForm | None:
        if name in state_vars:
            return LinForm.var(name)
        if name in control_names or name in wnames:
            # disturbance components ride along as parameters; the
            # post-expectation later substitutes or re-linearizes them
            return LinForm.from_poly(Poly.param(name))
        return None

    def resolve_controls_only(name: str) -> LinForm | None:
        if name in control_names:
            return LinForm.from_poly(Poly.param(name))
        return None

    branches: list[Branch] = []
    for blk in b.branches:
        if blk["from"] not in modes or blk["to"] not in modes:
            raise SourceError(
                f"unknown mode in branch header", blk["line"], 1
            )
        if blk["guard"] is None:
            raise SourceError("branch missing guard", blk["line"], 1)
        if blk["update"] is None:
            raise SourceError("branch missing update", blk["line"], 1)
        atoms, tests = parse_conjunction(blk["guard"], resolve_guard)
        if not blk["guard"].at_end():
            raise blk["guard"].error("trailing input")
        assert not tests
        update = _parse_updates(blk["update"], state_vars, resolve_update)
        branches.append(
            Branch(blk["from"], blk["to"], tuple(atoms), update, blk["line"])
        )
    if not branches and not b.posts:
        raise SourceError("model declares no branches", 1, 1)

    posts: list[PostBlock] = []
    for blk in b.posts:
        if blk["from"] not in modes:
            raise SourceError("unknown mode in post header", blk["line"], 1)
        if blk["guard"] is None:
            raise SourceError("post block missing guard", blk["line"], 1)
        atoms, tests = parse_conjunction(blk["guard"], resolve_guard)
        if not blk["guard"].at_end():
            raise blk["guard"].error("trailing input")
        assert not tests
        cases: list[PostCase] = []
        for c in blk["cases"]:
            if c["to"] not in modes:
                raise SourceError("unknown mode in case", blk["line"], 1)
            if c["prob"] <= 0:
                raise SourceError(
                    "case probability must be positive", blk["line"], 1
                )
            image = _parse_updates(c["stream"], state_vars, resolve_guard)
            cases.append(PostCase(c["prob"], image, c["to"]))
        if not cases:
            raise SourceError("post block has no cases", blk["line"], 1)
        if sum(c.prob for c in cases) != 1:
            raise SourceError(
                "case probabilities sum != 1", blk["line"], 1
            )
        posts.append(
            PostBlock(blk["from"], tuple(atoms), tuple(cases), blk["line"])
        )

    side: list[Atom] = []
    for ts in b.side_constraints:
        atoms, tests = parse_conjunction(ts, resolve_controls_only)
        if not ts.at_end():
            raise ts.error("trailing input")
        assert not tests
        side.extend(atoms)

    flagged = False
    if branches:
        flagged = _check_guard_cover(state_vars, modes, branches)
    if posts:
        _check_post_cover(state_vars, modes, posts, branches)

    return StochModel(
        state_vars=state_vars,
        modes=modes,
        init_state=init_state,
        init_mode=b.init_mode,
        disturbance=dist,
        branches=tuple(branches),
        controls=tuple(b.controls),
        side_constraints=tuple(side),
        manual_post=tuple(posts),
        guards_parameter_bearing=flagged,
    )


# -- guard cover -------------------------------------------------------------


def negate_atom(atom: Atom) -> Atom:
    """Logical complement of a normalized (LE/LT) atom."""
    le = atom.normalized_le()
    assert len(le) == 1, "negation of equality atoms is not a single atom"
    a = le[0]
    return Atom(-a.form, Rel.LT if a.rel == Rel.LE else Rel.LE)


def guards_cover_space(
    guards: list[tuple[Atom, ...]], variables: tuple[str, ...]
) -> tuple[bool, list[Atom], dict | None]:
    """Do the guards jointly cover R^n?  If not, return an uncovered
    region (conjunction of negated atoms) and a sample point in it."""
    normalized = [
        [a for atom in g for a in atom.normalized_le()] for g in guards
    ]
    for combo in itertools.product(*normalized):
        region = [negate_atom(a) for a in combo]
        res = atoms_feasible(region, variables)
        if res.status == "optimal":
            point = {v: res.assignment[v] for v in variables}
            return False, region, point
    return True, [], None


def _guard_system_ok(guard: tuple[Atom, ...]) -> bool:
    return all(
        atom.form.is_param_free() for atom in guard
    )


def _check_guard_cover(
    state_vars: tuple[str, ...],
    modes: tuple[str, ...],
    branches: list[Branch],
) -> bool:
    """Disjointness and exhaustiveness per mode; parameter-bearing modes
    are exempted from the check and flagged."""
    flagged = False
    for mode in modes:
        group = [br for br in branches if br.mode_from == mode]
        if not group:
            raise SourceError(f"mode {mode!r} has no branches", 1, 1)
        if not all(_guard_system_ok(br.guard) for br in group):
            flagged = True
            continue
        for b1, b2 in itertools.combinations(group, 2):
            res = atoms_feasible(list(b1.guard + b2.guard), state_vars)
            if res.status == "optimal":
                pt = tuple(res.assignment[v] for v in state_vars)
                raise SourceError(
                    f"branch guards overlap in mode {mode!r} at state {pt} "
                    f"(lines {b1.line} and {b2.line})",
                    b2.line,
                    1,
                )
        ok, region, point = guards_cover_space(
            [br.guard for br in group], state_vars
        )
        if not ok:
            desc = " and ".join(str(a) for a in region)
            raise SourceError(
                f"branch guards do not cover mode {mode!r}: "
                f"uncovered region {{{desc}}}, e.g. state {point}",
                group[0].line,
                1,
            )
    return flagged


def _check_post_cover(
    state_vars: tuple[str, ...],
    modes: tuple[str, ...],
    posts: list[PostBlock],
    branches: list[Branch],
) -> None:
    """Manual post blocks must partition each mode's state space the same
    way guards must; every mode needs blocks once any mode has one."""
    for mode in modes:
        group = [p for p in posts if p.mode_from == mode]
        if not group:
            raise SourceError(
                f"manual post table missing mode {mode!r}", 1, 1
            )
        for p in group:
            if not _guard_system_ok(p.guard):
                raise SourceError(
                    "manual post guards must be parameter-free", p.line, 1
                )
        for p1, p2 in itertools.combinations(group, 2):
            res = atoms_feasible(list(p1.guard + p2.guard), state_vars)
            if res.status == "optimal":
                raise SourceError(
                    f"post guards overlap in mode {mode!r}", p2.line, 1
                )
        ok, region, point = guards_cover_space(
            [p.guard for p in group], state_vars
        )
        if not ok:
            desc = " and ".join(str(a) for a in region)
            raise SourceError(
                f"post table does not cover mode {mode!r}: "
                f"uncovered region {{{desc}}}, e.g. state {point}",
                group[0].line,
                1,
            )
