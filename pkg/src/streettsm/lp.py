"""Exact-rational linear programming over free variables.

A small two-phase full-tableau simplex with Bland's rule, working directly
on fractions.Fraction.  It decides feasibility and optimization of systems

    sum_j a_ij x_j  (<= | =)  b_i          (x free)

and produces certificates both ways: a feasible (optimal) point, an
improving ray for unbounded objectives, or a Farkas ray proving
infeasibility (multipliers y with y_i >= 0 on inequality rows,
y^T A = 0 and y^T b < 0).

Strict inequalities are handled by a slack-maximization transform:
max t subject to strict rows tightened by t and t <= 1; the strict system
is feasible iff the optimum is positive.  This is how guard disjointness,
automaton totality and premise screening are decided exactly.

Everything is deterministic; Bland's rule guarantees termination.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction
from typing import Literal, Sequence

from .expr import Atom

Row = list[Fraction]

_ZERO = Fraction(0)
_ONE = Fraction(1)


@dataclass
class LinearSystem:
    """Constraint rows over named free variables."""

    variables: list[str]
    # (coeffs aligned with `variables`, rel in {"<=", "<", "="}, rhs)
    rows: list[tuple[Row, str, Fraction]] = field(default_factory=list)

    def add(self, coeffs: Sequence[Fraction], rel: str, rhs) -> None:
        if len(coeffs) != len(self.variables):
            raise ValueError("coefficient/variable length mismatch")
        if rel not in ("<=", "<", "="):
            raise ValueError(f"unsupported relation {rel!r}")
        self.rows.append(
            ([Fraction(c) for c in coeffs], rel, Fraction(rhs))
        )


@dataclass
class LPResult:
    status: Literal["optimal", "unbounded", "infeasible"]
    assignment: dict[str, Fraction] | None = None
    value: Fraction | None = None
    ray: dict[str, Fraction] | None = None
    farkas: list[Fraction] | None = None


def solve(
    system: LinearSystem,
    objective: Sequence[Fraction] | None = None,
    maximize: bool = True,
) -> LPResult:
    """Feasibility / optimization over free variables.

    With no objective: any feasible point (status 'optimal', value 0) or
    'infeasible' with a Farkas ray aligned with the input rows.
    """
    if any(rel == "<" for _, rel, _ in system.rows):
        raise ValueError("strict rows: use solve_strict()")

    nvars = len(system.variables)
    m = len(system.rows)
    # free x = u - w with u, w >= 0; "<=" rows gain one slack column
    slack_of_row = {}
    ncols = 2 * nvars
    for i, (_, rel, _) in enumerate(system.rows):
        if rel == "<=":
            slack_of_row[i] = ncols
            ncols += 1
    n_real = ncols
    total = n_real + m  # artificial identity block on the right

    a: list[Row] = []
    b: list[Fraction] = []
    flipped: list[bool] = []
    for i, (coeffs, rel, rhs) in enumerate(system.rows):
        row = [_ZERO] * total
        for j, cf in enumerate(coeffs):
            if cf:
                row[2 * j] = cf
                row[2 * j + 1] = -cf
        if rel == "<=":
            row[slack_of_row[i]] = _ONE
        flip = rhs < 0
        if flip:
            row = [-v for v in row]
            rhs = -rhs
        row[n_real + i] = _ONE
        a.append(row)
        b.append(Fraction(rhs))
        flipped.append(flip)

    basis = list(range(n_real, total))
    # objective row held as reduced costs; phase 1 minimizes sum of
    # artificials.  obj[j] = c_j - c_B^T B^{-1} A_j.
    obj = [_ZERO] * total
    for i in range(m):
        # c over artificials is 1; subtract each constraint row once
        for j in range(total):
            obj[j] -= a[i][j]
    for i in range(m):
        obj[n_real + i] += _ONE

    def pivot(r: int, c: int) -> None:
        arow = a[r]
        piv = arow[c]
        if piv != 1:
            inv = _ONE / piv
            a[r] = arow = [v * inv for v in arow]
            b[r] *= inv
        for i in range(m):
            if i != r:
                f = a[i][c]
                if f:
                    a[i] = [vi - f * vr for vi, vr in zip(a[i], arow)]
                    b[i] -= f * b[r]
        f = obj[c]
        if f:
            for j in range(total):
                obj[j] -= f * arow[j]
        basis[r] = c

    def basis_value(cost: list[Fraction]) -> Fraction:
        return sum((cost[bi] * b[i] for i, bi in enumerate(basis)), _ZERO)

    def run_simplex(allowed: int) -> str:
        """Min the current obj over columns [0, allowed). Bland's rule."""
        while True:
            entering = -1
            for j in range(allowed):
                if obj[j] < 0:
                    entering = j
                    break
            if entering < 0:
                return "optimal"
            leave = -1
            best: Fraction | None = None
            for i in range(m):
                coef = a[i][entering]
                if coef > 0:
                    ratio = b[i] / coef
                    if (
                        best is None
                        or ratio < best
                        or (ratio == best and basis[i] < basis[leave])
                    ):
                        best = ratio
                        leave = i
            if leave < 0:
                return "unbounded"
            pivot(leave, entering)

    status = run_simplex(total)
    assert status == "optimal"  # phase 1 is bounded below by 0
    phase1_cost = [_ZERO] * n_real + [_ONE] * m
    if basis_value(phase1_cost) > 0:
        # Farkas ray from phase-1 duals: y_i = 1 - reduced cost of
        # artificial i; multipliers for the ORIGINAL rows then need the
        # row flip undone and a global sign switch to match the
        # y^T A = 0 / y^T b < 0 convention.
        farkas: list[Fraction] = []
        for i in range(m):
            yi = _ONE - obj[n_real + i]
            lam = -yi if not flipped[i] else yi
            farkas.append(lam)
        return LPResult(status="infeasible", farkas=farkas)

    # drop redundant rows whose artificial cannot leave the basis
    drop: list[int] = []
    for r in range(m):
        if basis[r] >= n_real:
            piv_col = next(
                (j for j in range(n_real) if a[r][j] != 0), None
            )
            if piv_col is not None:
                pivot(r, piv_col)
            else:
                drop.append(r)
    if drop:
        for r in sorted(drop, reverse=True):
            del a[r], b[r], basis[r]
        m = len(basis)

    def extract_point() -> dict[str, Fraction]:
        vals: dict[int, Fraction] = {}
        for i, bi in enumerate(basis):
            vals[bi] = b[i]
        return {
            v: vals.get(2 * j, _ZERO) - vals.get(2 * j + 1, _ZERO)
            for j, v in enumerate(system.variables)
        }

    if objective is None:
        return LPResult(
            status="optimal", assignment=extract_point(), value=_ZERO
        )

    # phase 2
    sign = -_ONE if maximize else _ONE
    cost2 = [_ZERO] * total
    for j, cf in enumerate(objective):
        if cf:
            cost2[2 * j] = sign * Fraction(cf)
            cost2[2 * j + 1] = -sign * Fraction(cf)
    for j in range(total):
        obj[j] = cost2[j]
    for i, bi in enumerate(basis):
        cb = cost2[bi]
        if cb:
            for j in range(total):
                obj[j] -= cb * a[i][j]

    status = run_simplex(n_real)
    if status == "unbounded":
        basis_set = set(basis)
        for j in range(n_real):
            if j in basis_set or obj[j] >= 0:
                continue
            if all(a[i][j] <= 0 for i in range(m)):
                ray_vals: dict[int, Fraction] = {j: _ONE}
                for i, bi in enumerate(basis):
                    if a[i][j]:
                        ray_vals[bi] = -a[i][j]
                ray = {
                    v: ray_vals.get(2 * k, _ZERO)
                    - ray_vals.get(2 * k + 1, _ZERO)
                    for k, v in enumerate(system.variables)
                }
                return LPResult(
                    status="unbounded",
                    assignment=extract_point(),
                    ray=ray,
                )
        raise AssertionError("unbounded without certifying column")
    objval = basis_value(cost2)
    value = -objval if maximize else objval
    return LPResult(
        status="optimal", assignment=extract_point(), value=value
    )


def feasible(system: LinearSystem) -> LPResult:
    return solve(system, objective=None)


def solve_strict(system: LinearSystem) -> LPResult:
    """Decide a system containing strict rows, exactly.

    Maximize t with strict rows tightened by t and t <= 1: strictly
    feasible iff the optimum is positive.  The returned point satisfies
    every strict row with positive margin.
    """
    if not any(rel == "<" for _, rel, _ in system.rows):
        return feasible(system)
    aug = LinearSystem(system.variables + ["__t"])
    for coeffs, rel, rhs in system.rows:
        if rel == "<":
            aug.add(list(coeffs) + [_ONE], "<=", rhs)
        else:
            aug.add(list(coeffs) + [_ZERO], rel, rhs)
    nv = len(system.variables)
    aug.add([_ZERO] * nv + [_ONE], "<=", _ONE)
    res = solve(aug, objective=[_ZERO] * nv + [_ONE], maximize=True)
    if res.status == "infeasible" or (
        res.status == "optimal" and (res.value is None or res.value <= 0)
    ):
        return LPResult(status="infeasible")
    assignment = dict(res.assignment or {})
    assignment.pop("__t", None)
    return LPResult(status="optimal", assignment=assignment, value=_ZERO)


def system_from_atoms(
    atoms: Sequence[Atom], variables: Sequence[str]
) -> LinearSystem:
    """Parameter-free comparison atoms as LP rows (strictness preserved)."""
    out = LinearSystem(list(variables))
    for atom in atoms:
        for le in atom.normalized_le():
            coeffs = []
            for v in variables:
                p = le.form.coeff(v)
                if not p.is_constant():
                    raise ValueError(f"parameter-bearing coefficient on {v}")
                coeffs.append(p.constant_value())
            extra = le.form.variables() - set(variables)
            if extra:
                raise ValueError(f"atom mentions undeclared variables {extra}")
            if not le.form.const.is_constant():
                raise ValueError("parameter-bearing constant term")
            rhs = -le.form.const.constant_value()
            out.add(coeffs, "<" if le.strict() else "<=", rhs)
    return out


def atoms_feasible(
    atoms: Sequence[Atom], variables: Sequence[str]
) -> LPResult:
    """Exact satisfiability of a conjunction, strict atoms honored."""
    return solve_strict(system_from_atoms(atoms, variables))


def check_implication(
    premise: LinearSystem,
    conclusion_coeffs: Sequence[Fraction],
    conclusion_rhs: Fraction,
) -> tuple[bool, dict[str, Fraction] | None]:
    """Decide `forall y: premise(y) => c^T y <= d` over concrete rationals.

    Maximize c^T y over the premise polyhedron: valid iff the premise is
    infeasible or the maximum is <= d.  When invalid, the returned witness
    satisfies the premise and violates the conclusion.
    """
    res = solve(premise, objective=conclusion_coeffs, maximize=True)
    if res.status == "infeasible":
        return True, None
    if res.status == "optimal":
        assert res.value is not None
        if res.value <= conclusion_rhs:
            return True, None
        return False, res.assignment
    # unbounded: walk the improving ray until the conclusion breaks
    base = res.assignment or {}
    ray = res.ray or {}
    names = premise.variables
    cval = sum(
        (Fraction(conclusion_coeffs[j]) * base.get(v, _ZERO)
         for j, v in enumerate(names)),
        _ZERO,
    )
    cray = sum(
        (Fraction(conclusion_coeffs[j]) * ray.get(v, _ZERO)
         for j, v in enumerate(names)),
        _ZERO,
    )
    assert cray > 0
    k = 0
    while cval + k * cray <= conclusion_rhs:
        k += 1
    witness = {
        v: base.get(v, _ZERO) + k * ray.get(v, _ZERO) for v in names
    }
    return False, witness
