"""Exact-rational symbolic algebra for the synthesis pipeline.

The common currency of every module is the affine form over named variables
(model state, disturbance inputs) whose coefficients are polynomials over
named existential parameters (certificate, invariant, control, slack and
Farkas-multiplier parameters):

    form  =  sum_v  poly_v(params) * v  +  poly_const(params)

All arithmetic is exact: coefficients are fractions.Fraction, polynomials
are canonical sorted-monomial maps, and two forms are equal iff their
canonical representations are equal.  No floating point appears anywhere in
this module (or downstream of it).
"""

from __future__ import annotations

from dataclasses import dataclass
from enum import Enum
from fractions import Fraction
from typing import Iterable, Mapping, Union

Rational = Fraction

RationalLike = Union[Fraction, int, str]


def rat(value: RationalLike) -> Fraction:
    """Coerce ints, 'p/q' strings and decimal strings to exact rationals."""
    if isinstance(value, bool):
        raise TypeError("bool is not a rational")
    if isinstance(value, Fraction):
        return value
    if isinstance(value, int):
        return Fraction(value)
    if isinstance(value, str):
        return Fraction(value)  # handles '3', '-4/5' and '0.1' exactly
    raise TypeError(f"cannot interpret {value!r} as a rational")


class ParamKind(Enum):
    """Role of an existential parameter in the synthesis problem."""

    CERT = "cert"          # certificate template coefficients (theta)
    INV = "inv"            # invariant template coefficients (eta)
    CONTROL = "control"    # control parameters (kappa)
    SLACK = "slack"        # the shared M-increase bound (epsilon is fixed)
    MULTIPLIER = "mult"    # Farkas multipliers (z), fresh per implication


@dataclass(frozen=True)
class Param:
    """A named existential parameter. Names are unique per problem."""

    name: str
    kind: ParamKind

    def __repr__(self) -> str:
        return self.name


# A monomial is a sorted tuple of parameter names, with multiplicity.
Monomial = tuple[str, ...]

_ONE: Monomial = ()


class Poly:
    """Polynomial over parameters with exact rational coefficients.

    Stored as a canonical map {monomial: coeff} with zero coefficients
    removed, so equality and hashing are structural.
    """

    __slots__ = ("terms",)

    def __init__(self, terms: Mapping[Monomial, Fraction] | None = None):
        cleaned: dict[Monomial, Fraction] = {}
        if terms:
            for mono, coeff in terms.items():
                if coeff:
                    key = tuple(sorted(mono))
                    cleaned[key] = cleaned.get(key, Fraction(0)) + coeff
                    if not cleaned[key]:
                        del cleaned[key]
        self.terms = cleaned

    # -- constructors -----------------------------------------------------

    @staticmethod
    def const(value: RationalLike) -> "Poly":
        v = rat(value)
        return Poly({_ONE: v} if v else {})

    @staticmethod
    def param(name: str) -> "Poly":
        return Poly({(name,): Fraction(1)})

    # -- queries -----------------------------------------------------------

    def is_zero(self) -> bool:
        return not self.terms

    def is_constant(self) -> bool:
        return all(m == _ONE for m in self.terms)

    def constant_value(self) -> Fraction:
        """The value of a constant polynomial (0 if empty)."""
        if not self.is_constant():
            raise ValueError(f"{self} is not constant")
        return self.terms.get(_ONE, Fraction(0))

    def degree(self) -> int:
        return max((len(m) for m in self.terms), default=0)

    def params(self) -> set[str]:
        return {name for mono in self.terms for name in mono}

    # -- arithmetic ----------------------------------------------------------

    def __add__(self, other: "Poly") -> "Poly":
        merged = dict(self.terms)
        for mono, coeff in other.terms.items():
            merged[mono] = merged.get(mono, Fraction(0)) + coeff
        return Poly(merged)

    def __neg__(self) -> "Poly":
        return Poly({m: -c for m, c in self.terms.items()})

    def __sub__(self, other: "Poly") -> "Poly":
        return self + (-other)

    def __mul__(self, other: "Poly") -> "Poly":
        out: dict[Monomial, Fraction] = {}
        for m1, c1 in self.terms.items():
            for m2, c2 in other.terms.items():
                mono = tuple(sorted(m1 + m2))
                out[mono] = out.get(mono, Fraction(0)) + c1 * c2
        return Poly(out)

    def scale(self, factor: RationalLike) -> "Poly":
        f = rat(factor)
        return Poly({m: c * f for m, c in self.terms.items()})

    # -- evaluation / substitution -----------------------------------------

    def eval(self, valuation: Mapping[str, Fraction]) -> Fraction:
        total = Fraction(0)
        for mono, coeff in self.terms.items():
            prod = coeff
            for name in mono:
                if name not in valuation:
                    raise KeyError(f"parameter {name} unbound")
                prod *= valuation[name]
            total += prod
        return total

    def substitute(self, valuation: Mapping[str, Fraction]) -> "Poly":
        """Replace any bound parameters by rationals; others stay symbolic."""
        acc = Poly()
        for mono, coeff in self.terms.items():
            remaining: list[str] = []
            c = coeff
            for name in mono:
                if name in valuation:
                    c *= valuation[name]
                else:
                    remaining.append(name)
            acc = acc + Poly({tuple(sorted(remaining)): c})
        return acc

    # -- plumbing ----------------------------------------------------------

    def __eq__(self, other: object) -> bool:
        return isinstance(other, Poly) and self.terms == other.terms

    def __hash__(self) -> int:
        return hash(frozenset(self.terms.items()))

    def __repr__(self) -> str:
        if not self.terms:
            return "0"
        parts = []
        for mono in sorted(self.terms, key=lambda m: (len(m), m)):
            coeff = self.terms[mono]
            if mono == _ONE:
                parts.append(str(coeff))
            else:
                stem = "*".join(mono)
                if coeff == 1:
                    parts.append(stem)
                elif coeff == -1:
                    parts.append(f"-{stem}")
                else:
                    parts.append(f"{coeff}*{stem}")
        return " + ".join(parts).replace("+ -", "- ")


ZERO = Poly()
ONE = Poly.const(1)


class LinForm:
    """Affine form over named variables with Poly coefficients.

    Evaluating under any full parameter valuation yields an affine function
    of the variables; addition, scaling and variable substitution are closed.
    """

    __slots__ = ("coeffs", "const")

    def __init__(
        self,
        coeffs: Mapping[str, Poly] | None = None,
        const: Poly | None = None,
    ):
        self.coeffs: dict[str, Poly] = {
            v: p for v, p in (coeffs or {}).items() if not p.is_zero()
        }
        self.const: Poly = const if const is not None else ZERO

    # -- constructors ----------------------------------------------------

    @staticmethod
    def var(name: str) -> "LinForm":
        return LinForm({name: ONE})

    @staticmethod
    def constant(value: RationalLike) -> "LinForm":
        return LinForm({}, Poly.const(value))

    @staticmethod
    def from_poly(p: Poly) -> "LinForm":
        return LinForm({}, p)

    # -- queries ----------------------------------------------------------

    def variables(self) -> set[str]:
        return set(self.coeffs)

    def params(self) -> set[str]:
        names = set(self.const.params())
        for p in self.coeffs.values():
            names |= p.params()
        return names

    def degree(self) -> int:
        d = self.const.degree()
        for p in self.coeffs.values():
            d = max(d, p.degree())
        return d

    def is_zero(self) -> bool:
        return not self.coeffs and self.const.is_zero()

    def is_param_free(self) -> bool:
        return self.degree() == 0

    def coeff(self, var: str) -> Poly:
        return self.coeffs.get(var, ZERO)

    # -- arithmetic --------------------------------------------------------

    def __add__(self, other: "LinForm") -> "LinForm":
        coeffs = dict(self.coeffs)
        for v, p in other.coeffs.items():
            coeffs[v] = coeffs.get(v, ZERO) + p
        return LinForm(coeffs, self.const + other.const)

    def __neg__(self) -> "LinForm":
        return LinForm(
            {v: -p for v, p in self.coeffs.items()}, -self.const
        )

    def __sub__(self, other: "LinForm") -> "LinForm":
        return self + (-other)

    def scale(self, factor: RationalLike) -> "LinForm":
        f = rat(factor)
        return LinForm(
            {v: p.scale(f) for v, p in self.coeffs.items()},
            self.const.scale(f),
        )

    def mul_poly(self, p: Poly) -> "LinForm":
        """Multiply by a parameter polynomial (degree grows)."""
        return LinForm(
            {v: q * p for v, q in self.coeffs.items()}, self.const * p
        )

    # -- substitution / evaluation ------------------------------------------

    def substitute_state(self, image: Mapping[str, "LinForm"]) -> "LinForm":
        """Replace each variable by its image form (composition).

        Variables without an image are kept.  Parameter polynomials multiply,
        so composing a parameterized template with a parameterized update
        raises the parameter degree, exactly as intended.
        """
        acc = LinForm({}, self.const)
        for v, p in self.coeffs.items():
            if v in image:
                acc = acc + image[v].mul_poly(p)
            else:
                acc = acc + LinForm({v: p})
        return acc

    def substitute_params(self, valuation: Mapping[str, Fraction]) -> "LinForm":
        return LinForm(
            {v: p.substitute(valuation) for v, p in self.coeffs.items()},
            self.const.substitute(valuation),
        )

    def eval(
        self,
        params: Mapping[str, Fraction],
        state: Mapping[str, Fraction],
    ) -> Fraction:
        total = self.const.eval(params)
        for v, p in self.coeffs.items():
            if v not in state:
                raise KeyError(f"variable {v} unbound")
            total += p.eval(params) * state[v]
        return total

    # -- plumbing -------------------------------------------------------------

    def __eq__(self, other: object) -> bool:
        return (
            isinstance(other, LinForm)
            and self.coeffs == other.coeffs
            and self.const == other.const
        )

    def __hash__(self) -> int:
        return hash((frozenset(self.coeffs.items()), self.const))

    def __repr__(self) -> str:
        parts = []
        for v in sorted(self.coeffs):
            p = self.coeffs[v]
            if p == ONE:
                parts.append(v)
            elif p.is_constant():
                parts.append(f"{p.constant_value()}*{v}")
            else:
                parts.append(f"({p})*{v}")
        if not self.const.is_zero() or not parts:
            parts.append(str(self.const))
        return " + ".join(parts).replace("+ -", "- ")


class Rel(Enum):
    """Relation of a constraint atom, normalized to 'lhs REL 0' downstream."""

    LE = "<="
    LT = "<"
    GE = ">="
    GT = ">"
    EQ = "=="

    def flip(self) -> "Rel":
        return {
            Rel.LE: Rel.GE,
            Rel.LT: Rel.GT,
            Rel.GE: Rel.LE,
            Rel.GT: Rel.LT,
            Rel.EQ: Rel.EQ,
        }[self]


@dataclass(frozen=True)
class Atom:
    """A single constraint `form rel 0` over variables and parameters."""

    form: LinForm
    rel: Rel

    def normalized_le(self) -> list["Atom"]:
        """Rewrite to <=/< atoms only (>= flips sign; == splits in two)."""
        if self.rel in (Rel.LE, Rel.LT):
            return [self]
        if self.rel is Rel.GE:
            return [Atom(-self.form, Rel.LE)]
        if self.rel is Rel.GT:
            return [Atom(-self.form, Rel.LT)]
        return [Atom(self.form, Rel.LE), Atom(-self.form, Rel.LE)]

    def strict(self) -> bool:
        return self.rel in (Rel.LT, Rel.GT)

    def holds(
        self,
        params: Mapping[str, Fraction],
        state: Mapping[str, Fraction],
    ) -> bool:
        v = self.form.eval(params, state)
        return {
            Rel.LE: v <= 0,
            Rel.LT: v < 0,
            Rel.GE: v >= 0,
            Rel.GT: v > 0,
            Rel.EQ: v == 0,
        }[self.rel]

    def __repr__(self) -> str:
        return f"{self.form} {self.rel.value} 0"


def conjunction_holds(
    atoms: Iterable[Atom],
    params: Mapping[str, Fraction],
    state: Mapping[str, Fraction],
) -> bool:
    return all(a.holds(params, state) for a in atoms)
