"""Symbolic rational-exponential functions in several complex variables.

The working class of integrands is finite sums of terms

    c * P(z) * exp(L(z)) / prod_i A_i(z)^{m_i}

with P a polynomial, L and each A_i affine, and all scalars arbitrary-precision
complex (mpmath).  The class is closed under the three operations the residue
engine needs: partial differentiation, affine substitution (including linear
changes of variables), and taking the coefficient of (z_v - pole)^{-1} in one
variable.

Scalars live at whatever mpmath precision is ambient; callers that care wrap
their work in ``working_precision``.  Exact inputs (int, Fraction, exact
complex rationals) convert losslessly at the ambient precision.
"""

from __future__ import annotations

import math
from contextlib import contextmanager
from dataclasses import dataclass
from fractions import Fraction
from typing import Iterable, Sequence

from mpmath import exp as mp_exp
from mpmath import mp, mpc, mpf

from .exact_linalg import GaussianRational

DEFAULT_PRECISION = 128


class IdenticallyZeroDenominator(ValueError):
    """A denominator factor is the zero affine form."""


class PoleHit(ArithmeticError):
    """Evaluation was requested at (or numerically too near) a pole."""


@contextmanager
def working_precision(bits: int):
    with mp.workprec(bits):
        yield


def to_mpc(x) -> mpc:
    """Coerce exact and floating scalars to mpc at the ambient precision."""
    if isinstance(x, mpc):
        return x
    if isinstance(x, Fraction):
        return mpc(mpf(x.numerator) / mpf(x.denominator))
    if isinstance(x, GaussianRational):
        re = mpf(x.re.numerator) / mpf(x.re.denominator)
        im = mpf(x.im.numerator) / mpf(x.im.denominator)
        return mpc(re, im)
    return mpc(x)


def _noise_floor() -> mpf:
    """Magnitudes below this (relative to scale 1) are rounding residue.

    Half the ambient mantissa is far below any genuine quantity in this
    package and far above accumulated rounding error of short computations.
    """
    return mpf(2) ** (-(mp.prec // 2))


def is_negligible(x, scale=1) -> bool:
    return abs(to_mpc(x)) <= _noise_floor() * max(mpf(1), mpf(abs(scale)))


@dataclass(frozen=True)
class AffineForm:
    """a . z + c over mpc scalars."""

    coeffs: tuple
    const: mpc

    @classmethod
    def make(cls, coeffs: Iterable, const=0) -> "AffineForm":
        return cls(tuple(to_mpc(x) for x in coeffs), to_mpc(const))

    @classmethod
    def unit(cls, arity: int, index: int) -> "AffineForm":
        return cls.make([1 if j == index else 0 for j in range(arity)])

    @classmethod
    def constant(cls, arity: int, value) -> "AffineForm":
        return cls.make([0] * arity, value)

    @property
    def arity(self) -> int:
        return len(self.coeffs)

    def evaluate(self, point: Sequence) -> mpc:
        acc = self.const
        for a, z in zip(self.coeffs, point):
            acc = acc + a * to_mpc(z)
        return acc

    def max_abs(self) -> mpf:
        vals = [abs(c) for c in self.coeffs] + [abs(self.const)]
        return max(vals) if vals else mpf(0)

    def is_zero(self) -> bool:
        return self.max_abs() <= _noise_floor()

    def scale(self, factor) -> "AffineForm":
        f = to_mpc(factor)
        return AffineForm(tuple(c * f for c in self.coeffs), self.const * f)

    def add(self, other: "AffineForm") -> "AffineForm":
        return AffineForm(
            tuple(a + b for a, b in zip(self.coeffs, other.coeffs)),
            self.const + other.const,
        )

    def compose(self, forms: Sequence["AffineForm"]) -> "AffineForm":
        """Substitute z_i = forms[i](w); all forms share one new arity."""
        new_arity = forms[0].arity if forms else 0
        acc = AffineForm.constant(new_arity, self.const)
        for a, phi in zip(self.coeffs, forms):
            acc = acc.add(phi.scale(a))
        return acc

    def solve_for(self, var: int) -> "AffineForm":
        """On the zero locus, express z_var as an affine form of the others.

        The result has the same arity with a zero coefficient at ``var``.
        """
        a = self.coeffs[var]
        if is_negligible(a, self.max_abs()):
            raise ZeroDivisionError(f"form does not involve variable {var}")
        coeffs = [(-c) / a for c in self.coeffs]
        coeffs[var] = to_mpc(0)
        return AffineForm(tuple(coeffs), -self.const / a)

    def drop_var(self, var: int) -> "AffineForm":
        """Remove a variable whose coefficient is (numerically) zero."""
        if not is_negligible(self.coeffs[var], self.max_abs()):
            raise ValueError(f"variable {var} still occurs")
        return AffineForm(
            tuple(c for j, c in enumerate(self.coeffs) if j != var), self.const
        )

    def normalized(self):
        """Scale so the first significant entry is 1; returns (form, factor).

        ``factor`` is the original leading entry: self == result.scale(factor).
        """
        scale = self.max_abs()
        floor = _noise_floor() * max(mpf(1), scale)
        for x in list(self.coeffs) + [self.const]:
            if abs(x) > floor:
                lead = x
                return (
                    AffineForm(
                        tuple(c / lead for c in self.coeffs), self.const / lead
                    ),
                    lead,
                )
        raise IdenticallyZeroDenominator("zero affine form")

    def close_to(self, other: "AffineForm") -> bool:
        scale = max(self.max_abs(), other.max_abs(), mpf(1))
        diff = max(
            [abs(a - b) for a, b in zip(self.coeffs, other.coeffs)]
            + [abs(self.const - other.const)]
        )
        return diff <= _noise_floor() * scale


class Polynomial:
    """Sparse polynomial: exponent tuple -> mpc coefficient.

    Immutable by convention; all methods return new instances.  Iteration is
    in sorted exponent order for determinism.
    """

    __slots__ = ("arity", "_coeffs")

    def __init__(self, arity: int, coeffs: dict | None = None):
        self.arity = arity
        cleaned = {}
        if coeffs:
            scale = max((abs(v) for v in coeffs.values()), default=mpf(0))
            floor = _noise_floor() * scale
            for e, v in coeffs.items():
                if abs(v) > floor:
                    cleaned[tuple(e)] = to_mpc(v)
        self._coeffs = cleaned

    @classmethod
    def constant(cls, arity: int, value) -> "Polynomial":
        v = to_mpc(value)
        return cls(arity, {(0,) * arity: v} if v != 0 else {})

    @classmethod
    def from_affine(cls, form: AffineForm) -> "Polynomial":
        n = form.arity
        coeffs = {}
        for j, a in enumerate(form.coeffs):
            e = tuple(1 if k == j else 0 for k in range(n))
            coeffs[e] = a
        coeffs[(0,) * n] = coeffs.get((0,) * n, to_mpc(0)) + form.const
        return cls(n, coeffs)

    def items(self):
        return sorted(self._coeffs.items())

    def is_zero(self) -> bool:
        return not self._coeffs

    def is_constant(self) -> bool:
        return all(sum(e) == 0 for e in self._coeffs)

    def constant_value(self) -> mpc:
        return self._coeffs.get((0,) * self.arity, to_mpc(0))

    def degree(self) -> int:
        return max((sum(e) for e in self._coeffs), default=0)

    def add(self, other: "Polynomial") -> "Polynomial":
        coeffs = dict(self._coeffs)
        for e, v in other._coeffs.items():
            coeffs[e] = coeffs.get(e, to_mpc(0)) + v
        return Polynomial(self.arity, coeffs)

    def mul(self, other: "Polynomial") -> "Polynomial":
        coeffs: dict = {}
        for e1, v1 in self._coeffs.items():
            for e2, v2 in other._coeffs.items():
                e = tuple(a + b for a, b in zip(e1, e2))
                coeffs[e] = coeffs.get(e, to_mpc(0)) + v1 * v2
        return Polynomial(self.arity, coeffs)

    def scale(self, factor) -> "Polynomial":
        f = to_mpc(factor)
        return Polynomial(self.arity, {e: v * f for e, v in self._coeffs.items()})

    def differentiate(self, var: int) -> "Polynomial":
        coeffs = {}
        for e, v in self._coeffs.items():
            if e[var] > 0:
                ne = tuple(x - 1 if j == var else x for j, x in enumerate(e))
                coeffs[ne] = coeffs.get(ne, to_mpc(0)) + v * e[var]
        return Polynomial(self.arity, coeffs)

    def evaluate(self, point: Sequence) -> mpc:
        pt = [to_mpc(z) for z in point]
        acc = to_mpc(0)
        for e, v in self.items():
            mono = v
            for z, k in zip(pt, e):
                for _ in range(k):
                    mono = mono * z
            acc = acc + mono
        return acc

    def compose(self, forms: Sequence[AffineForm]) -> "Polynomial":
        """Substitute z_i = forms[i](w) for every variable."""
        new_arity = forms[0].arity if forms else 0
        basis = [Polynomial.from_affine(f) for f in forms]
        acc = Polynomial(new_arity)
        for e, v in self.items():
            mono = Polynomial.constant(new_arity, v)
            for p, k in zip(basis, e):
                for _ in range(k):
                    mono = mono.mul(p)
            acc = acc.add(mono)
        return acc

    def __repr__(self) -> str:
        return f"Polynomial({self.arity}, {self._coeffs!r})"


@dataclass(frozen=True)
class Term:
    """One summand c * P * exp(L) / prod A_i^{m_i}; built via Term.make."""

    coeff: mpc
    poly: Polynomial
    expo: AffineForm
    denom: tuple  # tuple of (AffineForm, int)

    @classmethod
    def make(cls, coeff, poly: Polynomial, expo: AffineForm, denom: Iterable) -> "Term":
        """Normalize: monic denominator factors, proportional factors merged."""
        c = to_mpc(coeff)
        merged: list[tuple[AffineForm, int]] = []
        for form, mult in denom:
            if mult <= 0:
                raise ValueError("denominator multiplicities must be positive")
            unit, lead = form.normalized()
            c = c / (lead ** mult)
            for i, (u, m) in enumerate(merged):
                if u.close_to(unit):
                    merged[i] = (u, m + mult)
                    break
            else:
                merged.append((unit, mult))
        merged.sort(key=lambda fm: _affine_sort_key(fm[0]))
        return cls(c, poly, expo, tuple(merged))

    @property
    def arity(self) -> int:
        return self.expo.arity

    def is_zero(self) -> bool:
        return self.coeff == 0 or self.poly.is_zero()

    def scale(self, factor) -> "Term":
        return Term(self.coeff * to_mpc(factor), self.poly, self.expo, self.denom)


def _affine_sort_key(form: AffineForm):
    return tuple(
        (float(x.real), float(x.imag)) for x in list(form.coeffs) + [form.const]
    )


class ExpRationalFunction:
    """Finite sum of Terms over a fixed arity."""

    __slots__ = ("arity", "terms")

    def __init__(self, arity: int, terms: Iterable[Term] = ()):
        self.arity = arity
        kept = []
        for t in terms:
            if t.arity != arity:
                raise ValueError("term arity mismatch")
            if not t.is_zero():
                kept.append(t)
        self.terms = tuple(kept)

    # ---- constructors -------------------------------------------------

    @classmethod
    def zero(cls, arity: int) -> "ExpRationalFunction":
        return cls(arity)

    @classmethod
    def from_parts(
        cls,
        arity: int,
        coeff=1,
        poly: Polynomial | None = None,
        expo: AffineForm | None = None,
        denom: Iterable = (),
    ) -> "ExpRationalFunction":
        poly = poly if poly is not None else Polynomial.constant(arity, 1)
        expo = expo if expo is not None else AffineForm.constant(arity, 0)
        return cls(arity, [Term.make(coeff, poly, expo, denom)])

    # ---- ring operations ----------------------------------------------

    def add(self, other: "ExpRationalFunction") -> "ExpRationalFunction":
        if other.arity != self.arity:
            raise ValueError("arity mismatch")
        return ExpRationalFunction(self.arity, self.terms + other.terms)

    def neg(self) -> "ExpRationalFunction":
        return self.scale(-1)

    def sub(self, other: "ExpRationalFunction") -> "ExpRationalFunction":
        return self.add(other.neg())

    def scale(self, factor) -> "ExpRationalFunction":
        return ExpRationalFunction(self.arity, [t.scale(factor) for t in self.terms])

    def mul(self, other: "ExpRationalFunction") -> "ExpRationalFunction":
        if other.arity != self.arity:
            raise ValueError("arity mismatch")
        out = []
        for t1 in self.terms:
            for t2 in other.terms:
                out.append(
                    Term.make(
                        t1.coeff * t2.coeff,
                        t1.poly.mul(t2.poly),
                        t1.expo.add(t2.expo),
                        t1.denom + t2.denom,
                    )
                )
        return ExpRationalFunction(self.arity, out)

    # ---- calculus ------------------------------------------------------

    def differentiate(self, var: int) -> "ExpRationalFunction":
        out = []
        for t in self.terms:
            dp = t.poly.differentiate(var)
            if not dp.is_zero():
                out.append(Term.make(t.coeff, dp, t.expo, t.denom))
            lv = t.expo.coeffs[var]
            if lv != 0:
                out.append(Term.make(t.coeff * lv, t.poly, t.expo, t.denom))
            for i, (form, mult) in enumerate(t.denom):
                av = form.coeffs[var]
                if av == 0:
                    continue
                bumped = list(t.denom)
                bumped[i] = (form, mult + 1)
                out.append(Term.make(t.coeff * (-mult) * av, t.poly, t.expo, bumped))
        return ExpRationalFunction(self.arity, out)

    def compose(self, forms: Sequence[AffineForm]) -> "ExpRationalFunction":
        """Substitute z_i = forms[i](w) in every part of every term."""
        if len(forms) != self.arity:
            raise ValueError("one form per variable required")
        new_arity = forms[0].arity if forms else 0
        out = []
        for t in self.terms:
            denom = []
            coeff = t.coeff
            for form, mult in t.denom:
                sub = form.compose(forms)
                if sub.is_zero():
                    raise IdenticallyZeroDenominator(
                        "substitution kills a denominator factor"
                    )
                denom.append((sub, mult))
            out.append(
                Term.make(coeff, t.poly.compose(forms), t.expo.compose(forms), denom)
            )
        return ExpRationalFunction(new_arity, out)

    def compose_linear(self, matrix: Sequence[Sequence]) -> "ExpRationalFunction":
        """Substitute z = M w, rows of ``matrix`` giving each z_i in terms of w."""
        rows = [AffineForm.make(row) for row in matrix]
        if len(rows) != self.arity:
            raise ValueError("matrix must have one row per variable")
        return self.compose(rows)

    def substitute_affine(self, var: int, repl: AffineForm) -> "ExpRationalFunction":
        """Set z_var = repl(z_others); the result loses that variable.

        ``repl`` has the same arity as self with a zero coefficient at ``var``.
        """
        if repl.arity != self.arity:
            raise ValueError("replacement arity mismatch")
        if not is_negligible(repl.coeffs[var], repl.max_abs()):
            raise ValueError("replacement must not involve the variable it defines")
        forms = []
        for i in range(self.arity):
            if i == var:
                forms.append(repl.drop_var(var))
            else:
                new_index = i if i < var else i - 1
                forms.append(AffineForm.unit(self.arity - 1, new_index))
        return self.compose(forms)

    def residue_1d(self, var: int, pole: AffineForm) -> "ExpRationalFunction":
        """Coefficient of (z_var - pole)^{-1}, as a function of the other variables.

        ``pole`` is affine in the remaining variables (zero coefficient at
        ``var``).  Terms with no denominator factor vanishing along
        z_var = pole contribute nothing.
        """
        if pole.arity != self.arity:
            raise ValueError("pole arity mismatch")
        result = ExpRationalFunction.zero(self.arity - 1)
        for t in self.terms:
            vanishing: list[int] = []
            order = 0
            for i, (form, mult) in enumerate(t.denom):
                at_pole = form.compose(_pole_insertion_forms(self.arity, var, pole))
                if at_pole.is_zero():
                    vanishing.append(i)
                    order += mult
            if order == 0:
                continue
            coeff = t.coeff
            kept = []
            for i, (form, mult) in enumerate(t.denom):
                if i in vanishing:
                    # A = a_v (z_var - pole) exactly, so A^m contributes a_v^m
                    coeff = coeff / (form.coeffs[var] ** mult)
                else:
                    kept.append((form, mult))
            g = ExpRationalFunction(
                self.arity, [Term.make(coeff, t.poly, t.expo, kept)]
            )
            for _ in range(order - 1):
                g = g.differentiate(var)
            g = g.substitute_affine(var, pole).scale(
                Fraction(1, math.factorial(order - 1))
            )
            result = result.add(g)
        return result

    # ---- evaluation ------------------------------------------------------

    def evaluate(self, point: Sequence) -> mpc:
        if len(point) != self.arity:
            raise ValueError("point arity mismatch")
        pt = [to_mpc(z) for z in point]
        acc = to_mpc(0)
        for t in self.terms:
            den = to_mpc(1)
            for form, mult in t.denom:
                v = form.evaluate(pt)
                if is_negligible(v, form.max_abs()):
                    raise PoleHit("evaluation point is on a pole hyperplane")
                den = den * (v ** mult)
            acc = acc + t.coeff * t.poly.evaluate(pt) * mp_exp(t.expo.evaluate(pt)) / den
        return acc

    def is_zero(self) -> bool:
        return not self.terms

    def max_poly_degree(self) -> int:
        return max((t.poly.degree() for t in self.terms), default=0)

    def __repr__(self) -> str:
        return f"ExpRationalFunction(arity={self.arity}, terms={len(self.terms)})"


def _pole_insertion_forms(arity: int, var: int, pole: AffineForm) -> list[AffineForm]:
    """Forms sending z_var to the pole and fixing the other variables.

    Arity is preserved (the freed slot keeps a zero coefficient), which lets a
    factor be tested for vanishing without reindexing.
    """
    forms = []
    for i in range(arity):
        if i == var:
            forms.append(pole)
        else:
            forms.append(AffineForm.unit(arity, i))
    return forms
