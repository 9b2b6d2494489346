"""Hyperplanes, polyhedra, and flags.

A polar hyperplane is presented canonically as H = {f(v) = is} with f a
primitive coprime-integer vector and Re s > 0 (such H never meets the real
locus).  A polyhedron is an ordered rational basis (v_1, ..., v_r) spanning a
cone; its coordinates z are the dual basis.  The Jacobian of an ordered
hyperplane collection with respect to a polyhedron has entries f_j(v_k), and
its exact minor profile decides solubility, stability, and compatibility.

The z_k-star values are the sequential pole positions of the coordinate-wise
residue iteration: with p_0 = 1,

    z_k* = p_k^{-1} ( i (s_k p_{k-1} + sum_{j<k} (-1)^{k-j} s_j r_{jk})
                      - sum_{l>k} x_l q_{kl} ).

Since the q-minors and the x-samples are real, Im z_k* does not depend on x;
a flag contributes to the expansion exactly when every Im z_k* > 0.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Iterable, Sequence

from mpmath import mpc, mpf

from .exact_linalg import (
    GaussianRational,
    MinorProfile,
    RationalMatrix,
    determinant,
    inverse,
    leading_principal_minor,
    minor_profile,
    q_minor,
    r_minor,
    rank,
    solve_linear,
)
from .symfun import (
    AffineForm,
    ExpRationalFunction,
    is_negligible,
    to_mpc,
)


class NotAlignable(ValueError):
    """The linear part cannot be scaled to a real form (Re and Im not parallel)."""


class MeetsRealLocus(ValueError):
    """The hyperplane intersects the real integration locus (Re s = 0)."""


class InsolubleFlag(Exception):
    """A leading principal minor of the linearized flag vanishes."""


def _exact_scalar(x) -> GaussianRational:
    if isinstance(x, GaussianRational):
        return x
    if isinstance(x, (int, Fraction)):
        return GaussianRational.of(x)
    if isinstance(x, complex):
        re, im = Fraction(x.real), Fraction(x.imag)
        return GaussianRational(re, im)
    raise TypeError(
        f"hyperplane linear parts must be exact rational data, got {x!r}"
    )


@dataclass(frozen=True)
class Hyperplane:
    """H = {v : f(v) = i s} with f primitive integers and Re s > 0."""

    f: tuple[int, ...]
    s: mpc

    @property
    def dim(self) -> int:
        return len(self.f)

    def defining_form(self) -> AffineForm:
        """g = f(v) - i s, the affine function cutting out H."""
        return AffineForm.make(self.f, -to_mpc(self.s) * mpc(0, 1))

    def f_row(self) -> tuple[Fraction, ...]:
        return tuple(Fraction(c) for c in self.f)

    def same_locus(self, other: "Hyperplane") -> bool:
        return self.f == other.f and is_negligible(
            to_mpc(self.s) - to_mpc(other.s), abs(to_mpc(self.s))
        )


def canonicalize_hyperplane(linear_coeffs: Sequence, constant) -> Hyperplane:
    """Rescale the affine function <a, v> + b to the canonical (f, s) data.

    The zero set {<a,v> + b = 0} is rewritten as {f(v) = is} with f a
    primitive coprime-integer vector and Re s > 0.  The linear part must be
    exact (ints, Fractions, exact complex rationals); the constant may be any
    complex scalar.
    """
    a = [_exact_scalar(x) for x in linear_coeffs]
    if all(x.is_zero for x in a):
        raise ValueError("linear part is zero; not a hyperplane")
    lead = next(x for x in a if not x.is_zero)
    lam = lead.conjugate()
    scaled = [lam * x for x in a]
    if any(not x.is_real for x in scaled):
        raise NotAlignable(
            "real and imaginary parts of the linear coefficients are not parallel"
        )
    u = [x.re for x in scaled]
    # positive rational scale to a primitive coprime-integer vector
    den_lcm = math.lcm(*(x.denominator for x in u))
    ints = [int(x * den_lcm) for x in u]
    g = math.gcd(*(abs(n) for n in ints))
    ints = [n // g for n in ints]
    mu = Fraction(den_lcm, g)
    # f(v) = i s with i s = -mu * lam * b, so s = i * mu * lam * b
    lam_total = GaussianRational(lam.re * mu, lam.im * mu)
    try:
        b = _exact_scalar(constant)
        s_exact = (b * lam_total).times_i()
        re_sign = 1 if s_exact.re > 0 else (-1 if s_exact.re < 0 else 0)
        s = to_mpc(s_exact)
    except TypeError:
        s = to_mpc(constant) * to_mpc(lam_total) * mpc(0, 1)
        if is_negligible(s.real, abs(s)):
            re_sign = 0
        else:
            re_sign = 1 if s.real > 0 else -1
    if re_sign == 0:
        raise MeetsRealLocus("hyperplane meets the real locus (Re s = 0)")
    if re_sign < 0:
        ints = [-n for n in ints]
        s = -s
    return Hyperplane(f=tuple(ints), s=s)


@dataclass(frozen=True)
class Polyhedron:
    """Cone data: ordered rational generators v_1..v_r (the dual basis to z)."""

    generators: tuple[tuple[Fraction, ...], ...]

    @classmethod
    def from_generators(cls, vectors: Iterable[Iterable]) -> "Polyhedron":
        gens = tuple(tuple(Fraction(x) for x in v) for v in vectors)
        r = len(gens)
        if any(len(v) != r for v in gens):
            raise ValueError("need r generators of length r")
        if determinant(cls._basis_matrix_of(gens)) == 0:
            raise ValueError("generators are linearly dependent")
        return cls(gens)

    @staticmethod
    def _basis_matrix_of(gens) -> RationalMatrix:
        r = len(gens)
        return RationalMatrix.from_rows(
            [[gens[j][i] for j in range(r)] for i in range(r)]
        )

    @property
    def dim(self) -> int:
        return len(self.generators)

    def basis_matrix(self) -> RationalMatrix:
        """M with columns v_1..v_r, so v = M z."""
        return self._basis_matrix_of(self.generators)

    def z_matrix(self) -> RationalMatrix:
        """Rows are the coordinate forms z_1..z_r (the inverse of M)."""
        return inverse(self.basis_matrix())

    def det(self) -> Fraction:
        return determinant(self.basis_matrix())

    def scale_generators(self, factors: Sequence[Fraction]) -> "Polyhedron":
        return Polyhedron(
            tuple(
                tuple(Fraction(c) * x for x in v)
                for c, v in zip(factors, self.generators)
            )
        )


@dataclass(frozen=True)
class Flag:
    """Ordered tuple of hyperplane indices; cuts H_1 > H_1^H_2 > ..."""

    indices: tuple[int, ...]

    def __len__(self) -> int:
        return len(self.indices)

    def label(self) -> str:
        return "(" + ",".join(f"H{i + 1}" for i in self.indices) + ")"


@dataclass(frozen=True)
class Arrangement:
    """Dimension, polar hyperplanes with multiplicities, and the numerator."""

    dim: int
    hyperplanes: tuple[Hyperplane, ...]
    multiplicities: tuple[int, ...]
    numerator: ExpRationalFunction

    @classmethod
    def build(
        cls,
        dim: int,
        hyperplanes: Iterable[Hyperplane],
        numerator: ExpRationalFunction | None = None,
        multiplicities: Iterable[int] | None = None,
    ) -> "Arrangement":
        """Merge coincident hyperplanes into multiplicities."""
        hps: list[Hyperplane] = []
        mults: list[int] = []
        supplied = list(multiplicities) if multiplicities is not None else None
        for pos, h in enumerate(hyperplanes):
            if len(h.f) != dim:
                raise ValueError("hyperplane dimension mismatch")
            m = supplied[pos] if supplied is not None else 1
            for i, existing in enumerate(hps):
                if existing.same_locus(h):
                    mults[i] += m
                    break
            else:
                hps.append(h)
                mults.append(m)
        if not hps:
            raise ValueError("need at least one hyperplane")
        num = (
            numerator
            if numerator is not None
            else ExpRationalFunction.from_parts(dim)
        )
        if num.arity != dim:
            raise ValueError("numerator arity mismatch")
        return cls(dim, tuple(hps), tuple(mults), num)

    @property
    def total_denominator_degree(self) -> int:
        return sum(self.multiplicities)

    def integrand(self) -> ExpRationalFunction:
        """G(v) = numerator / prod (f_j(v) - i s_j)^{m_j} in v-coordinates."""
        denom = [
            (h.defining_form(), m)
            for h, m in zip(self.hyperplanes, self.multiplicities)
        ]
        return self.numerator.mul(
            ExpRationalFunction.from_parts(self.dim, denom=denom)
        )

    def integrand_in(self, poly: Polyhedron) -> ExpRationalFunction:
        """The function F with int_{R^r} G dv = int_{R^r} F dz: F = |det M| G(Mz)."""
        m = poly.basis_matrix()
        composed = self.integrand().compose_linear(
            [[row_entry for row_entry in row] for row in m.entries]
        )
        return composed.scale(abs(poly.det()))


def jacobian(
    arr: Arrangement, indices: Sequence[int], poly: Polyhedron
) -> RationalMatrix:
    """Rows f_j of the chosen hyperplanes evaluated on the cone generators."""
    if not indices:
        raise ValueError("empty hyperplane collection")
    if len(indices) > arr.dim:
        raise ValueError("more hyperplanes than dimensions")
    f_rows = RationalMatrix.from_rows(
        [arr.hyperplanes[i].f_row() for i in indices]
    )
    return f_rows.matmul(poly.basis_matrix())


def enumerate_flags(arr: Arrangement, depth: int) -> list[Flag]:
    """All ordered depth-tuples of distinct hyperplanes with full-rank f-rows."""
    if not (1 <= depth <= arr.dim):
        raise ValueError("depth out of range")
    out = []
    for combo in itertools.permutations(range(len(arr.hyperplanes)), depth):
        rows = RationalMatrix.from_rows(
            [arr.hyperplanes[i].f_row() for i in combo]
        )
        if rank(rows) == depth:
            out.append(Flag(combo))
    return out


def stable_flags(arr: Arrangement, poly: Polyhedron) -> list[Flag]:
    """Complete ordered collections whose Jacobian is stable."""
    return [
        g
        for g in enumerate_flags(arr, arr.dim)
        if minor_profile(jacobian(arr, g.indices, poly)).stable
    ]


@dataclass(frozen=True)
class Violation:
    """A stable ordered collection with a positive q-minor."""

    flag: Flag
    positive_q: tuple[tuple[tuple[int, int], Fraction], ...]


@dataclass(frozen=True)
class AuditReport:
    all_compatible: bool
    violations: tuple[Violation, ...]
    flags_checked: int
    truncated: bool = False


MAX_REPORTED_VIOLATIONS = 100


def compatibility_audit(arr: Arrangement, poly: Polyhedron) -> AuditReport:
    """Check every complete ordered collection for stable-but-incompatible."""
    violations: list[Violation] = []
    checked = 0
    truncated = False
    for g in enumerate_flags(arr, arr.dim):
        checked += 1
        prof = minor_profile(jacobian(arr, g.indices, poly))
        if prof.stable and not prof.compatible:
            if len(violations) < MAX_REPORTED_VIOLATIONS:
                positive = tuple(
                    (pos, val) for pos, val in prof.q if val > 0
                )
                violations.append(Violation(g, positive))
            else:
                truncated = True
    return AuditReport(
        all_compatible=not violations and not truncated,
        violations=tuple(violations),
        flags_checked=checked,
        truncated=truncated,
    )


def pole_location(arr: Arrangement, flag: Flag) -> list[mpc]:
    """Terminal point z_gamma in v-coordinates: solve f_j(v) = i s_j."""
    if len(flag) != arr.dim:
        raise ValueError("terminal point requires a complete flag")
    f_rows = RationalMatrix.from_rows(
        [arr.hyperplanes[i].f_row() for i in flag.indices]
    )
    rhs = [to_mpc(arr.hyperplanes[i].s) * mpc(0, 1) for i in flag.indices]
    return solve_linear(f_rows, rhs)


@dataclass(frozen=True)
class ZStarResult:
    """Sequential pole positions and the arising verdict for one flag."""

    values: tuple[mpc, ...]
    arises: bool
    boundary: bool
    profile: MinorProfile


def z_star(
    arr: Arrangement,
    flag: Flag,
    poly: Polyhedron,
    x: Sequence | None = None,
) -> ZStarResult:
    """Evaluate the sequential pole formula; x holds the trailing real samples.

    Raises InsolubleFlag when a leading principal minor vanishes.  The arising
    verdict (every Im z_k* > 0) is x-independent; boundary marks Im z_k* = 0
    within the noise floor.
    """
    k_total = len(flag)
    jac = jacobian(arr, flag.indices, poly)
    prof = minor_profile(jac)
    if any(p == 0 for p in prof.p):
        raise InsolubleFlag(flag)
    xs = [to_mpc(v) for v in (x if x is not None else [0] * arr.dim)]
    if len(xs) < arr.dim:
        raise ValueError("x must supply a sample for every coordinate")
    r_map = prof.r_map()
    q_map = prof.q_map()
    s_vals = [to_mpc(arr.hyperplanes[i].s) for i in flag.indices]
    p_prev = [Fraction(1)] + list(prof.p)
    values: list[mpc] = []
    arises = True
    boundary = False
    for k in range(1, k_total + 1):
        acc = s_vals[k - 1] * to_mpc(p_prev[k - 1])
        for j in range(1, k):
            sign = -1 if (k - j) % 2 else 1
            acc = acc + sign * s_vals[j - 1] * to_mpc(r_map[(j, k)])
        total = acc * mpc(0, 1)
        for l in range(k + 1, arr.dim + 1):
            total = total - xs[l - 1] * to_mpc(q_map[(k, l)])
        zk = total / to_mpc(prof.p[k - 1])
        values.append(zk)
        if is_negligible(zk.imag, abs(zk)):
            boundary = True
            arises = False
        elif zk.imag < 0:
            arises = False
    return ZStarResult(tuple(values), arises, boundary, prof)


def _combination_on_rows(basis: RationalMatrix, target_row: Sequence[Fraction]):
    """Coefficients c with c . basis = target_row, or None if inconsistent.

    Exact elimination on the transposed augmented system.
    """
    k = basis.rows
    r = basis.cols
    aug = [[basis[j, i] for j in range(k)] + [Fraction(target_row[i])] for i in range(r)]
    row = 0
    pivots = []
    for col in range(k):
        piv = next((i for i in range(row, r) if aug[i][col] != 0), None)
        if piv is None:
            continue
        aug[row], aug[piv] = aug[piv], aug[row]
        inv = 1 / aug[row][col]
        aug[row] = [x * inv for x in aug[row]]
        for i in range(r):
            if i != row and aug[i][col] != 0:
                c = aug[i][col]
                aug[i] = [a - c * b for a, b in zip(aug[i], aug[row])]
        pivots.append(col)
        row += 1
    coeffs = [Fraction(0)] * k
    for i, col in enumerate(pivots):
        coeffs[col] = aug[i][k]
    for i in range(row, r):
        if aug[i][k] != 0:
            return None
    return coeffs


def same_flag(arr: Arrangement, a: Flag, b: Flag) -> bool:
    """Whether two ordered collections cut out the same chain of subspaces.

    Level by level: the span of the first k linear forms must agree exactly,
    and the affine offsets must be consistent (each equation of one prefix is
    implied by the other's).
    """
    if len(a) != len(b):
        return False
    for k in range(1, len(a) + 1):
        rows_a = RationalMatrix.from_rows(
            [arr.hyperplanes[i].f_row() for i in a.indices[:k]]
        )
        stacked = RationalMatrix.from_rows(
            list(rows_a.entries)
            + [arr.hyperplanes[i].f_row() for i in b.indices[:k]]
        )
        if rank(stacked) != k:
            return False
        for idx in b.indices[:k]:
            coeffs = _combination_on_rows(
                rows_a, arr.hyperplanes[idx].f_row()
            )
            if coeffs is None:
                return False
            implied = sum(
                (
                    to_mpc(c) * to_mpc(arr.hyperplanes[j].s)
                    for c, j in zip(coeffs, a.indices[:k])
                ),
                start=to_mpc(0),
            )
            target = to_mpc(arr.hyperplanes[idx].s)
            if not is_negligible(implied - target, abs(target)):
                return False
    return True


def flag_classes(arr: Arrangement, flags: Sequence[Flag]) -> list[list[Flag]]:
    """Group ordered collections into classes cutting out the same flag."""
    classes: list[list[Flag]] = []
    for g in sorted(flags, key=lambda f: f.indices):
        for cls in classes:
            if same_flag(arr, cls[0], g):
                cls.append(g)
                break
        else:
            classes.append([g])
    return classes
