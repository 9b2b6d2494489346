"""Iterated residue evaluation and Grothendieck regrouping.

The integral of a rational-exponential form over the real locus is expanded,
coordinate by coordinate in a polyhedron's chart, into one-variable residues.
Each complete flag of polar hyperplanes either contributes its iterated
residue or is truncated to zero when the linearized flag leaves the open
Bruhat cell (some leading principal minor vanishes).

Sign convention: the chart integrand is the measure pullback, carrying
|det M| for the generator matrix M.  With this normalization the expansion
reproduces the real integral directly:

    integral over R^r  =  (2 pi i)^r  sum over contributing flags.

The classical (chart-free) residue of the form differs from the chart value
by sign(det M); torus-cycle quadrature in the oracle recovers the classical
value, so the two paths agree exactly on positively oriented charts.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field
from enum import Enum
from fractions import Fraction

from mpmath import mpc, mpf, pi

from .arrangement import (
    Arrangement,
    Flag,
    InsolubleFlag,
    Polyhedron,
    compatibility_audit,
    enumerate_flags,
    flag_classes,
    jacobian,
    pole_location,
    stable_flags,
)
from .exact_linalg import RationalMatrix, determinant, minor_profile, rank
from .symfun import (
    DEFAULT_PRECISION,
    AffineForm,
    ExpRationalFunction,
    is_negligible,
    to_mpc,
    working_precision,
)


class BruhatViolation(Exception):
    """A grouping-arising flag is insoluble in every searched chart."""


class EmptyStableSet(Exception):
    """No ordered hyperplane collection is stable for the polyhedron."""


class Convergence(Enum):
    BOUNDED_NUMERATOR = "BoundedNumeratorRule"
    DECAY = "DecayRule"
    USER_ASSERTED = "UserAsserted"
    UNKNOWN = "Unknown"


@dataclass(frozen=True)
class EngineOptions:
    precision: int = DEFAULT_PRECISION
    assert_convergence: bool = False


@dataclass(frozen=True)
class Certificate:
    all_compatible: bool
    convergence: Convergence
    warnings: tuple[str, ...] = ()

    @property
    def certified(self) -> bool:
        return self.all_compatible and self.convergence is not Convergence.UNKNOWN


@dataclass(frozen=True)
class ResidueResult:
    value: mpc
    flag_contributions: dict
    certificate: Certificate


@dataclass(frozen=True)
class DivisorGrouping:
    """Ordered partition-like regrouping (D_1, ..., D_r) of polar divisors."""

    groups: tuple[frozenset, ...]

    @classmethod
    def of(cls, *index_groups) -> "DivisorGrouping":
        groups = tuple(frozenset(g) for g in index_groups)
        if any(not g for g in groups):
            raise ValueError("every divisor group must be nonempty")
        return cls(groups)

    def label(self, arr: Arrangement) -> str:
        parts = []
        for g in self.groups:
            parts.append("".join(f"H{i + 1}" for i in sorted(g)))
        return "(" + ",".join(parts) + ")"


def _chart_flag_forms(arr: Arrangement, flag: Flag, poly: Polyhedron):
    """Defining forms of the flag's hyperplanes in the chart coordinates."""
    j = jacobian(arr, flag.indices, poly)
    forms = []
    for row, idx in enumerate(flag.indices):
        coeffs = [to_mpc(c) for c in j.row(row)]
        forms.append(AffineForm.make(coeffs, -mpc(0, 1) * arr.hyperplanes[idx].s))
    return forms


def _substitute_first(form: AffineForm, pole: AffineForm) -> AffineForm:
    """Replace variable 0 by a pole form (zero coefficient at 0), reindex."""
    n = form.arity
    subs = [pole.drop_var(0)]
    subs.extend(AffineForm.unit(n - 1, v - 1) for v in range(1, n))
    return form.compose(subs)


def _iterate_residues(arr: Arrangement, flag: Flag, poly: Polyhedron) -> mpc:
    func = arr.integrand_in(poly)
    forms = _chart_flag_forms(arr, flag, poly)
    for k in range(len(forms)):
        pole = forms[k].solve_for(0)
        func = func.residue_1d(0, pole)
        forms[k + 1 :] = [_substitute_first(f, pole) for f in forms[k + 1 :]]
    return func.evaluate(())


def truncated_iterated_residue(
    arr: Arrangement, flag: Flag, poly: Polyhedron
) -> mpc:
    """Iterated residue along the flag, or 0 outside the open Bruhat cell."""
    profile = minor_profile(jacobian(arr, flag.indices, poly))
    if not profile.in_bruhat_cell:
        return mpc(0)
    return _iterate_residues(arr, flag, poly)


def iterated_residue(arr: Arrangement, flag: Flag, poly: Polyhedron) -> mpc:
    profile = minor_profile(jacobian(arr, flag.indices, poly))
    if not profile.in_bruhat_cell:
        raise InsolubleFlag(
            f"flag {flag.label()} has a vanishing leading principal minor"
        )
    return _iterate_residues(arr, flag, poly)


def terminal_point_position(arr: Arrangement, flag: Flag, poly: Polyhedron):
    """(inside, boundary) for the flag's terminal point against the polyhedron.

    Membership is tested on the imaginary parts of the chart coordinates;
    the polyhedron is the closed region Im z_k >= 0.
    """
    point = pole_location(arr, flag)
    z = poly.z_matrix()
    inside = True
    boundary = False
    scale = max([mpf(1)] + [abs(c) for c in point])
    for i in range(z.rows):
        coord = sum((to_mpc(z[i, k]) * point[k] for k in range(z.cols)), mpc(0))
        if is_negligible(coord.imag, scale):
            boundary = True
        elif coord.imag < 0:
            inside = False
    return inside, boundary


def _bounded_on_cone(func: ExpRationalFunction, poly: Polyhedron) -> bool:
    """Every exponential factor is non-increasing along i * (each generator)."""
    gens = poly.generators
    for term in func.terms:
        if term.denom:
            return False
        for gen in gens:
            growth = sum(
                (to_mpc(c) * mpc(0, 1) * to_mpc(g) for c, g in zip(term.expo.coeffs, gen)),
                mpc(0),
            )
            if growth.real > 0 and not is_negligible(growth.real):
                return False
    return True


def convergence_heuristic(arr: Arrangement, poly: Polyhedron) -> Convergence:
    """Syntactic sufficient conditions for the expansion to converge."""
    if not compatibility_audit(arr, poly).all_compatible:
        return Convergence.UNKNOWN
    numerator = arr.numerator
    total_degree = arr.total_denominator_degree
    if not _bounded_on_cone(numerator, poly):
        return Convergence.UNKNOWN
    degree = numerator.max_poly_degree()
    if total_degree > arr.dim and degree == 0:
        return Convergence.BOUNDED_NUMERATOR
    # simplicial cones always admit a positive linear form (sum of the dual
    # coordinates), so the decay clause reduces to absolute convergence
    if degree < total_degree - arr.dim:
        return Convergence.DECAY
    return Convergence.UNKNOWN


def evaluate_integral(
    arr: Arrangement, poly: Polyhedron, options: EngineOptions | None = None
) -> ResidueResult:
    """(2 pi i)^r times the sum of residues over contributing flag classes.

    A stable flag class contributes when its terminal point lies in the
    closed polyhedron; a stable class with terminal point outside can only
    occur when the compatibility audit fails, and is excluded with a warning
    (on such charts the expansion picks up poles the polyhedron does not
    contain, and the formula carries no guarantee).
    """
    opts = options or EngineOptions()
    with working_precision(opts.precision):
        audit = compatibility_audit(arr, poly)
        verdict = convergence_heuristic(arr, poly)
        if verdict is Convergence.UNKNOWN and opts.assert_convergence:
            verdict = Convergence.USER_ASSERTED
        warnings: list[str] = []
        classes = flag_classes(arr, stable_flags(arr, poly))
        contributions: dict[Flag, mpc] = {}
        total = mpc(0)
        for cls in classes:
            rep = cls[0]
            inside, boundary = terminal_point_position(arr, rep, poly)
            if boundary:
                warnings.append(
                    f"terminal point of {rep.label()} lies on the polyhedron "
                    "boundary; contribution kept but degenerate"
                )
            if not inside:
                warnings.append(
                    f"stable flag {rep.label()} excluded: terminal point "
                    "outside the polyhedron"
                )
                continue
            value = iterated_residue(arr, rep, poly)
            contributions[rep] = value
            total += value
        scale = (2 * pi * mpc(0, 1)) ** arr.dim
        certificate = Certificate(
            all_compatible=audit.all_compatible,
            convergence=verdict,
            warnings=tuple(warnings),
        )
        return ResidueResult(
            value=scale * total,
            flag_contributions=contributions,
            certificate=certificate,
        )


def _collections_of_grouping(arr: Arrangement, grouping: DivisorGrouping):
    """Ordered independent hyperplane selections H_k in D_k."""
    out = []
    for choice in itertools.product(*(sorted(g) for g in grouping.groups)):
        if len(set(choice)) != len(choice):
            continue
        rows = [arr.hyperplanes[i].f_row() for i in choice]
        if rank(RationalMatrix.from_rows(rows)) != len(choice):
            continue
        out.append(Flag(tuple(choice)))
    return out


def points_of_grouping(arr: Arrangement, grouping: DivisorGrouping):
    """Terminal points of the grouping with the flags arriving at each.

    Returns a list of (point, flag list); points are merged when they agree
    within working precision.
    """
    clusters: list[tuple[list, list[Flag]]] = []
    for flag in _collections_of_grouping(arr, grouping):
        point = pole_location(arr, flag)
        scale = max([mpf(1)] + [abs(c) for c in point])
        for existing, members in clusters:
            if all(
                is_negligible(a - b, scale) for a, b in zip(existing, point)
            ):
                members.append(flag)
                break
        else:
            clusters.append((point, [flag]))
    return clusters


_CHART_SEARCH_ENTRIES = (0, 1, -1, 2, -2)


def _chart_candidates(dim: int):
    """Positively oriented small-integer bases, nearest to the identity first."""
    vectors = [
        v
        for v in itertools.product(_CHART_SEARCH_ENTRIES, repeat=dim)
        if any(x != 0 for x in v)
    ]
    vectors.sort(key=lambda v: sum(x * x for x in v))
    for cols in itertools.permutations(vectors, dim):
        mat = RationalMatrix.from_rows(
            [[Fraction(cols[j][i]) for j in range(dim)] for i in range(dim)]
        )
        if determinant(mat) > 0:
            yield Polyhedron.from_generators(cols)


def grothendieck_residue(
    arr: Arrangement,
    grouping: DivisorGrouping,
    point,
    poly: Polyhedron,
    max_charts: int = 4000,
) -> mpc:
    """Residue of the form at one terminal point of a divisor grouping.

    Sums truncated iterated residues of the flags arising from the grouping
    at the point, in the polyhedron's chart.  When some arising flag is
    insoluble there, a positively oriented auxiliary chart soluble for every
    arising flag is searched; the classical value computed there is then
    reported in the polyhedron's own orientation.
    """
    if len(grouping.groups) != arr.dim:
        raise ValueError("grouping must have one divisor per dimension")
    point = [to_mpc(c) for c in point]
    scale = max([mpf(1)] + [abs(c) for c in point])
    at_point = []
    for flag in _collections_of_grouping(arr, grouping):
        terminal = pole_location(arr, flag)
        if all(is_negligible(a - b, scale) for a, b in zip(terminal, point)):
            at_point.append(flag)
    if not at_point:
        raise ValueError("no flag of the grouping terminates at the point")
    classes = flag_classes(arr, at_point)
    reps = [cls[0] for cls in classes]

    def soluble_in(chart: Polyhedron) -> bool:
        return all(
            minor_profile(jacobian(arr, rep.indices, chart)).in_bruhat_cell
            for rep in reps
        )

    if soluble_in(poly):
        return sum((iterated_residue(arr, rep, poly) for rep in reps), mpc(0))

    orientation = 1 if poly.det() > 0 else -1
    for count, chart in enumerate(_chart_candidates(arr.dim)):
        if count >= max_charts:
            break
        if soluble_in(chart):
            classical = sum(
                (iterated_residue(arr, rep, chart) for rep in reps), mpc(0)
            )
            return orientation * classical
    raise BruhatViolation(
        f"grouping {grouping.label(arr)} has a flag insoluble in every "
        "searched chart"
    )


def canonical_grouping(arr: Arrangement, poly: Polyhedron) -> DivisorGrouping:
    """Union the k-th members of all stable collections into divisor D_k.

    The defining identity (sum of Grothendieck residues over the grouping's
    terminal points = sum of stable-flag residues) is checked numerically.
    """
    stable = stable_flags(arr, poly)
    if not stable:
        raise EmptyStableSet("no stable ordered collection for this polyhedron")
    groups = []
    for k in range(arr.dim):
        groups.append(frozenset(flag.indices[k] for flag in stable))
    grouping = DivisorGrouping(tuple(groups))

    flag_sum = sum(
        (iterated_residue(arr, cls[0], poly) for cls in flag_classes(arr, stable)),
        mpc(0),
    )
    point_sum = mpc(0)
    for point, _ in points_of_grouping(arr, grouping):
        point_sum += grothendieck_residue(arr, grouping, point, poly)
    mismatch = abs(point_sum - flag_sum)
    scale = max(mpf(1), abs(point_sum), abs(flag_sum))
    if not is_negligible(mismatch, scale):
        raise ArithmeticError(
            "grouping identity failed: grouped residues "
            f"{point_sum} != stable flag sum {flag_sum}"
        )
    return grouping


@dataclass(frozen=True)
class PermutationProbe:
    """Stable orderings found among row permutations of stable collections."""

    collections: tuple[Flag, ...]
    extra_stable_orderings: tuple[tuple[Flag, Flag], ...]

    @property
    def conjecture_holds(self) -> bool:
        return not self.extra_stable_orderings


def permutation_stability_probe(
    arr: Arrangement, poly: Polyhedron
) -> PermutationProbe:
    """Search all row permutations of each stable collection for a second
    stable ordering (a counterexample to the uniqueness heuristic)."""
    stable = stable_flags(arr, poly)
    extras = []
    for flag in stable:
        for perm in itertools.permutations(flag.indices):
            if perm == flag.indices:
                continue
            if minor_profile(jacobian(arr, perm, poly)).stable:
                extras.append((flag, Flag(perm)))
    return PermutationProbe(tuple(stable), tuple(extras))
