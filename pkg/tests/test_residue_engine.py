"""Engine tests: iterated residues, integral evaluation, and regroupings.

Two independent oracles sit at the top.  tiny_torus integrates the form
over the torus cycle |g_j| = eps around a simple terminal point (classical,
chart-free value); direct_flag_value evaluates the simple-transverse-flag
residue formula in the chart without the residue machinery.
"""

import random
from fractions import Fraction

import pytest
from mpmath import exp, mp, mpc, mpf, pi

from conftest import (
    CONE_LEFT,
    CONE_RIGHT,
    CONE_UPPER,
    CONE_WIDE,
    coincident_point_problem,
    cone,
    h_partials,
    power_numerator,
    single_pole_problem,
    three_plane_problem,
    three_plane_value,
)
from residuum.arrangement import (
    Arrangement,
    Flag,
    InsolubleFlag,
    Polyhedron,
    canonicalize_hyperplane,
    enumerate_flags,
    flag_classes,
    jacobian,
    pole_location,
    z_star,
)
from residuum.exact_linalg import RationalMatrix, determinant, inverse, minor_profile
from residuum.residue_engine import (
    BruhatViolation,
    Certificate,
    Convergence,
    DivisorGrouping,
    EmptyStableSet,
    EngineOptions,
    canonical_grouping,
    convergence_heuristic,
    evaluate_integral,
    grothendieck_residue,
    iterated_residue,
    permutation_stability_probe,
    points_of_grouping,
    truncated_iterated_residue,
)
from residuum.symfun import ExpRationalFunction, to_mpc, working_precision

TWO_PI_I = lambda: 2 * pi * mpc(0, 1)


def tiny_torus(arr, indices, eps_scale=mpf("0.1"), nodes=64):
    """Classical residue at the collection's terminal point by quadrature.

    Valid only when the point is simple: no foreign hyperplane may pass
    near it (the cycle must stay clear).
    """
    flag = Flag(tuple(indices))
    m = pole_location(arr, flag)
    rows = [arr.hyperplanes[i].f_row() for i in indices]
    a = RationalMatrix.from_rows(rows)
    a_inv = inverse(a)
    det_a_inv = to_mpc(determinant(a_inv))
    foreign = [
        abs(arr.hyperplanes[k].defining_form().evaluate(m))
        for k in range(len(arr.hyperplanes))
        if k not in indices
    ]
    eps = eps_scale * (min(foreign) if foreign else mpf(1))
    func = arr.integrand()
    r = len(indices)
    total = mpc(0)
    grid = [2 * pi * k / nodes for k in range(nodes)]

    def walk(level, phases):
        nonlocal total
        if level == r:
            disc = [eps * exp(mpc(0, 1) * t) for t in phases]
            offset = [
                sum(to_mpc(a_inv[i, j]) * disc[j] for j in range(r))
                for i in range(r)
            ]
            point = [m[i] + offset[i] for i in range(r)]
            jac = det_a_inv
            for d in disc:
                jac *= mpc(0, 1) * d
            total += func.evaluate(point) * jac
            return
        for t in grid:
            walk(level + 1, phases + [t])

    walk(0, [])
    # each axis: step 2*pi/nodes and a (2*pi*i)^-1 Cauchy factor
    return total / (mpc(0, 1) * nodes) ** r


def direct_flag_value(arr, flag, poly):
    """Simple transverse flag residue by direct evaluation in the chart."""
    j = jacobian(arr, flag.indices, poly)
    m = poly.basis_matrix()
    rows = [[to_mpc(m[i, k]) for k in range(m.cols)] for i in range(m.rows)]
    from residuum.exact_linalg import solve_linear

    rhs = [mpc(0, 1) * arr.hyperplanes[i].s for i in flag.indices]
    w = solve_linear(j, rhs)
    numer = arr.numerator.compose_linear(rows).evaluate(w) * abs(
        to_mpc(poly.det())
    )
    denom = to_mpc(determinant(j))
    chart_rows = [
        [to_mpc(c) for c in jacobian(arr, (k,), poly).row(0)]
        for k in range(len(arr.hyperplanes))
    ]
    for k in range(len(arr.hyperplanes)):
        if k in flag.indices:
            continue
        value = sum(chart_rows[k][t] * w[t] for t in range(len(w)))
        value = value - mpc(0, 1) * arr.hyperplanes[k].s
        denom *= value ** arr.multiplicities[k]
    return numer / denom


def test_one_dimensional_arctangent():
    with working_precision(128):
        result = evaluate_integral(single_pole_problem(), cone((1,)))
        assert abs(result.value - pi) < mpf("1e-30")
        assert result.certificate.all_compatible
        assert result.certificate.convergence is Convergence.BOUNDED_NUMERATOR
        assert result.certificate.certified

        result3 = evaluate_integral(single_pole_problem(s=3), cone((1,)))
        assert abs(result3.value - pi / 3) < mpf("1e-30")


def test_three_plane_flag_residues():
    with working_precision(128):
        arr = three_plane_problem(2, 3)
        total = mpf(3)
        left = iterated_residue(arr, Flag((0, 2)), cone(*CONE_LEFT))
        expected = mpc(0, 1) * mpf(3) ** (-total) / total
        assert abs(left - expected) < mpf("1e-30")

        right = iterated_residue(arr, Flag((1, 2)), cone(*CONE_RIGHT))
        expected = mpc(0, 1) * mpf(2) ** (-total) / total
        assert abs(right - expected) < mpf("1e-30")


def test_three_plane_flag_residues_complex_parameters():
    with working_precision(128):
        s = (mpc(1, "0.25"), mpc("0.5", "-0.125"), mpc(2))
        arr = three_plane_problem(2, 3, s)
        total = sum(s, mpc(0))
        left = iterated_residue(arr, Flag((0, 2)), cone(*CONE_LEFT))
        expected = mpc(0, 1) * exp(-total * mp.log(3)) / total
        assert abs(left - expected) / abs(expected) < mpf("1e-30")


def test_three_plane_evaluation():
    with working_precision(128):
        for n1, n2, conegen in (
            (2, 3, CONE_LEFT),
            (3, 2, CONE_RIGHT),
            (5, 5, CONE_LEFT),
        ):
            arr = three_plane_problem(n1, n2)
            result = evaluate_integral(arr, cone(*conegen))
            expected = three_plane_value(n1, n2)
            assert abs(result.value - expected) / abs(expected) < mpf("1e-30")
            assert result.certificate.all_compatible
            assert result.certificate.certified
            assert len(result.flag_contributions) == 1


def test_three_plane_incompatible_chart_gives_zero():
    with working_precision(128):
        arr = three_plane_problem(2, 3)
        result = evaluate_integral(arr, cone(*CONE_UPPER))
        assert result.value == mpc(0)
        assert not result.certificate.all_compatible
        assert not result.certificate.certified
        assert result.flag_contributions == {}
        assert any("(H3,H1)" in w for w in result.certificate.warnings)
        assert any("outside the polyhedron" in w for w in result.certificate.warnings)


def test_coincident_point_contributions():
    with working_precision(128):
        arr = coincident_point_problem()
        poly = cone(*CONE_WIDE)
        dx, dy = h_partials()
        first = iterated_residue(arr, Flag((0, 1)), poly)
        second = iterated_residue(arr, Flag((2, 1)), poly)
        assert abs(first - dy) / abs(dy) < mpf("1e-28")
        assert abs(second - (dx - dy)) / abs(dx) < mpf("1e-28")

        result = evaluate_integral(arr, poly)
        expected = TWO_PI_I() ** 2 * dx
        assert abs(result.value - expected) / abs(expected) < mpf("1e-28")
        assert result.certificate.certified
        got = sorted(result.flag_contributions.items(), key=lambda kv: kv[0].indices)
        assert [f.indices for f, _ in got] == [(0, 1), (2, 1)]


def test_flag_class_members_share_residue():
    with working_precision(128):
        arr = coincident_point_problem()
        poly = cone(*CONE_WIDE)
        a = truncated_iterated_residue(arr, Flag((0, 1)), poly)
        b = truncated_iterated_residue(arr, Flag((0, 2)), poly)
        assert abs(a - b) < mpf("1e-28")


def test_iterated_residue_raises_on_insoluble():
    with working_precision(128):
        arr = coincident_point_problem()
        with pytest.raises(InsolubleFlag):
            iterated_residue(arr, Flag((1, 2)), cone(*CONE_UPPER))
        assert truncated_iterated_residue(arr, Flag((1, 2)), cone(*CONE_UPPER)) == mpc(0)


def _random_square_arrangement(rng, dim):
    """dim hyperplanes with random integer forms and rational s, plus chart."""
    hps = []
    for _ in range(dim):
        while True:
            f = [rng.randint(-3, 3) for _ in range(dim)]
            if any(f):
                break
        s_val = Fraction(rng.randint(1, 8), rng.randint(1, 4))
        hps.append(canonicalize_hyperplane(f, -mpc(0, 1) * to_mpc(s_val)))
    arr = Arrangement.build(dim, hps)
    return arr


def test_truncation_matches_bruhat_cell():
    with working_precision(128):
        rng = random.Random(20260816)
        checked_zero = checked_nonzero = 0
        for dim in (2, 3):
            poly = cone(*[tuple(1 if i == j else 0 for j in range(dim)) for i in range(dim)])
            trials = 0
            while trials < 60:
                arr = _random_square_arrangement(rng, dim)
                if len(arr.hyperplanes) != dim:
                    continue
                trials += 1
                flag = Flag(tuple(range(dim)))
                profile = minor_profile(jacobian(arr, flag.indices, poly))
                value = truncated_iterated_residue(arr, flag, poly)
                if profile.in_bruhat_cell:
                    checked_nonzero += 1
                    assert abs(value) > mpf("1e-12")
                else:
                    checked_zero += 1
                    assert value == mpc(0)
        assert checked_zero > 5 and checked_nonzero > 40


def test_iterated_residue_matches_torus_oracle():
    with working_precision(128):
        arr = three_plane_problem(2, 3)

        # chart determinant -1: chart value is minus the classical one
        engine = iterated_residue(arr, Flag((0, 2)), cone(*CONE_LEFT))
        classical = tiny_torus(arr, (0, 2))
        assert abs(engine + classical) / abs(engine) < mpf("1e-12")

        # chart determinant +1: the two agree
        engine = iterated_residue(arr, Flag((1, 2)), cone(*CONE_RIGHT))
        classical = tiny_torus(arr, (1, 2))
        assert abs(engine - classical) / abs(engine) < mpf("1e-12")


def test_iterated_residue_matches_direct_evaluation():
    with working_precision(128):
        arr = three_plane_problem(2, 3)
        for conegen, indices in ((CONE_LEFT, (0, 2)), (CONE_RIGHT, (1, 2))):
            poly = cone(*conegen)
            flag = Flag(indices)
            direct = direct_flag_value(arr, flag, poly)
            engine = iterated_residue(arr, flag, poly)
            assert abs(direct - engine) / abs(engine) < mpf("1e-30")

        rng = random.Random(7)
        done = 0
        while done < 12:
            arr = _random_square_arrangement(rng, 2)
            extra = canonicalize_hyperplane(
                [1, 1], -mpc(0, 1) * to_mpc(Fraction(rng.randint(1, 5)))
            )
            try:
                arr = Arrangement.build(2, list(arr.hyperplanes) + [extra])
            except ValueError:
                continue
            if len(arr.hyperplanes) != 3:
                continue
            poly = cone(*CONE_UPPER)
            for flag in enumerate_flags(arr, 2):
                profile = minor_profile(jacobian(arr, flag.indices, poly))
                if not profile.in_bruhat_cell:
                    continue
                point = pole_location(arr, flag)
                clear = all(
                    abs(arr.hyperplanes[k].defining_form().evaluate(point)) > mpf("0.05")
                    for k in range(3)
                    if k not in flag.indices
                )
                if not clear:
                    continue
                direct = direct_flag_value(arr, flag, poly)
                engine = iterated_residue(arr, flag, poly)
                scale = max(mpf(1), abs(engine))
                assert abs(direct - engine) / scale < mpf("1e-25")
                done += 1


def test_sampled_expansion_matches_stable_sum():
    """Unstable flags arising at one parameter value cancel in the sum."""
    with working_precision(128):
        rng = random.Random(11)
        arr0 = three_plane_problem(2, 3)
        poly = cone(*CONE_LEFT)
        base = evaluate_integral(arr0, poly)
        stable_sum_base = sum(base.flag_contributions.values(), mpc(0))
        for _ in range(6):
            s = tuple(
                mpc(rng.uniform(0.2, 3), rng.uniform(-1, 1)) for _ in range(3)
            )
            arr = three_plane_problem(2, 3, s)
            picked = []
            degenerate = False
            for flag in enumerate_flags(arr, 2):
                try:
                    res = z_star(arr, flag, poly)
                except InsolubleFlag:
                    continue
                if res.boundary:
                    degenerate = True
                    break
                if res.arises:
                    picked.append(flag)
            if degenerate:
                continue
            sampled = sum(
                (
                    truncated_iterated_residue(arr, cls[0], poly)
                    for cls in flag_classes(arr, picked)
                ),
                mpc(0),
            )
            stable_sum = sum(
                evaluate_integral(arr, poly).flag_contributions.values(), mpc(0)
            )
            assert abs(sampled - stable_sum) < mpf("1e-25") * max(
                mpf(1), abs(stable_sum)
            )


def test_grothendieck_groupings_at_coincident_point():
    with working_precision(128):
        arr = coincident_point_problem()
        poly = cone(*CONE_WIDE)
        dx, dy = h_partials()
        m = (mpc(0, 1), mpc(0, 1))

        value = grothendieck_residue(arr, DivisorGrouping.of({2, 0}, {1}), m, poly)
        assert abs(value - dx) / abs(dx) < mpf("1e-25")

        value = grothendieck_residue(arr, DivisorGrouping.of({2, 1}, {0}), m, poly)
        assert abs(value + dy) / abs(dy) < mpf("1e-25")

        # the remaining grouping engages two flags soluble only in an
        # auxiliary chart; its value is the antisymmetric combination
        value = grothendieck_residue(arr, DivisorGrouping.of({0, 1}, {2}), m, poly)
        expected = dy - dx
        assert abs(value - expected) / abs(expected) < mpf("1e-25")

        # groupings sum residues of the same form over cycles around one
        # point yet disagree; here dy - dx happens to equal dx since the
        # exponent is 2*pi*i*(x + 2y), so only the -dy grouping separates
        assert abs(dx - (-dy)) > mpf("1e-10")


def test_grouping_asymmetric_numerator():
    """Terminal-point residues distinguish the three groupings sharply."""
    with working_precision(128):
        from residuum.symfun import AffineForm

        numerator = ExpRationalFunction.from_parts(
            2,
            expo=AffineForm.make(
                [2 * pi * mpc(0, 3), 2 * pi * mpc(0, 5)], 0
            ),
        )
        hps = [
            canonicalize_hyperplane([1, 0], -mpc(0, 1)),
            canonicalize_hyperplane([0, 1], -mpc(0, 1)),
            canonicalize_hyperplane([1, 1], -mpc(0, 2)),
        ]
        arr = Arrangement.build(2, hps, numerator=numerator)
        poly = cone(*CONE_WIDE)
        m = (mpc(0, 1), mpc(0, 1))
        h_at = exp(mpc(0, 1) * 2 * pi * (3 * mpc(0, 1) + 5 * mpc(0, 1)))
        dx = mpc(0, 1) * 2 * pi * 3 * h_at
        dy = mpc(0, 1) * 2 * pi * 5 * h_at

        pairs = (
            (DivisorGrouping.of({2, 0}, {1}), dx),
            (DivisorGrouping.of({2, 1}, {0}), -dy),
            (DivisorGrouping.of({0, 1}, {2}), dy - dx),
        )
        for grouping, expected in pairs:
            value = grothendieck_residue(arr, grouping, m, poly)
            assert abs(value - expected) / abs(expected) < mpf("1e-25")


def test_canonical_grouping_values():
    with working_precision(128):
        arr = coincident_point_problem()
        grouping = canonical_grouping(arr, cone(*CONE_WIDE))
        assert grouping.groups == (frozenset({0, 2}), frozenset({1}))
        assert grouping.label(arr) == "(H1H3,H2)"

        arr1 = three_plane_problem(2, 3)
        grouping = canonical_grouping(arr1, cone(*CONE_LEFT))
        assert grouping.groups == (frozenset({0}), frozenset({2}))

        points = points_of_grouping(arr1, grouping)
        assert len(points) == 1
        assert [f.indices for f in points[0][1]] == [(0, 2)]


def test_canonical_grouping_empty():
    with working_precision(128):
        arr = Arrangement.build(
            1, [canonicalize_hyperplane([-1], mpc(0, -1))]
        )
        with pytest.raises(EmptyStableSet):
            canonical_grouping(arr, cone((1,)))


def test_convergence_verdicts():
    with working_precision(128):
        arr23 = three_plane_problem(2, 3)
        assert (
            convergence_heuristic(arr23, cone(*CONE_LEFT))
            is Convergence.BOUNDED_NUMERATOR
        )
        # growing numerator on the cone: no certificate
        arr32 = three_plane_problem(3, 2)
        assert convergence_heuristic(arr32, cone(*CONE_LEFT)) is Convergence.UNKNOWN
        # incompatible chart: no certificate either
        assert convergence_heuristic(arr23, cone(*CONE_UPPER)) is Convergence.UNKNOWN

        arr2 = coincident_point_problem()
        assert (
            convergence_heuristic(arr2, cone(*CONE_WIDE))
            is Convergence.BOUNDED_NUMERATOR
        )

        # total denominator degree equal to the dimension: nothing applies
        arr_eq = Arrangement.build(
            1, [canonicalize_hyperplane([-1], mpc(0, -1))]
        )
        assert convergence_heuristic(arr_eq, cone((1,))) is Convergence.UNKNOWN

        # polynomial numerator dominated by the denominator degree
        from residuum.symfun import Polynomial

        linear = ExpRationalFunction.from_parts(
            1, poly=Polynomial(1, {(1,): mpc(1)})
        )
        hps = [
            canonicalize_hyperplane([1], mpc(0, -1)),
            canonicalize_hyperplane([-1], mpc(0, -1)),
            canonicalize_hyperplane([1], mpc(0, -2)),
            canonicalize_hyperplane([-1], mpc(0, -3)),
        ]
        arr_poly = Arrangement.build(1, hps, numerator=linear)
        assert convergence_heuristic(arr_poly, cone((1,))) is Convergence.DECAY

        # user assertion surfaces in the certificate when rules fail
        arr_eq_result = evaluate_integral(
            arr_eq, cone((1,)), EngineOptions(assert_convergence=True)
        )
        assert arr_eq_result.certificate.convergence is Convergence.USER_ASSERTED


def test_scaling_generators_keeps_value():
    with working_precision(128):
        arr = three_plane_problem(2, 3)
        base = evaluate_integral(arr, cone(*CONE_LEFT)).value
        scaled_poly = cone(*CONE_LEFT).scale_generators(
            [Fraction(7, 2), Fraction(1, 3)]
        )
        scaled = evaluate_integral(arr, scaled_poly).value
        assert abs(base - scaled) / abs(base) < mpf("1e-30")


def test_permutation_probe():
    with working_precision(128):
        arr = three_plane_problem(2, 3)
        probe = permutation_stability_probe(arr, cone(*CONE_LEFT))
        assert [f.indices for f in probe.collections] == [(0, 2)]
        assert probe.conjecture_holds

        probe = permutation_stability_probe(single_pole_problem(), cone((1,)))
        assert probe.conjecture_holds
