"""Shared problem builders used across the test suite.

Two reference problems recur everywhere:

* the three-plane product-power problem: numerator n1^(ix-s1) n2^(iy-s2) over
  (-x-is1)(-y-is2)(x+y-is3), whose exact value is
  (2 pi i)^2 i max(n1,n2)^(-(s1+s2+s3)) / (s1+s2+s3) for a suitable cone;
* the coincident-point problem: exp(2 pi i (x+2y)) over (x-i)(y-i)(x+y-2i),
  where all three hyperplanes pass through (i, i).
"""

from fractions import Fraction

from mpmath import log as mp_log
from mpmath import mpc, pi

from residuum.arrangement import Arrangement, Polyhedron, canonicalize_hyperplane
from residuum.symfun import AffineForm, ExpRationalFunction, to_mpc


def cone(*generators) -> Polyhedron:
    return Polyhedron.from_generators(generators)


CONE_UPPER = ((1, 0), (0, 1))
CONE_LEFT = ((-1, 1), (0, 1))
CONE_RIGHT = ((1, -1), (1, 0))
CONE_WIDE = ((1, 0), (-1, 1))


def power_numerator(bases, exponents_linear, exponents_const) -> ExpRationalFunction:
    """prod_k base_k^(<a_k, z> + c_k) as a single exponential term."""
    arity = len(exponents_linear[0])
    coeffs = [to_mpc(0)] * arity
    const = to_mpc(0)
    for base, lin, c in zip(bases, exponents_linear, exponents_const):
        ln_b = mp_log(to_mpc(base))
        for j, a in enumerate(lin):
            coeffs[j] = coeffs[j] + ln_b * to_mpc(a)
        const = const + ln_b * to_mpc(c)
    return ExpRationalFunction.from_parts(
        arity, expo=AffineForm.make(coeffs, const)
    )


def three_plane_problem(n1, n2, s=(1, 1, 1)) -> Arrangement:
    """n1^(ix-s1) n2^(iy-s2) / ((-x-is1)(-y-is2)(x+y-is3)) on R^2."""
    s1, s2, s3 = (to_mpc(v) for v in s)
    hps = [
        canonicalize_hyperplane([-1, 0], -mpc(0, 1) * s1),
        canonicalize_hyperplane([0, -1], -mpc(0, 1) * s2),
        canonicalize_hyperplane([1, 1], -mpc(0, 1) * s3),
    ]
    num = power_numerator(
        [n1, n2],
        [(mpc(0, 1), 0), (0, mpc(0, 1))],
        [-s1, -s2],
    )
    return Arrangement.build(2, hps, numerator=num)


def three_plane_value(n1, n2, s=(1, 1, 1)) -> mpc:
    """(2 pi i)^2 i max(n1,n2)^(-(s1+s2+s3)) / (s1+s2+s3)."""
    s_sum = sum(to_mpc(v) for v in s)
    two_pi_i = 2 * pi * mpc(0, 1)
    from mpmath import exp as mp_exp
    from mpmath import log as mp_log2

    return (
        two_pi_i ** 2
        * mpc(0, 1)
        * mp_exp(-s_sum * mp_log2(to_mpc(max(n1, n2))))
        / s_sum
    )


def coincident_point_problem() -> Arrangement:
    """exp(2 pi i (x+2y)) / ((x-i)(y-i)(x+y-2i)) on R^2."""
    hps = [
        canonicalize_hyperplane([1, 0], mpc(0, -1)),
        canonicalize_hyperplane([0, 1], mpc(0, -1)),
        canonicalize_hyperplane([1, 1], mpc(0, -2)),
    ]
    num = ExpRationalFunction.from_parts(
        2, expo=AffineForm.make([2 * pi * mpc(0, 1), 4 * pi * mpc(0, 1)], 0)
    )
    return Arrangement.build(2, hps, numerator=num)


def h_partials():
    """partial_x h(i,i) and partial_y h(i,i) for h = exp(2 pi i (x+2y))."""
    from mpmath import exp as mp_exp

    h_val = mp_exp(-6 * pi)
    return 2 * pi * mpc(0, 1) * h_val, 4 * pi * mpc(0, 1) * h_val


def single_pole_problem(s=1) -> Arrangement:
    """1 / (x^2 + s^2) on R, presented by its two polar factors.

    x^2 + s^2 = (x - is)(-x - is) * (-1)?  Check: (x-is)(x+is) = x^2+s^2, and
    x+is = -(-x-is), so the canonical factors are (x-is) and (-x-is) with an
    overall sign flip absorbed into the numerator.
    """
    sv = to_mpc(s)
    hps = [
        canonicalize_hyperplane([1], -mpc(0, 1) * sv),
        canonicalize_hyperplane([-1], -mpc(0, 1) * sv),
    ]
    num = ExpRationalFunction.from_parts(1, coeff=-1)
    return Arrangement.build(1, hps, numerator=num)
