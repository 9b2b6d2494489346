"""Exact rational linear algebra: matrices over Q, determinantal minors, and
the sign tests built from them.

Everything here is exact.  Matrix entries are `fractions.Fraction`; determinants
are computed by fraction-free Bareiss elimination after clearing denominators,
so no floating point ever enters a sign decision.

Three families of minors of a k-by-r matrix J = (a_ij) drive the rest of the
package:

* ``p_k``: the k-th leading principal minor (``p_0 = 1`` by convention),
* ``q_{k,l}``: rows 1..k against columns 1..k-1 plus column l, for l > k,
* ``r_{j,k}``: rows 1..k with row j removed, against columns 1..k-1, j < k.

For a 2x2 matrix [[a, b], [c, d]] these are p1 = a, p2 = ad - bc, q12 = b,
r12 = c.  ``minor_profile`` packages all of them together with the derived
verdicts (stable / compatible / in the open Bruhat cell).
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction
from typing import Iterable, Sequence


def _frac(x) -> Fraction:
    if isinstance(x, Fraction):
        return x
    if isinstance(x, int):
        return Fraction(x)
    if isinstance(x, float):
        return Fraction(x)
    raise TypeError(f"not an exact rational: {x!r}")


@dataclass(frozen=True)
class RationalMatrix:
    """Immutable matrix over Q, stored as a tuple of row tuples."""

    entries: tuple[tuple[Fraction, ...], ...]

    @classmethod
    def from_rows(cls, rows: Iterable[Iterable]) -> "RationalMatrix":
        data = tuple(tuple(_frac(x) for x in row) for row in rows)
        if data and any(len(row) != len(data[0]) for row in data):
            raise ValueError("ragged rows")
        return cls(data)

    @property
    def rows(self) -> int:
        return len(self.entries)

    @property
    def cols(self) -> int:
        return len(self.entries[0]) if self.entries else 0

    def __getitem__(self, pos: tuple[int, int]) -> Fraction:
        i, j = pos
        return self.entries[i][j]

    def row(self, i: int) -> tuple[Fraction, ...]:
        return self.entries[i]

    def submatrix(self, row_idx: Sequence[int], col_idx: Sequence[int]) -> "RationalMatrix":
        return RationalMatrix(
            tuple(tuple(self.entries[i][j] for j in col_idx) for i in row_idx)
        )

    def transpose(self) -> "RationalMatrix":
        return RationalMatrix(tuple(zip(*self.entries)) if self.entries else ())

    def scale_rows(self, factors: Sequence[Fraction]) -> "RationalMatrix":
        if len(factors) != self.rows:
            raise ValueError("one factor per row required")
        return RationalMatrix(
            tuple(
                tuple(_frac(c) * x for x in row)
                for c, row in zip(factors, self.entries)
            )
        )

    def matmul(self, other: "RationalMatrix") -> "RationalMatrix":
        if self.cols != other.rows:
            raise ValueError("shape mismatch")
        ot = other.transpose()
        return RationalMatrix(
            tuple(
                tuple(sum(a * b for a, b in zip(row, col)) for col in ot.entries)
                for row in self.entries
            )
        )


def _bareiss_int_det(rows: list[list[int]]) -> int:
    """Determinant of an integer matrix by fraction-free Bareiss elimination."""
    n = len(rows)
    if n == 0:
        return 1
    m = [row[:] for row in rows]
    sign = 1
    prev = 1
    for k in range(n - 1):
        if m[k][k] == 0:
            for i in range(k + 1, n):
                if m[i][k] != 0:
                    m[k], m[i] = m[i], m[k]
                    sign = -sign
                    break
            else:
                return 0
        for i in range(k + 1, n):
            for j in range(k + 1, n):
                m[i][j] = (m[i][j] * m[k][k] - m[i][k] * m[k][j]) // prev
            m[i][k] = 0
        prev = m[k][k]
    return sign * m[n - 1][n - 1]


def determinant(mat: RationalMatrix) -> Fraction:
    """Exact determinant; denominators are cleared row by row first."""
    if mat.rows != mat.cols:
        raise ValueError("determinant of a non-square matrix")
    scale = Fraction(1)
    int_rows: list[list[int]] = []
    for row in mat.entries:
        d = math.lcm(*(x.denominator for x in row)) if row else 1
        scale *= d
        int_rows.append([int(x * d) for x in row])
    return Fraction(_bareiss_int_det(int_rows)) / scale


def leading_principal_minor(mat: RationalMatrix, k: int) -> Fraction:
    """p_k: determinant of the top-left k-by-k block.  p_0 = 1."""
    if k < 0 or k > min(mat.rows, mat.cols):
        raise ValueError(f"leading principal minor order {k} out of range")
    if k == 0:
        return Fraction(1)
    idx = range(k)
    return determinant(mat.submatrix(idx, idx))


def q_minor(mat: RationalMatrix, k: int, l: int) -> Fraction:
    """q_{k,l}: rows 1..k against columns 1..k-1 and column l (1-based, l > k)."""
    if not (1 <= k < l <= mat.cols) or k > mat.rows:
        raise ValueError(f"q minor ({k},{l}) out of range")
    cols = list(range(k - 1)) + [l - 1]
    return determinant(mat.submatrix(range(k), cols))


def r_minor(mat: RationalMatrix, j: int, k: int) -> Fraction:
    """r_{j,k}: rows 1..k with row j removed, columns 1..k-1 (1-based, j < k)."""
    if not (1 <= j < k <= mat.rows) or k - 1 > mat.cols:
        raise ValueError(f"r minor ({j},{k}) out of range")
    rows = [i for i in range(k) if i != j - 1]
    return determinant(mat.submatrix(rows, range(k - 1)))


@dataclass(frozen=True)
class MinorProfile:
    """All minors of the three families, plus the derived sign verdicts.

    ``stable``  means every p_k > 0 and (-1)^(l-j) r_{j,l} >= 0 for all j < l.
    ``compatible`` means: not stable, or every stored q_{j,l} <= 0.
    ``in_bruhat_cell`` means every p_k != 0; equivalently the matrix admits an
    LU factorization with nonsingular U and no row pivoting.
    """

    p: tuple[Fraction, ...]
    q: tuple[tuple[tuple[int, int], Fraction], ...]
    r_minors: tuple[tuple[tuple[int, int], Fraction], ...]
    stable: bool
    compatible: bool
    in_bruhat_cell: bool

    def q_map(self) -> dict[tuple[int, int], Fraction]:
        return dict(self.q)

    def r_map(self) -> dict[tuple[int, int], Fraction]:
        return dict(self.r_minors)


def minor_profile(mat: RationalMatrix) -> MinorProfile:
    """Compute every minor of the three families for a k-by-r matrix, k <= r.

    q minors range over 1 <= j <= k, j < l <= r (columns may exceed the row
    count); r minors range over 1 <= j < l <= k.  The verdicts use exactly
    these index sets.
    """
    k, r = mat.rows, mat.cols
    if k > r:
        raise ValueError("more rows than columns; transpose the data")
    p = tuple(leading_principal_minor(mat, i) for i in range(1, k + 1))
    q_items = []
    for j in range(1, k + 1):
        for l in range(j + 1, r + 1):
            q_items.append(((j, l), q_minor(mat, j, l)))
    r_items = []
    for j in range(1, k + 1):
        for l in range(j + 1, k + 1):
            r_items.append(((j, l), r_minor(mat, j, l)))
    stable = all(x > 0 for x in p) and all(
        (Fraction(-1) ** (l - j)) * val >= 0 for (j, l), val in r_items
    )
    compatible = (not stable) or all(val <= 0 for _, val in q_items)
    bruhat = all(x != 0 for x in p)
    return MinorProfile(
        p=p,
        q=tuple(q_items),
        r_minors=tuple(r_items),
        stable=stable,
        compatible=compatible,
        in_bruhat_cell=bruhat,
    )


def rank(mat: RationalMatrix) -> int:
    """Rank by exact Gaussian elimination."""
    m = [list(row) for row in mat.entries]
    nrows, ncols = mat.rows, mat.cols
    rk = 0
    row = 0
    for col in range(ncols):
        pivot = None
        for i in range(row, nrows):
            if m[i][col] != 0:
                pivot = i
                break
        if pivot is None:
            continue
        m[row], m[pivot] = m[pivot], m[row]
        inv = 1 / m[row][col]
        m[row] = [x * inv for x in m[row]]
        for i in range(nrows):
            if i != row and m[i][col] != 0:
                c = m[i][col]
                m[i] = [a - c * b for a, b in zip(m[i], m[row])]
        row += 1
        rk += 1
        if row == nrows:
            break
    return rk


def inverse(mat: RationalMatrix) -> RationalMatrix:
    """Exact inverse by Gauss-Jordan elimination."""
    n = mat.rows
    if n != mat.cols:
        raise ValueError("inverse of a non-square matrix")
    m = [list(row) + [Fraction(int(i == j)) for j in range(n)] for i, row in enumerate(mat.entries)]
    for col in range(n):
        pivot = None
        for i in range(col, n):
            if m[i][col] != 0:
                pivot = i
                break
        if pivot is None:
            raise ValueError("singular matrix")
        m[col], m[pivot] = m[pivot], m[col]
        inv = 1 / m[col][col]
        m[col] = [x * inv for x in m[col]]
        for i in range(n):
            if i != col and m[i][col] != 0:
                c = m[i][col]
                m[i] = [a - c * b for a, b in zip(m[i], m[col])]
    return RationalMatrix(tuple(tuple(row[n:]) for row in m))


def solve_linear(mat: RationalMatrix, rhs: Sequence) -> list:
    """Solve mat @ x = rhs where mat is exact rational and invertible.

    The right-hand side may hold arbitrary scalars (complex, mpmath); pivoting
    decisions only ever look at the exact matrix entries.
    """
    n = mat.rows
    if n != mat.cols or len(rhs) != n:
        raise ValueError("square system required")
    m = [list(row) for row in mat.entries]
    b = list(rhs)
    for col in range(n):
        pivot = None
        for i in range(col, n):
            if m[i][col] != 0:
                pivot = i
                break
        if pivot is None:
            raise ValueError("singular matrix")
        m[col], m[pivot] = m[pivot], m[col]
        b[col], b[pivot] = b[pivot], b[col]
        for i in range(col + 1, n):
            if m[i][col] != 0:
                c = m[i][col] / m[col][col]
                m[i] = [a - c * p for a, p in zip(m[i], m[col])]
                b[i] = b[i] - b[col] * c
    x = [None] * n
    for i in reversed(range(n)):
        acc = b[i]
        for j in range(i + 1, n):
            acc = acc - x[j] * m[i][j]
        x[i] = acc / m[i][i]
    return x


@dataclass(frozen=True)
class GaussianRational:
    """Exact complex number with rational real and imaginary parts."""

    re: Fraction = Fraction(0)
    im: Fraction = Fraction(0)

    @classmethod
    def of(cls, x) -> "GaussianRational":
        if isinstance(x, GaussianRational):
            return x
        if isinstance(x, (int, Fraction)):
            return cls(_frac(x), Fraction(0))
        if isinstance(x, float):
            return cls(Fraction(x), Fraction(0))
        if isinstance(x, complex):
            return cls(Fraction(x.real), Fraction(x.imag))
        raise TypeError(f"not exactly representable: {x!r}")

    def __add__(self, other):
        o = GaussianRational.of(other)
        return GaussianRational(self.re + o.re, self.im + o.im)

    __radd__ = __add__

    def __sub__(self, other):
        o = GaussianRational.of(other)
        return GaussianRational(self.re - o.re, self.im - o.im)

    def __rsub__(self, other):
        return GaussianRational.of(other) - self

    def __mul__(self, other):
        o = GaussianRational.of(other)
        return GaussianRational(
            self.re * o.re - self.im * o.im, self.re * o.im + self.im * o.re
        )

    __rmul__ = __mul__

    def __truediv__(self, other):
        o = GaussianRational.of(other)
        n = o.re * o.re + o.im * o.im
        if n == 0:
            raise ZeroDivisionError("division by zero")
        return self * GaussianRational(o.re / n, -o.im / n)

    def __rtruediv__(self, other):
        return GaussianRational.of(other) / self

    def __neg__(self):
        return GaussianRational(-self.re, -self.im)

    def conjugate(self) -> "GaussianRational":
        return GaussianRational(self.re, -self.im)

    @property
    def is_zero(self) -> bool:
        return self.re == 0 and self.im == 0

    @property
    def is_real(self) -> bool:
        return self.im == 0

    def times_i(self) -> "GaussianRational":
        return GaussianRational(-self.im, self.re)

    def __complex__(self) -> complex:
        return complex(self.re) + 1j * complex(self.im)
