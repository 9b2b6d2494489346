"""Numerical verification layer: full-space quadrature, semicircle arc
diagnostics, and torus-cycle residues.

Everything here runs in float64 numpy, independent of the exact residue
machinery; the only shared ingredient is the symbolic function container,
which is compiled once into a vectorized closure.  quad_integral picks one
of three regimes:

* no oscillation: tangent-mapped tensor Gauss-Legendre over the whole
  space (no truncation error at all), node-doubling until stable;
* oscillatory exponentials: smoothly windowed boxes at half-widths T, 2T,
  4T.  The C^2 window suppresses oscillatory truncation error
  superalgebraically, so the remaining tail is a clean power series in
  1/X that Richardson extrapolation across the windows removes;
* three variables: importance-sampled Monte Carlo with Cauchy proposals
  and a fixed seed, statistical error reported.

tail_estimate deliberately ignores oscillatory cancellation: it bounds
the raw mass beyond the last window from the decay degree, so it is
conservative but always an upper bound.  Quadrature panels are evaluated
as vectorized blocks in a fixed order; repeated calls are bitwise
reproducible.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from mpmath import mpc
from scipy.special import erfc

from .arrangement import Arrangement, Flag, pole_location
from .exact_linalg import RationalMatrix, determinant, inverse
from .symfun import ExpRationalFunction

DEFAULT_BOX = 50.0
DEFAULT_TOL = 1e-6
DEFAULT_NODE_BUDGET = 4096
DEFAULT_TORUS_NODES = 256
_MC_SEED = 20260816
_PER_PANEL = 12
# phase advance per panel a 12-point Gauss rule still resolves to ~1e-14
_PHASE_PER_PANEL = 8.0
_PHASE_HARD_CAP = 12.0


class NonDecaying(Exception):
    """Integrand does not decay fast enough for absolute convergence."""


class BudgetExceeded(Exception):
    """Node budget exhausted before the refinement stabilized."""


class PoleOnArc(Exception):
    """A denominator factor vanishes on the sampled arc."""


class ForeignPoleInsideTorus(Exception):
    """A hyperplane outside the chosen collection meets the torus."""


@dataclass(frozen=True)
class QuadratureReport:
    estimate: mpc
    error_bound: float
    box_halfwidth: float
    nodes_per_axis: int
    tail_estimate: float


@dataclass(frozen=True)
class SemicircleDiagnostic:
    """Arc-integral magnitudes per radius plus the pointwise peak.

    magnitudes follow the integral (oscillation may cancel pointwise
    growth down to a constant); peak_magnitudes expose the raw growth
    of the integrand along the arc.
    """

    radii: tuple
    magnitudes: tuple
    peak_magnitudes: tuple
    trending_to_zero: bool
    sampled_radii: tuple


def compile_numeric(func: ExpRationalFunction):
    """Compile a symbolic function into a closure on (arity, N) arrays."""
    spec = []
    for t in func.terms:
        poly = [(tuple(e), complex(v)) for e, v in t.poly.items()]
        if not poly:
            continue
        expo_c = np.array([complex(a) for a in t.expo.coeffs], dtype=complex)
        expo_0 = complex(t.expo.const)
        has_expo = bool(expo_c.any()) or expo_0 != 0
        denom = [
            (np.array([complex(a) for a in f.coeffs], dtype=complex),
             complex(f.const), m)
            for f, m in t.denom
        ]
        spec.append((complex(t.coeff), poly, expo_c, expo_0, has_expo, denom))

    def evaluate(points):
        n = points.shape[1]
        out = np.zeros(n, dtype=np.complex128)
        for coeff, poly, expo_c, expo_0, has_expo, denom in spec:
            acc = np.zeros(n, dtype=np.complex128)
            for e, v in poly:
                mono = np.full(n, v, dtype=np.complex128)
                for j, p in enumerate(e):
                    if p:
                        mono = mono * points[j] ** p
                acc += mono
            val = coeff * acc
            if has_expo:
                val = val * np.exp(expo_c @ points + expo_0)
            for row, const, mult in denom:
                lin = row @ points + const
                val = val / lin**mult
            out += val
        return out

    return evaluate


def _decay_profile(arr: Arrangement):
    """Per-axis oscillation frequencies and the worst decay degree."""
    base = arr.total_denominator_degree
    r = arr.dim
    freqs = [0.0] * r
    worst = None
    for t in arr.numerator.terms:
        decay = base + sum(m for _, m in t.denom) - t.poly.degree()
        worst = decay if worst is None else min(worst, decay)
        for j, a in enumerate(t.expo.coeffs):
            a = complex(a)
            if abs(a.real) > 1e-12 * (1.0 + abs(a)):
                raise NonDecaying(
                    f"numerator grows exponentially along axis {j + 1}"
                )
            freqs[j] = max(freqs[j], abs(a.imag))
    if worst is None:
        worst = base
    if worst < r + 1:
        raise NonDecaying(
            f"decay degree {worst} is below the integrable threshold {r + 1}"
        )
    return freqs, worst


_leg_cache: dict = {}


def _leggauss(n: int):
    if n not in _leg_cache:
        _leg_cache[n] = np.polynomial.legendre.leggauss(n)
    return _leg_cache[n]


def _tan_axis(scale: float, n: int):
    x, w = _leggauss(n)
    u = (np.pi / 2.0) * x
    nodes = scale * np.tan(u)
    weights = scale * (np.pi / 2.0) * w / np.cos(u) ** 2
    return nodes, weights


# Gaussian-tailed window: roll-off centered at 1.5X with sigma = X/4, so
# an oscillation of frequency w is truncated with weight exp(-(w X/4)^2/2)
# while the smooth tail error stays a power series in 1/X.
_WINDOW_EDGE = 2.75
_WINDOW_CENTER = 1.5
_WINDOW_SIGMA = 0.25


def _window_weight(x, x_flat):
    sigma = _WINDOW_SIGMA * x_flat
    return 0.5 * erfc((np.abs(x) - _WINDOW_CENTER * x_flat) / (sigma * np.sqrt(2.0)))


def _window_axis(x_flat: float, width: float):
    """Composite Gauss panels on [-2.75X, 2.75X] with a Gaussian cutoff."""
    edge = _WINDOW_EDGE * x_flat
    panels = max(8, int(math.ceil(2.0 * edge / width)))
    xg, wg = _leggauss(_PER_PANEL)
    bounds = np.linspace(-edge, edge, panels + 1)
    half = (bounds[1:] - bounds[:-1]) / 2.0
    centers = (bounds[1:] + bounds[:-1]) / 2.0
    nodes = (centers[:, None] + half[:, None] * xg[None, :]).ravel()
    weights = (half[:, None] * wg[None, :]).ravel()
    weights = weights * _window_weight(nodes, x_flat)
    return nodes, weights


def _tensor_sum(fn, axes, chunk_points=2_000_000):
    """Sum fn over the tensor grid, chunked along axis 0, fixed order."""
    r = len(axes)
    if r == 1:
        nodes, weights = axes[0]
        return complex(np.sum(fn(nodes[None, :]) * weights))
    rest = axes[1:]
    mesh = np.meshgrid(*[a[0] for a in rest], indexing="ij")
    rest_nodes = [m.ravel() for m in mesh]
    wmesh = np.meshgrid(*[a[1] for a in rest], indexing="ij")
    rest_weights = np.ones_like(rest_nodes[0])
    for wm in wmesh:
        rest_weights = rest_weights * wm.ravel()
    m = rest_nodes[0].size
    nodes0, weights0 = axes[0]
    block = max(1, chunk_points // m)
    total = 0.0 + 0.0j
    for i in range(0, nodes0.size, block):
        sub = nodes0[i : i + block]
        subw = weights0[i : i + block]
        pts = np.empty((r, sub.size * m), dtype=np.complex128)
        pts[0] = np.repeat(sub, m)
        for k, rn in enumerate(rest_nodes):
            pts[k + 1] = np.tile(rn, sub.size)
        w = np.repeat(subw, m) * np.tile(rest_weights, sub.size)
        total += complex(np.sum(fn(pts) * w))
    return total


def _tan_map_quad(fn, r, box, tol, budget):
    n = 64
    prev = None
    while True:
        axes = [_tan_axis(box, n)] * r
        val = _tensor_sum(fn, axes)
        if prev is not None:
            delta = abs(val - prev)
            if delta <= tol * max(1.0, abs(val)):
                return QuadratureReport(
                    estimate=mpc(val),
                    error_bound=float(delta),
                    box_halfwidth=float(box),
                    nodes_per_axis=n,
                    tail_estimate=0.0,
                )
        prev = val
        if 2 * n > budget:
            raise BudgetExceeded(
                f"mapped quadrature did not stabilize within {budget} "
                "nodes per axis"
            )
        n *= 2


def _window_widths(freqs, x_flat, budget):
    widths = []
    length = 2.0 * _WINDOW_EDGE * x_flat
    for f in freqs:
        w = 2.0 if f == 0.0 else min(2.0, _PHASE_PER_PANEL / f)
        w_budget = length * _PER_PANEL / budget
        if f > 0.0 and w_budget > _PHASE_HARD_CAP / f:
            return None
        widths.append(max(w, w_budget))
    return widths


def _window_estimate(fn, r, x_flat, widths, tol, budget):
    """One windowed box; error gauged against a 1.5x coarser grid.

    The last element of the tuple reports whether the estimate
    stabilized below tol/4 within the node budget.
    """
    length = 2.0 * _WINDOW_EDGE * x_flat
    nodes_used = 0
    while True:
        axes = [_window_axis(x_flat, w) for w in widths]
        nodes_used = max(nodes_used, max(len(a[0]) for a in axes))
        fine = _tensor_sum(fn, axes)
        coarse = _tensor_sum(
            fn, [_window_axis(x_flat, 1.5 * w) for w in widths]
        )
        delta = abs(fine - coarse)
        if delta <= tol / 4.0:
            return fine, delta, nodes_used, True
        halved_fits = all(
            math.ceil(length / (0.5 * w)) * _PER_PANEL <= budget
            for w in widths
        )
        if not halved_fits:
            return fine, delta, nodes_used, False
        widths = [0.5 * w for w in widths]


def _shell_tail(fn, r, edge, decay):
    """Conservative mass bound past the box from the decay degree."""
    if r == 1:
        pts = np.array([[-edge, edge]], dtype=np.complex128)
    else:
        side = np.linspace(-edge, edge, 64)
        faces = []
        for j in range(r):
            for sign in (-1.0, 1.0):
                block = np.empty((r, side.size))
                block[j] = sign * edge
                for k in range(r):
                    if k != j:
                        block[k] = side
                faces.append(block)
        pts = np.concatenate(faces, axis=1).astype(np.complex128)
    peak = float(np.max(np.abs(fn(pts))))
    return peak * r * (2.0**r) * edge**r / (decay - r)


def _windowed_quad(fn, arr, freqs, decay, box, tol, budget):
    r = arr.dim
    windows = []
    for k in (0, 1, 2):
        x = box * 2.0**k
        widths = _window_widths(freqs, x, budget)
        if widths is None:
            if k == 0:
                raise BudgetExceeded(
                    f"budget {budget} cannot resolve the oscillation even "
                    "on the base window"
                )
            break
        windows.append((x, widths))
    vals = []
    inner_delta = 0.0
    nodes_used = 0
    for x, widths in windows:
        val, delta, nodes, ok = _window_estimate(fn, r, x, widths, tol, budget)
        if not ok and vals:
            # an under-resolved wide window would poison the extrapolation
            break
        vals.append(val)
        inner_delta = max(inner_delta, delta)
        nodes_used = max(nodes_used, nodes)
        if not ok:
            break
    windows = windows[: len(vals)]
    if len(vals) == 3:
        est = (8.0 * vals[2] - 6.0 * vals[1] + vals[0]) / 3.0
        check = 2.0 * vals[2] - vals[1]
        extrap_err = abs(est - check)
    elif len(vals) == 2:
        est = 2.0 * vals[1] - vals[0]
        extrap_err = abs(est - vals[1])
    else:
        est = vals[0]
        extrap_err = 0.0
    x_last = windows[-1][0]
    tail = _shell_tail(fn, r, _WINDOW_EDGE * x_last, decay)
    return QuadratureReport(
        estimate=mpc(est),
        error_bound=float(extrap_err + inner_delta),
        box_halfwidth=float(_WINDOW_EDGE * x_last),
        nodes_per_axis=nodes_used,
        tail_estimate=float(tail),
    )


def _monte_carlo(fn, r, box, seed):
    rng = np.random.default_rng(seed)
    scale = min(float(box), 10.0)
    batches = 16
    per_batch = 250_000
    means = []
    for _ in range(batches):
        u = rng.random((r, per_batch))
        v = scale * np.tan(np.pi * (u - 0.5))
        density = np.ones(per_batch)
        for j in range(r):
            density = density / (np.pi * scale * (1.0 + (v[j] / scale) ** 2))
        w = fn(v.astype(np.complex128)) / density
        means.append(complex(np.mean(w)))
    means = np.array(means)
    est = complex(np.mean(means))
    se = np.std(means.real) + 1j * np.std(means.imag)
    stderr = math.hypot(se.real, se.imag) / math.sqrt(batches)
    return QuadratureReport(
        estimate=mpc(est),
        error_bound=float(4.0 * stderr),
        box_halfwidth=scale,
        nodes_per_axis=int(round((batches * per_batch) ** (1.0 / 3.0))),
        tail_estimate=0.0,
    )


def quad_integral(
    arr: Arrangement,
    box: float = DEFAULT_BOX,
    tol: float = DEFAULT_TOL,
    node_budget: int = DEFAULT_NODE_BUDGET,
    seed: int = _MC_SEED,
) -> QuadratureReport:
    """Direct quadrature of the integral over the whole space."""
    r = arr.dim
    if r > 3:
        raise ValueError("quadrature supports at most three variables")
    func = arr.integrand()
    if not func.terms:
        return QuadratureReport(mpc(0), 0.0, float(box), 0, 0.0)
    freqs, decay = _decay_profile(arr)
    fn = compile_numeric(func)
    if r == 3:
        return _monte_carlo(fn, r, box, seed)
    if all(f == 0.0 for f in freqs):
        return _tan_map_quad(fn, r, box, tol, node_budget)
    return _windowed_quad(fn, arr, freqs, decay, box, tol, node_budget)


def torus_residue(
    arr: Arrangement,
    indices,
    eps=None,
    nodes: int = DEFAULT_TORUS_NODES,
) -> mpc:
    """Residue over the torus cycle |g_j| = eps_j around a terminal point.

    Oriented by the natural angle parametrization, normalized so the unit
    example dz/(z - i) gives exactly 1.
    """
    indices = tuple(indices)
    r = arr.dim
    if len(indices) != r:
        raise ValueError("need exactly one hyperplane per variable")
    rows = [arr.hyperplanes[i].f_row() for i in indices]
    a = RationalMatrix.from_rows(rows)
    if determinant(a) == 0:
        raise ValueError("chosen hyperplanes are not transverse")
    m = pole_location(arr, Flag(indices))
    a_inv = inverse(a)
    foreign = []
    for k, h in enumerate(arr.hyperplanes):
        if k in indices:
            continue
        g = complex(h.defining_form().evaluate(m))
        norm = math.sqrt(sum(float(c) ** 2 for c in h.f_row()))
        foreign.append((k, abs(g) / norm))
    if eps is None:
        base = 0.1 * min((d for _, d in foreign), default=1.0)
        eps_vec = [base] * r
    elif np.isscalar(eps):
        eps_vec = [float(eps)] * r
    else:
        eps_vec = [float(e) for e in eps]
        if len(eps_vec) != r:
            raise ValueError("need one radius per variable")
    bad = [k for k, d in foreign if d <= max(eps_vec)]
    if bad:
        raise ForeignPoleInsideTorus(
            f"hyperplane H{bad[0] + 1} is closer to the terminal point "
            "than the torus radius"
        )
    fn = compile_numeric(arr.integrand())
    ainv_np = np.array(
        [[complex(a_inv[i, j]) for j in range(r)] for i in range(r)]
    )
    det_ainv = complex(determinant(a_inv))
    m_np = np.array([complex(z) for z in m])
    theta = 2.0 * np.pi * np.arange(nodes) / nodes
    mesh = np.meshgrid(*([theta] * r), indexing="ij")
    phases = np.stack([g.ravel() for g in mesh])
    disc = np.exp(1j * phases)
    for j in range(r):
        disc[j] *= eps_vec[j]
    pts = m_np[:, None] + ainv_np @ disc
    # the cycle must stay clear of every foreign factor
    for k, _ in foreign:
        h = arr.hyperplanes[k]
        row = np.array([complex(c) for c in h.f_row()])
        const = complex(h.defining_form().const)
        vals = row @ pts + const
        if float(np.min(np.abs(vals))) < 1e-9 * (1.0 + float(np.max(np.abs(vals)))):
            raise ForeignPoleInsideTorus(
                f"torus passes through hyperplane H{k + 1}"
            )
    integrand = fn(pts)
    for j in range(r):
        integrand = integrand * disc[j]
    return mpc(det_ainv * complex(np.mean(integrand)))


def semicircle_check(
    func: ExpRationalFunction,
    radii,
    orientation: str = "upper",
) -> SemicircleDiagnostic:
    """Arc integrals over centered semicircles, one magnitude per radius.

    Supports the contour-closing diagnostic: decay of the magnitudes
    backs the residue expansion, growth flags divergence.
    """
    if func.arity != 1:
        raise ValueError("semicircle diagnostics are one-variable only")
    if orientation not in ("upper", "lower"):
        raise ValueError("orientation must be 'upper' or 'lower'")
    fn = compile_numeric(func)
    forms = []
    freq = 0.0
    for t in func.terms:
        freq = max(freq, abs(complex(t.expo.coeffs[0])))
        for f, _ in t.denom:
            forms.append((complex(f.coeffs[0]), complex(f.const)))
    lo, hi = (0.0, np.pi) if orientation == "upper" else (np.pi, 2.0 * np.pi)
    sampled = []
    mags = []
    peaks = []
    for radius in radii:
        r_eff = float(radius)
        for attempt in (0, 1):
            n = int(min(200_000, max(256, 8 * (1 + freq * r_eff))))
            panels = max(8, int(math.ceil(n / _PER_PANEL)))
            xg, wg = _leggauss(_PER_PANEL)
            bounds = np.linspace(lo, hi, panels + 1)
            half = (bounds[1:] - bounds[:-1]) / 2.0
            centers = (bounds[1:] + bounds[:-1]) / 2.0
            theta = (centers[:, None] + half[:, None] * xg[None, :]).ravel()
            wts = (half[:, None] * wg[None, :]).ravel()
            z = r_eff * np.exp(1j * theta)
            spacing = r_eff * (hi - lo) / (panels * _PER_PANEL)
            hit = False
            for a, c in forms:
                if a == 0:
                    continue
                dist = float(np.min(np.abs(a * z + c))) / abs(a)
                if dist < 3.0 * spacing:
                    hit = True
                    break
            if hit:
                if attempt == 0:
                    r_eff *= 1.07
                    continue
                raise PoleOnArc(
                    f"a pole sits on the arc near radius {radius}"
                )
            with np.errstate(over="ignore", invalid="ignore"):
                vals = fn(z[None, :]) * (1j * z)
                est = complex(np.sum(vals * wts))
                peak = float(np.max(np.abs(vals)))
            break
        sampled.append(r_eff)
        mags.append(
            float(abs(est)) if math.isfinite(abs(est)) else math.inf
        )
        peaks.append(peak if math.isfinite(peak) else math.inf)
    finite = all(math.isfinite(g) for g in mags)
    trending = (
        finite
        and len(mags) >= 2
        and mags[-1] < 0.5 * mags[0]
        and mags[-1] <= min(mags) * (1.0 + 1e-9)
    )
    return SemicircleDiagnostic(
        radii=tuple(float(x) for x in radii),
        magnitudes=tuple(mags),
        peak_magnitudes=tuple(peaks),
        trending_to_zero=trending,
        sampled_radii=tuple(sampled),
    )
