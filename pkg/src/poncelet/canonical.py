"""The coordinate on a caustic in which every confocal billiard map is a shift.

Lines tangent to the confocal ellipse ``lam`` form the invariant curve
``p = h_lam(phi)``. Since ``dh/dlam = 1 / (2 h)``, the area between this
curve and its neighbour at ``lam + eps`` over ``dphi`` is ``eps dphi / (2h)``,
so the normalized coordinate is

    x(phi) = (1/Z) * integral_0^phi dt / (2 h_lam(t)),   Z = x-integral over a full turn.

The billiard map of any confocal table containing the caustic acts as
``x -> x + c``.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction

import numpy as np
from scipy import integrate, optimize

from . import _kernels
from .conics import ConfocalConic, ConfocalFamily, Point2
from .errors import BracketError, NoIntersectionError, OutOfRangeError, PonceletError
from .linespace import (
    OrientedLine,
    angle_diff,
    caustic_parameter,
    iterate,
    reflect_many,
    support,
)

TWO_PI = 2.0 * math.pi

DEFAULT_RESOLUTION = 4096
MIN_RESOLUTION = 64
#: bisection bracket offset, in units of a1_sq (must clear the degeneracy tolerance)
BRACKET_EPS = 2e-9
#: number of equispaced chart starts averaged by rotation_number
ROTATION_SAMPLES = 16
#: tolerance on the spread of per-sample shifts
SHIFT_SPREAD_TOL = 1e-8


@dataclass(frozen=True, eq=False)
class CanonicalChart:
    family: ConfocalFamily
    lambda_caustic: float
    resolution: int
    phi_grid: np.ndarray = field(repr=False)
    x_table: np.ndarray = field(repr=False)
    Z: float

    @property
    def axes_sq(self):
        return self.family.a1_sq + self.lambda_caustic, self.family.a2_sq + self.lambda_caustic

    def density(self, phi):
        """``dx/dphi``."""
        return 0.5 / (self.Z * support(self.family, self.lambda_caustic, phi))

    def _args(self):
        A, B = self.axes_sq
        return self.phi_grid, self.x_table, A, B, 1.0 / self.Z, _kernels.GL_NODES, _kernels.GL_WEIGHTS

    def eval(self, phi):
        """Chart value ``x(phi)`` in ``[0, 1)``; accepts scalars or arrays."""
        arr = np.atleast_1d(np.asarray(phi, dtype=float))
        out = _kernels.chart_eval(np.ascontiguousarray(arr), *self._args())
        out = np.mod(out, 1.0)
        return float(out[0]) if np.ndim(phi) == 0 else out

    def invert(self, x):
        """Angle ``phi`` in ``[0, 2 pi)`` with ``x(phi) = x mod 1``."""
        arr = np.atleast_1d(np.asarray(x, dtype=float))
        out = _kernels.chart_invert(np.ascontiguousarray(arr), *self._args())
        out = np.mod(out, TWO_PI)
        return float(out[0]) if np.ndim(x) == 0 else out


def _stretch(phi, kappa):
    """Monotone map of ``[0, 2 pi]`` onto itself, steep where the density peaks.

    Half of it is the identity, half the normalized ``asinh(kappa cos phi)``
    profile, which follows ``1/h`` near ``phi = pi/2, 3 pi/2`` when the
    caustic is flat.
    """
    if kappa < 1e-6:
        return phi
    ak = math.asinh(kappa)
    g = np.where(phi <= math.pi, ak - np.arcsinh(kappa * np.cos(phi)),
                 3.0 * ak + np.arcsinh(kappa * np.cos(phi)))
    return 0.5 * phi + 0.5 * g * (TWO_PI / (4.0 * ak))


def panel_edges(A: float, B: float, resolution: int) -> np.ndarray:
    """Panel edges uniform in the stretched variable; centrally symmetric."""
    kappa = math.sqrt(max(A - B, 0.0) / B)
    half = resolution // 2
    targets = np.arange(half + 1) * (math.pi / half)
    lo, hi = np.zeros_like(targets), np.full_like(targets, math.pi)
    for _ in range(64):
        mid = 0.5 * (lo + hi)
        below = _stretch(mid, kappa) < targets
        lo = np.where(below, mid, lo)
        hi = np.where(below, hi, mid)
    first = 0.5 * (lo + hi)
    first[0], first[-1] = 0.0, math.pi
    return np.concatenate([first, first[1:] + math.pi])


def build_chart(family: ConfocalFamily, lambda_caustic: float, resolution: int = DEFAULT_RESOLUTION) -> CanonicalChart:
    """Quadrature table of the shift coordinate on the caustic ``lambda_caustic``.

    Composite 8-point Gauss-Legendre over ``resolution`` panels. Panels are
    graded towards the flat ends of the caustic so that nearly-degenerate
    caustics (close to the focal segment) stay resolved.
    """
    resolution = int(resolution)
    if resolution < MIN_RESOLUTION or resolution % 2:
        raise OutOfRangeError(f"resolution must be even and >= {MIN_RESOLUTION}")
    conic = ConfocalConic(family, lambda_caustic)
    if not conic.is_ellipse:
        raise OutOfRangeError("charts exist only on ellipse caustics")
    A, B = conic.axes_sq
    edges = panel_edges(A, B, resolution)
    half = 0.5 * np.diff(edges)
    pts = (edges[:-1] + half)[:, None] + half[:, None] * _kernels.GL_NODES[None, :]
    dens = 0.5 / support(family, lambda_caustic, pts)
    panel = half * (dens @ _kernels.GL_WEIGHTS)
    cum = np.concatenate([[0.0], np.cumsum(panel)])
    Z = float(cum[-1])
    x_table = cum / Z
    x_table[-1] = 1.0
    return CanonicalChart(family, float(lambda_caustic), resolution, edges, x_table, Z)


# shorter names that read well at call sites
def chart_eval(chart: CanonicalChart, phi):
    return chart.eval(phi)


def chart_invert(chart: CanonicalChart, x):
    return chart.invert(x)


def _check_nested(family, lambda_caustic, lambda_Gamma):
    if not -family.a2_sq < lambda_caustic < lambda_Gamma:
        raise OutOfRangeError(
            f"need -a2_sq < lambda_caustic < lambda_Gamma, got {lambda_caustic!r}, {lambda_Gamma!r}"
        )


def map_on_caustic(family: ConfocalFamily, lambda_caustic: float, lambda_Gamma: float, phi_a):
    """Tangency angle after one reflection in the table ``lambda_Gamma``.

    The tangent line to the caustic with outward normal ``phi_a`` (positive
    orientation) is extended forward, reflected once, and the normal angle of
    the reflected line, again tangent to the caustic, is returned.
    """
    _check_nested(family, lambda_caustic, lambda_Gamma)
    phi = np.atleast_1d(np.asarray(phi_a, dtype=float))
    p = support(family, lambda_caustic, phi)
    out_phi, _, ok = reflect_many(phi, p, ConfocalConic(family, lambda_Gamma))
    if not ok.all():  # impossible for a caustic strictly inside the table
        raise NoIntersectionError("tangent line to the caustic misses the table")
    return float(out_phi[0]) if np.ndim(phi_a) == 0 else out_phi


def shift_samples(chart: CanonicalChart, lambda_Gamma: float, xs) -> np.ndarray:
    """``x(phi_b) - x(phi_a) mod 1`` for chart starts ``xs``."""
    phi_a = chart.invert(np.asarray(xs, dtype=float))
    phi_b = map_on_caustic(chart.family, chart.lambda_caustic, lambda_Gamma, phi_a)
    return np.mod(chart.eval(phi_b) - chart.eval(phi_a), 1.0)


def rotation_number(
    family: ConfocalFamily,
    lambda_caustic: float,
    lambda_Gamma: float,
    resolution: int = DEFAULT_RESOLUTION,
    *,
    chart: CanonicalChart | None = None,
    return_spread: bool = False,
    check_spread: bool = True,
):
    """Shift ``c`` of the billiard map on the caustic, averaged over 16 starts.

    With ``check_spread`` a spread of the per-sample shifts above ``1e-8``
    raises; ``return_spread`` returns ``(c, spread)``.
    """
    _check_nested(family, lambda_caustic, lambda_Gamma)
    if chart is None:
        chart = build_chart(family, lambda_caustic, resolution)
    xs = (np.arange(ROTATION_SAMPLES) + 0.5) / ROTATION_SAMPLES
    shifts = shift_samples(chart, lambda_Gamma, xs)
    # guard against samples straddling the wrap at 0/1
    ref = shifts[0]
    shifts = ref + np.mod(shifts - ref + 0.5, 1.0) - 0.5
    c = float(np.mod(shifts.mean(), 1.0))
    spread = float(shifts.max() - shifts.min())
    if check_spread and spread > SHIFT_SPREAD_TOL:
        raise PonceletError(f"shift spread {spread:.3e} exceeds {SHIFT_SPREAD_TOL:g}")
    return (c, spread) if return_spread else c


def composite_rotation_number(family, lambda_caustic, lambdas_Gamma, resolution=DEFAULT_RESOLUTION, check_spread=False):
    chart = build_chart(family, lambda_caustic, resolution)
    return sum(
        rotation_number(family, lambda_caustic, lg, chart=chart, check_spread=check_spread)
        for lg in lambdas_Gamma
    )


def find_caustic_composite(family: ConfocalFamily, lambdas_Gamma, k: int, n: int,
                           resolution: int = DEFAULT_RESOLUTION, tol: float = 1e-12) -> float:
    """Caustic whose summed shift over the tables ``lambdas_Gamma`` equals ``k/n``.

    Bisection on ``lam`` in ``(-a2_sq + eps, min(lambdas_Gamma) - eps)``; the
    summed shift is strictly decreasing in ``lam`` and this is checked on a
    coarse grid before bisecting.
    """
    target = k / n
    eps = BRACKET_EPS * family.a1_sq
    lo, hi = -family.a2_sq + eps, min(lambdas_Gamma) - eps

    def c_of(lam):
        return composite_rotation_number(family, lam, lambdas_Gamma, resolution)

    probe = np.linspace(lo, hi, 9)[1:-1]
    cs = [c_of(lam) for lam in probe]
    if np.any(np.diff(cs) >= 0):
        raise PonceletError(f"shift not strictly decreasing in lambda on probe grid: {cs}")
    c_lo, c_hi = c_of(lo), c_of(hi)
    if not c_hi < target < c_lo:
        raise BracketError(
            f"target {target} not bracketed: c({lo})={c_lo}, c({hi})={c_hi}", c_lo, c_hi
        )
    # tighten the bracket with the probe values first
    for lam, c in zip(probe, cs):
        if c > target:
            lo = lam
        elif c < target and lam < hi:
            hi = lam
            break
    # run to the floating-point limit; tol only guards the final answer
    mid, c = lo, c_lo
    for _ in range(200):
        mid = 0.5 * (lo + hi)
        if not lo < mid < hi:
            break
        c = c_of(mid)
        if c == target:
            break
        if c > target:
            lo = mid
        else:
            hi = mid
    if abs(c - target) > tol:
        raise BracketError(f"bisection stalled at c={c!r}, target {target!r}", c_lo, c_hi)
    return mid


def find_caustic(family: ConfocalFamily, lambda_Gamma: float, k: int, n: int,
                 resolution: int = DEFAULT_RESOLUTION, tol: float = 1e-12) -> float:
    """Confocal caustic whose billiard trajectories close after ``n`` bounces and ``k`` turns."""
    n, k = int(n), int(k)
    if n < 3 or not 1 <= k <= (n - 1) // 2 or math.gcd(k, n) != 1:
        raise OutOfRangeError(f"invalid rotation number {k}/{n}")
    return find_caustic_composite(family, [lambda_Gamma], k, n, resolution, tol)


def closure_defect(family, lambda_caustic, lambda_Gamma, n, phis, extended: bool = False) -> np.ndarray:
    """Distance between each start line (tangent to the caustic) and its n-th image.

    The distance is ``|dphi| + |dp| / sqrt(a1_sq)``. See :func:`linespace.iterate`
    for ``extended``.
    """
    dtype = np.longdouble if extended else np.float64
    phis = np.asarray(phis, dtype=dtype)
    c, s = np.cos(phis), np.sin(phis)
    lam = dtype(lambda_caustic)
    p = np.sqrt((dtype(family.a1_sq) + lam) * c * c + (dtype(family.a2_sq) + lam) * s * s)
    out_phi, out_p, ok = iterate(phis, p, ConfocalConic(family, lambda_Gamma), n, extended)
    if not ok.all():
        raise NoIntersectionError("orbit left the table")
    two_pi = np.arctan(dtype(1)) * 8
    dphi = np.mod(out_phi - phis + two_pi / 2, two_pi) - two_pi / 2
    defect = np.abs(dphi) + np.abs(out_p - p) / dtype(math.sqrt(family.a1_sq))
    return defect.astype(np.float64)


def rational_approximation(c: float, n_max: int, tol: float = 1e-9):
    """``(n, k)`` with ``|c - k/n| <= tol`` and ``n <= n_max``, or ``None``."""
    frac = Fraction(c).limit_denominator(n_max)
    if abs(c - frac.numerator / frac.denominator) <= tol:
        return frac.denominator, frac.numerator
    return None


# ------------------------------------------------------- string construction


def arc_length(family: ConfocalFamily, lam: float, phi1: float, phi2: float) -> float:
    """Length of the ellipse ``lam`` between standard-parameter angles ``phi1 <= phi2``."""
    conic = ConfocalConic(family, lam)
    conic.require_ellipse()
    A, B = conic.axes_sq

    def speed(t):
        return math.sqrt(A * math.sin(t) ** 2 + B * math.cos(t) ** 2)

    # split at quarter turns so each piece is smooth and cheap for quad
    lo, hi = float(phi1), float(phi2)
    sign = 1.0
    if hi < lo:
        lo, hi, sign = hi, lo, -1.0
    cuts = [lo] + [m * 0.5 * math.pi for m in range(math.floor(lo / (0.5 * math.pi)) + 1,
                                                      math.ceil(hi / (0.5 * math.pi)))] + [hi]
    total = 0.0
    for a, b in zip(cuts[:-1], cuts[1:]):
        if b > a:
            val, _ = integrate.quad(speed, a, b, epsabs=0.0, epsrel=1e-12, limit=200)
            total += val
    return sign * total


def perimeter(family: ConfocalFamily, lam: float) -> float:
    return arc_length(family, lam, 0.0, TWO_PI)


def tangent_parameters(conic: ConfocalConic, point):
    """Standard-parameter angles of the two tangency points seen from ``point``.

    Returns ``(psi - delta, psi + delta)``: the near gap between them contains
    ``psi``, the parameter of the radial projection. Raises if ``point`` is
    inside the ellipse.
    """
    A, B = conic.axes_sq
    u, v = point[0] / math.sqrt(A), point[1] / math.sqrt(B)
    r = math.hypot(u, v)
    if r < 1.0 - 1e-12:
        raise OutOfRangeError("point lies inside the caustic")
    psi = math.atan2(v, u)
    delta = math.acos(min(1.0, 1.0 / r))
    return psi - delta, psi + delta


def string_length_at(family: ConfocalFamily, lambda_caustic: float, point) -> float:
    """``|xa| + |xb| +`` far caustic arc from ``b`` round to ``a``."""
    conic = ConfocalConic(family, lambda_caustic)
    conic.require_ellipse()
    ta, tb = tangent_parameters(conic, point)
    a, b = conic.point_at([ta, tb])
    x = np.asarray(point, dtype=float)
    legs = np.hypot(*(x - a)) + np.hypot(*(x - b))
    return float(legs + arc_length(family, lambda_caustic, tb, ta + TWO_PI))


def string_length(family: ConfocalFamily, lambda_caustic: float, lambda_Gamma: float,
                  point=None) -> float:
    """String length closing the table ``lambda_Gamma`` around the caustic.

    Evaluated at ``point`` of the table, by default the major-axis vertex.
    """
    _check_nested(family, lambda_caustic, lambda_Gamma)
    if point is None:
        point = (math.sqrt(family.a1_sq + lambda_Gamma), 0.0)
    return string_length_at(family, lambda_caustic, point)


def string_curve(family: ConfocalFamily, lambda_caustic: float, L: float, samples: int = 256) -> np.ndarray:
    """Points where the taut string of length ``L`` is pulled, one per ray from the center.

    Returns an array of shape ``(samples, 2)`` ordered by ray angle.
    """
    conic = ConfocalConic(family, lambda_caustic)
    conic.require_ellipse()
    per = perimeter(family, lambda_caustic)
    if not L > per:
        raise OutOfRangeError(f"string length {L} must exceed the caustic perimeter {per}")
    A, B = conic.axes_sq
    out = np.empty((int(samples), 2))
    for i, ang in enumerate(np.arange(samples) * TWO_PI / samples):
        d = np.array([math.cos(ang), math.sin(ang)])
        r0 = 1.0 / math.sqrt(d[0] ** 2 / A + d[1] ** 2 / B)

        def excess(r):
            return string_length_at(family, lambda_caustic, r * d) - L

        hi = r0 + (L - per)
        while excess(hi) < 0:
            hi *= 2.0
        r = optimize.brentq(excess, r0, hi, xtol=1e-14, rtol=4 * np.finfo(float).eps)
        out[i] = r * d
    return out


def _cross(u, v) -> float:
    return float(u[0] * v[1] - u[1] * v[0])


def orthogonality_gap_at(family: ConfocalFamily, lambda_caustic: float, x, tangent) -> float:
    """``|unit(pq) . unit(tangent)|`` for the infinitesimal quadrilateral ``x q x' p``.

    With ``a, b`` the tangency points seen from ``x`` and ``x' = x + eps * t``,
    ``p = xa ∩ x'b'`` and ``q = xb ∩ x'a'``. To first order in ``eps``

        p - q  ∝  cross(t, u_b) u_a - cross(u_a, t) u_b

    where ``u_a, u_b`` are the unit directions from ``x`` to ``a, b``.
    """
    conic = ConfocalConic(family, lambda_caustic)
    conic.require_ellipse()
    x = np.asarray(x, dtype=float)
    ta, tb = tangent_parameters(conic, x)
    a, b = conic.point_at([ta, tb])
    ua = (a - x) / np.hypot(*(a - x))
    ub = (b - x) / np.hypot(*(b - x))
    t = np.asarray(tangent, dtype=float)
    t = t / np.hypot(*t)
    pq = _cross(t, ub) * ua - _cross(ua, t) * ub
    return abs(float(pq @ t)) / float(np.hypot(*pq))


def orthogonality_gap(family: ConfocalFamily, lambda_caustic: float, lambda_Gamma: float,
                      phi_x: float, outer_axes_sq=None) -> float:
    """Orthogonality gap at the point of the table with standard parameter ``phi_x``.

    ``outer_axes_sq`` replaces the table by another centered ellipse (used
    as a negative control); the point is then taken on that ellipse.
    """
    if outer_axes_sq is None:
        _check_nested(family, lambda_caustic, lambda_Gamma)
        A, B = ConfocalConic(family, lambda_Gamma).axes_sq
    else:
        A, B = outer_axes_sq
    x = (math.sqrt(A) * math.cos(phi_x), math.sqrt(B) * math.sin(phi_x))
    tangent = (-math.sqrt(A) * math.sin(phi_x), math.sqrt(B) * math.cos(phi_x))
    return orthogonality_gap_at(family, lambda_caustic, x, tangent)


def point_of_line(family, lambda_caustic, phi) -> Point2:
    """Tangency point on the caustic for the line with normal ``phi``."""
    A, B = family.a1_sq + lambda_caustic, family.a2_sq + lambda_caustic
    c, s = math.cos(phi), math.sin(phi)
    h = math.sqrt(A * c * c + B * s * s)
    return Point2(A * c / h, B * s / h)


def tangency_consistency(family, lambda_caustic, phi) -> float:
    """``caustic_parameter`` of the supporting line minus ``lambda_caustic``."""
    line = OrientedLine.make(phi, float(support(family, lambda_caustic, phi)))
    return float(caustic_parameter(family, line) - lambda_caustic)
