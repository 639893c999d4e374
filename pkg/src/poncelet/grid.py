"""Poncelet polygons and the Poncelet grid.

The side lines of an n-periodic polygon are the tangents to the caustic at
chart values ``x0 + i/n``. Pairwise intersections of the extended sides
split into

    P_d = {l_i ∩ l_j : i - j = ±d mod n},   d = 0 .. (n-1)/2
    Q_s = {l_i ∩ l_j : i + j = s mod n},    s = 0 .. n-1

with ``l_i ∩ l_i`` the tangency point. P-sets lie on ellipses and Q-sets on
hyperbolas of the caustic's confocal family.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import NamedTuple

import numpy as np
from scipy.spatial import cKDTree

from .canonical import (
    DEFAULT_RESOLUTION,
    CanonicalChart,
    build_chart,
    find_caustic,
    tangent_parameters,
)
from .conics import (
    ConfocalConic,
    ConfocalFamily,
    GeneralConic,
    Point2,
    dual_conic,
    elliptic_coords,
    evaluate_confocal,
    ivory_scales,
    to_general,
)
from .errors import FitError, OutOfRangeError, PonceletError
from .linespace import OrientedLine, support

#: grid points farther than this (times sqrt(a1_sq)) count as ideal points
INFINITY_RADIUS = 1e6
#: relative singular-value floor separating a 5-point fit from collinear input
RANK_TOL = 1e-12
#: chart tolerance for "this Q-set sits on a coordinate axis"
AXIS_TOL = 1e-9


@dataclass(frozen=True, eq=False)
class PonceletPolygon:
    family: ConfocalFamily
    lambda_caustic: float
    lambda_Gamma: float
    n: int
    k: int
    x0: float
    tangency_x: np.ndarray = field(repr=False)
    side_lines: tuple = field(repr=False)
    vertices: tuple = field(repr=False)
    chart: CanonicalChart = field(repr=False, default=None)

    @property
    def gamma(self) -> ConfocalConic:
        return ConfocalConic(self.family, self.lambda_caustic)

    @property
    def table(self) -> ConfocalConic:
        return ConfocalConic(self.family, self.lambda_Gamma)

    def vertex_defect(self) -> float:
        """Largest ``|evaluate_confocal(table, v)|`` over the vertices."""
        return max(abs(evaluate_confocal(self.table, v)) for v in self.vertices)


class GridPoint(NamedTuple):
    i: int
    j: int
    point: Point2
    at_infinity: bool


@dataclass(frozen=True, eq=False)
class GridSet:
    kind: str  # "P" or "Q"
    index: int
    members: tuple = field(repr=False)
    axis_degenerate: bool = False

    @property
    def points(self) -> list:
        return [m.point for m in self.members]

    @property
    def finite_points(self) -> np.ndarray:
        return np.array([m.point for m in self.members if not m.at_infinity], dtype=float).reshape(-1, 2)

    def __len__(self):
        return len(self.members)


@dataclass(frozen=True, eq=False)
class FittedConic:
    conic: GeneralConic
    residual: float
    npoints: int


class ConfocalFit(NamedTuple):
    """Pieces of the confocality test; ``residual`` is their maximum."""

    residual: float
    axis: float
    off_axis: float
    dual_ratio: float
    s1: float
    s2: float


def _check_odd(n: int, k: int):
    if n < 3 or n % 2 == 0:
        raise OutOfRangeError(f"grids need odd n >= 3, got n={n}")
    if not 1 <= k <= (n - 1) // 2 or math.gcd(k, n) != 1:
        raise OutOfRangeError(f"invalid winding {k}/{n}")


def intersect(l1: OrientedLine, l2: OrientedLine) -> Point2:
    m = np.array([[math.cos(l1.phi), math.sin(l1.phi)], [math.cos(l2.phi), math.sin(l2.phi)]])
    det = m[0, 0] * m[1, 1] - m[0, 1] * m[1, 0]
    if det == 0.0:
        return Point2(math.inf, math.inf)
    x = (l1.p * m[1, 1] - l2.p * m[0, 1]) / det
    y = (m[0, 0] * l2.p - m[1, 0] * l1.p) / det
    return Point2(x, y)


def build_polygon(family: ConfocalFamily, lambda_Gamma: float, n: int, k: int = 1,
                  x0: float = 0.0, resolution: int = DEFAULT_RESOLUTION) -> PonceletPolygon:
    """Periodic billiard trajectory with rotation number ``k/n``.

    Side ``i`` touches the caustic at chart value ``x0 + i/n``. The trajectory
    goes from side ``i`` to side ``i + k``, so vertex ``i`` is
    ``l_i ∩ l_{i+k}`` (for ``k = 1`` the consecutive sides).
    """
    n, k = int(n), int(k)
    _check_odd(n, k)
    x0 = float(x0) % 1.0
    lam = find_caustic(family, lambda_Gamma, k, n, resolution)
    chart = build_chart(family, lam, resolution)
    xs = np.mod(x0 + np.arange(n) / n, 1.0)
    phis = chart.invert(xs)
    ps = support(family, lam, phis)
    lines = tuple(OrientedLine(float(a), float(b)) for a, b in zip(phis, ps))
    verts = tuple(intersect(lines[i], lines[(i + k) % n]) for i in range(n))
    return PonceletPolygon(family, lam, float(lambda_Gamma), n, k, x0, xs, lines, verts, chart)


def _tangency(poly: PonceletPolygon, i: int) -> Point2:
    A, B = poly.gamma.axes_sq
    phi = poly.side_lines[i].phi
    c, s = math.cos(phi), math.sin(phi)
    h = math.sqrt(A * c * c + B * s * s)
    return Point2(A * c / h, B * s / h)


def _grid_point(poly: PonceletPolygon, i: int, j: int) -> GridPoint:
    if i == j:
        return GridPoint(i, j, _tangency(poly, i), False)
    q = intersect(poly.side_lines[i], poly.side_lines[j])
    far = not math.hypot(*q) <= INFINITY_RADIUS * math.sqrt(poly.family.a1_sq)
    return GridPoint(i, j, q, far)


def _q_axis_degenerate(x0: float, s: int, n: int) -> bool:
    # the Q_s curve has chart abscissa x0 + s/(2n) mod 1/2; multiples of 1/4 are the axes
    t = (x0 + s / (2 * n)) * 4.0
    return abs(t - round(t)) < AXIS_TOL


def grid_sets(poly: PonceletPolygon) -> list:
    """``P_0 .. P_(n-1)/2`` followed by ``Q_0 .. Q_(n-1)``."""
    n = poly.n
    out = []
    for d in range((n - 1) // 2 + 1):
        members = tuple(_grid_point(poly, i, (i + d) % n) for i in range(n))
        out.append(GridSet("P", d, members))
    for s in range(n):
        members = []
        for i in range(n):
            j = (s - i) % n
            if i <= j:
                members.append(_grid_point(poly, i, j))
        out.append(GridSet("Q", s, tuple(members), _q_axis_degenerate(poly.x0, s, n)))
    return out


def distinct_points(sets, tol: float = 1e-9) -> int:
    """Number of distinct grid points (ideal points counted once per pair)."""
    pts, ideal = [], set()
    for gs in sets:
        for m in gs.members:
            if m.at_infinity:
                ideal.add((min(m.i, m.j), max(m.i, m.j)))
            else:
                pts.append(m.point)
    arr = np.array(pts, dtype=float)
    tree = cKDTree(arr)
    groups = tree.query_ball_point(arr, r=tol * max(1.0, float(np.abs(arr).max())))
    seen, count = set(), 0
    for idx, g in enumerate(groups):
        if idx not in seen:
            count += 1
            seen.update(g)
    return count + len(ideal)


# ------------------------------------------------------------------ fitting


def fit_conic(points) -> FittedConic:
    """Least-squares conic through ``points`` (smallest singular direction).

    Points are centered and scaled to mean distance sqrt(2) first. The
    residual is the smallest singular value over the largest; it is exactly
    zero for 5 points.
    """
    pts = np.asarray(points, dtype=float).reshape(-1, 2)
    if len(pts) < 5:
        raise FitError(f"need at least 5 points, got {len(pts)}")
    if not np.all(np.isfinite(pts)):
        raise FitError("points must be finite")
    center = pts.mean(axis=0)
    scale = math.sqrt(2.0) / np.mean(np.hypot(*(pts - center).T))
    u, v = ((pts - center) * scale).T
    design = np.column_stack([u * u, u * v, v * v, u, v, np.ones_like(u)])
    _, sv, vt = np.linalg.svd(design, full_matrices=True)
    if sv[min(4, len(sv) - 1)] <= RANK_TOL * sv[0]:
        raise FitError("points do not determine a unique conic (collinear or repeated)")
    a, b, c, d, e, f = vt[-1]
    mn = np.array([[a, b / 2, d / 2], [b / 2, c, e / 2], [d / 2, e / 2, f]])
    # normalized coordinates: w = T v with T = scale * [I, -center]
    t = np.array([[scale, 0.0, -scale * center[0]], [0.0, scale, -scale * center[1]], [0.0, 0.0, 1.0]])
    residual = float(sv[5] / sv[0]) if len(sv) > 5 else 0.0
    return FittedConic(GeneralConic(t.T @ mn @ t), residual, len(pts))


def symmetric_completion(points, tol: float = 1e-12) -> np.ndarray:
    """Add the mirror images across both coordinate axes, dropping duplicates."""
    pts = np.asarray(points, dtype=float).reshape(-1, 2)
    allp = np.concatenate([pts * [sx, sy] for sx in (1, -1) for sy in (1, -1)])
    out = []
    for p in allp:
        if not any(np.hypot(*(p - q)) <= tol * max(1.0, np.hypot(*p)) for q in out):
            out.append(p)
    return np.array(out)


def fit_set(gs: GridSet) -> FittedConic:
    """Conic through a grid set; sets under 5 points are completed by symmetry."""
    pts = gs.finite_points
    if len(pts) < 5:
        pts = symmetric_completion(pts)
    return fit_conic(pts)


def _member_duals(family: ConfocalFamily):
    return [dual_conic(to_general(ConfocalConic(family, lam))).coeffs for lam in (0.0, family.a1_sq)]


def dual_pencil_ratio(family: ConfocalFamily, conic: GeneralConic) -> float:
    """Third over first singular value of the stacked dual 6-vectors.

    Zero iff the dual of ``conic`` lies in the pencil spanned by the duals of
    the family (its four common tangents are the family's).
    """
    rows = [v / np.linalg.norm(v) for v in _member_duals(family)]
    d = dual_conic(conic).coeffs
    rows.append(d / np.linalg.norm(d))
    sv = np.linalg.svd(np.array(rows), compute_uv=False)
    return float(sv[2] / sv[0])


def confocality(family: ConfocalFamily, fc) -> ConfocalFit:
    conic = fc.conic if isinstance(fc, FittedConic) else fc
    m = conic.m
    diag = max(abs(m[0, 0]), abs(m[1, 1]))
    off = max(abs(m[0, 1]), abs(m[0, 2]), abs(m[1, 2])) / diag
    s1, s2 = -m[2, 2] / m[0, 0], -m[2, 2] / m[1, 1]
    axis = abs((s1 - s2) - family.focal_sq) / family.a1_sq
    ratio = dual_pencil_ratio(family, conic)
    return ConfocalFit(max(axis, off, ratio), axis, off, ratio, s1, s2)


def confocality_residual(family: ConfocalFamily, fc) -> float:
    """Distance of a fitted conic from the confocal family, dimensionless."""
    return confocality(family, fc).residual


def fitted_lambda(family: ConfocalFamily, fc) -> float:
    """Family parameter of a (nearly) confocal fit, combined over both axes.

    Each axis gives ``s_i - a_i``. Roundoff in ``s_i`` grows like ``s_i^2``, so
    the two estimates are weighted by ``1 / s_i^4``; for a very flat ellipse
    this trusts the short axis.
    """
    cf = confocality(family, fc)
    w1, w2 = 1.0 / cf.s1 ** 4, 1.0 / cf.s2 ** 4
    return (w1 * (cf.s1 - family.a1_sq) + w2 * (cf.s2 - family.a2_sq)) / (w1 + w2)


# ---------------------------------------------------------- Ivory equivalence


def _quadrant_signs(x: float) -> np.ndarray:
    q = int(math.floor((x % 1.0) * 4.0 + 1e-12)) % 4
    return np.array([(1, 1), (-1, 1), (-1, -1), (1, -1)][q], dtype=float)


def predicted_signs(kind: str, k: int, m: int, x0: float = 0.0, n: int | None = None) -> np.ndarray:
    """Axis signs composing with ``A_{lam,mu}`` to carry set ``k`` onto set ``m``.

    P-sets: ``(-1)^(k-m)`` times the identity. A Q_s point at distance index
    ``d`` has chart abscissa ``x0 + s/(2n)``, shifted by 1/2 when ``d`` and
    ``s`` differ in parity. The positive Ivory map keeps quadrants and ``y``,
    so the factor is the axial symmetry taking the quadrant of
    ``x0 + k/(2n)`` to that of ``x0 + m/(2n)``, times ``(-1)^(k-m)``.
    """
    flip = (-1.0) ** (k - m)
    if kind == "P":
        return np.full(2, flip)
    if n is None:
        raise PonceletError("Q-set signs need n")
    return flip * _quadrant_signs(x0 + m / (2 * n)) * _quadrant_signs(x0 + k / (2 * n))


def equivalence_gap(family: ConfocalFamily, set_a: GridSet, set_b: GridSet,
                    signs=None, x0: float = 0.0, n: int | None = None) -> float:
    """Largest distance from ``signs * A_{lam,mu}(a)`` to its nearest point of ``set_b``.

    The nearest-point matching must be a bijection, otherwise ``inf`` is
    returned.
    """
    if set_a.kind != set_b.kind:
        raise PonceletError("cannot compare a P-set with a Q-set")
    if len(set_a) != len(set_b):
        raise PonceletError("sets have different cardinalities")
    if n is None:
        n = 2 * len(set_a) - 1 if set_a.kind == "Q" else len(set_a)
    lam = fitted_lambda(family, fit_set(set_a))
    mu = fitted_lambda(family, fit_set(set_b))
    if signs is None:
        signs = predicted_signs(set_a.kind, set_a.index, set_b.index, x0, n)
    if lam == mu:
        scales = np.ones(2)
    else:
        scales = ivory_scales(family, lam, mu)
    a = set_a.finite_points * scales * np.asarray(signs, dtype=float)
    b = set_b.finite_points
    dist, idx = cKDTree(b).query(a)
    if len(set(idx.tolist())) != len(idx):
        return math.inf
    return float(dist.max())


# ------------------------------------------------------------ (x, y) chart


class GridCoord(NamedTuple):
    x: float
    y: float
    kind: str
    indices: tuple


def _normal_angle(A: float, B: float, t: float) -> float:
    # outward normal of the ellipse at standard parameter t
    return math.atan2(math.sin(t) / math.sqrt(B), math.cos(t) / math.sqrt(A))


def point_xy(chart: CanonicalChart, q, tangency: bool = False):
    """``(x, y)`` with tangency chart values ``x - y`` and ``x + y``, ``0 <= y < 1/4``."""
    gamma = ConfocalConic(chart.family, chart.lambda_caustic)
    A, B = gamma.axes_sq
    if tangency:
        t = math.atan2(q[1] / math.sqrt(B), q[0] / math.sqrt(A))
        return chart.eval(_normal_angle(A, B, t)), 0.0
    ta, tb = tangent_parameters(gamma, q)
    u, v = chart.eval(np.array([_normal_angle(A, B, ta), _normal_angle(A, B, tb)]))
    d = (v - u) % 1.0
    if d > 0.5:
        u, d = v, 1.0 - d
    y = 0.5 * d
    return (u + y) % 1.0, y


def grid_xy_coords(poly: PonceletPolygon, chart: CanonicalChart | None = None) -> list:
    """``(x, y)`` of every finite grid point, recovered from its tangent lines."""
    chart = poly.chart if chart is None else chart
    out = []
    for gs in grid_sets(poly):
        for m in gs.members:
            if m.at_infinity:
                continue
            x, y = point_xy(chart, m.point, tangency=m.i == m.j)
            out.append(GridCoord(x, y, gs.kind + str(gs.index), (m.i, m.j)))
    return out


def expected_xy(n: int, i: int, j: int, x0: float = 0.0):
    """Closed-form ``(x0 + d/2n + start/n, d/2n)`` for the pair ``(i, j)``."""
    d = (j - i) % n
    start = i
    if d > n // 2:
        d, start = n - d, j
    return (x0 + d / (2 * n) + start / n) % 1.0, d / (2 * n)


def chart_distance(a: float, b: float) -> float:
    d = abs(a - b) % 1.0
    return min(d, 1.0 - d)


# --------------------------------------------------------------- properties


def hyperbola_normal_gap(family: ConfocalFamily, conic: GeneralConic, q) -> float:
    """``|n_fit . n_ellipse|`` at ``q``: zero when the fitted curve crosses the
    confocal ellipse through ``q`` at a right angle."""
    v = np.array([q[0], q[1], 1.0])
    g = (conic.m @ v)[:2]
    lam2 = elliptic_coords(family, q).lambda2
    ell = ConfocalConic(family, lam2)
    a, b = ell.axes_sq
    ge = np.array([q[0] / a, q[1] / b])
    return abs(float(g @ ge)) / float(np.hypot(*g) * np.hypot(*ge))


def sample_hyperbola(s1: float, s2: float, half_width: float, half_height: float,
                     samples: int = 400) -> np.ndarray:
    """Both branches of ``x^2/s1 + y^2/s2 = 1`` (``s1 > 0 > s2``) inside the box.

    Sampled as ``(±sqrt(s1) cosh t, sqrt(-s2) sinh t)`` so that very flat
    hyperbolas still get points. Empty when the vertices lie outside.
    """
    a, b = math.sqrt(s1), math.sqrt(-s2)
    if a > half_width:
        return np.empty((0, 2))
    t_max = min(math.acosh(half_width / a), math.asinh(half_height / b))
    t = np.linspace(-t_max, t_max, samples)
    x, y = a * np.cosh(t), b * np.sinh(t)
    return np.concatenate([np.column_stack([x, y]), np.column_stack([-x, y])])


def min_separation(curves) -> float:
    """Smallest distance between sampled point clouds, over all pairs."""
    best = math.inf
    for i in range(len(curves)):
        tree = cKDTree(curves[i])
        for j in range(i + 1, len(curves)):
            d, _ = tree.query(curves[j])
            best = min(best, float(d.min()))
    return best
