"""Oriented lines, the billiard ball map in an ellipse and its invariants.

An oriented line ``(phi, p)`` is the set ``{q : q . (cos phi, sin phi) = p}``
travelled in direction ``phi + pi/2``. The invariant area form is
``dp ^ dphi``.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import NamedTuple

import numpy as np

from . import _kernels
from .conics import ConfocalConic, ConfocalFamily, Point2, evaluate_confocal
from .errors import NoIntersectionError, OutOfRangeError, PonceletError

TWO_PI = 2.0 * math.pi

#: tangent-line rejection: chord shorter than this times sqrt(a1_sq)
TANGENT_TOL = 1e-10
#: central finite-difference step, in units of the table's major semi-axis
FD_STEP = 1e-5


def wrap_angle(phi: float) -> float:
    return math.fmod(math.fmod(phi, TWO_PI) + TWO_PI, TWO_PI)


def angle_diff(a, b):
    """Signed difference ``a - b`` wrapped into ``[-pi, pi)``."""
    return np.mod(np.asarray(a) - np.asarray(b) + math.pi, TWO_PI) - math.pi


class OrientedLine(NamedTuple):
    phi: float
    p: float

    @classmethod
    def make(cls, phi: float, p: float) -> "OrientedLine":
        return cls(wrap_angle(float(phi)), float(p))

    @classmethod
    def through(cls, a, b) -> "OrientedLine":
        """Line through ``a`` travelling towards ``b``."""
        d = np.asarray(b, dtype=float) - np.asarray(a, dtype=float)
        d /= np.hypot(*d)
        n = np.array([d[1], -d[0]])
        return cls.make(math.atan2(n[1], n[0]), float(n @ np.asarray(a, dtype=float)))

    @property
    def normal(self) -> np.ndarray:
        return np.array([math.cos(self.phi), math.sin(self.phi)])

    @property
    def direction(self) -> np.ndarray:
        return np.array([-math.sin(self.phi), math.cos(self.phi)])

    def reverse(self) -> "OrientedLine":
        return OrientedLine.make(self.phi + math.pi, -self.p)

    def signed_distance(self, q) -> float:
        return float(self.normal @ np.asarray(q, dtype=float) - self.p)

    def mirror(self, q) -> np.ndarray:
        """Reflection of the point ``q`` in this line."""
        q = np.asarray(q, dtype=float)
        return q - 2.0 * self.signed_distance(q) * self.normal

    def distance_to(self, other: "OrientedLine", scale: float = 1.0) -> float:
        return abs(float(angle_diff(self.phi, other.phi))) + abs(self.p - other.p) / scale


@dataclass(frozen=True)
class Chord:
    line: OrientedLine
    entry: Point2
    exit: Point2


def support(family: ConfocalFamily, lam: float, phi):
    """Support function ``h`` of the confocal ellipse ``lam`` in direction ``phi``."""
    c, s = np.cos(phi), np.sin(phi)
    return np.sqrt((family.a1_sq + lam) * c * c + (family.a2_sq + lam) * s * s)


def tangent_line(conic: ConfocalConic, phi: float) -> OrientedLine:
    conic.require_ellipse()
    return OrientedLine.make(phi, float(support(conic.family, conic.lam, phi)))


def tangency_point(conic: ConfocalConic, phi: float) -> Point2:
    """Contact point of the supporting line with outward normal ``phi``."""
    conic.require_ellipse()
    a, b = conic.axes_sq
    c, s = math.cos(phi), math.sin(phi)
    h = math.sqrt(a * c * c + b * s * s)
    return Point2(a * c / h, b * s / h)


def caustic_parameter(family: ConfocalFamily, line) -> float:
    """The confocal member tangent to ``line``: ``p^2 - a1 cos^2 - a2 sin^2``."""
    phi, p = line
    c, s = np.cos(phi), np.sin(phi)
    return p * p - family.a1_sq * c * c - family.a2_sq * s * s


def _table(boundary: ConfocalConic):
    boundary.require_ellipse()
    A, B = boundary.axes_sq
    return A, B, TANGENT_TOL * math.sqrt(boundary.family.a1_sq)


def chord(line: OrientedLine, boundary: ConfocalConic) -> Chord:
    """Entry and exit points of ``line`` on the table, ordered along travel."""
    A, B, min_gap = _table(boundary)
    phi, p = line
    c, s = math.cos(phi), math.sin(phi)
    disc = (A * c * c + B * s * s - p * p) / (A * B)
    alpha = s * s / A + c * c / B
    if disc <= 0.0 or 2.0 * math.sqrt(disc) / alpha < min_gap:
        raise NoIntersectionError(f"line {tuple(line)} misses or touches the table")
    beta = p * c * s * (1.0 / B - 1.0 / A)
    root = math.sqrt(disc)
    pts = []
    for t in ((-beta - root) / alpha, (-beta + root) / alpha):
        pts.append(Point2(p * c - t * s, p * s + t * c))
    return Chord(line, pts[0], pts[1])


def reflect(line: OrientedLine, boundary: ConfocalConic) -> OrientedLine:
    A, B, min_gap = _table(boundary)
    phi, p, ok = _kernels.reflect_many(
        np.array([line[0]], dtype=float), np.array([line[1]], dtype=float), A, B, min_gap
    )
    if not ok[0]:
        raise NoIntersectionError(f"line {tuple(line)} misses or touches the table")
    return OrientedLine(float(phi[0]), float(p[0]))


def reflect_many(phi, p, boundary: ConfocalConic):
    """Vectorized :func:`reflect`; returns ``(phi, p, ok)`` arrays."""
    A, B, min_gap = _table(boundary)
    return _kernels.reflect_many(
        np.ascontiguousarray(phi, dtype=float), np.ascontiguousarray(p, dtype=float),
        A, B, min_gap,
    )


def iterate(phi, p, boundary: ConfocalConic, steps: int, extended: bool = False):
    """Apply the billiard map ``steps`` times to each line; ``(phi, p, ok)``.

    ``extended`` runs the numpy kernel in ``np.longdouble``. Orbits close to
    the focal separatrix amplify roundoff by many orders of magnitude, and
    the extra bits keep closure measurements meaningful there.
    """
    A, B, min_gap = _table(boundary)
    if extended:
        return _kernels.iterate_many_np(
            np.asarray(phi, dtype=np.longdouble), np.asarray(p, dtype=np.longdouble),
            A, B, min_gap, int(steps),
        )
    return _kernels.iterate_many(
        np.ascontiguousarray(phi, dtype=float), np.ascontiguousarray(p, dtype=float),
        A, B, min_gap, int(steps),
    )


def jacobian_det(line: OrientedLine, boundary: ConfocalConic, h: float = FD_STEP) -> float:
    """Central-difference determinant of the billiard map in the (phi, p) chart."""
    scale = math.sqrt(boundary.family.a1_sq)
    dp = h * scale
    phis = np.array([line.phi + h, line.phi - h, line.phi, line.phi])
    ps = np.array([line.p, line.p, line.p + dp, line.p - dp])
    out_phi, out_p, ok = reflect_many(phis, ps, boundary)
    if not ok.all():
        raise NoIntersectionError("finite-difference stencil leaves the domain of the map")
    dphi_dphi = angle_diff(out_phi[0], out_phi[1]) / (2 * h)
    dp_dphi = (out_p[0] - out_p[1]) / (2 * h)
    dphi_dp = angle_diff(out_phi[2], out_phi[3]) / (2 * dp)
    dp_dp = (out_p[2] - out_p[3]) / (2 * dp)
    return float(dphi_dphi * dp_dp - dphi_dp * dp_dphi)


def appendix1_gap(chord1: Chord, chord2: Chord, family: ConfocalFamily, tol: float = 1e-9) -> float:
    """``| |F1' F2| - |F1 F2'| |`` for consecutive chords sharing a table point.

    ``F1'`` mirrors the left focus in the first chord's line and ``F2'``
    mirrors the right focus in the second chord's line.
    """
    family.require_foci()
    shared = np.asarray(chord1.exit) - np.asarray(chord2.entry)
    if np.hypot(*shared) > tol * math.sqrt(family.a1_sq):
        raise PonceletError("chords do not share an endpoint")
    f1, f2 = (np.asarray(f) for f in family.foci)
    f1m = chord1.line.mirror(f1)
    f2m = chord2.line.mirror(f2)
    return abs(float(np.hypot(*(f1m - f2)) - np.hypot(*(f1 - f2m))))


@dataclass(frozen=True)
class PortraitCurve:
    """Invariant curve ``p^2 = h_lam(phi)^2``; NaN where the curve is absent."""

    lam: float
    phi: np.ndarray
    p_plus: np.ndarray
    p_minus: np.ndarray


def phase_portrait(family: ConfocalFamily, lambda_Gamma: float, lambdas, samples: int = 720):
    if samples < 2:
        raise OutOfRangeError("need at least two samples")
    phi = np.linspace(0.0, TWO_PI, samples, endpoint=False)
    bound = support(family, lambda_Gamma, phi)
    curves = []
    for lam in lambdas:
        lam = float(lam)
        if not (-family.a1_sq < lam < lambda_Gamma):
            raise OutOfRangeError(f"lambda={lam!r} outside (-a1_sq, lambda_Gamma)")
        c, s = np.cos(phi), np.sin(phi)
        p2 = family.a1_sq * c * c + family.a2_sq * s * s + lam
        p = np.sqrt(np.where(p2 >= 0.0, p2, np.nan))
        p = np.where(p <= bound, p, np.nan)
        curves.append(PortraitCurve(lam, phi, p, -p))
    return curves


def on_boundary(boundary: ConfocalConic, q) -> float:
    return abs(evaluate_confocal(boundary, q))
