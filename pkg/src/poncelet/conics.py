"""Confocal conics, elliptic coordinates, duality and the Ivory affinity.

The confocal family with squared semi-axes ``(a1_sq, a2_sq)`` is

    x1**2 / (a1_sq + lam) + x2**2 / (a2_sq + lam) = 1

with ellipses for ``lam > -a2_sq`` and hyperbolas for
``-a1_sq < lam < -a2_sq``.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import NamedTuple

import numpy as np

from .errors import (
    DegenerateConicError,
    DegenerateFamilyError,
    OutOfRangeError,
    PonceletError,
)

#: relative distance (in units of a1_sq) below which a member is degenerate
DEGENERACY_TOL = 1e-9


class Point2(NamedTuple):
    x1: float
    x2: float


@dataclass(frozen=True)
class ConfocalFamily:
    a1_sq: float
    a2_sq: float

    def __post_init__(self):
        a1, a2 = float(self.a1_sq), float(self.a2_sq)
        if not (math.isfinite(a1) and math.isfinite(a2)):
            raise PonceletError("family parameters must be finite")
        if not a1 >= a2 > 0:
            raise PonceletError(f"need a1_sq >= a2_sq > 0, got ({a1}, {a2})")
        object.__setattr__(self, "a1_sq", a1)
        object.__setattr__(self, "a2_sq", a2)

    @property
    def is_circle(self) -> bool:
        return self.a1_sq == self.a2_sq

    @property
    def focal_sq(self) -> float:
        """Squared half focal distance, ``a1_sq - a2_sq``."""
        return self.a1_sq - self.a2_sq

    @property
    def foci(self) -> tuple[Point2, Point2]:
        c = math.sqrt(self.focal_sq)
        return Point2(-c, 0.0), Point2(c, 0.0)

    def require_foci(self):
        if self.focal_sq <= DEGENERACY_TOL * self.a1_sq:
            raise DegenerateFamilyError("circle family has no focal coordinates")

    def member(self, lam: float) -> "ConfocalConic":
        return ConfocalConic(self, lam)


@dataclass(frozen=True)
class ConfocalConic:
    family: ConfocalFamily
    lam: float

    def __post_init__(self):
        lam = float(self.lam)
        fam = self.family
        tol = DEGENERACY_TOL * fam.a1_sq
        if not math.isfinite(lam):
            raise DegenerateConicError("lambda must be finite")
        if abs(lam + fam.a2_sq) < tol or abs(lam + fam.a1_sq) < tol:
            raise DegenerateConicError(f"lambda={lam!r} is a degenerate member")
        if lam < -fam.a1_sq:
            raise DegenerateConicError(f"lambda={lam!r} gives an empty conic")
        object.__setattr__(self, "lam", lam)

    @property
    def is_ellipse(self) -> bool:
        return self.lam > -self.family.a2_sq

    @property
    def axes_sq(self) -> tuple[float, float]:
        """``(a1_sq + lam, a2_sq + lam)``; the second is negative for hyperbolas."""
        return self.family.a1_sq + self.lam, self.family.a2_sq + self.lam

    def require_ellipse(self):
        if not self.is_ellipse:
            raise PonceletError(f"lambda={self.lam!r} is a hyperbola, ellipse required")

    def point_at(self, theta):
        """Standard parametrization ``(sqrt(A) cos t, sqrt(B) sin t)`` of an ellipse."""
        self.require_ellipse()
        a, b = self.axes_sq
        theta = np.asarray(theta, dtype=float)
        return np.stack([math.sqrt(a) * np.cos(theta), math.sqrt(b) * np.sin(theta)], axis=-1)


class EllipticCoords(NamedTuple):
    lambda1: float
    lambda2: float


def evaluate_confocal(conic: ConfocalConic, p) -> float:
    a, b = conic.axes_sq
    x1, x2 = p
    return x1 * x1 / a + x2 * x2 / b - 1.0


def gradient_confocal(conic: ConfocalConic, p) -> np.ndarray:
    a, b = conic.axes_sq
    return np.array([2.0 * p[0] / a, 2.0 * p[1] / b])


def elliptic_coords(family: ConfocalFamily, p) -> EllipticCoords:
    """Parameters of the confocal hyperbola and ellipse through ``p``.

    Roots of ``lam**2 + b lam + c = 0`` with
    ``b = a1 + a2 - x1**2 - x2**2`` and ``c = a1 a2 - x1**2 a2 - x2**2 a1``.
    """
    family.require_foci()
    x1, x2 = float(p[0]), float(p[1])
    if not (math.isfinite(x1) and math.isfinite(x2)):
        raise PonceletError("point must be finite")
    a1, a2 = family.a1_sq, family.a2_sq
    s1, s2 = x1 * x1, x2 * x2
    b = a1 + a2 - s1 - s2
    c = a1 * a2 - s1 * a2 - s2 * a1
    # disc = (a1 - a2 + s2 - s1)**2 + 4 s1 s2 >= 0, written without cancellation
    d = a1 - a2 + s2 - s1
    disc = d * d + 4.0 * s1 * s2
    q = -0.5 * (b + math.copysign(math.sqrt(disc), b))
    if q == 0.0:
        r1 = r2 = 0.0
    else:
        r1, r2 = q, c / q
    lam1, lam2 = min(r1, r2), max(r1, r2)
    # clamp roundoff onto the coordinate ranges
    lam1 = min(max(lam1, -a1), -a2)
    lam2 = max(lam2, -a2)
    return EllipticCoords(lam1, lam2)


def from_elliptic(family: ConfocalFamily, c, signs=(1, 1)) -> Point2:
    family.require_foci()
    a1, a2 = family.a1_sq, family.a2_sq
    l1, l2 = float(c[0]), float(c[1])
    tol = 1e-12 * a1
    if not (-a1 - tol <= l1 <= -a2 + tol and l2 >= -a2 - tol and l1 <= l2 + tol):
        raise OutOfRangeError(f"elliptic coordinates {(l1, l2)} out of range")
    d = a1 - a2
    sq1 = (a1 + l1) * (a1 + l2) / d
    sq2 = -(a2 + l1) * (a2 + l2) / d
    if sq1 < -tol * a1 or sq2 < -tol * a1:
        raise OutOfRangeError(f"elliptic coordinates {(l1, l2)} give a negative square")
    return Point2(signs[0] * math.sqrt(max(sq1, 0.0)), signs[1] * math.sqrt(max(sq2, 0.0)))


def ivory_scales(family: ConfocalFamily, lam: float, mu: float) -> np.ndarray:
    """Diagonal of the Ivory affinity taking member ``lam`` to member ``mu``."""
    family.require_foci()
    src, dst = ConfocalConic(family, lam), ConfocalConic(family, mu)
    ratios = np.array(dst.axes_sq) / np.array(src.axes_sq)
    if np.any(ratios <= 0):
        raise OutOfRangeError(
            f"lambda={lam!r} and mu={mu!r} are not both ellipses or both hyperbolas"
        )
    return np.sqrt(ratios)


def ivory_map(family: ConfocalFamily, lam: float, mu: float, p) -> Point2:
    s = ivory_scales(family, lam, mu)
    return Point2(s[0] * p[0], s[1] * p[1])


def _normalize_matrix(m: np.ndarray) -> np.ndarray:
    m = 0.5 * (m + m.T)
    norm = np.linalg.norm(m)
    if norm == 0.0 or not np.isfinite(norm):
        raise PonceletError("conic matrix must be finite and nonzero")
    m = m / norm
    flat = m.ravel()
    nz = np.flatnonzero(np.abs(flat) > 1e-14)
    if nz.size and flat[nz[0]] < 0:
        m = -m
    return m


@dataclass(frozen=True, eq=False)
class GeneralConic:
    """Homogeneous symmetric 3x3 matrix, unit Frobenius norm, first nonzero entry positive."""

    m: np.ndarray = field(repr=False)

    def __post_init__(self):
        m = np.array(self.m, dtype=float)
        if m.shape != (3, 3):
            raise PonceletError("conic matrix must be 3x3")
        m = _normalize_matrix(m)
        m.setflags(write=False)
        object.__setattr__(self, "m", m)

    @classmethod
    def from_coeffs(cls, a, b, c, d, e, f) -> "GeneralConic":
        """From ``a x^2 + b xy + c y^2 + d x + e y + f = 0``."""
        return cls(np.array([[a, b / 2, d / 2], [b / 2, c, e / 2], [d / 2, e / 2, f]]))

    @property
    def coeffs(self) -> np.ndarray:
        """The homogeneous 6-vector ``(a, b, c, d, e, f)``."""
        m = self.m
        return np.array([m[0, 0], 2 * m[0, 1], m[1, 1], 2 * m[0, 2], 2 * m[1, 2], m[2, 2]])

    def evaluate(self, p) -> float:
        v = np.array([p[0], p[1], 1.0])
        return float(v @ self.m @ v)

    def distance(self, other: "GeneralConic") -> float:
        """Frobenius distance between the normalized matrices."""
        return float(np.linalg.norm(self.m - other.m))

    def __repr__(self):
        return f"GeneralConic({np.array2string(self.m, precision=6)})"


def to_general(conic: ConfocalConic) -> GeneralConic:
    a, b = conic.axes_sq
    return GeneralConic(np.diag([1.0 / a, 1.0 / b, -1.0]))


def adjugate(m: np.ndarray) -> np.ndarray:
    """Classical adjugate of a 3x3 matrix via cofactors."""
    m = np.asarray(m, dtype=float)
    out = np.empty((3, 3))
    for i in range(3):
        for j in range(3):
            rows = [r for r in range(3) if r != i]
            cols = [c for c in range(3) if c != j]
            minor = m[np.ix_(rows, cols)]
            out[j, i] = (-1) ** (i + j) * (minor[0, 0] * minor[1, 1] - minor[0, 1] * minor[1, 0])
    return out


def dual_conic(c: GeneralConic, tol: float = 1e-12) -> GeneralConic:
    # judged by conditioning, so very flat but genuine ellipses still dualize
    sv = np.linalg.svd(c.m, compute_uv=False)
    if sv[2] < tol * sv[0]:
        raise DegenerateConicError("singular conic has no dual conic")
    return GeneralConic(adjugate(c.m))
