"""Projective maps, reduction of a nested ellipse pair to a confocal pair, and
the Poncelet porism in an arbitrary projective frame.

Points are homogeneous columns ``(x, y, 1)``, lines are covectors
``(cos phi, sin phi, -p)``, conics are symmetric 3x3 matrices. A map ``T``
acts by ``v -> T v``, ``l -> T^-T l`` and ``M -> T^-T M T^-1``.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import NamedTuple

import numpy as np
from scipy import linalg

from .canonical import DEFAULT_RESOLUTION, rational_approximation, rotation_number
from .conics import ConfocalConic, ConfocalFamily, GeneralConic, Point2, adjugate, to_general
from .errors import AtInfinityError, NonGenericPairError, PonceletError
from .linespace import OrientedLine

#: homogeneous weight (relative) below which an image is at infinity
INFINITY_TOL = 1e-12
#: relative eigenvalue gap below which two pencil roots count as equal
EIG_SEP = 1e-8
#: relative imaginary part tolerated in the pencil spectrum
IMAG_TOL = 1e-10
#: normalize_pair round-trip contract
PAIR_TOL = 1e-8
#: closure tolerance for the original-frame porism check
PORISM_TOL = 1e-7
NESTING_SAMPLES = 64


@dataclass(frozen=True, eq=False)
class ProjectiveMap:
    t: np.ndarray = field(repr=False)

    def __post_init__(self):
        t = np.array(self.t, dtype=float)
        if t.shape != (3, 3) or not np.all(np.isfinite(t)):
            raise PonceletError("projective map must be a finite 3x3 matrix")
        cond = np.linalg.cond(t)
        if not cond < 1e12:
            raise PonceletError(f"projective map is singular (condition {cond:.3e})")
        t = t / np.linalg.norm(t)
        t.setflags(write=False)
        object.__setattr__(self, "t", t)

    @classmethod
    def identity(cls) -> "ProjectiveMap":
        return cls(np.eye(3))

    @property
    def condition(self) -> float:
        return float(np.linalg.cond(self.t))

    @property
    def inverse(self) -> "ProjectiveMap":
        return ProjectiveMap(np.linalg.inv(self.t))

    def compose(self, other: "ProjectiveMap") -> "ProjectiveMap":
        """``self`` after ``other``."""
        return ProjectiveMap(self.t @ other.t)

    def __repr__(self):
        return f"ProjectiveMap({np.array2string(self.t, precision=6)})"


def apply_map(pm: ProjectiveMap, obj):
    """Image of a point, an oriented line or a conic.

    Line orientation follows the sign of the transformed covector.
    """
    t = pm.t
    if isinstance(obj, GeneralConic):
        ti = np.linalg.inv(t)
        return GeneralConic(ti.T @ obj.m @ ti)
    if isinstance(obj, OrientedLine):
        cov = np.array([math.cos(obj.phi), math.sin(obj.phi), -obj.p])
        img = np.linalg.solve(t.T, cov)
        norm = math.hypot(img[0], img[1])
        if norm <= INFINITY_TOL * np.linalg.norm(img):
            raise AtInfinityError("image is the line at infinity")
        return OrientedLine.make(math.atan2(img[1], img[0]), -img[2] / norm)
    v = t @ np.array([obj[0], obj[1], 1.0])
    if abs(v[2]) <= INFINITY_TOL * np.linalg.norm(v):
        raise AtInfinityError("image point is at infinity")
    return Point2(v[0] / v[2], v[1] / v[2])


# ----------------------------------------------------------------- ellipses


def _oriented(conic: GeneralConic) -> np.ndarray:
    """Matrix with positive-definite 2x2 block; raises unless a real ellipse."""
    m = np.array(conic.m)
    ev = np.linalg.eigvalsh(m[:2, :2])
    if ev[0] < 0 and ev[1] < 0:
        m = -m
        ev = -ev[::-1]
    if not ev[0] > 1e-14 * ev[1]:
        raise PonceletError("conic is not an ellipse")
    if not np.linalg.det(m) < 0:
        raise PonceletError("conic has no real points")
    return m


def ellipse_center(conic: GeneralConic) -> np.ndarray:
    m = _oriented(conic)
    return -np.linalg.solve(m[:2, :2], m[:2, 2])


def ellipse_points(conic: GeneralConic, theta) -> np.ndarray:
    """Points of an ellipse at parameters ``theta``, shape ``(len(theta), 2)``."""
    m = _oriented(conic)
    c = -np.linalg.solve(m[:2, :2], m[:2, 2])
    rhs = -(m[2, 2] + m[:2, 2] @ c)
    ev, rot = np.linalg.eigh(m[:2, :2])
    theta = np.atleast_1d(np.asarray(theta, dtype=float))
    unit = np.stack([np.cos(theta), np.sin(theta)], axis=-1) * np.sqrt(rhs / ev)
    return c + unit @ rot.T


def ellipse_radius(conic: GeneralConic) -> float:
    """Semi-major axis."""
    m = _oriented(conic)
    c = -np.linalg.solve(m[:2, :2], m[:2, 2])
    rhs = -(m[2, 2] + m[:2, 2] @ c)
    return float(math.sqrt(rhs / np.linalg.eigvalsh(m[:2, :2])[0]))


def is_nested(gamma: GeneralConic, Gamma: GeneralConic, samples: int = NESTING_SAMPLES) -> bool:
    """Whether ``gamma`` lies strictly inside ``Gamma`` (checked by sampling)."""
    pts = ellipse_points(gamma, np.arange(samples) * (2 * math.pi / samples))
    mG = _oriented(Gamma)
    hom = np.column_stack([pts, np.ones(len(pts))])
    vals = np.einsum("ij,jk,ik->i", hom, mG, hom)
    return bool(np.all(vals < 0))


# ------------------------------------------------------------ normalization


class NormalizedPair(NamedTuple):
    map: ProjectiveMap
    family: ConfocalFamily
    lambda_gamma: float
    lambda_Gamma: float


def _eigenframe(mg: np.ndarray, mG: np.ndarray) -> np.ndarray:
    """Columns diagonalizing both forms (the common self-polar triangle)."""
    w, v = linalg.eig(mg, mG)
    scale = np.max(np.abs(w))
    if np.any(np.abs(w.imag) > IMAG_TOL * scale):
        raise NonGenericPairError("pencil has complex roots", spectrum=w)
    w, v = w.real, v.real
    order = np.argsort(w)
    w, v = w[order], v[:, order]
    gaps = np.diff(w) / scale
    if np.all(gaps > EIG_SEP):
        return v
    if np.sum(gaps <= EIG_SEP) > 1:
        raise NonGenericPairError("pencil has a triple root", spectrum=w)
    # one double root: accept only a full two-dimensional eigenspace
    i = int(np.argmin(gaps))
    root = 0.5 * (w[i] + w[i + 1])
    _, sv, vt = np.linalg.svd(mg - root * mG)
    if sv[1] > EIG_SEP * sv[0]:
        raise NonGenericPairError("pencil has a defective double root", spectrum=w)
    basis = vt[1:].T
    # make the eigenspace basis orthogonal for the outer form as well
    _, rot = np.linalg.eigh(basis.T @ mG @ basis)
    basis = basis @ rot
    single = v[:, 2 if i == 0 else 0][:, None]
    return np.hstack([basis, single]) if i == 0 else np.hstack([single, basis])


def normalize_pair(gamma: GeneralConic, Gamma: GeneralConic) -> NormalizedPair:
    """Projective map taking a nested ellipse pair to a confocal pair.

    In the common self-polar frame both conics are diagonal. The vertex
    inside both becomes the center, and the two remaining axis scales
    (with unit product) are fixed by requiring equal focal distances. The
    family is read off the image of ``gamma``, so ``lambda_gamma = 0``.
    """
    mg, mG = _oriented(gamma), _oriented(Gamma)
    if not is_nested(gamma, Gamma):
        raise PonceletError("gamma must lie strictly inside Gamma")
    v = _eigenframe(mg, mG)
    g = np.einsum("ij,jk,ki->i", v.T, mG, v)
    e = np.einsum("ij,jk,ki->i", v.T, mg, v)
    inner = np.flatnonzero(g < 0)
    if len(inner) != 1 or e[inner[0]] >= 0 or np.any(np.delete(e, inner[0]) <= 0):
        raise NonGenericPairError("no common center in the self-polar frame", spectrum=np.array([g, e]))
    j3 = int(inner[0])
    i1, i2 = [i for i in range(3) if i != j3]
    cols = v[:, [i1, i2, j3]].copy()
    g, e = g[[i1, i2, j3]], e[[i1, i2, j3]]
    # column scales do not change the diagonal signs; pick Euclidean-friendly ones
    for j in (0, 1):
        nrm = math.hypot(cols[0, j], cols[1, j])
        s = nrm if nrm > 1e-12 * np.linalg.norm(cols[:, j]) else np.linalg.norm(cols[:, j])
        g[j] /= s * s
        e[j] /= s * s
        cols[:, j] /= s
    s = cols[2, 2] if abs(cols[2, 2]) > 1e-12 * np.linalg.norm(cols[:, 2]) else np.linalg.norm(cols[:, 2])
    g[2] /= s * s
    e[2] /= s * s
    cols[:, 2] /= s
    # unscaled squared semi-axes in this frame
    AG, BG = -g[2] / g[0], -g[2] / g[1]
    Ag, Bg = -e[2] / e[0], -e[2] / e[1]
    alpha, beta = AG - Ag, BG - Bg
    if not (alpha > 0 and beta > 0):
        raise NonGenericPairError("pair is not nested in its self-polar frame", spectrum=np.array([alpha, beta]))
    s1sq, s2sq = math.sqrt(beta / alpha), math.sqrt(alpha / beta)
    Ag, Bg, AG, BG = Ag * s1sq, Bg * s2sq, AG * s1sq, BG * s2sq
    sc = np.diag([math.sqrt(s1sq), math.sqrt(s2sq), 1.0])
    if Ag < Bg:
        sc = sc[[1, 0, 2]]
        Ag, Bg, AG, BG = Bg, Ag, BG, AG
    t = sc @ np.linalg.inv(cols)
    family = ConfocalFamily(Ag, Bg)
    lam_G = float(0.5 * ((AG - Ag) + (BG - Bg)))
    pm = ProjectiveMap(t)
    for src, lam in ((gamma, 0.0), (Gamma, lam_G)):
        err = apply_map(pm, src).distance(to_general(ConfocalConic(family, lam)))
        if err > PAIR_TOL:
            raise PonceletError(f"normalization round trip failed ({err:.3e})")
    return NormalizedPair(pm, family, 0.0, lam_G)


def random_map(rng: np.random.Generator, conics=(), spread: float = 0.3,
               perspective: float = 0.05, tries: int = 100) -> ProjectiveMap:
    """Random well-conditioned map keeping every given ellipse an ellipse."""
    for _ in range(tries):
        t = np.eye(3) + spread * rng.standard_normal((3, 3))
        t[2, :2] = perspective * rng.standard_normal(2)
        t[2, 2] = 1.0
        if np.linalg.cond(t) > 1e3:
            continue
        pm = ProjectiveMap(t)
        try:
            for c in conics:
                _oriented(apply_map(pm, c))
        except PonceletError:
            continue
        return pm
    raise PonceletError("no admissible random map found")


# -------------------------------------------------------------------- porism


def _other_intersection(m: np.ndarray, point: np.ndarray, cov: np.ndarray) -> np.ndarray:
    d = np.array([-cov[1], cov[0], 0.0])
    d /= np.linalg.norm(d)
    p = np.array([point[0], point[1], 1.0])
    a2, a1, a0 = d @ m @ d, 2.0 * (d @ m @ p), p @ m @ p
    if a2 == 0.0:
        raise PonceletError("line is asymptotic to the conic")
    disc = max(a1 * a1 - 4.0 * a2 * a0, 0.0)
    q = -0.5 * (a1 + math.copysign(math.sqrt(disc), a1))
    roots = (q / a2, a0 / q if q != 0.0 else 0.0)
    t = max(roots, key=abs)
    return point + t * d[:2]


def _tangent_covectors(dual: np.ndarray, point: np.ndarray):
    p = np.array([point[0], point[1], 1.0])
    k = np.column_stack([np.cross(p, [1.0, 0.0, 0.0]), np.cross(p, [0.0, 1.0, 0.0])])
    h = k.T @ dual @ k
    h11, h12, h22 = h[0, 0], h[0, 1], h[1, 1]
    disc = h12 * h12 - h11 * h22
    if disc < 0:
        raise PonceletError("point lies inside the inner conic")
    r = math.sqrt(disc)
    if abs(h22) >= abs(h11):
        dirs = [(h22, -h12 + r), (h22, -h12 - r)]
    else:
        dirs = [(-h12 + r, h11), (-h12 - r, h11)]
    out = []
    for u in dirs:
        c = k @ np.asarray(u, dtype=float)
        out.append(c / np.linalg.norm(c))
    return out


def porism_defect(gamma: GeneralConic, Gamma: GeneralConic, n: int, starts: int = 20,
                  seed: int = 0) -> float:
    """Largest ``|P_n - P_0| / R`` over random starts on ``Gamma``.

    Each step follows the current tangent line to ``gamma`` to its second
    point on ``Gamma`` and switches to the other tangent there. ``R`` is
    the semi-major axis of ``Gamma``.
    """
    rng = np.random.default_rng(seed)
    mG = np.array(Gamma.m)
    dual = adjugate(gamma.m)
    radius = ellipse_radius(Gamma)
    worst = 0.0
    for theta in rng.uniform(0.0, 2 * math.pi, int(starts)):
        p0 = ellipse_points(Gamma, [theta])[0]
        p, cov = p0, _tangent_covectors(dual, p0)[0]
        for _ in range(int(n)):
            p = _other_intersection(mG, p, cov)
            a, b = _tangent_covectors(dual, p)
            cov = a if min(np.linalg.norm(a - cov), np.linalg.norm(a + cov)) > \
                min(np.linalg.norm(b - cov), np.linalg.norm(b + cov)) else b
        worst = max(worst, float(np.hypot(*(p - p0))) / radius)
    return worst


class ClosureResult(NamedTuple):
    n: int
    k: int
    c: float
    defect: float


def closure_test(gamma: GeneralConic, Gamma: GeneralConic, n_max: int,
                 resolution: int = DEFAULT_RESOLUTION, starts: int = 20, seed: int = 0):
    """``ClosureResult`` if the pair is Poncelet with period ``<= n_max``, else ``None``.

    The rotation number is computed in the confocal frame and matched to a
    rational with denominator ``<= n_max`` within 1e-9. A match is then
    confirmed by chasing polygons in the original frame; a defect above
    1e-7 raises.
    """
    norm = normalize_pair(gamma, Gamma)
    c = rotation_number(norm.family, norm.lambda_gamma, norm.lambda_Gamma, resolution)
    frac = rational_approximation(c, n_max, 1e-9)
    if frac is None:
        return None
    n, k = frac
    defect = porism_defect(gamma, Gamma, n, starts, seed)
    if defect > PORISM_TOL:
        raise PonceletError(f"rotation number {k}/{n} but original-frame defect {defect:.3e}")
    return ClosureResult(n, k, c, defect)
