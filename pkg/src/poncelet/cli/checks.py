"""The ``verify`` suite: every invariant at the configured parameters.

Each check measures one number and compares it with a tolerance. Checks
that need distinct foci are skipped for circle families, and Q-set checks
skip sets lying on a coordinate axis.
"""
from __future__ import annotations

import math
import zlib
from dataclasses import dataclass

import numpy as np

from .. import canonical, grid, projective
from ..conics import (
    ConfocalConic,
    ConfocalFamily,
    GeneralConic,
    elliptic_coords,
    from_elliptic,
    ivory_map,
    to_general,
)
from ..linespace import (
    OrientedLine,
    angle_diff,
    appendix1_gap,
    caustic_parameter,
    chord,
    jacobian_det,
    reflect,
    reflect_many,
    support,
)
from .config import RunConfig

TOLERANCES = {
    "mirrored_foci": 1e-10,
    "caustic_invariance": 1e-10,
    "closure": 1e-9,
    "commutation": 1e-9,
    "confocality": 1e-6,
    "confocality.dual_pencil": 1e-8,
    "elliptic.roundtrip": 1e-10,
    "fit": 1e-8,
    "graves.string": 1e-6,
    "grid.coordinates": 1e-9,
    "grid.count": 0.0,
    "grid.vertices": 1e-9,
    "ivory": 1e-8,
    "ivory.lambda1": 1e-10,
    "measure_preservation": 1e-5,
    "orthogonality.Q": 1e-6,
    "orthogonality.table": 1e-8,
    "periodic_caustic": 1e-8,
    "porism.closure": 1e-7,
    "porism.rotation_invariance": 1e-8,
    "shift.central_symmetry": 1e-10,
    "shift.spread": 1e-8,
}

DEGENERATE_FAMILY = "skipped (degenerate family)"
AXIS_SET = "skipped (set lies on a coordinate axis)"


@dataclass(frozen=True)
class Check:
    name: str
    reference: str
    measured: float | None
    tolerance: float
    comparator: str = "<="
    status: str = "pass"  # pass | fail | skip
    note: str = ""

    def as_dict(self) -> dict:
        return {
            "name": self.name,
            "reference": self.reference,
            "measured": self.measured,
            "tolerance": self.tolerance,
            "comparator": self.comparator,
            "status": self.status,
            "note": self.note,
        }


@dataclass(frozen=True)
class VerificationReport:
    checks: tuple
    config: dict

    @property
    def passed(self) -> bool:
        return all(c.status != "fail" for c in self.checks)

    @property
    def failed(self) -> list:
        return [c.name for c in self.checks if c.status == "fail"]

    def as_dict(self) -> dict:
        return {
            "config": self.config,
            "checks": [c.as_dict() for c in self.checks],
            "failed": self.failed,
            "status": "pass" if self.passed else "fail",
        }


_OPS = {
    "<=": lambda m, t: m <= t,
    "<": lambda m, t: m < t,
    ">": lambda m, t: m > t,
}


class _Suite:
    def __init__(self, cfg: RunConfig):
        self.cfg = cfg
        self.out = []

    def tol(self, key: str) -> float:
        return self.cfg.tolerances.get(key, TOLERANCES[key])

    def rng(self, name: str) -> np.random.Generator:
        return np.random.default_rng([self.cfg.seed, zlib.crc32(name.encode())])

    def add(self, name, reference, measured, tol_key, comparator="<="):
        tol = self.tol(tol_key)
        m = float(measured)
        ok = (not math.isnan(m)) and _OPS[comparator](m, tol)
        self.out.append(Check(name, reference, m, tol, comparator, "pass" if ok else "fail"))

    def skip(self, name, reference, tol_key, note):
        self.out.append(Check(name, reference, None, self.tol(tol_key), "<=", "skip", note))

    def guarded(self, name, reference, tol_key, fn, comparator="<="):
        """Run ``fn``; any exception is a failed check carrying the message."""
        try:
            value = fn()
        except Exception as exc:  # a check that cannot be evaluated has failed
            self.out.append(Check(name, reference, None, self.tol(tol_key), comparator, "fail",
                                  f"{type(exc).__name__}: {exc}"))
            return
        self.add(name, reference, value, tol_key, comparator)


def _random_lines(rng, family, lambda_Gamma, count, inner=0.999):
    phi = rng.uniform(0.0, 2 * math.pi, count)
    p = rng.uniform(-inner, inner, count) * support(family, lambda_Gamma, phi)
    return phi, p


def run_verify(cfg: RunConfig) -> VerificationReport:
    s = _Suite(cfg)
    F = ConfocalFamily(cfg.a1sq, cfg.a2sq)
    lG = cfg.lambda_gamma
    table = ConfocalConic(F, lG)
    A, B = table.axes_sq
    circle = F.focal_sq <= 1e-9 * F.a1_sq
    delta = cfg.perturb
    declared = F if delta == 0 else ConfocalFamily(A * (1 + delta) - lG, cfg.a2sq)
    declared_axes = (A * (1 + delta), B)
    scale = math.sqrt(F.a1_sq)

    # ---- line space
    def caustic_inv():
        phi, p = _random_lines(s.rng("caustic_invariance"), F, lG, 2000)
        before = caustic_parameter(F, (phi, p))
        phi2, p2, ok = reflect_many(phi, p, table)
        return float(np.max(np.abs(caustic_parameter(F, (phi2, p2)) - before)[ok])) / F.a1_sq

    s.guarded("caustic_invariance", "caustic invariance of confocal conics", "caustic_invariance", caustic_inv)

    def jacobian():
        phi, p = _random_lines(s.rng("measure_preservation"), F, lG, 200, inner=0.95)
        return max(abs(jacobian_det(OrientedLine(a, b), table) - 1.0) for a, b in zip(phi, p))

    s.guarded("measure_preservation", "billiard map preserves dp ^ dphi", "measure_preservation", jacobian)

    if circle:
        s.skip("mirrored_foci", "mirrored-foci congruence", "mirrored_foci", DEGENERATE_FAMILY)
    else:
        def mirrored():
            phi, p = _random_lines(s.rng("mirrored_foci"), F, lG, 200, inner=0.95)
            worst = 0.0
            for a, b in zip(phi, p):
                line = OrientedLine(a, b)
                c1 = chord(line, table)
                c2 = chord(reflect(line, table), table)
                worst = max(worst, appendix1_gap(c1, c2, F))
            return worst

        s.guarded("mirrored_foci", "mirrored-foci congruence", "mirrored_foci", mirrored)

    # ---- caustic and chart
    poly = grid.build_polygon(F, lG, cfg.n, cfg.k, cfg.x0, cfg.resolution)
    lam_c = poly.lambda_caustic
    chart = poly.chart

    def spread():
        shifts = canonical.shift_samples(chart, lG, s.rng("shift.spread").uniform(0, 1, 1000))
        ref = shifts[0]
        shifts = ref + np.mod(shifts - ref + 0.5, 1.0) - 0.5
        return float(shifts.max() - shifts.min())

    s.guarded("shift.spread", "billiard map is a shift in the canonical coordinate", "shift.spread", spread)

    def central():
        phi = s.rng("shift.central_symmetry").uniform(0, 2 * math.pi, 1000)
        d = np.mod(chart.eval(phi + math.pi) - chart.eval(phi) - 0.5 + 0.5, 1.0) - 0.5
        return float(np.max(np.abs(d)))

    s.guarded("shift.central_symmetry", "x -> x + 1/2 is the central symmetry", "shift.central_symmetry", central)

    def commutation():
        rng = s.rng("commutation")
        lG2 = lG + (F.a1_sq + lG)
        t1, t2 = table, ConfocalConic(F, lG2)
        lam = rng.uniform(-F.a2_sq, lG, 100) * (1 - 1e-6)
        phi = rng.uniform(0, 2 * math.pi, 100)
        p = np.sqrt(F.a1_sq * np.cos(phi) ** 2 + F.a2_sq * np.sin(phi) ** 2 + lam)
        a_phi, a_p, ok1 = reflect_many(*reflect_many(phi, p, t1)[:2], t2)
        b_phi, b_p, ok2 = reflect_many(*reflect_many(phi, p, t2)[:2], t1)
        if not (ok1.all() and ok2.all()):
            return math.inf
        return float(np.max(np.abs(angle_diff(a_phi, b_phi)) + np.abs(a_p - b_p) / scale))

    s.guarded("commutation", "confocal billiard maps commute", "commutation", commutation)

    def closure():
        phis = s.rng("closure").uniform(0, 2 * math.pi, 100)
        return float(canonical.closure_defect(F, lam_c, lG, cfg.n, phis, extended=True).max())

    s.guarded("closure", "Poncelet closure", "closure", closure)

    # ---- grid
    sets = grid.grid_sets(poly)
    n = cfg.n
    P = [g for g in sets if g.kind == "P"]
    Q = [g for g in sets if g.kind == "Q"]

    def count():
        bad = abs(grid.distinct_points(sets) - n * (n + 1) // 2)
        bad += sum(abs(len(g) - n) for g in P) + sum(abs(len(g) - (n + 1) // 2) for g in Q)
        bad += abs(len(P) - (n + 1) // 2) + abs(len(Q) - n)
        return bad

    s.guarded("grid.count", "n(n+1)/2 grid points, |P_k| = n, |Q_k| = (n+1)/2", "grid.count", count)
    s.guarded("grid.vertices", "polygon vertices lie on the table", "grid.vertices", poly.vertex_defect)

    def coords():
        worst = 0.0
        for c in grid.grid_xy_coords(poly):
            ex, ey = grid.expected_xy(n, *c.indices, poly.x0)
            worst = max(worst, grid.chart_distance(c.x, ex), abs(c.y - ey))
        return worst

    s.guarded("grid.coordinates", "grid coordinates (k/2n + j/n, k/2n)", "grid.coordinates", coords)

    fits = {}
    for g in P:
        try:
            fits[("P", g.index)] = grid.fit_set(g)
        except Exception as exc:
            fits[("P", g.index)] = exc
    for g in P:
        name = f"P{g.index}"
        fc = fits[("P", g.index)]
        s.guarded(f"fit.{name}", "P-sets lie on conics", "fit", lambda fc=fc: _unwrap(fc).residual)
        s.guarded(f"confocality.{name}", "P-sets lie on confocal ellipses", "confocality",
                  lambda fc=fc: grid.confocality_residual(declared, _unwrap(fc)))

    lamP = []

    def nesting():
        lamP[:] = [grid.fitted_lambda(F, _unwrap(fits[("P", g.index)])) for g in P]
        return float(np.min(np.diff(lamP)))

    s.guarded("nesting.P", "P-ellipses are nested", "grid.count", nesting, comparator=">")

    for g in P[1:]:
        def periodic(g=g):
            lam = grid.fitted_lambda(F, _unwrap(fits[("P", g.index)]))
            c = canonical.rotation_number(F, lam_c, lam, chart=chart)
            return abs(c - g.index / n)

        s.guarded(f"periodic_caustic.P{g.index}", "P_k ellipse carries rotation number k/n",
                  "periodic_caustic", periodic)

    good_q = [g for g in Q if not g.axis_degenerate]
    if circle:
        for name, tk in (("fit.Q", "fit"), ("confocality.Q", "confocality"), ("orthogonality.Q", "orthogonality.Q"),
                         ("signature.Q", "grid.count"), ("disjoint.Q", "grid.count"), ("ivory.P", "ivory"),
                         ("ivory.Q", "ivory"), ("ivory.lambda1", "ivory.lambda1"),
                         ("elliptic.roundtrip", "elliptic.roundtrip")):
            s.skip(name, "needs distinct foci", tk, DEGENERATE_FAMILY)
    else:
        for g in Q:
            if g.axis_degenerate:
                for prefix, tk in (("fit", "fit"), ("confocality", "confocality"),
                                   ("orthogonality", "orthogonality.Q")):
                    s.skip(f"{prefix}.Q{g.index}", "Q-sets lie on confocal hyperbolas", tk, AXIS_SET)
                continue
            try:
                fits[("Q", g.index)] = grid.fit_set(g)
            except Exception as exc:
                fits[("Q", g.index)] = exc
            fc = fits[("Q", g.index)]
            s.guarded(f"fit.Q{g.index}", "Q-sets lie on conics", "fit", lambda fc=fc: _unwrap(fc).residual)
            s.guarded(f"confocality.Q{g.index}", "Q-sets lie on confocal hyperbolas", "confocality",
                      lambda fc=fc: grid.confocality_residual(declared, _unwrap(fc)))

            def ortho(g=g, fc=fc):
                conic = _unwrap(fc).conic
                return max(grid.hyperbola_normal_gap(declared, conic, q) for q in g.finite_points)

            s.guarded(f"orthogonality.Q{g.index}", "Q-curves cross the confocal ellipses at right angles",
                      "orthogonality.Q", ortho)

        def signature():
            return max(grid.confocality(F, _unwrap(fits[("Q", g.index)])).s1 *
                       grid.confocality(F, _unwrap(fits[("Q", g.index)])).s2 for g in good_q)

        s.guarded("signature.Q", "Q-conics are hyperbolas", "grid.count", signature, comparator="<")

        def disjoint():
            lams, curves = [], []
            for g in good_q:
                cf = grid.confocality(F, _unwrap(fits[("Q", g.index)]))
                lam = grid.fitted_lambda(F, _unwrap(fits[("Q", g.index)]))
                if any(abs(lam - other) <= 1e-9 * F.a1_sq for other in lams):
                    continue  # the same hyperbola carries two symmetric sets
                lams.append(lam)
                pts = grid.sample_hyperbola(cf.s1, cf.s2, math.sqrt(A), math.sqrt(B))
                if len(pts):
                    curves.append(pts)
            if len(curves) < 2:
                return math.inf
            return grid.min_separation(curves)

        s.guarded("disjoint.Q", "distinct Q-hyperbolas are disjoint", "grid.count", disjoint, comparator=">")

        def ivory_sets(group):
            worst = 0.0
            for a in group:
                for b in group:
                    if a.index != b.index:
                        worst = max(worst, grid.equivalence_gap(F, a, b, x0=poly.x0, n=n))
            return worst

        s.guarded("ivory.P", "P-sets are equivalent under +-A", "ivory", lambda: ivory_sets(P))
        s.guarded("ivory.Q", "Q-sets are equivalent under signed A", "ivory", lambda: ivory_sets(good_q))

        def lambda1():
            rng = s.rng("ivory.lambda1")
            worst = 0.0
            for _ in range(1000):
                lam, mu = rng.uniform(-F.a2_sq * 0.99, 3 * F.a1_sq, 2)
                t = rng.uniform(0, 2 * math.pi)
                pt = ConfocalConic(F, lam).point_at(t)
                img = ivory_map(F, lam, mu, pt)
                worst = max(worst, abs(elliptic_coords(F, pt).lambda1 - elliptic_coords(F, img).lambda1))
            return worst / F.a1_sq

        s.guarded("ivory.lambda1", "Ivory map keeps the hyperbola coordinate", "ivory.lambda1", lambda1)

        def roundtrip():
            rng = s.rng("elliptic.roundtrip")
            pts = rng.uniform(-2, 2, (1000, 2)) * math.sqrt(A)
            worst = 0.0
            for q in pts:
                back = from_elliptic(F, elliptic_coords(F, q), np.sign(q) + (q == 0))
                worst = max(worst, math.hypot(back[0] - q[0], back[1] - q[1]))
            return worst / scale

        s.guarded("elliptic.roundtrip", "elliptic coordinates invert", "elliptic.roundtrip", roundtrip)

    if P and not circle or circle:
        def dual():
            worst = 0.0
            for key, fc in fits.items():
                worst = max(worst, grid.dual_pencil_ratio(declared, _unwrap(fc).conic))
            return worst

        s.guarded("confocality.dual_pencil", "duals of the grid conics lie in the family's pencil",
                  "confocality.dual_pencil", dual)

    def table_conf():
        conic = GeneralConic(np.diag([1.0 / declared_axes[0], 1.0 / declared_axes[1], -1.0]))
        return grid.confocality_residual(F, conic)

    s.guarded("confocality.table", "table is confocal with the caustic", "confocality", table_conf)

    # ---- string construction and orthogonality
    def graves():
        L = canonical.string_length(F, lam_c, lG)
        pts = canonical.string_curve(F, lam_c, L, samples=cfg.samples or 64)
        ang = np.arctan2(pts[:, 1], pts[:, 0])
        r0 = 1.0 / np.sqrt(np.cos(ang) ** 2 / A + np.sin(ang) ** 2 / B)
        return float(np.max(np.abs(np.hypot(pts[:, 0], pts[:, 1]) - r0))) / scale

    s.guarded("graves.string", "string construction gives a confocal ellipse", "graves.string", graves)

    def ortho_table():
        phis = s.rng("orthogonality.table").uniform(0, 2 * math.pi, 100)
        outer = declared_axes if delta else None
        return max(canonical.orthogonality_gap(F, lam_c, lG, float(t), outer_axes_sq=outer) for t in phis)

    s.guarded("orthogonality.table", "pq is orthogonal to the table", "orthogonality.table", ortho_table)

    # ---- projective porism
    g0, G0 = to_general(ConfocalConic(F, lam_c)), to_general(table)
    results = []

    def porism():
        rng = s.rng("porism")
        worst = 0.0
        for _ in range(3):
            pm = projective.random_map(rng, (g0, G0))
            res = projective.closure_test(projective.apply_map(pm, g0), projective.apply_map(pm, G0),
                                          n_max=max(2 * n, 12), resolution=cfg.resolution)
            if res is None or (res.n, res.k) != (n, cfg.k):
                return math.inf
            results.append(res)
            worst = max(worst, res.defect)
        return worst

    s.guarded("porism.closure", "Poncelet porism in a projective frame", "porism.closure", porism)
    s.guarded("porism.rotation_invariance", "rotation number is projectively invariant",
              "porism.rotation_invariance",
              lambda: max(abs(r.c - cfg.k / n) for r in results) if results else math.inf)

    checks = tuple(sorted(s.out, key=lambda c: c.name))
    return VerificationReport(checks, cfg.as_dict())


def _unwrap(value):
    if isinstance(value, Exception):
        raise value
    return value


def render_text(report: VerificationReport, color: bool) -> str:
    colors = {"pass": "\033[32m", "fail": "\033[31m", "skip": "\033[33m"}
    lines = []
    width = max(len(c.name) for c in report.checks)
    for c in report.checks:
        tag = c.status.upper()
        if color:
            tag = f"{colors[c.status]}{tag}\033[0m"
        if c.status == "skip":
            detail = c.note
        else:
            m = "n/a" if c.measured is None else f"{c.measured:.3e}"
            detail = f"{m} {c.comparator} {c.tolerance:.1e}"
            if c.note:
                detail += f"  ({c.note})"
        lines.append(f"{tag:>4}  {c.name:<{width}}  {detail}  [{c.reference}]")
    status = "PASS" if report.passed else "FAIL"
    lines.append(f"overall: {status} ({sum(c.status == 'pass' for c in report.checks)} passed, "
                 f"{len(report.failed)} failed, {sum(c.status == 'skip' for c in report.checks)} skipped)")
    if report.failed:
        lines.append("failed: " + ", ".join(report.failed))
    return "\n".join(lines) + "\n"
