"""Acceptance suite: one test per criterion at the stated tolerances.

Each test records a measured value against its tolerance; the run ends with
one PASS/FAIL line per criterion (see ``pytest_terminal_summary`` in
conftest.py).
"""
import json
import math

import numpy as np
import pytest

from poncelet import grid, projective
from poncelet.canonical import (
    build_chart,
    closure_defect,
    find_caustic,
    map_on_caustic,
    orthogonality_gap,
    rotation_number,
    shift_samples,
    string_curve,
    string_length,
)
from poncelet.cli import main
from poncelet.conics import ConfocalConic, ConfocalFamily, elliptic_coords, ivory_map, to_general
from poncelet.errors import PonceletError
from poncelet.linespace import (
    OrientedLine,
    appendix1_gap,
    caustic_parameter,
    chord,
    jacobian_det,
    reflect,
    reflect_many,
    support,
)

from conftest import random_chords

TWO_PI = 2 * math.pi
F = ConfocalFamily(4.0, 1.0)
TABLE = ConfocalConic(F, 0.0)
GENERIC_X0 = 0.0123
SEED = 20240601


@pytest.fixture
def rng():
    return np.random.default_rng(SEED)


def wrap(d):
    return np.abs(np.mod(np.asarray(d) + math.pi, TWO_PI) - math.pi)


def test_criterion_01_caustic_invariance(rng, criterion):
    phi, p = random_chords(rng, F, 0.0, 10_000, inner=0.999)
    lam0 = caustic_parameter(F, (phi, p))
    phi2, p2, ok = reflect_many(phi, p, TABLE)
    worst = float(np.max(np.abs(caustic_parameter(F, (phi2, p2)) - lam0)))
    tol = 1e-10 * F.a1_sq
    assert criterion(1, ok.all() and worst <= tol,
                     f"caustic invariance: max |dlambda| = {worst:.2e} over 1e4 reflections (tol {tol:.0e})")


def test_criterion_02_measure_preservation(rng, criterion):
    phi, p = random_chords(rng, F, 0.0, 1000, inner=0.95)
    dets = np.array([jacobian_det(OrientedLine(a, b), TABLE) for a, b in zip(phi, p)])
    worst = float(np.max(np.abs(dets - 1.0)))
    assert criterion(2, worst <= 1e-5, f"measure preservation: max |det - 1| = {worst:.2e} on 1e3 lines (tol 1e-5)")


def test_criterion_03_mirrored_foci_identity(rng, criterion):
    phi, p = random_chords(rng, F, 0.0, 1000, inner=0.95)
    worst = 0.0
    for a, b in zip(phi, p):
        line = OrientedLine(a, b)
        worst = max(worst, appendix1_gap(chord(line, TABLE), chord(reflect(line, TABLE), TABLE), F))
    # negative control: a wrong outgoing line from the same boundary point
    line = OrientedLine(0.4, 0.6)
    first, good = chord(line, TABLE), reflect(line, TABLE)
    turned = np.array(first.exit) + np.array([math.cos(good.phi + 1.7), math.sin(good.phi + 1.7)])
    control = appendix1_gap(first, chord(OrientedLine.through(first.exit, turned), TABLE), F)
    ok = worst <= 1e-10 and control > 1e-6
    assert criterion(3, ok, f"mirrored foci identity: max gap {worst:.2e} (tol 1e-10), control {control:.2e} (> 1e-6)")


def test_criterion_04_shift_property(rng, criterion):
    spreads, sym = [], 0.0
    for lam_c in (-0.75, find_caustic(F, 0.0, 1, 5), -0.99):
        chart = build_chart(F, lam_c, 4096)
        s = shift_samples(chart, 0.0, rng.uniform(0, 1, 1000))
        s = s[0] + np.mod(s - s[0] + 0.5, 1.0) - 0.5
        spreads.append(float(np.ptp(s)))
        phi = rng.uniform(0, TWO_PI, 1000)
        half = np.mod(chart.eval(phi + math.pi) - chart.eval(phi), 1.0)
        sym = max(sym, float(np.max(np.abs(half - 0.5))))
    ok = max(spreads) <= 1e-8 and sym <= 1e-10
    assert criterion(4, ok, f"shift property: spread {max(spreads):.2e} (tol 1e-8), "
                            f"central symmetry {sym:.2e} (tol 1e-10)")


def test_criterion_05_commutation(rng, criterion):
    phi = rng.uniform(0, TWO_PI, 100)
    worst = 0.0
    for lam_c in (-0.75, -0.3):
        ab = map_on_caustic(F, lam_c, 5.0, map_on_caustic(F, lam_c, 0.0, phi))
        ba = map_on_caustic(F, lam_c, 0.0, map_on_caustic(F, lam_c, 5.0, phi))
        worst = max(worst, float(np.max(wrap(ab - ba))))
    assert criterion(5, worst <= 1e-9, f"commutation of confocal tables: max diff {worst:.2e} at 100 starts (tol 1e-9)")


def test_criterion_06_closure(rng, criterion):
    cases = [(n, k) for n in (3, 5, 7, 9) for k in range(1, (n + 1) // 2) if math.gcd(n, k) == 1]
    worst, failures = 0.0, []
    for n, k in cases:
        try:
            lam = find_caustic(F, 0.0, k, n)
        except PonceletError as exc:
            failures.append(f"({n},{k}) {type(exc).__name__}")
            continue
        d = float(closure_defect(F, lam, 0.0, n, rng.uniform(0, TWO_PI, 100), extended=True).max())
        worst = max(worst, d)
        if d > 1e-9:
            failures.append(f"({n},{k}) defect {d:.1e}")
    circ = ConfocalFamily(1.0, 1.0)
    circle_err = abs(find_caustic(circ, 0.0, 1, 3) + 0.75)
    if circle_err > 1e-12:
        failures.append(f"circle (3,1) off by {circle_err:.1e}")
    summary = (f"closure after find_caustic, {len(cases)} (n,k) cases: worst defect {worst:.2e} (tol 1e-9), "
               f"circle (3,1) error {circle_err:.1e}")
    if failures:
        summary += "; failed: " + ", ".join(failures)
    assert criterion(6, not failures, summary), summary


def test_criterion_07_schwartz(criterion):
    fit = conf = ratio = 0.0
    problems = []
    for n in (5, 7, 9):
        for k in (1, 2):
            sets = grid.grid_sets(grid.build_polygon(F, 0.0, n, k, GENERIC_X0))
            lams = []
            for g in sets:
                fc = grid.fit_set(g)
                cf = grid.confocality(F, fc)
                fit, conf, ratio = max(fit, fc.residual), max(conf, cf.residual), max(ratio, cf.dual_ratio)
                if g.kind == "P":
                    lams.append(grid.fitted_lambda(F, fc))
                elif not cf.s1 * cf.s2 < 0:
                    problems.append(f"Q{g.index} of ({n},{k}) not hyperbolic")
            if not np.all(np.diff(lams) > 0):
                problems.append(f"P-ellipses of ({n},{k}) not nested")
    ok = fit <= 1e-8 and conf <= 1e-6 and ratio <= 1e-8 and not problems
    summary = f"grid conics: fit {fit:.2e} (tol 1e-8), confocality {conf:.2e} (tol 1e-6), pencil ratio {ratio:.2e} (tol 1e-8)"
    if problems:
        summary += "; " + ", ".join(problems)
    assert criterion(7, ok, summary), summary


def test_criterion_08_grid_coordinates(criterion):
    worst, count = 0.0, 0
    for n in (5, 7):
        poly = grid.build_polygon(F, 0.0, n, 1, 0.0)
        for c in grid.grid_xy_coords(poly):
            ex, ey = grid.expected_xy(n, *c.indices, 0.0)
            worst = max(worst, grid.chart_distance(c.x, ex), abs(c.y - ey))
            count += 1
    assert criterion(8, worst <= 1e-9, f"grid coordinates: max error {worst:.2e} over {count} entries (tol 1e-9)")


def test_criterion_09_ivory_equivalence(rng, criterion):
    gap = 0.0
    for n in (5, 7):
        sets = grid.grid_sets(grid.build_polygon(F, 0.0, n, 1, GENERIC_X0))
        for kind in "PQ":
            group = [g for g in sets if g.kind == kind]
            for a in group:
                for b in group:
                    gap = max(gap, grid.equivalence_gap(F, a, b, x0=GENERIC_X0, n=n))
    lam1 = 0.0
    for _ in range(1000):
        lam, mu = np.sort(rng.uniform(-0.99, 8.0, 2))
        q = ConfocalConic(F, lam).point_at(rng.uniform(0, TWO_PI))
        lam1 = max(lam1, abs(elliptic_coords(F, q)[0] - elliptic_coords(F, ivory_map(F, lam, mu, q))[0]))
    ok = gap <= 1e-8 and lam1 <= 1e-10
    assert criterion(9, ok, f"Ivory equivalence: set gap {gap:.2e} (tol 1e-8), lambda1 drift {lam1:.2e} (tol 1e-10)")


def test_criterion_10_string_construction(criterion):
    # radial gap to the confocal ellipse along each sample ray bounds the distance to it
    worst = 0.0
    for lam_c, lam_G in ((-0.75, 0.0), (-0.3, 5.0)):
        pts = string_curve(F, lam_c, string_length(F, lam_c, lam_G), samples=128)
        A, B = ConfocalConic(F, lam_G).axes_sq
        r = np.hypot(pts[:, 0], pts[:, 1])
        ang = np.arctan2(pts[:, 1], pts[:, 0])
        r_ell = 1.0 / np.sqrt(np.cos(ang) ** 2 / A + np.sin(ang) ** 2 / B)
        worst = max(worst, float(np.max(np.abs(r - r_ell))))
    circle_err = abs(string_length(ConfocalFamily(1.0, 1.0), -0.75, 0.0) - (2 * math.pi / 3 + math.sqrt(3)))
    ok = worst <= 1e-6 and circle_err <= 1e-9
    assert criterion(10, ok, f"string construction: distance to ellipse {worst:.2e} (tol 1e-6), "
                             f"circle length error {circle_err:.1e} (tol 1e-9)")


def test_criterion_11_orthogonality(rng, criterion):
    gaps = [orthogonality_gap(F, -0.75, 0.0, t) for t in rng.uniform(0, TWO_PI, 100)]
    control = min(orthogonality_gap(F, -0.75, 0.0, t, outer_axes_sq=(4.4, 1.0))
                  for t in rng.uniform(0.2, 1.3, 20))
    ok = max(gaps) <= 1e-8 and control > 1e-3
    assert criterion(11, ok, f"orthogonality: max gap {max(gaps):.2e} at 100 points (tol 1e-8), "
                             f"perturbed-table control {control:.2e} (> 1e-3)")


def test_criterion_12_projective_porism(rng, criterion):
    lam = find_caustic(F, 0.0, 1, 5)
    g, G = to_general(ConfocalConic(F, lam)), to_general(TABLE)
    c0 = rotation_number(F, lam, 0.0)
    defect = drift = 0.0
    wrong = []
    for _ in range(20):
        pm = projective.random_map(rng, [g, G])
        res = closure_test(pm, g, G)
        if res is None or (res.n, res.k) != (5, 1):
            wrong.append(None if res is None else (res.n, res.k))
            continue
        defect, drift = max(defect, res.defect), max(drift, abs(res.c - c0))
    ok = not wrong and defect <= 1e-7 and drift <= 1e-8
    summary = (f"porism under 20 projective maps: closure (5,1) in {20 - len(wrong)}/20, "
               f"defect {defect:.2e} (tol 1e-7), rotation drift {drift:.2e} (tol 1e-8)")
    assert criterion(12, ok, summary), summary


def closure_test(pm, g, G):
    return projective.closure_test(projective.apply_map(pm, g), projective.apply_map(pm, G), 12)


def test_criterion_13_cli(tmp_path, criterion):
    a, b, bad = tmp_path / "a", tmp_path / "b", tmp_path / "perturb"
    code_a = main(["verify", "--out-dir", str(a)])
    code_b = main(["verify", "--out-dir", str(b)])
    code_p = main(["verify", "--perturb", "1e-3", "--out-dir", str(bad)])
    same = (a / "verify_report.json").read_bytes() == (b / "verify_report.json").read_bytes()
    report = json.loads((bad / "verify_report.json").read_text())
    failed = report["failed"]
    expected = [c["name"] for c in report["checks"] if c["name"].startswith(("confocality", "orthogonality"))
                and c["status"] != "skip"]
    named = sorted(failed) == sorted(expected)
    ok = code_a == 0 and code_p == 3 and same and named
    summary = (f"CLI: verify exit {code_a} (want 0), perturbed exit {code_p} (want 3), "
               f"{len(failed)} failed checks all confocality/orthogonality: {named}, byte-identical rerun: {same}")
    assert criterion(13, ok, summary), summary
