import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from poncelet import grid
from poncelet.canonical import rotation_number
from poncelet.conics import ConfocalConic, ConfocalFamily, GeneralConic, evaluate_confocal, to_general
from poncelet.errors import FitError, OutOfRangeError, PonceletError
from poncelet.linespace import reflect

GENERIC_X0 = 0.0123  # keeps every Q-set off the coordinate axes


@pytest.fixture(scope="module")
def poly5():
    return grid.build_polygon(ConfocalFamily(4.0, 1.0), 0.0, 5, 1, GENERIC_X0)


@pytest.fixture(scope="module")
def sets5(poly5):
    return grid.grid_sets(poly5)


def by_name(sets, kind, index):
    return next(g for g in sets if g.kind == kind and g.index == index)


# ----- polygon


def test_circle_triangle():
    poly = grid.build_polygon(ConfocalFamily(1.0, 1.0), 0.0, 3, 1, 0.0)
    assert poly.lambda_caustic == pytest.approx(-0.75, abs=1e-12)
    v = np.array(poly.vertices)
    assert np.allclose(np.hypot(v[:, 0], v[:, 1]), 1.0)
    sides = [np.hypot(*(v[i] - v[(i + 1) % 3])) for i in range(3)]
    assert np.allclose(sides, math.sqrt(3))


@pytest.mark.parametrize("k", [1, 2])
def test_vertices_on_table_and_orbit(k):
    fam = ConfocalFamily(4.0, 1.0)
    poly = grid.build_polygon(fam, 0.0, 5, k, 0.0)
    assert poly.vertex_defect() <= 1e-9
    # repeated reflection of side 0 visits the sides 0, k, 2k, ...
    line = poly.side_lines[0]
    for step in range(1, 6):
        line = reflect(line, poly.table)
        want = poly.side_lines[(step * k) % 5]
        assert abs(math.remainder(line.phi - want.phi, 2 * math.pi)) + abs(line.p - want.p) < 1e-9
    assert rotation_number(fam, poly.lambda_caustic, 0.0) == pytest.approx(k / 5, abs=1e-12)


def test_tangencies_in_cyclic_order(poly5):
    phis = np.unwrap([l.phi for l in poly5.side_lines])
    assert np.all(np.diff(phis) > 0)


def test_even_and_invalid_rejected(fam41):
    with pytest.raises(OutOfRangeError):
        grid.build_polygon(fam41, 0.0, 4, 1)
    with pytest.raises(OutOfRangeError):
        grid.build_polygon(fam41, 0.0, 9, 3)


# ----- grid sets


@pytest.mark.parametrize("n", [3, 5, 7, 9])
def test_counts(n):
    poly = grid.build_polygon(ConfocalFamily(4.0, 1.0), 0.0, n, 1, GENERIC_X0)
    sets = grid.grid_sets(poly)
    P = [g for g in sets if g.kind == "P"]
    Q = [g for g in sets if g.kind == "Q"]
    assert len(P) == (n + 1) // 2 and all(len(g) == n for g in P)
    assert len(Q) == n and all(len(g) == (n + 1) // 2 for g in Q)
    assert grid.distinct_points(sets) == n * (n + 1) // 2


def test_p0_on_caustic(poly5, sets5):
    for q in by_name(sets5, "P", 0).points:
        assert abs(evaluate_confocal(poly5.gamma, q)) <= 1e-10


def test_q_contains_one_tangency(sets5):
    for g in sets5:
        if g.kind == "Q":
            assert sum(m.i == m.j for m in g.members) == 1


def test_far_intersections_count_as_ideal():
    far = grid.GridSet("P", 1, (grid.GridPoint(0, 1, (1e9, 0.0), True), grid.GridPoint(1, 2, (0.0, 1.0), False)))
    assert grid.distinct_points([far]) == 2
    assert len(far.finite_points) == 1


def test_axis_degenerate_flag():
    poly = grid.build_polygon(ConfocalFamily(4.0, 1.0), 0.0, 5, 1, 0.0)
    flags = {g.index: g.axis_degenerate for g in grid.grid_sets(poly) if g.kind == "Q"}
    assert flags == {0: True, 1: False, 2: False, 3: False, 4: False}


# ----- fitting


def test_fit_unit_circle():
    t = np.linspace(0, 2 * math.pi, 5, endpoint=False)
    fc = grid.fit_conic(np.column_stack([np.cos(t), np.sin(t)]))
    assert fc.residual <= 1e-12
    assert fc.conic.distance(GeneralConic(np.diag([1.0, 1.0, -1.0]))) < 1e-12


def test_fit_noisy_points_report_residual(rng):
    t = np.linspace(0, 2 * math.pi, 30, endpoint=False)
    pts = np.column_stack([2 * np.cos(t), np.sin(t)]) + 1e-3 * rng.standard_normal((30, 2))
    fc = grid.fit_conic(pts)
    assert 1e-6 < fc.residual < 1e-2


def test_fit_errors():
    with pytest.raises(FitError):
        grid.fit_conic(np.zeros((4, 2)))
    with pytest.raises(FitError):
        grid.fit_conic(np.column_stack([np.arange(6.0), 2 * np.arange(6.0)]))


def test_symmetric_completion():
    out = grid.symmetric_completion([(1.0, 2.0), (3.0, 0.0)])
    assert len(out) == 6


@pytest.mark.parametrize("n, k", [(5, 1), (5, 2), (7, 1), (7, 2), (9, 1), (9, 2)])
def test_schwartz_ellipses(n, k):
    fam = ConfocalFamily(4.0, 1.0)
    sets = grid.grid_sets(grid.build_polygon(fam, 0.0, n, k, GENERIC_X0))
    lams = []
    for g in sets:
        if g.kind != "P":
            continue
        fc = grid.fit_set(g)
        assert fc.residual <= 1e-8
        assert grid.confocality_residual(fam, fc) <= 1e-6
        assert grid.dual_pencil_ratio(fam, fc.conic) <= 1e-8
        lams.append(grid.fitted_lambda(fam, fc))
    assert np.all(np.diff(lams) > 0)


@pytest.mark.parametrize("n, k", [(5, 1), (5, 2), (7, 1), (7, 2), (9, 1), (9, 2)])
def test_schwartz_hyperbolas(n, k):
    fam = ConfocalFamily(4.0, 1.0)
    sets = grid.grid_sets(grid.build_polygon(fam, 0.0, n, k, GENERIC_X0))
    for g in sets:
        if g.kind != "Q":
            continue
        fc = grid.fit_set(g)
        cf = grid.confocality(fam, fc)
        assert fc.residual <= 1e-8
        assert cf.s1 * cf.s2 < 0
        assert cf.residual <= 1e-6 and cf.dual_ratio <= 1e-8
        for q in g.finite_points:
            assert grid.hyperbola_normal_gap(fam, fc.conic, q) <= 1e-6


def test_q_hyperbolas_disjoint(poly5, sets5):
    fam = poly5.family
    A, B = poly5.table.axes_sq
    curves = []
    for g in sets5:
        if g.kind == "Q":
            cf = grid.confocality(fam, grid.fit_set(g))
            curves.append(grid.sample_hyperbola(cf.s1, cf.s2, math.sqrt(A), math.sqrt(B)))
    assert grid.min_separation(curves) > 0


def test_p_sets_are_periodic_caustics(poly5, sets5):
    fam = poly5.family
    for g in sets5:
        if g.kind == "P" and g.index > 0:
            lam = grid.fitted_lambda(fam, grid.fit_set(g))
            assert rotation_number(fam, poly5.lambda_caustic, lam) == pytest.approx(g.index / 5, abs=1e-8)


def test_confocality_examples(fam41):
    member = to_general(ConfocalConic(fam41, 5.0))
    cf = grid.confocality(fam41, member)
    assert cf.residual < 1e-14
    assert cf.s1 - cf.s2 == pytest.approx(3.0)
    circle = GeneralConic(np.diag([1.0, 1.0, -1.0]))
    assert grid.confocality(fam41, circle).axis == pytest.approx(0.75)
    assert grid.confocality_residual(fam41, circle) >= 0.75


def test_confocality_rejects_shifted_conic(fam41):
    shifted = GeneralConic.from_coeffs(1 / 9, 0, 1 / 6, -0.2, 0, -0.9)
    assert grid.confocality_residual(fam41, shifted) > 0.1


# ----- Ivory equivalence


def test_equivalence_examples(poly5, sets5):
    fam = poly5.family
    P1, P2 = by_name(sets5, "P", 1), by_name(sets5, "P", 2)
    assert grid.equivalence_gap(fam, P1, P1) == 0.0
    assert grid.equivalence_gap(fam, P1, P2) <= 1e-8
    assert grid.predicted_signs("P", 1, 2).tolist() == [-1.0, -1.0]
    # the wrong sign does not match
    assert grid.equivalence_gap(fam, P1, P2, signs=(1, 1)) > 1e-3
    Q0, Q2 = by_name(sets5, "Q", 0), by_name(sets5, "Q", 2)
    assert grid.equivalence_gap(fam, Q0, Q2, x0=GENERIC_X0, n=5) <= 1e-8


@pytest.mark.parametrize("n", [5, 7, 9])
def test_equivalence_all_pairs(n):
    fam = ConfocalFamily(4.0, 1.0)
    sets = grid.grid_sets(grid.build_polygon(fam, 0.0, n, 1, GENERIC_X0))
    for kind in "PQ":
        group = [g for g in sets if g.kind == kind]
        for a in group:
            for b in group:
                assert grid.equivalence_gap(fam, a, b, x0=GENERIC_X0, n=n) <= 1e-8


def test_equivalence_errors(sets5, fam41):
    with pytest.raises(PonceletError):
        grid.equivalence_gap(fam41, by_name(sets5, "P", 1), by_name(sets5, "Q", 1))
    with pytest.raises(PonceletError):
        short = grid.GridSet("P", 9, by_name(sets5, "P", 1).members[:3])
        grid.equivalence_gap(fam41, by_name(sets5, "P", 1), short)


# ----- (x, y) coordinates


def test_vertex_coordinates():
    poly = grid.build_polygon(ConfocalFamily(4.0, 1.0), 0.0, 5, 1, 0.0)
    x, y = grid.point_xy(poly.chart, poly.vertices[0])
    assert (x, y) == pytest.approx((0.1, 0.1), abs=1e-12)
    assert grid.expected_xy(5, 0, 1) == pytest.approx((0.1, 0.1))


@pytest.mark.parametrize("n, x0", [(5, 0.0), (7, 0.0), (7, 0.37), (9, GENERIC_X0)])
def test_all_grid_coordinates(n, x0):
    poly = grid.build_polygon(ConfocalFamily(4.0, 1.0), 0.0, n, 1, x0)
    coords = grid.grid_xy_coords(poly)
    assert len(coords) == n * (n + 1)  # every point once under P and once under Q
    for c in coords:
        ex, ey = grid.expected_xy(n, *c.indices, x0)
        assert grid.chart_distance(c.x, ex) <= 1e-9
        assert abs(c.y - ey) <= 1e-9
        if c.indices[0] == c.indices[1]:
            assert c.y == 0.0


@settings(max_examples=25, deadline=None)
@given(st.floats(0.0, 0.999), st.sampled_from([(5, 1), (5, 2), (7, 3)]))
def test_porism_any_start(x0, nk):
    # grid invariants hold for every starting point x0
    n, k = nk
    poly = grid.build_polygon(ConfocalFamily(4.0, 1.0), 0.0, n, k, x0, resolution=1024)
    assert poly.vertex_defect() <= 1e-9
    for c in grid.grid_xy_coords(poly):
        ex, ey = grid.expected_xy(n, *c.indices, poly.x0)
        assert grid.chart_distance(c.x, ex) <= 1e-9 and abs(c.y - ey) <= 1e-9
