import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from poncelet.conics import (
    ConfocalConic,
    ConfocalFamily,
    GeneralConic,
    adjugate,
    dual_conic,
    elliptic_coords,
    evaluate_confocal,
    from_elliptic,
    gradient_confocal,
    ivory_map,
    ivory_scales,
    to_general,
)
from poncelet.errors import (
    DegenerateConicError,
    DegenerateFamilyError,
    OutOfRangeError,
    PonceletError,
)


def same_conic(c, diag):
    return c.distance(GeneralConic(np.diag(diag))) < 1e-14


# ----- evaluate_confocal


@pytest.mark.parametrize("lam, p, expected", [(0.0, (2, 0), 0.0), (0.0, (0, 0), -1.0), (5.0, (3, 0), 0.0)])
def test_evaluate_confocal_examples(fam41, lam, p, expected):
    assert evaluate_confocal(ConfocalConic(fam41, lam), p) == pytest.approx(expected, abs=1e-15)


@pytest.mark.parametrize("lam", [-1.0, -4.0, -1.0 + 1e-11, -4.0 - 1e-11])
def test_degenerate_members_rejected(fam41, lam):
    with pytest.raises(DegenerateConicError):
        ConfocalConic(fam41, lam)


def test_family_validation():
    with pytest.raises(PonceletError):
        ConfocalFamily(1.0, 2.0)
    with pytest.raises(PonceletError):
        ConfocalFamily(float("nan"), 1.0)
    assert ConfocalFamily(4, 1).foci[1] == (math.sqrt(3), 0.0)


# ----- elliptic coordinates


def test_elliptic_coords_vertices(fam41):
    assert elliptic_coords(fam41, (2.0, 0.0)) == pytest.approx((-1.0, 0.0), abs=1e-15)
    assert elliptic_coords(fam41, (0.0, 1.0)) == pytest.approx((-4.0, 0.0), abs=1e-15)


def test_elliptic_coords_generic_against_quadratic_formula(fam41):
    # lam^2 + 3.75 lam + 2 = 0 for the point (1, 0.5)
    disc = math.sqrt(3.75 ** 2 - 8.0)
    oracle = ((-3.75 - disc) / 2, (-3.75 + disc) / 2)
    got = elliptic_coords(fam41, (1.0, 0.5))
    assert got == pytest.approx(oracle, rel=1e-14)
    assert got[0] == pytest.approx(-3.1061, abs=1e-4)
    assert got[1] == pytest.approx(-0.6439, abs=1e-4)


def test_from_elliptic_examples(fam41):
    assert from_elliptic(fam41, (-1.0, 0.0)) == pytest.approx((2.0, 0.0))
    assert from_elliptic(fam41, (-4.0, 0.0)) == pytest.approx((0.0, 1.0))
    c = elliptic_coords(fam41, (1.0, 0.5))
    assert from_elliptic(fam41, c) == pytest.approx((1.0, 0.5), abs=1e-12)
    assert from_elliptic(fam41, c, (-1, -1)) == pytest.approx((-1.0, -0.5), abs=1e-12)


def test_from_elliptic_out_of_range(fam41):
    with pytest.raises(OutOfRangeError):
        from_elliptic(fam41, (-0.5, 1.0))
    with pytest.raises(OutOfRangeError):
        from_elliptic(fam41, (-2.0, -3.0))


def test_circle_family_has_no_elliptic_coords(circle):
    with pytest.raises(DegenerateFamilyError):
        elliptic_coords(circle, (0.3, 0.2))
    with pytest.raises(DegenerateFamilyError):
        ivory_map(circle, 0.0, 1.0, (1.0, 0.0))
    # but evaluation and matrices work
    assert evaluate_confocal(ConfocalConic(circle, 0.0), (1.0, 0.0)) == 0.0


def test_roundtrip_random_coordinates(fam41, rng):
    worst = 0.0
    for _ in range(1000):
        l1 = rng.uniform(-4.0, -1.0)
        l2 = rng.uniform(-1.0, 10.0)
        q = from_elliptic(fam41, (l1, l2))
        back = elliptic_coords(fam41, q)
        worst = max(worst, abs(back[0] - l1) / 4, abs(back[1] - l2) / max(4, abs(l2)))
    assert worst <= 1e-10


@settings(max_examples=200, deadline=None)
@given(st.floats(-20, 20), st.floats(-20, 20))
def test_roundtrip_points(x, y):
    fam = ConfocalFamily(4.0, 1.0)
    c = elliptic_coords(fam, (x, y))
    assert -4.0 <= c.lambda1 <= -1.0 <= c.lambda2
    back = from_elliptic(fam, c, (1 if x >= 0 else -1, 1 if y >= 0 else -1))
    assert math.hypot(back[0] - x, back[1] - y) <= 1e-7 * max(1.0, math.hypot(x, y))


def test_ellipse_and_hyperbola_orthogonal(fam41, rng):
    for _ in range(200):
        q = rng.uniform(-3, 3, 2)
        l1, l2 = elliptic_coords(fam41, q)
        g1 = gradient_confocal(ConfocalConic(fam41, l1), q)
        g2 = gradient_confocal(ConfocalConic(fam41, l2), q)
        assert abs(g1 @ g2) / (np.linalg.norm(g1) * np.linalg.norm(g2)) <= 1e-8


# ----- Ivory map


def test_ivory_vertices(fam41):
    assert ivory_map(fam41, 0.0, 5.0, (2.0, 0.0)) == pytest.approx((3.0, 0.0))
    assert ivory_map(fam41, 0.0, 5.0, (0.0, 1.0)) == pytest.approx((0.0, math.sqrt(6)))
    assert ivory_scales(fam41, 0.0, 5.0) == pytest.approx([1.5, math.sqrt(6)])


def test_ivory_rejects_mixed_types(fam41):
    with pytest.raises(OutOfRangeError):
        ivory_scales(fam41, 0.0, -2.0)


def test_ivory_preserves_hyperbola_coordinate(fam41, rng):
    worst = 0.0
    for _ in range(1000):
        lam, mu = np.sort(rng.uniform(-0.99, 8.0, 2))
        p = ConfocalConic(fam41, lam).point_at(rng.uniform(0, 2 * math.pi))
        img = ivory_map(fam41, lam, mu, p)
        assert abs(evaluate_confocal(ConfocalConic(fam41, mu), img)) < 1e-12
        worst = max(worst, abs(elliptic_coords(fam41, p)[0] - elliptic_coords(fam41, img)[0]))
    assert worst <= 1e-10 * fam41.a1_sq


def test_ivory_between_hyperbolas(fam41):
    # hyperbola members map onto each other too, keeping lambda2
    p = from_elliptic(fam41, (-3.0, 2.0))
    img = ivory_map(fam41, -3.0, -2.0, p)
    assert elliptic_coords(fam41, img) == pytest.approx((-2.0, 2.0), abs=1e-12)


# ----- general conics and duality


def test_to_general_examples(fam41):
    assert same_conic(to_general(ConfocalConic(ConfocalFamily(1, 1), 0.0)), [1, 1, -1])
    assert same_conic(to_general(ConfocalConic(fam41, 0.0)), [0.25, 1, -1])
    assert same_conic(to_general(ConfocalConic(fam41, -2.0)), [0.5, -1, -1])


def test_normalization_is_canonical():
    a = GeneralConic(np.diag([1.0, 1.0, -1.0]))
    b = GeneralConic(-7.5 * np.diag([1.0, 1.0, -1.0]))
    assert a.distance(b) < 1e-15
    assert np.linalg.norm(a.m) == pytest.approx(1.0)
    assert a.m[0, 0] > 0


def test_dual_examples():
    assert same_conic(dual_conic(GeneralConic(np.diag([1.0, 1.0, -1.0]))), [1, 1, -1])
    # the dual of x^2/4 + y^2 = 1 is 4 u^2 + v^2 = 1
    assert same_conic(dual_conic(GeneralConic(np.diag([0.25, 1.0, -1.0]))), [4, 1, -1])


def test_dual_is_involutive(rng):
    for _ in range(50):
        m = rng.standard_normal((3, 3))
        c = GeneralConic(m + m.T)
        assert dual_conic(dual_conic(c)).distance(c) < 1e-10


def test_adjugate_matches_inverse(rng):
    m = rng.standard_normal((3, 3))
    assert np.allclose(adjugate(m), np.linalg.det(m) * np.linalg.inv(m))


def test_singular_conic_has_no_dual():
    with pytest.raises(DegenerateConicError):
        dual_conic(GeneralConic(np.diag([1.0, -1.0, 0.0])))


def test_dual_pencil_rank_two(fam41):
    rows = []
    for lam in (-0.5, 0.0, 5.0):
        d = dual_conic(to_general(ConfocalConic(fam41, lam))).coeffs
        rows.append(d / np.linalg.norm(d))
    sv = np.linalg.svd(np.array(rows), compute_uv=False)
    assert sv[2] / sv[0] <= 1e-10
    # dual of member lam is (a1 + lam) x^2 + (a2 + lam) y^2 = 1
    assert same_conic(dual_conic(to_general(ConfocalConic(fam41, 5.0))), [9, 6, -1])
