import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st
from scipy.optimize import least_squares

from hyperlab.errors import DomainError
from hyperlab.geometry import hyperbolic as hb
from hyperlab.geometry.covering import lift_decomposition, lift_to_cover
from hyperlab.geometry.fuchsian import build_generators, systole, thick_thin
from hyperlab.geometry.hexagon import solve_hexagon
from hyperlab.geometry.paths import appendix_beta_path, linear_path, pinch_path
from hyperlab.geometry.teichmuller import STANDARD, FNPoint, fn_point

side = st.floats(0.2, 5.0)


# -- hexagon oracle: close a walk of geodesic sides with right-angle turns ----


def _walk(sides):
    """SL2 frame after walking the sides in order, turning left by pi/2."""
    F = np.eye(2)
    q = np.sqrt(0.5)
    turn = np.array([[q, q], [-q, q]])
    for ell in sides:
        F = F @ np.diag([np.exp(ell / 2), np.exp(-ell / 2)]) @ turn
    return F


def hexagon_by_closure(b1, b2, b3, guess=1.0):
    def res(s):
        s1, s2, s3 = s
        P = _walk([b1, s3, b2, s1, b3, s2])
        sign = np.sign(P[0, 0]) or 1.0
        return (P - sign * np.eye(2)).ravel()
    sol = least_squares(res, [guess] * 3, bounds=(1e-9, 50), xtol=1e-15, ftol=1e-15, gtol=1e-15)
    assert np.abs(sol.fun).max() < 1e-12
    return sol.x


def test_hexagon_unit_seams_match_closure_oracle():
    hx = solve_hexagon(1, 1, 1)
    want = np.arccosh((np.cosh(1) + np.cosh(1) ** 2) / np.sinh(1) ** 2)
    assert hx.seams == pytest.approx((want,) * 3, abs=1e-14)
    assert hexagon_by_closure(1, 1, 1) == pytest.approx([want] * 3, abs=1e-10)


@given(side, side, side)
def test_hexagon_closure_oracle_random(b1, b2, b3):
    hx = solve_hexagon(b1, b2, b3)
    s = hexagon_by_closure(b1, b2, b3, guess=float(np.mean(hx.seams)))
    assert s == pytest.approx(hx.seams, rel=1e-8, abs=1e-9)


@given(side, side, side)
def test_hexagon_identity_residual(b1, b2, b3):
    assert solve_hexagon(b1, b2, b3).identity_residual() <= 1e-12


def test_hexagon_seams_shrink_for_long_sides():
    s5, s10 = solve_hexagon(5, 5, 5).s1, solve_hexagon(10, 10, 10).s1
    assert s10 < s5 < solve_hexagon(1, 1, 1).s1


def test_hexagon_seam_derivative_sign():
    d = 1e-6
    ds3 = solve_hexagon(1, 1, 1 + d).s3 - solve_hexagon(1, 1, 1).s3
    # d cosh(s3)/d b3 = sinh b3 / (sinh b1 sinh b2) > 0
    assert ds3 > 0
    fd = (np.cosh(solve_hexagon(1, 1, 1 + d).s3) - np.cosh(solve_hexagon(1, 1, 1).s3)) / d
    assert fd == pytest.approx(np.sinh(1) / np.sinh(1) ** 2, rel=1e-5)


def test_hexagon_rejects_bad_sides():
    with pytest.raises(DomainError):
        solve_hexagon(0, 1, 1)
    with pytest.raises(DomainError):
        solve_hexagon(1, np.inf, 1)


# -- Fuchsian generators -------------------------------------------------------


def test_equal_lengths_round_trip():
    p = fn_point("theta", (1.3, 1.3, 1.3))
    fg = build_generators(p)
    assert fg.curve_lengths() == pytest.approx([1.3] * 3, rel=1e-12)
    assert fg.relator_defects().max() < 1e-8


@given(st.sampled_from(["theta", "dumbbell"]),
       st.lists(st.floats(0.3, 5.0), min_size=3, max_size=3),
       st.lists(st.floats(0.0, 0.999), min_size=3, max_size=3))
def test_trace_lengths_reproduce_fn_lengths(name, L, fr):
    p = fn_point(name, L, [f * x for f, x in zip(fr, L)])
    fg = build_generators(p)
    assert fg.curve_lengths() == pytest.approx(L, rel=1e-9)
    assert fg.relator_defects().max() < 1e-8


@pytest.mark.parametrize("name,L", [("sphere4", [0.7]), ("sphere5", [0.5, 1.5]),
                                    ("torus1", [1.0]), ("torus2", [0.4, 1.1])])
def test_cusp_generators_parabolic(name, L):
    p = fn_point(name, L)
    fg = build_generators(p)
    assert len(fg.cusp_words) == p.punctures
    for w in fg.cusp_words:
        assert abs(abs(np.trace(fg.word_matrix(w))) - 2) <= 1e-10
    assert fg.curve_lengths() == pytest.approx(L, rel=1e-9)


def test_systole_short_pants_curve():
    p = fn_point("theta", (0.1, 3, 3))
    val, w = systole(p, 8)
    assert val == pytest.approx(0.1, rel=1e-12)
    assert w == build_generators(p).curve_words[0]
    # deeper enumeration finds nothing shorter
    assert systole(p, 10)[0] == pytest.approx(0.1, rel=1e-12)


@given(st.lists(st.floats(0.3, 4.0), min_size=3, max_size=3))
def test_systole_at_most_min_length(L):
    assert systole(fn_point("theta", L), 4)[0] <= min(L) * (1 + 1e-12)


def test_systole_pants_words_twist_independent():
    a = build_generators(fn_point("theta", (2, 2, 2), (0, 0, 0)))
    b = build_generators(fn_point("theta", (2, 2, 2), (1, 0, 0)))
    assert a.curve_lengths() == pytest.approx(b.curve_lengths(), rel=1e-12)
    sa = systole(fn_point("theta", (2, 2, 2), (0, 0, 0)), 6)[0]
    sb = systole(fn_point("theta", (2, 2, 2), (1, 0, 0)), 6)[0]
    assert sa <= 2 and sb <= 2


def test_thick_thin():
    assert thick_thin(fn_point("theta", (0.1, 3, 3)), 0.25, 4)[0] == "thin"
    kind, val, _ = thick_thin(fn_point("theta", (3, 3, 3)), 0.25, 10)
    assert kind == "thick" and val >= 0.5
    assert thick_thin(fn_point("theta", (0.1, 3, 3)), 1e-9, 4)[0] == "thick"


def test_systole_long_curve_round_off():
    # generators with norms near 150: conjugates of c1 must not undercut it
    for L in [(10.0, 0.3, 0.3), (10.0, 0.3, 1.0), (10.0, 1.0, 0.3)]:
        assert systole(fn_point("theta", L), 6)[0] == pytest.approx(0.3, abs=1e-12)


def test_systole_budget_carries_partial():
    from hyperlab.errors import BudgetError
    with pytest.raises(BudgetError) as e:
        systole(fn_point("theta", (1, 1, 1)), 12, node_budget=100)
    assert e.value.partial[0] <= 1.0


# -- covering lift ---------------------------------------------------------------


def test_lift_coordinates_are_copies():
    p = fn_point("theta", (1, 2, 3), (0.1, 0.2, 0.3))
    q, desc = lift_to_cover(p, 3)
    assert q.genus == 3 and q.punctures == 0
    v = desc.coordinate_vector(q)
    assert len(v) == 12
    assert v == list(p.lengths + p.twists) * 2
    for j in range(desc.sheet_count):
        assert desc.read_copy(q, j) == p


def test_lift_rejects_genus_two_and_separating_cut():
    with pytest.raises(DomainError):
        lift_to_cover(fn_point("theta", (1, 1, 1)), 2)
    with pytest.raises(DomainError):
        lift_decomposition(STANDARD["dumbbell"](), 3, cut=2)


def test_lift_symmetry_is_cyclic():
    _, desc = lift_to_cover(fn_point("theta", (1, 1, 1)), 4)
    pants, curves = desc.symmetry()
    perm = np.arange(len(curves))
    for _ in range(desc.sheet_count):
        perm = np.array(curves)[perm]
    assert (perm == np.arange(len(curves))).all()
    assert sorted(pants) == list(range(len(pants)))


# -- paths -------------------------------------------------------------------------


def test_pinch_single_curve():
    p = fn_point("theta", (1.0, 2.0, 3.0), (0.1, 0.2, 0.3))
    path = pinch_path(p, ["c0"], 0.05)
    assert path(1.0).lengths == (0.05, 2.0, 3.0)
    assert path(1.0).twists == p.twists
    assert path(0.0) == p


def test_pinch_triple_equal_lengths():
    path = pinch_path(fn_point("theta", (2, 2, 2)), ["c0", "c1", "c2"], 0.05)
    for t in np.linspace(0, 1, 7):
        L = path(t).lengths
        assert L[0] == L[1] == L[2]
    assert systole(path(1.0), 3)[0] < 0.06


def test_appendix_path_endpoints_and_constant():
    p1 = fn_point("theta", (0.1, 2, 2.5), (0, 0.5, 1))
    p2 = fn_point("theta", (2, 0.1, 3), (1, 0, 0.2))
    b = appendix_beta_path(p1, p2, "c0", "c1", 0.2)
    assert b(0.0) == p1 and b(1.0) == p2
    c = appendix_beta_path(p1, p1, "c0", "c1")
    for t in (0.0, 0.3, 0.7, 1.0):
        assert c(t).coordinates() == pytest.approx(p1.coordinates())


def test_appendix_path_keeps_a_short_curve():
    p1 = fn_point("theta", (0.1, 2, 2.5), (0, 0.5, 1))
    p2 = fn_point("theta", (2, 0.1, 3), (1, 0, 0.2))
    b = appendix_beta_path(p1, p2, "c0", "c1", 0.2)
    for t in np.linspace(0, 1, 101):
        assert min(b(t).lengths) < 0.2


def test_path_domain_checks():
    p = fn_point("theta", (1, 1, 1))
    with pytest.raises(DomainError):
        linear_path(p, fn_point("dumbbell", (1, 1, 1)))
    with pytest.raises(DomainError):
        linear_path(p, p)(1.5)
    with pytest.raises(DomainError):
        pinch_path(p, ["c0"], 2.0)


# -- points and the plane ----------------------------------------------------------


def test_fn_point_json_round_trip():
    p = fn_point("sphere5", (0.5, 1.25), (0.1, 0.2))
    q = FNPoint.from_json(p.to_json())
    assert q.lengths == p.lengths and q.twists == p.twists
    assert q.decomposition.to_dict() == p.decomposition.to_dict()


@pytest.mark.parametrize("name", sorted(STANDARD))
def test_standard_decompositions_well_formed(name):
    d = STANDARD[name]()
    assert d.pants_count == 2 * d.genus - 2 + d.punctures
    assert d.curve_ids == sorted(d.curve_ids)


def test_separating_curves():
    assert STANDARD["dumbbell"]().separates(["c2"])
    assert not STANDARD["theta"]().separates(["c0"])
    assert STANDARD["theta"]().separates(["c0", "c1", "c2"])


def test_translation_length_and_distance():
    assert hb.translation_length(hb.translation(1.7)) == pytest.approx(1.7, rel=1e-14)
    assert hb.uhp_distance(1j, 1j * np.exp(2.0)) == pytest.approx(2.0, rel=1e-14)
