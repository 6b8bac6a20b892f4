import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from hyperlab.branches import cover_mesh
from hyperlab.errors import ConditioningError, DomainError
from hyperlab.geometry.teichmuller import fn_point
from hyperlab.meshing.cover import cyclic_cover
from hyperlab.meshing.surface import (MIN_ANGLE_FLOOR, curve_node_count, load_cache,
                                      mesh_cusped, mesh_surface, refine, save_cache,
                                      validate)
from hyperlab.spectral import assemble, solve_lowest

from conftest import closed, cusped

FOUR_PI = 4 * np.pi


def flat_area(m):
    a, b, c = m.lengths.T
    s = (a + b + c) / 2
    return float(np.sqrt(s * (s - a) * (s - b) * (s - c)).sum())


def test_genus_two_area_and_topology():
    m = mesh_surface(fn_point("theta", (1.5, 2.0, 2.5), (0.2, 0.4, 0.6)), 0.1)
    # hyperbolic triangle areas sum to 4 pi exactly when the gluing closes up
    assert abs(m.area() - FOUR_PI) <= 1e-12 * FOUR_PI
    assert abs(flat_area(m) - FOUR_PI) / FOUR_PI < 0.01
    assert m.euler_characteristic() == -2
    validate(m)


@given(st.sampled_from(["theta", "dumbbell"]),
       st.lists(st.floats(0.2, 5.0), min_size=3, max_size=3),
       st.lists(st.floats(0.0, 1.0), min_size=3, max_size=3))
def test_random_meshes_valid(name, L, fr):
    if max(L) / min(L) > 25:
        L = [max(x, max(L) / 25) for x in L]
    m = mesh_surface(fn_point(name, L, [f * x for f, x in zip(fr, L)]), 0.35)
    validate(m)
    assert np.degrees(m.angles()).min() >= MIN_ANGLE_FLOOR
    assert abs(m.area() - FOUR_PI) <= 1e-11 * FOUR_PI


def test_full_twist_same_identification():
    L = (1.0, 2.0, 3.0)
    a = mesh_surface(fn_point("theta", L, (0.0, 0.0, 0.0)), 0.25)
    b = mesh_surface(fn_point("theta", L, L), 0.25)
    assert (a.triangles == b.triangles).all()
    assert np.allclose(a.lengths, b.lengths, atol=1e-12)


def test_cusped_area_horocycles_and_chi():
    _, m, _ = cusped("sphere4", (0.5,))
    Y = m.Y
    want = FOUR_PI - 4 * 2 * np.pi / Y
    assert abs(m.area() - want) / want < 0.01
    for k in range(4):
        assert m.boundary_length(k) == pytest.approx(2 * np.pi / Y, abs=1e-6)
    assert m.euler_characteristic() == -2
    validate(m)


def test_cusped_requires_cusps():
    with pytest.raises(DomainError):
        mesh_cusped(fn_point("theta", (1, 1, 1)))
    with pytest.raises(DomainError):
        mesh_surface(fn_point("sphere4", (1,)), 0.2)
    with pytest.raises(DomainError):
        mesh_cusped(fn_point("sphere4", (1,)), Y=1.0)


def test_input_checks():
    with pytest.raises(DomainError):
        mesh_surface(fn_point("theta", (1, 1, 1)), 2.0)
    with pytest.raises(ConditioningError):
        mesh_surface(fn_point("theta", (0.01, 2, 2)), 0.2)


def test_refinement_counts_and_area():
    p = fn_point("theta", (1.0, 1.5, 2.0), (0.1, 0.2, 0.3))
    m = mesh_surface(p, 0.3)
    r = refine(m)
    assert len(r.triangles) == 4 * len(m.triangles)
    assert r.h == pytest.approx(m.h / 2)
    for cid in m.curves:
        assert len(r.curves[cid]) == 2 * len(m.curves[cid])
    assert abs(flat_area(r) - FOUR_PI) < abs(flat_area(m) - FOUR_PI) / 3
    validate(r)


def test_refined_cusp_keeps_horocycle():
    _, m, _ = cusped("sphere4", (0.5,), h=0.2)
    r = refine(m)
    for k in range(4):
        assert r.boundary_length(k) == pytest.approx(2 * np.pi / m.Y, abs=1e-6)
    validate(r)


def test_curve_cycles():
    p = fn_point("theta", (1.0, 2.0, 3.0), (0.3, 0.5, 0.7))
    m = mesh_surface(p, 0.25)
    edge_sets = []
    for i, c in enumerate(p.decomposition.curves):
        cyc = m.curve_cycle(c.id)
        assert len(cyc) == len(set(cyc.tolist()))
        assert len(cyc) >= curve_node_count(p.lengths[i], 0.25)
        edge_sets.append({tuple(sorted(e)) for e in zip(cyc, np.roll(cyc, -1))})
    for a in range(3):
        for b in range(a + 1, 3):
            assert not edge_sets[a] & edge_sets[b]


def test_curve_polyline_length_converges():
    p = fn_point("theta", (1.0, 2.0, 3.0))
    m = mesh_surface(p, 0.3)
    r = refine(m)
    for i, c in enumerate(p.decomposition.curves):
        L = p.lengths[i]
        e0, e1 = abs(m.curve_length(c.id) - L), abs(r.curve_length(c.id) - L)
        assert e0 <= 0.3 ** 2 * L
        assert e1 <= e0 / 3 + 1e-12


@given(st.floats(0.01, 20.0), st.floats(0.02, 1.0), st.one_of(st.none(), st.floats(0.0, 20.0)))
def test_curve_node_count(L, h, tw):
    n = curve_node_count(L, h, tw)
    assert n % 2 == 0 and n >= 6
    assert L / n <= h + 1e-12


def test_cover_mesh_cut_matches_fn_lift():
    p = fn_point("theta", (1.5, 2.0, 2.5), (0.3, 0.1, 0.7))
    a, n = cover_mesh(p, 3, 0.2, 2)
    b, _ = cover_mesh(p, 3, 0.2, "c2")
    assert n == 2 and a.n_vertices == b.n_vertices
    assert a.area() == pytest.approx(2 * FOUR_PI, rel=1e-12)
    assert b.euler_characteristic() == 2 - 2 * 3
    sa, sb = solve_lowest(assemble(a), 8), solve_lowest(assemble(b), 8)
    assert np.abs(sa.eigenvalues - sb.eigenvalues).max() <= 1e-12


def test_cover_along_dual_cycle():
    _, m, _ = closed("theta", (0.1, 0.1, 0.1))
    d = next(d for d in m.dual_cycles if d["name"] == "dual-c1")
    c = cyclic_cover(m, d["walk"], 2)
    assert c.euler_characteristic() == 2 * m.euler_characteristic()
    assert c.area() == pytest.approx(2 * m.area(), rel=1e-12)
    with pytest.raises(DomainError):
        cyclic_cover(m, d["walk"], 1)


def test_cache_round_trip(tmp_path):
    p = fn_point("theta", (1, 1, 1))
    m = mesh_surface(p, 0.3)
    path = tmp_path / "m.json"
    save_cache(m, path)
    q = load_cache(path, p, 0.3)
    assert q is not None
    assert (q.triangles == m.triangles).all()
    assert np.array_equal(q.lengths, m.lengths)
    assert load_cache(path, p, 0.2) is None
    assert load_cache(tmp_path / "missing.json", p, 0.3) is None
