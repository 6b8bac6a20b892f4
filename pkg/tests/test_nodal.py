import json

import numpy as np
import pytest

from hyperlab import nodal as nd
from hyperlab.geometry.paths import pinch_path
from hyperlab.geometry.teichmuller import fn_point
from hyperlab.meshing.surface import mesh_surface
from hyperlab.spectral import assemble, solve_lowest

from conftest import closed, cusped


def analyse(m, v, surface_type):
    ng = nd.extract_nodal(m, v)
    d = nd.nodal_domains(m, v, ng)
    return ng, d, nd.isotopy_class(ng, d, surface_type)


def test_constant_function(theta2):
    _, m, _ = theta2
    v = np.ones(m.n_vertices)
    ng, d, label = analyse(m, v, (2, 0))
    assert ng.n_components == 0 and len(ng.segments) == 0
    assert d.count == 1
    assert label == "other"


def test_sign_invariance(pants_pinched):
    _, m, s = pants_pinched
    v = s.eigenvectors[:, 1]
    a, b = nd.extract_nodal(m, v), nd.extract_nodal(m, -v)
    assert np.array_equal(a.point_edges, b.point_edges)
    assert np.array_equal(a.point_t, b.point_t)
    assert np.array_equal(a.segments, b.segments)
    assert np.array_equal(a.crossing_vectors, b.crossing_vectors)


def test_pants_type(pants_pinched):
    p, m, s = pants_pinched
    ng, d, label = analyse(m, s.eigenvectors[:, 1], p.surface_type)
    assert label == "pants-type"
    assert ng.n_components == 3 and all(ng.smooth())
    assert sorted(d.signs) == [-1, 1]
    assert (d.chi_plus, d.chi_minus, d.nodal_chi) == (-1, -1, 0)
    assert nd.euler_poincare_audit(d, p.surface_type)["residual"] == 0
    # each loop is parallel to one pinched curve, and all three occur
    hints = nd.curve_hints(ng, m)
    assert sorted(h[0] for h in hints) == ["c0", "c1", "c2"]
    assert all(len(h) == 1 for h in hints)
    # loops never cross the pants curves they are parallel to
    cols = [j for j, nm in enumerate(ng.cycle_names) if nm.startswith("curve-")]
    assert (ng.crossing_vectors[:, cols] % 2 == 0).all()


def test_torus_type(torus_pinched):
    p, m, s = torus_pinched
    ng, d, label = analyse(m, s.eigenvectors[:, 1], p.surface_type)
    assert label == "torus-type"
    assert ng.n_components == 1
    assert d.chi == [-1, -1] and d.nodal_chi == 0
    assert nd.euler_poincare_audit(d, p.surface_type)["residual"] == 0


def test_second_eigenfunction_courant():
    p, m, s = closed("theta", (2.0, 2.0, 2.0), h=0.2, k=4)
    d = nd.nodal_domains(m, s.eigenvectors[:, 2], nd.extract_nodal(m, s.eigenvectors[:, 2]))
    assert d.count <= 3


@pytest.mark.parametrize("L", [(2.0, 2.0, 2.0), (1.0, 1.5, 2.5), (0.3, 0.3, 0.3)])
def test_lambda1_two_domains(L):
    _, m, s = closed("theta", L)
    v = s.eigenvectors[:, 1]
    d = nd.nodal_domains(m, v, nd.extract_nodal(m, v))
    assert d.count == 2 and sorted(d.signs) == [-1, 1]


def test_four_punctured_sphere():
    p, m, s = cusped("sphere4", (0.5,))
    assert s.eigenvalues[1] < 0.25
    ng, d, label = analyse(m, s.eigenvectors[:, 1], p.surface_type)
    assert d.k == 4 and d.nodal_chi == 0
    assert nd.euler_poincare_audit(d, p.surface_type)["residual"] == 0
    assert label.startswith("one-curve-partition")


def test_stability_under_tiny_perturbation(pants_pinched):
    _, m, s = pants_pinched
    v = s.eigenvectors[:, 1]
    w = v + 1e-9 * np.linalg.norm(v) * np.random.default_rng(0).standard_normal(len(v)) \
        / np.sqrt(len(v))
    a, b = nd.extract_nodal(m, v), nd.extract_nodal(m, w)
    assert a.n_components == b.n_components
    assert nd.nodal_domains(m, v, a).count == nd.nodal_domains(m, w, b).count


def test_courant_otal_audit(pants_pinched):
    _, m, s = pants_pinched
    v = s.eigenvectors[:, 1]
    d = nd.nodal_domains(m, v, nd.extract_nodal(m, v))
    assert nd.courant_otal_audit(s, {1: d})["pass"]
    # a non-eigenfunction may fail; the audit reports instead of raising
    rng = np.random.default_rng(0)
    u = rng.standard_normal(m.n_vertices)
    du = nd.nodal_domains(m, u, nd.extract_nodal(m, u))
    rep = nd.courant_otal_audit(s, {1: du})
    assert rep["rows"][0]["domains"] == du.count
    assert isinstance(rep["pass"], bool)
    assert nd.courant_otal_audit(s, {}) == {"rows": [], "pass": True}


def test_pinch_path_label_constant():
    path = pinch_path(fn_point("theta", (1.0, 1.0, 1.0)), ["c0", "c1", "c2"], 0.05)
    labels = []
    for t in np.linspace(0, 1, 6):
        p = path(t)
        m = mesh_surface(p, 0.25)
        s = solve_lowest(assemble(m), 3)
        if s.eigenvalues[1] < 0.1 or labels:
            labels.append(analyse(m, s.eigenvectors[:, 1], p.surface_type)[2])
    assert labels and set(labels) == {"pants-type"}


def test_nodal_report_layout(pants_pinched):
    _, m, s = pants_pinched
    v = s.eigenvectors[:, 1]
    ng, d, label = analyse(m, v, (2, 0))
    r = json.loads(nd.nodal_report(ng, d, label))
    assert set(r) == {"components", "domains", "chi_plus", "chi_minus", "chi_nodal", "label",
                      "crossing_vectors"}
    assert r["label"] == "pants-type" and r["components"] == 3
