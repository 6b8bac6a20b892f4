import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from hyperlab.errors import DomainError
from hyperlab.geometry.teichmuller import fn_point
from hyperlab.meshing.surface import mesh_surface, refine
from hyperlab.spectral import (OperatorPair, assemble, cluster_multiplicity, extrapolate,
                               solve_lowest, write_extrapolation_json, write_spectrum_csv)

from conftest import closed, cusped


def test_operator_basics(theta2):
    p, m, _ = theta2
    op = assemble(m)
    one = np.ones(op.n)
    assert one @ (op.M @ one) == pytest.approx(4 * np.pi, rel=0.01)
    assert np.abs(op.A @ one).max() <= 1e-12
    rng = np.random.default_rng(1)
    for _ in range(5):
        v = rng.standard_normal(op.n)
        assert v @ (op.A @ v) >= -1e-12
    assert (op.A != op.A.T).nnz == 0 and (op.M != op.M.T).nnz == 0


def test_kernel_is_constant(theta2):
    _, m, _ = theta2
    s = solve_lowest(assemble(m), 1)
    assert s.eigenvalues[0] == pytest.approx(0.0, abs=1e-10)
    v = s.eigenvectors[:, 0]
    assert np.ptp(v) <= 1e-8 * np.abs(v).max()


def test_rayleigh_quotients(theta2):
    _, m, s = theta2
    op = assemble(m)
    for j in range(s.k):
        v = s.eigenvectors[:, j]
        rq = (v @ (op.A @ v)) / (v @ (op.M @ v))
        assert abs(rq - s.eigenvalues[j]) <= 10 * s.tol
    assert (s.residuals <= s.tol).all()


def test_deterministic_under_seed(theta2):
    _, m, _ = theta2
    op = assemble(m)
    a, b = solve_lowest(op, 4, seed=3), solve_lowest(op, 4, seed=3)
    assert np.array_equal(a.eigenvalues, b.eigenvalues)
    assert np.array_equal(a.eigenvectors, b.eigenvectors)


def test_vertex_relabelling_invariance(theta2):
    _, m, s = theta2
    op = assemble(m)
    perm = np.random.default_rng(7).permutation(op.n)
    P = op.A[perm][:, perm].tocsr(), op.M[perm][:, perm].tocsr()
    t = solve_lowest(OperatorPair(P[0], P[1], op.h, True, op.area), s.k)
    assert np.abs(t.eigenvalues - s.eigenvalues).max() <= 10 * s.tol


def test_refinement_differences_shrink():
    p = fn_point("theta", (1.5, 2.0, 2.5), (0.2, 0.3, 0.4))
    m = mesh_surface(p, 0.3)
    lams = []
    for _ in range(3):
        lams.append(solve_lowest(assemble(m), 4).eigenvalues[1:])
        m = refine(m)
    d1, d2 = np.abs(lams[1] - lams[0]), np.abs(lams[2] - lams[1])
    assert (d2 < d1).all()


def test_pinched_spectrum(pants_pinched):
    _, _, s = pants_pinched
    assert s.eigenvalues[1] < 0.05
    assert s.eigenvalues[2] > 0.25


def test_solver_input_checks(theta2):
    _, m, _ = theta2
    op = assemble(m)
    with pytest.raises(DomainError):
        solve_lowest(op, 0)
    with pytest.raises(DomainError):
        solve_lowest(op, op.n)
    with pytest.raises(DomainError):
        solve_lowest(op, 3, tol=1e-2)


# -- extrapolation ----------------------------------------------------------------


def test_extrapolation_exact_model():
    e = extrapolate([2 + h ** 2 for h in (0.2, 0.1, 0.05)])
    assert e.lambda_star == pytest.approx(2.0, abs=1e-6)
    assert e.order == pytest.approx(2.0, abs=1e-6)
    assert not e.flagged


def test_extrapolation_constant_and_noisy():
    e = extrapolate([1.5, 1.5, 1.5])
    assert e.lambda_star == 1.5 and e.error_bar == 0
    assert extrapolate([1.0, 1.2, 1.1]).flagged
    with pytest.raises(DomainError):
        extrapolate([1.0, 2.0])


@given(st.floats(0.1, 10), st.floats(-5, 5).filter(lambda c: abs(c) > 1e-3),
       st.floats(1.5, 3.0))
def test_extrapolation_power_law(lam, C, p):
    hs = [0.2, 0.1, 0.05]
    e = extrapolate([lam + C * h ** p for h in hs])
    assert e.lambda_star == pytest.approx(lam, abs=1e-8 * max(1, abs(C)))
    assert e.order == pytest.approx(p, abs=1e-6)


# -- multiplicity -------------------------------------------------------------------


def test_simple_lambda1_multiplicity():
    # theta (0.375)^3: lambda_1 close to 0.18, well separated from lambda_2
    _, _, s = closed("theta", (0.375, 0.375, 0.375), h=0.2, k=4)
    assert 0.15 < s.eigenvalues[1] < 0.21
    r = cluster_multiplicity(s, 1.0, (2, 0))
    assert (r.multiplicity, r.bound, r.verdict) == (1, 1, "consistent")


def test_small_simple_eigenvalue_consistent(pants_pinched):
    _, _, s = pants_pinched
    r = cluster_multiplicity(s, 1.0, (2, 0))
    assert r.small and r.multiplicity == 1 and r.bound == 1
    assert r.verdict.startswith("consistent")


def test_zero_gap_factor_splits_clusters(theta2):
    _, _, s = theta2
    from hyperlab.spectral import _clusters
    assert _clusters(s.eigenvalues, 0.0) == [[i] for i in range(s.k)]
    assert cluster_multiplicity(s, 0.0, (2, 0)).multiplicity == 1


def test_sphere_bound_capped_at_three():
    _, _, s = cusped("sphere5", (0.5, 0.5))
    r = cluster_multiplicity(s, 1.0, (0, 5))
    assert r.bound == 2
    _, _, s = cusped("sphere4", (0.5,))
    assert cluster_multiplicity(s, 1.0, (0, 4)).bound == 1


# -- output -------------------------------------------------------------------------


def test_spectrum_csv_header(tmp_path, theta2):
    _, _, s = theta2
    write_spectrum_csv(s, tmp_path / "s.csv")
    lines = (tmp_path / "s.csv").read_text().splitlines()
    assert lines[0] == "index,lambda,residual,cluster_id"
    assert len(lines) == s.k + 1


def test_cusped_spectrum_suppresses_continuum(tmp_path):
    _, _, s = cusped("sphere4", (0.5,))
    write_spectrum_csv(s, tmp_path / "s.csv")
    rows = (tmp_path / "s.csv").read_text().splitlines()[1:]
    assert all(float(r.split(",")[1]) < 0.25 for r in rows)
    assert len(rows) == int((s.eigenvalues < 0.25).sum())


def test_extrapolation_json(tmp_path):
    import json
    write_extrapolation_json(extrapolate([2.04, 2.01, 2.0025]), tmp_path / "e.json")
    d = json.loads((tmp_path / "e.json").read_text())
    assert set(d) == {"lambda_star", "order", "error_bar", "flagged"}
