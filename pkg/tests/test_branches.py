import json

import numpy as np
import pytest

from hyperlab import branches as br
from hyperlab.errors import DomainError
from hyperlab.geometry.paths import linear_path, pinch_path
from hyperlab.geometry.teichmuller import fn_point

PINCHED = fn_point("theta", (0.1, 0.1, 0.1))


@pytest.fixture(scope="module")
def swap_family():
    """Moves the short curve from c0 to c2: lambda_1 and lambda_2 exchange order."""
    path = linear_path(fn_point("theta", (0.3, 2, 2)), fn_point("theta", (2, 2, 0.3)))
    return br.track(path, 4, 5, 0.3)


def test_constant_path():
    f = br.track(linear_path(PINCHED, PINCHED), 3, 4, 0.25)
    assert not f.crossings
    for b in f.branches:
        assert np.ptp(b.values) <= 10 * f.tol
        assert b.continuity_certificate > 0.99
    assert f.multiset_consistent()
    assert br.exceed_quarter(f) is None


def test_overlap_symmetry():
    rng = np.random.default_rng(0)
    Ua = np.linalg.qr(rng.standard_normal((50, 5)))[0]
    Ub = Ua[:, [2, 0, 1, 4, 3]] + 1e-3 * rng.standard_normal((50, 5))
    ab, _, _ = br.match(Ua, Ub)
    ba, _, _ = br.match(Ub, Ua)
    assert (ba[ab] == np.arange(5)).all()
    assert list(ab) == [1, 2, 0, 4, 3]


def test_match_flags_ties():
    U = np.eye(4)
    V = np.eye(4)
    V[:, [0, 1]] = (np.eye(4)[:, [0, 1]] @ np.array([[1, 1], [1, -1]])) / np.sqrt(2)
    _, _, amb = br.match(U, V)
    assert amb[0] and amb[1] and not amb[2]


def test_crossings_and_multisets(swap_family):
    f = swap_family
    assert f.multiset_consistent()
    assert f.crossings
    for c in f.crossings:
        i, j = c["branches"]
        n0, n1 = list(f.ts).index(c["t0"]), list(f.ts).index(c["t1"])
        a, b = f.branches[i], f.branches[j]
        assert (a.values[n0] - b.values[n0]) * (a.values[n1] - b.values[n1]) < 0
        # identity across the step was decided by eigenvector overlap
        assert min(a.overlaps[n1], b.overlaps[n1]) >= f.branches[i].threshold


def test_branch_may_end_at_other_index(swap_family):
    f = swap_family
    b = f.branch(1)
    assert br.starts_as(b, 1, f)
    assert len(set(b.indices)) > 1


def test_starts_as(swap_family):
    f = swap_family
    assert br.starts_as(f.branch(0), 0, f)
    assert np.ptp(f.branch(0).values) <= 10 * f.tol
    assert not br.starts_as(f.branch(2), 1, f)


def test_pinched_region_never_exceeds_quarter():
    path = pinch_path(fn_point("theta", (0.2, 0.2, 0.2)), ["c0", "c1", "c2"], 0.1)
    f = br.track(path, 3, 3, 0.25)
    assert br.exceed_quarter(f) is None
    assert (f.eigenvalues[:, 1] < 0.25).all()


def test_exceed_quarter_needs_lambda1():
    f = br.track(linear_path(PINCHED, PINCHED), 1, 2, 0.3)
    with pytest.raises(DomainError):
        br.exceed_quarter(f)


def test_track_input_checks():
    with pytest.raises(DomainError):
        br.track(linear_path(PINCHED, PINCHED), 3, 1, 0.3)


# -- coverings ------------------------------------------------------------------


def test_covering_generic_and_zero():
    p = fn_point("theta", (1.5, 2.0, 2.5), (0.3, 0.1, 0.7))
    r = br.covering_audit(p, 3, 6, 0.2)
    assert r["containment"] and r["cover_range_sufficient"]
    assert r["matches"][0]["lambda"] == 0 and r["matches"][0]["cover"] == 0
    # the cover has eigenvalues of its own (odd part) below the largest match
    assert len(r["cover"]) > len(r["base"])


def test_covering_pinched_lambda1_equal():
    r = br.covering_audit(PINCHED, 3, 4, 0.2, cut="dual-c1")
    assert r["lambda1_equal"] and r["containment"]


def test_covering_four_and_three_sheets_contain_base():
    p = fn_point("theta", (1.0, 1.2, 1.4))
    for g in (3, 4):
        assert br.covering_audit(p, g, 4, 0.25)["containment"]


def test_covering_checks():
    with pytest.raises(DomainError):
        br.covering_audit(fn_point("sphere4", (1,)), 3, 3, 0.2)
    with pytest.raises(DomainError):
        br.covering_audit(PINCHED, 2, 3, 0.2)


def test_lifted_constant_path():
    lb = br.lifted_branch(linear_path(PINCHED, PINCHED), 3, 3, 2, 0.25)
    assert all(lb.meta["contains_base"])


def test_match_tolerance():
    assert br.match_tolerance(1e-8, 0.1) == pytest.approx(0.5 * 0.01)
    assert br.match_tolerance(1e-3, 0.01) == pytest.approx(0.02)


def test_branch_outputs(tmp_path, swap_family):
    br.write_branch_csv(swap_family, tmp_path / "b.csv")
    br.write_crossings_json(swap_family, tmp_path / "c.json")
    lines = (tmp_path / "b.csv").read_text().splitlines()
    assert lines[0] == "t,branch_id,lambda,overlap,flag"
    assert len(lines) == 1 + len(swap_family.ts) * swap_family.k
    assert json.loads((tmp_path / "c.json").read_text()) == swap_family.crossings
