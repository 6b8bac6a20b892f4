import json

import numpy as np
import pytest

from hyperlab.errors import BudgetError, DomainError
from hyperlab.lab.config import load_preset
from hyperlab.lab.probe import grid_graph, probe_b2, quarter_tolerance


def test_grid_graph_components():
    assert grid_graph((3, 3), []) == []
    # corners of a 3x3 grid are isolated from each other
    assert grid_graph((3, 3), [0, 8]) == [[0], [8]]
    assert grid_graph((3, 3), [0, 1, 2, 5, 8]) == [[0, 1, 2, 5, 8]]
    # diagonal neighbours are not adjacent
    assert grid_graph((2, 2), [0, 3]) == [[0], [3]]
    assert grid_graph((2, 2, 2), list(range(8))) == [list(range(8))]


def test_quarter_tolerance():
    assert quarter_tolerance(0.1, 0.2, 1e-8) == pytest.approx(1e-7 + 0.5 * 0.25 * 0.04)
    assert quarter_tolerance(2.0, 0.2, 1e-8) == pytest.approx(1e-7 + 0.5 * 2.0 * 0.04)


@pytest.fixture(scope="module")
def two_pieces():
    return probe_b2("theta", [[0.3, 3.0, 10.0], [0.3, 1.0], [0.3, 1.0]],
                    [[0.0], [0.0], [0.0]], 0.25)


def test_sublevel_set_in_two_pieces(two_pieces):
    r = two_pieces
    # all short: one pinched piece; c0 very long: a second piece
    assert r.components == [[0], [8, 9, 10, 11]]
    assert r.disconnected
    d = r.to_dict()
    assert d["grid_components"] == 2 and d["resolution"]["shape"] == [3, 2, 2, 1, 1, 1]
    for s in r.samples:
        assert s["systole"] <= min(s["lengths"]) + 1e-12
        if s["above"]:
            assert s["lambda1"] > 0.25 + s["margin"]
    assert 0 < r.min_systole_above() <= 1.0
    json.loads(r.to_json())


def test_long_curve_systole(two_pieces):
    # a short geodesic crossing the long curve's collar
    s = two_pieces.samples[11]
    assert s["lengths"] == [10.0, 1.0, 1.0]
    assert s["systole"] < 1.0


def test_bolza_neighbourhood_above():
    b = load_preset("bolza")
    L, T = b.lengths[0], b.twists[0]
    r = probe_b2("theta", [[L - 0.05, L + 0.05], [L], [L]], [[T], [T - 0.05, T + 0.05], [T]],
                 0.3)
    assert len(r.samples) == 4
    assert r.components == [] and r.grid_components == 0
    assert all(s["above"] for s in r.samples)
    assert r.max_lambda1()["value"] > 3.5


def test_empty_grid():
    r = probe_b2("theta", [[], [1.0], [1.0]], [[0.0], [0.0], [0.0]], 0.3)
    assert r.samples == [] and r.components == []
    assert r.min_systole_above() is None and r.max_lambda1() is None


def test_probe_checks():
    with pytest.raises(BudgetError):
        probe_b2("theta", [list(np.linspace(1, 2, 5))] * 3, [[0.0]] * 3, 0.3, budget=100)
    with pytest.raises(DomainError):
        probe_b2("theta", [[1.0], [1.0]], [[0.0]] * 3, 0.3)
