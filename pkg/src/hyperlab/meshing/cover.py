"""Cyclic covers of a mesh cut along a closed edge cycle.

The surface is cut along a simple closed edge cycle ``C``; ``n`` copies of
the cut surface are glued in a ring, the right bank of ``C`` in copy ``j``
to the left bank in copy ``j + 1``.  Triangles keep their intrinsic side
lengths, so the result is again an intrinsic mesh.
"""
from dataclasses import dataclass, field

import numpy as np

from ..errors import DomainError, MeshError
from ..geometry import hyperbolic as hb


@dataclass
class CoverMesh:
    base: object
    sheets: int
    n_vertices: int
    triangles: np.ndarray
    lengths: np.ndarray
    h: float
    cycle: np.ndarray
    meta: dict = field(default_factory=dict)

    punctures = 0

    def areas(self):
        a, b, c = self.lengths.T
        return hb.triangle_area(a, b, c)

    def area(self):
        return float(self.areas().sum())

    def angles(self):
        a, b, c = self.lengths.T
        return np.stack(hb.triangle_angles(a, b, c), axis=1)

    def edges(self):
        T = self.triangles
        E = np.concatenate([T[:, [0, 1]], T[:, [1, 2]], T[:, [2, 0]]])
        E.sort(axis=1)
        return np.unique(E, axis=0)

    def euler_characteristic(self):
        return self.n_vertices - len(self.edges()) + len(self.triangles)

    def deck(self, v):
        """Image of a cover vertex under the deck transformation."""
        nb = self.base.n_vertices
        return (v + nb) % (self.sheets * nb)


def simplify_cycle(walk):
    """Remove backtracking spikes ``a b a`` from a closed vertex walk."""
    w = list(walk)
    changed = True
    while changed and len(w) > 2:
        changed = False
        out = []
        for v in w:
            out.append(v)
            if len(out) >= 3 and out[-1] == out[-3]:
                del out[-2:]
                changed = True
        # the wrap-around
        while len(out) > 2 and out[1] == out[-1]:
            out = out[1:-1]
            changed = True
        while len(out) > 1 and out[0] == out[-1]:
            out.pop()
            changed = True
        w = out
    return np.array(w, dtype=np.int64)


def _left_sides(m, cycle):
    """Set of (triangle, corner) pairs lying left of the oriented cycle."""
    T = m.triangles
    follow = {}
    for t, (a, b, c) in enumerate(T):
        follow[(a, b)] = (t, 0, c)
        follow[(b, c)] = (t, 1, a)
        follow[(c, a)] = (t, 2, b)
    n = len(cycle)
    left = set()
    for i, u in enumerate(cycle):
        nxt, prv = cycle[(i + 1) % n], cycle[i - 1]
        key = (u, nxt)
        for _ in range(len(T)):
            if key not in follow:
                raise MeshError("cut cycle runs along the mesh boundary")
            t, corner, x = follow[key]
            left.add((t, corner))
            if x == prv:
                break
            key = (u, x)
        else:
            raise MeshError("fan walk around a cycle vertex did not close")
    return left


def cyclic_cover(m, cycle, sheets):
    """``sheets``-fold cyclic cover of mesh ``m`` cut along ``cycle``."""
    if sheets < 2:
        raise DomainError("a cover needs at least two sheets")
    cyc = simplify_cycle(cycle)
    if len(set(cyc.tolist())) != len(cyc):
        raise MeshError("cut cycle is not simple")
    on = np.zeros(m.n_vertices, dtype=bool)
    on[cyc] = True
    left = _left_sides(m, cyc)
    T = m.triangles
    shift = np.zeros(T.shape, dtype=np.int64)
    for t, corner in zip(*np.nonzero(on[T])):
        if (t, corner) not in left:
            shift[t, corner] = 1
    nb = m.n_vertices
    tris = []
    for j in range(sheets):
        tris.append(((j + shift) % sheets) * nb + T)
    cover = CoverMesh(m, sheets, sheets * nb, np.vstack(tris), np.tile(m.lengths, (sheets, 1)),
                      m.h, cyc)
    chi = cover.euler_characteristic()
    base_chi = m.n_vertices - len(m.edges()) + len(m.triangles)
    if chi != sheets * base_chi:
        raise MeshError(f"cover has chi {chi}, expected {sheets * base_chi}")
    return cover
