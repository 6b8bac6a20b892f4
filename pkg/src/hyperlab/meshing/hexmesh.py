"""Triangulation of a single (possibly cusped) right-angled hexagon.

The compact core of the hexagon is meshed with Triangle in a Poincare disk
chart centred on the hexagon; every cusp region above the horocycle
``y = y_c`` is meshed by a structured grid in its cusp chart, where the
ideal vertex sits at infinity between the seams ``Re z = 0`` and
``Re z = pi``.  All vertices carry hyperboloid coordinates of the piece
(chart) they are used in; side lengths are measured there.
"""
import math
from dataclasses import dataclass, field

import numpy as np
from meshpy import triangle

from ..geometry import hyperbolic as hb
from ..geometry.hexagon import next_seam, prev_seam
from ..errors import MeshError

KAPPA = 1.0 / 3.0       # elements across the narrowest width
GROWTH = 0.3            # sizing gradation away from prescribed spacings
MIN_ANGLE = 28.0        # Triangle quality bound (degrees)
CUSP_MIN_COLUMNS = 4    # columns per hexagon half-horocycle at the top
CUSP_HEIGHT = np.pi     # horocycle of length 2 on the full pants: embedded
CUSP_GAP = 0.5          # minimal core seam length between two cusp interfaces
SAFETY = (0.95, 0.85, 0.75)   # successive refinement factors on the sizing
SEAM_FACTOR = 0.85      # seam nodes slightly denser so Triangle can meet h


@dataclass
class HexMesh:
    """Mesh of one hexagon in local vertex numbering.

    ``pieces[0]`` is the core chart; ``pieces[1:]`` are cusp charts.  Each
    piece has ``to_std``: SL2 map from its upper half-plane coordinates to
    the standard position of the hexagon.
    """
    n_vertices: int
    triangles: np.ndarray           # (T, 3) local ids, counter-clockwise
    tri_piece: np.ndarray           # (T,) index into pieces
    pieces: list                    # dicts: kind, slot, to_std, pos (V,3) with NaN rows
    b_nodes: dict                   # slot -> ids from start to end of b[slot]
    seam_nodes: dict                # seam -> ids in counter-clockwise order
    top_nodes: dict                 # cusp slot -> truncation row ids, x increasing
    on_seam: np.ndarray             # (V,) bool
    std: np.ndarray                 # (V,) complex: standard upper half-plane position
    meta: dict = field(default_factory=dict)


def _line_through(z1, z2):
    X1, X2 = hb.uhp_to_hyperboloid(z1), hb.uhp_to_hyperboloid(z2)
    return hb.line_normal(X1, X2)


def _segment_points(z1, z2, ts):
    """Points on the geodesic from z1 to z2 at fractions ``ts`` of its length.

    Works in the disk centred at z1 so that long segments ending near the
    real axis keep full relative precision.
    """
    z1, z2 = complex(z1), complex(z2)
    x1, y1 = z1.real, z1.imag
    w2 = (z2 - x1) / y1
    om = (w2 - 1j) / (w2 + 1j)
    d = float(hb.uhp_distance(z1, z2))
    r = np.tanh(0.5 * np.asarray(ts, float) * d) * (om / abs(om))
    w = 1j * (1 + r) / (1 - r)
    out = x1 + y1 * w
    out[np.asarray(ts) == 0] = z1
    out[np.asarray(ts) == 1] = z2
    return out, d


class Sizing:
    """Target intrinsic edge length as a function of position.

    ``lines`` are unit normals (hyperboloid, chart frame) of the hexagon
    sides in counter-clockwise order, ``None`` for collapsed cusp sides.
    """

    def __init__(self, h, lines, b_spacing, cusp_terms):
        self.h = h
        self.lines = [None if n is None else tuple(float(v) for v in n) for n in lines]
        m = len(lines)
        live = [i for i in range(m) if lines[i] is not None]
        # sides adjacent in the cyclic order, skipping collapsed sides, are
        # neighbours; every other pair bounds a width of the hexagon.
        adj = set()
        for a, i in enumerate(live):
            j = live[(a + 1) % len(live)]
            adj.add((min(i, j), max(i, j)))
        self.pairs = [(i, j) for a, i in enumerate(live) for j in live[a + 1:]
                      if (i, j) not in adj]
        self.b_spacing = b_spacing        # list of (side index, spacing)
        self.cusp_terms = cusp_terms      # list of (M chart->cusp, y_c, spacing)

    def __call__(self, X0, X1, X2):
        d = [None] * len(self.lines)
        for i, n in enumerate(self.lines):
            if n is not None:
                d[i] = math.asinh(abs(-X0 * n[0] + X1 * n[1] + X2 * n[2]))
        s = self.h
        for i, j in self.pairs:
            s = min(s, KAPPA * (d[i] + d[j]))
        for i, sp in self.b_spacing:
            s = min(s, sp + GROWTH * d[i])
        if self.cusp_terms:
            y = 1.0 / (X0 - X2)
            w = complex(X1 * y, y)
            for M, yc, sp in self.cusp_terms:
                yk = w.imag / abs(M[1, 0] * w + M[1, 1]) ** 2
                s = min(s, sp + GROWTH * max(0.0, math.log(yc / yk)))
        return s

    def vec(self, X):
        X = np.atleast_2d(X)
        return np.array([self(*x) for x in X])


def _disk_dist(u, v):
    du = 1.0 - (u[0] * u[0] + u[1] * u[1])
    dv = 1.0 - (v[0] * v[0] + v[1] * v[1])
    e = math.hypot(u[0] - v[0], u[1] - v[1])
    return 2.0 * math.asinh(e / math.sqrt(du * dv))


def _disk_to_X(u):
    r2 = u[0] * u[0] + u[1] * u[1]
    den = 1.0 - r2
    return (1 + r2) / den, 2 * u[0] / den, 2 * u[1] / den


def _graded_nodes(z1, z2, sizing, to_chart, n_samples=600):
    """Interior node fractions along the geodesic z1 -> z2 (standard frame)."""
    ts = np.linspace(0.0, 1.0, n_samples)
    pts, d = _segment_points(z1, z2, ts)
    X = hb.uhp_to_hyperboloid(hb.mobius_array(to_chart, pts))
    sig = sizing.vec(X)
    dens = 1.0 / (SEAM_FACTOR * sig)
    cum = np.concatenate([[0.0], np.cumsum(0.5 * (dens[1:] + dens[:-1]) * np.diff(ts) * d)])
    m = max(1, int(math.ceil(cum[-1] - 1e-9)))
    targets = np.linspace(0.0, cum[-1], m + 1)[1:-1]
    return np.interp(targets, cum, ts)


def _max_disk_edge(P, T):
    out = 0.0
    for i in range(3):
        a, b = P[T[:, i]], P[T[:, (i + 1) % 3]]
        da = 1.0 - (a * a).sum(1)
        db = 1.0 - (b * b).sum(1)
        e = np.hypot(*(a - b).T)
        out = max(out, float((2.0 * np.arcsinh(e / np.sqrt(da * db))).max()))
    return out


def b_side_spacing(hx, h, n_samples=64):
    """Width-limited element size along each compact side ``b[k]``.

    Nodes on a boundary side cannot be split later, so a side running close
    to a non-adjacent side must already carry the finer spacing.
    """
    def cusp_point(k, x):
        return hb.mobius(np.linalg.inv(hx.cusp_charts[k]), complex(x, CUSP_HEIGHT))

    def X(z):
        return hb.uhp_to_hyperboloid(np.array([z], dtype=complex))[0]

    lines = []
    for k in range(3):
        k1 = (k + 1) % 3
        if hx.is_cusp(k):
            lines.append(None)
            za = cusp_point(k, 0.0)
        else:
            lines.append(hb.line_normal(X(hx.start[k]), X(hx.end[k])))
            za = hx.end[k]
        zb = cusp_point(k1, np.pi) if hx.is_cusp(k1) else hx.start[k1]
        lines.append(hb.line_normal(X(za), X(zb)))
    sizing = Sizing(h, lines, [], [])
    out = {}
    for k in range(3):
        if hx.is_cusp(k):
            continue
        pts = _segment_points(hx.start[k], hx.end[k], np.linspace(0.0, 1.0, n_samples))[0]
        out[k] = float(sizing.vec(hb.uhp_to_hyperboloid(np.asarray(pts, dtype=complex))).min())
    return out


def cusp_rows(h, y_c, Y):
    """Row heights and column counts (per half-horocycle) of a cusp grid."""
    n0 = CUSP_MIN_COLUMNS
    while np.pi / (n0 * y_c) > h / math.sqrt(2.0):
        n0 *= 2
    du0 = np.pi / (n0 * y_c)
    m = max(1, int(math.ceil(math.log(Y / y_c) / du0)))
    ys = y_c * (Y / y_c) ** (np.arange(m + 1) / m)
    du = math.log(Y / y_c) / m
    cols = [n0]
    for j in range(1, m + 1):
        n = cols[-1]
        if n // 2 >= CUSP_MIN_COLUMNS and n % 2 == 0 and np.pi / (n * ys[j]) < du / 2:
            n //= 2
        cols.append(n)
    return ys, cols


def mesh_hexagon(hx, h, b_counts, Y=None):
    """Triangulate hexagon ``hx`` (a PantsHexagon in standard position).

    ``b_counts[k]`` is the number of segments on the half-boundary ``b[k]``
    (ignored for cusp slots).  ``Y`` is the cusp truncation height.
    """
    cusps = [k for k in range(3) if hx.is_cusp(k)]
    if cusps and Y is None:
        raise MeshError("cusped hexagon needs a truncation height")

    # cusp interface height: above every other feature seen from the cusp
    y_c = {}
    for k in cusps:
        C = hx.cusp_charts[k]
        ymax = 0.0
        for j in range(3):
            if j == k:
                continue
            if hx.is_cusp(j):
                continue
            for z in _segment_points(hx.start[j], hx.end[j], np.linspace(0, 1, 64))[0]:
                ymax = max(ymax, hb.mobius(C, complex(z)).imag)
        y_c[k] = max(CUSP_HEIGHT, 1.05 * ymax)
        if not y_c[k] < Y:
            raise MeshError(f"truncation height {Y} below cusp interface {y_c[k]:.3g}")

    def interface_point(k, x):
        Cinv = np.linalg.inv(hx.cusp_charts[k])
        return hb.mobius(Cinv, complex(x, y_c[k]))

    # two length-2 horocycles almost touch when the third boundary is short;
    # raise both interfaces so the seam between them keeps a usable length
    for k in cusps:
        k1 = (k + 1) % 3
        if hx.is_cusp(k1):
            gap = float(hb.uhp_distance(interface_point(k, 0.0), interface_point(k1, np.pi)))
            if gap < CUSP_GAP:
                f = math.exp(0.5 * (CUSP_GAP - gap))
                y_c[k] *= f
                y_c[k1] *= f
    for k in cusps:
        if not y_c[k] < Y:
            raise MeshError(f"truncation height {Y} below cusp interface {y_c[k]:.3g}")
    rows = {k: cusp_rows(h, y_c[k], Y) for k in cusps}

    # corner points of the core polygon, counter-clockwise, per side
    # side order: b0, seam2, b1, seam0, b2, seam1
    sides = []          # (kind, index, z_start, z_end)
    for k in range(3):
        j = next_seam(k)
        k1 = (k + 1) % 3
        if hx.is_cusp(k):
            zs = interface_point(k, np.pi)
            ze = interface_point(k, 0.0)
            sides.append(("top", k, zs, ze))
        else:
            sides.append(("b", k, hx.start[k], hx.end[k]))
        za = sides[-1][3]
        zb = interface_point(k1, np.pi) if hx.is_cusp(k1) else hx.start[k1]
        sides.append(("seam", j, za, zb))

    # chart: centre the core at i, then use the Poincare disk
    corners = [s[2] for s in sides]
    Xc = hb.uhp_to_hyperboloid(np.array(corners, dtype=complex)).sum(axis=0)
    Xc = Xc / math.sqrt(-hb.minkowski(Xc, Xc))
    zc = complex(hb.hyperboloid_to_uhp(Xc))
    to_chart = np.array([[1 / math.sqrt(zc.imag), -zc.real / math.sqrt(zc.imag)],
                         [0.0, math.sqrt(zc.imag)]])
    from_chart = np.linalg.inv(to_chart)

    def chart_X(z):
        return hb.uhp_to_hyperboloid(hb.mobius_array(to_chart, z))

    # side lines in the chart frame
    lines = []
    for kind, idx, za, zb in sides:
        if kind == "top":
            lines.append(None)
        else:
            lines.append(hb.line_normal(chart_X(za), chart_X(zb)))
    b_spacing = []
    for si, (kind, idx, za, zb) in enumerate(sides):
        if kind == "b":
            b_spacing.append((si, hx.b[idx] / b_counts[idx]))
    cusp_terms = []
    for k in cusps:
        M = hx.cusp_charts[k] @ from_chart
        cusp_terms.append((M, y_c[k], math.pi / (rows[k][1][0] * y_c[k])))
    sizing = Sizing(h, lines, b_spacing, cusp_terms)

    # boundary nodes (standard frame), counter-clockwise
    bnd, labels = [], []
    b_pos, seam_pos, top_pos = {}, {}, {}
    for kind, idx, za, zb in sides:
        if kind == "b":
            n = b_counts[idx]
            F = hx.frames[idx]
            pts = [hb.mobius(F @ hb.translation(i * hx.b[idx] / n), 1j) for i in range(n)]
            b_pos[idx] = list(range(len(bnd), len(bnd) + n + 1))
        elif kind == "top":
            n = rows[idx][1][0]
            xs = np.pi - np.pi * np.arange(n) / n
            pts = [interface_point(idx, x) for x in xs]
            top_pos[idx] = list(range(len(bnd), len(bnd) + n + 1))
        else:
            fr = _graded_nodes(za, zb, sizing, to_chart)
            pts = [za] + list(_segment_points(za, zb, fr)[0])
            seam_pos[idx] = list(range(len(bnd), len(bnd) + len(pts) + 1))
        bnd.extend(pts)
        labels.extend([kind] * len(pts))
    nb = len(bnd)
    for dct in (b_pos, seam_pos, top_pos):
        for key in dct:
            dct[key] = [i % nb for i in dct[key]]

    U = hb.hyperboloid_to_disk(chart_X(np.array(bnd, dtype=complex)))
    pts2 = np.column_stack([U.real, U.imag])

    info = triangle.MeshInfo()
    info.set_points(pts2.tolist())
    info.set_facets([(i, (i + 1) % nb) for i in range(nb)])
    # sizing is only sampled at centroids and Triangle may leave a few
    # boundary-adjacent edges slightly long; tighten until none exceeds h
    for safety in SAFETY:
        def refine(vertices, area, safety=safety):
            a, b, c = vertices
            lmax = max(_disk_dist(a, b), _disk_dist(b, c), _disk_dist(c, a))
            g = ((a[0] + b[0] + c[0]) / 3.0, (a[1] + b[1] + c[1]) / 3.0)
            return lmax > safety * sizing(*_disk_to_X(g))

        tri = triangle.build(info, refinement_func=refine, min_angle=MIN_ANGLE,
                             allow_boundary_steiner=False)
        P = np.array(tri.points)
        T = np.array(tri.elements, dtype=np.int64)
        if _max_disk_edge(P, T) <= h * (1 + 1e-9):
            break
    if not np.allclose(P[:nb], pts2, atol=1e-12):
        raise MeshError("Triangle reordered boundary vertices")
    core_X = hb.disk_to_hyperboloid(P[:, 0] + 1j * P[:, 1])
    core_std = hb.mobius_array(from_chart, hb.hyperboloid_to_uhp(core_X))
    nv = len(P)

    tris = [T]
    tri_piece = [np.zeros(len(T), dtype=np.int64)]
    std = list(core_std)
    pieces = [{"kind": "core", "slot": None, "to_std": from_chart, "ids": np.arange(nv),
               "X": core_X}]
    top_nodes = {}
    cusp_seam_ids = []
    for k in cusps:
        ys, cols = rows[k]
        C = hx.cusp_charts[k]
        Cinv = np.linalg.inv(C)
        # bottom row: interface ids from the core, ordered by x increasing
        row_ids = list(reversed(top_pos[k]))
        zs = [complex(np.pi * i / cols[0], ys[0]) for i in range(cols[0] + 1)]
        piece_ids, piece_z = list(row_ids), list(zs)
        ktris = []
        for j in range(1, len(ys)):
            n0, n1 = cols[j - 1], cols[j]
            new_ids = list(range(nv, nv + n1 + 1))
            nv += n1 + 1
            new_z = [complex(np.pi * i / n1, ys[j]) for i in range(n1 + 1)]
            std.extend(hb.mobius_array(Cinv, new_z))
            piece_ids += new_ids
            piece_z += new_z
            if n1 == n0:
                for i in range(n0):
                    a, b = row_ids[i], row_ids[i + 1]
                    c, d = new_ids[i], new_ids[i + 1]
                    if (i + j) % 2 == 0:
                        ktris += [(a, b, d), (a, d, c)]
                    else:
                        ktris += [(a, b, c), (b, d, c)]
            else:
                for i in range(n1):
                    b0, b1, b2 = row_ids[2 * i], row_ids[2 * i + 1], row_ids[2 * i + 2]
                    t0, t1 = new_ids[i], new_ids[i + 1]
                    ktris += [(b0, b1, t0), (b1, t1, t0), (b1, b2, t1)]
            row_ids = new_ids
            cusp_seam_ids += [new_ids[0], new_ids[-1]]
        top_nodes[k] = row_ids
        tris.append(np.array(ktris, dtype=np.int64))
        tri_piece.append(np.full(len(ktris), len(pieces), dtype=np.int64))
        pieces.append({"kind": "cusp", "slot": k, "to_std": Cinv,
                       "ids": np.array(piece_ids),
                       "X": hb.uhp_to_hyperboloid(np.array(piece_z))})

    # dense per-piece position tables
    for pc in pieces:
        Xd = np.full((nv, 3), np.nan)
        Xd[pc["ids"]] = pc["X"]
        pc["pos"] = Xd
        del pc["X"]

    on_seam = np.zeros(nv, dtype=bool)
    for ids in seam_pos.values():
        on_seam[ids] = True
    on_seam[cusp_seam_ids] = True
    seam_nodes = {j: ids for j, ids in seam_pos.items()}
    hm = HexMesh(nv, np.vstack(tris), np.concatenate(tri_piece), pieces,
                 b_pos, seam_nodes, top_nodes, on_seam, np.array(std),
                 {"y_c": y_c, "rows": rows, "center": zc,
                  "corners": chart_X(np.array(corners, dtype=complex)),
                  "side_kinds": [(kind, idx) for kind, idx, _, _ in sides]})
    _check_orientation(hm)
    return hm


def _check_orientation(hm):
    for pi, pc in enumerate(hm.pieces):
        T = hm.triangles[hm.tri_piece == pi]
        X = pc["pos"][T]                      # (t, 3, 3)
        if np.isnan(X).any():
            raise MeshError("triangle uses a vertex missing from its chart")
        K = X[:, :, 1:] / X[:, :, :1]
        e1, e2 = K[:, 1] - K[:, 0], K[:, 2] - K[:, 0]
        det = e1[:, 0] * e2[:, 1] - e1[:, 1] * e2[:, 0]
        if not (det > 0).all():
            raise MeshError(f"{int((det <= 0).sum())} inverted triangles in piece {pi}")
