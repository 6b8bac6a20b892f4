"""Global triangulated surfaces glued from hexagon meshes.

Every pair of pants is the double of a right-angled hexagon ``H``; the
mirror copy ``H'`` reuses the vertex positions of ``H`` with reversed
triangles and shares its seam vertices.  Along a curve of length ``l`` with
``N`` nodes, node ``j`` sits at arc length ``j l / N`` from the start of
``b[k]``: nodes ``j <= N/2`` belong to ``H`` and nodes ``j >= N/2`` are the
mirror images of ``H`` nodes ``N - j``.  Node ``j`` on the first end is
identified with node ``(m - j) mod N`` on the second end, ``m`` the twist in
node units.

Triangles are stored with intrinsic side lengths; chart coordinates of the
corners (hyperboloid model of the chart each triangle was built in) are kept
for refinement, plotting and point location.
"""
import hashlib
import json
import math
from dataclasses import dataclass, field

import numpy as np

from ..errors import ConditioningError, DomainError, MeshError
from ..geometry import hyperbolic as hb
from ..geometry.hexagon import build_pants_hexagon
from ..geometry.teichmuller import FNPoint
from .hexmesh import b_side_spacing, mesh_hexagon

MIN_ANGLE_FLOOR = 15.0     # degrees
MAX_ASPECT = 100.0         # largest / smallest boundary length in one pants
MIN_CURVE_NODES = 6
DEFAULT_Y = 20.0


@dataclass
class SurfaceMesh:
    point: FNPoint
    h: float
    Y: float                      # cusp truncation height (None if closed)
    n_vertices: int
    triangles: np.ndarray         # (T, 3) global vertex ids, oriented
    lengths: np.ndarray           # (T, 3) side opposite each corner
    tri_hex: np.ndarray           # (T,) hexagon index 2 * pants + half
    tri_piece: np.ndarray         # (T,) -1 for the core, else cusp slot
    tri_local: np.ndarray         # (T, 3) per-hexagon local ids (shared by H and H')
    corner_pos: np.ndarray        # (T, 3, 3) hyperboloid chart coordinates
    hexes: list                   # per hexagon: dict(pants, half, l2g, corners)
    curves: dict                  # curve id -> (N,) closed vertex cycle
    cusp_boundaries: list         # per cusp: dict(cycle, Y, x) ; x = horocycle abscissa
    dual_cycles: list             # dict(name, walk, curves) closed vertex walks
    meta: dict = field(default_factory=dict)

    @property
    def genus(self):
        return self.point.genus

    @property
    def punctures(self):
        return self.point.punctures

    @property
    def n_triangles(self):
        return len(self.triangles)

    def edges(self):
        """Unique undirected edges (E, 2) with min id first."""
        T = self.triangles
        E = np.concatenate([T[:, [0, 1]], T[:, [1, 2]], T[:, [2, 0]]])
        E.sort(axis=1)
        return np.unique(E, axis=0)

    def areas(self):
        a, b, c = self.lengths.T
        return hb.triangle_area(a, b, c)

    def area(self):
        return float(self.areas().sum())

    def expected_area(self):
        g, n = self.genus, self.punctures
        A = 2 * np.pi * (2 * g - 2 + n)
        if n:
            A -= n * 2 * np.pi / self.Y
        return A

    def angles(self):
        a, b, c = self.lengths.T
        return np.stack(hb.triangle_angles(a, b, c), axis=1)

    def euler_characteristic(self):
        return self.n_vertices - len(self.edges()) + len(self.triangles)

    def max_edge(self):
        return float(self.lengths.max())

    def curve_length(self, cid):
        cyc = self.curve_cycle(cid)
        return float(sum(self.edge_length(a, b) for a, b in zip(cyc, np.roll(cyc, -1))))

    def edge_length(self, a, b):
        return self._edge_lengths()[(min(a, b), max(a, b))]

    def _edge_lengths(self):
        if "_elen" not in self.__dict__:
            d = {}
            T, L = self.triangles, self.lengths
            for i in range(3):
                u, v = T[:, (i + 1) % 3], T[:, (i + 2) % 3]
                for a, b, l in zip(u, v, L[:, i]):
                    d[(min(a, b), max(a, b))] = l
            self.__dict__["_elen"] = d
        return self.__dict__["_elen"]

    def curve_cycle(self, cid):
        """Closed vertex cycle of an interior curve (by id or index)."""
        if isinstance(cid, (int, np.integer)):
            cid = self.point.decomposition.curves[int(cid)].id
        if cid not in self.curves:
            raise KeyError(f"unknown curve {cid!r}")
        return self.curves[cid]

    def boundary_length(self, k):
        """Horocyclic length of the truncation circle of cusp k."""
        cb = self.cusp_boundaries[k]
        x = cb["x"]
        return float(np.sum(np.abs(np.diff(np.append(x, x[0] + 2 * np.pi)))) / cb["Y"])


# -- construction ---------------------------------------------------------


def curve_node_count(length, h, twist=None):
    """Even node count with spacing <= h; given a twist, the count is taken
    from [n, 1.25 n] to minimize the snapping error of the node offset."""
    n = max(MIN_CURVE_NODES, int(math.ceil(length / h - 1e-12)))
    n += n % 2
    if twist is None:
        return n
    cands = range(n, n + 2 * int(math.ceil(n / 8)) + 1, 2)
    return min(cands, key=lambda N: (round(abs(twist * N / length - round(twist * N / length)) * length / N, 12), N))


def _check_inputs(p, h):
    if not 1e-3 <= h <= 1.0:
        raise DomainError(f"mesh size h = {h} outside [1e-3, 1]")
    p.check_conditioning()
    dec = p.decomposition
    for q in range(dec.pants_count):
        ls = []
        for s in range(3):
            kind, idx, _ = dec.slots[(q, s)]
            if kind == "curve":
                ls.append(p.lengths[idx])
        if len(ls) > 1 and max(ls) / min(ls) > MAX_ASPECT:
            raise ConditioningError(
                f"pants {q} boundary length ratio {max(ls) / min(ls):.3g} exceeds {MAX_ASPECT:g}")


def mesh_surface(p, h):
    """Mesh of a closed surface with target edge length ``h``."""
    if p.punctures:
        raise DomainError("surface has cusps; use mesh_cusped")
    return _build(p, h, None)


def mesh_cusped(p, Y=DEFAULT_Y, h=0.1):
    """Mesh of a cusped surface truncated at horocycle height ``Y``."""
    if p.punctures == 0:
        raise DomainError("surface has no cusps; use mesh_surface")
    if not Y >= 2:
        raise DomainError(f"truncation height Y = {Y} must be >= 2")
    return _build(p, h, float(Y))


class _UnionFind:
    def __init__(self, n):
        self.parent = np.arange(n)

    def find(self, x):
        p = self.parent
        root = x
        while p[root] != root:
            root = p[root]
        while p[x] != root:
            p[x], x = root, p[x]
        return root

    def union(self, a, b):
        ra, rb = self.find(a), self.find(b)
        if ra != rb:
            # keep the smaller id as representative for determinism
            if ra < rb:
                self.parent[rb] = ra
            else:
                self.parent[ra] = rb


def _build(p, h, Y):
    _check_inputs(p, h)
    dec = p.decomposition
    hexes = []
    for q in range(dec.pants_count):
        b = []
        for s in range(3):
            kind, idx, _ = dec.slots[(q, s)]
            b.append(0.0 if kind == "cusp" else p.lengths[idx] / 2)
        hexes.append(build_pants_hexagon(b))
    # a curve runs along a thin part of its pants: refine it to match
    hc = [h] * len(dec.curves)
    for q, hx in enumerate(hexes):
        for s, sp in b_side_spacing(hx, h).items():
            idx = dec.slots[(q, s)][1]
            hc[idx] = min(hc[idx], sp)
    counts = [curve_node_count(l, hk, t) for l, hk, t in zip(p.lengths, hc, p.twists)]
    meshes = []
    for q, hx in enumerate(hexes):
        bc = []
        for s in range(3):
            kind, idx, _ = dec.slots[(q, s)]
            bc.append(0 if kind == "cusp" else counts[idx] // 2)
        meshes.append((hx, mesh_hexagon(hx, h, bc, Y)))

    # provisional ids: pants q, half e, local v
    offsets, off = [], 0
    for hx, hm in meshes:
        offsets.append(off)
        off += 2 * hm.n_vertices
    uf = _UnionFind(off)

    def pid(q, half, v):
        return offsets[q] + half * meshes[q][1].n_vertices + v

    for q, (hx, hm) in enumerate(meshes):
        for v in np.nonzero(hm.on_seam)[0]:
            uf.union(pid(q, 0, v), pid(q, 1, v))

    def curve_nodes(q, s, N):
        """Provisional ids of the N nodes of slot s of pants q."""
        bn = meshes[q][1].b_nodes[s]
        half = N // 2
        out = [pid(q, 0, bn[j]) for j in range(half + 1)]
        out += [pid(q, 1, bn[N - j]) for j in range(half + 1, N)]
        return out

    snap, shifts = {}, {}
    for ci, c in enumerate(dec.curves):
        (P, a), (Q, b) = c.ends
        N, l = counts[ci], p.lengths[ci]
        m = int(round(p.twists[ci] * N / l))
        snap[c.id] = abs(p.twists[ci] - m * l / N)
        shifts[ci] = m
        A, B = curve_nodes(P, a, N), curve_nodes(Q, b, N)
        for j in range(N):
            uf.union(A[j], B[(m - j) % N])

    roots = np.array([uf.find(i) for i in range(off)])
    uniq, gid = np.unique(roots, return_inverse=True)
    nv = len(uniq)

    tris, tri_hex, tri_piece, tri_local, corner_pos, hex_info = [], [], [], [], [], []
    for q, (hx, hm) in enumerate(meshes):
        for half in (0, 1):
            l2g = gid[offsets[q] + half * hm.n_vertices + np.arange(hm.n_vertices)]
            T = hm.triangles if half == 0 else hm.triangles[:, [0, 2, 1]]
            tris.append(l2g[T])
            tri_local.append(T)
            tri_hex.append(np.full(len(T), 2 * q + half))
            pc_slot = np.array([-1 if pc["kind"] == "core" else pc["slot"] for pc in hm.pieces])
            tri_piece.append(pc_slot[hm.tri_piece])
            pos = np.empty((len(T), 3, 3))
            for pi, pc in enumerate(hm.pieces):
                sel = hm.tri_piece == pi
                pos[sel] = pc["pos"][T[sel]]
            corner_pos.append(pos)
            hex_info.append({"pants": q, "half": half, "l2g": l2g,
                             "corners": hm.meta["corners"],
                             "side_kinds": hm.meta["side_kinds"],
                             "y_c": dict(hm.meta["y_c"]), "Y": Y})
    triangles = np.vstack(tris)
    corner_pos = np.vstack(corner_pos)
    lengths = np.empty(triangles.shape)
    for i in range(3):
        lengths[:, i] = hb.distance(corner_pos[:, (i + 1) % 3], corner_pos[:, (i + 2) % 3])

    curves = {}
    for ci, c in enumerate(dec.curves):
        P, a = c.ends[0]
        curves[c.id] = gid[np.array(curve_nodes(P, a, counts[ci]))]

    cusp_boundaries = []
    for k, (q, s) in enumerate(dec.cusp_slots):
        hm = meshes[q][1]
        top = hm.top_nodes[s]
        ids = [pid(q, 0, v) for v in top] + [pid(q, 1, v) for v in top[-2:0:-1]]
        n = len(top) - 1
        x = np.concatenate([np.pi * np.arange(n + 1) / n, np.pi + np.pi * np.arange(1, n) / n])
        cusp_boundaries.append({"cycle": gid[np.array(ids)], "Y": Y, "x": x})

    m = SurfaceMesh(p, float(h), Y, nv, triangles, lengths,
                    np.concatenate(tri_hex), np.concatenate(tri_piece),
                    np.vstack(tri_local), corner_pos, hex_info, curves,
                    cusp_boundaries, [],
                    {"curve_nodes": {c.id: counts[i] for i, c in enumerate(dec.curves)},
                     "twist_snapping": snap,
                     "max_twist_snapping": max(snap.values(), default=0.0),
                     "levels": 0})
    m.dual_cycles = _dual_cycles(m, meshes, gid, pid, counts, shifts)
    validate(m)
    return m


# -- dual cycles ----------------------------------------------------------


def _seam_between(a, b):
    """Seam joining slots a and b of a pants (the seam opposite the third slot)."""
    return 3 - a - b


def _dual_cycles(m, meshes, gid, pid, counts, shifts):
    """Closed walks crossing pants curves, one per cycle of the pants graph.

    Inside a pants the walk follows the boundary from its entry node to the
    end of the seam leading to the exit slot, runs along that seam in ``H``,
    then along the exit boundary to node 0, which the gluing sends to node
    ``m`` of the next pants.
    """
    dec = m.point.decomposition
    adj = {q: [] for q in range(dec.pants_count)}
    for ci, c in enumerate(dec.curves):
        (P, a), (Q, b) = c.ends
        adj[P].append((ci, a, Q, b))
        adj[Q].append((ci, b, P, a))
    parent, tree, queue = {0: None}, set(), [0]
    while queue:
        x = queue.pop(0)
        for ci, sx, y, sy in sorted(adj[x]):
            if y not in parent:
                parent[y] = (ci, sy, x, sx)   # y reached from x via curve ci
                tree.add(ci)
                queue.append(y)

    def up(x):
        out = []
        while parent[x] is not None:
            out.append((x,) + parent[x])
            x = parent[x][2]
        return out

    def slot_ids(q, s):
        N = counts[dec.slots[(q, s)][1]]
        bn = meshes[q][1].b_nodes[s]
        ids = [pid(q, 0, bn[j]) for j in range(N // 2 + 1)]
        ids += [pid(q, 1, bn[N - j]) for j in range(N // 2 + 1, N)]
        return gid[np.array(ids)]

    def arc(q, s, i0, i1):
        ids = slot_ids(q, s)
        N = len(ids)
        fwd = (i1 - i0) % N
        if fwd <= N - fwd:
            idx = [(i0 + t) % N for t in range(fwd + 1)]
        else:
            idx = [(i0 - t) % N for t in range(N - fwd + 1)]
        return list(ids[idx])

    def leg(q, s_in, i_in, s_out):
        j = _seam_between(s_in, s_out)
        seam = [gid[pid(q, 0, v)] for v in meshes[q][1].seam_nodes[j]]
        N_in = counts[dec.slots[(q, s_in)][1]]
        N_out = counts[dec.slots[(q, s_out)][1]]
        # seam j runs from end[(j+1)%3] (node N/2) to start[(j+2)%3] (node 0)
        if s_in == (j + 1) % 3:
            e_in, e_out = N_in // 2, 0
        else:
            e_in, e_out = 0, N_out // 2
            seam = seam[::-1]
        return arc(q, s_in, i_in, e_in) + seam + arc(q, s_out, e_out, 0)

    cycles = []
    for ci, c in enumerate(dec.curves):
        if ci in tree:
            continue
        (P, a), (Q, b) = c.ends
        uq, up_ = up(Q), up(P)
        while uq and up_ and uq[-1] == up_[-1]:
            uq.pop()
            up_.pop()
        route = [(ci, (P, a), (Q, b))]
        for x, cj, sx, y, sy in uq:                 # climb from Q
            route.append((cj, (x, sx), (y, sy)))
        for x, cj, sx, y, sy in reversed(up_):      # descend to P
            route.append((cj, (y, sy), (x, sx)))
        walk = []
        for k, (cj, _, (q, s_in)) in enumerate(route):
            nxt = route[(k + 1) % len(route)]
            if nxt[1][0] != q:
                raise MeshError("dual cycle route is not connected")
            walk += leg(q, s_in, shifts[cj] % counts[cj], nxt[1][1])
        crossed = {}
        for cj, _, _ in route:
            cid = dec.curves[cj].id
            crossed[cid] = crossed.get(cid, 0) + 1
        cycles.append({"name": f"dual-{c.id}", "walk": np.array(_dedupe(walk)),
                       "curves": crossed})
    return cycles


def _dedupe(walk):
    out = []
    for v in walk:
        if not out or out[-1] != v:
            out.append(v)
    if len(out) > 1 and out[0] == out[-1]:
        out.pop()
    return out


# -- validation -----------------------------------------------------------


def validate(m):
    """Raise MeshError if the complex is not a valid oriented surface mesh."""
    T = m.triangles
    if (T[:, 0] == T[:, 1]).any() or (T[:, 1] == T[:, 2]).any() or (T[:, 0] == T[:, 2]).any():
        raise MeshError("degenerate triangle with repeated vertex")
    a, b, c = m.lengths.T
    if not ((a < b + c) & (b < a + c) & (c < a + b)).all():
        bad = int(np.nonzero(~((a < b + c) & (b < a + c) & (c < a + b)))[0][0])
        raise MeshError(f"triangle {bad} violates the triangle inequality")
    ang = np.degrees(m.angles())
    if ang.min() < MIN_ANGLE_FLOOR:
        bad = int(np.argmin(ang.min(axis=1)))
        raise MeshError(f"triangle {bad} has angle {ang.min():.2f} deg < {MIN_ANGLE_FLOOR}")
    D = np.concatenate([T[:, [0, 1]], T[:, [1, 2]], T[:, [2, 0]]])
    key = np.minimum(D[:, 0], D[:, 1]) * m.n_vertices + np.maximum(D[:, 0], D[:, 1])
    uk, inv, cnt = np.unique(key, return_inverse=True, return_counts=True)
    if (cnt > 2).any():
        raise MeshError("edge shared by more than two triangles")
    # orientation: a shared edge must appear once in each direction
    fwd = D[:, 0] < D[:, 1]
    s = np.zeros(len(uk))
    np.add.at(s, inv, np.where(fwd, 1, -1))
    if (np.abs(s[cnt == 2]) != 0).any():
        raise MeshError("inconsistent orientation across a glued edge")
    bnd = set(uk[cnt == 1].tolist())
    want = set()
    for cb in m.cusp_boundaries:
        cyc = cb["cycle"]
        for u, v in zip(cyc, np.roll(cyc, -1)):
            want.add(min(u, v) * m.n_vertices + max(u, v))
    if bnd != want:
        raise MeshError(f"{len(bnd ^ want)} boundary edges off the cusp truncation circles")
    chi = m.euler_characteristic()
    if chi != 2 - 2 * m.genus - m.punctures:
        raise MeshError(f"Euler characteristic {chi} != {2 - 2 * m.genus - m.punctures}")


# -- refinement -----------------------------------------------------------


def refine(m):
    """Quadrisect every triangle through geodesic edge midpoints.

    Midpoints of truncation-circle edges are placed on the horocycle so the
    truncation height is preserved.
    """
    T, P, TL = m.triangles, m.corner_pos, m.tri_local
    nT = len(T)
    nv = m.n_vertices
    on_top = np.zeros(nv, dtype=bool)
    for cb in m.cusp_boundaries:
        on_top[cb["cycle"]] = True
    edge_mid = {}
    local_mid = [dict() for _ in m.hexes]
    nloc = [int(h["l2g"].shape[0]) for h in m.hexes]
    # midpoints keyed by global edge; local ids keyed per hexagon pair (H, H')
    new_l2g = [list(h["l2g"]) for h in m.hexes]
    mids = np.empty((nT, 3), dtype=np.int64)
    mids_local = np.empty((nT, 3), dtype=np.int64)
    mid_pos = np.empty((nT, 3, 3))
    for t in range(nT):
        hidx = m.tri_hex[t]
        base = hidx - (hidx % 2)
        for i in range(3):
            u, v = T[t, (i + 1) % 3], T[t, (i + 2) % 3]
            key = (min(u, v), max(u, v))
            if key not in edge_mid:
                edge_mid[key] = nv
                nv += 1
            g = edge_mid[key]
            lu, lv = TL[t, (i + 1) % 3], TL[t, (i + 2) % 3]
            lkey = (min(lu, lv), max(lu, lv))
            lm = local_mid[base]
            if lkey not in lm:
                lm[lkey] = nloc[base]
                nloc[base] += 1
                nloc[base + 1] = nloc[base]
                new_l2g[base].append(-1)
                new_l2g[base + 1].append(-1)
            lid = lm[lkey]
            new_l2g[hidx][lid] = g
            mids[t, i] = g
            mids_local[t, i] = lid
            Xu, Xv = P[t, (i + 1) % 3], P[t, (i + 2) % 3]
            if on_top[u] and on_top[v] and m.tri_piece[t] >= 0:
                zu, zv = hb.hyperboloid_to_uhp(Xu), hb.hyperboloid_to_uhp(Xv)
                zm = complex(0.5 * (zu.real + zv.real), zu.imag)
                mid_pos[t, i] = hb.uhp_to_hyperboloid(zm)
            else:
                mid_pos[t, i] = hb.midpoint(Xu, Xv)
    # children: corner triangles and the middle one (mid i is opposite corner i)
    a, b, c = T.T
    ma, mb, mc = mids.T
    newT = np.concatenate([
        np.stack([a, mc, mb], 1), np.stack([mc, b, ma], 1),
        np.stack([mb, ma, c], 1), np.stack([ma, mb, mc], 1)])
    la, lb, lc = TL.T
    lma, lmb, lmc = mids_local.T
    newTL = np.concatenate([
        np.stack([la, lmc, lmb], 1), np.stack([lmc, lb, lma], 1),
        np.stack([lmb, lma, lc], 1), np.stack([lma, lmb, lmc], 1)])
    Pa, Pb, Pc = P[:, 0], P[:, 1], P[:, 2]
    Ma, Mb, Mc = mid_pos[:, 0], mid_pos[:, 1], mid_pos[:, 2]
    newP = np.concatenate([
        np.stack([Pa, Mc, Mb], 1), np.stack([Mc, Pb, Ma], 1),
        np.stack([Mb, Ma, Pc], 1), np.stack([Ma, Mb, Mc], 1)])
    lengths = np.empty(newT.shape)
    for i in range(3):
        lengths[:, i] = hb.distance(newP[:, (i + 1) % 3], newP[:, (i + 2) % 3])

    def refine_cycle(cyc):
        out = []
        for u, v in zip(cyc, np.roll(cyc, -1)):
            out += [u, edge_mid[(min(u, v), max(u, v))]]
        return np.array(out)

    curves = {cid: refine_cycle(cyc) for cid, cyc in m.curves.items()}
    cusp_boundaries = []
    for cb in m.cusp_boundaries:
        x = cb["x"]
        x2 = np.append(x, 2 * np.pi)
        xm = np.empty(2 * len(x))
        xm[0::2] = x
        xm[1::2] = 0.5 * (x2[:-1] + x2[1:])
        cusp_boundaries.append({"cycle": refine_cycle(cb["cycle"]), "Y": cb["Y"], "x": xm})
    duals = [{"name": d["name"], "walk": refine_cycle(d["walk"]), "curves": d["curves"]}
             for d in m.dual_cycles]
    hexes = []
    for hi, hx in enumerate(m.hexes):
        d = dict(hx)
        d["l2g"] = np.array(new_l2g[hi], dtype=np.int64)
        hexes.append(d)
    meta = dict(m.meta)
    meta["levels"] = m.meta.get("levels", 0) + 1
    meta["curve_nodes"] = {k: 2 * v for k, v in m.meta["curve_nodes"].items()}
    out = SurfaceMesh(m.point, m.h / 2, m.Y, nv, newT, lengths,
                      np.tile(m.tri_hex, 4), np.tile(m.tri_piece, 4), newTL, newP,
                      hexes, curves, cusp_boundaries, duals, meta)
    validate(out)
    return out


def curve_cycle(m, cid):
    return m.curve_cycle(cid)


# -- cache ----------------------------------------------------------------


def content_hash(p, h, Y=None, levels=0):
    text = p.to_json() + f"|h={float(h)!r}|Y={Y!r}|levels={int(levels)}"
    return hashlib.sha256(text.encode()).hexdigest()


def save_cache(m, path):
    """Write the mesh as JSON keyed by the content hash of (point, h, Y)."""
    base_h = m.h * 2 ** m.meta.get("levels", 0)
    d = {
        "hash": content_hash(m.point, base_h, m.Y, m.meta.get("levels", 0)),
        "point": json.loads(m.point.to_json()),
        "h": m.h, "Y": m.Y, "n_vertices": m.n_vertices,
        "triangles": m.triangles.tolist(),
        "lengths": m.lengths.tolist(),
        "tri_hex": m.tri_hex.tolist(), "tri_piece": m.tri_piece.tolist(),
        "tri_local": m.tri_local.tolist(),
        "corner_pos": m.corner_pos.tolist(),
        "hexes": [{"pants": x["pants"], "half": x["half"], "l2g": x["l2g"].tolist(),
                   "corners": np.asarray(x["corners"]).tolist(),
                   "side_kinds": x["side_kinds"],
                   "y_c": {str(k): v for k, v in x["y_c"].items()}, "Y": x["Y"]}
                  for x in m.hexes],
        "curves": {k: v.tolist() for k, v in m.curves.items()},
        "cusp_boundaries": [{"cycle": c["cycle"].tolist(), "Y": c["Y"], "x": c["x"].tolist()}
                            for c in m.cusp_boundaries],
        "dual_cycles": [{"name": c["name"], "walk": c["walk"].tolist(), "curves": c["curves"]}
                        for c in m.dual_cycles],
        "meta": m.meta,
    }
    with open(path, "w") as f:
        json.dump(d, f)


def load_cache(path, p, h, Y=None, levels=0):
    """Load a cached mesh; returns None unless the content hash matches exactly."""
    try:
        with open(path) as f:
            d = json.load(f)
    except (OSError, ValueError):
        return None
    if d.get("hash") != content_hash(p, h, Y, levels):
        return None
    hexes = [{"pants": x["pants"], "half": x["half"], "l2g": np.array(x["l2g"]),
              "corners": np.array(x["corners"]),
              "side_kinds": [tuple(s) for s in x["side_kinds"]],
              "y_c": {int(k): v for k, v in x["y_c"].items()}, "Y": x["Y"]}
             for x in d["hexes"]]
    return SurfaceMesh(
        p, d["h"], d["Y"], d["n_vertices"], np.array(d["triangles"]), np.array(d["lengths"]),
        np.array(d["tri_hex"]), np.array(d["tri_piece"]), np.array(d["tri_local"]),
        np.array(d["corner_pos"]), hexes,
        {k: np.array(v) for k, v in d["curves"].items()},
        [{"cycle": np.array(c["cycle"]), "Y": c["Y"], "x": np.array(c["x"])}
         for c in d["cusp_boundaries"]],
        [{"name": c["name"], "walk": np.array(c["walk"]), "curves": c["curves"]}
         for c in d["dual_cycles"]],
        d["meta"])


def cached_mesh(p, h, Y=None, levels=0, cache_dir=None):
    """Build (or load from ``cache_dir``) the mesh of ``p`` refined ``levels`` times."""
    path = None
    if cache_dir is not None:
        import os
        os.makedirs(cache_dir, exist_ok=True)
        path = os.path.join(cache_dir, content_hash(p, h, Y, levels)[:24] + ".json")
        m = load_cache(path, p, h, Y, levels)
        if m is not None:
            return m
    m = mesh_cusped(p, Y, h) if p.punctures else mesh_surface(p, h)
    for _ in range(levels):
        m = refine(m)
    if path is not None:
        save_cache(m, path)
    return m
