"""Nodal sets of discrete eigenfunctions and their topology.

The zero set of a piecewise linear function is a union of segments, one in
every triangle whose vertex signs differ.  Nodal domains are taken as the
components of the sign-homogeneous edge graph; each deformation retracts
onto the full subcomplex spanned by its vertices, so its Euler
characteristic is V - E + F of that subcomplex.
"""
import json
from dataclasses import dataclass, field

import numpy as np
import scipy.sparse as sp
from scipy.sparse.csgraph import connected_components

from .errors import DomainError

ZERO_REL = 1e-12
# (0, 4) partitions of the cusps into two pairs
PARTITIONS = {"A": ({0, 1}, {2, 3}), "B": ({0, 2}, {1, 3}), "C": ({0, 3}, {1, 2})}


@dataclass
class NodalGraph:
    signs: np.ndarray            # (n,) bool, True for positive
    point_edges: np.ndarray      # (P, 2) vertex pairs carrying a zero
    point_t: np.ndarray          # (P,) position of the zero along the edge
    segments: np.ndarray         # (S, 2) point ids
    seg_tri: np.ndarray          # (S,) triangle of each segment
    point_comp: np.ndarray       # (P,) component id
    components: list             # dicts: closed, points, ends (cusp ids of arc ends)
    cycle_names: list
    crossing_vectors: np.ndarray  # (C, n_cycles) crossing counts
    perturbed: int
    meta: dict = field(default_factory=dict)

    @property
    def n_components(self):
        return len(self.components)

    def smooth(self):
        return [c["closed"] for c in self.components]

    def chi(self, n_cusps_with_arcs=0):
        """Euler characteristic of the closure: arc ends on one truncation
        circle are merged into a single puncture vertex."""
        if len(self.point_edges) == 0:
            return 0
        boundary_pts = sum(len(c["ends"]) for c in self.components)
        return (len(self.point_edges) - boundary_pts + n_cusps_with_arcs) - len(self.segments)

    def cusps_on_nodal(self):
        s = set()
        for c in self.components:
            s.update(c["ends"])
        return sorted(s)


@dataclass
class NodalDecomposition:
    vertex_domain: np.ndarray    # (n,) domain id
    signs: list                  # per domain +1 / -1
    chi: list                    # per domain Euler characteristic
    cusps: list                  # per domain: cusp ids whose truncation circle lies in it
    adjacency: list              # (domain a, domain b, component) triples
    nodal_chi: int
    k: int                       # punctures off the nodal set
    n_punctures: int

    @property
    def count(self):
        return len(self.signs)

    @property
    def chi_plus(self):
        return int(sum(c for c, s in zip(self.chi, self.signs) if s > 0))

    @property
    def chi_minus(self):
        return int(sum(c for c, s in zip(self.chi, self.signs) if s < 0))


def _edge_index(m):
    T = m.triangles
    D = np.concatenate([T[:, [1, 2]], T[:, [2, 0]], T[:, [0, 1]]])
    lo, hi = np.minimum(D[:, 0], D[:, 1]), np.maximum(D[:, 0], D[:, 1])
    key = lo.astype(np.int64) * m.n_vertices + hi
    uk, inv = np.unique(key, return_inverse=True)
    E = np.stack([uk // m.n_vertices, uk % m.n_vertices], axis=1)
    tri_edges = inv.reshape(3, -1).T          # edge opposite corner i
    return E, key, uk, tri_edges


def _cycles(m):
    out = [(f"curve-{cid}", cyc) for cid, cyc in m.curves.items()]
    out += [(d["name"], d["walk"]) for d in m.dual_cycles]
    return out


def extract_nodal(m, v):
    """Zero set of the piecewise linear function ``v`` on mesh ``m``."""
    v = np.asarray(v, dtype=float).copy()
    scale = np.abs(v).max() if len(v) else 0.0
    if not scale > 0:
        raise DomainError("nodal set of the zero function is undefined")
    small = np.abs(v) < ZERO_REL * scale
    # zeros move towards the sign of the largest entry, so -v gives -v' exactly
    v[small] = ZERO_REL * scale * np.sign(v[np.argmax(np.abs(v))])
    pos = v > 0
    E, key, uk, tri_edges = _edge_index(m)
    change = pos[E[:, 0]] != pos[E[:, 1]]
    pid = -np.ones(len(E), dtype=np.int64)
    pid[change] = np.arange(int(change.sum()))
    pe = E[change]
    va, vb = v[pe[:, 0]], v[pe[:, 1]]
    t = va / (va - vb)
    # one segment per triangle with a sign change
    tp = pid[tri_edges]                        # (T, 3)
    has = (tp >= 0).sum(axis=1)
    sel = np.nonzero(has == 2)[0]
    segs = np.sort(tp[sel], axis=1)[:, 1:]      # drop the -1
    P = len(pe)
    if P:
        g = sp.coo_matrix((np.ones(len(segs)), (segs[:, 0], segs[:, 1])), shape=(P, P))
        nc, comp = connected_components(g, directed=False)
    else:
        nc, comp = 0, np.zeros(0, dtype=np.int64)
    deg = np.bincount(segs.ravel(), minlength=P) if P else np.zeros(0, dtype=int)

    # truncation-circle edges: arc ends
    edge_cusp = {}
    for ci, cb in enumerate(m.cusp_boundaries):
        cyc = cb["cycle"]
        for a, b in zip(cyc, np.roll(cyc, -1)):
            edge_cusp[min(a, b) * m.n_vertices + max(a, b)] = ci
    components = []
    for c in range(nc):
        pts = np.nonzero(comp == c)[0]
        ends = []
        for p_ in pts:
            if deg[p_] == 1:
                kk = int(pe[p_, 0]) * m.n_vertices + int(pe[p_, 1])
                ends.append(edge_cusp.get(kk, -1))
        components.append({"closed": len(ends) == 0 and bool((deg[pts] == 2).all()),
                           "points": pts, "ends": sorted(ends)})

    cycles = _cycles(m)
    cv = np.zeros((nc, len(cycles)), dtype=np.int64)
    for j, (_, cyc) in enumerate(cycles):
        a, b = np.asarray(cyc), np.roll(np.asarray(cyc), -1)
        kk = np.minimum(a, b).astype(np.int64) * m.n_vertices + np.maximum(a, b)
        ei = np.searchsorted(uk, kk)
        ok = (ei < len(uk))
        ok[ok] = uk[ei[ok]] == kk[ok]
        if not ok.all():
            raise DomainError(f"cycle {cycles[j][0]} uses a non-edge")
        for p_ in pid[ei]:
            if p_ >= 0:
                cv[comp[p_], j] += 1
    return NodalGraph(pos, pe, t, segs, sel, comp, components,
                      [n for n, _ in cycles], cv, int(small.sum()),
                      {"scale": float(scale)})


def nodal_domains(m, v, ng):
    """Nodal domains with signs, Euler characteristics and adjacency."""
    pos = ng.signs
    E, key, uk, tri_edges = _edge_index(m)
    same = pos[E[:, 0]] == pos[E[:, 1]]
    Es = E[same]
    n = m.n_vertices
    g = sp.coo_matrix((np.ones(len(Es)), (Es[:, 0], Es[:, 1])), shape=(n, n))
    nd, dom = connected_components(g, directed=False)
    # full subcomplex counts per domain
    V = np.bincount(dom, minlength=nd)
    Ed = np.bincount(dom[Es[:, 0]], minlength=nd)
    T = m.triangles
    mono = (pos[T[:, 0]] == pos[T[:, 1]]) & (pos[T[:, 1]] == pos[T[:, 2]])
    F = np.bincount(dom[T[mono, 0]], minlength=nd)
    chi = (V - Ed + F).astype(int).tolist()
    signs = [1 if pos[np.nonzero(dom == d)[0][0]] else -1 for d in range(nd)]
    cusps = [[] for _ in range(nd)]
    on = set(ng.cusps_on_nodal())
    for ci, cb in enumerate(m.cusp_boundaries):
        if ci not in on:
            cusps[dom[cb["cycle"][0]]].append(ci)
    adj = set()
    for p_, (a, b) in enumerate(ng.point_edges):
        da, db = sorted((int(dom[a]), int(dom[b])))
        adj.add((da, db, int(ng.point_comp[p_])))
    n_on = len(on)
    return NodalDecomposition(dom, signs, chi, cusps, sorted(adj), ng.chi(n_on),
                              m.punctures - n_on, m.punctures)


def euler_poincare_audit(d, surface_type, k=None):
    """Residual of chi(S-bar) - k = sum chi(domains) + chi(nodal closure)."""
    g, n = surface_type
    k = d.k if k is None else k
    chi_bar = 2 - 2 * g
    residual = chi_bar - k - (sum(d.chi) + d.nodal_chi)
    return {"residual": int(residual), "chi_closed": chi_bar, "k": int(k),
            "chi_domains": list(d.chi), "chi_nodal": int(d.nodal_chi),
            "all_domains_negative": bool(all(c < 0 for c in d.chi))}


def curve_hints(ng, m):
    """For each component, the pants curves it is parallel to in mod-2 homology
    as seen by the marked and dual cycles."""
    dec = m.point.decomposition
    names = ng.cycle_names
    dual_idx = [j for j, nm in enumerate(names) if nm.startswith("dual-")]
    curve_idx = [j for j, nm in enumerate(names) if nm.startswith("curve-")]
    patterns = {}
    for c in dec.curves:
        patterns[c.id] = tuple(m.dual_cycles[j - len(curve_idx)]["curves"].get(c.id, 0) % 2
                               for j in dual_idx)
    out = []
    for row in ng.crossing_vectors:
        if any(row[j] % 2 for j in curve_idx):
            out.append([])
            continue
        pat = tuple(int(row[j] % 2) for j in dual_idx)
        out.append([cid for cid, q in patterns.items() if q == pat])
    return out


def isotopy_class(ng, d, surface_type):
    """Label of the nodal set among the configurations the dichotomies use."""
    g, n = surface_type
    if ng.n_components == 0 or not all(ng.smooth()):
        return "singular/other" if ng.n_components else "other"
    comps = ng.n_components
    two = d.count == 2 and d.signs[0] != d.signs[1]
    # each domain must border every component for the loops to be essential
    touches = {(a, b) for a, b, _ in d.adjacency}
    full = two and len({c for _, _, c in d.adjacency}) == comps and touches == {(0, 1)}
    if (g, n) == (2, 0):
        if full and d.chi == [-1, -1]:
            if comps == 3:
                return "pants-type"
            if comps == 1:
                return "torus-type"
        return "other"
    if (g, n) == (1, 2):
        if full and d.chi == [-1, -1]:
            if comps == 1 and sorted(len(c) for c in d.cusps) == [0, 2]:
                return "one-curve"
            if comps == 2 and [len(c) for c in d.cusps] == [1, 1]:
                return "two-curve"
        return "other"
    if (g, n) == (0, 4):
        if full and comps == 1 and d.chi == [-1, -1]:
            part = {frozenset(c) for c in d.cusps}
            for lab, (x, y) in PARTITIONS.items():
                if part == {frozenset(x), frozenset(y)}:
                    return f"one-curve-partition-{lab}"
        return "other"
    return "other"


def courant_otal_audit(spectrum, decompositions):
    """Courant bound and negative-Euler-characteristic checks per eigenfunction.

    ``decompositions`` maps eigen-index -> NodalDecomposition; only indices
    with eigenvalue below 1/4 are audited.
    """
    rows = []
    for i in sorted(decompositions):
        lam = float(spectrum.eigenvalues[i])
        if lam >= 0.25:
            continue
        d = decompositions[i]
        courant = d.count <= i + 1
        negative = all(c < 0 for c in d.chi) if i > 0 else True
        rows.append({"index": i, "lambda": lam, "domains": d.count,
                     "courant": bool(courant), "negative_chi": bool(negative),
                     "pass": bool(courant and negative)})
    return {"rows": rows, "pass": all(r["pass"] for r in rows)}


def nodal_report(ng, d, label):
    """Nodal report in the fixed JSON layout."""
    return json.dumps({
        "components": ng.n_components, "domains": d.count,
        "chi_plus": d.chi_plus, "chi_minus": d.chi_minus, "chi_nodal": int(d.nodal_chi),
        "label": label, "crossing_vectors": ng.crossing_vectors.tolist()})
