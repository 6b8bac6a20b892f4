"""Eigenvalue branches along paths in Teichmueller space.

Meshes are rebuilt at every grid point.  Eigenfunctions on different meshes
are compared through their values at structural sample points: weighted
hyperbolic barycentres of the corners of every hexagon, which move
continuously with the Fenchel-Nielsen coordinates.
"""
import json
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field

import numpy as np
from matplotlib.tri import Triangulation, TrapezoidMapTriFinder
from scipy.optimize import linear_sum_assignment

from .errors import ConvergenceError, DomainError
from .geometry.covering import lift_to_cover
from .geometry.paths import TeichPath
from .meshing.cover import cyclic_cover
from .meshing.surface import content_hash, mesh_cusped, mesh_surface
from .spectral import QUARTER, assemble, solve_lowest

THRESHOLD = 0.9
TIE_GAP = 0.05
DISC_REL = 0.5          # lambda_h - lambda <= DISC_REL * lambda * h^2 (refinement study)
SAMPLE_LEVELS = 3


# -- structural sample points -----------------------------------------------


def _barycentres(corners, n=SAMPLE_LEVELS):
    """Interior weighted barycentres of a convex polygon (hyperboloid points)."""
    C = np.asarray(corners, dtype=float)
    c = C.sum(axis=0)
    c = c / np.sqrt(c[0] ** 2 - c[1] ** 2 - c[2] ** 2)
    pts = [c]
    for i in range(len(C)):
        A, B = C[i], C[(i + 1) % len(C)]
        for a in range(n):
            for b in range(n - a):
                if a == 0 and b == 0:
                    continue
                X = a / n * A + b / n * B + (1 - (a + b) / n) * c
                pts.append(X / np.sqrt(X[0] ** 2 - X[1] ** 2 - X[2] ** 2))
    return np.array(pts)


class StructuralSampler:
    """Piecewise linear evaluation of mesh functions at structural points."""

    def __init__(self, m):
        self.m = m
        idx, wts, = [], []
        for i, hx in enumerate(m.hexes):
            sel = np.nonzero((m.tri_hex == i) & (m.tri_piece == -1))[0]
            pos = m.corner_pos[sel]                       # (T, 3, 3)
            kx = pos[:, :, 1] / pos[:, :, 0]
            ky = pos[:, :, 2] / pos[:, :, 0]
            loc = m.tri_local[sel]
            uniq, inv = np.unique(loc.ravel(), return_inverse=True)
            x = np.zeros(len(uniq))
            y = np.zeros(len(uniq))
            x[inv], y[inv] = kx.ravel(), ky.ravel()
            tri = inv.reshape(-1, 3)
            # Triangulation expects counter-clockwise triangles
            area = ((x[tri[:, 1]] - x[tri[:, 0]]) * (y[tri[:, 2]] - y[tri[:, 0]])
                    - (x[tri[:, 2]] - x[tri[:, 0]]) * (y[tri[:, 1]] - y[tri[:, 0]]))
            tri = np.where((area < 0)[:, None], tri[:, [0, 2, 1]], tri)
            T = Triangulation(x, y, tri)
            S = _barycentres(hx["corners"])
            px, py = S[:, 1] / S[:, 0], S[:, 2] / S[:, 0]
            ti = TrapezoidMapTriFinder(T)(px, py)
            if (ti < 0).any():
                raise DomainError(f"structural point outside hexagon {i}")
            t3 = tri[ti]
            X = np.stack([x[t3], y[t3]], axis=-1)
            d = X[:, 1:] - X[:, :1]
            det = d[:, 0, 0] * d[:, 1, 1] - d[:, 0, 1] * d[:, 1, 0]
            r = np.stack([px, py], axis=-1) - X[:, 0]
            l1 = (r[:, 0] * d[:, 1, 1] - r[:, 1] * d[:, 1, 0]) / det
            l2 = (d[:, 0, 0] * r[:, 1] - d[:, 0, 1] * r[:, 0]) / det
            g = m.triangles[sel][ti]
            idx.append(g)
            wts.append(np.stack([1 - l1 - l2, l1, l2], axis=1))
        self.idx = np.vstack(idx)
        self.wts = np.vstack(wts)

    @property
    def n_points(self):
        return len(self.idx)

    def __call__(self, V):
        V = np.asarray(V)
        if V.ndim == 1:
            return np.einsum("pk,pk->p", V[self.idx], self.wts)
        return np.einsum("pkj,pk->pj", V[self.idx], self.wts)


def _normalize_columns(U):
    nrm = np.linalg.norm(U, axis=0)
    nrm[nrm == 0] = 1.0
    return U / nrm


# -- matching ---------------------------------------------------------------


def overlap_matrix(Ua, Ub):
    return np.abs(_normalize_columns(Ua).T @ _normalize_columns(Ub))


def match(Ua, Ub, tie_gap=TIE_GAP):
    """Assignment a -> b maximizing total overlap.

    Returns (perm, overlaps, ambiguous): ``perm[i]`` is the column of ``Ub``
    matched with column ``i`` of ``Ua``; ``ambiguous[i]`` marks rows whose
    two best overlaps are within ``tie_gap``.
    """
    O = overlap_matrix(Ua, Ub)
    rows, cols = linear_sum_assignment(-O)
    perm = np.empty(O.shape[0], dtype=int)
    perm[rows] = cols
    ov = O[np.arange(O.shape[0]), perm]
    srt = np.sort(O, axis=1)
    amb = (srt[:, -1] - srt[:, -2] < tie_gap) if O.shape[1] > 1 else np.zeros(len(perm), bool)
    return perm, ov, amb


# -- families ----------------------------------------------------------------


@dataclass
class GridSolve:
    t: float
    eigenvalues: np.ndarray
    samples: np.ndarray          # (points, k) structural samples
    residuals: np.ndarray
    mesh_id: str
    h: float


@dataclass
class Branch:
    branch_id: int
    start_index: int
    ts: list
    values: list
    indices: list                # eigen-index carried at each t
    overlaps: list               # overlap with the previous sample (1.0 at t = 0)
    flags: list
    mesh_ids: list
    threshold: float = THRESHOLD

    @property
    def continuity_certificate(self):
        return float(min(self.overlaps[1:], default=1.0))

    @property
    def broken(self):
        return self.continuity_certificate < self.threshold

    @property
    def samples(self):
        return list(zip(self.ts, self.values, self.indices, self.mesh_ids))


@dataclass
class BranchFamily:
    ts: np.ndarray
    branches: list
    eigenvalues: np.ndarray       # (n_t, k) sorted eigenvalues per grid point
    crossings: list
    tol: float
    h: float
    meta: dict = field(default_factory=dict)

    @property
    def k(self):
        return len(self.branches)

    def values(self):
        return np.array([b.values for b in self.branches]).T

    def multiset_consistent(self, tol=None):
        tol = 10 * self.tol if tol is None else tol
        V = np.sort(self.values(), axis=1)
        return bool(np.all(np.abs(V - self.eigenvalues) <= tol))

    def branch(self, start_index):
        return next(b for b in self.branches if b.start_index == start_index)


def _solve_point(p, k, h, tol, seed, Y):
    m = mesh_surface(p, h) if p.punctures == 0 else mesh_cusped(p, Y, h)
    s = solve_lowest(assemble(m), k, tol=tol, seed=seed)
    U = StructuralSampler(m)(s.eigenvectors)
    return GridSolve(0.0, s.eigenvalues, U, s.residuals, content_hash(p, h, Y), h)


def track(path, k, steps, h, tol=1e-8, threshold=THRESHOLD, max_depth=3, seed=0,
          Y=20.0, threads=1, solver=None):
    """Branches of the ``k`` lowest eigenvalues along ``path``.

    ``solver(p)`` may replace the default mesh-and-solve step; it must return
    a GridSolve.
    """
    if steps < 2:
        raise DomainError("steps must be >= 2")
    if not isinstance(path, TeichPath) and not callable(path):
        raise DomainError("path must be callable on [0, 1]")
    solve = solver or (lambda p: _solve_point(p, k, h, tol, seed, Y))
    grid = list(np.linspace(0.0, 1.0, steps))
    sols = {}

    def at(t):
        if t not in sols:
            try:
                g = solve(path(t))
            except ConvergenceError as e:
                raise ConvergenceError(f"solver failed at t = {t:.6g}: {e}",
                                       best=_assemble(sols, k, tol, h, threshold)) from e
            g.t = t
            sols[t] = g
        return sols[t]

    if threads > 1 and solver is None:
        # Triangle's refinement callback is not thread safe: use processes
        pts = [path(t) for t in grid]
        with ProcessPoolExecutor(threads) as ex:
            futs = [ex.submit(_solve_point, q, k, h, tol, seed, Y) for q in pts]
            for t, fu in zip(grid, futs):
                g = fu.result()
                g.t = t
                sols[t] = g
    # links[t_b] = (t_a, perm a -> b, overlaps, ambiguous, deficient)
    links = {}

    def link(ta, tb, depth):
        a, b = at(ta), at(tb)
        perm, ov, amb = match(a.samples, b.samples)
        bad = (ov < threshold) | amb
        if bad.any() and depth < max_depth:
            tm = 0.5 * (ta + tb)
            link(ta, tm, depth + 1)
            link(tm, tb, depth + 1)
            return
        links[tb] = (ta, perm, ov, amb)

    for ta, tb in zip(grid[:-1], grid[1:]):
        link(ta, tb, 0)
    return _assemble(sols, k, tol, h, threshold, links)


def _assemble(sols, k, tol, h, threshold, links=None):
    ts = sorted(sols) if links is None else [min(sols)] + sorted(links)
    if not ts:
        return BranchFamily(np.zeros(0), [], np.zeros((0, k)), [], tol, h)
    first = sols[ts[0]]
    kk = len(first.eigenvalues)
    cur = np.arange(kk)
    br = [Branch(i, i, [ts[0]], [float(first.eigenvalues[i])], [i], [1.0], [""],
                 [first.mesh_id], threshold) for i in range(kk)]
    ev = [np.sort(first.eigenvalues)]
    crossings = []
    for t in ts[1:]:
        if links is None:
            break
        ta, perm, ov, amb = links[t]
        g = sols[t]
        new = perm[cur]
        ova = ov[cur]
        prev = np.array([b.values[-1] for b in br])
        for i, b in enumerate(br):
            flag = []
            if amb[cur[i]]:
                flag.append("degenerate")
            if ova[i] < threshold:
                flag.append("broken")
            b.ts.append(float(t))
            b.values.append(float(g.eigenvalues[new[i]]))
            b.indices.append(int(new[i]))
            b.overlaps.append(float(ova[i]))
            b.flags.append(";".join(flag))
            b.mesh_ids.append(g.mesh_id)
        vals = np.array([b.values[-1] for b in br])
        for i in range(kk):
            for j in range(i + 1, kk):
                if (prev[i] - prev[j]) * (vals[i] - vals[j]) < 0:
                    unresolved = bool(br[i].flags[-1] or br[j].flags[-1])
                    crossings.append({"t0": float(ta), "t1": float(t), "branches": [i, j],
                                      "status": "unresolved crossing" if unresolved
                                      else "crossing"})
        ev.append(np.sort(g.eigenvalues))
        cur = new
    return BranchFamily(np.array(ts[:len(ev)]), br, np.array(ev), crossings, tol, h,
                        {"threshold": threshold})


def starts_as(b, i, family):
    """True iff branch ``b`` equals lambda_i of the path's start point."""
    return bool(abs(b.values[0] - family.eigenvalues[0][i]) <= 10 * family.tol)


def quarter_margin(family, lam=QUARTER):
    return 10 * family.tol + DISC_REL * lam * family.h ** 2


def exceed_quarter(family):
    """Smallest grid t where a branch starting as lambda_1 exceeds 1/4 plus the
    combined tolerance (None if no such t)."""
    if family.k < 2:
        raise DomainError("family has no branch starting as lambda_1")
    thr = QUARTER + quarter_margin(family)
    best = None
    for b in family.branches:
        if not starts_as(b, 1, family):
            continue
        for t, v in zip(b.ts, b.values):
            if v > thr:
                best = t if best is None else min(best, t)
                break
    return best


# -- coverings -----------------------------------------------------------------


def match_tolerance(tol, h, C=DISC_REL):
    return max(20 * tol, C * h ** 2)


def cover_mesh(p, g, h, cut=2, m=None):
    """Mesh of the (g - 1)-sheeted cyclic cover Pi(S).

    An integer ``cut`` is a decomposition curve index: the cover is meshed
    from its lifted Fenchel-Nielsen point.  A string names a marked curve or
    a dual cycle of the mesh of ``p``; the cover is then built by cutting
    that mesh along the cycle.
    """
    if isinstance(cut, (int, np.integer)):
        q, desc = lift_to_cover(p, g, int(cut))
        return mesh_surface(q, h), desc.sheet_count
    m = m or mesh_surface(p, h)
    if cut in m.curves:
        cyc = m.curves[cut]
    else:
        cyc = next((d["walk"] for d in m.dual_cycles if d["name"] == cut), None)
        if cyc is None:
            raise DomainError(f"unknown cut cycle {cut!r}")
    return cyclic_cover(m, cyc, g - 1), g - 1


def covering_audit(p, g, k, h, tol=1e-8, cutoff=1.0, seed=0, cut=2):
    """Every eigenvalue of S below ``cutoff`` must occur in the cover."""
    if p.genus != 2 or p.punctures:
        raise DomainError("covering audit needs a closed genus-2 surface")
    if g < 3:
        raise DomainError("cover genus must be >= 3")
    ms = mesh_surface(p, h)
    mc, sheets = cover_mesh(p, g, h, cut, ms)
    ss = solve_lowest(assemble(ms), k, tol=tol, seed=seed)
    kc = min((g - 1) * k, mc.n_vertices // 10)
    sc = solve_lowest(assemble(mc), kc, tol=tol, seed=seed)
    mt = match_tolerance(tol, h)
    base = [float(x) for x in ss.eigenvalues if x < cutoff]
    avail = list(sc.eigenvalues)
    matches, misses = [], []
    for lam in base:
        j = int(np.argmin([abs(lam - x) for x in avail])) if avail else -1
        if j >= 0 and abs(avail[j] - lam) <= mt:
            matches.append({"lambda": lam, "cover": float(avail[j]), "diff": float(abs(avail[j] - lam))})
            avail.pop(j)
        else:
            misses.append(lam)
    top = sc.eigenvalues.max()
    return {
        "genus": g, "sheets": sheets, "cut": cut, "h": h, "tolerance": mt,
        "base": [float(x) for x in ss.eigenvalues], "cover": [float(x) for x in sc.eigenvalues],
        "matches": matches, "misses": misses, "containment": not misses,
        "cover_range_sufficient": bool(top >= max(base, default=0.0)),
        "lambda1_equal": bool(abs(ss.eigenvalues[1] - sc.eigenvalues[1]) <= mt),
        "lambda1": [float(ss.eigenvalues[1]), float(sc.eigenvalues[1])],
    }


def lifted_path(path, g, cut=2):
    return lambda t: lift_to_cover(path(t), g, cut)[0]


def _solve_cover(p, g, k, h, tol, seed, cut):
    m = mesh_surface(p, h)
    mc, sheets = cover_mesh(p, g, h, cut, m)
    s = solve_lowest(assemble(mc), k, tol=tol, seed=seed)
    samp = StructuralSampler(m)
    nb = m.n_vertices
    U = np.vstack([samp(s.eigenvectors[j * nb:(j + 1) * nb]) for j in range(sheets)])
    return GridSolve(0.0, s.eigenvalues, U, s.residuals, content_hash(p, h) + f"|cover{g}:{cut}", h)


def lifted_branch(path, g, k, steps, h, tol=1e-8, seed=0, threads=1, cut=2):
    """Track on the lifted path and cross-check against the base family."""
    base = track(path, k, steps, h, tol, seed=seed, threads=threads)
    kk = (g - 1) * k
    if isinstance(cut, (int, np.integer)):
        lifted = track(lifted_path(path, g, int(cut)), kk, steps, h, tol, seed=seed,
                       threads=threads)
    else:
        lifted = track(path, kk, steps, h, tol, seed=seed,
                       solver=lambda p: _solve_cover(p, g, kk, h, tol, seed, cut))
    mt = match_tolerance(tol, h)
    ok = []
    for t in np.linspace(0.0, 1.0, steps):
        i = int(np.argmin(np.abs(base.ts - t)))
        j = int(np.argmin(np.abs(lifted.ts - t)))
        lv = lifted.eigenvalues[j]
        ok.append(bool(all(np.min(np.abs(lv - x)) <= mt for x in base.eigenvalues[i]
                           if x <= lv.max() + mt)))
    lifted.meta["contains_base"] = ok
    lifted.meta["base"] = base
    return lifted


# -- output --------------------------------------------------------------------


def write_branch_csv(family, path):
    with open(path, "w") as f:
        f.write("t,branch_id,lambda,overlap,flag\n")
        for n, t in enumerate(family.ts):
            for b in family.branches:
                f.write(f"{t:.12g},{b.branch_id},{b.values[n]:.12g},{b.overlaps[n]:.6f},"
                        f"{b.flags[n]}\n")


def write_crossings_json(family, path):
    with open(path, "w") as f:
        json.dump(family.crossings, f, indent=1)
        f.write("\n")
