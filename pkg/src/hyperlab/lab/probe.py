"""Grid probe of the set where lambda_1 exceeds 1/4 in a genus-2 chart.

Everything here is evidence on a finite grid of Fenchel-Nielsen coordinates
(no reduction by the mapping class group): components are taken in the grid
graph, where two samples are adjacent when their axis indices differ by one
in exactly one coordinate.
"""
import itertools
import json
from dataclasses import dataclass, field

import numpy as np
import scipy.sparse as sp
from scipy.sparse.csgraph import connected_components

from ..branches import DISC_REL
from ..errors import BudgetError, ConvergenceError, DomainError, LabError
from ..geometry.fuchsian import systole
from ..geometry.teichmuller import STANDARD, FNPoint
from ..meshing.surface import mesh_surface
from ..spectral import QUARTER, assemble, solve_lowest
from .parallel import pmap

EVIDENCE = "grid-level evidence on the sampled coordinates, not a proof"


@dataclass
class ProbeReport:
    decomposition: str
    axes: list                    # 6 lists: lengths then twists
    h: float
    tol: float
    samples: list                 # dicts per grid sample, C order over the axes
    components: list              # lists of sample ids of {lambda_1 <= 1/4}
    meta: dict = field(default_factory=dict)

    @property
    def grid_components(self):
        return len(self.components)

    @property
    def disconnected(self):
        return self.grid_components > 1

    def above(self):
        return [s for s in self.samples if s.get("above")]

    def min_systole_above(self):
        vals = [s["systole"] for s in self.above()]
        return min(vals) if vals else None

    def max_lambda1(self):
        ok = [s for s in self.samples if s.get("lambda1") is not None]
        if not ok:
            return None
        s = max(ok, key=lambda s: s["lambda1"])
        return {"value": s["lambda1"], "error_bar": s["margin"], "sample": s["id"]}

    def to_dict(self):
        return {
            "decomposition": self.decomposition,
            "axes": {"lengths": self.axes[:len(self.axes) // 2],
                     "twists": self.axes[len(self.axes) // 2:]},
            "resolution": {"shape": [len(a) for a in self.axes],
                           "spacing": [_spacing(a) for a in self.axes]},
            "h": self.h, "tol": self.tol,
            "samples": self.samples,
            "components": self.components,
            "grid_components": self.grid_components,
            "disconnected_on_grid": self.disconnected,
            "min_systole_above_quarter": self.min_systole_above(),
            "max_lambda1": self.max_lambda1(),
            "evidence": EVIDENCE,
            "meta": self.meta,
        }

    def to_json(self):
        return json.dumps(self.to_dict(), indent=1, sort_keys=True)


def _spacing(axis):
    return float(np.max(np.diff(axis))) if len(axis) > 1 else None


def quarter_tolerance(lam, h, tol):
    """Error bar of a computed lambda_1 against 1/4: solver plus discretisation."""
    return 10 * tol + DISC_REL * max(lam, QUARTER) * h ** 2


def _sample(args):
    i, idx, p, h, k, tol, seed, bound = args
    out = {"id": i, "index": list(idx), "lengths": list(p.lengths), "twists": list(p.twists)}
    try:
        s = solve_lowest(assemble(mesh_surface(p, h)), k, tol=tol, seed=seed)
        lam = float(s.eigenvalues[1])
        out.update({"lambda1": _r(lam), "margin": _r(quarter_tolerance(lam, h, tol)),
                    "residual": _r(float(s.residuals[1]))})
        out["above"] = bool(lam > QUARTER + out["margin"])
    except LabError as e:
        out.update({"lambda1": None, "margin": None, "above": None,
                    "error": f"{type(e).__name__}: {e}"})
    try:
        val, _ = systole(p, bound)
        out["systole_complete"] = True
    except LabError as e:
        val = e.partial[0] if getattr(e, "partial", None) else min(p.lengths)
        out["systole_complete"] = False
    out["systole"] = _r(val)
    return out


def _r(x):
    return float(f"{x:.12g}")


def grid_points(decomposition, lengths, twists):
    """(multi-index, FNPoint) over the product of the coordinate axes."""
    dec = STANDARD[decomposition]()
    axes = [list(map(float, a)) for a in list(lengths) + list(twists)]
    m = len(dec.curves)
    if len(axes) != 2 * m:
        raise DomainError(f"need {m} length axes and {m} twist axes")
    out = []
    for idx in itertools.product(*[range(len(a)) for a in axes]):
        x = [axes[j][i] for j, i in enumerate(idx)]
        out.append((idx, FNPoint(dec, tuple(x[:m]), tuple(x[m:]))))
    return axes, out


def grid_graph(shape, members):
    """Components of the sample set ``members`` (flat ids) in the grid graph."""
    members = sorted(members)
    if not members:
        return []
    pos = {v: i for i, v in enumerate(members)}
    rows, cols = [], []
    for v in members:
        idx = np.unravel_index(v, shape)
        for ax in range(len(shape)):
            if idx[ax] + 1 < shape[ax]:
                nb = list(idx)
                nb[ax] += 1
                w = int(np.ravel_multi_index(nb, shape))
                if w in pos:
                    rows.append(pos[v])
                    cols.append(pos[w])
    n = len(members)
    g = sp.coo_matrix((np.ones(len(rows)), (rows, cols)), shape=(n, n))
    nc, lab = connected_components(g, directed=False)
    comps = [[] for _ in range(nc)]
    for v, c in zip(members, lab):
        comps[c].append(v)
    return sorted(comps, key=min)


def probe_b2(decomposition, lengths, twists, h, tol=1e-8, k=3, seed=0, budget=4096,
             systole_bound=6, threads=1):
    """Sample lambda_1 over a coordinate grid and analyse {lambda_1 <= 1/4}.

    Samples whose computation fails are reported with the error and kept out
    of the component analysis; a ConvergenceError carrying the partial report
    is raised afterwards.
    """
    axes, pts = grid_points(decomposition, lengths, twists)
    if len(pts) > budget:
        raise BudgetError(f"grid has {len(pts)} samples, budget is {budget}")
    shape = tuple(len(a) for a in axes)
    if not pts:
        return ProbeReport(decomposition, axes, h, tol, [], [], {"budget": budget})
    jobs = [(i, idx, p, h, k, tol, seed, systole_bound) for i, (idx, p) in enumerate(pts)]
    samples = pmap(_sample, jobs, threads)
    low = [s["id"] for s in samples if s["above"] is False]
    rep = ProbeReport(decomposition, axes, h, tol, samples, grid_graph(shape, low),
                      {"budget": budget, "systole_word_bound": systole_bound,
                       "sublevel_rule": "lambda_1 <= 1/4 + margin (not certified above)"})
    failed = [s["id"] for s in samples if s["above"] is None]
    if failed:
        raise ConvergenceError(f"{len(failed)} grid samples failed", best=rep)
    return rep
