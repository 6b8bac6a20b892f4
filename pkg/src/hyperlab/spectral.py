"""Discrete Laplace-Beltrami operator and its lowest eigenpairs.

Each hyperbolic triangle is replaced by the Euclidean triangle with the same
side lengths for the gradient (cotangent weights); the P1 mass matrix is
scaled to the exact hyperbolic area of the triangle.  The truncation circle
of a cusp carries the natural (zero-flux) condition, which needs no extra
terms in the weak form.
"""
import json
from dataclasses import dataclass, field

import numpy as np
import scipy.sparse as sp
import scipy.sparse.linalg as spla

from .errors import AssemblyError, ConvergenceError, DomainError
from .geometry import hyperbolic as hb

QUARTER = 0.25


@dataclass
class OperatorPair:
    A: sp.csr_matrix
    M: sp.csr_matrix
    h: float
    closed: bool
    area: float

    @property
    def n(self):
        return self.A.shape[0]


@dataclass
class SpectrumSlice:
    eigenvalues: np.ndarray
    eigenvectors: np.ndarray     # (n, k), M-orthonormal columns
    residuals: np.ndarray
    clusters: list               # list of index lists
    h: float
    tol: float
    closed: bool = True
    meta: dict = field(default_factory=dict)

    @property
    def k(self):
        return len(self.eigenvalues)

    def cluster_id(self):
        out = np.empty(self.k, dtype=int)
        for c, idx in enumerate(self.clusters):
            out[idx] = c
        return out

    def reportable(self):
        """Mask of eigenvalues that are spectral: all on closed surfaces,
        only those below 1/4 on cusped (truncated) surfaces."""
        if self.closed:
            return np.ones(self.k, dtype=bool)
        return self.eigenvalues < QUARTER


@dataclass
class MultiplicityReport:
    cluster: list
    values: list
    width: float
    multiplicity: int
    bound: int
    small: bool
    verdict: str


def element_matrices(lengths, areas):
    """Per-triangle stiffness (T, 3, 3) and mass (T, 3, 3)."""
    a, b, c = lengths.T
    # flat triangle with the same side lengths: Heron area
    s = 0.5 * (a + b + c)
    flat = np.sqrt(np.maximum(s * (s - a) * (s - b) * (s - c), 0.0))
    bad = np.nonzero(~(flat > 0))[0]
    if len(bad):
        raise AssemblyError(f"triangle {int(bad[0])} is degenerate (flat area 0)")
    sq = lengths ** 2
    K = np.zeros((len(lengths), 3, 3))
    for i in range(3):
        j, k = (i + 1) % 3, (i + 2) % 3
        # cot of the angle at corner i, opposite side i
        cot = (sq[:, j] + sq[:, k] - sq[:, i]) / (4.0 * flat)
        w = 0.5 * cot
        K[:, j, k] -= w
        K[:, k, j] -= w
        K[:, j, j] += w
        K[:, k, k] += w
    Mloc = np.array([[2.0, 1.0, 1.0], [1.0, 2.0, 1.0], [1.0, 1.0, 2.0]]) / 12.0
    Me = areas[:, None, None] * Mloc[None]
    return K, Me


def assemble(m):
    """Stiffness and mass matrices of a SurfaceMesh."""
    ang = m.angles()
    bad = np.nonzero(~((ang > 0) & (ang < np.pi)).all(axis=1))[0]
    if len(bad):
        raise AssemblyError(f"triangle {int(bad[0])} has an angle outside (0, pi)")
    areas = m.areas()
    K, Me = element_matrices(m.lengths, areas)
    T = m.triangles
    rows = np.repeat(T, 3, axis=1).ravel()
    cols = np.tile(T, (1, 3)).ravel()
    n = m.n_vertices
    A = sp.coo_matrix((K.ravel(), (rows, cols)), shape=(n, n)).tocsr()
    M = sp.coo_matrix((Me.ravel(), (rows, cols)), shape=(n, n)).tocsr()
    A = 0.5 * (A + A.T)
    M = 0.5 * (M + M.T)
    return OperatorPair(A.tocsr(), M.tocsr(), m.h, m.punctures == 0, float(areas.sum()))


def _clusters(vals, thr):
    if len(vals) == 0:
        return []
    out = [[0]]
    for i in range(1, len(vals)):
        if thr > 0 and abs(vals[i] - vals[out[-1][-1]]) <= thr:
            out[-1].append(i)
        else:
            out.append([i])
    return out


def m_inverse_norms(op, R):
    """Columns' norms in the M^-1 inner product."""
    lu = spla.splu(op.M.tocsc())
    Z = lu.solve(np.asarray(R))
    return np.sqrt(np.maximum(np.einsum("ij,ij->j", R, Z), 0.0))


def solve_lowest(op, k, tol=1e-8, seed=0, gap_factor=1.0, sigma=-0.05, maxiter=None):
    """The ``k`` smallest eigenpairs of A v = lambda M v with residual checks."""
    if k < 1 or k > op.n / 10:
        raise DomainError(f"k = {k} must be in [1, n/10] (n = {op.n})")
    if not 1e-12 <= tol <= 1e-4:
        raise DomainError(f"tol = {tol} outside [1e-12, 1e-4]")
    rng = np.random.default_rng(seed)
    v0 = rng.standard_normal(op.n)
    ncv = min(op.n - 1, max(2 * k + 1, 20))
    best = None
    for attempt, atol in enumerate((tol * 1e-3, 0.0)):
        try:
            vals, vecs = spla.eigsh(op.A, k=k, M=op.M, sigma=sigma, which="LM", v0=v0,
                                    tol=atol, ncv=ncv, maxiter=maxiter)
        except spla.ArpackNoConvergence as e:
            best = (e.eigenvalues, None)
            ncv = min(op.n - 1, 2 * ncv)
            continue
        order = np.argsort(vals)
        vals, vecs = vals[order], vecs[:, order]
        # re-orthonormalize in M (clusters may come out slightly skewed)
        G = vecs.T @ (op.M @ vecs)
        L = np.linalg.cholesky(0.5 * (G + G.T))
        vecs = np.linalg.solve(L, vecs.T).T
        Av, Mv = op.A @ vecs, op.M @ vecs
        vals = np.einsum("ij,ij->j", vecs, Av)
        res = m_inverse_norms(op, Av - Mv * vals)
        best = (vals, res)
        if (res <= tol).all():
            break
        ncv = min(op.n - 1, 2 * ncv)
    else:
        raise ConvergenceError(f"eigensolver did not reach tol {tol}", best=best)
    # deterministic signs: largest-magnitude entry positive
    for j in range(vecs.shape[1]):
        i = int(np.argmax(np.abs(vecs[:, j])))
        if vecs[i, j] < 0:
            vecs[:, j] = -vecs[:, j]
    vals = np.where(np.abs(vals) < 1e-13, 0.0, vals)
    thr = gap_factor * max(op.h ** 2, tol)
    return SpectrumSlice(vals, vecs, res, _clusters(vals, thr), op.h, tol, op.closed,
                         {"gap_threshold": thr, "seed": seed, "sigma": sigma})


def cluster_multiplicity(s, gap_factor, surface_type):
    """Multiplicity estimate of the lambda_1 cluster and the 2g-3+n audit."""
    g, n = surface_type
    thr = gap_factor * max(s.h ** 2, s.tol)
    cl = _clusters(s.eigenvalues, thr)
    bound = 2 * g - 3 + n
    if g == 0:
        bound = min(bound, 3)
    if s.k < 2:
        return MultiplicityReport([], [], 0.0, 0, bound, False, "no lambda_1 computed")
    c = next(c for c in cl if 1 in c)
    c = [i for i in c if i >= 1]
    vals = [float(s.eigenvalues[i]) for i in c]
    width = max(vals) - min(vals)
    small = s.eigenvalues[1] < QUARTER
    if not small:
        verdict = "not applicable (lambda_1 >= 1/4)"
    elif len(c) <= bound:
        verdict = "consistent"
    else:
        verdict = "violation (flag for investigation)"
    if small and c[-1] == s.k - 1:
        verdict += "; cluster reaches the last computed index"
    return MultiplicityReport(c, vals, width, len(c), bound, bool(small), verdict)


@dataclass
class Extrapolation:
    lambda_star: float
    order: float
    error_bar: float
    flagged: bool

    def to_json(self):
        return json.dumps({"lambda_star": _num(self.lambda_star), "order": _num(self.order),
                           "error_bar": _num(self.error_bar), "flagged": self.flagged})


def _num(x):
    return None if not np.isfinite(x) else float(f"{x:.12g}")


def extrapolate(lambdas, ratio=2.0):
    """Richardson extrapolation under lambda(h) = lambda* + C h^p, h halving."""
    lam = np.asarray(lambdas, dtype=float)
    if len(lam) < 3:
        raise DomainError("extrapolation needs at least three levels")
    d = np.diff(lam)
    if np.all(d == 0):
        return Extrapolation(float(lam[-1]), float("nan"), 0.0, False)
    monotone = bool(np.all(d > 0) or np.all(d < 0))
    d1, d2 = d[-2], d[-1]
    flagged = not monotone
    if monotone and d1 / d2 > 1.0:
        p = np.log(d1 / d2) / np.log(ratio)
        corr = d2 / (ratio ** p - 1.0)
        star = lam[-1] + corr
        err = abs(corr)
    else:
        # no usable rate: assume second order and inflate the bar
        p = float("nan") if not monotone else np.log(abs(d1 / d2)) / np.log(ratio)
        corr = d2 / (ratio ** 2 - 1.0)
        star = lam[-1] + corr
        err = abs(corr)
        flagged = True
    if flagged:
        err *= 10.0
    return Extrapolation(float(star), float(p), float(err), flagged)


def write_spectrum_csv(s, path, suppress_continuous=True):
    cid = s.cluster_id()
    mask = s.reportable() if suppress_continuous else np.ones(s.k, dtype=bool)
    with open(path, "w") as f:
        f.write("index,lambda,residual,cluster_id\n")
        for i in range(s.k):
            if mask[i]:
                f.write(f"{i},{s.eigenvalues[i]:.12g},{s.residuals[i]:.6e},{cid[i]}\n")


def write_extrapolation_json(e, path):
    with open(path, "w") as f:
        f.write(e.to_json() + "\n")
