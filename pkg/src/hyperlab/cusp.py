"""Fourier-Bessel analysis of eigenfunctions in a cusp.

Cusp coordinates are those of the cusp chart: the cylinder
``{x + iy : y > y_c} / (z -> z + 2 pi)``.  An eigenfunction with eigenvalue
``s (1 - s)`` expands as

    f01 y^s + f02 y^(1-s) + sum_j (fe_j cos jx + fo_j sin jx) W_j(y),
    W_j(y) = sqrt(2 j y / pi) K_{s-1/2}(j y),

with ``y^(1/2) log y`` replacing ``y^(1-s)`` when ``s = 1/2``.
"""
import json
from dataclasses import dataclass, field

import numpy as np
from matplotlib.tri import Triangulation, TrapezoidMapTriFinder
from scipy import special

from .errors import ConditioningError, DomainError
from .geometry import hyperbolic as hb

NU_RANGE = (0.0, 0.5)
X_RANGE = (0.02, 60.0)
ARC_TOL = 1e-5


# -- Bessel K ---------------------------------------------------------------


def bessel_K(nu, x):
    """Modified Bessel function K_nu(x) for nu in [0, 1/2], x in [0.02, 60]."""
    nu, x = float(nu), float(x)
    if not (NU_RANGE[0] <= nu <= NU_RANGE[1] and X_RANGE[0] <= x <= X_RANGE[1]):
        raise DomainError(f"bessel_K({nu}, {x}) outside nu in [0, 1/2], x in [0.02, 60]")
    return float(special.kv(nu, x))


def bessel_K_quadrature(nu, x, step=None):
    """Independent evaluation of K_nu(x) = int_0^inf exp(-x cosh t) cosh(nu t) dt.

    The integrand is even and decays doubly exponentially, so the trapezoid
    rule converges geometrically in the step size.
    """
    x = float(x)
    T = np.arccosh(1.0 + 745.0 / x) + 1.0
    if step is None:
        step = min(0.02, T / 2000.0)
    t = np.arange(0.0, T + step, step)
    w = np.exp(-x * (np.cosh(t) - 1.0)) * np.cosh(nu * t)
    return float(np.exp(-x) * step * (w.sum() - 0.5 * w[0]))


def whittaker(j, s, y):
    """Mode-j radial profile sqrt(2 j y / pi) K_{s-1/2}(j y)."""
    y = np.asarray(y, dtype=float)
    return np.sqrt(2.0 * j * y / np.pi) * special.kv(s - 0.5, j * y)


def zero_mode_basis(s, y):
    y = np.asarray(y, dtype=float)
    if abs(s - 0.5) < 1e-12:
        return np.sqrt(y), np.sqrt(y) * np.log(y)
    return y ** s, y ** (1.0 - s)


# -- coefficients ------------------------------------------------------------


@dataclass
class FourierBesselCoeffs:
    s: float
    f01: float
    f02: float
    modes: np.ndarray            # (J, 2): (fe_j, fo_j), j = 1..J
    J: int
    residual: float = 0.0
    meta: dict = field(default_factory=dict)

    @property
    def eigenvalue(self):
        return self.s * (1.0 - self.s)

    def norm(self):
        return float(np.sqrt(self.f01 ** 2 + self.f02 ** 2 + np.sum(self.modes ** 2)))

    def __add__(self, other):
        return _combine([(1.0, self), (1.0, other)])

    def __rmul__(self, a):
        return _combine([(a, self)])

    def evaluate(self, x, y):
        x, y = np.broadcast_arrays(np.asarray(x, float), np.asarray(y, float))
        b1, b2 = zero_mode_basis(self.s, y)
        out = self.f01 * b1 + self.f02 * b2
        for j in range(1, self.J + 1):
            fe, fo = self.modes[j - 1]
            if fe or fo:
                out = out + (fe * np.cos(j * x) + fo * np.sin(j * x)) * whittaker(j, self.s, y)
        return out

    def to_json(self, pi=None, arc=None):
        return json.dumps({"s": self.s, "f01": self.f01, "f02": self.f02,
                           "modes": self.modes.tolist(), "residual": self.residual,
                           "pi": pi, "arc_estimate": arc})


def _combine(terms):
    s = terms[0][1].s
    J = max(c.J for _, c in terms)
    modes = np.zeros((J, 2))
    f01 = f02 = 0.0
    for a, c in terms:
        if c.s != s:
            raise DomainError("cannot combine coefficients with different s")
        f01 += a * c.f01
        f02 += a * c.f02
        modes[:c.J] += a * c.modes
    return FourierBesselCoeffs(s, f01, f02, modes, J)


def s_from_eigenvalue(lam):
    """The s in (1/2, 1] with s (1 - s) = lam (lam in [0, 1/4])."""
    if not 0.0 <= lam <= 0.25:
        raise DomainError(f"eigenvalue {lam} outside [0, 1/4]")
    return 0.5 + np.sqrt(max(0.25 - lam, 0.0))


def fit_coefficients(samples, s, J, y_levels, n_x=None):
    """Fit Fourier-Bessel coefficients to horocycle samples.

    ``samples`` is either a callable ``(x, y) -> values`` or an array
    (len(y_levels), n_x) of values at ``x_i = -pi + 2 pi i / n_x``.
    """
    y = np.asarray(sorted(y_levels), dtype=float)
    if len(y) < 4:
        raise DomainError("need at least four horocycle heights")
    if y.max() / y.min() < 2.0:
        raise ConditioningError("zero-mode fit ill-conditioned: y range factor below 2")
    if callable(samples):
        n_x = n_x or max(64, 8 * J)
        x = -np.pi + 2 * np.pi * np.arange(n_x) / n_x
        V = np.array([samples(x, yy) for yy in y])
    else:
        V = np.asarray(samples, dtype=float)
        n_x = V.shape[1]
        x = -np.pi + 2 * np.pi * np.arange(n_x) / n_x
    if J > n_x // 4:
        raise DomainError(f"J = {J} exceeds samples per horocycle / 4")
    # discrete Fourier coefficients per level
    a0 = V.mean(axis=1)
    a = np.stack([2.0 / n_x * V @ np.cos(j * x) for j in range(1, J + 1)], axis=1)
    b = np.stack([2.0 / n_x * V @ np.sin(j * x) for j in range(1, J + 1)], axis=1)
    B = np.stack(zero_mode_basis(s, y), axis=1)
    # column scaling keeps the 2x2 least-squares system well conditioned
    sc = np.abs(B).max(axis=0)
    f0 = np.linalg.lstsq(B / sc, a0, rcond=None)[0] / sc
    modes = np.zeros((J, 2))
    for j in range(1, J + 1):
        W = whittaker(j, s, y)
        ww = W @ W
        if ww > 0:
            modes[j - 1] = [(W @ a[:, j - 1]) / ww, (W @ b[:, j - 1]) / ww]
    c = FourierBesselCoeffs(float(s), float(f0[0]), float(f0[1]), modes, J)
    model = np.array([c.evaluate(x, yy) for yy in y])
    den = np.sqrt(np.sum(V ** 2))
    c.residual = float(np.sqrt(np.sum((V - model) ** 2)) / den) if den > 0 else 0.0
    c.meta = {"y_levels": y.tolist(), "n_x": int(n_x)}
    return c


class CuspSampler:
    """Piecewise linear interpolation of a mesh function in one cusp chart."""

    def __init__(self, m, cusp):
        dec = m.point.decomposition
        q, slot = dec.cusp_slots[cusp]
        self.y_lo = max(h["y_c"][slot] for h in m.hexes if h["pants"] == q)
        self.Y = m.Y
        self.parts = []
        for half in (0, 1):
            sel = np.nonzero((m.tri_hex == 2 * q + half) & (m.tri_piece == slot))[0]
            z = hb.hyperboloid_to_uhp(m.corner_pos[sel].reshape(-1, 3)).reshape(-1, 3)
            gids = m.triangles[sel]
            loc = m.tri_local[sel]
            uniq, inv = np.unique(loc.ravel(), return_inverse=True)
            pts = np.zeros(len(uniq), dtype=complex)
            g = np.zeros(len(uniq), dtype=np.int64)
            pts[inv] = z.ravel()
            g[inv] = gids.ravel()
            tri = inv.reshape(-1, 3)
            # mirror copy lives at -x; keep the triangulation counter-clockwise
            xs = pts.real if half == 0 else -pts.real
            if half == 1:
                tri = tri[:, [0, 2, 1]]
            T = Triangulation(xs, np.log(pts.imag), tri)
            self.parts.append((T, TrapezoidMapTriFinder(T), g))

    def __call__(self, v, x, y):
        x = np.mod(np.asarray(x, float) + np.pi, 2 * np.pi) - np.pi
        y = np.broadcast_to(np.asarray(y, float), x.shape)
        out = np.full(x.shape, np.nan)
        self._fill(v, x, y, out)
        # points on the seams x = 0, +-pi may fall between the two halves
        for dx in (1e-9, -1e-9):
            if np.isnan(out).any():
                self._fill(v, np.clip(x + dx, -np.pi + 1e-9, np.pi - 1e-9), y, out)
        if np.isnan(out).any():
            raise DomainError("sample point outside the meshed cusp")
        return out

    def _fill(self, v, x, y, out):
        for T, finder, g in self.parts:
            ti = finder(x, np.log(y))
            ok = ti >= 0
            if not ok.any():
                continue
            tri = T.triangles[ti[ok]]
            X = np.stack([T.x[tri], T.y[tri]], axis=-1)
            P = np.stack([x[ok], np.log(y[ok])], axis=-1)
            d = X[:, 1:] - X[:, :1]
            det = d[:, 0, 0] * d[:, 1, 1] - d[:, 0, 1] * d[:, 1, 0]
            r = P - X[:, 0]
            l1 = (r[:, 0] * d[:, 1, 1] - r[:, 1] * d[:, 1, 0]) / det
            l2 = (d[:, 0, 0] * r[:, 1] - d[:, 0, 1] * r[:, 0]) / det
            vals = v[g[tri]]
            fill = (1 - l1 - l2) * vals[:, 0] + l1 * vals[:, 1] + l2 * vals[:, 2]
            idx = np.nonzero(ok)[0]
            put = np.isnan(out[idx])
            out[idx[put]] = fill[put]


def default_levels(m, cusp, count=6):
    s = CuspSampler(m, cusp)
    lo, hi = 1.05 * s.y_lo, 0.95 * m.Y
    return list(np.geomspace(lo, hi, count))


def fit_cusp_coeffs(m, v, cusp, s, J=4, y_levels=None, n_x=None):
    """Fourier-Bessel coefficients of mesh function ``v`` in cusp ``cusp``."""
    sampler = CuspSampler(m, cusp)
    if y_levels is None:
        y_levels = default_levels(m, cusp)
    y_levels = sorted(y_levels)
    if y_levels[0] < sampler.y_lo or y_levels[-1] > m.Y:
        raise DomainError("horocycle heights must lie inside the meshed cusp")
    if n_x is None:
        n_x = max(64, 8 * J)
    c = fit_coefficients(lambda x, y: sampler(v, x, y), s, J, y_levels, n_x)
    c.meta["truncation_bias"] = truncation_bias(c.f02, s, m.Y)
    return c


def truncation_bias(f02, s, Y):
    """y^s coefficient forced by the zero-flux condition at height Y."""
    if abs(s - 0.5) < 1e-12:
        return 0.0
    return -f02 * (1.0 - s) / s * Y ** (1.0 - 2.0 * s)


def f01_tolerance(c, Y, fit_factor=10.0):
    """Size below which f01 is indistinguishable from zero: the truncation
    bias plus a multiple of the fit misfit (both in units of the norm)."""
    return 2.0 * abs(truncation_bias(c.f02, c.s, Y)) + fit_factor * c.residual * c.norm()


# -- the map pi and the arc audit --------------------------------------------


@dataclass
class PiImage:
    phi0: float
    phi1e: float
    phi1o: float
    flagged: bool = False

    def as_list(self):
        return [self.phi0, self.phi1e, self.phi1o]


def pi_map(c, f01_tol=None):
    """(phi_0, phi_1^e, phi_1^o), phi_0 read from f02."""
    fe, fo = (c.modes[0] if c.J >= 1 else (0.0, 0.0))
    flag = False
    if f01_tol is not None and abs(c.f01) > f01_tol:
        flag = True
    return PiImage(float(c.f02), float(fe), float(fo), flag)


def arc_count_estimate(c, tol=ARC_TOL):
    """Heuristic lower bound on nodal arcs at the puncture (None: indeterminate)."""
    nrm = c.norm()
    if nrm == 0:
        return None
    if abs(c.f02) > tol * nrm:
        return 0
    for j in range(1, c.J + 1):
        if np.hypot(*c.modes[j - 1]) > tol * nrm:
            return 2 * max(j, 1)
    return None


def multiplicity_audit(coeffs, tol=1e-6):
    """Rank of the pi-images of a cluster of eigenfunctions at one cusp."""
    d = len(coeffs)
    if d == 0:
        return {"d": 0, "rank": 0, "singular_values": [], "verdict": "empty", "kernel": None}
    P = np.array([pi_map(c).as_list() for c in coeffs])
    sv = np.linalg.svd(P, compute_uv=False)
    scale = sv[0] if len(sv) and sv[0] > 0 else 1.0
    rank = int(np.sum(sv > tol * scale))
    out = {"d": d, "rank": rank, "singular_values": sv.tolist()}
    if rank == d:
        out["verdict"] = "consistent with d <= 3" if d <= 3 else "rank deficiency expected"
        out["kernel"] = None
        return out
    # a combination of the cluster killed by pi
    U, S, Vt = np.linalg.svd(P.T)
    w = Vt[-1]
    psi = _combine([(float(wi), c) for wi, c in zip(w, coeffs)])
    arcs = arc_count_estimate(psi)
    out["verdict"] = "apparent dim ker pi > 0 - inspect arc structure"
    out["kernel"] = {"weights": w.tolist(), "arc_estimate": arcs,
                     "contradiction": bool(arcs is not None and arcs >= 4)}
    return out
