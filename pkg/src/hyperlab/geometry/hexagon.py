"""Right-angled hexagons and their realization in the upper half-plane.

Slot ``k`` of a pair of pants (k = 0, 1, 2) owns the half-boundary
``b[k]``.  Going counter-clockwise round the hexagon the sides are

    b[0], seam 2, b[1], seam 0, b[2], seam 1

so seam ``j`` is the side opposite ``b[j]``.  A zero half-length marks a
cusp; the corresponding side collapses to an ideal vertex.
"""
from dataclasses import dataclass, field

import numpy as np

from . import hyperbolic as hb
from ..errors import ConditioningError, DomainError

LENGTH_MIN, LENGTH_MAX = 1e-6, 50.0


def seam_cosh(bk, bi, bj):
    """cosh of the seam opposite ``bk`` (``bk`` may be 0 for a cusp)."""
    return (np.cosh(bk) + np.cosh(bi) * np.cosh(bj)) / (np.sinh(bi) * np.sinh(bj))


@dataclass(frozen=True)
class Hexagon:
    b1: float
    b2: float
    b3: float
    s1: float
    s2: float
    s3: float

    @property
    def halves(self):
        return (self.b1, self.b2, self.b3)

    @property
    def seams(self):
        return (self.s1, self.s2, self.s3)

    def identity_residual(self):
        """Largest relative defect of the three seam identities."""
        b, s = self.halves, self.seams
        res = 0.0
        for k in range(3):
            i, j = (k + 1) % 3, (k + 2) % 3
            rhs = seam_cosh(b[k], b[i], b[j])
            res = max(res, abs(np.cosh(s[k]) - rhs) / rhs)
        return res


def solve_hexagon(b1, b2, b3):
    """Right-angled hexagon with alternate sides ``b1, b2, b3``."""
    b = (float(b1), float(b2), float(b3))
    if not all(np.isfinite(x) and x > 0 for x in b):
        raise DomainError(f"hexagon sides must be positive and finite, got {b}")
    s = []
    for k in range(3):
        i, j = (k + 1) % 3, (k + 2) % 3
        s.append(float(np.arccosh(seam_cosh(b[k], b[i], b[j]))))
    return Hexagon(*b, *s)


def _seam_length(b, k):
    i, j = (k + 1) % 3, (k + 2) % 3
    if b[i] == 0 or b[j] == 0:
        return np.inf
    return float(np.arccosh(seam_cosh(b[k], b[i], b[j])))


def prev_seam(k):
    """Seam meeting ``b[k]`` at its start vertex."""
    return (k + 1) % 3


def next_seam(k):
    """Seam meeting ``b[k]`` at its end vertex."""
    return (k + 2) % 3


@dataclass
class PantsHexagon:
    """One hexagon of a pair of pants placed in the upper half-plane.

    ``start[k]``/``end[k]`` are the endpoints of ``b[k]`` in counter-clockwise
    order (equal ideal points for a cusp slot).  ``frames[k]`` maps ``i`` to
    ``start[k]`` and the upward direction to the direction of ``b[k]``.
    ``seam_frames[j]`` maps the imaginary axis onto seam ``j``.
    """
    b: tuple
    start: list
    end: list
    frames: dict
    seam_frames: list
    reflections: list = field(default_factory=list)
    cusp_charts: dict = field(default_factory=dict)

    def generator(self, k):
        """Boundary element of slot k: translation by 2 b[k] along b[k]
        from ``start`` towards ``end`` (parabolic for a cusp)."""
        R = self.reflections
        return R[next_seam(k)] @ R[prev_seam(k)]

    def seam_length(self, j):
        return _seam_length(self.b, j)

    def is_cusp(self, k):
        return self.b[k] == 0


def _ideal_ahead(F):
    """Forward endpoint of the geodesic ray leaving F(i) along F(up)."""
    return hb.mobius(F, hb.INF)


def build_pants_hexagon(b):
    """Walk round the hexagon with half-lengths ``b`` (0 marks a cusp)."""
    b = tuple(float(x) for x in b)
    cusps = [k for k in range(3) if b[k] == 0]
    if len(cusps) == 3:
        raise DomainError("thrice-punctured spheres are not supported")
    f = next(k for k in range(3) if b[k] > 0)
    if len(cusps) == 1:
        f = (cusps[0] + 1) % 3
    quarter = hb.rotation(np.pi / 2)
    start, end = [None] * 3, [None] * 3
    frames, seam_frames = {}, [None] * 3

    F = np.eye(2)
    k = f
    for step in range(3):
        if b[k] == 0:
            break
        start[k] = hb.mobius(F, 1j)
        frames[k] = F
        F = F @ hb.translation(b[k])
        end[k] = hb.mobius(F, 1j)
        F = F @ quarter
        j = next_seam(k)
        seam_frames[j] = F
        kn = (k + 1) % 3
        if b[kn] == 0:
            start[kn] = end[kn] = _ideal_ahead(F)
            break
        if step < 2:
            F = F @ hb.translation(_seam_length(b, j)) @ quarter
        k = kn

    if not cusps:
        # closing check: the walk must return to the first vertex.
        G = F @ hb.translation(_seam_length(b, next_seam((f + 2) % 3))) @ quarter
        err = np.abs(hb.normalize_sl2(G) - np.eye(2)).max()
        if err > 1e-6 * max(1.0, np.abs(G).max()):
            raise ConditioningError(f"hexagon walk failed to close (defect {err:.3g})")
    else:
        # the seam arriving at start[f] is the ray leaving it at a right angle
        back = frames[f] @ quarter
        p = _ideal_ahead(back)
        m = (f + 2) % 3
        if len(cusps) == 1:
            q = start[m]
            if not _same_ideal(p, q):
                raise ConditioningError(f"cusped hexagon does not close ({p} vs {q})")
        else:
            start[m] = end[m] = p
        seam_frames[prev_seam(f)] = hb.frame_from_endpoints(
            hb.mobius(back, 0.0), hb.mobius(back, hb.INF))
        if len(cusps) == 2:
            kn = (f + 1) % 3
            seam_frames[next_seam(kn)] = hb.frame_from_endpoints(start[kn], start[m])

    hexa = PantsHexagon(b, start, end, frames, seam_frames)
    hexa.reflections = [hb.reflection_in(Fs) for Fs in seam_frames]
    for c in cusps:
        hexa.cusp_charts[c] = _cusp_chart(hexa, c)
    return hexa


def _same_ideal(p, q, tol=1e-7):
    if p == hb.INF or q == hb.INF:
        return p == q or min(abs(p), abs(q)) > 1 / tol
    return abs(p - q) <= tol * max(1.0, abs(p))


def _other_end(Fs, p):
    a, e = hb.mobius(Fs, 0.0), hb.mobius(Fs, hb.INF)
    return e if _same_ideal(a, p) else a


def _cusp_chart(hexa, k):
    """SL2 map sending the ideal vertex of slot k to infinity, the seam
    leaving it to Re z = 0 and the seam arriving at it to Re z = pi."""
    p = hexa.start[k]
    if p == hb.INF:
        M1 = np.eye(2)
    else:
        M1 = np.array([[0.0, -1.0], [1.0, -p]])
    a = hb.mobius(M1, _other_end(hexa.seam_frames[next_seam(k)], p))
    c = hb.mobius(M1, _other_end(hexa.seam_frames[prev_seam(k)], p))
    if not c > a:
        raise ConditioningError("cusp chart orientation check failed")
    sc = np.pi / (c - a)
    A = np.array([[np.sqrt(sc), -a * np.sqrt(sc)], [0.0, 1.0 / np.sqrt(sc)]])
    return A @ M1
