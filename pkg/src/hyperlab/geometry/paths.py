"""Paths in Teichmueller space on a fixed decomposition."""
from dataclasses import dataclass, field

import numpy as np

from ..errors import DomainError
from .teichmuller import FNPoint


@dataclass(frozen=True)
class TeichPath:
    """Continuous map [0, 1] -> FNPoint.

    ``pieces`` is a list of (t0, t1, evaluator) triples; within a piece the
    evaluator receives the local parameter in [0, 1].
    """
    kind: str
    decomposition: object
    pieces: tuple
    meta: dict = field(default_factory=dict)

    @property
    def breakpoints(self):
        return [pc[0] for pc in self.pieces[1:]]

    def __call__(self, t):
        t = float(t)
        if not 0.0 <= t <= 1.0:
            raise DomainError(f"path parameter {t} outside [0, 1]")
        for t0, t1, ev in self.pieces:
            if t <= t1 or t1 == 1.0:
                s = 0.0 if t1 == t0 else (t - t0) / (t1 - t0)
                return ev(min(max(s, 0.0), 1.0))
        raise AssertionError("unreachable")

    def sample(self, n):
        ts = np.linspace(0.0, 1.0, n)
        return ts, [self(t) for t in ts]


def _lerp(p, q):
    a, b = p.coordinates(), q.coordinates()
    m = len(p.lengths)

    def ev(s):
        x = (1 - s) * a + s * b
        return FNPoint(p.decomposition, tuple(x[:m]), tuple(x[m:]))
    return ev


def _check_same(p, q):
    if p.decomposition.to_dict() != q.decomposition.to_dict():
        raise DomainError("path endpoints must share a decomposition")


def linear_path(p, q):
    _check_same(p, q)
    return TeichPath("linear", p.decomposition, ((0.0, 1.0, _lerp(p, q)),))


def pinch_path(p, curves, end_length):
    """Shrink the curves in ``curves`` log-linearly to ``end_length``."""
    if end_length <= 0:
        raise DomainError("end length must be positive")
    idx = sorted({p.decomposition.curve_index(c) for c in curves})
    if not idx:
        raise DomainError("pinch set must be non-empty")
    for i in idx:
        if not end_length < p.lengths[i]:
            raise DomainError(f"end length {end_length} not below length of curve {i}")
    L0 = np.array(p.lengths)

    def ev(s):
        L = L0.copy()
        for i in idx:
            L[i] = np.exp((1 - s) * np.log(L0[i]) + s * np.log(end_length))
        if s == 1.0:
            for i in idx:
                L[i] = end_length
        return p.with_coordinates(lengths=L)
    return TeichPath("pinch", p.decomposition, ((0.0, 1.0, ev),),
                     {"curves": idx, "end_length": end_length})


def appendix_beta_path(p1, p2, c1, c2, eps=None):
    """Two-phase path keeping one of two short curves short throughout.

    Phase one (t in [0, 1/2]) holds l(c1) at its value in p1 and moves every
    other coordinate to an intermediate point whose l(c2) already equals its
    value in p2; phase two holds l(c2) and finishes.  Twists move linearly.
    """
    _check_same(p1, p2)
    dec = p1.decomposition
    i1, i2 = dec.curve_index(c1), dec.curve_index(c2)
    meta = {"c1": i1, "c2": i2, "eps": eps}
    if eps is not None:
        if not (p1.lengths[i1] < eps and p2.lengths[i2] < eps):
            raise DomainError("endpoints must have the chosen curves shorter than eps")
    if i1 == i2:
        meta["degenerate"] = True
        return TeichPath("appendix-beta", dec, ((0.0, 1.0, _lerp(p1, p2)),), meta)
    m = len(p1.lengths)
    a, b = p1.coordinates(), p2.coordinates()
    mid = 0.5 * (a + b)
    mid[i1] = a[i1]
    mid[i2] = b[i2]
    pm = FNPoint(dec, tuple(mid[:m]), tuple(mid[m:]))
    return TeichPath("appendix-beta", dec,
                     ((0.0, 0.5, _lerp(p1, pm)), (0.5, 1.0, _lerp(pm, p2))), meta)
