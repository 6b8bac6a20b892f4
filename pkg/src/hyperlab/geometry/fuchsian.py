"""Fuchsian generators, relators and systole upper bounds.

Each pants is realized by the hexagon of ``hexagon.build_pants_hexagon``; its
boundary elements are products of seam reflections.  Pants are placed in a
common upper half-plane along a spanning tree of the pants graph; every
non-tree curve contributes a stable letter.
"""
from collections import deque
from dataclasses import dataclass

import numpy as np

from . import hyperbolic as hb
from .hexagon import build_pants_hexagon
from ..errors import BudgetError

SHORTER_REL = 1e-6


@dataclass
class FuchsianGenerators:
    names: list
    generators: list
    relators: list        # words: lists of (generator index, +-1)
    curve_words: list     # one word per interior curve
    cusp_words: list      # one word per cusp (parabolic)
    placements: list      # SL2 placement of each pants hexagon
    hexagons: list

    def word_matrix(self, word):
        M = np.eye(2)
        for gi, e in word:
            G = self.generators[gi]
            M = M @ (G if e > 0 else np.linalg.inv(G))
        return M

    def word_str(self, word):
        return " ".join(self.names[g] + ("" if e > 0 else "^-1") for g, e in word)

    def relator_defects(self):
        out = []
        for w in self.relators:
            M = self.word_matrix(w)
            out.append(min(np.abs(M - np.eye(2)).max(), np.abs(M + np.eye(2)).max()))
        return np.array(out)

    def curve_lengths(self):
        return np.array([hb.translation_length(self.word_matrix(w)) for w in self.curve_words])


def gluing_transform(hex_p, a, hex_q, b, twist):
    """Isometry placing pants Q across slot ``b`` against slot ``a`` of P."""
    Fp, Fq = hex_p.frames[a], hex_q.frames[b]
    return Fp @ hb.translation(twist) @ hb.J @ np.linalg.inv(Fq)


def build_generators(p):
    """Generators, relators and curve words of the surface group of ``p``."""
    p.check_conditioning()
    dec = p.decomposition
    halves = []
    for q in range(dec.pants_count):
        b = []
        for s in range(3):
            kind, idx, _ = dec.slots[(q, s)]
            b.append(0.0 if kind == "cusp" else p.lengths[idx] / 2)
        halves.append(b)
    hexes = [build_pants_hexagon(b) for b in halves]

    # spanning tree of the pants graph by breadth-first search
    place = [None] * dec.pants_count
    place[0] = np.eye(2)
    tree = set()
    queue = deque([0])
    while queue:
        P = queue.popleft()
        for ci, c in enumerate(dec.curves):
            (p0, s0), (p1, s1) = c.ends
            for (P1, a), (Q, b) in (((p0, s0), (p1, s1)), ((p1, s1), (p0, s0))):
                if P1 == P and place[Q] is None:
                    # the twist convention is symmetric in the two ends
                    T = gluing_transform(hexes[P1], a, hexes[Q], b, p.twists[ci])
                    place[Q] = place[P] @ T
                    tree.add(ci)
                    queue.append(Q)
    # conjugate so the placed domain is centred at i: word matrices stay
    # small and relators close to round-off
    C = _centring(place, hexes)
    place = [C @ M for M in place]

    names, gens, index = [], [], {}
    for q in range(dec.pants_count):
        Mq = place[q]
        for s in range(3):
            index[(q, s)] = len(gens)
            names.append(f"g{q}.{s}")
            gens.append(Mq @ hexes[q].generator(s) @ np.linalg.inv(Mq))
    relators = [[(index[(q, 2)], 1), (index[(q, 1)], 1), (index[(q, 0)], 1)]
                for q in range(dec.pants_count)]
    for ci, c in enumerate(dec.curves):
        (P, a), (Q, b) = c.ends
        gp, gq = index[(P, a)], index[(Q, b)]
        if ci in tree:
            relators.append([(gq, 1), (gp, 1)])
        else:
            T = gluing_transform(hexes[P], a, hexes[Q], b, p.twists[ci])
            t = place[P] @ T @ np.linalg.inv(place[Q])
            ti = len(gens)
            names.append(f"t{c.id}")
            gens.append(t)
            relators.append([(ti, 1), (gq, 1), (ti, -1), (gp, 1)])
    curve_words = [[(index[c.ends[0]], 1)] for c in dec.curves]
    cusp_words = [[(index[ps], 1)] for ps in dec.cusp_slots]
    return FuchsianGenerators(names, gens, relators, curve_words, cusp_words, place, hexes)


def _centring(place, hexes):
    """Isometry taking the hyperboloid barycentre of the placed finite
    hexagon vertices to i."""
    pts = []
    for M, hx in zip(place, hexes):
        for k in range(3):
            if not hx.is_cusp(k):
                pts += [hb.mobius(M, complex(hx.start[k])), hb.mobius(M, complex(hx.end[k]))]
    X = hb.uhp_to_hyperboloid(np.array(pts)).mean(axis=0)
    X = X / np.sqrt(-hb.minkowski(X, X))
    z = complex(hb.hyperboloid_to_uhp(X))
    r = np.sqrt(z.imag)
    return np.array([[1.0 / r, -z.real / r], [0.0, r]])


def _key(M):
    N = hb.normalize_sl2(M)
    return tuple(np.round(N.ravel(), 8))


def _fundamental_radius(fg):
    """Largest distance from i to a finite hexagon vertex of the placed
    fundamental domain (cusp vertices replaced by height-1 horocycle points)."""
    r = 0.0
    for M, hx in zip(fg.placements, fg.hexagons):
        pts = []
        for k in range(3):
            if hx.is_cusp(k):
                Cinv = np.linalg.inv(hx.cusp_charts[k])
                pts += [hb.mobius(Cinv, 1j), hb.mobius(Cinv, np.pi + 1j)]
            else:
                pts += [hx.start[k], hx.end[k]]
        for z in pts:
            w = hb.mobius(M, complex(z))
            r = max(r, float(hb.uhp_distance(1j, w)))
    return r


def systole(p, word_length_bound=12, node_budget=10**6, fg=None):
    """Upper bound for the systole and a witness word.

    Breadth-first enumeration of reduced words up to ``word_length_bound``,
    deduplicated by matrix and pruned by the displacement of ``i``; all
    pants curves are included regardless of the bound.
    """
    if word_length_bound < 1:
        raise ValueError("word length bound must be >= 1")
    fg = fg or build_generators(p)
    best = min(range(len(p.lengths)), key=lambda i: p.lengths[i])
    value, witness = p.lengths[best], fg.curve_words[best]
    radius = value + 2 * _fundamental_radius(fg) + 1e-9
    cosh_r = np.cosh(radius)

    letters = []
    for gi in range(len(fg.generators)):
        for sgn, G in ((1, fg.generators[gi]), (-1, np.linalg.inv(fg.generators[gi]))):
            letters.append(((gi, sgn), G, np.linalg.norm(G, 2)))
    seen = {_key(np.eye(2))}
    # (word, product, product and sum of letter norms): these bound the error
    frontier = [([], np.eye(2), 1.0, 0.0)]
    nodes = 0
    for _ in range(word_length_bound):
        nxt = []
        for word, M, mag, tot in frontier:
            for (lt, G, g) in letters:
                if word and word[-1][0] == lt[0] and word[-1][1] == -lt[1]:
                    continue
                N = M @ G
                nodes += 1
                if nodes > node_budget:
                    raise BudgetError("systole enumeration exceeded node budget",
                                      partial=(value, witness))
                # cosh d(i, N i) = (a^2 + b^2 + c^2 + d^2) / 2
                if 0.5 * np.sum(N * N) > cosh_r:
                    continue
                k = _key(N)
                if k in seen:
                    continue
                seen.add(k)
                w = word + [lt]
                nmag, ntot = mag * g, tot + g
                ell = hb.translation_length(N)
                if _distinct_shorter(ell, value, N, nmag * ntot):
                    value, witness = ell, w
                nxt.append((w, N, nmag, ntot))
        frontier = nxt
        if not frontier:
            break
    return float(value), witness


def _distinct_shorter(ell, value, N, growth):
    """Whether a computed length is a genuine geodesic clearly below ``value``.

    A generator G built in floating point is off by about eps |G|^2, so the
    trace of a word carries an error of about eps * prod |G_i| * sum |G_i|
    (``growth``).  Relators and parabolics come back with a length of order
    sqrt(trace error), conjugates of the current witness with an error of
    order trace error / sinh(ell / 2).
    """
    dt = 4.0 * np.finfo(float).eps * growth
    if ell <= max(2.0 * np.sqrt(dt), 1e-6 * max(1.0, float(np.abs(N).max()))):
        return False
    dl = dt / np.sinh(0.5 * ell)
    return ell + dl < value * (1 - SHORTER_REL)


def thick_thin(p, eps, bound=12, node_budget=10**6):
    """('thin' | 'thick', systole bound, witness word)."""
    value, witness = systole(p, bound, node_budget)
    return ("thin" if value < 2 * eps else "thick"), value, witness
