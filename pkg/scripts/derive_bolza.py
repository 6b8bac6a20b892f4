"""Derive Fenchel-Nielsen coordinates of the Bolza surface.

The Bolza surface is the quotient of the disk by the group generated by the
four hyperbolic translations pairing opposite sides of the regular octagon
with interior angles pi/4 (the octagon is a union of 96 triangles of the
(2, 3, 8) triangle group).  The derivation:

1. build the four side pairings and enumerate group elements of bounded
   displacement;
2. collect the conjugacy classes of short closed geodesics, keeping the
   simple ones (no translate of the axis crosses the axis);
3. pick three pairwise disjoint, non-separating, homologically dependent
   systoles: a theta decomposition;
4. read off the twist along each curve as the signed offset between the
   feet of the shortest orthogeodesics on the two sides of its axis;
5. choose the twist sign matching the length spectrum of the octagon group
   with that of the glued pants (``hyperlab.geometry.fuchsian``).

Running the script writes ``src/hyperlab/presets/bolza.json``.
"""
import argparse
import itertools
import json
from pathlib import Path

import numpy as np

from hyperlab.geometry import hyperbolic as hb
from hyperlab.geometry.fuchsian import build_generators
from hyperlab.geometry.teichmuller import fn_point

SYSTOLE = 2 * np.arccosh(1 + np.sqrt(2))
CAYLEY = np.array([[1j, 1j], [-1, 1]])      # disk -> upper half-plane
# generic rotation keeps every axis endpoint finite in the half-plane
OFFSET = 0.1234


def octagon_generators():
    """SL(2, R) side pairings of the regular pi/4 octagon."""
    out = []
    c, s = np.cosh(SYSTOLE / 2), np.sinh(SYSTOLE / 2)
    for k in range(4):
        phi = k * np.pi / 4 + OFFSET
        D = np.array([[c, s * np.exp(1j * phi)], [s * np.exp(-1j * phi), c]])
        M = CAYLEY @ D @ np.linalg.inv(CAYLEY)
        out.append((M / np.sqrt(np.linalg.det(M))).real)
    return out


def enumerate_group(gens, radius, max_len=14):
    """Words (letter, sign) and matrices moving i by at most ``radius``."""
    letters = []
    for k, G in enumerate(gens):
        letters += [((k, 1), G), ((k, -1), np.linalg.inv(G))]
    bound = np.cosh(radius)
    key = lambda M: tuple(np.round(hb.normalize_sl2(M).ravel(), 7))
    seen = {key(np.eye(2)): ((), np.eye(2))}
    frontier = [((), np.eye(2))]
    for _ in range(max_len):
        nxt = []
        for w, M in frontier:
            for lt, G in letters:
                if w and w[-1][0] == lt[0] and w[-1][1] == -lt[1]:
                    continue
                N = M @ G
                if 0.5 * np.sum(N * N) > bound:
                    continue
                k = key(N)
                if k not in seen:
                    seen[k] = (w + (lt,), N)
                    nxt.append((w + (lt,), N))
        frontier = nxt
    return list(seen.values())


def length_spectrum(gens, radius=8.0, count=6):
    elems = enumerate_group(gens, radius)
    vals = {round(hb.translation_length(M), 6) for _, M in elems if abs(np.trace(M)) > 2 + 1e-6}
    return sorted(vals)[:count]


def _mob(M, x):
    a, b, c, d = M.ravel()
    return (a * x + b) / (c * x + d)


def axis(M):
    """(repelling, attracting) fixed points on the real line."""
    a, b, c, d = M.ravel()
    r = np.sqrt((a + d) ** 2 - 4)
    x1, x2 = ((a - d) - r) / (2 * c), ((a - d) + r) / (2 * c)
    return (x2, x1) if abs(c * x1 + d) > 1 else (x1, x2)


def _angle(x):
    return np.angle((x - 1j) / (x + 1j))


def crosses(A, B):
    a1, a2 = sorted((_angle(A[0]), _angle(A[1])))
    b1, b2 = _angle(B[0]), _angle(B[1])
    if min(abs(b - a) for b in (b1, b2) for a in (a1, a2)) < 1e-9:
        return False
    return (a1 < b1 < a2) != (a1 < b2 < a2)


def same_axis(A, B):
    a, b = [_angle(x) for x in A], [_angle(x) for x in B]
    return (abs(a[0] - b[0]) < 1e-7 and abs(a[1] - b[1]) < 1e-7) or \
        (abs(a[0] - b[1]) < 1e-7 and abs(a[1] - b[0]) < 1e-7)


def simple_classes(gens, max_length=5.0):
    elems = enumerate_group(gens, 9.0)
    moves = [M for _, M in enumerate_group(gens, 7.5)]
    classes = []
    for w, M in elems:
        ell = hb.translation_length(M)
        if not 1e-6 < ell < max_length:
            continue
        A = axis(M)
        if any(abs(ell - c["length"]) < 1e-6 and any(same_axis(A, T) for T in c["translates"])
               for c in classes):
            continue
        T = [(_mob(g, A[0]), _mob(g, A[1])) for g in moves]
        homology = np.zeros(4, dtype=int)
        for k, e in w:
            homology[k] += e
        classes.append({"length": ell, "word": w, "axis": A, "translates": T,
                        "simple": not any(crosses(A, t) for t in T), "homology": homology})
    return [c for c in classes if c["simple"]]


def theta_triples(classes):
    n = len(classes)
    disjoint = np.zeros((n, n), dtype=bool)
    for i, j in itertools.permutations(range(n), 2):
        disjoint[i, j] = not any(crosses(classes[i]["axis"], t) for t in classes[j]["translates"])
    for i, j, k in itertools.combinations(range(n), 3):
        if not (disjoint[i, j] and disjoint[i, k] and disjoint[j, k]):
            continue
        h = [classes[x]["homology"] for x in (i, j, k)]
        if not all(x.any() for x in h):
            continue
        if any(not (s1 * h[0] + s2 * h[1] + h[2]).any() for s1 in (1, -1) for s2 in (1, -1)):
            yield i, j, k


def twist_offset(c, other):
    """Offset along the axis of ``c`` between the seam feet toward ``other``
    on the two sides of the axis, as a number in [0, length)."""
    r, a = c["axis"]
    M = np.array([[1.0, -r], [1.0, -a]])     # axis -> imaginary axis
    sgn = np.sign(np.linalg.det(M))
    feet = []
    for t in other["translates"]:
        p, q = _mob(M, t[0]), _mob(M, t[1])
        if p * q <= 0:
            continue
        d = np.arccosh((abs(q) + abs(p)) / abs(abs(q) - abs(p)))
        feet.append((d, np.sign(p) * sgn, 0.5 * np.log(p * q) % c["length"]))
    dmin = min(f[0] for f in feet)
    side = {s: u for d, s, u in feet if d < dmin + 1e-6}
    return (side[1] - side[-1]) % c["length"], dmin


def derive():
    gens = octagon_generators()
    target = length_spectrum(gens)
    classes = simple_classes(gens)
    triple = next(t for t in theta_triples(classes)
                  if all(abs(classes[x]["length"] - SYSTOLE) < 1e-9 for x in t))
    cs = [classes[x] for x in triple]
    lengths = [c["length"] for c in cs]
    offsets = [twist_offset(cs[k], cs[(k + 1) % 3])[0] for k in range(3)]
    for sign in (1, -1):
        twists = [(sign * o) % ell for o, ell in zip(offsets, lengths)]
        for shift in (0.0, 0.5):
            tw = [(t + shift * ell) % ell for t, ell in zip(twists, lengths)]
            p = fn_point("theta", lengths, tw)
            got = length_spectrum(build_generators(p).generators)
            if np.allclose(got, target, atol=1e-5):
                return p, target, offsets
    raise RuntimeError("no twist convention reproduces the octagon length spectrum")


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    default = Path(__file__).resolve().parents[1] / "src/hyperlab/presets/bolza.json"
    ap.add_argument("--out", type=Path, default=default)
    args = ap.parse_args(argv)
    p, spectrum, offsets = derive()
    doc = {
        "name": "bolza",
        "point": json.loads(p.to_json()),
        "provenance": {
            "script": "scripts/derive_bolza.py",
            "construction": "regular octagon with angles pi/4, opposite sides paired",
            "decomposition": "three disjoint non-separating systoles (theta graph)",
            "systole": SYSTOLE,
            "length_spectrum_check": spectrum,
            "twist_fraction": [t / ell for t, ell in zip(p.twists, p.lengths)],
        },
    }
    args.out.write_text(json.dumps(doc, indent=2) + "\n")
    print(f"wrote {args.out}")
    print("lengths", p.lengths)
    print("twists ", p.twists)


if __name__ == "__main__":
    main()
