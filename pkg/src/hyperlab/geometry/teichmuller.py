"""Pants decompositions and Fenchel-Nielsen points.

Twists are measured in length units along the curve, so adding the curve
length to a twist is a full Dehn twist.  Convention for a curve joining
slot ``a`` of pants ``P`` (first end) to slot ``b`` of pants ``Q`` (second
end): a point at arc-length ``u`` along P's boundary (measured from the
start of ``b[a]`` in P's orientation) is identified with the point at
``twist - u`` along Q's boundary.
"""
import json
from dataclasses import dataclass, field

import numpy as np

from ..errors import DomainError
from .hexagon import LENGTH_MIN, LENGTH_MAX


@dataclass(frozen=True)
class Curve:
    id: str
    ends: tuple  # ((pants, slot), (pants, slot))


@dataclass(frozen=True)
class PantsDecomposition:
    genus: int
    punctures: int
    pants_count: int
    curves: tuple
    cusp_slots: tuple = ()
    name: str = ""
    slots: dict = field(default=None, compare=False, repr=False)

    def __post_init__(self):
        g, n = self.genus, self.punctures
        if self.pants_count != 2 * g - 2 + n or self.pants_count <= 0:
            raise DomainError(f"pants count {self.pants_count} != 2g-2+n for ({g},{n})")
        if len(self.curves) != 3 * g - 3 + n:
            raise DomainError(f"need {3 * g - 3 + n} interior curves, got {len(self.curves)}")
        if len(self.cusp_slots) != n:
            raise DomainError("cusp slot count must equal the number of punctures")
        slots = {}
        for ci, c in enumerate(self.curves):
            for e, ps in enumerate(c.ends):
                ps = (int(ps[0]), int(ps[1]))
                if ps in slots:
                    raise DomainError(f"slot {ps} used twice")
                slots[ps] = ("curve", ci, e)
        for k, ps in enumerate(self.cusp_slots):
            ps = (int(ps[0]), int(ps[1]))
            if ps in slots:
                raise DomainError(f"slot {ps} used twice")
            slots[ps] = ("cusp", k, 0)
        want = {(p, s) for p in range(self.pants_count) for s in range(3)}
        if set(slots) != want:
            raise DomainError("every pants slot must be glued or a cusp exactly once")
        object.__setattr__(self, "slots", slots)

    @property
    def curve_ids(self):
        return [c.id for c in self.curves]

    def curve_index(self, cid):
        if isinstance(cid, (int, np.integer)):
            if not 0 <= cid < len(self.curves):
                raise KeyError(f"unknown curve {cid}")
            return int(cid)
        for i, c in enumerate(self.curves):
            if c.id == cid:
                return i
        raise KeyError(f"unknown curve {cid!r}")

    def pants_slots(self, p):
        """Labels of the three slots of pants p (curve id or 'cusp<k>')."""
        out = []
        for s in range(3):
            kind, idx, _ = self.slots[(p, s)]
            out.append(self.curves[idx].id if kind == "curve" else f"cusp{idx}")
        return out

    def components_without(self, removed):
        """Connected components (sets of pants) after cutting the given curves."""
        parent = list(range(self.pants_count))

        def find(x):
            while parent[x] != x:
                parent[x] = parent[parent[x]]
                x = parent[x]
            return x
        removed = {self.curve_index(c) for c in removed}
        for i, c in enumerate(self.curves):
            if i not in removed:
                a, b = find(c.ends[0][0]), find(c.ends[1][0])
                parent[a] = b
        comps = {}
        for p in range(self.pants_count):
            comps.setdefault(find(p), set()).add(p)
        return sorted(comps.values(), key=min)

    def separates(self, curves):
        return len(self.components_without(curves)) > 1

    def to_dict(self):
        return {
            "genus": self.genus,
            "punctures": self.punctures,
            "pants": [self.pants_slots(p) for p in range(self.pants_count)],
            "curves": [{"id": c.id, "ends": [list(e) for e in c.ends]} for c in self.curves],
        }

    @classmethod
    def from_dict(cls, d, name=""):
        curves = tuple(Curve(c["id"], tuple(tuple(e) for e in c["ends"])) for c in d["curves"])
        cusps = []
        for p, labels in enumerate(d["pants"]):
            for s, lab in enumerate(labels):
                if str(lab).startswith("cusp"):
                    cusps.append((int(str(lab)[4:]), (p, s)))
        cusps = tuple(ps for _, ps in sorted(cusps))
        return cls(int(d["genus"]), int(d["punctures"]), len(d["pants"]), curves, cusps, name)


def _dec(g, n, pants, name):
    """Build a decomposition from slot labels, e.g. [['a','b','c'], ...]."""
    ends, cusps = {}, []
    for p, labels in enumerate(pants):
        for s, lab in enumerate(labels):
            if lab.startswith("cusp"):
                cusps.append((int(lab[4:]), (p, s)))
            else:
                ends.setdefault(lab, []).append((p, s))
    # coordinates follow the curve labels, c0, c1, ...
    order = sorted(ends, key=lambda c: (len(c), c))
    curves = tuple(Curve(c, tuple(ends[c])) for c in order)
    cusps = tuple(ps for _, ps in sorted(cusps))
    return PantsDecomposition(g, n, len(pants), curves, cusps, name)


def theta_decomposition():
    """Genus 2: two pants joined along three non-separating curves."""
    return _dec(2, 0, [["c0", "c1", "c2"], ["c0", "c1", "c2"]], "theta")


def dumbbell_decomposition():
    """Genus 2: two self-glued pants joined by the separating curve c2."""
    return _dec(2, 0, [["c0", "c0", "c2"], ["c1", "c1", "c2"]], "dumbbell")


def sphere_decomposition(n):
    """Punctured sphere (0, n), n >= 4, as a chain of pants."""
    if n < 4:
        raise DomainError("punctured sphere chain needs n >= 4")
    pants = [["c0", "cusp0", "cusp1"]]
    for i in range(n - 4):
        pants.append([f"c{i}", f"c{i + 1}", f"cusp{i + 2}"])
    pants.append([f"c{n - 4}", f"cusp{n - 2}", f"cusp{n - 1}"])
    return _dec(0, n, pants, f"sphere{n}")


def once_punctured_torus_decomposition():
    return _dec(1, 1, [["c0", "c0", "cusp0"]], "torus1")


def twice_punctured_torus_decomposition():
    """(1, 2): two pants joined along two non-separating curves."""
    return _dec(1, 2, [["c0", "c1", "cusp0"], ["c0", "c1", "cusp1"]], "torus2")


def chain_decomposition(g):
    """Closed genus g >= 2: end pants self-glued, middle pants in a chain."""
    if g < 2:
        raise DomainError("genus must be at least 2")
    pants = [["a0", "a0", "s0"]]
    for i in range(g - 2):
        pants.append([f"s{2 * i}", f"a{i + 1}", f"s{2 * i + 1}"])
        pants.append([f"s{2 * i + 1}", f"a{i + 1}", f"s{2 * i + 2}"])
    pants.append([f"a{g - 1}", f"a{g - 1}", f"s{2 * g - 4}"])
    return _dec(g, 0, pants, f"chain{g}")


STANDARD = {
    "theta": theta_decomposition,
    "dumbbell": dumbbell_decomposition,
    "sphere4": lambda: sphere_decomposition(4),
    "sphere5": lambda: sphere_decomposition(5),
    "torus1": once_punctured_torus_decomposition,
    "torus2": twice_punctured_torus_decomposition,
}


def _fmt(x):
    return format(float(x), ".16e")


@dataclass(frozen=True)
class FNPoint:
    decomposition: PantsDecomposition
    lengths: tuple
    twists: tuple

    def __post_init__(self):
        L = tuple(float(x) for x in self.lengths)
        T = tuple(float(x) for x in self.twists)
        m = len(self.decomposition.curves)
        if len(L) != m or len(T) != m:
            raise DomainError(f"need {m} lengths and twists, got {len(L)} and {len(T)}")
        if not all(np.isfinite(x) and x > 0 for x in L):
            raise DomainError(f"lengths must be positive and finite: {L}")
        if not all(np.isfinite(x) for x in T):
            raise DomainError("twists must be finite")
        object.__setattr__(self, "lengths", L)
        object.__setattr__(self, "twists", T)

    @property
    def genus(self):
        return self.decomposition.genus

    @property
    def punctures(self):
        return self.decomposition.punctures

    @property
    def surface_type(self):
        return (self.genus, self.punctures)

    @property
    def area(self):
        return 2 * np.pi * (2 * self.genus - 2 + self.punctures)

    def coordinates(self):
        return np.array(self.lengths + self.twists)

    def with_coordinates(self, lengths=None, twists=None):
        return FNPoint(self.decomposition,
                       self.lengths if lengths is None else tuple(lengths),
                       self.twists if twists is None else tuple(twists))

    def check_conditioning(self):
        from ..errors import ConditioningError
        for c, x in zip(self.decomposition.curves, self.lengths):
            if not LENGTH_MIN <= x <= LENGTH_MAX:
                raise ConditioningError(
                    f"curve {c.id} has length {x:g} outside [{LENGTH_MIN:g}, {LENGTH_MAX:g}]")

    def to_json(self):
        d = self.decomposition.to_dict()
        parts = [
            f'"genus": {d["genus"]}',
            f'"punctures": {d["punctures"]}',
            f'"pants": {json.dumps(d["pants"])}',
            f'"curves": {json.dumps(d["curves"])}',
            '"lengths": [' + ", ".join(_fmt(x) for x in self.lengths) + "]",
            '"twists": [' + ", ".join(_fmt(x) for x in self.twists) + "]",
        ]
        return "{" + ", ".join(parts) + "}"

    @classmethod
    def from_json(cls, text):
        d = json.loads(text) if isinstance(text, str) else text
        return cls(PantsDecomposition.from_dict(d), tuple(d["lengths"]), tuple(d["twists"]))


def fn_point(decomposition, lengths, twists=None):
    """Convenience constructor; ``decomposition`` may be a standard name."""
    if isinstance(decomposition, str):
        decomposition = STANDARD[decomposition]()
    if twists is None:
        twists = [0.0] * len(lengths)
    return FNPoint(decomposition, tuple(lengths), tuple(twists))
