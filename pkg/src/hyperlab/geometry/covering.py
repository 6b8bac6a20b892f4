"""Cyclic covers of genus-2 surfaces cut along a decomposition curve."""
from dataclasses import dataclass

from ..errors import DomainError
from .teichmuller import Curve, FNPoint, PantsDecomposition


@dataclass(frozen=True)
class CoveringDescriptor:
    base: PantsDecomposition
    target_genus: int
    sheet_count: int
    cut_curve: int                 # index of the curve playing delta
    lifted: PantsDecomposition

    def lifted_curve(self, sheet, curve):
        """Index in the lifted decomposition of the copy of ``curve`` on ``sheet``."""
        m = len(self.base.curves)
        return sheet * m + self.base.curve_index(curve)

    def lifted_pants(self, sheet, pants):
        return sheet * self.base.pants_count + pants

    def symmetry(self):
        """The deck transformation tau as permutations (pants, curves)."""
        n, m, P = self.sheet_count, len(self.base.curves), self.base.pants_count
        pants = [((i // P + 1) % n) * P + i % P for i in range(n * P)]
        curves = [((i // m + 1) % n) * m + i % m for i in range(n * m)]
        return pants, curves

    def read_copy(self, lifted_point, sheet=0):
        m = len(self.base.curves)
        sl = slice(sheet * m, (sheet + 1) * m)
        return FNPoint(self.base, lifted_point.lengths[sl], lifted_point.twists[sl])

    def coordinate_vector(self, lifted_point):
        """Concatenated per-sheet (l_1..l_m, theta_1..theta_m) blocks."""
        out = []
        for j in range(self.sheet_count):
            q = self.read_copy(lifted_point, j)
            out.extend(q.lengths + q.twists)
        return out


def lift_decomposition(base, g, cut=2):
    """Glue ``g - 1`` copies of ``base`` cut open along curve ``cut``."""
    if base.genus != 2 or base.punctures != 0:
        raise DomainError("covering lift needs a closed genus-2 base")
    if g < 3:
        raise DomainError("cover genus must be at least 3")
    cut = base.curve_index(cut)
    if base.separates([cut]):
        raise DomainError("the cut curve must be non-separating")
    n, P = g - 1, base.pants_count
    curves = []
    for j in range(n):
        for ci, c in enumerate(base.curves):
            (p0, s0), (p1, s1) = c.ends
            j1 = (j + 1) % n if ci == cut else j
            curves.append(Curve(f"{c.id}.{j}", ((j * P + p0, s0), (j1 * P + p1, s1))))
    dec = PantsDecomposition(g, 0, n * P, tuple(curves), (), f"{base.name}-cover{g}")
    return dec, CoveringDescriptor(base, g, n, cut, dec)


def lift_to_cover(p, g, cut=2):
    """Coordinates of the (g-1)-sheeted cyclic cover dual to the cut curve."""
    dec, desc = lift_decomposition(p.decomposition, g, cut)
    n = g - 1
    return FNPoint(dec, p.lengths * n, p.twists * n), desc
