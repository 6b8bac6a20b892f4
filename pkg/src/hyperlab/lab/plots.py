"""SVG figures for the lab scenarios (matplotlib, Agg backend)."""
import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402
import numpy as np  # noqa: E402
from matplotlib.collections import LineCollection, PolyCollection  # noqa: E402

from ..geometry import hyperbolic as hb  # noqa: E402

QUARTER = 0.25
# fixed ids and no date stamp: identical inputs give identical files
RC = {"svg.hashsalt": "hyperlab", "svg.fonttype": "none", "font.size": 9}


def _save(fig, path):
    fig.savefig(path, format="svg", metadata={"Date": None, "Creator": None})
    plt.close(fig)


def plot_branches(family, path, title="eigenvalue branches"):
    with plt.rc_context(RC):
        fig, ax = plt.subplots(figsize=(6, 4))
        for b in family.branches:
            style = "--" if b.broken else "-"
            ax.plot(b.ts, b.values, style, marker=".", lw=1, label=f"branch {b.branch_id}")
        ax.axhline(QUARTER, color="k", lw=0.8, ls=":", label="1/4")
        for c in family.crossings:
            ax.axvspan(c["t0"], c["t1"], color="0.85", lw=0)
        ax.set_xlabel("t")
        ax.set_ylabel("lambda")
        ax.set_title(title)
        ax.legend(fontsize=7, ncol=2)
        _save(fig, path)


def plot_pinch(ells, lam1, lam2, path, title="separating pinch"):
    with plt.rc_context(RC):
        fig, ax = plt.subplots(figsize=(6, 4))
        ax.plot(ells, lam1, "o-", label="lambda_1")
        if lam2 is not None:
            ax.plot(ells, lam2, "s-", label="lambda_2")
        ax.axhline(QUARTER, color="k", lw=0.8, ls=":", label="1/4")
        ax.set_xscale("log")
        ax.set_xlabel("pinched length l")
        ax.set_ylabel("lambda")
        ax.set_title(title)
        ax.legend(fontsize=7)
        _save(fig, path)


def plot_refinement(hs, lams, star, err, path, title="refinement study"):
    with plt.rc_context(RC):
        fig, ax = plt.subplots(figsize=(6, 4))
        h2 = np.asarray(hs) ** 2
        ax.plot(h2, lams, "o-", label="lambda_1(h)")
        ax.errorbar([0.0], [star], yerr=[err], fmt="k*", capsize=3, label="extrapolated")
        ax.set_xlabel("h^2")
        ax.set_ylabel("lambda_1")
        ax.set_title(title)
        ax.legend(fontsize=7)
        _save(fig, path)


def plot_probe(values, margins, path, title="lambda_1 over the probe grid"):
    with plt.rc_context(RC):
        fig, ax = plt.subplots(figsize=(6, 4))
        x = np.arange(len(values))
        ax.errorbar(x, values, yerr=margins, fmt="o", ms=3, capsize=2)
        ax.axhline(QUARTER, color="k", lw=0.8, ls=":", label="1/4")
        ax.set_yscale("log")
        ax.set_xlabel("grid sample")
        ax.set_ylabel("lambda_1")
        ax.set_title(title)
        ax.legend(fontsize=7)
        _save(fig, path)


def _hexagon_polys(m, v, hi):
    """Disk-chart triangles and zero segments of ``v`` in hexagon ``hi``."""
    sel = np.nonzero((m.tri_hex == hi) & (m.tri_piece == -1))[0]
    U = hb.hyperboloid_to_disk(m.corner_pos[sel].reshape(-1, 3)).reshape(-1, 3)
    if m.hexes[hi]["half"] == 1:
        U = np.conj(U)
    P = np.stack([U.real, U.imag], axis=-1)
    val = v[m.triangles[sel]]
    segs = []
    for t in range(len(sel)):
        pts = []
        for a, b in ((0, 1), (1, 2), (2, 0)):
            va, vb = val[t, a], val[t, b]
            if (va > 0) != (vb > 0):
                s = va / (va - vb)
                pts.append((1 - s) * P[t, a] + s * P[t, b])
        if len(pts) == 2:
            segs.append(pts)
    return P, val.mean(axis=1), segs


def plot_nodal(m, v, path, title="nodal set"):
    """Nodal snapshot drawn in the hexagon charts of each pants (core parts)."""
    v = np.asarray(v, dtype=float)
    npants = len(m.hexes) // 2
    with plt.rc_context(RC):
        fig, axes = plt.subplots(npants, 2, figsize=(6, 3 * npants), squeeze=False)
        for hi in range(len(m.hexes)):
            ax = axes[hi // 2][hi % 2]
            P, mean, segs = _hexagon_polys(m, v, hi)
            colors = np.where(mean[:, None] > 0, [[0.95, 0.75, 0.7]], [[0.7, 0.8, 0.95]])
            ax.add_collection(PolyCollection(P, facecolors=colors, edgecolors="none"))
            if segs:
                ax.add_collection(LineCollection(segs, colors="k", linewidths=1.2))
            ax.set_xlim(P[..., 0].min() - 0.02, P[..., 0].max() + 0.02)
            ax.set_ylim(P[..., 1].min() - 0.02, P[..., 1].max() + 0.02)
            ax.set_aspect("equal")
            ax.set_xticks([])
            ax.set_yticks([])
            half = "H" if m.hexes[hi]["half"] == 0 else "H'"
            ax.set_title(f"pants {m.hexes[hi]['pants']} {half}", fontsize=8)
        fig.suptitle(title)
        _save(fig, path)
