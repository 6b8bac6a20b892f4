"""The frozen scenario list.  Each scenario writes its results through an
``Output`` and returns a short summary; samples run through ``pmap`` and
are assembled in input order."""
import json

import numpy as np

from .. import branches as br
from .. import cusp as cu
from .. import nodal as nd
from ..errors import ConvergenceError, LabError
from ..geometry.fuchsian import systole
from ..geometry.paths import appendix_beta_path, linear_path, pinch_path
from ..geometry.teichmuller import fn_point
from ..meshing.surface import mesh_cusped, mesh_surface, refine
from ..spectral import (QUARTER, assemble, cluster_multiplicity, extrapolate,
                        solve_lowest, write_spectrum_csv)
from . import plots
from .config import resolve_point
from .parallel import pmap
from .probe import probe_b2

EVIDENCE = "numerical evidence at the stated mesh size and tolerances, not a proof"


def lam_err(lam, h, tol):
    """Error bar of a computed eigenvalue: solver plus discretisation margin."""
    return 10 * tol + br.DISC_REL * abs(float(lam)) * h ** 2


def _f(x):
    return f"{float(x):.12g}"


def mesh_stats(m, label=""):
    return {"label": label, "n_vertices": int(m.n_vertices),
            "n_triangles": int(len(m.triangles)), "h": float(m.h),
            "min_angle_deg": round(float(np.degrees(m.angles()).min()), 6)}


def _guard(job):
    """Run ``fn(*args)`` and turn library errors into an error record."""
    fn, args = job
    try:
        return fn(*args)
    except LabError as e:
        return {"error": f"{type(e).__name__}: {e}"}


def _run_all(fn, arglist, threads):
    return pmap(_guard, [(fn, a) for a in arglist], threads)


def _fail_if_errors(results, what):
    bad = [i for i, r in enumerate(results) if "error" in r]
    if bad:
        raise ConvergenceError(f"{len(bad)} {what} failed: "
                               + "; ".join(results[i]["error"] for i in bad[:3]))


def _nodal_summary(m, v, surface_type):
    ng = nd.extract_nodal(m, v)
    d = nd.nodal_domains(m, v, ng)
    label = nd.isotopy_class(ng, d, surface_type)
    ep = nd.euler_poincare_audit(d, surface_type)
    return ng, d, label, ep


# -- bolza -------------------------------------------------------------------


def bolza(cfg, out, rec, threads=1):
    P = cfg.params
    p = resolve_point(P["point"])
    h, k, tol, levels = P["h"], P["k"], P["tol"], P["levels"]
    rows, lams, hs = [], [], []
    m, s = None, None
    for lev in range(levels):
        with rec.stage(f"mesh level {lev}"):
            m = mesh_surface(p, h) if m is None else refine(m)
        rec.meshes.append(mesh_stats(m, f"level {lev}"))
        with rec.stage(f"solve level {lev}"):
            s = solve_lowest(assemble(m), k, tol=tol, seed=cfg.seed)
        rec.add_residuals(s.residuals)
        write_spectrum_csv(s, out.path(f"spectrum_level{lev}.csv"))
        lam = float(s.eigenvalues[1])
        lams.append(lam)
        hs.append(float(m.h))
        rows.append({"level": lev, "h": m.h, "lambda1": lam,
                     "lambda1_err": lam_err(lam, m.h, tol),
                     "residual": float(s.residuals[1])})
    write_spectrum_csv(s, out.path("spectrum.csv"))
    e = extrapolate(lams)
    mult = cluster_multiplicity(s, P["gap_factor"], p.surface_type)
    out.json("extrapolation.json", {"lambda_star": e.lambda_star, "order": e.order,
                                    "error_bar": e.error_bar, "flagged": e.flagged})
    summary = {
        "levels": rows,
        "extrapolation": {"lambda_star": e.lambda_star, "error_bar": e.error_bar,
                          "order": e.order, "flagged": e.flagged},
        "lambda1_cluster": {"indices": mult.cluster, "values": mult.values,
                            "width": mult.width, "multiplicity": mult.multiplicity,
                            "verdict": mult.verdict},
        "evidence": EVIDENCE,
    }
    out.json("bolza.json", summary)
    plots.plot_refinement(hs, lams, e.lambda_star, e.error_bar, out.path("bolza.svg"),
                          "Bolza surface: lambda_1 against h^2")
    return {"lambda_star": e.lambda_star, "error_bar": e.error_bar}


# -- pinch sweep -------------------------------------------------------------


def _pinch_sample(p, idx, ell, h, k, tol, seed):
    L = list(p.lengths)
    for i in idx:
        L[i] = ell
    q = p.with_coordinates(lengths=L)
    m = mesh_surface(q, h)
    s = solve_lowest(assemble(m), k, tol=tol, seed=seed)
    v = s.eigenvectors[:, 1]
    ng, d, label, ep = _nodal_summary(m, v, q.surface_type)
    return {"ell": ell, "eigenvalues": s.eigenvalues.tolist(), "residuals": s.residuals.tolist(),
            "label": label, "domains": d.count, "chi_plus": d.chi_plus, "chi_minus": d.chi_minus,
            "chi_nodal": int(d.nodal_chi), "ep_residual": ep["residual"],
            "components": ng.n_components, "report": nd.nodal_report(ng, d, label),
            "mesh": mesh_stats(m, f"ell={ell:g}"), "m": m, "v": v}


def pinch_sweep(cfg, out, rec, threads=1):
    P = cfg.params
    p = resolve_point(P["point"])
    idx = [p.decomposition.curve_index(c) for c in P["curves"]]
    separating = p.decomposition.separates(idx)
    h, k, tol = P["h"], P["k"], P["tol"]
    with rec.stage("samples"):
        res = _run_all(_pinch_sample, [(p, idx, float(e), h, k, tol, cfg.seed) for e in P["ells"]],
                       threads)
    lines = ["ell,lambda1,lambda1_err,lambda2,lambda2_err,label,domains,chi_plus,chi_minus,"
             "ep_residual,residual"]
    rows = []
    for i, r in enumerate(res):
        if "error" in r:
            rows.append({"ell": P["ells"][i], "error": r["error"]})
            continue
        rec.meshes.append(r["mesh"])
        rec.add_residuals(r["residuals"])
        l1, l2 = r["eigenvalues"][1], r["eigenvalues"][2] if k > 2 else float("nan")
        lines.append(",".join([_f(r["ell"]), _f(l1), _f(lam_err(l1, h, tol)), _f(l2),
                               _f(lam_err(l2, h, tol)), r["label"], str(r["domains"]),
                               str(r["chi_plus"]), str(r["chi_minus"]), str(r["ep_residual"]),
                               f"{r['residuals'][1]:.6e}"]))
        out.text(f"nodal_{i}.json", r["report"] + "\n")
        plots.plot_nodal(r["m"], r["v"], out.path(f"nodal_{i}.svg"),
                         f"lambda_1 eigenfunction, l = {r['ell']:g} ({r['label']})")
        rows.append({k_: r[k_] for k_ in ("ell", "label", "domains", "chi_plus", "chi_minus",
                                          "chi_nodal", "ep_residual", "components")}
                    | {"lambda1": l1, "lambda1_err": lam_err(l1, h, tol),
                       "lambda2": l2, "lambda2_err": lam_err(l2, h, tol)})
    out.text("pinch.csv", "\n".join(lines) + "\n")
    ok = [r for r in rows if "error" not in r]
    lam1 = [r["lambda1"] for r in ok]
    order = np.argsort([r["ell"] for r in ok])[::-1]
    dec = [lam1[j] for j in order]
    summary = {"curves": P["curves"], "separating": bool(separating), "h": h,
               "samples": rows,
               "lambda1_strictly_decreasing": bool(all(a > b for a, b in zip(dec, dec[1:]))),
               "evidence": EVIDENCE}
    out.json("pinch.json", summary)
    if ok:
        plots.plot_pinch([r["ell"] for r in ok], lam1, [r["lambda2"] for r in ok],
                         out.path("pinch.svg"),
                         f"pinch of {', '.join(P['curves'])}"
                         f" ({'separating' if separating else 'non-separating'})")
    _fail_if_errors(res, "pinch samples")
    return {"samples": len(ok)}


# -- nodal atlas -------------------------------------------------------------


def _atlas_sample(name, p, h, Y, k, tol, seed, indices):
    m = mesh_cusped(p, Y, h) if p.punctures else mesh_surface(p, h)
    s = solve_lowest(assemble(m), k, tol=tol, seed=seed)
    entries, decs, figs = [], {}, {}
    for i in indices:
        v = s.eigenvectors[:, i]
        ng, d, label, ep = _nodal_summary(m, v, p.surface_type)
        decs[i] = d
        figs[i] = v
        lam = float(s.eigenvalues[i])
        entries.append({"index": i, "lambda": lam, "lambda_err": lam_err(lam, h, tol),
                        "spectral": bool(not p.punctures or lam < QUARTER),
                        "label": label, "components": ng.n_components, "domains": d.count,
                        "domain_chi": list(d.chi), "chi_nodal": int(d.nodal_chi),
                        "punctures_off_nodal": int(d.k), "euler_poincare": ep,
                        "curve_hints": nd.curve_hints(ng, m),
                        "crossing_vectors": ng.crossing_vectors.tolist(),
                        "cycle_names": ng.cycle_names})
    audit = nd.courant_otal_audit(s, decs)
    return {"name": name, "surface_type": list(p.surface_type), "point": json.loads(p.to_json()),
            "eigenvalues": s.eigenvalues.tolist(), "residuals": s.residuals.tolist(),
            "entries": entries, "courant_otal": audit, "mesh": mesh_stats(m, name),
            "m": m, "figs": figs}


def nodal_atlas(cfg, out, rec, threads=1):
    P = cfg.params
    jobs = [(it["name"], resolve_point(it["point"]), P["h"], P["Y"], P["k"], P["tol"],
             cfg.seed, P["indices"]) for it in P["surfaces"]]
    with rec.stage("samples"):
        res = _run_all(_atlas_sample, jobs, threads)
    atlas = []
    for job, r in zip(jobs, res):
        if "error" in r:
            atlas.append({"name": job[0], "error": r["error"]})
            continue
        rec.meshes.append(r["mesh"])
        rec.add_residuals(r["residuals"])
        for i, v in r["figs"].items():
            lab = next(e["label"] for e in r["entries"] if e["index"] == i)
            plots.plot_nodal(r["m"], v, out.path(f"nodal_{r['name']}_{i}.svg"),
                             f"{r['name']}: eigenfunction {i} ({lab})")
        atlas.append({k_: v for k_, v in r.items() if k_ not in ("m", "figs", "mesh")})
    out.json("atlas.json", {"surfaces": atlas, "h": P["h"], "evidence": EVIDENCE})
    _fail_if_errors(res, "atlas surfaces")
    return {"surfaces": len(atlas)}


# -- branch run --------------------------------------------------------------


def build_path(spec):
    if spec["kind"] == "linear":
        return linear_path(resolve_point(spec["from"]), resolve_point(spec["to"]))
    return pinch_path(resolve_point(spec["from"]), spec["curves"], float(spec["end_length"]))


def _family_summary(family):
    broken = [b.branch_id for b in family.branches if b.broken]
    t_star = br.exceed_quarter(family) if family.k >= 2 and len(family.ts) else None
    return {
        "ts": family.ts.tolist(), "k": family.k, "h": family.h, "tol": family.tol,
        "multiset_consistent": family.multiset_consistent(),
        "exceed_quarter_t": t_star, "quarter_margin": br.quarter_margin(family),
        "branches": [{"branch_id": b.branch_id, "start_index": b.start_index,
                      "continuity_certificate": b.continuity_certificate,
                      "broken": b.broken, "flags": sorted(set(b.flags)),
                      "starts_as_lambda1": br.starts_as(b, 1, family) if family.k >= 2 else False}
                     for b in family.branches],
        "broken_branches": broken, "crossings": len(family.crossings),
    }


def _write_family(out, family, prefix, title):
    br.write_branch_csv(family, out.path(f"{prefix}.csv"))
    br.write_crossings_json(family, out.path(f"{prefix}_crossings.json"
                                             if prefix != "branches" else "crossings.json"))
    if len(family.ts):
        plots.plot_branches(family, out.path(f"{prefix}.svg"), title)


def branch_run(cfg, out, rec, threads=1):
    P = cfg.params
    path = build_path(P["path"])
    try:
        with rec.stage("track"):
            if P["lift"] is None:
                fam = br.track(path, P["k"], P["steps"], P["h"], P["tol"],
                               max_depth=P["max_depth"], seed=cfg.seed, threads=threads)
            else:
                lifted = br.lifted_branch(path, P["lift"]["g"], P["k"], P["steps"], P["h"],
                                          P["tol"], seed=cfg.seed, threads=threads,
                                          cut=P["lift"]["cut"])
                fam = lifted.meta["base"]
    except ConvergenceError as e:
        if isinstance(e.best, br.BranchFamily):
            _write_family(out, e.best, "branches", "eigenvalue branches (partial)")
            out.json("branches.json", _family_summary(e.best) | {"partial": True})
        raise
    _write_family(out, fam, "branches", "eigenvalue branches")
    summary = _family_summary(fam) | {"evidence": EVIDENCE}
    if P["lift"] is not None:
        _write_family(out, lifted, "lifted_branches", "branches on the cover")
        summary["lift"] = {"g": P["lift"]["g"], "cut": P["lift"]["cut"],
                           "contains_base": lifted.meta["contains_base"],
                           "match_tolerance": br.match_tolerance(P["tol"], P["h"])}
    out.json("branches.json", summary)
    return {"exceed_quarter_t": summary["exceed_quarter_t"],
            "multiset_consistent": summary["multiset_consistent"]}


# -- covering audit ----------------------------------------------------------


def cover_samples(n, length_range, seed):
    """Random closed genus-2 points in the theta chart (deterministic in seed)."""
    rng = np.random.default_rng(seed)
    out = []
    for _ in range(n):
        L = rng.uniform(length_range[0], length_range[1], 3)
        T = rng.uniform(0.0, 1.0, 3) * L
        out.append(fn_point("theta", L.tolist(), T.tolist()))
    return out


def _cover_sample(p, g, k, h, tol, cutoff, seed, cut):
    r = br.covering_audit(p, g, k, h, tol, cutoff, seed, cut)
    r["point"] = json.loads(p.to_json())
    return r


def cover_audit(cfg, out, rec, threads=1):
    P = cfg.params
    pts = cover_samples(P["random_samples"], P["length_range"], cfg.seed)
    jobs = [(p, P["g"], P["k"], P["h"], P["tol"], P["cutoff"], cfg.seed, P["cut"]) for p in pts]
    if P["pinched"] is not None:
        jobs.append((resolve_point(P["pinched"]["point"]), P["g"], P["k"], P["h"], P["tol"],
                     P["cutoff"], cfg.seed, P["pinched"]["cut"]))
    with rec.stage("samples"):
        res = _run_all(_cover_sample, jobs, threads)
    samples = res[:len(pts)]
    pinched = res[len(pts)] if P["pinched"] is not None else None
    ok = [r for r in samples if "error" not in r]
    summary = {"g": P["g"], "h": P["h"], "tolerance": br.match_tolerance(P["tol"], P["h"]),
               "samples": samples, "pinched": pinched,
               "all_contained": bool(ok and all(r["containment"] for r in ok)
                                     and len(ok) == len(samples)),
               "pinched_lambda1_equal": None if not pinched or "error" in pinched
               else pinched["lambda1_equal"],
               "evidence": EVIDENCE}
    out.json("cover.json", summary)
    lines = ["sample,lambda,cover_lambda,diff,matched"]
    for i, r in enumerate(samples + ([pinched] if pinched else [])):
        if "error" in r:
            continue
        name = "pinched" if i == len(samples) else str(i)
        for mt in r["matches"]:
            lines.append(f"{name},{_f(mt['lambda'])},{_f(mt['cover'])},{mt['diff']:.3e},1")
        for lam in r["misses"]:
            lines.append(f"{name},{_f(lam)},,,0")
    out.text("cover.csv", "\n".join(lines) + "\n")
    _fail_if_errors(res, "covering samples")
    return {"all_contained": summary["all_contained"],
            "pinched_lambda1_equal": summary["pinched_lambda1_equal"]}


# -- appendix path -----------------------------------------------------------


def _systole_at(p, bound):
    try:
        val, w = systole(p, bound)
        complete = True
    except LabError as e:
        if not getattr(e, "partial", None):
            raise
        (val, w), complete = e.partial, False
    return {"systole": float(val), "word_length": len(w), "complete": complete}


def appendix_path(cfg, out, rec, threads=1):
    P = cfg.params
    p1, p2 = resolve_point(P["from"]), resolve_point(P["to"])
    path = appendix_beta_path(p1, p2, P["c1"], P["c2"], P["eps"])
    ts = np.linspace(0.0, 1.0, P["samples"])
    with rec.stage("systoles"):
        res = _run_all(_systole_at, [(path(t), P["word_bound"]) for t in ts], threads)
    lines = ["t,systole,word_length,complete"]
    vals = []
    for t, r in zip(ts, res):
        if "error" in r:
            continue
        vals.append(r["systole"])
        lines.append(f"{_f(t)},{_f(r['systole'])},{r['word_length']},{int(r['complete'])}")
    out.text("appendix.csv", "\n".join(lines) + "\n")
    summary = {"eps": P["eps"], "samples": len(ts), "c1": P["c1"], "c2": P["c2"],
               "max_systole_bound": max(vals) if vals else None,
               "below_eps_everywhere": bool(vals and len(vals) == len(ts)
                                            and max(vals) < P["eps"]),
               "bound_kind": "upper bound from word enumeration (pants curves included)",
               "evidence": EVIDENCE}
    out.json("appendix.json", summary)
    _fail_if_errors(res, "systole samples")
    return {"max_systole_bound": summary["max_systole_bound"]}


# -- cusp audit --------------------------------------------------------------


def _cusp_sample(name, p, h, Y, k, tol, seed, J, arc_tol):
    m = mesh_cusped(p, Y, h)
    s = solve_lowest(assemble(m), k, tol=tol, seed=seed)
    n = p.punctures
    small = [i for i in range(1, s.k) if s.eigenvalues[i] < QUARTER]
    coeffs, entries = {}, []
    for i in small:
        lam = float(s.eigenvalues[i])
        sv = cu.s_from_eigenvalue(lam)
        for c in range(n):
            co = cu.fit_cusp_coeffs(m, s.eigenvectors[:, i], c, sv, J)
            coeffs[(i, c)] = co
            ftol = cu.f01_tolerance(co, Y)
            pim = cu.pi_map(co, ftol)
            entries.append({"index": i, "lambda": lam, "lambda_err": lam_err(lam, h, tol),
                            "cusp": c, "f01_tolerance": ftol,
                            "f01_ok": bool(abs(co.f01) <= ftol),
                            "truncation_bias": co.meta["truncation_bias"],
                            "report": json.loads(co.to_json(pim.as_list(),
                                                 cu.arc_count_estimate(co, arc_tol)))})
    decs, nodal_rows = {}, []
    for i in small:
        v = s.eigenvectors[:, i]
        ng, d, label, ep = _nodal_summary(m, v, p.surface_type)
        decs[i] = d
        nodal_rows.append({"index": i, "label": label, "domains": d.count,
                           "punctures_off_nodal": int(d.k), "chi_nodal": int(d.nodal_chi),
                           "components": ng.n_components, "euler_poincare": ep})
    mult = cluster_multiplicity(s, 1.0, p.surface_type)
    audits = []
    if mult.small:
        for c in range(n):
            a = cu.multiplicity_audit([coeffs[(i, c)] for i in mult.cluster if (i, c) in coeffs])
            audits.append({"cusp": c} | a)
    return {"name": name, "surface_type": list(p.surface_type), "point": json.loads(p.to_json()),
            "eigenvalues": s.eigenvalues.tolist(), "residuals": s.residuals.tolist(),
            "coefficients": entries, "nodal": nodal_rows,
            "courant_otal": nd.courant_otal_audit(s, decs),
            "lambda1_cluster": {"indices": mult.cluster, "values": mult.values,
                                "width": mult.width, "cardinality": mult.multiplicity,
                                "bound": mult.bound, "verdict": mult.verdict},
            "pi_audit": audits, "mesh": mesh_stats(m, name), "s": s, "m": m}


def cusp_audit(cfg, out, rec, threads=1):
    P = cfg.params
    jobs = [(it["name"], resolve_point(it["point"]), P["h"], P["Y"], P["k"], P["tol"],
             cfg.seed, P["J"], P["arc_tol"]) for it in P["surfaces"]]
    with rec.stage("samples"):
        res = _run_all(_cusp_sample, jobs, threads)
    rows = []
    for job, r in zip(jobs, res):
        if "error" in r:
            rows.append({"name": job[0], "error": r["error"]})
            continue
        rec.meshes.append(r["mesh"])
        rec.add_residuals(r["residuals"])
        write_spectrum_csv(r["s"], out.path(f"spectrum_{r['name']}.csv"))
        if r["nodal"]:
            plots.plot_nodal(r["m"], r["s"].eigenvectors[:, 1], out.path(f"nodal_{r['name']}.svg"),
                             f"{r['name']}: lambda_1 eigenfunction")
        rows.append({k_: v for k_, v in r.items() if k_ not in ("s", "m", "mesh")})
    out.json("cusp.json", {"surfaces": rows, "h": P["h"], "Y": P["Y"], "J": P["J"],
                           "evidence": EVIDENCE})
    _fail_if_errors(res, "cusp surfaces")
    return {"surfaces": len(rows)}


# -- probe -------------------------------------------------------------------


def probe(cfg, out, rec, threads=1):
    P = cfg.params
    try:
        with rec.stage("grid"):
            rep = probe_b2(P["decomposition"], P["lengths"], P["twists"], P["h"], P["tol"],
                           P["k"], cfg.seed, P["budget"], P["systole_bound"], threads)
    except ConvergenceError as e:
        if e.best is not None:
            _write_probe(out, e.best)
        raise
    _write_probe(out, rep)
    return {"grid_components": rep.grid_components, "samples": len(rep.samples)}


def _write_probe(out, rep):
    out.json("probe.json", rep.to_dict())
    m = len(rep.axes) // 2
    head = ",".join(["id"] + [f"l{i}" for i in range(m)] + [f"t{i}" for i in range(m)]
                    + ["lambda1", "margin", "above", "systole"])
    lines = [head]
    for s in rep.samples:
        lam = "" if s["lambda1"] is None else _f(s["lambda1"])
        mar = "" if s["margin"] is None else _f(s["margin"])
        above = "" if s["above"] is None else str(int(s["above"]))
        lines.append(",".join([str(s["id"])] + [_f(x) for x in s["lengths"] + s["twists"]]
                              + [lam, mar, above, _f(s["systole"])]))
    out.text("probe.csv", "\n".join(lines) + "\n")
    ok = [s for s in rep.samples if s["lambda1"] is not None]
    if ok:
        plots.plot_probe([s["lambda1"] for s in ok], [s["margin"] for s in ok],
                         out.path("probe.svg"))


SCENARIOS = {
    "bolza": bolza,
    "pinch-sweep": pinch_sweep,
    "nodal-atlas": nodal_atlas,
    "branch-run": branch_run,
    "cover-audit": cover_audit,
    "appendix-path": appendix_path,
    "cusp-audit": cusp_audit,
    "probe-b2": probe,
}
