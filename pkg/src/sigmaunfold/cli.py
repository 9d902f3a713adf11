"""Command-line front end.

Every command works on a bundle directory (``--out``): ``gen`` writes the
graph CSVs and ``manifest.json``; later commands read them, compute or reuse
``sigma.csv`` and write one JSON report per suite. ``verify`` runs suites and
``report`` merges whatever suite reports exist into ``report.json``.

Exit codes: 0 success, 1 usage or input error, 2 a check failed.
"""

from __future__ import annotations

import argparse
import math
import sys
from pathlib import Path
from typing import Any

import numpy as np

from . import __version__
from ._export import read_json, write_csv, write_json, write_svg
from .boundary import trace_rays, verify_boundary_map
from .graph import MetricGraph, build_graph, ingest_mesh
from .hyperbolicity import four_point_delta, hyperbolicity_report
from .metricspace import bounded_geometry_report, check_inequality_suite, same_ray_oracle, weight_field
from .models import ProductCone, make_model, model_from_descriptor
from .sigma import (
    SigmaField,
    compute_sigma_field,
    field_statistics,
    interpolation_sweep,
    lipschitz_constant,
    refinement_tolerance,
    truncation_collar,
    verify_axioms,
)
from .uniformity import (
    PipelineError,
    antipodal_pairs,
    build_pipeline,
    estimate_uniformity_constant,
)
from .whitney import XI_FACTOR, build_cover, smooth_sigma, verify_smoothing

EXIT_OK, EXIT_USAGE, EXIT_VIOLATION = 0, 1, 2
DEFAULT_EPS = 0.15
INTERPOLATION_ALPHAS = (4.0, 2.0, 1.0, 0.5, 0.25, 0.125)
TRIVIAL = {"status": "trivial gauge", "pass": True}

SUITE_FILES = {
    "axiom": "axioms.json",
    "interpolation": "interpolation.json",
    "inequalities": "metric.json",
    "uniformity": "uniform.json",
    "hyperbolicity": "hyper.json",
    "whitney": "whitney.json",
    "boundary": "boundary.json",
    "refinement_evidence": "refinement.json",
}


class InputError(Exception):
    """Bad or missing input; maps to exit code 1."""


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


# --------------------------------------------------------------------- bundle


class Bundle:
    """Lazy access to the graph, manifest and sigma field of a run directory."""

    def __init__(self, out: Path, alpha: float = 1.0, recompute: bool = False):
        self.out = out
        self.alpha = alpha
        self.recompute = recompute
        if not (out / "graph.json").exists():
            raise InputError(f"missing input: no graph bundle in {out} (run 'gen' first)")
        self.manifest = read_json(out / "manifest.json") if (out / "manifest.json").exists() else {}
        self.graph = MetricGraph.load_csv(out)
        self._field: SigmaField | None = None
        self.notes: list[str] = []
        self.fine: tuple[MetricGraph, SigmaField] | None = None  # h/2 graph and field, once built

    @property
    def field(self) -> SigmaField:
        if self._field is None:
            self._field = self._load_or_compute()
        return self._field

    def _load_or_compute(self) -> SigmaField:
        path = self.out / "sigma.csv"
        if path.exists() and path.with_suffix(".json").exists() and not self.recompute:
            f = SigmaField.load_csv(path)
            if f.alpha == self.alpha and len(f.b) == self.graph.n:
                if f.graph_id != self.graph.graph_id:
                    self.notes.append("stored sigma field was computed on a different graph (provenance mismatch)")
                return f
        f = compute_sigma_field(self.graph, self.alpha)
        f.dump_csv(path)
        _delta_profile(self.out, self.graph, f)
        return f

    @property
    def eps(self) -> tuple[float, str]:
        ref = self.out / "refinement.json"
        if ref.exists():
            data = read_json(ref)
            if data.get("status") == "measured":
                return float(data["eps_h"]), "measured"
        return DEFAULT_EPS, "assumed"

    def suite(self, name: str) -> dict[str, Any] | None:
        p = self.out / SUITE_FILES[name]
        return read_json(p) if p.exists() else None


def _radial_key(graph: MetricGraph) -> tuple[np.ndarray, str]:
    if isinstance(graph.model, ProductCone):
        return graph.radius(), "r"
    if graph.has_sigma:
        return graph.dist_sigma, "dist_sigma"
    if graph.chart.shape[1]:
        return graph.chart[:, 0], "chart_u0"
    return np.arange(graph.n, dtype=float), "vertex"


def _delta_profile(out: Path, graph: MetricGraph, field: SigmaField) -> None:
    key, name = _radial_key(graph)
    order = np.lexsort((np.arange(graph.n), key))
    write_csv(out / "delta_profile.csv", ["vertex", name, "a", "b", "delta"],
              [(int(v), key[v], graph.a[v], field.b[v], field.delta[v]) for v in order])
    if not field.trivial:
        # one representative (median delta) per distinct key value keeps the plot small
        uk, inv = np.unique(np.round(key, 12), return_inverse=True)
        med = np.array([np.median(field.delta[inv.ravel() == i]) for i in range(len(uk))]) if len(uk) <= 4000 \
            else field.delta[order]
        xs = uk if len(uk) <= 4000 else key[order]
        write_svg(out / "delta_profile.svg", {"delta": (xs, med)}, name, "delta",
                  logx=name == "r", logy=True)


def _interior_base(graph: MetricGraph) -> int:
    inner = np.flatnonzero(~(graph.near_sigma | graph.outer))
    if isinstance(graph.model, ProductCone):
        r = graph.radius()
        target = 1.0 if r.min() < 0.5 and r.max() > 2.0 else math.sqrt(r.min() * r.max())
        ang = np.abs(graph.chart[inner, 1:]).sum(axis=1)
        return int(inner[np.lexsort((ang, np.abs(r[inner] - target)))[0]])
    c = graph.positions.mean(axis=0)
    d = np.linalg.norm(graph.positions[inner] - c, axis=1)
    return int(inner[np.argmin(d)])


# --------------------------------------------------------------------- suites


def suite_refinement(b: Bundle) -> dict[str, Any]:
    """h -> h/2 evidence: rebuild the model graph at half the step and compare."""
    m = b.manifest
    if not m.get("model") or m.get("h") is None:
        rep = {"status": "assumed", "eps_h": DEFAULT_EPS, "reason": "no analytic model to refine",
               "pass": True}
        write_json(b.out / SUITE_FILES["refinement_evidence"], rep)
        return rep
    model = model_from_descriptor(m["model"])
    h = float(m["h"])
    fine_graph = build_graph(model, h / 2, m.get("bounds"))
    if b.field.trivial:
        # b vanishes at both resolutions, so there is nothing to converge
        rep = {"status": "measured", "eps_h": 0.02, "h": h, "h_half": h / 2, "trivial": True, "pass": True}
    else:
        fine = compute_sigma_field(fine_graph, b.alpha)
        sc, sf = field_statistics(b.graph, b.field), field_statistics(fine_graph, fine)
        tol = refinement_tolerance(sc, sf)
        rep = {"status": "measured", "h": h, "h_half": h / 2, "n_vertices": [b.graph.n, fine_graph.n],
               "coarse": sc, "fine": sf, **tol, "pass": True}
        b.fine = (fine_graph, fine)
    write_json(b.out / SUITE_FILES["refinement_evidence"], rep)
    return rep


def suite_axioms(b: Bundle) -> dict[str, Any]:
    eps, status = b.eps
    rep = verify_axioms(b.field, b.graph, eps_h=eps).to_dict()
    rep["eps_h"], rep["tolerance_status"] = eps, status
    if b.notes:
        rep["notes"] = list(b.notes)
    write_json(b.out / SUITE_FILES["axiom"], rep)
    return rep


def suite_interpolation(b: Bundle) -> dict[str, Any]:
    g = b.graph
    if g.totally_geodesic:
        rep = dict(TRIVIAL)
    else:
        key, name = _radial_key(g)
        if isinstance(g.model, ProductCone) and key.min() < 0.5 and key.max() > 4.0:
            band = (1.0, 2.0)
        else:
            inner = ~(g.near_sigma | g.outer)
            band = tuple(float(x) for x in np.quantile(key[inner], [0.4, 0.6]))
        try:
            rows = interpolation_sweep(g, INTERPOLATION_ALPHAS, band)
        except ValueError as exc:
            rep = {"status": "skipped", "reason": str(exc), "pass": True}
        else:
            ok = all(r.get("monotone", True) for r in rows)
            if isinstance(g.model, ProductCone):
                a0, lo = g.model.a0, band[0]
                for r in rows:
                    r["predicted_sup_b_minus_a"] = r["alpha"] / lo
                    r["predicted_sup_b_over_alpha_minus_inv_dist"] = a0 / (r["alpha"] * lo)
                    e1 = abs(r["sup_b_minus_a"] / r["predicted_sup_b_minus_a"] - 1)
                    e2 = abs(r["sup_b_over_alpha_minus_inv_dist"] / r["predicted_sup_b_over_alpha_minus_inv_dist"] - 1)
                    r["rel_err"] = max(e1, e2)
            rep = {"band": list(band), "band_key": name, "rows": rows, "pass": bool(ok)}
            if isinstance(g.model, ProductCone):
                # resolution dependent (tubes of radius alpha / b must span several edges): reported only
                rep["closed_form_within_10pct"] = all(r["rel_err"] <= 0.10 for r in rows)
    write_json(b.out / SUITE_FILES["interpolation"], rep)
    return rep


def suite_uniform(b: Bundle, n_samples: int = 200, seed: int = 0, n_pipelines: int = 50) -> dict[str, Any]:
    g, f = b.graph, b.field
    if f.trivial:
        rep = {**TRIVIAL, "note": "totally geodesic: uniformity trivial (delta is infinite everywhere)"}
        write_json(b.out / SUITE_FILES["uniformity"], rep)
        return rep
    eps, _ = b.eps
    est = estimate_uniformity_constant(g, f, n_samples, seed)
    again = estimate_uniformity_constant(g, f, n_samples, seed + 1)
    a_hat = est["a_hat"]
    rep: dict[str, Any] = {
        "a_hat": a_hat, "quantiles": est["quantiles"], "n_certified": est["n_certified"],
        "all_finite": est["all_finite"], "max_quasigeodesic_ratio": est["max_quasigeodesic_ratio"],
        "max_cone_ratio": est["max_cone_ratio"], "seed": seed,
        "reseed": {"seed": seed + 1, "a_hat": again["a_hat"],
                   "rel_change": abs(again["a_hat"] / a_hat - 1.0)},
    }
    ok = est["all_finite"] and est["n_certified"] == n_samples
    fine = b.fine
    if fine is not None:
        ref = estimate_uniformity_constant(fine[0], fine[1], n_samples, seed)
        rep["refined"] = {"a_hat": ref["a_hat"], "rel_change": abs(ref["a_hat"] / a_hat - 1.0)}
    if isinstance(g.model, ProductCone) and n_pipelines > 0:
        pipes = []
        for p, q in antipodal_pairs(g, n_pipelines):
            try:
                pl = build_pipeline(g, f, int(p), int(q))
            except PipelineError as exc:
                pipes.append({"endpoints": [int(p), int(q)], "error": str(exc), "level": exc.level})
                continue
            c = pl.certificate.c_hat
            pipes.append({"endpoints": [int(p), int(q)], "c_hat": c, "bound": pl.bound,
                          "pi_hat": pl.pi_hat, "within_10_a_hat": c <= 10 * a_hat,
                          "within_bound": c <= pl.bound * (1 + eps)})
        built = [x for x in pipes if "c_hat" in x]
        rep["pipelines"] = {
            "requested": len(pipes), "built": len(built),
            "max_c_hat": max((x["c_hat"] for x in built), default=None),
            "all_within_10_a_hat": all(x["within_10_a_hat"] for x in built),
            "all_within_bound": all(x["within_bound"] for x in built),
            "pairs": pipes,
        }
        ok = ok and len(built) == len(pipes) and rep["pipelines"]["all_within_10_a_hat"]
    # the worst certified geodesic as a plot-ready polyline
    c = np.array(est["c_hat"])
    from .metricspace import MetricEngine, sample_pairs

    pairs = sample_pairs(g, n_samples, seed, exclude=truncation_collar(g, f))
    k = int(np.nanargmax(c))
    path = MetricEngine(g, weight_field(g, "sigma", f)).path(int(pairs[k, 0]), int(pairs[k, 1]))
    (b.out / "geodesic_worst.csv").write_text(path.to_csv(g.positions))
    rep["pass"] = bool(ok)
    write_json(b.out / SUITE_FILES["uniformity"], rep)
    return rep


def suite_metric(b: Bundle, n_pairs: int = 200, seed: int = 0) -> dict[str, Any]:
    g, f = b.graph, b.field
    if f.trivial:
        rep = dict(TRIVIAL)
        write_json(b.out / SUITE_FILES["inequalities"], rep)
        return rep
    eps, status = b.eps
    uni = b.suite("uniformity")
    a_hat = uni.get("a_hat") if uni else None
    rep = check_inequality_suite(g, f, n_pairs=n_pairs, seed=seed, eps_h=eps, a_hat=a_hat)
    rep["tolerance_status"] = status
    rep["bounded_geometry"] = bounded_geometry_report(g, weight_field(g, "sigma", f), seed=seed)
    rep["bounded_geometry"]["weight"] = "sigma"
    if isinstance(g.model, ProductCone):
        # closed-form comparison, reported only: its accuracy depends on the resolution
        rep["same_ray"] = same_ray_oracle(g, f, seed=seed)
    write_json(b.out / SUITE_FILES["inequalities"], rep)
    return rep


def suite_hyper(b: Bundle, n_triangles: int = 20, n_quadruples: int = 2000, seed: int = 0,
                ranges: tuple[float, ...] = ()) -> dict[str, Any]:
    g, f = b.graph, b.field
    if f.trivial:
        rep = dict(TRIVIAL)
        write_json(b.out / SUITE_FILES["hyperbolicity"], rep)
        return rep
    uni = b.suite("uniformity")
    a_hat = uni.get("a_hat") if uni else None
    w = weight_field(g, "sigma", f)
    rep = hyperbolicity_report(g, w, n_triangles, n_quadruples, seed, base=_interior_base(g), a_hat=a_hat)
    rep.setdefault("pass", True)
    if ranges and isinstance(g.model, ProductCone) and b.manifest.get("h"):
        rows = []
        for R in ranges:
            desc = dict(b.manifest["model"])
            desc["params"] = dict(desc["params"], r_max=float(R))
            gr = build_graph(model_from_descriptor(desc), float(b.manifest["h"]))
            fr = compute_sigma_field(gr, b.alpha)
            four = four_point_delta(gr, weight_field(gr, "sigma", fr), n_quadruples, seed)
            rows.append((float(R), gr.n, four["delta_4pt"]))
        write_csv(b.out / "hyper_ranges.csv", ["R", "n_vertices", "delta_4pt"], rows)
        write_svg(b.out / "hyper_ranges.svg", {"delta_4pt": ([r[0] for r in rows], [r[2] for r in rows])},
                  "R", "delta_4pt", logx=True)
        rep["ranges"] = [{"R": r[0], "n_vertices": r[1], "delta_4pt": r[2]} for r in rows]
    write_json(b.out / SUITE_FILES["hyperbolicity"], rep)
    return rep


def suite_cover(b: Bundle, xi: float | None = None) -> dict[str, Any]:
    g, f = b.graph, b.field
    if f.trivial:
        sm = smooth_sigma(f, None, g)
        rep = {**TRIVIAL, "smoothing": verify_smoothing(f, sm, g)}
        write_json(b.out / SUITE_FILES["whitney"], rep)
        return rep
    L = lipschitz_constant(g, f.delta)
    if xi is None:
        # constant delta admits any xi: take radii of a few edge lengths
        xi = XI_FACTOR / L if L > 0 else 4.0 * g.h / float(np.median(f.delta))
    cover = build_cover(g, f, xi, L_hat=L)
    sm = smooth_sigma(f, cover, g)
    ver = verify_smoothing(f, sm, g)
    (b.out / "cover.csv").write_text(cover.to_csv())
    sm.dump_csv(b.out / "smoothed.csv")
    key, _ = _radial_key(g)
    qs = np.quantile(key, np.linspace(0, 1, 6))
    bands = []
    for lo, hi in zip(qs[:-1], qs[1:]):
        sel = (key >= lo) & (key <= hi)
        bands.append({"range": [float(lo), float(hi)], "max_covering_2": int(cover.histograms[2.0][sel].max()),
                      "max_covering_1": int(cover.histograms[1.0][sel].max())})
    m2 = [x["max_covering_2"] for x in bands]
    c = cover.multiplicity
    rep = {
        **cover.summary(), "L_hat": L, "c1": ver["c1"], "c2": ver["c2"], "c3": ver["c3"],
        "bands": bands, "band_uniform": max(m2) - min(m2) <= 1 if m2 else True,
        "sandwich_upper_ok": ver["c2"] <= c * 1.2,
        "pass": bool(cover.invariants["pass"] and ver["pass"] and ver["c2"] <= c * 1.2),
    }
    write_json(b.out / SUITE_FILES["whitney"], rep)
    return rep


def suite_boundary(b: Bundle, base: int | None = None, threshold: float | None = None) -> dict[str, Any]:
    g, f = b.graph, b.field
    if f.trivial:
        rep = {**TRIVIAL, "classes": 0, "note": "totally geodesic: the sigma-metric vanishes"}
        write_json(b.out / SUITE_FILES["boundary"], rep)
        return rep
    uni, hyp = b.suite("uniformity"), b.suite("hyperbolicity")
    a_hat = float(uni["a_hat"]) if uni and "a_hat" in uni else 1.0
    thin = float(hyp["delta_thin"]) if hyp and "delta_thin" in hyp else 0.0
    eps, _ = b.eps
    base = _interior_base(g) if base is None else base
    bundle = trace_rays(g, f, base, a_hat=a_hat, delta_thin=thin, threshold=threshold)
    rep = verify_boundary_map(bundle, g, f, eps_h=eps)
    rep["rays"] = bundle.summary()["rays"]
    rep["base"] = bundle.base
    rep["a_hat"], rep["delta_thin"] = a_hat, thin
    write_json(b.out / SUITE_FILES["boundary"], rep)
    return rep


# ------------------------------------------------------------------- report


def emit_report(out: Path, run_config: dict[str, Any] | None = None) -> dict[str, Any]:
    """Merge the suite reports present in ``out`` into ``report.json``."""
    present = {k: read_json(out / f) for k, f in SUITE_FILES.items() if (out / f).exists()}
    if not any(k != "refinement_evidence" for k in present):
        raise InputError(f"missing input: no suite reports in {out}")
    manifest = read_json(out / "manifest.json") if (out / "manifest.json").exists() else {}
    cfg = {"manifest": manifest}
    if run_config is not None:
        cfg["verify"] = run_config
    elif (out / "run.json").exists():
        cfg["verify"] = read_json(out / "run.json")
    ax = present.get("axiom")
    ref = present.get("refinement_evidence")
    uni = present.get("uniformity")
    hyp = present.get("hyperbolicity")
    wh = present.get("whitney")
    report = {
        "run_config": cfg,
        "axiom": {k: ax[k] for k in ("S1", "S2", "S3", "S4", "harnack") if k in ax} if ax else None,
        "lipschitz": {"L_hat": ax["S3"]["L_hat"], "bound": ax["S3"]["bound"]} if ax else None,
        "interpolation": present.get("interpolation"),
        "inequalities": present.get("inequalities"),
        "uniformity": uni if uni is None or uni.get("status") else {
            k: uni[k] for k in ("a_hat", "quantiles", "reseed", "refined", "pipelines", "pass") if k in uni},
        "hyperbolicity": hyp if hyp is None or hyp.get("status") else {
            k: hyp.get(k) for k in ("delta_thin", "delta_4pt", "beta", "paper_bound", "bound_margin",
                                    "ranges", "pass") if k in hyp},
        "whitney": wh if wh is None or wh.get("status") else {
            k: wh.get(k) for k in ("c1", "c2", "c3", "multiplicity", "xi", "invariants", "bands",
                                   "band_uniform", "pass")},
        "boundary": present.get("boundary"),
        "tolerances": {"eps_h": ref["eps_h"], "status": ref["status"]} if ref else
                      {"eps_h": DEFAULT_EPS, "status": "assumed"},
        "refinement_evidence": ref,
    }
    failed = [k for k, v in present.items() if isinstance(v, dict) and v.get("pass") is False]
    report["failed_sections"] = sorted(failed)
    report["pass"] = not failed
    write_json(out / "report.json", report)
    return report


# ----------------------------------------------------------------- commands


def _resolution(model, res: int | None, h: float | None) -> float:
    if h is not None:
        return h
    n = res or 48
    if n < 4:
        raise InputError("--res must be at least 4")
    if isinstance(model, ProductCone):
        return 2 * math.pi * model.rho[0] / n
    if model.kind == "catenoid":
        return 2 * math.pi * model.params["c"] / n
    if model.kind == "sphere":
        return 2 * math.pi * model.params["radius"] / n
    x0, x1, y0, y1 = model.params["extent"]
    return min(x1 - x0, y1 - y0) / (n - 1)


def cmd_gen(args) -> int:
    out = Path(args.out)
    if args.mesh:
        mesh = Path(args.mesh)
        if not mesh.exists():
            raise InputError(f"missing input: mesh file {mesh} not found")
        graph = ingest_mesh(mesh, args.sidecar)
        manifest = {"mesh": str(args.mesh), "sidecar": args.sidecar, "model": None, "h": None, "bounds": None}
    else:
        params: dict[str, Any] = {}
        kind = args.model
        if kind in ("simons", "clifford", "clifford_cone", "cone"):
            kind = "clifford_cone" if kind == "clifford" else kind
            params.update(r_min=args.rmin, r_max=args.rmax, link_dims=args.link_dims)
            if kind == "cone":
                params.update(p=args.p, q=args.q)
        elif kind == "catenoid":
            params.update(c=args.c, t_max=args.tmax)
        elif kind == "hyperplane":
            params.update(extent=args.extent)
        elif kind == "sphere":
            params.update(radius=args.radius)
        model = make_model(kind, params)
        h = _resolution(model, args.res, args.h)
        graph = build_graph(model, h)
        manifest = {"mesh": None, "model": model.descriptor(), "h": h, "bounds": None, "res": args.res}
    graph.dump_csv(out)
    manifest.update(command="gen", version=__version__, n_vertices=graph.n, n_edges=graph.m,
                    graph_id=graph.graph_id, max_edge=graph.h)
    write_json(out / "manifest.json", manifest)
    for stale in ("sigma.csv", "sigma.json", *SUITE_FILES.values(), "report.json"):
        (out / stale).unlink(missing_ok=True)
    print(f"wrote graph with {graph.n} vertices and {graph.m} edges to {out}")
    return EXIT_OK


def _bundle(args) -> Bundle:
    return Bundle(Path(args.out), alpha=args.alpha, recompute=getattr(args, "recompute", False))


def cmd_sigma(args) -> int:
    b = _bundle(args)
    g = b.graph
    f = compute_sigma_field(g, args.alpha, ratio=args.ratio, refine=not args.no_refine)
    f.dump_csv(b.out / "sigma.csv")
    _delta_profile(b.out, g, f)
    L = lipschitz_constant(g, f.delta)
    print(f"sigma field: alpha={f.alpha:g}, L_hat={L:.6g}, trivial={f.trivial}")
    return EXIT_OK


def _exit(rep: dict[str, Any]) -> int:
    return EXIT_OK if rep.get("pass", True) else EXIT_VIOLATION


def cmd_metric(args) -> int:
    return _exit(suite_metric(_bundle(args), args.pairs, args.seed))


def cmd_uniform(args) -> int:
    return _exit(suite_uniform(_bundle(args), args.samples, args.seed, args.pipelines))


def cmd_hyper(args) -> int:
    ranges = tuple(float(x) for x in args.ranges.split(",")) if args.ranges else ()
    return _exit(suite_hyper(_bundle(args), args.triangles, args.quadruples, args.seed, ranges))


def cmd_cover(args) -> int:
    return _exit(suite_cover(_bundle(args), args.xi))


def cmd_boundary(args) -> int:
    return _exit(suite_boundary(_bundle(args), args.base, args.threshold))


def cmd_verify(args) -> int:
    b = _bundle(args)
    config = {"command": "verify", "alpha": args.alpha, "all": args.all, "strict": args.strict,
              "seed": args.seed, "samples": args.samples, "pairs": args.pairs,
              "refinement": not args.no_refinement, "version": __version__}
    write_json(b.out / "run.json", config)
    results = {}
    if args.all:
        if args.no_refinement:
            (b.out / SUITE_FILES["refinement_evidence"]).unlink(missing_ok=True)
        else:
            results["refinement_evidence"] = suite_refinement(b)
    results["axiom"] = suite_axioms(b)
    if args.all:
        results["interpolation"] = suite_interpolation(b)
        results["uniformity"] = suite_uniform(b, args.samples, args.seed, args.pipelines)
        results["inequalities"] = suite_metric(b, args.pairs, args.seed)
        results["hyperbolicity"] = suite_hyper(b, seed=args.seed)
        results["whitney"] = suite_cover(b)
        results["boundary"] = suite_boundary(b)
    emit_report(b.out, config)
    failed = [k for k, v in results.items() if not v.get("pass", True)]
    _, status = b.eps
    for k in failed:
        print(f"violation: {k}", file=sys.stderr)
        for v in results[k].get("violations", []) if isinstance(results[k].get("violations"), list) else []:
            print(f"  {v}", file=sys.stderr)
    if args.strict and status != "measured":
        print("strict: tolerances are assumed (no refinement evidence)", file=sys.stderr)
        return EXIT_VIOLATION
    print(f"verify: {'pass' if not failed else 'FAIL'} ({len(results)} suites, tolerance {status})")
    return EXIT_OK if not failed else EXIT_VIOLATION


def cmd_report(args) -> int:
    rep = emit_report(Path(args.out))
    print(f"report: {'pass' if rep['pass'] else 'FAIL'}; sections failed: {rep['failed_sections']}")
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    p = _Parser(prog="sigmaunfold", description=__doc__.splitlines()[0])
    p.add_argument("--version", action="version", version=__version__)
    sub = p.add_subparsers(dest="command", parser_class=_Parser)

    def common(sp, alpha=True):
        sp.add_argument("--out", required=True, help="bundle directory")
        if alpha:
            sp.add_argument("--alpha", type=float, default=1.0)
            sp.add_argument("--recompute", action="store_true", help="ignore a stored sigma.csv")

    g = sub.add_parser("gen", help="build a graph bundle from a model or an OFF mesh")
    src = g.add_mutually_exclusive_group(required=True)
    src.add_argument("--model", choices=["simons", "clifford", "clifford_cone", "cone", "catenoid",
                                         "hyperplane", "sphere"])
    src.add_argument("--mesh", help="OFF triangle mesh")
    g.add_argument("--sidecar", help="singular vertex indices (default <mesh>.sigma)")
    g.add_argument("--rmin", type=float, default=0.1)
    g.add_argument("--rmax", type=float, default=10.0)
    g.add_argument("--p", type=int, default=3)
    g.add_argument("--q", type=int, default=3)
    g.add_argument("--link-dims", type=int, default=1, choices=[1, 2])
    g.add_argument("--c", type=float, default=1.0, help="catenoid neck radius")
    g.add_argument("--tmax", type=float, default=5.0, help="catenoid truncation")
    g.add_argument("--extent", type=float, nargs=4, default=[-1.0, 1.0, -1.0, 1.0])
    g.add_argument("--radius", type=float, default=1.0)
    g.add_argument("--res", type=int, help="vertices around the link (cones, catenoid, sphere) or per side")
    g.add_argument("--h", type=float, help="grid step, overrides --res")
    common(g, alpha=False)
    g.set_defaults(func=cmd_gen)

    s = sub.add_parser("sigma", help="compute the sigma field")
    common(s)
    s.add_argument("--ratio", type=float, default=2.0 ** 0.125, help="ladder ratio")
    s.add_argument("--no-refine", action="store_true")
    s.set_defaults(func=cmd_sigma)

    m = sub.add_parser("metric", help="inequality suite between d, k and d_b")
    common(m)
    m.add_argument("--pairs", type=int, default=200)
    m.add_argument("--seed", type=int, default=0)
    m.set_defaults(func=cmd_metric)

    u = sub.add_parser("uniform", help="sigma-uniformity estimate and pipelines")
    common(u)
    u.add_argument("--samples", type=int, default=200)
    u.add_argument("--seed", type=int, default=0)
    u.add_argument("--pipelines", type=int, default=50)
    u.set_defaults(func=cmd_uniform)

    hy = sub.add_parser("hyper", help="hyperbolicity estimates")
    common(hy)
    hy.add_argument("--triangles", type=int, default=20)
    hy.add_argument("--quadruples", type=int, default=2000)
    hy.add_argument("--seed", type=int, default=0)
    hy.add_argument("--ranges", help="comma-separated outer radii for a cone range sweep, e.g. 4,8,16")
    hy.set_defaults(func=cmd_hyper)

    c = sub.add_parser("cover", help="sigma-adapted cover and Whitney smoothing")
    common(c)
    c.add_argument("--xi", type=float, help="cover scale (default 1e-3 / L_hat)")
    c.set_defaults(func=cmd_cover)

    bd = sub.add_parser("boundary", help="ray bundle and boundary classes")
    common(bd)
    bd.add_argument("--base", type=int)
    bd.add_argument("--threshold", type=float, help="override 8 a_hat^2 + 2 delta_thin")
    bd.set_defaults(func=cmd_boundary)

    v = sub.add_parser("verify", help="run the axiom checks, or every suite with --all")
    common(v)
    v.add_argument("--all", action="store_true")
    v.add_argument("--strict", action="store_true", help="require measured tolerances")
    v.add_argument("--no-refinement", action="store_true", help="skip the h -> h/2 rebuild")
    v.add_argument("--seed", type=int, default=0)
    v.add_argument("--samples", type=int, default=200)
    v.add_argument("--pairs", type=int, default=200)
    v.add_argument("--pipelines", type=int, default=50)
    v.set_defaults(func=cmd_verify)

    r = sub.add_parser("report", help="merge suite reports into report.json")
    common(r, alpha=False)
    r.set_defaults(func=cmd_report)
    return p


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    if args.command is None:
        parser.print_usage(sys.stderr)
        print("sigmaunfold: error: a subcommand is required", file=sys.stderr)
        return EXIT_USAGE
    try:
        return args.func(args)
    except (InputError, ValueError, OSError) as exc:
        print(f"sigmaunfold: error: {exc}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
