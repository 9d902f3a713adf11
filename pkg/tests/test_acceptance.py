"""Acceptance criteria, one test (or a few) per criterion.

The terminal summary prints one PASS/FAIL line per criterion together with
the recorded measurements.
"""

import itertools
import json
import shutil
import time

import numpy as np
import pytest

from sigmaunfold.boundary import INFINITY_TAG, trace_rays, verify_boundary_map
from sigmaunfold.cli import EXIT_OK, INTERPOLATION_ALPHAS, main
from sigmaunfold.graph import MetricGraph, build_graph, ingest_mesh
from sigmaunfold.hyperbolicity import delta_formula, estimate_thinness, four_point_delta
from sigmaunfold.meshes import cylinder, icosphere, two_tip_sheet, write_off, write_sidecar
from sigmaunfold.metricspace import same_ray_oracle, weight_field
from sigmaunfold.models import make_model
from sigmaunfold.sigma import (
    closed_form_field,
    compute_sigma_field,
    interpolation_sweep,
    lipschitz_constant,
    verify_axioms,
)
from sigmaunfold.uniformity import antipodal_pairs, build_pipeline, estimate_uniformity_constant
from sigmaunfold.whitney import build_cover, smooth_sigma, verify_smoothing

from conftest import interior_base, random_tree
from test_hyperbolicity import delta_formula_mp

SIMONS = {"r_min": 0.1, "r_max": 10.0}
H_FINE = 0.02  # about 51k vertices
H_COARSE = 0.04
CLI_MODELS = {
    "simons": [],
    "clifford_cone": [],
    "cone": ["--p", "2", "--q", "5"],
    "catenoid": [],
    "sphere": [],
}


@pytest.fixture(scope="module")
def simons():
    return make_model("simons", SIMONS)


@pytest.fixture(scope="module")
def fine(simons):
    g = build_graph(simons, H_FINE)
    compute_sigma_field(build_graph(simons, 0.2), 1.0)  # compile the kernels outside the timing
    t0 = time.perf_counter()
    f = compute_sigma_field(g, 1.0)
    return g, f, time.perf_counter() - t0


@pytest.fixture(scope="module")
def coarse(simons):
    g = build_graph(simons, H_COARSE)
    return g, compute_sigma_field(g, 1.0)


def band_error(g, f, lo=0.3, hi=5.0):
    r = g.radius()
    sel = (r >= lo) & (r <= hi)
    exact = (g.model.a0 + f.alpha) / r[sel]
    return float(np.max(np.abs(f.b[sel] / exact - 1)))


@pytest.fixture(scope="module")
def cli_runs(tmp_path_factory):
    """Full verify runs at the default resolution, one bundle per model plus the two-tip mesh."""
    root = tmp_path_factory.mktemp("acceptance")
    runs = {}
    for name, extra in CLI_MODELS.items():
        out = root / name
        assert main(["gen", "--model", name, *extra, "--out", str(out)]) == EXIT_OK
        runs[name] = (out, main(["verify", "--all", "--out", str(out)]))
    V, F, S = two_tip_sheet()
    write_off(root / "two_tip.off", V, F)
    write_sidecar(root / "two_tip.off.sigma", S)
    out = root / "two_tip"
    assert main(["gen", "--mesh", str(root / "two_tip.off"), "--out", str(out)]) == EXIT_OK
    runs["two_tip"] = (out, main(["verify", "--all", "--out", str(out)]))
    return {k: (out, code, json.loads((out / "report.json").read_text())) for k, (out, code) in runs.items()}


# --------------------------------------------------------------------------- 1


@pytest.mark.criterion(1)
def test_cone_closed_form(fine, coarse, record_property):
    g, f, seconds = fine
    err_fine = band_error(g, f)
    err_coarse = band_error(*coarse)
    record_property("n_vertices", g.n)
    record_property("max_rel_err", err_fine)
    record_property("max_rel_err_coarse", err_coarse)
    record_property("sweep_seconds", seconds)
    assert 45_000 <= g.n <= 60_000
    assert err_fine <= 0.05
    assert err_fine <= err_coarse
    assert seconds <= 60.0


# --------------------------------------------------------------------------- 2


@pytest.mark.criterion(2)
def test_interpolation_limits(fine, record_property):
    g = fine[0]
    lo, hi = 1.0, 2.0
    rows = interpolation_sweep(g, INTERPOLATION_ALPHAS, (lo, hi))
    a0 = g.model.a0
    worst = 0.0
    for row in rows:
        alpha = row["alpha"]
        e1 = abs(row["sup_b_minus_a"] / (alpha / lo) - 1)
        e2 = abs(row["sup_b_over_alpha_minus_inv_dist"] / (a0 / (alpha * lo)) - 1)
        worst = max(worst, e1, e2)
    record_property("alphas", [r["alpha"] for r in rows])
    record_property("max_rel_err", worst)
    assert len(rows) == 6
    assert worst <= 0.10
    assert all(r.get("monotone", True) for r in rows)


# --------------------------------------------------------------------------- 3


@pytest.mark.criterion(3)
def test_lipschitz_on_every_model(cli_runs, record_property):
    ratios = {}
    for name, (_, _, rep) in cli_runs.items():
        ratios[name] = rep["lipschitz"]["L_hat"] / rep["lipschitz"]["bound"]
    record_property("L_hat_times_alpha", ratios)
    assert max(ratios.values()) <= 1.15


@pytest.mark.criterion(3)
@pytest.mark.parametrize("alpha", [0.25, 4.0])
def test_lipschitz_other_alphas(coarse, alpha, record_property):
    g = coarse[0]
    L = lipschitz_constant(g, compute_sigma_field(g, alpha).delta)
    record_property("L_hat_times_alpha", L * alpha)
    assert L <= 1.15 / alpha


@pytest.mark.criterion(3)
def test_hyperplane_s1_exact(plane_small):
    f = compute_sigma_field(plane_small, 1.0)
    assert np.all(f.b == 0.0)
    assert verify_axioms(f, plane_small).sections["S1"]["pass"]


# --------------------------------------------------------------------------- 4


@pytest.mark.criterion(4)
@pytest.mark.parametrize("kind,params,h", [
    ("simons", SIMONS, 0.08),
    ("catenoid", {"c": 1.0, "t_max": 3.0}, 0.1),
])
def test_scaling_bitwise(kind, params, h, record_property):
    g = build_graph(make_model(kind, params), h)
    scaling = verify_axioms(compute_sigma_field(g, 1.0), g).sections["S4"]["scaling"]
    record_property("scaling", scaling)
    assert set(scaling) == {"2.0", str(1 / 3)}
    assert all(s["bitwise_equal"] for s in scaling.values())


# --------------------------------------------------------------------------- 5


@pytest.mark.criterion(5)
def test_same_ray_oracle(fine, record_property):
    g, f, _ = fine
    rep = same_ray_oracle(g, f, n_pairs=50, seed=0)
    record_property("max_rel_err_db", rep["max_rel_err_db"])
    record_property("max_rel_err_k", rep["max_rel_err_k"])
    assert len(rep["pairs"]) == 50
    assert rep["max_rel_err_db"] <= 0.05
    assert rep["max_rel_err_k"] <= 0.05


# --------------------------------------------------------------------------- 6


@pytest.mark.criterion(6)
def test_inequality_suite(cli_runs, record_property):
    margins = {}
    for name, (_, _, rep) in cli_runs.items():
        ineq = rep["inequalities"]
        assert ineq["pairs"] >= 200, name
        assert ineq["pass"], (name, ineq["clauses"])
        assert sum(c["violations"] for c in ineq["clauses"].values()) == 0
        assert rep["tolerances"]["status"] == "measured" or name == "two_tip"
        margins[name] = {k: round(c["min_margin"], 4) for k, c in ineq["clauses"].items()}
    record_property("worst_margins", margins)


# --------------------------------------------------------------------------- 7


@pytest.fixture(scope="module")
def uniformity(fine, coarse):
    g, f, _ = fine
    return {
        "fine": estimate_uniformity_constant(g, f, 200, 0),
        "reseed": estimate_uniformity_constant(g, f, 200, 1),
        "coarse": estimate_uniformity_constant(coarse[0], coarse[1], 200, 0),
    }


@pytest.mark.criterion(7)
def test_geodesics_certify(uniformity, record_property):
    est = uniformity["fine"]
    record_property("a_hat", est["a_hat"])
    assert est["n_certified"] == 200
    assert est["all_finite"]


@pytest.mark.criterion(7)
def test_a_hat_stable(uniformity, record_property):
    a = uniformity["fine"]["a_hat"]
    reseed = abs(uniformity["reseed"]["a_hat"] / a - 1)
    refine = abs(a / uniformity["coarse"]["a_hat"] - 1)
    record_property("reseed_change", reseed)
    record_property("refinement_change", refine)
    assert reseed <= 0.10
    assert refine <= 0.10


@pytest.mark.criterion(7)
def test_antipodal_pipelines(coarse, uniformity, record_property):
    g, f = coarse
    a_hat = uniformity["coarse"]["a_hat"]
    worst = 0.0
    pairs = antipodal_pairs(g, 50)
    for p, q in pairs:
        worst = max(worst, build_pipeline(g, f, int(p), int(q)).certificate.c_hat)
    record_property("max_c_hat", worst)
    record_property("limit", 10 * a_hat)
    assert len(pairs) == 50
    assert worst <= 10 * a_hat


# --------------------------------------------------------------------------- 8


@pytest.fixture(scope="module")
def separation():
    cone, flat = {}, {}
    for R in (4, 8, 16):
        g = build_graph(make_model("simons", {"r_min": 1e-3, "r_max": float(R)}), 0.08)
        f = compute_sigma_field(g, 1.0)
        cone[R] = four_point_delta(g, weight_field(g, "sigma", f), 5000, seed=0, pool_size=64)["delta_4pt"]
        side = int(np.sqrt(g.n))
        gf = build_graph(make_model("hyperplane", {"extent": [0.0, R, 0.0, R]}), R / (side - 1))
        flat[R] = four_point_delta(gf, weight_field(gf, "intrinsic"), 5000, seed=0, pool_size=64)["delta_4pt"]
    return cone, flat


@pytest.mark.criterion(8)
def test_cone_delta_is_scale_free(separation, record_property):
    cone = separation[0]
    mean = np.mean(list(cone.values()))
    spread = max(abs(v / mean - 1) for v in cone.values())
    record_property("delta_4pt", cone)
    record_property("max_deviation", spread)
    assert spread <= 0.15


@pytest.mark.criterion(8)
def test_flat_delta_grows(separation, record_property):
    flat = separation[1]
    growth = [flat[8] / flat[4] - 1, flat[16] / flat[8] - 1]
    record_property("delta_4pt", flat)
    record_property("growth_per_doubling", growth)
    assert min(growth) >= 0.5


@pytest.mark.criterion(8)
def test_tree_is_zero_hyperbolic():
    # a star of three paths, and a random tree
    P = np.zeros((16, 2))
    E = [(0, 1), (1, 2), (2, 3), (3, 4), (4, 5), (0, 6), (6, 7), (7, 8), (8, 9), (9, 10),
         (0, 11), (11, 12), (12, 13), (13, 14), (14, 15)]
    star = MetricGraph.from_edges(P, np.array(E), lengths=np.ones(len(E)), dim=1)
    for g in (star, random_tree(200, 0)):
        rep = four_point_delta(g, weight_field(g, "intrinsic"), 5000, seed=0, pool_size=64)
        assert rep["delta_4pt"] == 0.0


@pytest.mark.criterion(8)
def test_cylinder_brute_force(tmp_path, record_property):
    V, F = cylinder(1.0, 6.0, 64, 65)
    write_off(tmp_path / "cyl.off", V, F)
    g = ingest_mesh(tmp_path / "cyl.off")
    sub = np.random.default_rng(0).choice(g.n, 14, replace=False)
    triples = np.array(list(itertools.combinations(sub, 3)))
    rep = estimate_thinness(g, weight_field(g, "intrinsic"), triples=triples)
    record_property("delta_thin", rep["delta_thin"])
    record_property("triangles", len(triples))
    # the graph metric resolves distances to one edge length
    assert rep["delta_thin"] <= np.pi + g.h


# --------------------------------------------------------------------------- 9


@pytest.mark.criterion(9)
def test_delta_formula_oracle(record_property):
    got, ref = delta_formula(1.0), float(delta_formula_mp(1.0))
    record_property("delta_formula_1", got)
    assert got == pytest.approx(ref, rel=1e-12)


@pytest.mark.criterion(9)
def test_thinness_below_explicit_constant(cli_runs, record_property):
    rows = {}
    for name, (_, _, rep) in cli_runs.items():
        hyp = rep["hyperbolicity"]
        a_hat = rep["uniformity"]["a_hat"]
        assert hyp["paper_bound"] == pytest.approx(delta_formula(a_hat))
        assert hyp["delta_thin"] <= hyp["paper_bound"], name
        rows[name] = (round(hyp["delta_thin"], 3), a_hat)
    record_property("delta_thin_and_a_hat", rows)


# -------------------------------------------------------------------------- 10


@pytest.fixture(scope="module")
def whitney_sector(simons):
    # a thin sector: xi must stay below 1e-3 / L_hat, so the cover radii are a few mesh steps only here
    width = 0.006 / simons.rho[0]
    g = build_graph(simons, 1.5e-4, (1.0, 1.12, 0.0, width))
    f = closed_form_field(g, 1.0)
    cover = build_cover(g, f, 3e-3)
    return g, f, cover, verify_smoothing(f, smooth_sigma(f, cover, g), g)


@pytest.mark.criterion(10)
def test_cover_invariants(whitney_sector, record_property):
    _, _, cover, _ = whitney_sector
    record_property("invariants", cover.invariants)
    assert cover.invariants["pass"]


@pytest.mark.criterion(10)
def test_multiplicity_uniform_across_bands(whitney_sector, record_property):
    g, _, cover, _ = whitney_sector
    r = g.radius()
    qs = np.quantile(r, np.linspace(0, 1, 6))
    per_band = [int(cover.histograms[2.0][(r >= lo) & (r <= hi)].max()) for lo, hi in zip(qs[:-1], qs[1:])]
    record_property("multiplicity", cover.multiplicity)
    record_property("per_band", per_band)
    assert max(per_band) - min(per_band) <= 1


@pytest.mark.criterion(10)
def test_sandwich(whitney_sector, record_property):
    _, _, cover, v = whitney_sector
    record_property("c1", v["c1"])
    record_property("c2", v["c2"])
    assert 0 < v["c1"] <= 1.0
    assert 1.0 <= v["c2"] <= 1.2 * cover.multiplicity


@pytest.mark.criterion(10)
def test_first_difference_stable(simons, record_property):
    width = 0.006 / simons.rho[0]
    c3 = []
    for h in (1.5e-4, 7.5e-5):
        g = build_graph(simons, h, (1.0, 1.03, 0.0, width))
        f = closed_form_field(g, 1.0)
        c3.append(verify_smoothing(f, smooth_sigma(f, build_cover(g, f, 3e-3), g), g)["c3"])
    record_property("c3", c3)
    assert all(np.isfinite(c3))
    assert abs(c3[1] / c3[0] - 1) <= 0.10


# -------------------------------------------------------------------------- 11


@pytest.mark.criterion(11)
def test_cone_two_classes(record_property):
    g = build_graph(make_model("simons", {"r_min": 0.01, "r_max": 100.0}), 0.05)
    f = compute_sigma_field(g, 1.0)
    a_hat = estimate_uniformity_constant(g, f, 100, 0)["a_hat"]
    rep = verify_boundary_map(trace_rays(g, f, interior_base(g, 1.0), a_hat=a_hat), g, f)
    record_property("class_targets", rep["class_targets"])
    record_property("separation_margin", rep["separation_margin"])
    assert rep["classes"] == 2
    assert rep["pass"]


@pytest.mark.criterion(11)
@pytest.mark.parametrize("t_max", [5.0, 7.0, 9.0])
def test_catenoid_one_class(t_max, record_property):
    g = build_graph(make_model("catenoid", {"c": 1.0, "t_max": t_max}), 0.1)
    f = compute_sigma_field(g, 1.0)
    a_hat = estimate_uniformity_constant(g, f, 100, 0)["a_hat"]
    rep = verify_boundary_map(trace_rays(g, f, interior_base(g), a_hat=a_hat), g, f)
    record_property("a_hat", a_hat)
    assert rep["class_targets"] == [INFINITY_TAG]
    assert rep["pass"]


@pytest.mark.criterion(11)
def test_two_tip_three_classes(tmp_path):
    V, F, S = two_tip_sheet()
    write_off(tmp_path / "t.off", V, F)
    write_sidecar(tmp_path / "t.off.sigma", S)
    g = ingest_mesh(tmp_path / "t.off")
    f = compute_sigma_field(g, 1.0)
    rep = verify_boundary_map(trace_rays(g, f, interior_base(g)), g, f)
    assert rep["classes"] == 3
    assert rep["surjectivity"]


@pytest.mark.criterion(11)
def test_compact_mesh_no_classes(tmp_path):
    V, F = icosphere(3)
    write_off(tmp_path / "s.off", V, F)
    g = ingest_mesh(tmp_path / "s.off")
    f = compute_sigma_field(g, 1.0)
    rep = verify_boundary_map(trace_rays(g, f, 0), g, f)
    assert rep["classes"] == 0
    assert rep["pass"]


# -------------------------------------------------------------------------- 12


@pytest.mark.criterion(12)
def test_full_verify_byte_identical(cli_runs, tmp_path, record_property):
    first, code, _ = cli_runs["simons"]
    assert code == EXIT_OK
    again = tmp_path / "again"
    again.mkdir()
    for name in ("vertices.csv", "edges.csv", "graph.json", "manifest.json"):
        shutil.copy(first / name, again / name)
    assert main(["verify", "--all", "--out", str(again)]) == EXIT_OK
    names = sorted(p.name for p in first.iterdir())
    assert names == sorted(p.name for p in again.iterdir())
    differing = [n for n in names if (first / n).read_bytes() != (again / n).read_bytes()]
    record_property("artifacts", len(names))
    assert not differing
