import numpy as np
import pytest

from sigmaunfold.boundary import INFINITY_TAG, RayBundle, trace_rays, verify_boundary_map
from sigmaunfold.graph import ingest_mesh
from sigmaunfold.meshes import icosphere, two_tip_sheet, write_off, write_sidecar
from sigmaunfold.metricspace import MetricEngine, weight_field
from sigmaunfold.sigma import compute_sigma_field

from conftest import interior_base


@pytest.fixture(scope="module")
def cone_bundle(simons_small, simons_small_field):
    return trace_rays(simons_small, simons_small_field, interior_base(simons_small, 1.0))


@pytest.fixture(scope="module")
def two_tip(tmp_path_factory):
    d = tmp_path_factory.mktemp("mesh")
    V, F, S = two_tip_sheet()
    write_off(d / "t.off", V, F)
    write_sidecar(d / "t.off.sigma", S)
    g = ingest_mesh(d / "t.off")
    return g, compute_sigma_field(g, 1.0)


class TestCone:
    def test_two_classes(self, simons_small, simons_small_field, cone_bundle):
        rep = verify_boundary_map(cone_bundle, simons_small, simons_small_field)
        assert rep["classes"] == 2
        assert rep["class_targets"] == ["sigma:0", INFINITY_TAG]
        assert rep["pass"], rep
        assert rep["separation_margin"] > 0

    def test_rays_start_at_base(self, cone_bundle):
        for r in cone_bundle.rays:
            assert r.path.vertices[0] == cone_bundle.base
            assert r.path.vertices[-1] == r.target
            assert r.db_length > 0 and r.intrinsic_length > 0

    def test_hausdorff_subsampling_bound(self, simons_small, simons_small_field, cone_bundle):
        eng = MetricEngine(simons_small, weight_field(simons_small, "sigma", simons_small_field))
        rays = cone_bundle.rays[:4]
        for i, ri in enumerate(rays):
            di = eng.distances(ri.path.vertices)
            for j, rj in enumerate(rays):
                if i == j:
                    continue
                dj = eng.distances(rj.path.vertices)
                full = max(di[rj.path.vertices].max(), dj[ri.path.vertices].max())
                slack = 2 * max(ri.path.seg_weighted.max(), rj.path.seg_weighted.max())
                H = cone_bundle.hausdorff[i, j]
                assert H <= full + 1e-9
                assert full - H <= slack + 1e-9

    def test_threshold_default(self, cone_bundle):
        assert cone_bundle.threshold == pytest.approx(8.0)

    def test_merged_labels_break_injectivity(self, simons_small, cone_bundle):
        b = cone_bundle
        merged = RayBundle(b.base, b.rays, b.hausdorff, b.threshold, np.zeros_like(b.labels),
                           ["sigma:0"], b.n_components)
        rep = verify_boundary_map(merged, simons_small)
        assert not rep["pass"]


class TestOtherModels:
    def test_catenoid_single_class(self, catenoid_small):
        f = compute_sigma_field(catenoid_small, 1.0)
        b = trace_rays(catenoid_small, f, interior_base(catenoid_small))
        rep = verify_boundary_map(b, catenoid_small, f)
        assert rep["classes"] == 1
        assert rep["class_targets"] == [INFINITY_TAG]
        assert rep["surjectivity"] and rep["infinity_unique"]

    def test_two_tip_three_classes(self, two_tip):
        g, f = two_tip
        b = trace_rays(g, f, interior_base(g))
        rep = verify_boundary_map(b, g, f)
        assert b.n_components == 2
        assert rep["class_targets"] == ["sigma:0", "sigma:1", INFINITY_TAG]
        assert rep["surjectivity"]
        assert rep["components_hit"] == [0, 1]

    def test_sphere_has_empty_boundary(self, tmp_path):
        V, F = icosphere(2)
        write_off(tmp_path / "s.off", V, F)
        g = ingest_mesh(tmp_path / "s.off")
        f = compute_sigma_field(g, 1.0)
        b = trace_rays(g, f, 0)
        rep = verify_boundary_map(b, g, f)
        assert rep["classes"] == 0
        assert rep["pass"]
        assert rep["note"] == "Gromov boundary is empty"


class TestErrors:
    def test_bad_targets(self, simons_small, simons_small_field):
        with pytest.raises(ValueError, match="targets"):
            trace_rays(simons_small, simons_small_field, 0, targets="tips")

    def test_base_out_of_range(self, simons_small, simons_small_field):
        with pytest.raises(ValueError, match="out of range"):
            trace_rays(simons_small, simons_small_field, simons_small.n)

    def test_base_on_front(self, simons_small, simons_small_field):
        front = np.flatnonzero(simons_small.near_sigma)
        with pytest.raises(ValueError):
            trace_rays(simons_small, simons_small_field, int(front[len(front) // 2]))

    def test_trivial_field(self, plane_small):
        with pytest.raises(ValueError, match="totally geodesic"):
            trace_rays(plane_small, compute_sigma_field(plane_small, 1.0), 5)

    def test_sigma_only(self, simons_small, simons_small_field):
        b = trace_rays(simons_small, simons_small_field, interior_base(simons_small, 1.0), targets="sigma")
        assert all(r.kind == "sigma" for r in b.rays)
        assert b.class_targets == ["sigma:0"]
