import numpy as np
import pytest

from sigmaunfold.metricspace import MetricEngine, weight_field
from sigmaunfold.sigma import SigmaField, compute_sigma_field
from sigmaunfold.uniformity import (
    PipelineError,
    antipodal_pairs,
    build_pipeline,
    estimate_uniformity_constant,
    verify_sigma_uniform,
)

from conftest import path_graph


def constant_field(g, value=1.0):
    n = g.n
    return SigmaField(1.0, np.full(n, value), np.array([value]), np.zeros(n, int), np.ones(n, bool),
                      g.graph_id, 2 ** 0.125)


class TestCertificate:
    def test_hand_computed(self):
        g = path_graph(5)
        f = constant_field(g)
        eng = MetricEngine(g, weight_field(g, "intrinsic"))
        cert = verify_sigma_uniform(eng.curve([0, 1, 2, 3, 4]), f, g)
        assert cert.quasigeodesic_ratio == pytest.approx(1.0)
        # l_min peaks at the middle vertex: 2 / delta
        assert cert.cone_ratio == pytest.approx(2.0)
        assert cert.c_hat == pytest.approx(2.0)
        assert cert.worst_sample == 2.0
        assert cert.n_samples == 5 + 4

    def test_detour_raises_quasigeodesic_ratio(self):
        g = path_graph(5)
        f = constant_field(g, 0.1)
        eng = MetricEngine(g, weight_field(g, "intrinsic"))
        cert = verify_sigma_uniform(eng.curve([1, 2, 3, 2, 1, 0]), f, g)
        assert cert.quasigeodesic_ratio == pytest.approx(5.0)

    def test_midpoint_uses_smaller_delta(self):
        g = path_graph(3)
        n = g.n
        f = SigmaField(1.0, np.array([1.0, 1.0, 100.0]), np.array([1.0]), np.zeros(n, int),
                       np.ones(n, bool), g.graph_id, 1.0)
        eng = MetricEngine(g, weight_field(g, "intrinsic"))
        cert = verify_sigma_uniform(eng.curve([0, 1, 2]), f, g)
        # midpoint of edge (1, 2): l_min = 0.5, delta = min(1, 0.01)
        assert cert.cone_ratio == pytest.approx(50.0)
        assert cert.worst_sample == 1.5

    def test_errors(self, plane_small):
        g = path_graph(4)
        eng = MetricEngine(g, weight_field(g, "intrinsic"))
        with pytest.raises(ValueError, match="distinct"):
            verify_sigma_uniform(eng.curve([0, 1, 0]), constant_field(g), g)
        with pytest.raises(ValueError, match="totally geodesic"):
            trivial = compute_sigma_field(plane_small, 1.0)
            verify_sigma_uniform(eng.curve([0, 1]), trivial, plane_small)


class TestEstimate:
    def test_cone_sample(self, simons_small, simons_small_field):
        rep = estimate_uniformity_constant(simons_small, simons_small_field, n_samples=60, seed=0)
        assert rep["all_finite"]
        assert rep["n_certified"] >= 59
        assert 1.0 <= rep["a_hat"] < 20.0
        assert rep["quantiles"]["0.5"] <= rep["quantiles"]["0.9"] <= rep["a_hat"]
        again = estimate_uniformity_constant(simons_small, simons_small_field, n_samples=60, seed=0)
        assert again["c_hat"] == rep["c_hat"]

    def test_explicit_pairs(self, catenoid_small):
        f = compute_sigma_field(catenoid_small, 1.0)
        rep = estimate_uniformity_constant(catenoid_small, f, pairs=[[0, 900], [5, 5]])
        assert np.isnan(rep["c_hat"][1])
        assert rep["n_certified"] == 1

    def test_bad_sample_count(self, simons_small, simons_small_field):
        with pytest.raises(ValueError):
            estimate_uniformity_constant(simons_small, simons_small_field, n_samples=0)


class TestPipeline:
    def test_antipodal_pairs_geometry(self, simons_small):
        pairs = antipodal_pairs(simons_small, 8)
        r = simons_small.radius()
        th = simons_small.chart[:, 1]
        assert np.allclose(r[pairs[:, 0]], r[pairs[:, 1]])
        gap = np.abs((th[pairs[:, 1]] - th[pairs[:, 0]]) % (2 * np.pi) - np.pi)
        step = 2 * np.pi / len(np.unique(th))
        assert gap.max() <= step + 1e-12

    def test_antipodal_needs_cone(self, catenoid_small):
        with pytest.raises(ValueError, match="cone"):
            antipodal_pairs(catenoid_small, 4)

    def test_pipeline_certifies(self, simons_small, simons_small_field):
        p, q = antipodal_pairs(simons_small, 4)[1]
        pipe = build_pipeline(simons_small, simons_small_field, int(p), int(q))
        v = pipe.curve.vertices
        assert (v[0], v[-1]) == (p, q)
        assert pipe.hub in v
        assert np.isfinite(pipe.certificate.c_hat)
        assert pipe.certificate.cone_ratio <= 2 * pipe.pi_hat / pipe.tau + 1e-9
        d = pipe.to_dict()
        assert d["endpoints"] == [int(p), int(q)]

    def test_adjacent_endpoints(self, simons_small, simons_small_field):
        v = int(simons_small.edges[100, 0])
        w = int(simons_small.edges[100, 1])
        pipe = build_pipeline(simons_small, simons_small_field, v, w)
        assert pipe.notes == ["adjacent endpoints: single edge"]
        assert len(pipe.curve.vertices) == 2

    def test_errors(self, simons_small, simons_small_field):
        p, q = antipodal_pairs(simons_small, 2)[0]
        with pytest.raises(ValueError, match="distinct"):
            build_pipeline(simons_small, simons_small_field, int(p), int(p))
        with pytest.raises(ValueError, match="tau < t"):
            build_pipeline(simons_small, simons_small_field, int(p), int(q), t=0.2, tau=0.3)
        with pytest.raises(PipelineError, match="hub") as exc:
            build_pipeline(simons_small, simons_small_field, int(p), int(q), t=50.0, tau=1.0)
        assert exc.value.level == 0
