import numpy as np
import pytest
from hypothesis import HealthCheck, given, settings
from hypothesis import strategies as st
from scipy.sparse import csr_matrix
from scipy.sparse.csgraph import shortest_path

from sigmaunfold.graph import MetricGraph, build_graph
from sigmaunfold.models import make_model
from sigmaunfold.sigma import (
    SigmaError,
    SigmaField,
    closed_form_field,
    compute_sigma_field,
    default_ladder,
    field_statistics,
    interpolation_sweep,
    lipschitz_constant,
    refinement_tolerance,
    truncation_collar,
    verify_axioms,
)

from conftest import path_graph


def brute_force_sigma(g: MetricGraph, alpha: float, samples: int = 4001) -> np.ndarray:
    """max over points y of the metric graph of min(a(y), alpha / d(x, y)).

    Points are sampled densely on every edge with ``a`` linear along it; the
    distance to an edge point is the shorter of the two routes through its
    endpoints.
    """
    e = g.edges
    D = shortest_path(csr_matrix((g.lengths, (e[:, 0], e[:, 1])), shape=(g.n, g.n)), directed=False)
    t = np.linspace(0.0, 1.0, samples)
    best = np.zeros(g.n)
    ok = g.a_reliable
    for (u, v), L in zip(e, g.lengths):
        if not (ok[u] and ok[v]):
            continue
        a_t = g.a[u] + (g.a[v] - g.a[u]) * t
        dist = np.minimum(D[:, u, None] + t * L, D[:, v, None] + (1 - t) * L)
        with np.errstate(divide="ignore"):
            val = np.minimum(a_t, np.where(dist > 0, alpha / dist, np.inf))
        best = np.maximum(best, val.max(axis=1))
    return best


def jittered_grid(k: int, seed: int, a_scale: float = 3.0) -> MetricGraph:
    """Triangulated k-by-k grid with jittered positions and random |A|."""
    rng = np.random.default_rng(seed)
    ij = np.array([(i, j) for i in range(k) for j in range(k)], float)
    P = ij + rng.uniform(-0.25, 0.25, size=ij.shape)
    idx = np.arange(k * k).reshape(k, k)
    E = np.concatenate([
        np.column_stack([idx[:-1, :].ravel(), idx[1:, :].ravel()]),
        np.column_stack([idx[:, :-1].ravel(), idx[:, 1:].ravel()]),
        np.column_stack([idx[:-1, :-1].ravel(), idx[1:, 1:].ravel()]),
    ])
    a = rng.uniform(0.0, a_scale, size=k * k) * (rng.uniform(size=k * k) < 0.6)
    a[0] = a_scale
    return MetricGraph.from_edges(P, E, a=a)


class TestBruteForceOracle:
    @pytest.mark.parametrize("seed", range(4))
    @pytest.mark.parametrize("alpha", [0.25, 1.0, 3.0])
    def test_jittered_grid(self, seed, alpha):
        g = jittered_grid(7, seed)
        f = compute_sigma_field(g, alpha)
        ref = brute_force_sigma(g, alpha)
        # the kernel solves each edge exactly; sampling can only undershoot
        assert np.all(f.b >= ref * (1 - 1e-12))
        np.testing.assert_allclose(f.b, ref, rtol=1e-3)

    def test_path_single_peak(self):
        a = np.zeros(11)
        a[5] = 2.0
        g = path_graph(11, a=a)
        f = compute_sigma_field(g, 1.0)
        np.testing.assert_allclose(f.b, brute_force_sigma(g, 1.0), rtol=1e-3)
        # vertex 2 sees the edge 5 -> 4 at distance d - t: (2 - 2t)(d - t) = 1
        d = 3.0
        t = ((2 * d + 2) - np.sqrt((2 * d + 2) ** 2 - 8 * (2 * d - 1))) / 4
        assert f.b[2] == pytest.approx(2 - 2 * t, rel=1e-12)

    def test_ladder_brackets_refined_value(self):
        g = jittered_grid(8, 11)
        lad = compute_sigma_field(g, 1.0, refine=False)
        ref = compute_sigma_field(g, 1.0)
        assert np.all(lad.b <= ref.b * (1 + 1e-9))
        assert np.all(lad.b == lad.ladder[lad.level])
        assert lad.tolerance == pytest.approx(lad.ratio - 1)
        assert ref.tolerance == 0.0


@st.composite
def random_field_inputs(draw):
    seed = draw(st.integers(0, 10_000))
    k = draw(st.integers(4, 7))
    alpha = draw(st.floats(0.1, 5.0))
    return jittered_grid(k, seed), alpha


class TestProperties:
    @settings(max_examples=40, deadline=None, suppress_health_check=[HealthCheck.too_slow])
    @given(random_field_inputs())
    def test_delta_is_exactly_lipschitz(self, inp):
        g, alpha = inp
        f = compute_sigma_field(g, alpha)
        assert lipschitz_constant(g, f.delta) <= (1.0 / alpha) * (1 + 1e-9)

    @settings(max_examples=40, deadline=None, suppress_health_check=[HealthCheck.too_slow])
    @given(random_field_inputs())
    def test_domination(self, inp):
        g, alpha = inp
        f = compute_sigma_field(g, alpha)
        assert np.all(f.b >= g.a)

    @settings(max_examples=25, deadline=None, suppress_health_check=[HealthCheck.too_slow])
    @given(random_field_inputs(), st.floats(1.1, 4.0))
    def test_monotone_in_alpha(self, inp, factor):
        g, alpha = inp
        lo = compute_sigma_field(g, alpha)
        hi = compute_sigma_field(g, alpha * factor)
        assert np.all(hi.b >= lo.b * (1 - 1e-12))

    @settings(max_examples=25, deadline=None, suppress_health_check=[HealthCheck.too_slow])
    @given(random_field_inputs(), st.sampled_from([0.5, 2.0, 1.0 / 3.0, 7.0]))
    def test_scaling_covariance(self, inp, lam):
        g, alpha = inp
        f = compute_sigma_field(g, alpha)
        f2 = compute_sigma_field(g.scaled(lam), alpha)
        np.testing.assert_allclose(f2.b, f.b / lam, rtol=1e-10)


class TestConeField:
    def test_closed_form_off_collar(self, simons_small, simons_small_field):
        g, f = simons_small, simons_small_field
        keep = ~(truncation_collar(g, f) | g.outer)
        r = g.radius()
        exact = (np.sqrt(6) + 1) / r
        rel = np.abs(f.b[keep] / exact[keep] - 1)
        assert rel.max() < 0.01

    def test_collar_undershoots(self, simons_small, simons_small_field):
        g, f = simons_small, simons_small_field
        col = truncation_collar(g, f)
        assert col[g.near_sigma].all()
        r = g.radius()
        assert np.all(f.b[col] <= (np.sqrt(6) + 1) / r[col] * (1 + 1e-3))

    def test_closed_form_field(self, simons_small):
        f = closed_form_field(simons_small, 0.5)
        assert np.allclose(f.b * simons_small.radius(), np.sqrt(6) + 0.5)
        with pytest.raises(SigmaError):
            closed_form_field(build_graph(make_model("catenoid", {"t_max": 2.0}), 0.1))

    def test_axioms_pass(self, simons_small, simons_small_field):
        rep = verify_axioms(simons_small_field, simons_small)
        assert rep.passed, rep.violations
        assert rep.L_hat <= 1.0
        assert rep.sections["S4"]["blowup"]["pass"]
        assert all(s["bitwise_equal"] for s in rep.sections["S4"]["scaling"].values())

    def test_interpolation_monotone(self, simons_small):
        rows = interpolation_sweep(simons_small, [0.5, 1.0, 2.0], (1.0, 2.0))
        assert [r["alpha"] for r in rows] == [0.5, 1.0, 2.0]
        assert all(r["monotone"] for r in rows[1:])
        for r in rows:
            # b - |A| = alpha / r on the cone
            assert r["sup_b_minus_a"] == pytest.approx(r["alpha"] / 1.0, rel=0.02)

    def test_interpolation_band_errors(self, simons_small):
        with pytest.raises(SigmaError, match="no vertices"):
            interpolation_sweep(simons_small, [1.0], (20.0, 30.0))
        with pytest.raises(SigmaError, match="flagged"):
            interpolation_sweep(simons_small, [1.0], (0.05, 1.0))
        with pytest.raises(SigmaError):
            interpolation_sweep(simons_small, [-1.0], (1.0, 2.0))


class TestAxiomFailures:
    def test_trivial_gauge(self, plane_small):
        f = compute_sigma_field(plane_small, 1.0)
        assert f.trivial and np.all(np.isinf(f.delta))
        rep = verify_axioms(f, plane_small)
        assert rep.passed
        assert rep.sections["S1"]["pass"]

    def test_nonzero_on_flat_violates_S1(self, plane_small):
        f = compute_sigma_field(plane_small, 1.0)
        bad = SigmaField(1.0, np.full(plane_small.n, 0.5), np.array([0.5]), np.zeros(plane_small.n, int),
                         np.ones(plane_small.n, bool), plane_small.graph_id, f.ratio)
        rep = verify_axioms(bad, plane_small, scaling=())
        assert not rep.passed
        assert not rep.sections["S1"]["pass"]

    def test_halved_field_violates_domination(self, simons_small, simons_small_field):
        f = simons_small_field
        half = SigmaField(f.alpha, f.b * 0.5, f.ladder, f.level, f.refined, f.graph_id, f.ratio)
        rep = verify_axioms(half, simons_small, scaling=(), blowup=False)
        assert not rep.sections["S2"]["pass"]
        assert "b < |A|" in rep.sections["S2"]["detail"]

    def test_spike_violates_lipschitz(self, simons_small, simons_small_field):
        f = simons_small_field
        b = f.b.copy()
        k = int(np.argmax(simons_small.radius()[: simons_small.n // 2]))
        b[k] *= 0.2
        spiky = SigmaField(f.alpha, b, f.ladder, f.level, f.refined, f.graph_id, f.ratio)
        rep = verify_axioms(spiky, simons_small, scaling=(), blowup=False)
        assert not rep.sections["S3"]["pass"]
        assert any(v.startswith("S3") for v in rep.violations)

    def test_constant_field_harnack(self):
        g = build_graph(make_model("sphere"), 0.3)
        f = compute_sigma_field(g, 1.0)
        rep = verify_axioms(f, g, scaling=())
        assert rep.L_hat == pytest.approx(0.0, abs=1e-12)
        assert rep.sections["harnack"]["pass"]


class TestErrorsAndIO:
    @pytest.mark.parametrize("alpha", [0.0, -1.0, float("nan"), float("inf")])
    def test_bad_alpha(self, simons_small, alpha):
        with pytest.raises(SigmaError):
            compute_sigma_field(simons_small, alpha)

    def test_all_unreliable(self, catenoid_small):
        g = catenoid_small.with_a(catenoid_small.a, reliable=np.zeros(catenoid_small.n, bool))
        with pytest.raises(SigmaError, match="empty superlevel"):
            compute_sigma_field(g, 1.0)

    def test_bad_ladder(self, catenoid_small):
        with pytest.raises(SigmaError):
            compute_sigma_field(catenoid_small, 1.0, ladder=[0.0, 1.0])

    def test_default_ladder_span(self):
        lad = default_ladder(np.array([0.0, 1.0, 8.0]))
        assert lad[0] == pytest.approx(0.25)
        assert lad[-1] >= 32.0
        np.testing.assert_allclose(lad[1:] / lad[:-1], 2 ** 0.125)

    def test_csv_round_trip(self, tmp_path, catenoid_small):
        f = compute_sigma_field(catenoid_small, 1.0)
        f.dump_csv(tmp_path / "sigma.csv")
        f2 = SigmaField.load_csv(tmp_path / "sigma.csv")
        assert np.array_equal(f2.b, f.b)
        assert np.array_equal(f2.level, f.level)
        assert f2.provenance() == f.provenance()

    def test_refinement_tolerance(self):
        rep = refinement_tolerance({"L_hat": 1.0, "b_q50": 2.0}, {"L_hat": 1.01, "b_q50": 2.0})
        assert rep["max_relative_change"] == pytest.approx(0.01 / 1.01)
        assert rep["eps_h"] == pytest.approx(0.02)
        assert refinement_tolerance({"x": 1.0}, {"x": 1.5})["eps_h"] == pytest.approx(2 / 3)

    def test_field_statistics_resolution_stable(self):
        m = make_model("simons", {"r_min": 0.1, "r_max": 10.0})
        stats = []
        # quantiles resolve only to the ring spacing, a relative step of about h
        for h in (0.05, 0.025):
            g = build_graph(m, h)
            stats.append(field_statistics(g, compute_sigma_field(g, 1.0)))
        assert refinement_tolerance(*stats)["max_relative_change"] < 0.02
