"""Sigma-uniform curves: certificates, dyadic pipelines and constant estimates.

A curve from p to q is c-sigma-uniform when it is a c-quasi-geodesic,
``l(curve) <= c * d(p, q)``, and every point z on it satisfies the
twisted double cone condition ``l_min(z) <= c * delta(z)``, where ``l_min(z)``
is the shorter of the two arcs into which z splits the curve.
"""

from __future__ import annotations

from dataclasses import asdict, dataclass, field
from typing import Any

import numpy as np

from .graph import MetricGraph
from .metricspace import GeodesicPath, MetricEngine, sample_pairs, weight_field

__all__ = [
    "UniformityCertificate",
    "Pipeline",
    "PipelineError",
    "verify_sigma_uniform",
    "build_pipeline",
    "estimate_uniformity_constant",
    "antipodal_pairs",
]


class PipelineError(RuntimeError):
    """Pipeline construction failed at a given dyadic level."""

    def __init__(self, message: str, level: int | None = None):
        super().__init__(message)
        self.level = level


@dataclass(frozen=True)
class UniformityCertificate:
    endpoints: tuple[int, int]
    quasigeodesic_ratio: float
    cone_ratio: float
    c_hat: float
    worst_sample: float
    n_samples: int

    def to_dict(self) -> dict[str, Any]:
        return asdict(self)


def _trivial_guard(field) -> None:
    if field.trivial:
        raise ValueError("totally geodesic: uniformity trivial (delta is infinite everywhere)")


def verify_sigma_uniform(curve: GeodesicPath, field, graph: MetricGraph,
                         endpoint_distance: float | None = None) -> UniformityCertificate:
    """Certify a vertex path against both sigma-uniformity clauses.

    The cone clause is sampled at vertices and at edge midpoints; at a
    midpoint delta is taken as the smaller endpoint value.

    Parameters
    ----------
    endpoint_distance : float, optional
        Intrinsic distance between the endpoints, when already known.
    """
    _trivial_guard(field)
    v = curve.vertices
    if len(v) < 2 or v[0] == v[-1]:
        raise ValueError("curve endpoints must be distinct")
    if v.min() < 0 or v.max() >= graph.n:
        raise ValueError("curve leaves the graph")
    if endpoint_distance is None:
        endpoint_distance = float(graph.intrinsic_from([v[0]])[v[-1]])
    delta = field.delta[v]
    cum = curve.cumulative()
    total = cum[-1]
    lmin_v = np.minimum(cum, total - cum)
    mid = 0.5 * (cum[:-1] + cum[1:])
    lmin_m = np.minimum(mid, total - mid)
    dmid = np.minimum(delta[:-1], delta[1:])
    ratios = np.concatenate([lmin_v / delta, lmin_m / dmid])
    k = int(np.argmax(ratios))
    cone = float(ratios[k])
    qg = float(total / endpoint_distance)
    pos = k if k < len(v) else (k - len(v)) + 0.5
    return UniformityCertificate(
        endpoints=(int(v[0]), int(v[-1])),
        quasigeodesic_ratio=qg,
        cone_ratio=cone,
        c_hat=max(qg, cone),
        worst_sample=float(pos),
        n_samples=int(len(ratios)),
    )


@dataclass
class Pipeline:
    """A dyadic pipeline p -> hub -> q with its realized constants."""

    curve: GeodesicPath
    hub: int
    waypoints_p: list[int]
    waypoints_q: list[int]
    unit: float
    pi_hat: float
    tau: float
    t: float
    bound: float
    chain_worst: float
    certificate: UniformityCertificate
    notes: list[str] = field(default_factory=list)

    def to_dict(self) -> dict[str, Any]:
        return {
            "endpoints": list(self.certificate.endpoints),
            "hub": self.hub,
            "waypoints_p": self.waypoints_p,
            "waypoints_q": self.waypoints_q,
            "unit": self.unit,
            "pi_hat": self.pi_hat,
            "t": self.t,
            "tau": self.tau,
            "bound": self.bound,
            "chain_worst": self.chain_worst,
            "certificate": self.certificate.to_dict(),
            "notes": self.notes,
        }


def _argmax_delta(delta: np.ndarray, cand: np.ndarray) -> int:
    idx = np.flatnonzero(cand)
    # max delta, smallest index on ties
    return int(idx[np.argmax(delta[idx])])


def build_pipeline(
    graph: MetricGraph,
    field,
    p: int,
    q: int,
    t: float = 0.5,
    tau: float = 0.25,
    engine: MetricEngine | None = None,
) -> Pipeline:
    """Quasi-geodesic pipeline between p and q.

    With the unit scale ``U = |p - q| / 1.5`` (ambient distance) the hub
    maximizes delta over ``B_U(p) & B_U(q) & {delta >= t U / 2}``. Towards each
    endpoint e the k-th waypoint maximizes delta over the ambient annulus
    ``2^-k U <= |x - e| < 2^(1-k) U`` restricted to ``{delta >= 2^-k t U}``;
    consecutive waypoints are joined by intrinsic shortest paths inside
    ``{delta >= 2^-k tau U}``. Levels stop once ``2^-k U < 4 h_e`` with
    ``h_e`` the longest edge at e.

    The realized ``pi_hat = max_k 2^k l(segment_k) / U`` gives the arc bound
    ``l(z -> e) <= 2 pi_hat / tau * delta(z)`` along each half, and with
    ``d(p, q) >= 1.5 U`` the certificate bound
    ``max(2 pi_hat / tau, 8 pi_hat / 3)``.
    """
    _trivial_guard(field)
    if p == q:
        raise ValueError("pipeline endpoints must be distinct")
    if not (0 < tau < t):
        raise ValueError(f"pipeline parameters need 0 < tau < t, got t={t}, tau={tau}")
    eng = engine or MetricEngine(graph, weight_field(graph, "intrinsic"))
    delta = field.delta
    X = graph.positions
    d_pq = float(graph.intrinsic_from([p])[q])

    if q in graph.neighbors(p):
        curve = eng.curve([p, q])
        cert = verify_sigma_uniform(curve, field, graph, d_pq)
        return Pipeline(curve, p, [], [], 0.0, 0.0, tau, t, cert.c_hat, 0.0, cert,
                        ["adjacent endpoints: single edge"])

    U = float(np.linalg.norm(X[p] - X[q])) / 1.5
    dist_p = np.linalg.norm(X - X[p], axis=1)
    dist_q = np.linalg.norm(X - X[q], axis=1)
    cand = (dist_p < U) & (dist_q < U) & (delta >= t * U / 2)
    if not cand.any():
        raise PipelineError("no admissible hub: the unit-scale lens holds no vertex with large delta", 0)
    hub = _argmax_delta(delta, cand)

    segments = {}
    chains = {}
    pi_hat = 0.0
    chain_worst = 0.0
    for e, de in ((p, dist_p), (q, dist_q)):
        h_e = float(graph.lengths[(graph.edges[:, 0] == e) | (graph.edges[:, 1] == e)].max())
        pts = [hub]
        k = 1
        while 2.0**-k * U >= 4 * h_e:
            ann = (de >= 2.0**-k * U) & (de < 2.0 ** (1 - k) * U) & (delta >= 2.0**-k * t * U)
            if not ann.any():
                raise PipelineError(f"empty annulus at level k={k} around vertex {e}", k)
            pts.append(_argmax_delta(delta, ann))
            k += 1
        pts.append(e)
        segs = []
        for j in range(1, len(pts)):
            a, b = pts[j - 1], pts[j]
            if a == b:
                continue
            mask = delta >= 2.0**-j * tau * U
            mask[a] = mask[b] = True
            dist_b = eng.distances([b], mask=mask)
            if not np.isfinite(dist_b[a]):
                raise PipelineError(
                    f"waypoints {a} and {b} are disconnected inside {{delta >= 2^-{j} tau U}}; lower tau", j
                )
            seg = eng.path_to(dist_b, a)
            segs.append((j, seg))
            pi_hat = max(pi_hat, 2.0**j * seg.intrinsic_length / U)
        segments[e] = segs
        chains[e] = pts[1:-1]
        # arc from each chain vertex to the endpoint against delta
        rest = 0.0
        for j, seg in reversed(segs):
            arc = rest + seg.intrinsic_length - seg.cumulative()
            chain_worst = max(chain_worst, float(np.max(arc / delta[seg.vertices])))
            rest += seg.intrinsic_length

    # p <- ... <- hub -> ... -> q
    half_p = [s for _, s in segments[p]]
    half_q = [s for _, s in segments[q]]
    verts = [hub]
    for s in half_p:
        verts.extend(s.vertices[1:].tolist())
    verts = verts[::-1]
    for s in half_q:
        verts.extend(s.vertices[1:].tolist())
    curve = eng.curve(verts)
    cert = verify_sigma_uniform(curve, field, graph, d_pq)
    bound = max(2 * pi_hat / tau, 8 * pi_hat / 3)
    return Pipeline(curve, hub, chains[p], chains[q], U, pi_hat, tau, t, bound,
                    chain_worst, cert)


def estimate_uniformity_constant(
    graph: MetricGraph,
    field,
    n_samples: int = 200,
    seed: int = 0,
    pairs=None,
) -> dict[str, Any]:
    """Certify sampled d_b-geodesics; the max c_hat estimates the space's constant.

    Returns a dict with ``a_hat``, quantiles of c_hat, and the per-pair values.
    """
    from .sigma import truncation_collar

    _trivial_guard(field)
    if n_samples < 1:
        raise ValueError("n_samples must be at least 1")
    if pairs is None:
        pairs = sample_pairs(graph, n_samples, seed, exclude=truncation_collar(graph, field))
    pairs = np.asarray(pairs, dtype=np.int64).reshape(-1, 2)
    sig = MetricEngine(graph, weight_field(graph, "sigma", field))
    c_hat = np.full(len(pairs), np.nan)
    qg = np.full(len(pairs), np.nan)
    cone = np.full(len(pairs), np.nan)
    for x in np.unique(pairs[:, 0]):
        rows = np.flatnonzero(pairs[:, 0] == x)
        dsig = sig.distances([x])
        dint = graph.intrinsic_from([x])
        for r in rows:
            y = pairs[r, 1]
            if y == x:
                continue
            path = sig.path_to(dsig, y)
            cert = verify_sigma_uniform(path, field, graph, float(dint[y]))
            c_hat[r], qg[r], cone[r] = cert.c_hat, cert.quasigeodesic_ratio, cert.cone_ratio
    ok = np.isfinite(c_hat)
    vals = c_hat[ok]
    return {
        "a_hat": float(vals.max()),
        "quantiles": {str(qt): float(np.quantile(vals, qt)) for qt in (0.5, 0.9, 0.99)},
        "n_certified": int(ok.sum()),
        "all_finite": bool(np.all(np.isfinite(vals))),
        "max_quasigeodesic_ratio": float(np.nanmax(qg)),
        "max_cone_ratio": float(np.nanmax(cone)),
        "seed": seed,
        "c_hat": c_hat.tolist(),
    }


def antipodal_pairs(graph: MetricGraph, n_pairs: int, radius: float = 1.0) -> np.ndarray:
    """Vertex pairs at one radius on opposite sides of the link of a cone graph.

    Pair i is the vertex nearest to ``(radius, theta_i, ...)`` in the chart
    and the vertex nearest to the point with every angle shifted by pi, for
    ``theta_i`` evenly spaced in ``[0, pi)``.
    """
    if graph.model is None or graph.model.kind not in ("simons", "clifford_cone", "cone",
                                                        "cone_over_sphere_products"):
        raise ValueError("antipodal pairs need a cone graph")
    r = graph.radius()
    ring = np.flatnonzero(np.isclose(r, r[np.argmin(np.abs(r - radius))]))
    ang = graph.chart[ring, 1:]
    out = []
    for theta in np.pi * np.arange(n_pairs) / n_pairs:
        a = np.full(ang.shape[1], theta)
        ends = []
        for target in (a, a + np.pi):
            d = np.abs((ang - target + np.pi) % (2 * np.pi) - np.pi).sum(axis=1)
            ends.append(int(ring[np.argmin(d)]))
        out.append(ends)
    return np.array(out, dtype=np.int64)
