"""Conformal shortest-path metrics on a MetricGraph.

A weight field ``w`` turns each edge into the cost ``len * (w(u) + w(v)) / 2``,
the trapezoidal rule for the line integral of ``w``. The weight kinds are the
intrinsic metric (w = 1), the quasi-hyperbolic metric (w = 1/dist_sigma), the
sigma-metric (w = b) and its Whitney-smoothed variant (w = b*).
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Any

import numpy as np

from . import _kernels
from ._threads import ordered_map
from .graph import MetricGraph

__all__ = [
    "WeightField",
    "GeodesicPath",
    "MetricEngine",
    "weight_field",
    "shortest_path",
    "distance_matrix",
    "check_inequality_suite",
    "bounded_geometry_report",
    "sample_pairs",
    "same_ray_oracle",
]

WEIGHT_KINDS = ("intrinsic", "quasi_hyperbolic", "sigma", "sigma_smoothed")


@dataclass(frozen=True, eq=False)
class WeightField:
    name: str
    w: np.ndarray
    source: str = ""

    def edge_costs(self, graph: MetricGraph) -> np.ndarray:
        e = graph.edges
        return graph.lengths * 0.5 * (self.w[e[:, 0]] + self.w[e[:, 1]])


def weight_field(graph: MetricGraph, name: str, field=None) -> WeightField:
    """Build a weight field by name.

    ``field`` is a SigmaField for ``sigma`` and a SmoothedField for
    ``sigma_smoothed``.
    """
    if name == "intrinsic":
        return WeightField(name, np.ones(graph.n), graph.graph_id)
    if name == "quasi_hyperbolic":
        if not graph.has_sigma:
            raise ValueError("quasi-hyperbolic weight needs a non-empty singular set")
        return WeightField(name, 1.0 / graph.dist_sigma, graph.graph_id)
    if name in ("sigma", "sigma_smoothed"):
        if field is None:
            raise ValueError(f"{name} weight needs a field")
        b = field.b if name == "sigma" else field.b_star
        if np.all(b == 0):
            raise ValueError("totally geodesic: the sigma weight vanishes identically")
        if np.any(b <= 0):
            raise ValueError(f"{name} weight must be positive")
        return WeightField(name, np.asarray(b, dtype=float), getattr(field, "graph_id", ""))
    raise ValueError(f"unknown weight {name!r}; expected one of {WEIGHT_KINDS}")


@dataclass(frozen=True, eq=False)
class GeodesicPath:
    """Vertex path with intrinsic and weighted segment lengths."""

    vertices: np.ndarray
    seg_lengths: np.ndarray
    seg_weighted: np.ndarray
    weight_name: str

    @property
    def length(self) -> float:
        """Weighted length."""
        return float(self.seg_weighted.sum())

    @property
    def intrinsic_length(self) -> float:
        return float(self.seg_lengths.sum())

    @property
    def endpoints(self) -> tuple[int, int]:
        return int(self.vertices[0]), int(self.vertices[-1])

    def cumulative(self) -> np.ndarray:
        return np.concatenate([[0.0], np.cumsum(self.seg_lengths)])

    def l_min(self) -> np.ndarray:
        """Per vertex: the shorter intrinsic length of the two sub-curves it splits."""
        c = self.cumulative()
        return np.minimum(c, c[-1] - c)

    def sub(self, i: int, j: int) -> "GeodesicPath":
        return GeodesicPath(self.vertices[i:j + 1], self.seg_lengths[i:j], self.seg_weighted[i:j],
                            self.weight_name)

    def reversed(self) -> "GeodesicPath":
        return GeodesicPath(self.vertices[::-1].copy(), self.seg_lengths[::-1].copy(),
                            self.seg_weighted[::-1].copy(), self.weight_name)

    def to_csv(self, positions: np.ndarray) -> str:
        lines = ["step,vertex," + ",".join(f"x{i}" for i in range(positions.shape[1])) + ",arc,weighted"]
        arc, wt = self.cumulative(), np.concatenate([[0.0], np.cumsum(self.seg_weighted)])
        for k, v in enumerate(self.vertices):
            xs = ",".join(format(float(x), ".17g") for x in positions[v])
            lines.append(f"{k},{int(v)},{xs},{arc[k]:.17g},{wt[k]:.17g}")
        return "\n".join(lines) + "\n"


class MetricEngine:
    """Shortest-path queries under one weight field; read-only and thread-safe."""

    def __init__(self, graph: MetricGraph, weight: WeightField):
        self.graph = graph
        self.weight = weight
        self.edge_costs = weight.edge_costs(graph)
        self.costs = graph.csr_costs(self.edge_costs)
        self.len_csr = graph.csr_costs(graph.lengths)

    def dijkstra(self, sources, offsets=None, mask=None, limit=math.inf):
        src = np.atleast_1d(np.asarray(sources, dtype=np.int64))
        off = np.zeros(len(src)) if offsets is None else np.asarray(offsets, dtype=float)
        msk = self.graph.all_vertices if mask is None else np.asarray(mask, dtype=bool)
        g = self.graph
        return _kernels.dijkstra(g.indptr, g.indices, self.costs, src, off, float(limit), msk)

    def distances(self, sources, offsets=None, mask=None, limit=math.inf) -> np.ndarray:
        return self.dijkstra(sources, offsets, mask, limit)[0]

    def path_to(self, dist_to_target: np.ndarray, start: int) -> GeodesicPath:
        """Lexicographically smallest shortest path from ``start`` down a distance field."""
        if not np.isfinite(dist_to_target[start]):
            raise RuntimeError(f"vertex {start} is unreachable: the graph is corrupted or the mask disconnects it")
        g = self.graph
        verts = _kernels.lexicographic_walk(g.indptr, g.indices, self.costs, dist_to_target, int(start), 1e-12)
        if len(verts) == 0:
            raise RuntimeError("shortest-path walk failed")
        return self._assemble(verts)

    def _assemble(self, verts: np.ndarray) -> GeodesicPath:
        g = self.graph
        lens = np.empty(len(verts) - 1)
        wts = np.empty(len(verts) - 1)
        for k in range(len(verts) - 1):
            u, v = verts[k], verts[k + 1]
            lo, hi = g.indptr[u], g.indptr[u + 1]
            j = lo + np.searchsorted(g.indices[lo:hi], v)
            if j >= hi or g.indices[j] != v:
                raise ValueError(f"curve leaves the graph: ({u}, {v}) is not an edge")
            lens[k] = self.len_csr[j]
            wts[k] = self.costs[j]
        return GeodesicPath(np.asarray(verts, dtype=np.int64), lens, wts, self.weight.name)

    def curve(self, verts) -> GeodesicPath:
        """Wrap an explicit vertex sequence, validating its edges."""
        verts = np.asarray(verts, dtype=np.int64)
        if len(verts) < 2:
            raise ValueError("a curve needs at least two vertices")
        if verts.min() < 0 or verts.max() >= self.graph.n:
            raise ValueError("curve leaves the graph: vertex index out of range")
        return self._assemble(verts)

    def path(self, p: int, q: int, mask=None) -> GeodesicPath:
        if p == q:
            raise ValueError("shortest_path needs distinct endpoints")
        dq = self.distances([q], mask=mask)
        if mask is not None and not (mask[p] and mask[q]):
            raise RuntimeError("endpoint excluded by the mask")
        return self.path_to(dq, p)


def shortest_path(graph: MetricGraph, weight: WeightField, p: int, q: int) -> GeodesicPath:
    """Exact graph geodesic from p to q (deterministic tie-break)."""
    return MetricEngine(graph, weight).path(p, q)


def distance_matrix(graph: MetricGraph, weight: WeightField, sources, workers=None,
                    engine: MetricEngine | None = None) -> np.ndarray:
    """Row i holds the single-source distances from ``sources[i]``."""
    src = np.atleast_1d(np.asarray(sources, dtype=np.int64))
    if len(src) == 0:
        raise ValueError("sources must be nonempty")
    if src.min() < 0 or src.max() >= graph.n:
        raise ValueError("source index out of range")
    eng = engine or MetricEngine(graph, weight)
    rows = ordered_map(lambda s: eng.distances([s]), src, workers)
    return np.array(rows)


def sample_pairs(graph: MetricGraph, n_pairs: int, seed: int, n_sources: int | None = None,
                 exclude=None) -> np.ndarray:
    """Random vertex pairs drawn from a small pool of sources (one Dijkstra each)."""
    rng = np.random.default_rng(seed)
    allowed = np.arange(graph.n) if exclude is None else np.flatnonzero(~exclude)
    n_sources = n_sources or max(1, int(math.ceil(math.sqrt(n_pairs))))
    pool = rng.choice(allowed, size=min(n_sources, len(allowed)), replace=False)
    xs = pool[rng.integers(0, len(pool), size=n_pairs)]
    ys = allowed[rng.integers(0, len(allowed), size=n_pairs)]
    return np.column_stack([xs, ys])


def _pair_distances(graph, engines: dict[str, MetricEngine], pairs, mask=None):
    out = {k: np.empty(len(pairs)) for k in engines}
    for x in np.unique(pairs[:, 0]):
        rows = np.flatnonzero(pairs[:, 0] == x)
        for k, eng in engines.items():
            d = eng.distances([x], mask=mask)
            out[k][rows] = d[pairs[rows, 1]]
    return out


def check_inequality_suite(
    graph: MetricGraph,
    field,
    pairs=None,
    n_pairs: int = 200,
    seed: int = 0,
    eps_h: float = 0.15,
    a_hat: float | None = None,
    L_hat: float | None = None,
) -> dict[str, Any]:
    """Comparison inequalities between d, k and d_b on sampled pairs.

    Clauses, each allowed a relative slack ``eps_h``:

    1. ``d_b >= k / L_hat`` and ``k >= log((1 + d/ds(x))(1 + d/ds(y))) / 2``
    2. ``log(1 + d * max b) <= d_b``
    3. ``|log delta(x) - log delta(y)| <= d_b``
    4. ``d_b <= 4 a_hat^2 log(1 + d * max b)``

    Clause 1 is skipped without a singular set, clause 4 without ``a_hat``.
    The truncation collar, where b is clipped by the puncture (see
    :func:`sigmaunfold.sigma.truncation_collar`), is removed from the domain:
    pairs avoid it and all distances are taken in its complement, so no
    d_b-geodesic shortcuts through the clipped values. Every clause follows
    from a pointwise bound integrated along curves, so it holds on any
    subdomain with consistently restricted metrics.
    """
    from .sigma import lipschitz_constant, truncation_collar

    if field.trivial:
        raise ValueError("totally geodesic: the sigma-metric vanishes")
    collar = truncation_collar(graph, field)
    if pairs is None:
        pairs = sample_pairs(graph, n_pairs, seed, exclude=collar)
    pairs = np.asarray(pairs, dtype=np.int64).reshape(-1, 2)
    if np.any(collar[pairs]):
        raise ValueError("pairs must avoid the truncation collar")
    L = lipschitz_constant(graph, field.delta) if L_hat is None else float(L_hat)
    engines = {
        "d": MetricEngine(graph, weight_field(graph, "intrinsic")),
        "d_b": MetricEngine(graph, weight_field(graph, "sigma", field)),
    }
    if graph.has_sigma:
        engines["k"] = MetricEngine(graph, weight_field(graph, "quasi_hyperbolic"))
    D = _pair_distances(graph, engines, pairs, mask=~collar if collar.any() else None)
    notices = []
    reach = np.all([np.isfinite(v) for v in D.values()], axis=0)
    if not reach.all():
        notices.append(f"{int((~reach).sum())} pairs dropped: separated by the collar")
        pairs, D = pairs[reach], {k: v[reach] for k, v in D.items()}
    if len(pairs) == 0:
        raise ValueError("no pair is connected outside the truncation collar")
    x, y = pairs[:, 0], pairs[:, 1]
    b, delta = field.b, field.delta
    d, db = D["d"], D["d_b"]
    bmax = np.maximum(b[x], b[y])
    one = 1.0 + eps_h
    clauses: dict[str, tuple[np.ndarray, np.ndarray]] = {}
    if graph.has_sigma:
        k = D["k"]
        ds = graph.dist_sigma
        clauses["1a_db_vs_k"] = (k / L, db * one)
        clauses["1b_k_lower"] = (0.5 * np.log((1 + d / ds[x]) * (1 + d / ds[y])), k * one)
    else:
        notices.append("clause 1 skipped: the singular set is empty")
    clauses["2_log_lower"] = (np.log1p(d * bmax), db * one)
    clauses["3_log_delta"] = (np.abs(np.log(delta[x]) - np.log(delta[y])), db * one)
    if a_hat is not None:
        clauses["4_upper"] = (db, 4 * a_hat**2 * np.log1p(d * bmax) * one)
    else:
        notices.append("clause 4 skipped: no uniformity estimate supplied")
    report: dict[str, Any] = {"pairs": int(len(pairs)), "tolerance": eps_h, "L_hat": L,
                              "a_hat": a_hat, "clauses": {}, "notices": notices,
                              "lipschitz_placement": "d_b >= k / L_hat (agrees with d_b >= L_hat * k at L_hat = 1)"}
    total = 0
    for name, (lhs, rhs) in clauses.items():
        margin = rhs - lhs
        bad = int(np.count_nonzero(margin < -1e-12 * np.maximum(1.0, np.abs(rhs))))
        total += bad
        w = int(np.argmin(margin))
        report["clauses"][name] = {
            "min_margin": float(margin.min()),
            "mean_margin": float(margin.mean()),
            "violations": bad,
            "worst_pair": [int(x[w]), int(y[w])],
        }
    report["violations"] = total
    report["pass"] = total == 0
    return report


def bounded_geometry_report(graph: MetricGraph, weight: WeightField, n_centers: int = 50,
                            rho: float = 0.1, band=(0.25, 4.0), seed: int = 0) -> dict[str, Any]:
    """Conformal ball volume over flat ball volume at radius rho, for sampled centres.

    The conformal volume of a ball is the sum of ``area * w^dim`` over its
    vertices; the flat reference is the volume of a radius-rho ball in R^dim.
    """
    rng = np.random.default_rng(seed)
    interior = np.flatnonzero(~(graph.near_sigma | graph.outer))
    centers = np.sort(rng.choice(interior, size=min(n_centers, len(interior)), replace=False))
    eng = MetricEngine(graph, weight)
    k = graph.dim
    unit = math.pi ** (k / 2) / math.gamma(k / 2 + 1)
    ratios = []
    for c in centers:
        d = eng.distances([c], limit=rho)
        inside = np.isfinite(d)
        vol = float(np.sum(graph.areas[inside] * weight.w[inside] ** k))
        ratios.append(vol / (unit * rho**k))
    ratios = np.array(ratios)
    return {
        "rho": rho,
        "centers": int(len(centers)),
        "ratio_min": float(ratios.min()),
        "ratio_max": float(ratios.max()),
        "band": list(band),
        "pass": bool(np.all((ratios >= band[0]) & (ratios <= band[1]))),
    }


def same_ray_oracle(graph: MetricGraph, field, n_pairs: int = 50, seed: int = 0,
                    band=(0.3, 5.0)) -> dict[str, Any]:
    """Same-ray pairs on a cone graph against the cylinder closed forms.

    On a cone ``d_b = (a0 + alpha) log(r2 / r1)`` and ``k = log(r2 / r1)`` for
    two points of one radial ray. Pairs are drawn on random rays (fixed link
    angles of the chart) with both radii inside ``band``.
    """
    from .models import ProductCone

    if not isinstance(graph.model, ProductCone):
        raise ValueError("the same-ray oracle needs a cone graph")
    r = graph.radius()
    ang = np.round(graph.chart[:, 1:], 12)
    inside = (r >= band[0]) & (r <= band[1]) & ~(graph.near_sigma | graph.outer)
    _, ray_id = np.unique(ang, axis=0, return_inverse=True)
    ray_id = ray_id.ravel()
    rays = np.unique(ray_id[inside])
    rng = np.random.default_rng(seed)
    eng_b = MetricEngine(graph, weight_field(graph, "sigma", field))
    eng_k = MetricEngine(graph, weight_field(graph, "quasi_hyperbolic"))
    scale = graph.model.a0 + field.alpha
    rows = []
    for _ in range(n_pairs):
        ray = np.flatnonzero(inside & (ray_id == rays[rng.integers(len(rays))]))
        i, j = np.sort(rng.choice(len(ray), size=2, replace=False))
        x, y = ray[i], ray[j]
        if r[x] > r[y]:
            x, y = y, x
        lr = math.log(r[y] / r[x])
        db = float(eng_b.distances([x])[y])
        k = float(eng_k.distances([x])[y])
        rows.append((int(x), int(y), lr, db, scale * lr, k))
    arr = np.array([row[2:] for row in rows])
    err_b = np.abs(arr[:, 1] / arr[:, 2] - 1.0)
    err_k = np.abs(arr[:, 3] / arr[:, 0] - 1.0)
    return {
        "pairs": [list(row) for row in rows],
        "max_rel_err_db": float(err_b.max()),
        "max_rel_err_k": float(err_k.max()),
        "pass": bool(err_b.max() <= 0.05 and err_k.max() <= 0.05),
    }
