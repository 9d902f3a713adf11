"""Ray bundles under the sigma-metric and the boundary correspondence.

Rays are d_b shortest paths from a base vertex to the two kinds of fronts a
truncated graph has: the rings around singular points (rays of finite
intrinsic length, one class per singular component) and the outer truncation
(rays of unbounded intrinsic length, the single class at infinity).
Equivalence is measured by the d_b-Hausdorff distance between rays.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Any

import numpy as np
from scipy.sparse import csr_matrix
from scipy.sparse.csgraph import connected_components

from ._threads import ordered_map
from .graph import MetricGraph
from .metricspace import GeodesicPath, MetricEngine, weight_field

__all__ = ["Ray", "RayBundle", "trace_rays", "verify_boundary_map", "hausdorff_matrix",
           "INFINITY_TAG"]

INFINITY_TAG = "infinity"
SUBSAMPLE = 4  # Hausdorff distances are evaluated on every 4th ray vertex


@dataclass(frozen=True)
class Ray:
    path: GeodesicPath  # base -> target
    target: int
    kind: str  # "sigma" or INFINITY_TAG
    component: int  # singular component of the target, -1 for outer rays

    @property
    def intrinsic_length(self) -> float:
        return self.path.intrinsic_length

    @property
    def db_length(self) -> float:
        return self.path.length


@dataclass(frozen=True, eq=False)
class RayBundle:
    base: int
    rays: list[Ray]
    hausdorff: np.ndarray  # pairwise d_b-Hausdorff distances between rays
    threshold: float
    labels: np.ndarray  # class index per ray
    class_targets: list[str]  # "sigma:<component>" or INFINITY_TAG per class
    n_components: int  # singular components present in the graph
    meta: dict[str, Any] = field(default_factory=dict)

    @property
    def n_classes(self) -> int:
        return len(self.class_targets)

    def summary(self) -> dict[str, Any]:
        return {
            "base": self.base,
            "n_rays": len(self.rays),
            "classes": self.n_classes,
            "class_targets": self.class_targets,
            "threshold": self.threshold,
            "rays": [{"target": r.target, "kind": r.kind, "component": r.component,
                      "intrinsic_length": r.intrinsic_length, "db_length": r.db_length,
                      "class": int(c)} for r, c in zip(self.rays, self.labels)],
            **self.meta,
        }


def _components(graph: MetricGraph, flag: np.ndarray) -> np.ndarray:
    """Connected-component label per flagged vertex, ``-1`` elsewhere."""
    labels = np.full(graph.n, -1, dtype=np.int64)
    idx = np.flatnonzero(flag)
    if len(idx) == 0:
        return labels
    e = graph.edges[flag[graph.edges[:, 0]] & flag[graph.edges[:, 1]]]
    pos = np.full(graph.n, -1, dtype=np.int64)
    pos[idx] = np.arange(len(idx))
    mat = csr_matrix((np.ones(len(e)), (pos[e[:, 0]], pos[e[:, 1]])), shape=(len(idx), len(idx)))
    _, lab = connected_components(mat, directed=False)
    # number components by their smallest vertex
    _, first = np.unique(lab, return_index=True)
    rank = np.empty(len(first), dtype=np.int64)
    rank[np.argsort(first)] = np.arange(len(first))
    labels[idx] = rank[lab]
    return labels


def _spread(members: np.ndarray, k: int) -> np.ndarray:
    pick = np.unique(np.linspace(0, len(members) - 1, min(k, len(members))).round().astype(int))
    return members[pick]


def hausdorff_matrix(engine: MetricEngine, paths: list[GeodesicPath], workers=None) -> np.ndarray:
    """Symmetric d_b-Hausdorff distances; exact distance to each full ray,
    evaluated on every 4th vertex (plus the endpoint) of the other."""
    k = len(paths)
    if k == 0:
        return np.zeros((0, 0))
    samples = [np.unique(np.append(p.vertices[::SUBSAMPLE], p.vertices[-1])) for p in paths]
    fields = ordered_map(lambda p: engine.distances(p.vertices), paths, workers)
    # one-sided: D[i, j] = max over samples of ray j of the distance to ray i
    D = np.array([[float(fields[i][samples[j]].max()) for j in range(k)] for i in range(k)])
    H = np.maximum(D, D.T)
    np.fill_diagonal(H, 0.0)
    return H


def trace_rays(
    graph: MetricGraph,
    field,
    base: int,
    targets: str = "all",
    per_component: int = 6,
    a_hat: float = 1.0,
    delta_thin: float = 0.0,
    threshold: float | None = None,
    workers: int | None = None,
) -> RayBundle:
    """d_b shortest paths from ``base`` to evenly spread front vertices.

    Parameters
    ----------
    targets : {"all", "sigma", "outer"}
        Which fronts receive rays.
    per_component : int
        Rays per connected component of each front.
    a_hat, delta_thin : float
        Measured uniformity constant and thinness, entering the equivalence
        threshold ``8 a_hat^2 + 2 delta_thin`` unless ``threshold`` is given.

    Raises
    ------
    ValueError
        For an out-of-range or non-interior base, or a base that is a target.
    """
    if targets not in ("all", "sigma", "outer"):
        raise ValueError(f"targets must be 'all', 'sigma' or 'outer', got {targets!r}")
    if not 0 <= base < graph.n:
        raise ValueError(f"base vertex {base} out of range")
    if field.trivial:
        raise ValueError("totally geodesic: the sigma-metric vanishes and rays are undefined")
    sig_lab = _components(graph, graph.near_sigma)
    out_lab = _components(graph, graph.outer)
    chosen: list[tuple[int, str, int]] = []
    if targets in ("all", "sigma"):
        for c in range(sig_lab.max() + 1):
            for v in _spread(np.flatnonzero(sig_lab == c), per_component):
                chosen.append((int(v), "sigma", c))
    if targets in ("all", "outer"):
        for c in range(out_lab.max() + 1):
            for v in _spread(np.flatnonzero(out_lab == c), per_component):
                chosen.append((int(v), INFINITY_TAG, -1))
    if any(v == base for v, _, _ in chosen):
        raise ValueError(f"base vertex {base} coincides with a ray target")
    if graph.near_sigma[base] or graph.outer[base]:
        raise ValueError(f"base vertex {base} must be interior (not on a front)")

    eng = MetricEngine(graph, weight_field(graph, "sigma", field))
    d0 = eng.distances([base])
    rays = [Ray(eng.path_to(d0, v).reversed(), v, kind, comp) for v, kind, comp in chosen]
    H = hausdorff_matrix(eng, [r.path for r in rays], workers)

    # classes are the fronts the rays end on
    tags = [f"sigma:{r.component}" if r.kind == "sigma" else INFINITY_TAG for r in rays]
    class_targets = sorted(set(tags), key=lambda t: (t == INFINITY_TAG, t))
    labels = np.array([class_targets.index(t) for t in tags], dtype=np.int64)
    thr = float(threshold) if threshold is not None else 8.0 * a_hat**2 + 2.0 * delta_thin
    return RayBundle(base=int(base), rays=rays, hausdorff=H, threshold=thr, labels=labels,
                     class_targets=class_targets, n_components=int(sig_lab.max() + 1),
                     meta={"a_hat": a_hat, "delta_thin": delta_thin, "targets": targets,
                           "alpha": field.alpha})


def verify_boundary_map(bundle: RayBundle, graph: MetricGraph, field=None,
                        eps_h: float = 0.15) -> dict[str, Any]:
    """Check the bijection surrogates between ray classes and fronts.

    surjectivity
        Every singular component is the endpoint of some ray.
    coherence
        Rays of one class stay within the threshold of each other, and the
        endpoints of a singular class lie within ``10 h``.
    injectivity
        Rays of different classes are farther apart (d_b-Hausdorff) than any
        two rays of one class.
    infinity_unique
        All outer rays form a single class.
    log_delta
        Along every ray, ``|log delta(x) - log delta(y)| <= d_b(x, y) (1 + eps_h)``
        for consecutive vertices (only with ``field``).
    """
    rays, H, lab = bundle.rays, bundle.hausdorff, bundle.labels
    report: dict[str, Any] = {"classes": bundle.n_classes, "class_targets": bundle.class_targets,
                              "threshold": bundle.threshold, "n_rays": len(rays)}
    if not rays:
        empty = bundle.n_components == 0
        report.update({"note": "Gromov boundary is empty" if empty else "no rays traced",
                       "surjectivity": empty, "pass": empty})
        return report

    hit = {r.component for r in rays if r.kind == "sigma"}
    surjective = hit == set(range(bundle.n_components))

    same = lab[:, None] == lab[None, :]
    intra = float(H[same].max())
    off = ~same
    inter = float(H[off].min()) if off.any() else np.inf
    spreads = []
    for c, tag in enumerate(bundle.class_targets):
        if tag == INFINITY_TAG:
            continue
        ends = np.array([r.target for r, l in zip(rays, lab) if l == c])
        spreads.append(float(graph.intrinsic_from(ends[:1])[ends].max()))
    spread = max(spreads, default=0.0)
    coherent = intra <= bundle.threshold and spread <= 10.0 * graph.h

    outer = np.array([r.kind == INFINITY_TAG for r in rays])
    outer_max = float(H[np.ix_(outer, outer)].max()) if outer.any() else 0.0
    infinity_unique = outer_max <= bundle.threshold

    report.update({
        "surjectivity": bool(surjective),
        "components_hit": sorted(hit),
        "coherence": bool(coherent),
        "max_intra_class": intra,
        "max_endpoint_spread": spread,
        "endpoint_spread_limit": 10.0 * graph.h,
        "injectivity": bool(inter > intra),
        "min_inter_class": None if np.isinf(inter) else inter,
        "separation_margin": None if np.isinf(inter) else inter - intra,
        "threshold_margin": None if np.isinf(inter) else inter - bundle.threshold,
        "infinity_unique": bool(infinity_unique),
        "max_outer_pair": outer_max,
    })
    ok = surjective and coherent and inter > intra and infinity_unique
    if field is not None:
        worst = 0.0
        for r in rays:
            ld = np.log(field.delta[r.path.vertices])
            ratio = np.abs(np.diff(ld)) / r.path.seg_weighted
            worst = max(worst, float(ratio.max()))
        report["log_delta_ratio"] = worst
        report["log_delta"] = worst <= 1.0 + eps_h
        ok = ok and worst <= 1.0 + eps_h
    report["pass"] = bool(ok)
    return report
