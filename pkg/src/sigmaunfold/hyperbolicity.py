"""Sampled Gromov-hyperbolicity estimates for graph metrics.

Three statistics are reported raw: the thin-triangle defect (max distance
from a point of one geodesic side to the union of the other two), the
four-point defect, and the rough-starlikeness radius around geodesics from a
base vertex towards the truncation fronts.
"""

from __future__ import annotations

import math
from typing import Any

import numpy as np

from ._threads import ordered_map
from .graph import MetricGraph
from .metricspace import MetricEngine, WeightField

__all__ = [
    "estimate_thinness",
    "four_point_delta",
    "four_point_defects",
    "delta_formula",
    "check_rough_starlike",
    "hyperbolicity_report",
]


def _engine(graph, weight, engine):
    return engine if engine is not None else MetricEngine(graph, weight)


def _triangle_defect(eng: MetricEngine, tri) -> float:
    x, y, z = (int(v) for v in tri)
    if len({x, y, z}) < 3:
        return 0.0
    dist = {v: eng.distances([v]) for v in (x, y, z)}
    sides = [eng.path_to(dist[y], x).vertices, eng.path_to(dist[z], y).vertices,
             eng.path_to(dist[x], z).vertices]
    worst = 0.0
    for i in range(3):
        others = np.unique(np.concatenate([sides[(i + 1) % 3], sides[(i + 2) % 3]]))
        d = eng.distances(others)
        worst = max(worst, float(d[sides[i]].max()))
    return worst


def estimate_thinness(
    graph: MetricGraph,
    weight: WeightField,
    n_triangles: int = 20,
    seed: int = 0,
    triples=None,
    candidates=None,
    engine: MetricEngine | None = None,
    workers: int | None = None,
) -> dict[str, Any]:
    """Max thin-triangle defect over sampled geodesic triangles.

    Triples are drawn one after another from ``default_rng(seed)``, so a
    larger sample always extends a smaller one.
    """
    if n_triangles < 1 and triples is None:
        raise ValueError("n_triangles must be at least 1")
    eng = _engine(graph, weight, engine)
    if triples is None:
        pool = np.arange(graph.n) if candidates is None else np.flatnonzero(candidates)
        rng = np.random.default_rng(seed)
        triples = pool[rng.integers(0, len(pool), size=(n_triangles, 3))]
    triples = np.asarray(triples, dtype=np.int64).reshape(-1, 3)
    defects = np.array(ordered_map(lambda t: _triangle_defect(eng, t), triples, workers))
    k = int(np.argmax(defects))
    return {"delta_thin": float(defects[k]), "n_triangles": int(len(triples)),
            "worst_triple": triples[k].tolist(), "defects": defects.tolist(), "seed": seed}


def four_point_defects(D: np.ndarray, quads: np.ndarray) -> np.ndarray:
    """(largest - second largest of the three pair sums) / 2 per quadruple."""
    x, y, z, w = quads.T
    s = np.stack([D[x, y] + D[z, w], D[x, z] + D[y, w], D[x, w] + D[y, z]], axis=1)
    s.sort(axis=1)
    return 0.5 * (s[:, 2] - s[:, 1])


def four_point_delta(
    graph: MetricGraph,
    weight: WeightField,
    n_quadruples: int = 2000,
    seed: int = 0,
    pool_size: int = 64,
    candidates=None,
    engine: MetricEngine | None = None,
    workers: int | None = None,
) -> dict[str, Any]:
    """Max four-point defect over quadruples drawn from a vertex pool.

    The pool (``pool_size`` vertices, fixed by ``seed``) gets an exact
    distance matrix; quadruples are then drawn sequentially from the same
    generator, so runs with more quadruples extend runs with fewer.
    """
    eng = _engine(graph, weight, engine)
    rng = np.random.default_rng(seed)
    allowed = np.arange(graph.n) if candidates is None else np.flatnonzero(candidates)
    pool = rng.choice(allowed, size=min(pool_size, len(allowed)), replace=False)
    rows = ordered_map(lambda s: eng.distances([s])[pool], pool, workers)
    D = np.array(rows)
    D = np.minimum(D, D.T)  # exact metric is symmetric; remove rounding asymmetry
    quads = rng.integers(0, len(pool), size=(n_quadruples, 4))
    defects = four_point_defects(D, quads)
    k = int(np.argmax(defects))
    return {"delta_4pt": float(defects[k]), "n_quadruples": int(n_quadruples),
            "pool_size": int(len(pool)), "worst_quadruple": pool[quads[k]].tolist(),
            "diameter_pool": float(D.max()), "seed": seed}


def delta_formula(a: float) -> float:
    """Explicit hyperbolicity constant ``4 a^2 log(1 + c (2c + 3))`` for a >= 1.

    With ``b = 64 a^4 exp(32 a^4)``, ``b* = exp(4 a^2 log(1 + 4b)) - 1`` and
    ``c = 1 + b* (4a^2 + 1) + 8a^2``. Every intermediate overflows a double,
    so the composition is carried out on logarithms.
    """
    a = float(a)
    if not a >= 1.0:
        raise ValueError(f"delta_formula needs a >= 1, got {a}")
    a2 = a * a
    log_b = math.log(64.0) + 4.0 * math.log(a) + 32.0 * a2 * a2
    log_1p4b = math.log(4.0) + log_b + math.log1p(math.exp(-math.log(4.0) - log_b))
    e = 4.0 * a2 * log_1p4b
    log_bstar = e + math.log1p(-math.exp(-e))
    k = 4.0 * a2 + 1.0
    log_c = log_bstar + math.log(k) + math.log1p(math.exp(math.log1p(8.0 * a2) - log_bstar - math.log(k)))
    # log(1 + c(2c + 3)) = 2 log c + log 2 + log(1 + 3/(2c) + 1/(2c^2))
    inv_c = math.exp(-log_c)
    tail = math.log1p(1.5 * inv_c + 0.5 * inv_c * inv_c)
    return 4.0 * a2 * (2.0 * log_c + math.log(2.0) + tail)


def check_rough_starlike(
    graph: MetricGraph,
    weight: WeightField,
    base: int,
    n_targets: int = 32,
    engine: MetricEngine | None = None,
) -> dict[str, Any]:
    """Max distance from any vertex to the geodesics from ``base`` to the fronts.

    Targets are evenly picked among near-singular and outer vertices (the
    surrogates of rays to the singular set and to infinity). Without flagged
    vertices the targets are the vertices farthest from ``base``.
    """
    if not 0 <= base < graph.n:
        raise ValueError(f"base vertex {base} out of range")
    eng = _engine(graph, weight, engine)
    d0 = eng.distances([base])
    flagged = np.flatnonzero(graph.near_sigma | graph.outer)
    flagged = flagged[flagged != base]
    if len(flagged) == 0:
        flagged = np.argsort(-d0, kind="stable")[:max(1, n_targets)]
    pick = np.unique(np.linspace(0, len(flagged) - 1, min(n_targets, len(flagged))).round().astype(int))
    targets = flagged[pick]
    on = [np.array([base])]
    for t in targets:
        on.append(eng.path_to(d0, int(t)).vertices)
    union = np.unique(np.concatenate(on))
    d = eng.distances(union)
    k = int(np.argmax(d))
    return {"beta": float(d[k]), "base": int(base), "n_targets": int(len(targets)),
            "farthest_vertex": k}


def hyperbolicity_report(
    graph: MetricGraph,
    weight: WeightField,
    n_triangles: int = 20,
    n_quadruples: int = 2000,
    seed: int = 0,
    base: int | None = None,
    a_hat: float | None = None,
    candidates=None,
) -> dict[str, Any]:
    eng = MetricEngine(graph, weight)
    thin = estimate_thinness(graph, weight, n_triangles, seed, candidates=candidates, engine=eng)
    four = four_point_delta(graph, weight, n_quadruples, seed, candidates=candidates, engine=eng)
    if base is None:
        interior = np.flatnonzero(~(graph.near_sigma | graph.outer))
        base = int(interior[len(interior) // 2])
    star = check_rough_starlike(graph, weight, base, engine=eng)
    out: dict[str, Any] = {
        "weight": weight.name,
        "n_triangles": thin["n_triangles"],
        "n_quadruples": four["n_quadruples"],
        "delta_thin": thin["delta_thin"],
        "delta_4pt": four["delta_4pt"],
        "beta": star["beta"],
        "base": star["base"],
        "seed": seed,
    }
    if a_hat is not None:
        bound = delta_formula(max(1.0, a_hat))
        out["paper_bound"] = bound
        out["bound_margin"] = bound - thin["delta_thin"]
        out["pass"] = thin["delta_thin"] <= bound
    return out
