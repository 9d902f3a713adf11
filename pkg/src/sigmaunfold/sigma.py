"""Metric sigma-transform on graphs and discrete checks of its axioms.

For a vertex x the transform is

    b(x) = sup{c : dist(x, {a >= c}) <= alpha / c},

the largest curvature level whose closed alpha/c-tube still reaches x, which
equals ``max_y min(a(y), alpha / dist(x, y))``. The ladder sweep brackets b
on a geometric grid of levels using vertex tubes. Refinement evaluates the
max-min exactly over the metric graph (``y`` on edges, ``a`` linear along
each edge) inside the ball of radius ``alpha / b_ladder(x)``, which is where
every competitor lies; the refined delta is then exactly 1/alpha-Lipschitz.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any

import numpy as np

from . import _kernels
from ._threads import chunks, ordered_map, worker_count
from .graph import MetricGraph

__all__ = [
    "SigmaField",
    "SigmaError",
    "default_ladder",
    "compute_sigma_field",
    "verify_axioms",
    "interpolation_sweep",
    "AxiomReport",
    "lipschitz_constant",
    "truncation_collar",
    "closed_form_field",
    "field_statistics",
    "refinement_tolerance",
]

DEFAULT_RATIO = 2.0 ** (1.0 / 8.0)
# relative guard on tube membership so that rescaled graphs take identical
# branches despite rounding of lambda * length sums
_GUARD = 1e-9


class SigmaError(ValueError):
    pass


@dataclass(frozen=True, eq=False)
class SigmaField:
    """Per-vertex sigma-transform ``b`` and sigma-distance ``delta = 1/b``.

    Attributes
    ----------
    alpha : float
    b : (n,) array
        Zero everywhere only on totally geodesic graphs.
    ladder : (L,) array
        Ascending levels used by the sweep.
    level : (n,) int array
        Index of the ladder value bracketing b from below.
    refined : (n,) bool array
        Vertices where b is the exact max-min value rather than a ladder value.
    """

    alpha: float
    b: np.ndarray
    ladder: np.ndarray
    level: np.ndarray
    refined: np.ndarray
    graph_id: str
    ratio: float
    monotone_violations: int = 0
    meta: dict[str, Any] = field(default_factory=dict)

    @property
    def delta(self) -> np.ndarray:
        with np.errstate(divide="ignore"):
            return np.where(self.b > 0, 1.0 / np.where(self.b > 0, self.b, 1.0), np.inf)

    @property
    def trivial(self) -> bool:
        return bool(np.all(self.b == 0))

    @property
    def tolerance(self) -> float:
        """Relative bracket width of unrefined values (0 when all refined)."""
        return 0.0 if bool(np.all(self.refined)) else self.ratio - 1.0

    def provenance(self) -> dict[str, Any]:
        return {
            "alpha": self.alpha,
            "graph_id": self.graph_id,
            "ladder": [float(c) for c in self.ladder],
            "ratio": self.ratio,
            "refined_fraction": float(np.mean(self.refined)) if len(self.refined) else 0.0,
            "tolerance": self.tolerance,
            "monotone_violations": self.monotone_violations,
        }

    def dump_csv(self, path) -> None:
        """``vertex,b,delta`` rows plus a JSON provenance header next to it."""
        path = Path(path)
        lines = ["vertex,b,delta"]
        delta = self.delta
        for v in range(len(self.b)):
            lines.append(f"{v},{_fmt(self.b[v])},{_fmt(delta[v])}")
        path.write_text("\n".join(lines) + "\n")
        header = dict(self.provenance(), level=self.level.tolist(), refined=self.refined.astype(int).tolist())
        path.with_suffix(".json").write_text(json.dumps(header, sort_keys=True) + "\n")

    @classmethod
    def load_csv(cls, path) -> "SigmaField":
        path = Path(path)
        data = np.loadtxt(path, delimiter=",", skiprows=1, ndmin=2)
        head = json.loads(path.with_suffix(".json").read_text())
        return cls(
            alpha=float(head["alpha"]),
            b=data[:, 1].copy(),
            ladder=np.array(head["ladder"], dtype=float),
            level=np.array(head["level"], dtype=np.int64),
            refined=np.array(head["refined"], dtype=bool),
            graph_id=head["graph_id"],
            ratio=float(head["ratio"]),
            monotone_violations=int(head["monotone_violations"]),
        )


def _fmt(x):
    return "inf" if np.isinf(x) else format(float(x), ".17g")


def default_ladder(a: np.ndarray, ratio: float = DEFAULT_RATIO) -> np.ndarray:
    """Geometric levels from (min positive a)/4 up to past 4 * max a."""
    pos = a[a > 0]
    if len(pos) == 0:
        raise SigmaError("no positive |A| values: the superlevel sets are empty")
    lo, hi = pos.min() / 4.0, pos.max() * 4.0
    n = int(math.ceil(math.log(hi / lo) / math.log(ratio))) + 1
    return lo * ratio ** np.arange(n)


def _tube_members(graph: MetricGraph, costs, a, a_ok, c, alpha):
    src = np.flatnonzero(a_ok & (a >= c * (1.0 - _GUARD)))
    if len(src) == 0:
        return np.zeros(graph.n, bool)
    radius = alpha / c
    d, _, _ = _kernels.dijkstra(
        graph.indptr, graph.indices, costs, src, np.zeros(len(src)),
        radius * (1.0 + 4 * _GUARD), graph.all_vertices,
    )
    return d * c <= alpha * (1.0 + _GUARD)


def compute_sigma_field(
    graph: MetricGraph,
    alpha: float = 1.0,
    ladder: np.ndarray | None = None,
    ratio: float = DEFAULT_RATIO,
    refine: bool | np.ndarray = True,
    workers: int | None = None,
) -> SigmaField:
    """Sigma-transform by a ladder sweep with optional exact refinement.

    Parameters
    ----------
    graph : MetricGraph
    alpha : float
        Tube scale; the sigma-distance is then 1/alpha-Lipschitz.
    ladder : array, optional
        Explicit ascending levels. Defaults to :func:`default_ladder`.
    ratio : float
        Geometric ratio of the default ladder.
    refine : bool or bool mask
        Vertices whose value is replaced by the exact max-min.
    workers : int, optional
        Thread count (``UNFOLD_THREADS`` by default).
    """
    if not (np.isfinite(alpha) and alpha > 0):
        raise SigmaError(f"alpha must be positive, got {alpha!r}")
    n = graph.n
    if graph.totally_geodesic:
        return SigmaField(
            alpha=float(alpha), b=np.zeros(n), ladder=np.zeros(0), level=np.full(n, -1),
            refined=np.ones(n, bool), graph_id=graph.graph_id, ratio=ratio,
        )
    a = np.ascontiguousarray(graph.a, dtype=float)
    a_ok = np.ascontiguousarray(graph.a_reliable & (a > 0))
    if not a_ok.any():
        raise SigmaError(
            "empty superlevel set for every ladder value: |A| vanishes but the graph "
            "is not flagged totally geodesic"
        )
    lad = default_ladder(a[a_ok], ratio) if ladder is None else np.sort(np.asarray(ladder, float))
    if len(lad) == 0 or np.any(lad <= 0):
        raise SigmaError("ladder values must be positive")
    if len(lad) > 1:
        ratio = float(np.max(lad[1:] / lad[:-1]))
    costs = graph.csr_costs(graph.lengths)
    workers = worker_count() if workers is None else workers

    def sweep(levels):
        return ordered_map(lambda c: _tube_members(graph, costs, a, a_ok, c, alpha), levels, workers)

    members = sweep(lad)
    # extend downward until every vertex is reached by some tube
    for _ in range(400):
        if np.logical_or.reduce(members).all():
            break
        step = lad[0] / ratio ** np.arange(1, 9)[::-1]
        lad = np.concatenate([step, lad])
        members = sweep(step) + members
    M = np.array(members)  # (L, n)
    # membership must be true then false along the ascending ladder
    flips = np.sum(M[1:] & ~M[:-1], axis=0)
    violations = int(np.count_nonzero(flips))
    top = np.where(M.any(axis=0), M.shape[0] - 1 - np.argmax(M[::-1], axis=0), -1)
    if np.any(top < 0):
        raise SigmaError("ladder did not reach every vertex")
    b = lad[top].astype(float)

    mask = np.broadcast_to(np.asarray(refine, dtype=bool), (n,)).copy()
    verts = np.flatnonzero(mask)
    # edges rising from a zero of |A| still carry values, so only reliability filters
    a_rel = np.ascontiguousarray(graph.a_reliable)
    if len(verts):
        radii = alpha / b[verts] * (1.0 + 1e-12)

        def run(sl):
            return _kernels.local_maxmin(
                graph.indptr, graph.indices, costs, verts[sl], radii[sl], a, a_rel, float(alpha)
            )

        parts = ordered_map(run, chunks(len(verts), 4 * workers), workers)
        b[verts] = np.concatenate(parts)
    return SigmaField(
        alpha=float(alpha), b=b, ladder=lad, level=top.astype(np.int64), refined=mask,
        graph_id=graph.graph_id, ratio=float(ratio), monotone_violations=violations,
    )


def lipschitz_constant(graph: MetricGraph, delta: np.ndarray) -> float:
    """Edgewise max |delta(u) - delta(v)| / len; 0 for the trivial field."""
    if np.all(np.isinf(delta)):
        return 0.0
    du, dv = delta[graph.edges[:, 0]], delta[graph.edges[:, 1]]
    return float(np.max(np.abs(du - dv) / graph.lengths))


@dataclass
class AxiomReport:
    sections: dict[str, dict[str, Any]]

    @property
    def passed(self) -> bool:
        return all(sec.get("pass", True) for sec in self.sections.values())

    @property
    def violations(self) -> list[str]:
        return [f"{k}: {v.get('detail', 'failed')}" for k, v in self.sections.items() if not v.get("pass", True)]

    @property
    def L_hat(self) -> float:
        return self.sections["S3"]["L_hat"]

    def to_dict(self) -> dict[str, Any]:
        return {"pass": self.passed, "violations": self.violations, **self.sections}


def _divergence_bands(graph: MetricGraph, b: np.ndarray, n_bands: int = 6) -> dict[str, Any]:
    ds = graph.dist_sigma
    fin = np.isfinite(ds) & graph.a_reliable
    lo, hi = ds[fin].min(), ds[fin].max()
    if not hi > lo:
        return {"vacuous": True, "pass": True}
    edges = np.geomspace(lo, hi, n_bands + 1)
    mins = []
    for k in range(n_bands):
        sel = fin & (ds >= edges[k]) & (ds <= edges[k + 1])
        mins.append(float(b[sel].min()) if sel.any() else float("nan"))
    vals = [m for m in mins if np.isfinite(m)]
    # nearest band first: minima must not increase moving away from the singular set
    bad = sum(1 for x, y in zip(vals, vals[1:]) if y > x * (1 + 1e-12))
    return {"band_edges": edges.tolist(), "band_min_b": mins, "decreasing_violations": bad, "pass": bad == 0}


def verify_axioms(
    field: SigmaField,
    graph: MetricGraph,
    eps_h: float = 0.15,
    scaling: tuple[float, ...] = (2.0, 1.0 / 3.0),
    blowup: bool = True,
) -> AxiomReport:
    """Discrete checks of the four axioms.

    S1 trivial gauge, S2 domination ``b >= |A|`` and divergence towards the
    singular set, S3 the 1/alpha Lipschitz bound of delta, S4 scaling
    anticommutation (bitwise, unrefined ladders) and, on cones, the blow-up
    fixed point ``r * b = const``.
    """
    sec: dict[str, dict[str, Any]] = {}
    b, a = field.b, graph.a
    zero = bool(np.all(b == 0))
    sec["S1"] = {"totally_geodesic": graph.totally_geodesic, "b_identically_zero": zero,
                 "pass": graph.totally_geodesic == zero}
    if zero:
        sec["S2"] = {"vacuous": True, "pass": graph.totally_geodesic}
        sec["S3"] = {"L_hat": 0.0, "bound": 1.0 / field.alpha, "vacuous": True, "pass": True}
        sec["S4"] = {"vacuous": True, "pass": True}
        sec["harnack"] = {"vacuous": True, "pass": True}
        return AxiomReport(sec)

    rel = graph.a_reliable & (a > 0)
    slack = np.where(field.refined, 1e-12, 1.0 - 1.0 / field.ratio)
    ratio = np.where(rel, b / np.where(rel, a, 1.0), np.inf)
    worst = float(np.min(ratio)) if rel.any() else float("inf")
    dom_ok = bool(np.all(b[rel] >= a[rel] * (1.0 - slack[rel])))
    s2 = {"min_b_over_a": worst, "ladder_slack": float(1.0 - 1.0 / field.ratio), "pass": dom_ok}
    if not dom_ok:
        k = int(np.argmin(np.where(rel, b - a * (1 - slack), np.inf)))
        s2["detail"] = f"b < |A| at vertex {k}: b={b[k]:.6g}, |A|={a[k]:.6g}"
    if graph.has_sigma:
        div = _divergence_bands(graph, b)
        s2["divergence"] = div
        s2["pass"] = s2["pass"] and div["pass"]
    else:
        s2["divergence"] = {"vacuous": True, "pass": True}
    sec["S2"] = s2

    L = lipschitz_constant(graph, field.delta)
    bound = 1.0 / field.alpha
    sec["S3"] = {"L_hat": L, "bound": bound, "eps_h": eps_h, "ratio_to_bound": L / bound,
                 "pass": L <= bound * (1.0 + eps_h)}
    if not sec["S3"]["pass"]:
        sec["S3"]["detail"] = f"L_hat = {L:.6g} exceeds {bound:.6g} * (1 + {eps_h})"

    sec["harnack"] = harnack_check(graph, b, L, eps_h)

    s4: dict[str, Any] = {"scaling": {}, "pass": True}
    if scaling:
        base = compute_sigma_field(graph, field.alpha, ladder=field.ladder, refine=False)
        for lam in scaling:
            g2 = graph.scaled(lam)
            f2 = compute_sigma_field(g2, field.alpha, ladder=base.ladder / lam, refine=False)
            expected = base.ladder[base.level] / lam
            same = bool(np.array_equal(f2.b, expected))
            s4["scaling"][repr(float(lam))] = {
                "bitwise_equal": same,
                "mismatches": int(np.count_nonzero(f2.b != expected)),
            }
            s4["pass"] = s4["pass"] and same
    if blowup and graph.model is not None and graph.model.kind in ("simons", "clifford_cone", "cone",
                                                                  "cone_over_sphere_products"):
        s4["blowup"] = blowup_fixed_point(graph, field)
        s4["pass"] = s4["pass"] and s4["blowup"]["pass"]
    sec["S4"] = s4
    return AxiomReport(sec)


def harnack_check(graph: MetricGraph, b: np.ndarray, L: float, eps_h: float) -> dict[str, Any]:
    """|b(v)/b(u) - 1| <= 2 L b(u) len on edges with len <= 1/(2 L b(u))."""
    u, v = graph.edges[:, 0], graph.edges[:, 1]
    u, v = np.concatenate([u, v]), np.concatenate([v, u])
    ln = np.concatenate([graph.lengths, graph.lengths])
    if L == 0:
        # the bound degenerates to b being constant along edges
        pos = b[u] > 0
        same = bool(np.all(b[u[pos]] == b[v[pos]]))
        return {"edges_checked": int(pos.sum()), "worst_ratio": 0.0 if same else float("inf"), "pass": same}
    ok = (b[u] > 0) & (ln <= 1.0 / (2.0 * L * b[u]))
    lhs = np.abs(b[v[ok]] / b[u[ok]] - 1.0)
    rhs = 2.0 * L * b[u[ok]] * ln[ok] * (1.0 + eps_h)
    worst = float(np.max(lhs / rhs)) if ok.any() else 0.0
    return {"edges_checked": int(ok.sum()), "worst_ratio": worst, "pass": worst <= 1.0}


def blowup_fixed_point(graph: MetricGraph, field: SigmaField, lam: float = 0.5, tol: float = 0.05):
    """Compare radial profiles of r * b on a cone graph and on its rescaling.

    The rescaled graph realizes the same cone over a shifted radial window, so
    a scale-invariant transform gives the same profile as a function of r.
    Radii within a factor 2 of either truncation are excluded.
    """
    g2 = graph.scaled(lam)
    f2 = compute_sigma_field(g2, field.alpha, refine=field.refined)
    r1, r2 = graph.radius(), g2.radius()
    lo = max(r1.min(), r2.min()) * 2.0
    hi = min(r1.max(), r2.max()) / 2.0
    if not hi > lo:
        return {"vacuous": True, "pass": True}

    def profile(r, b):
        bins = np.geomspace(lo, hi, 9)
        idx = np.digitize(r, bins) - 1
        return np.array([np.median(r[idx == k] * b[idx == k]) for k in range(8)])

    p1, p2 = profile(r1, field.b), profile(r2, f2.b)
    slack = tol + (0.0 if np.all(field.refined) else field.ratio - 1.0)
    err = float(np.max(np.abs(p1 / p2 - 1.0)))
    return {"radii": [lo, hi], "profile": p1.tolist(), "profile_rescaled": p2.tolist(),
            "max_rel_diff": err, "tolerance": slack, "pass": err <= slack}


def interpolation_sweep(
    graph: MetricGraph,
    alphas,
    band: tuple[float, float],
    ratio: float = DEFAULT_RATIO,
) -> list[dict[str, Any]]:
    """Band sup-errors of b_alpha against |A| and alpha / dist_sigma.

    ``band`` selects vertices by distance to the singular set, or by the
    absolute first chart coordinate when the singular set is empty.
    Consecutive alphas are also checked for the pointwise order b_alpha >= b_beta.
    """
    alphas = sorted(float(x) for x in alphas)
    if not alphas or alphas[0] <= 0:
        raise SigmaError("alphas must be positive")
    if graph.totally_geodesic:
        raise SigmaError("interpolation sweep needs a non-totally-geodesic graph")
    lo, hi = band
    key = graph.dist_sigma if graph.has_sigma else np.abs(graph.chart[:, 0]) if graph.chart.shape[1] else None
    if key is None:
        raise SigmaError("band selection needs a singular set or chart coordinates")
    sel = (key >= lo) & (key <= hi)
    if not sel.any():
        raise SigmaError(f"band [{lo}, {hi}] contains no vertices")
    if np.any(sel & (graph.near_sigma | graph.outer)):
        raise SigmaError(f"band [{lo}, {hi}] touches flagged truncation vertices")
    rows = []
    prev = None
    for alpha in alphas:
        f = compute_sigma_field(graph, alpha, ratio=ratio, refine=sel)
        b = f.b
        row: dict[str, Any] = {"alpha": alpha, "sup_b_minus_a": float(np.max(np.abs(b[sel] - graph.a[sel])))}
        if graph.has_sigma:
            row["sup_b_over_alpha_minus_inv_dist"] = float(
                np.max(np.abs(b[sel] / alpha - 1.0 / graph.dist_sigma[sel]))
            )
        if prev is not None:
            # larger alpha must dominate
            row["min_ratio_to_previous"] = float(np.min(b[sel] / prev[sel]))
            row["monotone"] = bool(np.all(b[sel] >= prev[sel] * (1 - 1e-12)))
        rows.append(row)
        prev = b
    return rows


def truncation_collar(graph: MetricGraph, field: SigmaField) -> np.ndarray:
    """Vertices whose ball of radius alpha/b meets the near-singular ring.

    There the tube defining b is clipped by the puncture, so b undershoots
    the value it has on the untruncated surface.
    """
    if field.trivial or not graph.near_sigma.any():
        return np.zeros(graph.n, bool)
    dn = graph.intrinsic_from(np.flatnonzero(graph.near_sigma))
    return dn <= field.alpha / field.b


def closed_form_field(graph: MetricGraph, alpha: float = 1.0) -> SigmaField:
    """Continuum transform ``(a0 + alpha) / r`` on a cone graph.

    Useful on patches that do not contain the inner part of the cone, where
    the graph transform would be clipped.
    """
    from .models import ProductCone

    if not isinstance(graph.model, ProductCone):
        raise SigmaError("the closed form is available on cone graphs only")
    b = (graph.model.a0 + alpha) / graph.radius()
    n = graph.n
    return SigmaField(alpha=float(alpha), b=b, ladder=np.zeros(0), level=np.full(n, -1),
                      refined=np.ones(n, bool), graph_id=graph.graph_id, ratio=1.0,
                      meta={"closed_form": True})


def field_statistics(graph: MetricGraph, field: SigmaField) -> dict[str, float]:
    """Resolution-independent summaries of a field for h -> h/2 comparisons.

    Area-weighted quartiles of b over vertices off the fronts and outside the
    truncation collar, and the edgewise Lipschitz constant of delta.
    """
    if field.trivial:
        return {"L_hat": 0.0}
    keep = ~(graph.near_sigma | graph.outer | truncation_collar(graph, field))
    if not keep.any():
        keep = np.ones(graph.n, bool)
    b, w = field.b[keep], graph.areas[keep]
    order = np.argsort(b, kind="stable")
    cw = np.cumsum(w[order]) / w.sum()
    q = {f"b_q{int(100 * t)}": float(b[order][np.searchsorted(cw, t)]) for t in (0.25, 0.5, 0.75)}
    return {"L_hat": lipschitz_constant(graph, field.delta), **q}


def refinement_tolerance(coarse: dict[str, float], fine: dict[str, float],
                         floor: float = 0.02) -> dict[str, Any]:
    """Slack ``max(floor, 2 * max relative change)`` between two resolutions."""
    changes = {}
    for k, v in coarse.items():
        w = fine.get(k)
        if w is None:
            continue
        changes[k] = 0.0 if v == w else abs(w - v) / max(abs(v), abs(w))
    worst = max(changes.values(), default=0.0)
    return {"relative_changes": changes, "max_relative_change": worst,
            "eps_h": max(floor, 2.0 * worst)}
