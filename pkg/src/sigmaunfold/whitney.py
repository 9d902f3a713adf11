"""Sigma-adapted covers and Whitney smoothing of the sigma-distance.

Centres are chosen greedily in descending delta with ball radius
``Theta(p) = xi * delta(p)``. The smoothed distance is the bump sum

    delta*(x) = sum_p delta(p) * phi(dist(x, p) / Theta(p)),

with phi = 1 on [0, 1], a quintic falloff on [1, 2] and 0 beyond, so each
bump is supported in the ball of radius ``2 * Theta(p)``.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Any

import numpy as np

from . import _kernels
from .graph import MetricGraph
from .sigma import lipschitz_constant

__all__ = [
    "SigmaCover",
    "SmoothedField",
    "bump",
    "build_cover",
    "smooth_sigma",
    "verify_smoothing",
    "covering_numbers",
]

XI_FACTOR = 1e-3  # xi must not exceed XI_FACTOR / L_hat


def bump(s):
    """phi(s): 1 on [0, 1], 1 - (6u^5 - 15u^4 + 10u^3) with u = s - 1 on [1, 2], 0 after."""
    s = np.asarray(s, dtype=float)
    u = np.clip(s - 1.0, 0.0, 1.0)
    return 1.0 - u**3 * (10.0 - 15.0 * u + 6.0 * u * u)


@dataclass(frozen=True, eq=False)
class SigmaCover:
    xi: float
    centers: np.ndarray
    theta: np.ndarray  # radius per centre
    family: np.ndarray  # family index per centre
    n_families: int
    histograms: dict[float, np.ndarray]  # rho -> counts per vertex
    multiplicity: int  # max covering number of the bump supports
    invariants: dict[str, Any] = field(default_factory=dict)

    def to_csv(self) -> str:
        lines = ["center,theta,family"]
        for c, t, f in zip(self.centers, self.theta, self.family):
            lines.append(f"{int(c)},{t:.17g},{int(f)}")
        return "\n".join(lines) + "\n"

    def summary(self) -> dict[str, Any]:
        return {
            "xi": self.xi,
            "n_centers": int(len(self.centers)),
            "n_families": self.n_families,
            "multiplicity": self.multiplicity,
            "max_covering": {str(k): int(v.max()) for k, v in self.histograms.items()},
            "invariants": self.invariants,
        }


def covering_numbers(graph: MetricGraph, centers, radii, strict: bool = True) -> np.ndarray:
    """Per vertex, the number of (open by default) centre balls containing it."""
    g = graph
    costs = g.csr_costs(g.lengths)
    _, verts, _ = _kernels.balls(g.indptr, g.indices, costs, np.asarray(centers, np.int64),
                                 np.asarray(radii, float), strict)
    return np.bincount(verts, minlength=g.n)


def _families(graph, centers, radii10) -> tuple[np.ndarray, int]:
    """Greedy colouring so that 10 Theta balls within a family are disjoint."""
    g = graph
    costs = g.csr_costs(g.lengths)
    ptr, verts, _ = _kernels.balls(g.indptr, g.indices, costs, centers, radii10, False)
    owner = np.repeat(np.arange(len(centers)), np.diff(ptr))
    # inverted index vertex -> centres whose ball contains it
    order = np.argsort(verts, kind="stable")
    vs, ow = verts[order], owner[order]
    vptr = np.searchsorted(vs, np.arange(g.n + 1))
    fam = _kernels.color_families(ptr, verts, vptr, ow)
    return fam, int(fam.max()) + 1 if len(fam) else 0


def build_cover(graph: MetricGraph, field, xi: float, L_hat: float | None = None,
                rhos=(1.0, 2.0, 10.0)) -> SigmaCover:
    """Greedy sigma-adapted cover with radii ``xi * delta``.

    Raises
    ------
    ValueError
        For a trivial field or ``xi`` outside ``(0, 1e-3 / L_hat]``.
    """
    if field.trivial:
        raise ValueError("totally geodesic: there is no sigma-adapted cover of a trivial field")
    L = lipschitz_constant(graph, field.delta) if L_hat is None else float(L_hat)
    xi_max = XI_FACTOR / L if L > 0 else np.inf  # constant delta: any xi
    if not (0 < xi <= xi_max):
        raise ValueError(f"xi must lie in (0, {xi_max:.6g}] for L_hat = {L:.6g}, got {xi}")
    delta = field.delta
    theta_all = xi * delta
    order = np.lexsort((np.arange(graph.n), -delta))
    costs = graph.csr_costs(graph.lengths)
    centers = _kernels.greedy_cover(graph.indptr, graph.indices, costs, order.astype(np.int64), theta_all)
    theta = theta_all[centers]
    family, nfam = _families(graph, centers, 10.0 * theta)
    hist = {float(r): covering_numbers(graph, centers, r * theta) for r in rhos}
    if 2.0 not in hist:
        hist[2.0] = covering_numbers(graph, centers, 2.0 * theta)
    cover = SigmaCover(xi=float(xi), centers=centers, theta=theta, family=family, n_families=nfam,
                       histograms=hist, multiplicity=int(hist[2.0].max()))
    return _with_invariants(graph, cover)


def _with_invariants(graph: MetricGraph, cover: SigmaCover) -> SigmaCover:
    """Full-scan check of covering, separation and family disjointness."""
    g = graph
    costs = g.csr_costs(g.lengths)
    closed = covering_numbers(g, cover.centers, cover.theta, strict=False)
    covered = bool(np.all(closed >= 1))
    # separation: no other centre inside a centre's closed Theta ball
    ptr, verts, _ = _kernels.balls(g.indptr, g.indices, costs, cover.centers, cover.theta, False)
    is_center = np.zeros(g.n, bool)
    is_center[cover.centers] = True
    inside = np.add.reduceat(is_center[verts].astype(np.int64), ptr[:-1]) if len(verts) else np.zeros(0)
    separated = bool(np.all(inside == 1))
    # disjointness of 10 Theta balls inside each family
    ptr10, verts10, _ = _kernels.balls(g.indptr, g.indices, costs, cover.centers, 10 * cover.theta, False)
    owner_fam = np.repeat(cover.family, np.diff(ptr10))
    key = verts10 * (cover.n_families + 1) + owner_fam
    disjoint = bool(len(np.unique(key)) == len(key))
    inv = {"covers": covered, "separated": separated, "families_disjoint": disjoint,
           "pass": covered and separated and disjoint}
    return SigmaCover(cover.xi, cover.centers, cover.theta, cover.family, cover.n_families,
                      cover.histograms, cover.multiplicity, inv)


@dataclass(frozen=True, eq=False)
class SmoothedField:
    """Whitney-smoothed sigma-distance ``delta_star`` and ``b_star = 1 / delta_star``."""

    delta_star: np.ndarray
    alpha: float
    graph_id: str
    cover: SigmaCover | None

    @property
    def b_star(self) -> np.ndarray:
        with np.errstate(divide="ignore"):
            return np.where(np.isinf(self.delta_star), 0.0, 1.0 / self.delta_star)

    # the field interface, so a smoothed field can be smoothed again
    @property
    def b(self) -> np.ndarray:
        return self.b_star

    @property
    def delta(self) -> np.ndarray:
        return self.delta_star

    @property
    def trivial(self) -> bool:
        return bool(np.all(np.isinf(self.delta_star)))

    def dump_csv(self, path) -> None:
        lines = ["vertex,b_star,delta_star"]
        for v, (b, d) in enumerate(zip(self.b_star, self.delta_star)):
            lines.append(f"{v},{_fmt(b)},{_fmt(d)}")
        with open(path, "w") as fh:
            fh.write("\n".join(lines) + "\n")


def _fmt(x):
    return "inf" if np.isinf(x) else format(float(x), ".17g")


def smooth_sigma(field, cover: SigmaCover | None, graph: MetricGraph) -> SmoothedField:
    """Bump-sum smoothing of delta over the cover; trivial fields pass through."""
    if field.trivial:
        return SmoothedField(np.full(graph.n, np.inf), field.alpha, graph.graph_id, None)
    if cover is None:
        raise ValueError("a non-trivial field needs a cover")
    g = graph
    costs = g.csr_costs(g.lengths)
    ptr, verts, dists = _kernels.balls(g.indptr, g.indices, costs, cover.centers, 2.0 * cover.theta, True)
    owner = np.repeat(np.arange(len(cover.centers)), np.diff(ptr))
    weights = field.delta[cover.centers][owner] * bump(dists / cover.theta[owner])
    dstar = np.bincount(verts, weights=weights, minlength=g.n)
    return SmoothedField(dstar, field.alpha, g.graph_id, cover)


def verify_smoothing(field, smoothed: SmoothedField, graph: MetricGraph) -> dict[str, Any]:
    """Sandwich constants c1 = min delta*/delta, c2 = max delta*/delta and the
    first-difference bound c3 = max |delta*(u) - delta*(v)| / len."""
    if field.trivial:
        ok = bool(np.all(np.isinf(smoothed.delta_star)))
        return {"trivial": True, "c1": None, "c2": None, "c3": None, "pass": ok}
    ratio = smoothed.delta_star / field.delta
    e = graph.edges
    c3 = float(np.max(np.abs(smoothed.delta_star[e[:, 0]] - smoothed.delta_star[e[:, 1]]) / graph.lengths))
    c1, c2 = float(ratio.min()), float(ratio.max())
    return {"trivial": False, "c1": c1, "c2": c2, "c3": c3,
            "pass": bool(c1 > 0 and np.isfinite(c2) and np.isfinite(c3))}
