"""Weighted graphs discretizing a punctured hypersurface.

A :class:`MetricGraph` stores vertices (ambient position, chart coordinates,
``|A|`` value, distance to the singular set, boundary flags) and undirected
edges with intrinsic lengths. Adjacency is kept in CSR form with neighbour
lists sorted by vertex index so that every graph search is deterministic.
"""

from __future__ import annotations

import csv
import dataclasses
import hashlib
import itertools
import json
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any

import numpy as np
from scipy.sparse import csr_matrix
from scipy.sparse.csgraph import connected_components

from . import _kernels
from .meshes import MeshParseError, read_off, read_sidecar
from .models import (
    Catenoid,
    Hyperplane,
    ModelSurface,
    ProductCone,
    Sphere,
    model_from_descriptor,
)

__all__ = [
    "MetricGraph",
    "GraphError",
    "build_graph",
    "ingest_mesh",
    "estimate_shape_operator",
    "shape_operator_all",
    "MeshParseError",
]

FLAG_NEAR_SIGMA = 1
FLAG_OUTER = 2
FLAG_UNRELIABLE = 4

MIN_PER_DIM = 16


class GraphError(ValueError):
    """Graph construction failed (disconnected, too coarse, degenerate input)."""


@dataclass(frozen=True, eq=False)
class MetricGraph:
    """Finite weighted graph approximating the regular part of a hypersurface.

    Parameters
    ----------
    positions : (n, D) array
        Ambient coordinates.
    edges : (m, 2) int array
        Undirected edges with ``i < j``, sorted lexicographically.
    lengths : (m,) array
        Intrinsic edge lengths, all positive.
    a : (n,) array
        ``|A|`` per vertex.
    dist_sigma : (n,) array
        Graph-recomputed distance to the singular set (``inf`` when empty).
    """

    positions: np.ndarray
    edges: np.ndarray
    lengths: np.ndarray
    a: np.ndarray
    dist_sigma: np.ndarray
    near_sigma: np.ndarray
    outer: np.ndarray
    chart: np.ndarray
    dist_sigma_exact: np.ndarray
    a_reliable: np.ndarray
    areas: np.ndarray
    dim: int
    totally_geodesic: bool
    has_sigma: bool
    model: ModelSurface | None = None
    meta: dict[str, Any] = field(default_factory=dict)

    indptr: np.ndarray = field(init=False, repr=False)
    indices: np.ndarray = field(init=False, repr=False)
    edge_of: np.ndarray = field(init=False, repr=False)

    def __post_init__(self):
        n = len(self.positions)
        e = self.edges
        rows = np.concatenate([e[:, 0], e[:, 1]])
        cols = np.concatenate([e[:, 1], e[:, 0]])
        eid = np.concatenate([np.arange(len(e)), np.arange(len(e))])
        order = np.lexsort((cols, rows))
        indptr = np.zeros(n + 1, dtype=np.int64)
        np.cumsum(np.bincount(rows, minlength=n), out=indptr[1:])
        object.__setattr__(self, "indptr", indptr)
        object.__setattr__(self, "indices", np.ascontiguousarray(cols[order], dtype=np.int64))
        object.__setattr__(self, "edge_of", np.ascontiguousarray(eid[order], dtype=np.int64))

    # -- basic queries --------------------------------------------------------
    @property
    def n(self) -> int:
        return len(self.positions)

    @property
    def m(self) -> int:
        return len(self.edges)

    @property
    def h(self) -> float:
        """Resolution: the longest edge."""
        return float(self.lengths.max()) if self.m else 0.0

    @property
    def all_vertices(self) -> np.ndarray:
        return np.ones(self.n, dtype=bool)

    def csr_costs(self, edge_costs: np.ndarray) -> np.ndarray:
        return np.ascontiguousarray(np.asarray(edge_costs, dtype=float)[self.edge_of])

    def neighbors(self, v: int) -> np.ndarray:
        return self.indices[self.indptr[v]:self.indptr[v + 1]]

    def radius(self) -> np.ndarray:
        """Chart radius on cone graphs (the analytic distance to the tip)."""
        if isinstance(self.model, ProductCone):
            return self.chart[:, 0] * self.model.scale
        raise ValueError("radius is defined only on cone graphs")

    def intrinsic_from(self, sources, offsets=None, limit=np.inf, mask=None) -> np.ndarray:
        src = np.atleast_1d(np.asarray(sources, dtype=np.int64))
        off = np.zeros(len(src)) if offsets is None else np.asarray(offsets, dtype=float)
        msk = self.all_vertices if mask is None else mask
        d, _, _ = _kernels.dijkstra(
            self.indptr, self.indices, self.csr_costs(self.lengths), src, off, float(limit), msk
        )
        return d

    def sigma_components(self) -> np.ndarray:
        """Component label of each near-singular vertex (``-1`` elsewhere)."""
        labels = np.full(self.n, -1, dtype=np.int64)
        idx = np.flatnonzero(self.near_sigma)
        if len(idx) == 0:
            return labels
        e = self.edges
        keep = self.near_sigma[e[:, 0]] & self.near_sigma[e[:, 1]]
        pos = np.full(self.n, -1, dtype=np.int64)
        pos[idx] = np.arange(len(idx))
        sub = e[keep]
        mat = csr_matrix(
            (np.ones(len(sub)), (pos[sub[:, 0]], pos[sub[:, 1]])), shape=(len(idx), len(idx))
        )
        _, lab = connected_components(mat, directed=False)
        # relabel by smallest member index for a stable numbering
        first = {}
        for v, l in zip(idx, lab):
            first.setdefault(l, len(first))
        labels[idx] = [first[l] for l in lab]
        return labels

    @property
    def graph_id(self) -> str:
        hsh = hashlib.sha256()
        for arr in (self.edges, self.lengths, self.a, self.dist_sigma):
            hsh.update(np.ascontiguousarray(arr).tobytes())
        return hsh.hexdigest()[:16]

    def scaled(self, lam: float) -> "MetricGraph":
        """The graph of lam * H: lengths times lam, ``|A|`` divided by lam."""
        if not (np.isfinite(lam) and lam > 0):
            raise ValueError(f"scale factor must be positive, got {lam!r}")
        model = None
        if self.model is not None:
            model = dataclasses.replace(self.model, scale=self.model.scale * lam)
        return MetricGraph(
            positions=self.positions * lam,
            edges=self.edges,
            lengths=self.lengths * lam,
            a=self.a / lam,
            dist_sigma=self.dist_sigma * lam,
            near_sigma=self.near_sigma,
            outer=self.outer,
            chart=self.chart,
            dist_sigma_exact=self.dist_sigma_exact * lam,
            a_reliable=self.a_reliable,
            areas=self.areas * lam**self.dim,
            dim=self.dim,
            totally_geodesic=self.totally_geodesic,
            has_sigma=self.has_sigma,
            model=model,
            meta=dict(self.meta, scale=self.meta.get("scale", 1.0) * lam),
        )

    def with_a(self, a: np.ndarray, reliable: np.ndarray | None = None) -> "MetricGraph":
        """Copy with replaced ``|A|`` values (used to build corrupted fixtures)."""
        a = np.asarray(a, dtype=float)
        return dataclasses.replace(
            self,
            a=a,
            a_reliable=self.a_reliable if reliable is None else reliable,
            totally_geodesic=bool(np.all(a[self.a_reliable] <= 1e-8)),
        )

    # -- CSV round trip --------------------------------------------------------
    def flags(self) -> np.ndarray:
        return (
            FLAG_NEAR_SIGMA * self.near_sigma
            + FLAG_OUTER * self.outer
            + FLAG_UNRELIABLE * ~self.a_reliable
        ).astype(np.int64)

    def dump_csv(self, directory) -> None:
        """Write ``vertices.csv``, ``edges.csv`` and ``graph.json``."""
        d = Path(directory)
        d.mkdir(parents=True, exist_ok=True)
        D, k = self.positions.shape[1], self.chart.shape[1]
        head = ["index"] + [f"x{i}" for i in range(D)] + ["a", "dist_sigma", "flags"]
        head += [f"u{i}" for i in range(k)] + ["dist_sigma_exact", "area"]
        flags = self.flags()
        with open(d / "vertices.csv", "w", newline="") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(head)
            for v in range(self.n):
                row = [v] + [_fmt(x) for x in self.positions[v]]
                row += [_fmt(self.a[v]), _fmt(self.dist_sigma[v]), int(flags[v])]
                row += [_fmt(x) for x in self.chart[v]]
                row += [_fmt(self.dist_sigma_exact[v]), _fmt(self.areas[v])]
                w.writerow(row)
        with open(d / "edges.csv", "w", newline="") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(["i", "j", "length"])
            for (i, j), ln in zip(self.edges, self.lengths):
                w.writerow([int(i), int(j), _fmt(ln)])
        meta = {
            "dim": self.dim,
            "totally_geodesic": self.totally_geodesic,
            "has_sigma": self.has_sigma,
            "ambient_dim": D,
            "chart_dim": k,
            "model": self.model.descriptor() if self.model is not None else None,
            "meta": self.meta,
        }
        (d / "graph.json").write_text(json.dumps(meta, sort_keys=True, indent=2) + "\n")

    @classmethod
    def load_csv(cls, directory) -> "MetricGraph":
        d = Path(directory)
        meta = json.loads((d / "graph.json").read_text())
        V = np.loadtxt(d / "vertices.csv", delimiter=",", skiprows=1, ndmin=2)
        E = np.loadtxt(d / "edges.csv", delimiter=",", skiprows=1, ndmin=2)
        D, k = meta["ambient_dim"], meta["chart_dim"]
        flags = V[:, D + 3].astype(np.int64)
        model = model_from_descriptor(meta["model"]) if meta["model"] else None
        return cls(
            positions=V[:, 1:1 + D],
            edges=E[:, :2].astype(np.int64),
            lengths=E[:, 2].copy(),
            a=V[:, D + 1].copy(),
            dist_sigma=V[:, D + 2].copy(),
            near_sigma=(flags & FLAG_NEAR_SIGMA) > 0,
            outer=(flags & FLAG_OUTER) > 0,
            chart=V[:, D + 4:D + 4 + k].reshape(len(V), k),
            dist_sigma_exact=V[:, D + 4 + k].copy(),
            a_reliable=(flags & FLAG_UNRELIABLE) == 0,
            areas=V[:, D + 5 + k].copy(),
            dim=int(meta["dim"]),
            totally_geodesic=bool(meta["totally_geodesic"]),
            has_sigma=bool(meta["has_sigma"]),
            model=model,
            meta=meta.get("meta", {}),
        )

    @classmethod
    def from_edges(
        cls,
        positions,
        edges,
        lengths=None,
        *,
        a=None,
        near_sigma=None,
        outer=None,
        dist_sigma=None,
        dim: int = 2,
        check_connected: bool = True,
    ) -> "MetricGraph":
        """Assemble a graph from an explicit edge list (test fixtures, meshes)."""
        P = np.asarray(positions, dtype=float)
        if P.ndim == 1:
            P = P[:, None]
        n = len(P)
        E = np.sort(np.asarray(edges, dtype=np.int64).reshape(-1, 2), axis=1)
        if np.any(E[:, 0] == E[:, 1]):
            raise GraphError("self-loop in edge list")
        L = np.linalg.norm(P[E[:, 1]] - P[E[:, 0]], axis=1) if lengths is None else np.asarray(lengths, float)
        order = np.lexsort((E[:, 1], E[:, 0]))
        E, L = E[order], L[order]
        dup = np.all(E[1:] == E[:-1], axis=1)
        if np.any(dup):
            keep = np.concatenate([[True], ~dup])
            E, L = E[keep], L[keep]
        if np.any(L <= 0):
            raise GraphError("edge lengths must be positive")
        a = np.zeros(n) if a is None else np.asarray(a, dtype=float)
        ns = np.zeros(n, bool) if near_sigma is None else np.asarray(near_sigma, bool)
        out = np.zeros(n, bool) if outer is None else np.asarray(outer, bool)
        ds = np.full(n, np.inf) if dist_sigma is None else np.asarray(dist_sigma, float)
        g = cls(
            positions=P,
            edges=E,
            lengths=L,
            a=a,
            dist_sigma=ds,
            near_sigma=ns,
            outer=out,
            chart=np.zeros((n, 0)),
            dist_sigma_exact=np.full(n, np.nan),
            a_reliable=np.ones(n, bool),
            areas=np.zeros(n),
            dim=dim,
            totally_geodesic=bool(np.all(a <= 1e-8)),
            has_sigma=bool(ns.any()),
        )
        if check_connected:
            _check_connected(g)
        return g


def _fmt(x: float) -> str:
    if np.isinf(x):
        return "inf" if x > 0 else "-inf"
    if np.isnan(x):
        return "nan"
    return format(float(x), ".17g")


def _check_connected(g: MetricGraph) -> None:
    if g.n == 0:
        raise GraphError("graph has no vertices")
    mat = csr_matrix((np.ones(len(g.indices)), g.indices, g.indptr), shape=(g.n, g.n))
    ncomp, _ = connected_components(mat, directed=False)
    if ncomp != 1:
        raise GraphError(f"graph is disconnected ({ncomp} components); truncation sliced the domain")


# -- grid construction ---------------------------------------------------------

def _stencil(k: int) -> list[tuple[int, ...]]:
    """Forward half of the 8-neighbour (k=2) or 18-neighbour (k=3) stencil."""
    out = []
    for d in itertools.product((-1, 0, 1), repeat=k):
        nz = [x for x in d if x != 0]
        if not nz or len(nz) > 2:
            continue
        if nz[0] > 0:
            out.append(d)
    return out


def _grid_edges(shape, periodic):
    k = len(shape)
    grid = np.stack(np.meshgrid(*[np.arange(s) for s in shape], indexing="ij"), axis=-1).reshape(-1, k)
    src_all, dst_all = [], []
    for d in _stencil(k):
        tgt = grid + np.array(d)
        ok = np.ones(len(grid), bool)
        for j in range(k):
            if periodic[j]:
                tgt[:, j] %= shape[j]
            else:
                ok &= (tgt[:, j] >= 0) & (tgt[:, j] < shape[j])
        src = np.ravel_multi_index(grid[ok].T, shape)
        dst = np.ravel_multi_index(tgt[ok].T, shape)
        src_all.append(src)
        dst_all.append(dst)
    src = np.concatenate(src_all)
    dst = np.concatenate(dst_all)
    E = np.sort(np.column_stack([src, dst]), axis=1)
    return E, grid


def _cell_sizes(values, periodic):
    if periodic:
        return np.full(len(values), 2 * np.pi / len(values))
    g = np.gradient(values)
    g[0] /= 2
    g[-1] /= 2
    return np.abs(g)


def _build_grid(model: ModelSurface, axes: list[np.ndarray], bounds_tag: dict,
                periodic: list[bool] | None = None) -> MetricGraph:
    if periodic is None:
        periodic = [ax.periodic for ax in model.domain]
    shape = tuple(len(v) for v in axes)
    for name, s in zip([ax.name for ax in model.domain], shape):
        if s < MIN_PER_DIM:
            raise GraphError(
                f"resolution too coarse: {s} vertices along {name!r} (need >= {MIN_PER_DIM})"
            )
    E, grid = _grid_edges(shape, periodic)
    chart = np.column_stack([axes[j][grid[:, j]] for j in range(len(axes))])
    lengths = model.segment_length(chart[E[:, 0]], chart[E[:, 1]])
    metric = model.metric(chart)
    cells = np.ones(len(chart))
    for j in range(len(axes)):
        cells *= _cell_sizes(axes[j], periodic[j])[grid[:, j]]
    areas = np.sqrt(np.linalg.det(metric)) * cells

    near = np.zeros(len(chart), bool)
    outer = np.zeros(len(chart), bool)
    for j in range(len(axes)):
        if periodic[j]:
            continue
        lo, hi = grid[:, j] == 0, grid[:, j] == shape[j] - 1
        if isinstance(model, ProductCone) and j == 0 and len(periodic) > 1 and periodic[1]:
            near |= lo
            outer |= hi
        else:
            outer |= lo | hi
    if isinstance(model, ProductCone) and not periodic[1]:
        # a sector is a patch away from the tip: every side is a truncation
        near[:] = False
    return _finish(model, chart, lengths, E, areas, near, outer, bounds_tag)


def _finish(model, chart, lengths, E, areas, near, outer, bounds_tag) -> MetricGraph:
    a = model.abs_A(chart)
    exact = model.dist_sigma(chart)
    order = np.lexsort((E[:, 1], E[:, 0]))
    g = MetricGraph(
        positions=model.position(chart),
        edges=E[order],
        lengths=lengths[order],
        a=a,
        dist_sigma=np.full(len(chart), np.inf),
        near_sigma=near,
        outer=outer,
        chart=chart,
        dist_sigma_exact=exact,
        a_reliable=np.ones(len(chart), bool),
        areas=areas,
        dim=model.chart_dim,
        totally_geodesic=model.totally_geodesic,
        has_sigma=model.has_sigma,
        model=model,
        meta=dict(bounds_tag, scale=1.0),
    )
    _check_connected(g)
    if g.has_sigma:
        ring = np.flatnonzero(near)
        # a sector away from the tip has no ring; it keeps the analytic distance
        ds = g.intrinsic_from(ring, exact[ring]) if len(ring) else exact.copy()
        g = dataclasses.replace(g, dist_sigma=ds)
    return g


def build_graph(model: ModelSurface, h: float, bounds: tuple[float, ...] | None = None) -> MetricGraph:
    """Discretize a model surface.

    Parameters
    ----------
    model : ModelSurface
    h : float
        Grid step. On flat charts and the catenoid this is the step of the
        chart coordinates; on cones it is the step in ``log r`` (edges at
        radius r have length about ``r*h``); on the sphere it is the target
        longest edge of the icosphere.
    bounds : tuple, optional
        Truncation: ``(x0, x1, y0, y1)`` for the hyperplane, ``(t0, t1)`` for
        the catenoid, ``(r_min, r_max)`` for cones. Cones also accept
        ``(r_min, r_max, theta0, theta1)``, a sector of the 2D chart.

    Returns
    -------
    MetricGraph
        Connected graph whose ``h`` attribute is the realized longest edge.
    """
    if not (np.isfinite(h) and h > 0):
        raise GraphError(f"resolution must be positive, got {h!r}")
    s = model.scale
    if isinstance(model, Hyperplane):
        x0, x1, y0, y1 = bounds if bounds is not None else model.params["extent"]
        _inside(model, [(x0, x1), (y0, y1)])
        axes = [np.linspace(x0, x1, int(round((x1 - x0) / h)) + 1),
                np.linspace(y0, y1, int(round((y1 - y0) / h)) + 1)]
        return _build_grid(model, axes, {"bounds": [x0, x1, y0, y1], "step": h})
    if isinstance(model, Catenoid):
        c = model.params["c"]
        t0, t1 = bounds if bounds is not None else (-model.params["t_max"], model.params["t_max"])
        _inside(model, [(t0, t1)])
        n_th = int(round(2 * np.pi * c / h))
        axes = [np.linspace(t0, t1, int(round((t1 - t0) / h)) + 1),
                2 * np.pi * np.arange(max(n_th, 1)) / max(n_th, 1)]
        return _build_grid(model, axes, {"bounds": [t0, t1], "step": h})
    if isinstance(model, ProductCone):
        bounds = tuple(bounds) if bounds is not None else (model.params["r_min"], model.params["r_max"])
        r0, r1 = bounds[:2]
        _inside(model, [(r0, r1)])
        if not (h < 0.5):
            raise GraphError("cone log-radial step must be below 0.5 so that r_min >= 2 * local edge")
        rho1, rho2 = model.rho
        n_r = int(math.ceil(math.log(r1 / r0) / h)) + 1
        axes = [np.geomspace(r0, r1, n_r)]
        periodic = [ax.periodic for ax in model.domain]
        if len(bounds) == 4:
            th0, th1 = bounds[2:]
            if model.chart_dim != 2 or not 0 < th1 - th0 < 2 * np.pi:
                raise GraphError("cone sectors need a 2D chart and 0 < theta1 - theta0 < 2 pi")
            axes.append(np.linspace(th0, th1, int(round((th1 - th0) * rho1 / h)) + 1))
            periodic[1] = False
        else:
            n_th = int(round(2 * np.pi * rho1 / h))
            axes.append(2 * np.pi * np.arange(max(n_th, 1)) / max(n_th, 1))
        if model.chart_dim == 3:
            n_ph = int(round(2 * np.pi * rho2 / h))
            axes.append(2 * np.pi * np.arange(max(n_ph, 1)) / max(n_ph, 1))
        g = _build_grid(model, axes, {"bounds": list(bounds), "step": h}, periodic)
        ring = np.flatnonzero(g.near_sigma)
        local = g.lengths[np.isin(g.edges[:, 0], ring) | np.isin(g.edges[:, 1], ring)].max() if len(ring) else 0.0
        if r0 * s < 2 * local:
            raise GraphError(f"r_min = {r0 * s:g} is closer to the tip than twice the local edge {local:g}")
        return g
    if isinstance(model, Sphere):
        R = model.params["radius"]
        for level in range(1, 8):
            V, F = _icosphere_cached(level)
            E = _mesh_edges(F)
            chord = np.linalg.norm(V[E[:, 1]] - V[E[:, 0]], axis=1)
            if R * s * 2 * np.arcsin(np.minimum(chord.max() / 2, 1.0)) <= h:
                break
        phi = np.arccos(np.clip(V[:, 2], -1, 1))
        th = np.mod(np.arctan2(V[:, 1], V[:, 0]), 2 * np.pi)
        chart = np.column_stack([phi, th])
        lengths = model.segment_length(chart[E[:, 0]], chart[E[:, 1]])
        areas = _vertex_areas(V * R * s, F)
        n = len(V)
        g = _finish(model, chart, lengths, E, areas, np.zeros(n, bool), np.zeros(n, bool),
                    {"level": level, "step": h})
        # chart angles lose precision at the poles; use the exact embedding instead
        return dataclasses.replace(g, positions=V * R * s)
    raise GraphError(f"build_graph does not support model kind {model.kind!r}; use ingest_mesh")


def _inside(model: ModelSurface, ranges):
    for ax, (lo, hi) in zip(model.domain, ranges):
        if not lo < hi:
            raise GraphError(f"empty truncation range along {ax.name!r}")
        if lo < ax.lo - 1e-12 or hi > ax.hi + 1e-12:
            raise GraphError(f"truncation [{lo}, {hi}] leaves the chart along {ax.name!r}")


_ICO_CACHE: dict[int, tuple[np.ndarray, np.ndarray]] = {}


def _icosphere_cached(level):
    from .meshes import icosphere

    if level not in _ICO_CACHE:
        _ICO_CACHE[level] = icosphere(level)
    return _ICO_CACHE[level]


# -- meshes ---------------------------------------------------------------------

def _mesh_edges(F: np.ndarray) -> np.ndarray:
    E = np.concatenate([F[:, [0, 1]], F[:, [1, 2]], F[:, [2, 0]]])
    E = np.sort(E, axis=1)
    return np.unique(E, axis=0)


def _vertex_areas(V, F):
    cross = np.cross(V[F[:, 1]] - V[F[:, 0]], V[F[:, 2]] - V[F[:, 0]])
    fa = 0.5 * np.linalg.norm(cross, axis=1)
    out = np.zeros(len(V))
    for j in range(3):
        np.add.at(out, F[:, j], fa / 3)
    return out


def _boundary_vertices(F: np.ndarray, n: int) -> np.ndarray:
    E = np.sort(np.concatenate([F[:, [0, 1]], F[:, [1, 2]], F[:, [2, 0]]]), axis=1)
    uniq, counts = np.unique(E, axis=0, return_counts=True)
    out = np.zeros(n, bool)
    out[uniq[counts == 1].ravel()] = True
    return out


def estimate_shape_operator(vertices, faces, vertex: int) -> tuple[float, bool]:
    """|A| at one mesh vertex from a quadratic height fit over its 1-ring.

    Returns
    -------
    a : float
        Frobenius norm of the fitted Hessian (0 when unreliable).
    reliable : bool
        False when fewer than 5 usable neighbours or a rank-deficient fit.
    """
    a, ok = shape_operator_all(vertices, faces, np.array([vertex]))
    return float(a[0]), bool(ok[0])


def shape_operator_all(vertices, faces, which=None) -> tuple[np.ndarray, np.ndarray]:
    V = np.asarray(vertices, dtype=float)
    F = np.asarray(faces, dtype=np.int64)
    n = len(V)
    which = np.arange(n) if which is None else np.asarray(which, dtype=np.int64)
    cross = np.cross(V[F[:, 1]] - V[F[:, 0]], V[F[:, 2]] - V[F[:, 0]])
    vn = np.zeros((n, 3))
    for j in range(3):
        np.add.at(vn, F[:, j], cross)
    E = _mesh_edges(F)
    nbr = [[] for _ in range(n)]
    for i, j in E:
        nbr[i].append(j)
        nbr[j].append(i)
    a = np.zeros(len(which))
    ok = np.zeros(len(which), bool)
    for out_i, v in enumerate(which):
        ring = nbr[v]
        nrm = np.linalg.norm(vn[v])
        if len(ring) < 5 or nrm == 0:
            continue
        nv = vn[v] / nrm
        helper = np.eye(3)[np.argmin(np.abs(nv))]
        e1 = np.cross(nv, helper)
        e1 /= np.linalg.norm(e1)
        e2 = np.cross(nv, e1)
        rel = V[ring] - V[v]
        x, y, z = rel @ e1, rel @ e2, rel @ nv
        M = np.column_stack([x, y, 0.5 * x * x, x * y, 0.5 * y * y])
        sv = np.linalg.svd(M, compute_uv=False)
        if sv[-1] <= 1e-8 * sv[0]:
            continue
        coef, *_ = np.linalg.lstsq(M, z, rcond=None)
        A, B, C = coef[2:]
        a[out_i] = math.sqrt(A * A + 2 * B * B + C * C)
        ok[out_i] = True
    return a, ok


def ingest_mesh(path, sidecar=None) -> MetricGraph:
    """Read an OFF triangle mesh into a graph with chord edge lengths.

    Singular vertices listed in ``sidecar`` (or ``<path>.sigma`` when present)
    are removed; their neighbours form the near-singular ring. Mesh boundary
    vertices are flagged as outer truncation.
    """
    path = Path(path)
    V, F = read_off(path)
    if len(F) == 0:
        raise MeshParseError("mesh has no faces")
    cross = np.cross(V[F[:, 1]] - V[F[:, 0]], V[F[:, 2]] - V[F[:, 0]])
    area = 0.5 * np.linalg.norm(cross, axis=1)
    E_all = _mesh_edges(F)
    scale2 = np.mean(np.sum((V[E_all[:, 1]] - V[E_all[:, 0]]) ** 2, axis=1))
    bad = np.flatnonzero(area <= 1e-12 * scale2)
    if len(bad):
        raise MeshParseError(f"degenerate (zero-area) face {int(bad[0])}")
    if sidecar is None:
        cand = path.with_name(path.name + ".sigma")
        sidecar = cand if cand.exists() else None
    sing = read_sidecar(sidecar) if sidecar is not None else np.zeros(0, dtype=np.int64)
    if len(sing) and (sing.min() < 0 or sing.max() >= len(V)):
        raise MeshParseError("sidecar index out of range")

    a, ok = shape_operator_all(V, F)
    boundary = _boundary_vertices(F, len(V))
    areas = _vertex_areas(V, F)

    is_sing = np.zeros(len(V), bool)
    is_sing[sing] = True
    near = np.zeros(len(V), bool)
    offset = np.full(len(V), np.inf)
    for i, j in E_all:
        for u, w in ((i, j), (j, i)):
            if is_sing[w] and not is_sing[u]:
                near[u] = True
                offset[u] = min(offset[u], float(np.linalg.norm(V[u] - V[w])))
    keep = np.flatnonzero(~is_sing)
    new_id = np.full(len(V), -1, dtype=np.int64)
    new_id[keep] = np.arange(len(keep))
    E = E_all[~is_sing[E_all[:, 0]] & ~is_sing[E_all[:, 1]]]
    E = new_id[E]
    P = V[keep]
    lengths = np.linalg.norm(P[E[:, 1]] - P[E[:, 0]], axis=1)
    outer = boundary[keep] & ~near[keep]
    order = np.lexsort((E[:, 1], E[:, 0]))
    rel = ok[keep]
    a_k = np.where(rel, a[keep], 0.0)
    n = len(keep)
    g = MetricGraph(
        positions=P,
        edges=E[order],
        lengths=lengths[order],
        a=a_k,
        dist_sigma=np.full(n, np.inf),
        near_sigma=near[keep],
        outer=outer,
        chart=np.zeros((n, 0)),
        dist_sigma_exact=np.full(n, np.nan),
        a_reliable=rel,
        areas=areas[keep],
        dim=2,
        totally_geodesic=bool(np.all(a_k[rel] <= 1e-8)),
        has_sigma=bool(len(sing)),
        meta={"source": path.name, "singular": [int(s) for s in sing], "scale": 1.0},
    )
    _check_connected(g)
    if g.has_sigma:
        ring = np.flatnonzero(g.near_sigma)
        g = dataclasses.replace(g, dist_sigma=g.intrinsic_from(ring, offset[keep][ring]))
    return g
