"""Analytic model hypersurfaces used as ground truth.

Each model is a chart (a product of intervals and circles) together with
closed-form evaluators for the ambient position, the induced metric, the norm
of the second fundamental form ``|A|`` and the intrinsic distance to the
singular set. Cone models are evaluated on a totally geodesic slice
``(r, link angles)`` of the full cone, with metric ``dr^2 + r^2 g_link``.
"""

from __future__ import annotations

import dataclasses
import json
import math
from dataclasses import dataclass, field
from typing import Any

import numpy as np

__all__ = [
    "INFINITE",
    "is_infinite",
    "ChartAxis",
    "ModelSurface",
    "make_model",
    "dist_to_sigma",
    "scale_model",
    "model_from_descriptor",
    "shape_operator_norm_fd",
]

#: Distance to an empty singular set. IEEE infinity is used because it survives
#: numpy arithmetic, compares above every length and is detectable with ``isinf``.
INFINITE = math.inf


def is_infinite(x) -> bool | np.ndarray:
    return np.isinf(x)


@dataclass(frozen=True)
class ChartAxis:
    name: str
    lo: float
    hi: float
    periodic: bool = False


@dataclass(frozen=True, eq=False)
class ModelSurface:
    """Chart of a hypersurface in R^{n+1} with its ground-truth geometry.

    Evaluators accept arrays of chart points of shape ``(m, k)`` (or a single
    point of shape ``(k,)``) and are pure functions of ``(params, point)``.
    """

    kind: str
    params: dict[str, Any]
    domain: tuple[ChartAxis, ...]
    ambient_dim: int
    sigma_points: tuple[tuple[float, ...], ...] = ()
    totally_geodesic: bool = False
    scale: float = 1.0
    resolution: dict[str, Any] = field(default_factory=dict)

    # -- geometry in unit scale, overridden per kind -------------------------
    def _position(self, u):
        raise ValueError(f"{self.kind!r} model has no analytic evaluators")

    def _metric(self, u):
        raise ValueError(f"{self.kind!r} model has no analytic evaluators")

    def _abs_A(self, u):
        raise ValueError(f"{self.kind!r} model has no analytic evaluators")

    def _dist_sigma(self, u):
        return np.full(len(u), INFINITE)

    def _segment_length(self, u, v):
        raise ValueError(f"{self.kind!r} model has no analytic evaluators")

    def _full_coords(self, u):
        return np.atleast_2d(u)

    def _embed_full(self, w):
        return self._position(w)

    # -- public, scale-aware evaluators ---------------------------------------
    @property
    def chart_dim(self) -> int:
        return len(self.domain)

    @property
    def has_sigma(self) -> bool:
        return len(self.sigma_points) > 0

    def _prepare(self, u) -> tuple[np.ndarray, bool]:
        arr = np.asarray(u, dtype=float)
        single = arr.ndim == 1
        arr = np.atleast_2d(arr)
        if arr.shape[1] != self.chart_dim:
            raise ValueError(f"expected chart points with {self.chart_dim} coordinates")
        self.check_in_chart(arr)
        return arr, single

    def check_in_chart(self, u: np.ndarray, tol: float = 1e-9) -> None:
        for j, ax in enumerate(self.domain):
            if ax.periodic:
                continue
            span = max(abs(ax.hi - ax.lo), 1.0)
            col = u[:, j]
            if np.any(col < ax.lo - tol * span) or np.any(col > ax.hi + tol * span):
                raise ValueError(f"point outside chart along axis {ax.name!r} [{ax.lo}, {ax.hi}]")

    def position(self, u):
        arr, single = self._prepare(u)
        out = self.scale * self._position(arr)
        return out[0] if single else out

    def metric(self, u):
        arr, single = self._prepare(u)
        out = self.scale**2 * self._metric(arr)
        return out[0] if single else out

    def abs_A(self, u):
        arr, single = self._prepare(u)
        out = self._abs_A(arr) / self.scale
        return out[0] if single else out

    def dist_sigma(self, u):
        arr, single = self._prepare(u)
        out = self.scale * self._dist_sigma(arr)
        return out[0] if single else out

    def segment_length(self, u, v):
        """Intrinsic length between nearby chart points (grid edges)."""
        a, single = self._prepare(u)
        b, _ = self._prepare(v)
        out = self.scale * self._segment_length(a, b)
        return out[0] if single else out

    def descriptor(self) -> dict[str, Any]:
        return {
            "kind": self.kind,
            "params": dict(self.params),
            "domain": [[ax.name, ax.lo, ax.hi, ax.periodic] for ax in self.domain],
            "scale": self.scale,
            "resolution": dict(self.resolution),
        }

    def to_json(self) -> str:
        return json.dumps(self.descriptor(), sort_keys=True, indent=2)


def _wrap(d):
    return (d + np.pi) % (2 * np.pi) - np.pi


@dataclass(frozen=True, eq=False)
class Hyperplane(ModelSurface):
    def _position(self, u):
        return np.column_stack([u[:, 0], u[:, 1], np.zeros(len(u))])

    def _metric(self, u):
        return np.broadcast_to(np.eye(2), (len(u), 2, 2)).copy()

    def _abs_A(self, u):
        return np.zeros(len(u))

    def _segment_length(self, u, v):
        return np.linalg.norm(v - u, axis=1)


@dataclass(frozen=True, eq=False)
class Sphere(ModelSurface):
    def _position(self, u):
        R = self.params["radius"]
        phi, th = u[:, 0], u[:, 1]
        return R * np.column_stack([np.sin(phi) * np.cos(th), np.sin(phi) * np.sin(th), np.cos(phi)])

    def _metric(self, u):
        R = self.params["radius"]
        g = np.zeros((len(u), 2, 2))
        g[:, 0, 0] = R**2
        g[:, 1, 1] = (R * np.sin(u[:, 0])) ** 2
        return g

    def _abs_A(self, u):
        return np.full(len(u), math.sqrt(2.0) / self.params["radius"])

    def _segment_length(self, u, v):
        R = self.params["radius"]
        x, y = self._position(u) / R, self._position(v) / R
        cross = np.linalg.norm(np.cross(x, y), axis=1)
        return R * np.arctan2(cross, np.sum(x * y, axis=1))


@dataclass(frozen=True, eq=False)
class Catenoid(ModelSurface):
    def _position(self, u):
        c = self.params["c"]
        t, th = u[:, 0], u[:, 1]
        rad = c * np.cosh(t / c)
        return np.column_stack([rad * np.cos(th), rad * np.sin(th), t])

    def _metric(self, u):
        c = self.params["c"]
        ch2 = np.cosh(u[:, 0] / c) ** 2
        g = np.zeros((len(u), 2, 2))
        g[:, 0, 0] = ch2
        g[:, 1, 1] = c**2 * ch2
        return g

    def _abs_A(self, u):
        c = self.params["c"]
        return math.sqrt(2.0) / (c * np.cosh(u[:, 0] / c) ** 2)

    def _segment_length(self, u, v):
        # exact length of the straight chart segment; the metric is conformal
        c = self.params["c"]
        dt = v[:, 0] - u[:, 0]
        dth = _wrap(v[:, 1] - u[:, 1])
        chord = np.hypot(dt, c * dth)
        flat = np.abs(dt) < 1e-12
        safe = np.where(flat, 1.0, dt)
        mean_cosh = np.where(
            flat,
            np.cosh(u[:, 0] / c),
            c * (np.sinh(v[:, 0] / c) - np.sinh(u[:, 0] / c)) / safe,
        )
        return chord * mean_cosh


@dataclass(frozen=True, eq=False)
class ProductCone(ModelSurface):
    """Cone over S^p(rho1) x S^q(rho2) with rho1^2 = p/(p+q), rho2^2 = q/(p+q).

    The chart is the slice ``(r, theta)`` or ``(r, theta, phi)`` where theta
    runs along a great circle of the first factor and phi along one of the
    second; the slice is a totally geodesic flat cone.
    """

    @property
    def rho(self) -> tuple[float, float]:
        p, q = self.params["p"], self.params["q"]
        return math.sqrt(p / (p + q)), math.sqrt(q / (p + q))

    @property
    def a0(self) -> float:
        """|A| * r, constant on the cone."""
        return math.sqrt(self.params["p"] + self.params["q"])

    def _angles(self, u):
        th = u[:, 1]
        ph = u[:, 2] if u.shape[1] > 2 else np.zeros(len(u))
        return th, ph

    def _position(self, u):
        return self._embed_full(self._full_coords(u))

    def _metric(self, u):
        r1, r2 = self.rho
        k = u.shape[1]
        g = np.zeros((len(u), k, k))
        g[:, 0, 0] = 1.0
        g[:, 1, 1] = (u[:, 0] * r1) ** 2
        if k > 2:
            g[:, 2, 2] = (u[:, 0] * r2) ** 2
        return g

    def _abs_A(self, u):
        return self.a0 / u[:, 0]

    def _dist_sigma(self, u):
        return u[:, 0].copy()

    def _segment_length(self, u, v):
        r1, r2 = self.rho
        tu, pu = self._angles(u)
        tv, pv = self._angles(v)
        link = np.hypot(r1 * _wrap(tv - tu), r2 * _wrap(pv - pu))
        ra, rb = u[:, 0], v[:, 0]
        # unrolled flat cone; 2 ra rb (1 - cos) form avoids cancellation
        sq = (ra - rb) ** 2 + 4.0 * ra * rb * np.sin(link / 2.0) ** 2
        return np.sqrt(sq)

    def _full_coords(self, u):
        p, q = self.params["p"], self.params["q"]
        th, ph = self._angles(u)
        m = len(u)
        cols = [u[:, 0]]
        cols += [np.full(m, np.pi / 2)] * (p - 1)
        cols.append(th)
        cols += [np.full(m, np.pi / 2)] * (q - 1)
        cols.append(ph)
        return np.column_stack(cols)

    def _embed_full(self, w):
        p, q = self.params["p"], self.params["q"]
        r1, r2 = self.rho
        r = w[:, 0]
        s1 = _hypersphere(w[:, 1:1 + p])
        s2 = _hypersphere(w[:, 1 + p:1 + p + q])
        return r[:, None] * np.column_stack([r1 * s1, r2 * s2])


def _hypersphere(angles):
    """Point of S^k from k angles; the last angle runs along a great circle."""
    m, k = angles.shape
    out = np.empty((m, k + 1))
    sin_prod = np.ones(m)
    for i in range(k - 1):
        out[:, i] = sin_prod * np.cos(angles[:, i])
        sin_prod = sin_prod * np.sin(angles[:, i])
    out[:, k - 1] = sin_prod * np.cos(angles[:, k - 1])
    out[:, k] = sin_prod * np.sin(angles[:, k - 1])
    return out


@dataclass(frozen=True, eq=False)
class MeshModel(ModelSurface):
    pass


_CONE_ALIASES = {"simons": (3, 3), "clifford_cone": (1, 1)}


def _positive(params, key):
    val = params.get(key)
    if val is None or not np.isfinite(val) or val <= 0:
        raise ValueError(f"parameter {key!r} must be a positive number, got {val!r}")
    return float(val)


def make_model(kind: str, params: dict[str, Any] | None = None) -> ModelSurface:
    """Construct a model surface.

    Supported kinds: ``hyperplane``, ``sphere``, ``catenoid``,
    ``cone_over_sphere_products`` (alias ``cone``; needs ``p``, ``q``),
    ``simons`` (p = q = 3), ``clifford_cone`` (p = q = 1) and ``mesh``.
    Cones need ``0 < r_min < r_max``; ``link_dims`` selects a 2D or 3D chart.
    """
    params = dict(params or {})
    kind = kind.lower()
    if kind == "hyperplane":
        ext = [float(x) for x in params.get("extent", (-1.0, 1.0, -1.0, 1.0))]
        if not (ext[0] < ext[1] and ext[2] < ext[3]):
            raise ValueError(f"invalid hyperplane extent {ext}")
        params["extent"] = ext
        dom = (ChartAxis("x", ext[0], ext[1]), ChartAxis("y", ext[2], ext[3]))
        return Hyperplane(kind, params, dom, 3, (), True)
    if kind == "sphere":
        params["radius"] = _positive({"radius": params.get("radius", 1.0)}, "radius")
        dom = (ChartAxis("phi", 0.0, math.pi), ChartAxis("theta", 0.0, 2 * math.pi, True))
        return Sphere(kind, params, dom, 3)
    if kind == "catenoid":
        params["c"] = _positive({"c": params.get("c", 1.0)}, "c")
        params["t_max"] = _positive({"t_max": params.get("t_max", 5.0)}, "t_max")
        tm = params["t_max"]
        dom = (ChartAxis("t", -tm, tm), ChartAxis("theta", 0.0, 2 * math.pi, True))
        return Catenoid(kind, params, dom, 3)
    if kind in ("cone", "cone_over_sphere_products", *_CONE_ALIASES):
        if kind in _CONE_ALIASES:
            params["p"], params["q"] = _CONE_ALIASES[kind]
        p, q = params.get("p"), params.get("q")
        if not (isinstance(p, int) and isinstance(q, int) and p >= 1 and q >= 1):
            raise ValueError(f"cone needs integer p, q >= 1, got p={p!r}, q={q!r}")
        r_min = _positive({"r_min": params.get("r_min", 0.1)}, "r_min")
        r_max = _positive({"r_max": params.get("r_max", 10.0)}, "r_max")
        if r_min >= r_max:
            raise ValueError(f"cone needs r_min < r_max, got {r_min} >= {r_max}")
        link_dims = int(params.get("link_dims", 1))
        if link_dims not in (1, 2):
            raise ValueError("link_dims must be 1 or 2")
        params.update(r_min=r_min, r_max=r_max, link_dims=link_dims)
        axes = [ChartAxis("r", r_min, r_max), ChartAxis("theta", 0.0, 2 * math.pi, True)]
        if link_dims == 2:
            axes.append(ChartAxis("phi", 0.0, 2 * math.pi, True))
        tip = (0.0,) * len(axes)
        return ProductCone(kind, params, tuple(axes), p + q + 2, (tip,))
    if kind == "mesh":
        if "path" not in params:
            raise ValueError("mesh model needs a 'path' to an OFF file")
        return MeshModel(kind, params, (), 3)
    raise ValueError(f"unknown model kind {kind!r}")


def dist_to_sigma(model: ModelSurface, point) -> float | np.ndarray:
    """Intrinsic distance to the singular set; ``INFINITE`` when it is empty."""
    return model.dist_sigma(point)


def scale_model(model: ModelSurface, lam: float) -> ModelSurface:
    """The rescaled surface lam * H (same chart, distances times lam)."""
    if not (np.isfinite(lam) and lam > 0):
        raise ValueError(f"scale factor must be positive, got {lam!r}")
    return dataclasses.replace(model, scale=model.scale * lam)


def model_from_descriptor(desc: dict[str, Any] | str) -> ModelSurface:
    if isinstance(desc, str):
        desc = json.loads(desc)
    model = make_model(desc["kind"], desc.get("params", {}))
    model = dataclasses.replace(model, resolution=dict(desc.get("resolution", {})))
    scale = float(desc.get("scale", 1.0))
    return scale_model(model, scale) if scale != 1.0 else model


def shape_operator_norm_fd(model: ModelSurface, u, step: float = 1e-4) -> np.ndarray:
    """|A| from central finite differences of the full parametrization.

    Independent of the closed-form evaluators: tangent vectors and second
    derivatives come from differencing the embedding, the normal from the SVD
    of the Jacobian, and |A|^2 = tr(g^-1 A g^-1 A).
    """
    arr = np.atleast_2d(np.asarray(u, dtype=float))
    model.check_in_chart(arr)
    w0 = model._full_coords(arr)
    m, k = w0.shape
    out = np.empty(m)
    eye = np.eye(k) * step
    for i in range(m):
        w = w0[i]

        def X(x):
            return model.scale * model._embed_full(x[None, :])[0]

        x0 = X(w)
        J = np.column_stack([(X(w + eye[j]) - X(w - eye[j])) / (2 * step) for j in range(k)])
        U, _, _ = np.linalg.svd(J, full_matrices=True)
        normal = U[:, -1]
        hess = np.empty((k, k))
        for a in range(k):
            for b in range(a, k):
                if a == b:
                    val = (X(w + eye[a]) - 2 * x0 + X(w - eye[a])) / step**2
                else:
                    val = (
                        X(w + eye[a] + eye[b])
                        - X(w + eye[a] - eye[b])
                        - X(w - eye[a] + eye[b])
                        + X(w - eye[a] - eye[b])
                    ) / (4 * step**2)
                hess[a, b] = hess[b, a] = val @ normal
        g = J.T @ J
        ginv = np.linalg.inv(g)
        S = ginv @ hess
        out[i] = math.sqrt(max(np.trace(S @ S), 0.0))
    return out
