"""Triangle-mesh generators and OFF file I/O."""

from __future__ import annotations

import math
from pathlib import Path

import numpy as np

__all__ = [
    "MeshParseError",
    "read_off",
    "write_off",
    "read_sidecar",
    "write_sidecar",
    "icosphere",
    "flat_grid",
    "cylinder",
    "two_tip_sheet",
]


class MeshParseError(ValueError):
    """Malformed OFF content."""


def _tokens(text: str):
    for lineno, line in enumerate(text.splitlines(), 1):
        line = line.split("#", 1)[0].strip()
        if line:
            yield lineno, line.split()


def read_off(path) -> tuple[np.ndarray, np.ndarray]:
    """Parse an OFF triangle mesh.

    Returns
    -------
    vertices : (n, 3) float array
    faces : (m, 3) int array
    """
    text = Path(path).read_text()
    lines = list(_tokens(text))
    if not lines or lines[0][1][0] != "OFF":
        raise MeshParseError("missing 'OFF' header")
    head = lines[0][1][1:]
    body = lines[1:]
    if not head:
        if not body:
            raise MeshParseError("missing counts line")
        head = body[0][1]
        body = body[1:]
    if len(head) != 3:
        raise MeshParseError(f"counts line must have 3 integers, got {head}")
    try:
        nv, nf, _ = (int(x) for x in head)
    except ValueError as exc:
        raise MeshParseError(f"malformed counts line {head}") from exc
    if nv < 0 or nf < 0:
        raise MeshParseError("negative counts")
    if len(body) < nv + nf:
        raise MeshParseError(f"expected {nv} vertices and {nf} faces, file is truncated")
    for lineno, tok in body[:nv]:
        if len(tok) != 3:
            raise MeshParseError(f"line {lineno}: vertex lines must have exactly 3 coordinates")
    try:
        verts = np.array([[float(x) for x in tok] for _, tok in body[:nv]])
    except ValueError as exc:
        raise MeshParseError("non-numeric vertex coordinate") from exc
    faces = np.empty((nf, 3), dtype=np.int64)
    for i, (lineno, tok) in enumerate(body[nv:nv + nf]):
        try:
            vals = [int(x) for x in tok]
        except ValueError as exc:
            raise MeshParseError(f"line {lineno}: malformed face") from exc
        if vals[0] != 3 or len(vals) != 4:
            raise MeshParseError(f"line {lineno}: only triangular faces are supported")
        faces[i] = vals[1:]
    if len(body) > nv + nf:
        raise MeshParseError("trailing content after the declared faces")
    if nf and (faces.min() < 0 or faces.max() >= nv):
        raise MeshParseError("face index out of range")
    return verts.reshape(nv, 3), faces


def write_off(path, vertices, faces) -> None:
    vertices = np.asarray(vertices, dtype=float)
    faces = np.asarray(faces, dtype=np.int64)
    out = ["OFF", f"{len(vertices)} {len(faces)} 0"]
    out += [" ".join(f"{c:.17g}" for c in v) for v in vertices]
    out += [f"3 {a} {b} {c}" for a, b, c in faces]
    Path(path).write_text("\n".join(out) + "\n")


def read_sidecar(path) -> np.ndarray:
    """Whitespace-separated singular vertex indices."""
    text = Path(path).read_text()
    try:
        return np.array(sorted({int(t) for _, tok in _tokens(text) for t in tok}), dtype=np.int64)
    except ValueError as exc:
        raise MeshParseError("sidecar must list integer vertex indices") from exc


def write_sidecar(path, indices) -> None:
    Path(path).write_text("\n".join(str(int(i)) for i in indices) + "\n")


def icosphere(level: int, radius: float = 1.0) -> tuple[np.ndarray, np.ndarray]:
    """Subdivided icosahedron; level k has 10*4^k + 2 vertices."""
    t = (1.0 + math.sqrt(5.0)) / 2.0
    verts = [
        (-1, t, 0), (1, t, 0), (-1, -t, 0), (1, -t, 0),
        (0, -1, t), (0, 1, t), (0, -1, -t), (0, 1, -t),
        (t, 0, -1), (t, 0, 1), (-t, 0, -1), (-t, 0, 1),
    ]
    faces = [
        (0, 11, 5), (0, 5, 1), (0, 1, 7), (0, 7, 10), (0, 10, 11),
        (1, 5, 9), (5, 11, 4), (11, 10, 2), (10, 7, 6), (7, 1, 8),
        (3, 9, 4), (3, 4, 2), (3, 2, 6), (3, 6, 8), (3, 8, 9),
        (4, 9, 5), (2, 4, 11), (6, 2, 10), (8, 6, 7), (9, 8, 1),
    ]
    V = [np.array(v, dtype=float) / np.linalg.norm(v) for v in verts]
    F = faces
    for _ in range(level):
        cache: dict[tuple[int, int], int] = {}

        def mid(i, j):
            key = (min(i, j), max(i, j))
            if key not in cache:
                m = V[i] + V[j]
                V.append(m / np.linalg.norm(m))
                cache[key] = len(V) - 1
            return cache[key]

        nxt = []
        for a, b, c in F:
            ab, bc, ca = mid(a, b), mid(b, c), mid(c, a)
            nxt += [(a, ab, ca), (b, bc, ab), (c, ca, bc), (ab, bc, ca)]
        F = nxt
    return radius * np.array(V), np.array(F, dtype=np.int64)


def _grid_faces(nx: int, ny: int, wrap_x: bool = False) -> np.ndarray:
    """Triangulate an nx-by-ny vertex grid indexed as i*ny + j."""
    faces = []
    cols = nx if wrap_x else nx - 1
    for i in range(cols):
        i2 = (i + 1) % nx
        for j in range(ny - 1):
            a, b = i * ny + j, i2 * ny + j
            c, d = i2 * ny + j + 1, i * ny + j + 1
            faces.append((a, b, c))
            faces.append((a, c, d))
    return np.array(faces, dtype=np.int64)


def flat_grid(n: int, spacing: float = 1.0) -> tuple[np.ndarray, np.ndarray]:
    x = np.arange(n) * spacing
    X, Y = np.meshgrid(x, x, indexing="ij")
    V = np.column_stack([X.ravel(), Y.ravel(), np.zeros(n * n)])
    return V, _grid_faces(n, n)


def cylinder(radius: float = 1.0, height: float = 2.0, n_around: int = 64, n_along: int = 32):
    th = 2 * np.pi * np.arange(n_around) / n_around
    z = np.linspace(0.0, height, n_along)
    T, Z = np.meshgrid(th, z, indexing="ij")
    V = np.column_stack([radius * np.cos(T.ravel()), radius * np.sin(T.ravel()), Z.ravel()])
    return V, _grid_faces(n_around, n_along, wrap_x=True)


def two_tip_sheet(
    n: int = 61,
    half_width: float = 1.5,
    tips: tuple[tuple[float, float], ...] = ((-0.75, 0.0), (0.75, 0.0)),
    slope: float = 1.0,
    tip_radius: float = 0.6,
) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Square sheet carrying conical spikes z = slope*(tip_radius - dist) near each tip.

    The apexes are grid vertices and are returned as the singular indices.
    The neck between the spikes is the flat part of the sheet.
    """
    x = np.linspace(-half_width, half_width, n)
    X, Y = np.meshgrid(x, x, indexing="ij")
    P = np.column_stack([X.ravel(), Y.ravel()])
    z = np.zeros(len(P))
    sing = []
    for cx, cy in tips:
        d = np.hypot(P[:, 0] - cx, P[:, 1] - cy)
        k = int(np.argmin(d))
        if d[k] > 1e-9:
            raise ValueError("tip positions must lie on grid vertices")
        sing.append(k)
        z += slope * np.maximum(0.0, tip_radius - d)
    V = np.column_stack([P, z])
    return V, _grid_faces(n, n), np.array(sorted(sing), dtype=np.int64)
