"""Compiled graph searches over CSR adjacency arrays.

All kernels take the CSR triple ``(indptr, indices, costs)`` of a symmetric
graph whose neighbour lists are sorted by vertex index. Heap entries are
``(distance, vertex)`` tuples, so ties are always broken by the smaller vertex
index and every search is deterministic.
"""

import heapq

import numpy as np
from numba import njit


@njit(cache=True, nogil=True)
def dijkstra(indptr, indices, costs, sources, offsets, limit, mask):
    """Multi-source Dijkstra with per-source start offsets.

    Vertices with ``mask[v] == False`` are never entered. Distances beyond
    ``limit`` stay at ``inf``. Returns ``(dist, pred, origin)``.
    """
    n = indptr.size - 1
    dist = np.full(n, np.inf)
    pred = np.full(n, -1, np.int64)
    origin = np.full(n, -1, np.int64)
    heap = [(0.0, np.int64(0)) for _ in range(0)]
    for i in range(sources.size):
        s = sources[i]
        o = offsets[i]
        if mask[s] and o <= limit and o < dist[s]:
            dist[s] = o
            origin[s] = s
            heapq.heappush(heap, (o, np.int64(s)))
    while len(heap) > 0:
        d, u = heapq.heappop(heap)
        if d > dist[u]:
            continue
        for k in range(indptr[u], indptr[u + 1]):
            v = indices[k]
            if not mask[v]:
                continue
            nd = d + costs[k]
            if nd < dist[v] and nd <= limit:
                dist[v] = nd
                pred[v] = u
                origin[v] = origin[u]
                heapq.heappush(heap, (nd, np.int64(v)))
    return dist, pred, origin


@njit(cache=True, nogil=True)
def lexicographic_walk(indptr, indices, costs, dist_to_target, start, rtol):
    """Walk from ``start`` to the target along a shortest path.

    ``dist_to_target`` holds distances to the target vertex. At every step the
    smallest-index neighbour lying on some shortest path is taken, which gives
    the lexicographically smallest vertex sequence among shortest paths.
    """
    n = indptr.size - 1
    out = np.empty(n, np.int64)
    m = 0
    u = start
    out[m] = u
    m += 1
    while dist_to_target[u] > 0.0:
        du = dist_to_target[u]
        nxt = -1
        for k in range(indptr[u], indptr[u + 1]):
            v = indices[k]
            dv = dist_to_target[v]
            if dv < du and costs[k] + dv <= du * (1.0 + rtol) + 1e-300:
                nxt = v
                break
        # a shortest path is simple, so more than n vertices means a cycle
        if nxt < 0 or m >= n:
            return out[:0]
        u = nxt
        out[m] = u
        m += 1
    return out[:m]


@njit(cache=True, nogil=True)
def _ball_into(indptr, indices, costs, src, radius, strict, dist, touched, verts, dvals):
    # dist is +inf everywhere on entry and is restored before returning.
    heap = [(0.0, np.int64(src))]
    dist[src] = 0.0
    nt = 1
    touched[0] = src
    m = 0
    while len(heap) > 0:
        d, u = heapq.heappop(heap)
        if d > dist[u]:
            continue
        verts[m] = u
        dvals[m] = d
        m += 1
        for k in range(indptr[u], indptr[u + 1]):
            v = indices[k]
            nd = d + costs[k]
            inside = nd < radius if strict else nd <= radius
            if inside and nd < dist[v]:
                if dist[v] == np.inf:
                    touched[nt] = v
                    nt += 1
                dist[v] = nd
                heapq.heappush(heap, (nd, np.int64(v)))
    for i in range(nt):
        dist[touched[i]] = np.inf
    return m


@njit(cache=True, nogil=True)
def _edge_maxmin(A, B, D, L, alpha):
    """max over t in [0, 1] of min(A + B t, alpha / (D + L t)).

    The first term is |A| interpolated along an edge, the second the tube
    bound at the point reached through the edge's start at distance D.
    """
    if B <= 0.0:
        return 0.0  # never beats the start vertex itself
    if A * D >= alpha:
        return 0.0  # alpha / dist binds from t = 0 on
    if (A + B) * (D + L) <= alpha:
        return 0.0  # a binds on the whole edge; the end vertex is as good
    # (A + B t)(D + L t) = alpha
    qa = B * L
    qb = A * L + B * D
    qc = A * D - alpha
    t = (-qb + np.sqrt(qb * qb - 4.0 * qa * qc)) / (2.0 * qa)
    return A + B * t


@njit(cache=True, nogil=True)
def local_maxmin(indptr, indices, costs, vertices, radii, a, a_rel, alpha):
    """For each vertex x: max of min(a(y), alpha/d(x,y)) over the closed ball.

    ``y`` ranges over vertices and over points of edges leaving the ball's
    vertices, with ``a`` interpolated linearly along each edge.
    """
    n = indptr.size - 1
    dist = np.full(n, np.inf)
    touched = np.empty(n, np.int64)
    verts = np.empty(n, np.int64)
    dvals = np.empty(n)
    out = np.zeros(vertices.size)
    for i in range(vertices.size):
        x = vertices[i]
        m = _ball_into(indptr, indices, costs, x, radii[i], False, dist, touched, verts, dvals)
        best = 0.0
        for j in range(m):
            y = verts[j]
            if not a_rel[y]:
                continue
            d = dvals[j]
            c = a[y]
            if d > 0.0:
                t = alpha / d
                if t < c:
                    c = t
            if c > best:
                best = c
            for k in range(indptr[y], indptr[y + 1]):
                v = indices[k]
                if not a_rel[v]:
                    continue
                c = _edge_maxmin(a[y], a[v] - a[y], d, costs[k], alpha)
                if c > best:
                    best = c
        out[i] = best
    return out


@njit(cache=True, nogil=True)
def greedy_cover(indptr, indices, costs, order, radii):
    """Select centres in ``order`` unless already inside a selected closed ball."""
    n = indptr.size - 1
    dist = np.full(n, np.inf)
    touched = np.empty(n, np.int64)
    verts = np.empty(n, np.int64)
    dvals = np.empty(n)
    covered = np.zeros(n, np.bool_)
    centers = np.empty(n, np.int64)
    nc = 0
    for i in range(order.size):
        v = order[i]
        if covered[v]:
            continue
        centers[nc] = v
        nc += 1
        m = _ball_into(indptr, indices, costs, v, radii[v], False, dist, touched, verts, dvals)
        for j in range(m):
            covered[verts[j]] = True
    return centers[:nc]


@njit(cache=True, nogil=True)
def balls(indptr, indices, costs, centers, radii, strict):
    """Concatenated ball memberships: ``(ptr, vertices, distances)`` per centre."""
    n = indptr.size - 1
    dist = np.full(n, np.inf)
    touched = np.empty(n, np.int64)
    verts = np.empty(n, np.int64)
    dvals = np.empty(n)
    ptr = np.zeros(centers.size + 1, np.int64)
    cap = max(16, 4 * centers.size)
    all_v = np.empty(cap, np.int64)
    all_d = np.empty(cap)
    total = 0
    for i in range(centers.size):
        m = _ball_into(indptr, indices, costs, centers[i], radii[i], strict, dist, touched, verts, dvals)
        if total + m > cap:
            while total + m > cap:
                cap *= 2
            nv = np.empty(cap, np.int64)
            nd = np.empty(cap)
            nv[:total] = all_v[:total]
            nd[:total] = all_d[:total]
            all_v = nv
            all_d = nd
        all_v[total:total + m] = verts[:m]
        all_d[total:total + m] = dvals[:m]
        total += m
        ptr[i + 1] = total
    return ptr, all_v[:total], all_d[:total]


@njit(cache=True, nogil=True)
def color_families(ptr, verts, vptr, owners):
    """Greedy colouring of centres whose balls share a vertex.

    ``ptr, verts`` list each centre's ball; ``vptr, owners`` is the inverted
    index (vertex -> centres). Centres are coloured in index order with the
    smallest family unused by already coloured conflicting centres.
    """
    nc = ptr.size - 1
    fam = np.full(nc, -1, np.int64)
    used = np.zeros(nc + 1, np.bool_)
    for i in range(nc):
        for k in range(ptr[i], ptr[i + 1]):
            v = verts[k]
            for t in range(vptr[v], vptr[v + 1]):
                f = fam[owners[t]]
                if f >= 0:
                    used[f] = True
        f = 0
        while used[f]:
            f += 1
        fam[i] = f
        for k in range(ptr[i], ptr[i + 1]):
            v = verts[k]
            for t in range(vptr[v], vptr[v + 1]):
                g = fam[owners[t]]
                if g >= 0:
                    used[g] = False
    return fam
