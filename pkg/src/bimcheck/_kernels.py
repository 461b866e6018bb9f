"""Hot numeric kernels with a numba fast path and a pure-numpy fallback.

The backend is chosen at import time: numba when importable, unless the
environment variable ``BIMCHECK_NUMBA`` is set to ``0``/``false``/``off``.
``set_backend()`` switches at runtime (used by the benchmark and the
parity tests). Both paths are kept semantically identical; the parity
suite in tests/test_kernels.py asserts it on random inputs.
"""

import os

import numpy as np

_DISABLE_VALUES = ("0", "false", "off", "no")


def _numba_requested():
    return os.environ.get("BIMCHECK_NUMBA", "1").strip().lower() not in _DISABLE_VALUES


try:
    if _numba_requested():
        from numba import njit

        _HAVE_NUMBA = True
    else:
        _HAVE_NUMBA = False
except ImportError:  # pragma: no cover - numba is a declared dependency
    _HAVE_NUMBA = False

_backend = "numba" if _HAVE_NUMBA else "numpy"


def backend():
    return _backend


def set_backend(name):
    """Select 'numba' or 'numpy' at runtime. Returns the active backend."""
    global _backend
    if name not in ("numba", "numpy"):
        raise ValueError(f"unknown backend {name!r}")
    if name == "numba" and not _HAVE_NUMBA:
        raise RuntimeError("numba backend requested but numba is not available")
    _backend = name
    return _backend


# ---------------------------------------------------------------------------
# triangle-mesh plane slicing
#
# Returns (k, 4) rows [ax, ay, bx, by]: the horizontal-plane intersection
# segment of each triangle that crosses z. Vertices within `snap` of the
# plane are treated as lying on it. Fully coplanar triangles are handled
# by the caller (boundary-edge extraction); triangles with an edge on the
# plane contribute that edge only when the third vertex is above, so the
# pair of solids meeting at the plane emits the edge exactly once.
# ---------------------------------------------------------------------------

def _slice_crossing_np(verts, tris, z, snap):
    if len(tris) == 0:
        return np.empty((0, 4))
    tv = verts[tris]                      # (m, 3, 3)
    d = tv[:, :, 2] - z
    d = np.where(np.abs(d) < snap, 0.0, d)
    pos = (d > 0).sum(axis=1)
    neg = (d < 0).sum(axis=1)
    zer = (d == 0).sum(axis=1)

    segs = []

    # two edges crossing: one vertex on one side, two on the other
    basic = (zer == 0) & (pos > 0) & (neg > 0)
    if basic.any():
        db = d[basic]
        tb = tv[basic]
        odd = np.where((db > 0).sum(axis=1) == 1,
                       np.argmax(db > 0, axis=1),
                       np.argmax(db < 0, axis=1))
        idx = np.arange(len(db))
        o1 = (odd + 1) % 3
        o2 = (odd + 2) % 3
        pa = tb[idx, odd]
        da = db[idx, odd]
        p1 = tb[idx, o1]
        p2 = tb[idx, o2]
        t1 = da / (da - db[idx, o1])
        t2 = da / (da - db[idx, o2])
        q1 = pa[:, :2] + (p1[:, :2] - pa[:, :2]) * t1[:, None]
        q2 = pa[:, :2] + (p2[:, :2] - pa[:, :2]) * t2[:, None]
        segs.append(np.hstack([q1, q2]))

    # one vertex on the plane, the other two on opposite sides
    vertex = (zer == 1) & (pos == 1) & (neg == 1)
    if vertex.any():
        dv = d[vertex]
        tvx = tv[vertex]
        idx = np.arange(len(dv))
        zi = np.argmax(dv == 0, axis=1)
        pi = np.argmax(dv > 0, axis=1)
        ni = np.argmax(dv < 0, axis=1)
        a = tvx[idx, zi][:, :2]
        pp = tvx[idx, pi]
        pn = tvx[idx, ni]
        dp = dv[idx, pi]
        dn = dv[idx, ni]
        t = dp / (dp - dn)
        b = pp[:, :2] + (pn[:, :2] - pp[:, :2]) * t[:, None]
        segs.append(np.hstack([a, b]))

    # one edge on the plane, third vertex above
    edge = (zer == 2) & (pos == 1)
    if edge.any():
        de = d[edge]
        te = tv[edge]
        idx = np.arange(len(de))
        up = np.argmax(de > 0, axis=1)
        e1 = (up + 1) % 3
        e2 = (up + 2) % 3
        a = te[idx, e1][:, :2]
        b = te[idx, e2][:, :2]
        segs.append(np.hstack([a, b]))

    if not segs:
        return np.empty((0, 4))
    return np.vstack(segs)


def _slice_crossing_jit_impl(verts, tris, z, snap):
    m = tris.shape[0]
    out = np.empty((m, 4))
    n = 0
    for t in range(m):
        d0 = verts[tris[t, 0], 2] - z
        d1 = verts[tris[t, 1], 2] - z
        d2 = verts[tris[t, 2], 2] - z
        if -snap < d0 < snap:
            d0 = 0.0
        if -snap < d1 < snap:
            d1 = 0.0
        if -snap < d2 < snap:
            d2 = 0.0
        npos = (d0 > 0) + (d1 > 0) + (d2 > 0)
        nneg = (d0 < 0) + (d1 < 0) + (d2 < 0)
        nzer = 3 - npos - nneg
        if npos == 3 or nneg == 3 or nzer == 3:
            continue
        if nzer == 0:
            if npos == 0 or nneg == 0:
                continue
            # odd vertex is the one alone on its side
            if npos == 1:
                if d0 > 0:
                    odd = 0
                elif d1 > 0:
                    odd = 1
                else:
                    odd = 2
            else:
                if d0 < 0:
                    odd = 0
                elif d1 < 0:
                    odd = 1
                else:
                    odd = 2
            o1 = (odd + 1) % 3
            o2 = (odd + 2) % 3
            ds = np.empty(3)
            ds[0] = d0
            ds[1] = d1
            ds[2] = d2
            pa = verts[tris[t, odd]]
            p1 = verts[tris[t, o1]]
            p2 = verts[tris[t, o2]]
            t1 = ds[odd] / (ds[odd] - ds[o1])
            t2 = ds[odd] / (ds[odd] - ds[o2])
            out[n, 0] = pa[0] + (p1[0] - pa[0]) * t1
            out[n, 1] = pa[1] + (p1[1] - pa[1]) * t1
            out[n, 2] = pa[0] + (p2[0] - pa[0]) * t2
            out[n, 3] = pa[1] + (p2[1] - pa[1]) * t2
            n += 1
        elif nzer == 1 and npos == 1 and nneg == 1:
            if d0 == 0.0:
                zi = 0
            elif d1 == 0.0:
                zi = 1
            else:
                zi = 2
            if d0 > 0:
                pi = 0
            elif d1 > 0:
                pi = 1
            else:
                pi = 2
            if d0 < 0:
                ni = 0
            elif d1 < 0:
                ni = 1
            else:
                ni = 2
            ds = np.empty(3)
            ds[0] = d0
            ds[1] = d1
            ds[2] = d2
            a = verts[tris[t, zi]]
            pp = verts[tris[t, pi]]
            pn = verts[tris[t, ni]]
            tt = ds[pi] / (ds[pi] - ds[ni])
            out[n, 0] = a[0]
            out[n, 1] = a[1]
            out[n, 2] = pp[0] + (pn[0] - pp[0]) * tt
            out[n, 3] = pp[1] + (pn[1] - pp[1]) * tt
            n += 1
        elif nzer == 2 and npos == 1:
            if d0 > 0:
                up = 0
            elif d1 > 0:
                up = 1
            else:
                up = 2
            e1 = (up + 1) % 3
            e2 = (up + 2) % 3
            a = verts[tris[t, e1]]
            b = verts[tris[t, e2]]
            out[n, 0] = a[0]
            out[n, 1] = a[1]
            out[n, 2] = b[0]
            out[n, 3] = b[1]
            n += 1
    return out[:n]


# ---------------------------------------------------------------------------
# DBSCAN
#
# Standard semantics: a core point has >= min_pts neighbors within eps
# (inclusive radius, self counted). Seeds are scanned in index order and
# each cluster is fully expanded before the next seed, so border points
# shared between clusters deterministically join the earlier cluster.
# Noise is labeled -1.
# ---------------------------------------------------------------------------

def _dbscan_jit_impl(pts, eps, min_pts):
    n = pts.shape[0]
    labels = np.full(n, -2, np.int64)
    eps2 = eps * eps
    neigh = np.empty(n, np.int64)
    stack = np.empty(n * 4, np.int64)
    cluster = -1
    for i in range(n):
        if labels[i] != -2:
            continue
        cnt = 0
        for j in range(n):
            dx = pts[i, 0] - pts[j, 0]
            dy = pts[i, 1] - pts[j, 1]
            if dx * dx + dy * dy <= eps2:
                neigh[cnt] = j
                cnt += 1
        if cnt < min_pts:
            labels[i] = -1
            continue
        cluster += 1
        labels[i] = cluster
        top = 0
        for k in range(cnt):
            j = neigh[k]
            if labels[j] < 0 or labels[j] == -2:
                stack[top] = j
                top += 1
        while top > 0:
            top -= 1
            p = stack[top]
            if labels[p] >= 0:
                continue
            labels[p] = cluster
            cnt = 0
            for j in range(n):
                dx = pts[p, 0] - pts[j, 0]
                dy = pts[p, 1] - pts[j, 1]
                if dx * dx + dy * dy <= eps2:
                    neigh[cnt] = j
                    cnt += 1
            if cnt >= min_pts:
                for k in range(cnt):
                    j = neigh[k]
                    if labels[j] < 0:
                        if top >= stack.shape[0]:
                            grown = np.empty(stack.shape[0] * 2, np.int64)
                            grown[: stack.shape[0]] = stack
                            stack = grown
                        stack[top] = j
                        top += 1
    for i in range(n):
        if labels[i] == -2:
            labels[i] = -1
    return labels


def _dbscan_np(pts, eps, min_pts):
    n = len(pts)
    if n == 0:
        return np.empty(0, np.int64)
    # block the distance matrix to bound memory on large clouds
    block = max(1, int(4e7 // max(n, 1)))
    rows = []
    for s in range(0, n, block):
        d2 = ((pts[s:s + block, None, :] - pts[None, :, :]) ** 2).sum(-1)
        rows.append(d2 <= eps * eps)
    adj = np.vstack(rows)
    core = adj.sum(axis=1) >= min_pts
    labels = np.full(n, -2, np.int64)
    cluster = -1
    for i in range(n):
        if labels[i] != -2:
            continue
        if not core[i]:
            labels[i] = -1
            continue
        cluster += 1
        # expand the core component, claiming unlabeled border points
        frontier = np.array([i])
        labels[i] = cluster
        while frontier.size:
            reach = adj[frontier].any(axis=0)
            fresh = reach & ((labels == -2) | (labels == -1))
            labels[fresh] = cluster
            frontier = np.where(fresh & core)[0]
    labels[labels == -2] = -1
    return labels


# ---------------------------------------------------------------------------
# point-in-polygon (batch, boundary-inclusive within tol)
# ---------------------------------------------------------------------------

def _points_in_polygon_jit_impl(pts, ring, tol):
    n = pts.shape[0]
    m = ring.shape[0]
    out = np.zeros(n, np.bool_)
    for i in range(n):
        x = pts[i, 0]
        y = pts[i, 1]
        inside = False
        on_edge = False
        for j in range(m):
            ax = ring[j, 0]
            ay = ring[j, 1]
            bx = ring[(j + 1) % m, 0]
            by = ring[(j + 1) % m, 1]
            # distance to segment
            dx = bx - ax
            dy = by - ay
            ln2 = dx * dx + dy * dy
            if ln2 > 0:
                t = ((x - ax) * dx + (y - ay) * dy) / ln2
                if t < 0.0:
                    t = 0.0
                elif t > 1.0:
                    t = 1.0
                cx = ax + t * dx
                cy = ay + t * dy
            else:
                cx = ax
                cy = ay
            ddx = x - cx
            ddy = y - cy
            if ddx * ddx + ddy * ddy <= tol * tol:
                on_edge = True
                break
            if (ay > y) != (by > y):
                xi = ax + (y - ay) * dx / dy
                if x < xi:
                    inside = not inside
        out[i] = inside or on_edge
    return out


def _points_in_polygon_np(pts, ring, tol):
    n = len(pts)
    if n == 0:
        return np.zeros(0, bool)
    a = ring
    b = np.roll(ring, -1, axis=0)
    dx = (b[:, 0] - a[:, 0])[None, :]
    dy = (b[:, 1] - a[:, 1])[None, :]
    px = pts[:, 0][:, None]
    py = pts[:, 1][:, None]
    ln2 = dx * dx + dy * dy
    ln2 = np.where(ln2 == 0, 1.0, ln2)
    t = ((px - a[None, :, 0]) * dx + (py - a[None, :, 1]) * dy) / ln2
    t = np.clip(t, 0.0, 1.0)
    cx = a[None, :, 0] + t * dx
    cy = a[None, :, 1] + t * dy
    on_edge = (((px - cx) ** 2 + (py - cy) ** 2) <= tol * tol).any(axis=1)
    crosses = (a[None, :, 1] > py) != (b[None, :, 1] > py)
    with np.errstate(divide="ignore", invalid="ignore"):
        xi = a[None, :, 0] + (py - a[None, :, 1]) * dx / np.where(dy == 0, 1.0, dy)
    hits = crosses & (px < xi)
    inside = (hits.sum(axis=1) % 2) == 1
    return inside | on_edge


# ---------------------------------------------------------------------------
# does segment p->q cross any edge of the open chain? Edges that merely
# share an endpoint with p or q are skipped; collinear overlap counts as
# a crossing. Used by the concave-hull walk.
# ---------------------------------------------------------------------------

def _chain_blocks_jit_impl(chain, nchain, px, py, qx, qy):
    eps = 1e-12
    for j in range(nchain - 1):
        ax = chain[j, 0]
        ay = chain[j, 1]
        bx = chain[j + 1, 0]
        by = chain[j + 1, 1]
        # skip edges sharing an endpoint with the candidate segment
        if (abs(ax - px) < 1e-9 and abs(ay - py) < 1e-9) or \
           (abs(bx - px) < 1e-9 and abs(by - py) < 1e-9) or \
           (abs(ax - qx) < 1e-9 and abs(ay - qy) < 1e-9) or \
           (abs(bx - qx) < 1e-9 and abs(by - qy) < 1e-9):
            continue
        d1 = (bx - ax) * (py - ay) - (by - ay) * (px - ax)
        d2 = (bx - ax) * (qy - ay) - (by - ay) * (qx - ax)
        d3 = (qx - px) * (ay - py) - (qy - py) * (ax - px)
        d4 = (qx - px) * (by - py) - (qy - py) * (bx - px)
        if ((d1 > eps and d2 < -eps) or (d1 < -eps and d2 > eps)) and \
           ((d3 > eps and d4 < -eps) or (d3 < -eps and d4 > eps)):
            return True
        # collinear overlap
        if abs(d1) <= eps and abs(d2) <= eps:
            lox = min(ax, bx) - 1e-9
            hix = max(ax, bx) + 1e-9
            loy = min(ay, by) - 1e-9
            hiy = max(ay, by) + 1e-9
            if (lox <= px <= hix and loy <= py <= hiy) or \
               (lox <= qx <= hix and loy <= qy <= hiy) or \
               (min(px, qx) - 1e-9 <= ax <= max(px, qx) + 1e-9 and
                    min(py, qy) - 1e-9 <= ay <= max(py, qy) + 1e-9):
                return True
    return False


def _chain_blocks_np(chain, nchain, px, py, qx, qy):
    # numpy fallback mirrors the scalar logic; chains are short so this
    # vectorization is mostly about avoiding a Python inner loop
    if nchain < 2:
        return False
    a = chain[: nchain - 1]
    b = chain[1:nchain]
    share = (
        (np.abs(a[:, 0] - px) < 1e-9) & (np.abs(a[:, 1] - py) < 1e-9)
        | (np.abs(b[:, 0] - px) < 1e-9) & (np.abs(b[:, 1] - py) < 1e-9)
        | (np.abs(a[:, 0] - qx) < 1e-9) & (np.abs(a[:, 1] - qy) < 1e-9)
        | (np.abs(b[:, 0] - qx) < 1e-9) & (np.abs(b[:, 1] - qy) < 1e-9)
    )
    eps = 1e-12
    d1 = (b[:, 0] - a[:, 0]) * (py - a[:, 1]) - (b[:, 1] - a[:, 1]) * (px - a[:, 0])
    d2 = (b[:, 0] - a[:, 0]) * (qy - a[:, 1]) - (b[:, 1] - a[:, 1]) * (qx - a[:, 0])
    d3 = (qx - px) * (a[:, 1] - py) - (qy - py) * (a[:, 0] - px)
    d4 = (qx - px) * (b[:, 1] - py) - (qy - py) * (b[:, 0] - px)
    proper = (((d1 > eps) & (d2 < -eps)) | ((d1 < -eps) & (d2 > eps))) & \
             (((d3 > eps) & (d4 < -eps)) | ((d3 < -eps) & (d4 > eps)))
    col = (np.abs(d1) <= eps) & (np.abs(d2) <= eps)
    if col.any():
        lox = np.minimum(a[:, 0], b[:, 0]) - 1e-9
        hix = np.maximum(a[:, 0], b[:, 0]) + 1e-9
        loy = np.minimum(a[:, 1], b[:, 1]) - 1e-9
        hiy = np.maximum(a[:, 1], b[:, 1]) + 1e-9
        p_in = (lox <= px) & (px <= hix) & (loy <= py) & (py <= hiy)
        q_in = (lox <= qx) & (qx <= hix) & (loy <= qy) & (qy <= hiy)
        a_in = (min(px, qx) - 1e-9 <= a[:, 0]) & (a[:, 0] <= max(px, qx) + 1e-9) & \
               (min(py, qy) - 1e-9 <= a[:, 1]) & (a[:, 1] <= max(py, qy) + 1e-9)
        col = col & (p_in | q_in | a_in)
    else:
        col = np.zeros(len(a), bool)
    return bool(((proper | col) & ~share).any())


if _HAVE_NUMBA:
    _slice_crossing_jit = njit(cache=True)(_slice_crossing_jit_impl)
    _dbscan_jit = njit(cache=True)(_dbscan_jit_impl)
    _points_in_polygon_jit = njit(cache=True)(_points_in_polygon_jit_impl)
    _chain_blocks_jit = njit(cache=True)(_chain_blocks_jit_impl)


def slice_crossing(verts, tris, z, snap):
    verts = np.ascontiguousarray(verts, dtype=np.float64)
    tris = np.ascontiguousarray(tris, dtype=np.int64)
    if _backend == "numba":
        return _slice_crossing_jit(verts, tris, float(z), float(snap))
    return _slice_crossing_np(verts, tris, float(z), float(snap))


def dbscan_labels(points, eps, min_pts):
    pts = np.ascontiguousarray(points, dtype=np.float64)
    if _backend == "numba":
        return _dbscan_jit(pts, float(eps), int(min_pts))
    return _dbscan_np(pts, float(eps), int(min_pts))


def points_in_polygon(points, ring, tol=1e-9):
    pts = np.ascontiguousarray(points, dtype=np.float64)
    rng = np.ascontiguousarray(ring, dtype=np.float64)
    if _backend == "numba":
        return _points_in_polygon_jit(pts, rng, float(tol))
    return _points_in_polygon_np(pts, rng, float(tol))


def chain_blocks(chain, nchain, p, q):
    ch = np.ascontiguousarray(chain, dtype=np.float64)
    if _backend == "numba":
        return bool(_chain_blocks_jit(ch, int(nchain), float(p[0]), float(p[1]),
                                      float(q[0]), float(q[1])))
    return _chain_blocks_np(ch, int(nchain), float(p[0]), float(p[1]),
                            float(q[0]), float(q[1]))


def warmup():
    """Trigger JIT compilation of all kernels on tiny inputs."""
    verts = np.array([[0.0, 0.0, 0.0], [1.0, 0.0, 0.0], [0.0, 1.0, 1.0]])
    tris = np.array([[0, 1, 2]], dtype=np.int64)
    slice_crossing(verts, tris, 0.5, 1e-7)
    pts = np.array([[0.0, 0.0], [0.1, 0.0], [5.0, 5.0]])
    dbscan_labels(pts, 0.5, 2)
    ring = np.array([[0.0, 0.0], [1.0, 0.0], [1.0, 1.0], [0.0, 1.0]])
    points_in_polygon(pts, ring, 1e-9)
    chain_blocks(ring, 4, (0.2, 0.2), (0.8, 0.8))
