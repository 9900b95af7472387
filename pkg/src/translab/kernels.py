"""Hot inner loops, each in two interchangeable flavours.

Every kernel ``name`` has a loop implementation ``_name_nb`` compiled with
numba and a vectorized implementation ``_name_np``.  The public function
dispatches on the module flag ``USE_NUMBA`` (see :mod:`translab._accel`).  Both flavours
return identical results; ``benchmarks/bench_kernels.py`` times them.
"""
import numpy as np

from ._accel import USE_NUMBA, njit

_BARY_EPS = 1e-12


# ---------------------------------------------------------------------------
# closed polyline self-intersection
# ---------------------------------------------------------------------------

@njit
def _polyline_crossing_nb(pts):
    # sort-and-sweep on x; the lexicographically first crossing pair wins
    n = pts.shape[0]
    xlo = np.empty(n)
    xhi = np.empty(n)
    for i in range(n):
        i1 = (i + 1) % n
        xlo[i] = min(pts[i, 0], pts[i1, 0])
        xhi[i] = max(pts[i, 0], pts[i1, 0])
    order = np.argsort(xlo)
    bi, bj = n, n
    for a in range(n):
        i = order[a]
        i1 = (i + 1) % n
        px, py = pts[i, 0], pts[i, 1]
        qx, qy = pts[i1, 0], pts[i1, 1]
        aymin, aymax = min(py, qy), max(py, qy)
        for b in range(a + 1, n):
            j = order[b]
            if xlo[j] > xhi[i]:
                break
            lo, hi = min(i, j), max(i, j)
            if hi - lo < 2 or (lo == 0 and hi == n - 1):
                continue
            if lo > bi or (lo == bi and hi >= bj):
                continue
            j1 = (j + 1) % n
            rx, ry = pts[j, 0], pts[j, 1]
            sx, sy = pts[j1, 0], pts[j1, 1]
            if max(ry, sy) < aymin or min(ry, sy) > aymax:
                continue
            o1 = (qx - px) * (ry - py) - (qy - py) * (rx - px)
            o2 = (qx - px) * (sy - py) - (qy - py) * (sx - px)
            o3 = (sx - rx) * (py - ry) - (sy - ry) * (px - rx)
            o4 = (sx - rx) * (qy - ry) - (sy - ry) * (qx - rx)
            if o1 * o2 <= 0.0 and o3 * o4 <= 0.0:
                bi, bj = lo, hi
    if bi == n:
        return False, -1, -1
    return True, bi, bj


def _segment_pairs_np(pts, nxt):
    """Candidate segment pairs ``i < j`` whose bounding boxes may overlap.

    Boxes are hashed into square cells of side equal to the longest box
    side, so every box covers at most 2 x 2 cells and two boxes that touch
    share a cell.  Pairs come back sorted lexicographically.
    """
    n = len(pts)
    lo, hi = np.minimum(pts, nxt), np.maximum(pts, nxt)
    cell = float(np.max(hi - lo))
    if not np.isfinite(cell) or cell <= 0.0:
        cell = 1.0
    origin = lo.min(axis=0)
    c0 = np.floor((lo - origin) / cell).astype(np.int64)
    c1 = np.floor((hi - origin) / cell).astype(np.int64)
    ny = int(c1[:, 1].max()) + 2
    seg, key = [], []
    for a in (0, 1):
        for b in (0, 1):
            m = (c0[:, 0] + a <= c1[:, 0]) & (c0[:, 1] + b <= c1[:, 1])
            seg.append(np.nonzero(m)[0])
            key.append((c0[m, 0] + a) * ny + c0[m, 1] + b)
    seg, key = np.concatenate(seg), np.concatenate(key)
    order = np.lexsort((seg, key))
    seg, key = seg[order], key[order]
    ii, jj = [], []
    d = 1
    while d < len(key):
        same = key[:-d] == key[d:]
        if not same.any():
            break
        ii.append(seg[:-d][same])
        jj.append(seg[d:][same])
        d += 1
    if not ii:
        return np.empty(0, np.int64), np.empty(0, np.int64)
    i, j = np.concatenate(ii), np.concatenate(jj)
    i, j = np.minimum(i, j), np.maximum(i, j)
    keep = (j - i >= 2) & ~((i == 0) & (j == n - 1))
    code = np.unique(i[keep] * n + j[keep])
    return code // n, code % n


def _polyline_crossing_np(pts, chunk=1 << 18):
    pts = np.asarray(pts, dtype=float)
    nxt = np.roll(pts, -1, axis=0)
    ii, jj = _segment_pairs_np(pts, nxt)
    for start in range(0, len(ii), chunk):
        i = ii[start:start + chunk]
        j = jj[start:start + chunk]
        p, q, r, s = pts[i], nxt[i], pts[j], nxt[j]
        box = (
            (np.maximum(r[:, 0], s[:, 0]) >= np.minimum(p[:, 0], q[:, 0]))
            & (np.minimum(r[:, 0], s[:, 0]) <= np.maximum(p[:, 0], q[:, 0]))
            & (np.maximum(r[:, 1], s[:, 1]) >= np.minimum(p[:, 1], q[:, 1]))
            & (np.minimum(r[:, 1], s[:, 1]) <= np.maximum(p[:, 1], q[:, 1]))
        )
        d = q - p
        e = s - r
        o1 = d[:, 0] * (r[:, 1] - p[:, 1]) - d[:, 1] * (r[:, 0] - p[:, 0])
        o2 = d[:, 0] * (s[:, 1] - p[:, 1]) - d[:, 1] * (s[:, 0] - p[:, 0])
        o3 = e[:, 0] * (p[:, 1] - r[:, 1]) - e[:, 1] * (p[:, 0] - r[:, 0])
        o4 = e[:, 0] * (q[:, 1] - r[:, 1]) - e[:, 1] * (q[:, 0] - r[:, 0])
        hit = box & (o1 * o2 <= 0.0) & (o3 * o4 <= 0.0)
        if hit.any():
            k = int(np.argmax(hit))
            return True, int(i[k]), int(j[k])
    return False, -1, -1


def polyline_crossing(pts):
    """First pair of non-adjacent crossing segments of a closed polyline.

    Segment ``i`` joins ``pts[i]`` and ``pts[(i+1) % n]``.  Touching counts
    as crossing.  Returns ``(found, i, j)`` with ``i < j``, or
    ``(False, -1, -1)``.
    """
    pts = np.ascontiguousarray(pts, dtype=np.float64)
    if USE_NUMBA:
        found, i, j = _polyline_crossing_nb(pts)
        return bool(found), int(i), int(j)
    return _polyline_crossing_np(pts)


# ---------------------------------------------------------------------------
# ray/triangle hits on a regular grid of parallel rays
# ---------------------------------------------------------------------------

def _bbox_ranges(uv, origin, cell, nx, ny):
    lo = uv.min(axis=1)
    hi = uv.max(axis=1)
    i0 = np.maximum(np.ceil((lo[:, 0] - origin[0]) / cell - 0.5), 0).astype(np.int64)
    i1 = np.minimum(np.floor((hi[:, 0] - origin[0]) / cell - 0.5), nx - 1).astype(np.int64)
    j0 = np.maximum(np.ceil((lo[:, 1] - origin[1]) / cell - 0.5), 0).astype(np.int64)
    j1 = np.minimum(np.floor((hi[:, 1] - origin[1]) / cell - 0.5), ny - 1).astype(np.int64)
    return i0, i1, j0, j1


@njit
def _tri_scan_nb(uv, val, i0, i1, j0, j1, ox, oy, cell, ny, t, fill, bins, vals, tris, k):
    # counts (fill=False) or writes (fill=True) the hits of triangle t
    x0, y0 = uv[t, 0, 0], uv[t, 0, 1]
    ax, ay = uv[t, 1, 0] - x0, uv[t, 1, 1] - y0
    bx, by = uv[t, 2, 0] - x0, uv[t, 2, 1] - y0
    det = ax * by - ay * bx
    if abs(det) < 1e-300:
        return k
    for a in range(i0[t], i1[t] + 1):
        cx = ox + (a + 0.5) * cell - x0
        for b in range(j0[t], j1[t] + 1):
            cy = oy + (b + 0.5) * cell - y0
            l1 = (cx * by - cy * bx) / det
            l2 = (ax * cy - ay * cx) / det
            l0 = 1.0 - l1 - l2
            if l0 >= -1e-12 and l1 >= -1e-12 and l2 >= -1e-12:
                if fill:
                    bins[k] = a * ny + b
                    vals[k] = l0 * val[t, 0] + l1 * val[t, 1] + l2 * val[t, 2]
                    tris[k] = t
                k += 1
    return k


@njit
def _grid_hits_nb(uv, val, i0, i1, j0, j1, ox, oy, cell, ny):
    ntri = uv.shape[0]
    dummy_i = np.empty(0, dtype=np.int64)
    dummy_f = np.empty(0, dtype=np.float64)
    total = 0
    for t in range(ntri):
        total = _tri_scan_nb(uv, val, i0, i1, j0, j1, ox, oy, cell, ny, t, False,
                             dummy_i, dummy_f, dummy_i, total)
    bins = np.empty(total, dtype=np.int64)
    vals = np.empty(total, dtype=np.float64)
    tris = np.empty(total, dtype=np.int64)
    k = 0
    for t in range(ntri):
        k = _tri_scan_nb(uv, val, i0, i1, j0, j1, ox, oy, cell, ny, t, True,
                         bins, vals, tris, k)
    return bins, vals, tris


def _grid_hits_np(uv, val, i0, i1, j0, j1, ox, oy, cell, ny, chunk=1 << 20):
    wi = np.maximum(i1 - i0 + 1, 0)
    wj = np.maximum(j1 - j0 + 1, 0)
    counts = wi * wj
    out_b, out_v, out_t = [], [], []
    tri_idx = np.nonzero(counts)[0]
    csum = np.cumsum(counts[tri_idx])
    cuts = np.searchsorted(csum, np.arange(chunk, csum[-1], chunk)) if len(csum) else []
    for sel in np.split(tri_idx, cuts):
        if len(sel) == 0:
            continue
        cnt = counts[sel]
        t = np.repeat(sel, cnt)
        off = np.repeat(np.cumsum(cnt) - cnt, cnt)
        k = np.arange(len(t)) - off
        a = i0[t] + k // wj[t]
        b = j0[t] + k % wj[t]
        p0 = uv[t, 0]
        e1 = uv[t, 1] - p0
        e2 = uv[t, 2] - p0
        det = e1[:, 0] * e2[:, 1] - e1[:, 1] * e2[:, 0]
        cx = ox + (a + 0.5) * cell - p0[:, 0]
        cy = oy + (b + 0.5) * cell - p0[:, 1]
        with np.errstate(divide="ignore", invalid="ignore"):
            l1 = (cx * e2[:, 1] - cy * e2[:, 0]) / det
            l2 = (e1[:, 0] * cy - e1[:, 1] * cx) / det
            l0 = 1.0 - l1 - l2
        ok = (np.abs(det) >= 1e-300) & (l0 >= -_BARY_EPS) & (l1 >= -_BARY_EPS) & (l2 >= -_BARY_EPS)
        out_b.append((a * ny + b)[ok])
        out_v.append((l0 * val[t, 0] + l1 * val[t, 1] + l2 * val[t, 2])[ok])
        out_t.append(t[ok])
    if not out_b:
        return np.empty(0, np.int64), np.empty(0), np.empty(0, np.int64)
    return (np.concatenate(out_b).astype(np.int64), np.concatenate(out_v),
            np.concatenate(out_t).astype(np.int64))


def grid_hits(uv, val, origin, cell, shape):
    """Intersect a grid of parallel rays with triangles.

    ``uv`` holds triangle vertices projected onto the plane orthogonal to
    the rays, shape ``(T, 3, 2)``; ``val`` the coordinate along the ray at
    each vertex, shape ``(T, 3)``.  Rays pass through the cell centres
    ``origin + (a + 1/2, b + 1/2) * cell`` for ``0 <= a < nx``,
    ``0 <= b < ny``.  Returns ``(bins, values, triangles)`` with flattened
    bin index ``a * ny + b``, ordered by triangle.
    """
    uv = np.ascontiguousarray(uv, dtype=np.float64)
    val = np.ascontiguousarray(val, dtype=np.float64)
    nx, ny = int(shape[0]), int(shape[1])
    if len(uv) == 0:
        return np.empty(0, np.int64), np.empty(0), np.empty(0, np.int64)
    i0, i1, j0, j1 = _bbox_ranges(uv, origin, cell, nx, ny)
    args = (uv, val, i0, i1, j0, j1, float(origin[0]), float(origin[1]), float(cell), ny)
    if USE_NUMBA:
        return _grid_hits_nb(*args)
    return _grid_hits_np(*args)


# ---------------------------------------------------------------------------
# per-bin reductions
# ---------------------------------------------------------------------------

@njit
def _binned_minmax_nb(bins, vals, nbins):
    lo = np.full(nbins, np.inf)
    hi = np.full(nbins, -np.inf)
    cnt = np.zeros(nbins, dtype=np.int64)
    for k in range(bins.shape[0]):
        b = bins[k]
        v = vals[k]
        if v < lo[b]:
            lo[b] = v
        if v > hi[b]:
            hi[b] = v
        cnt[b] += 1
    return lo, hi, cnt


def _binned_minmax_np(bins, vals, nbins):
    lo = np.full(nbins, np.inf)
    hi = np.full(nbins, -np.inf)
    np.minimum.at(lo, bins, vals)
    np.maximum.at(hi, bins, vals)
    cnt = np.bincount(bins, minlength=nbins).astype(np.int64)
    return lo, hi, cnt


def binned_minmax(bins, vals, nbins):
    """Per-bin minimum, maximum and count (empty bins: +inf, -inf, 0)."""
    bins = np.ascontiguousarray(bins, dtype=np.int64)
    vals = np.ascontiguousarray(vals, dtype=np.float64)
    if USE_NUMBA:
        return _binned_minmax_nb(bins, vals, int(nbins))
    return _binned_minmax_np(bins, vals, int(nbins))


# ---------------------------------------------------------------------------
# moving-plane scan over many plane offsets
# ---------------------------------------------------------------------------

@njit
def _sweep_scan_nb(bins, x, nbins, t_grid, tol):
    nt = t_grid.shape[0]
    graph_ok = np.ones(nt, dtype=np.bool_)
    dom_ok = np.ones(nt, dtype=np.bool_)
    graph_wit = np.full(nt, -1, dtype=np.int64)
    dom_wit = np.full(nt, -1, dtype=np.int64)
    margin = np.full(nt, np.inf)
    n_both = np.zeros(nt, dtype=np.int64)
    pmax = np.empty(nbins)
    pmin = np.empty(nbins)
    mmax = np.empty(nbins)
    for it in range(nt):
        t = t_grid[it]
        pmax[:] = -np.inf
        pmin[:] = np.inf
        mmax[:] = -np.inf
        for k in range(bins.shape[0]):
            b = bins[k]
            v = x[k]
            if v >= t:
                if v > pmax[b]:
                    pmax[b] = v
                if v < pmin[b]:
                    pmin[b] = v
            if v <= t:
                if v > mmax[b]:
                    mmax[b] = v
        for b in range(nbins):
            if pmax[b] == -np.inf:
                continue
            if pmax[b] - pmin[b] > tol and graph_wit[it] < 0:
                graph_ok[it] = False
                graph_wit[it] = b
            if mmax[b] == -np.inf:
                continue
            n_both[it] += 1
            gap = (2.0 * t - pmax[b]) - mmax[b]
            if gap < margin[it]:
                margin[it] = gap
            if gap < -tol and dom_wit[it] < 0:
                dom_ok[it] = False
                dom_wit[it] = b
    return graph_ok, dom_ok, graph_wit, dom_wit, margin, n_both


def _sweep_scan_np(bins, x, nbins, t_grid, tol):
    nt = len(t_grid)
    graph_ok = np.ones(nt, dtype=bool)
    dom_ok = np.ones(nt, dtype=bool)
    graph_wit = np.full(nt, -1, dtype=np.int64)
    dom_wit = np.full(nt, -1, dtype=np.int64)
    margin = np.full(nt, np.inf)
    n_both = np.zeros(nt, dtype=np.int64)
    for it, t in enumerate(t_grid):
        plus = x >= t
        minus = x <= t
        pmin, pmax, _ = _binned_minmax_np(bins[plus], x[plus], nbins)
        mmax = np.full(nbins, -np.inf)
        np.maximum.at(mmax, bins[minus], x[minus])
        has_p = pmax > -np.inf
        bad = np.nonzero(has_p & (pmax - pmin > tol))[0]
        if len(bad):
            graph_ok[it] = False
            graph_wit[it] = bad[0]
        both = has_p & (mmax > -np.inf)
        n_both[it] = int(both.sum())
        if n_both[it]:
            gap = np.where(both, (2.0 * t - pmax) - mmax, np.inf)
            margin[it] = gap.min()
            bad = np.nonzero(gap < -tol)[0]
            if len(bad):
                dom_ok[it] = False
                dom_wit[it] = bad[0]
    return graph_ok, dom_ok, graph_wit, dom_wit, margin, n_both


def sweep_scan(bins, x, nbins, t_grid, tol):
    """Graph and dominance tests of a plane sweep for every offset in ``t_grid``.

    ``bins``/``x`` are fibre samples: the bin of each ray hit and its
    coordinate along the sweep direction.  For offset ``t`` a bin is a
    graph violation when the hits with ``x >= t`` spread by more than
    ``tol``; it violates dominance when the reflected upper part
    ``2t - max(x >= t)`` lies below ``max(x <= t)`` by more than ``tol``.
    Returns per-offset arrays ``(graph_ok, dom_ok, graph_witness,
    dom_witness, min_margin, n_shared_bins)``; witnesses are the first
    failing bin or -1.
    """
    bins = np.ascontiguousarray(bins, dtype=np.int64)
    x = np.ascontiguousarray(x, dtype=np.float64)
    t_grid = np.ascontiguousarray(t_grid, dtype=np.float64)
    if USE_NUMBA:
        return _sweep_scan_nb(bins, x, int(nbins), t_grid, float(tol))
    return _sweep_scan_np(bins, x, int(nbins), t_grid, float(tol))


IMPLEMENTATIONS = {
    "polyline_crossing": (_polyline_crossing_nb, _polyline_crossing_np),
    "grid_hits": (_grid_hits_nb, _grid_hits_np),
    "binned_minmax": (_binned_minmax_nb, _binned_minmax_np),
    "sweep_scan": (_sweep_scan_nb, _sweep_scan_np),
}
