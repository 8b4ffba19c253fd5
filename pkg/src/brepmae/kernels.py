"""Hot inner loops: segment reductions, row scatter, polygon queries.

Every kernel exists twice: an ``@njit`` loop version and a vectorized numpy
version. ``BREPMAE_NUMBA=0`` selects the numpy path. Both paths accumulate in
the same order, so their outputs agree bit for bit.

Segment sums are taken over *sorted* values. This makes the result
independent of the order in which messages arrive, which is what keeps graph
layers exactly permutation equivariant.
"""

import numpy as np

from ._jit import USE_NUMBA, njit

STD_EPS = 1e-5
_SQRT_STD_EPS = np.sqrt(STD_EPS)


# --------------------------------------------------------------------------
# segment aggregation (mean / max / min / std)
# --------------------------------------------------------------------------


@njit
def _segment_aggregate_nb(values, order, offsets, eps):
    n_seg = offsets.shape[0] - 1
    n_ch = values.shape[1]
    mean = np.zeros((n_seg, n_ch))
    mx = np.zeros((n_seg, n_ch))
    mn = np.zeros((n_seg, n_ch))
    std = np.zeros((n_seg, n_ch))
    argmax = np.full((n_seg, n_ch), -1, dtype=np.int64)
    argmin = np.full((n_seg, n_ch), -1, dtype=np.int64)
    sqrt_eps = np.sqrt(eps)
    for s in range(n_seg):
        a = offsets[s]
        b = offsets[s + 1]
        n = b - a
        if n == 0:
            continue
        rows = order[a:b]
        buf = np.empty(n)
        dev = np.empty(n)
        for c in range(n_ch):
            for k in range(n):
                buf[k] = values[rows[k], c]
            perm = np.argsort(buf, kind="mergesort")
            acc = 0.0
            for k in range(n):
                acc += buf[perm[k]]
            mu = acc / n
            for k in range(n):
                d = buf[perm[k]] - mu
                dev[k] = d * d
            dev.sort()
            acc = 0.0
            for k in range(n):
                acc += dev[k]
            mean[s, c] = mu
            mn[s, c] = buf[perm[0]]
            mx[s, c] = buf[perm[n - 1]]
            argmin[s, c] = rows[perm[0]]
            argmax[s, c] = rows[perm[n - 1]]
            std[s, c] = np.sqrt(acc / n + eps) - sqrt_eps
    return mean, mx, mn, std, argmax, argmin


def _sort_within_segments(x, seg):
    # column-wise value sort, then a stable sort on the segment id
    p1 = np.argsort(x, axis=0, kind="stable")
    p2 = np.argsort(seg[p1], axis=0, kind="stable")
    return np.take_along_axis(p1, p2, axis=0)


def _sequential_segment_sum(x, starts, deg):
    # left-to-right accumulation, matching the loop kernel bit for bit
    acc = x[starts].copy()
    for k in range(1, int(deg.max())):
        sel = np.flatnonzero(deg > k)
        acc[sel] += x[starts[sel] + k]
    return acc


def _segment_aggregate_np(values, order, offsets, eps):
    n_seg = offsets.shape[0] - 1
    n_ch = values.shape[1]
    mean = np.zeros((n_seg, n_ch))
    mx = np.zeros((n_seg, n_ch))
    mn = np.zeros((n_seg, n_ch))
    std = np.zeros((n_seg, n_ch))
    argmax = np.full((n_seg, n_ch), -1, dtype=np.int64)
    argmin = np.full((n_seg, n_ch), -1, dtype=np.int64)
    deg = np.diff(offsets)
    live = np.flatnonzero(deg > 0)
    if live.size == 0:
        return mean, mx, mn, std, argmax, argmin
    grouped = values[order]
    seg = np.repeat(np.arange(n_seg), deg)
    perm = _sort_within_segments(grouped, seg)
    svals = np.take_along_axis(grouped, perm, axis=0)
    starts = offsets[live]
    ends = offsets[live + 1] - 1
    cnt = deg[live][:, None].astype(np.float64)
    mu = _sequential_segment_sum(svals, starts, deg[live]) / cnt
    dev = (svals - np.repeat(mu, deg[live], axis=0)) ** 2
    dev = np.take_along_axis(dev, _sort_within_segments(dev, seg), axis=0)
    var = _sequential_segment_sum(dev, starts, deg[live]) / cnt
    mean[live] = mu
    mn[live] = svals[starts]
    mx[live] = svals[ends]
    argmin[live] = order[perm[starts]]
    argmax[live] = order[perm[ends]]
    std[live] = np.sqrt(var + eps) - np.sqrt(eps)
    return mean, mx, mn, std, argmax, argmin


def segment_aggregate(values, order, offsets, eps=STD_EPS):
    """Per-segment mean, max, min and shifted std of ``values`` rows.

    ``order`` lists row indices grouped by segment and ``offsets`` delimits
    the groups (CSR layout). The std is ``sqrt(var + eps) - sqrt(eps)``, which
    is exactly zero for a single message and smooth everywhere.
    """
    values = np.ascontiguousarray(values, dtype=np.float64)
    order = np.ascontiguousarray(order, dtype=np.int64)
    offsets = np.ascontiguousarray(offsets, dtype=np.int64)
    if USE_NUMBA:
        return _segment_aggregate_nb(values, order, offsets, eps)
    return _segment_aggregate_np(values, order, offsets, eps)


# --------------------------------------------------------------------------
# scatter-add of rows
# --------------------------------------------------------------------------


@njit
def _scatter_add_rows_nb(out, idx, src):
    n_ch = src.shape[1]
    for k in range(idx.shape[0]):
        r = idx[k]
        for c in range(n_ch):
            out[r, c] += src[k, c]
    return out


def scatter_add_rows(n_rows, idx, src):
    """Return ``out`` with ``out[idx[k]] += src[k]`` accumulated in k order."""
    src = np.asarray(src, dtype=np.float64)
    trailing = src.shape[1:]
    flat = np.ascontiguousarray(src.reshape(src.shape[0], -1))
    out = np.zeros((n_rows, flat.shape[1]))
    idx = np.ascontiguousarray(idx, dtype=np.int64)
    if USE_NUMBA:
        _scatter_add_rows_nb(out, idx, flat)
    else:
        np.add.at(out, idx, flat)
    return out.reshape((n_rows,) + trailing)


# --------------------------------------------------------------------------
# planar polygon queries
# --------------------------------------------------------------------------


@njit
def _points_in_loops_nb(pts, seg_a, seg_b, tol):
    n = pts.shape[0]
    m = seg_a.shape[0]
    out = np.zeros(n, dtype=np.bool_)
    tol2 = tol * tol
    for i in range(n):
        px = pts[i, 0]
        py = pts[i, 1]
        inside = False
        on_edge = False
        for j in range(m):
            ax = seg_a[j, 0]
            ay = seg_a[j, 1]
            bx = seg_b[j, 0]
            by = seg_b[j, 1]
            dx = bx - ax
            dy = by - ay
            ll = dx * dx + dy * dy
            t = 0.0
            if ll > 0.0:
                t = ((px - ax) * dx + (py - ay) * dy) / ll
                if t < 0.0:
                    t = 0.0
                elif t > 1.0:
                    t = 1.0
            qx = ax + t * dx - px
            qy = ay + t * dy - py
            if qx * qx + qy * qy < tol2:
                on_edge = True
                break
            if (ay > py) != (by > py):
                xc = ax + (py - ay) * dx / dy
                if px < xc:
                    inside = not inside
        out[i] = on_edge or inside
    return out


def _points_in_loops_np(pts, seg_a, seg_b, tol):
    px = pts[:, 0:1]
    py = pts[:, 1:2]
    ax, ay = seg_a[:, 0][None, :], seg_a[:, 1][None, :]
    bx, by = seg_b[:, 0][None, :], seg_b[:, 1][None, :]
    dx = bx - ax
    dy = by - ay
    ll = dx * dx + dy * dy
    with np.errstate(divide="ignore", invalid="ignore"):
        t = np.where(ll > 0.0, ((px - ax) * dx + (py - ay) * dy) / ll, 0.0)
        t = np.clip(t, 0.0, 1.0)
        qx = ax + t * dx - px
        qy = ay + t * dy - py
        on_edge = np.any(qx * qx + qy * qy < tol * tol, axis=1)
        straddle = (ay > py) != (by > py)
        xc = ax + (py - ay) * dx / np.where(straddle, dy, 1.0)
    crossings = np.count_nonzero(straddle & (px < xc), axis=1)
    return on_edge | (crossings % 2 == 1)


def points_in_loops(pts, seg_a, seg_b, tol=1e-9):
    """Even-odd test of 2D points against a set of closed-loop segments.

    Points within ``tol`` of any segment count as inside.
    """
    pts = np.ascontiguousarray(pts, dtype=np.float64).reshape(-1, 2)
    seg_a = np.ascontiguousarray(seg_a, dtype=np.float64).reshape(-1, 2)
    seg_b = np.ascontiguousarray(seg_b, dtype=np.float64).reshape(-1, 2)
    if USE_NUMBA:
        return _points_in_loops_nb(pts, seg_a, seg_b, tol)
    return _points_in_loops_np(pts, seg_a, seg_b, tol)


@njit
def _orient(ax, ay, bx, by, cx, cy):
    return (bx - ax) * (cy - ay) - (by - ay) * (cx - ax)


@njit
def _loop_self_intersects_nb(poly, tol):
    n = poly.shape[0]
    for i in range(n):
        ax, ay = poly[i, 0], poly[i, 1]
        bx, by = poly[(i + 1) % n, 0], poly[(i + 1) % n, 1]
        for j in range(i + 1, n):
            if j == i + 1 or (i == 0 and j == n - 1):
                continue  # neighbours share a vertex
            cx, cy = poly[j, 0], poly[j, 1]
            dx, dy = poly[(j + 1) % n, 0], poly[(j + 1) % n, 1]
            d1 = _orient(cx, cy, dx, dy, ax, ay)
            d2 = _orient(cx, cy, dx, dy, bx, by)
            d3 = _orient(ax, ay, bx, by, cx, cy)
            d4 = _orient(ax, ay, bx, by, dx, dy)
            if ((d1 > tol and d2 < -tol) or (d1 < -tol and d2 > tol)) and (
                (d3 > tol and d4 < -tol) or (d3 < -tol and d4 > tol)
            ):
                return True
            # collinear overlap / touching
            if abs(d1) <= tol and _on_seg(cx, cy, dx, dy, ax, ay, tol):
                return True
            if abs(d2) <= tol and _on_seg(cx, cy, dx, dy, bx, by, tol):
                return True
            if abs(d3) <= tol and _on_seg(ax, ay, bx, by, cx, cy, tol):
                return True
            if abs(d4) <= tol and _on_seg(ax, ay, bx, by, dx, dy, tol):
                return True
    return False


@njit
def _on_seg(ax, ay, bx, by, px, py, tol):
    return (
        min(ax, bx) - tol <= px <= max(ax, bx) + tol
        and min(ay, by) - tol <= py <= max(ay, by) + tol
    )


def _loop_self_intersects_np(poly, tol):
    n = poly.shape[0]
    a = poly
    b = np.roll(poly, -1, axis=0)
    i, j = np.triu_indices(n, k=2)
    keep = ~((i == 0) & (j == n - 1))
    i, j = i[keep], j[keep]
    if i.size == 0:
        return False
    A, B, C, D = a[i], b[i], a[j], b[j]

    def orient(p, q, r):
        return (q[:, 0] - p[:, 0]) * (r[:, 1] - p[:, 1]) - (q[:, 1] - p[:, 1]) * (
            r[:, 0] - p[:, 0]
        )

    def on_seg(p, q, r):
        return (
            (np.minimum(p[:, 0], q[:, 0]) - tol <= r[:, 0])
            & (r[:, 0] <= np.maximum(p[:, 0], q[:, 0]) + tol)
            & (np.minimum(p[:, 1], q[:, 1]) - tol <= r[:, 1])
            & (r[:, 1] <= np.maximum(p[:, 1], q[:, 1]) + tol)
        )

    d1, d2 = orient(C, D, A), orient(C, D, B)
    d3, d4 = orient(A, B, C), orient(A, B, D)
    proper = (((d1 > tol) & (d2 < -tol)) | ((d1 < -tol) & (d2 > tol))) & (
        ((d3 > tol) & (d4 < -tol)) | ((d3 < -tol) & (d4 > tol))
    )
    touch = (
        ((np.abs(d1) <= tol) & on_seg(C, D, A))
        | ((np.abs(d2) <= tol) & on_seg(C, D, B))
        | ((np.abs(d3) <= tol) & on_seg(A, B, C))
        | ((np.abs(d4) <= tol) & on_seg(A, B, D))
    )
    return bool(np.any(proper | touch))


def loop_self_intersects(poly, tol=1e-12):
    """True if the closed polyline crosses or touches itself."""
    poly = np.ascontiguousarray(poly, dtype=np.float64).reshape(-1, 2)
    if poly.shape[0] < 4:
        return False
    if USE_NUMBA:
        return bool(_loop_self_intersects_nb(poly, tol))
    return _loop_self_intersects_np(poly, tol)
