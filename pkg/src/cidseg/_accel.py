"""Exact-pruning acceleration kernels for segment-max distance queries.

The hot loop of this package evaluates, for huge batches of point pairs,
the maximum over m segment samples of the distance to the cloud. A plain
per-sample NN query is exact but far too slow for the performance budget,
so this module implements a provably exact pruned evaluation:

* a voxel Euclidean-distance-transform grid yields certified lower/upper
  bounds on d(q; S) for any query inside the cloud bbox: the true distance
  differs from the EDT value of the query's voxel by at most sqrt(3)*h
  (half a voxel diagonal for the query plus half for the nearest point);
* d(.; S) is 1-Lipschitz along the segment, so each exactly evaluated
  sample bounds its neighbors;
* only samples whose certified upper bound reaches the certified floor are
  evaluated, with exact nearest-neighbor queries against a flat-array
  kd-tree whose distance arithmetic is bit-identical to a linear scan.

All bound arithmetic is padded for floating-point storage/rounding slop,
so skipped samples are provably below the returned maximum in floating
point, not merely in exact arithmetic. Property tests assert bitwise
equality against the unpruned path and the brute-force oracle.

Everything here is 3D-only and private to the geometry module; 2D clouds
take the plain vectorized path.
"""

from __future__ import annotations

import numpy as np

try:
    from numba import njit

    HAVE_NUMBA = True
except ImportError:  # pragma: no cover - numba is a hard dependency, but degrade gracefully
    HAVE_NUMBA = False

    def njit(*args, **kwargs):
        def wrap(fn):
            return fn

        if args and callable(args[0]):
            return args[0]
        return wrap


DEFAULT_LEAFSIZE = 64
DEFAULT_VOXEL_BUDGET = 20_000_000


def build_flat_kdtree(points, leafsize=DEFAULT_LEAFSIZE):
    """Median-split kd-tree stored as flat arrays for numba traversal.

    Returns (split_dim, split_val, left, right, reordered_points, order).
    Leaves have split_dim = -1 and [left, right) indexing reordered_points.
    Tree shape affects speed only; query results are exact regardless.
    """
    pts = np.ascontiguousarray(points, dtype=np.float64)
    n = len(pts)
    order = np.arange(n)
    sd, sv, lc, rc = [], [], [], []
    stack = [(0, n, -1, False)]
    while stack:
        lo, hi, parent, is_left = stack.pop()
        node = len(sd)
        sd.append(-1)
        sv.append(0.0)
        lc.append(lo)
        rc.append(hi)
        if parent >= 0:
            if is_left:
                lc[parent] = node
            else:
                rc[parent] = node
        if hi - lo <= leafsize:
            continue
        sub = pts[order[lo:hi]]
        dim = int(np.argmax(sub.max(axis=0) - sub.min(axis=0)))
        mid = (lo + hi) // 2
        part = np.argpartition(sub[:, dim], mid - lo)
        order[lo:hi] = order[lo:hi][part]
        sd[node] = dim
        sv[node] = pts[order[mid], dim]
        stack.append((mid, hi, node, False))
        stack.append((lo, mid, node, True))
    return (
        np.array(sd, np.int32),
        np.array(sv, np.float64),
        np.array(lc, np.int32),
        np.array(rc, np.int32),
        pts[order].copy(),
        order.astype(np.int64),
    )


def build_distance_grid(points, voxel_budget=None):
    """EDT bound grid over the cloud bbox.

    Returns (edt float32 3D, lo (3,), h, dims int64 (3,), slack). slack is
    padded so `edt[cell(q)] +/- slack` brackets d(q; S) for every q inside
    the bbox, including float32 storage rounding.
    """
    from scipy import ndimage

    pts = np.asarray(points, dtype=np.float64)
    n = len(pts)
    if voxel_budget is None:
        voxel_budget = int(min(DEFAULT_VOXEL_BUDGET, max(1_000_000, 1000 * n)))
    lo = pts.min(axis=0)
    hi = pts.max(axis=0)
    ext = hi - lo
    live = ext[ext > 1e-12]
    if live.size == 0:
        # all points coincide; one-voxel grid
        h = 1.0
    else:
        h = float(np.prod(live) ** (1.0 / live.size) / voxel_budget ** (1.0 / live.size))
        h = max(h, 1e-12)
    dims = np.maximum(1, np.ceil(ext / h).astype(np.int64) + 1)
    while int(np.prod(dims)) > int(1.5 * voxel_budget):
        h *= 1.13
        dims = np.maximum(1, np.ceil(ext / h).astype(np.int64) + 1)
    occ = np.ones(tuple(dims), dtype=bool)
    idx = np.minimum(((pts - lo) / h).astype(np.int64), dims - 1)
    occ[idx[:, 0], idx[:, 1], idx[:, 2]] = False
    edt = ndimage.distance_transform_edt(occ, sampling=h).astype(np.float32)
    scale = 1.0 + float(np.abs(pts).max())
    slack = float(np.sqrt(3.0) * h + 1e-6 * scale)
    return edt, lo.copy(), float(h), dims, slack


@njit(cache=True, nogil=True)
def _kd_min_sq(sd, sv, lc, rc, pts, qx, qy, qz, best):
    """Exact min squared distance from (qx,qy,qz) to pts, seeded with `best`.

    Per-point arithmetic is sequential per-coordinate accumulation, matching
    the linear-scan reference bit for bit.
    """
    stack = np.empty(128, np.int32)
    stack[0] = 0
    sp = 1
    while sp > 0:
        sp -= 1
        node = stack[sp]
        dim = sd[node]
        if dim < 0:
            for i in range(lc[node], rc[node]):
                dx = qx - pts[i, 0]
                acc = dx * dx
                dy = qy - pts[i, 1]
                acc += dy * dy
                dz = qz - pts[i, 2]
                acc += dz * dz
                if acc < best:
                    best = acc
        else:
            if dim == 0:
                diff = qx - sv[node]
            elif dim == 1:
                diff = qy - sv[node]
            else:
                diff = qz - sv[node]
            if diff < 0.0:
                near = lc[node]
                far = rc[node]
            else:
                near = rc[node]
                far = lc[node]
            if diff * diff < best:
                stack[sp] = far
                sp += 1
            stack[sp] = near
            sp += 1
    return best


@njit(cache=True, nogil=True)
def _segment_max_one(sd, sv, lc, rc, pts,
                     ax, ay, az, bx, by, bz, m,
                     edt, glo, h, dims, slack, lip_pad,
                     ub, sx, sy, sz):
    # endpoints in lexicographic order so (a,b) and (b,a) evaluate the same
    # floating-point expressions
    if (bx < ax) or (bx == ax and (by < ay or (by == ay and bz < az))):
        lox, loy, loz = bx, by, bz
        hix, hiy, hiz = ax, ay, az
    else:
        lox, loy, loz = ax, ay, az
        hix, hiy, hiz = bx, by, bz
    dxs = hix - lox
    dys = hiy - loy
    dzs = hiz - loz
    t_den = m - 1.0
    seglen = np.sqrt(dxs * dxs + dys * dys + dzs * dzs)
    step = (seglen / t_den) * (1.0 + 1e-12) + lip_pad

    # pass 1: EDT bounds for every sample; B is a certified floor for the max
    B = 0.0
    jstar = 0
    ustar = -1.0
    for j in range(m):
        t = j / t_den
        x = lox + t * dxs
        y = loy + t * dys
        z = loz + t * dzs
        sx[j] = x
        sy[j] = y
        sz[j] = z
        ix = int((x - glo[0]) / h)
        iy = int((y - glo[1]) / h)
        iz = int((z - glo[2]) / h)
        if ix < 0:
            ix = 0
        elif ix >= dims[0]:
            ix = dims[0] - 1
        if iy < 0:
            iy = 0
        elif iy >= dims[1]:
            iy = dims[1] - 1
        if iz < 0:
            iz = 0
        elif iz >= dims[2]:
            iz = dims[2] - 1
        e = np.float64(edt[ix, iy, iz])
        u = e + slack
        ub[j] = u
        if u > ustar:
            ustar = u
            jstar = j
        l = e - slack
        if l > B:
            B = l

    # pass 2: exact queries for samples that could still be the argmax.
    # The best-bounded sample goes first to raise the floor early; the
    # warm start never prunes the true NN because u strictly exceeds it.
    dstar = np.sqrt(_kd_min_sq(sd, sv, lc, rc, pts,
                               sx[jstar], sy[jstar], sz[jstar],
                               ustar * ustar * (1.0 + 1e-9)))
    best = dstar
    if best > B:
        B = best
    last_j = jstar
    last_d = dstar
    for j in range(m):
        if j == jstar:
            last_j = j
            last_d = dstar
            continue
        u = ub[j]
        dj = j - last_j
        if dj < 0:
            dj = -dj
        lip = last_d + dj * step
        if lip < u:
            u = lip
        if u < B:
            continue
        dq = np.sqrt(_kd_min_sq(sd, sv, lc, rc, pts, sx[j], sy[j], sz[j],
                                u * u * (1.0 + 1e-9)))
        last_j = j
        last_d = dq
        if dq > best:
            best = dq
            if dq > B:
                B = dq
    return best


@njit(cache=True, nogil=True)
def segment_max_to_targets(sd, sv, lc, rc, pts, a, targets, m,
                           edt, glo, h, dims, slack, lip_pad, out):
    """out[p] = max over m segment samples of d(sample(a, targets[p]); S)."""
    ub = np.empty(m, np.float64)
    sx = np.empty(m, np.float64)
    sy = np.empty(m, np.float64)
    sz = np.empty(m, np.float64)
    for p in range(targets.shape[0]):
        out[p] = _segment_max_one(sd, sv, lc, rc, pts,
                                  a[0], a[1], a[2],
                                  targets[p, 0], targets[p, 1], targets[p, 2],
                                  m, edt, glo, h, dims, slack, lip_pad,
                                  ub, sx, sy, sz)


@njit(cache=True, nogil=True)
def segment_max_pairs(sd, sv, lc, rc, pts, A, B, m,
                      edt, glo, h, dims, slack, lip_pad, out):
    """out[p] = segment max for the pair (A[p], B[p])."""
    ub = np.empty(m, np.float64)
    sx = np.empty(m, np.float64)
    sy = np.empty(m, np.float64)
    sz = np.empty(m, np.float64)
    for p in range(A.shape[0]):
        out[p] = _segment_max_one(sd, sv, lc, rc, pts,
                                  A[p, 0], A[p, 1], A[p, 2],
                                  B[p, 0], B[p, 1], B[p, 2],
                                  m, edt, glo, h, dims, slack, lip_pad,
                                  ub, sx, sy, sz)
