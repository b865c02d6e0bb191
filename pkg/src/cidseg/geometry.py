"""Core distance kernels over unoriented point clouds.

Defines the point-to-set distance d(p; S), the segment-max distance between
two cloud points (max over m uniform samples of the segment of d(.; S)),
its batched matrix form, and the group-to-group average. Backed by an exact
nearest-neighbor index; approximate NN is deliberately not supported because
downstream argmin/argmax decisions and the oracle test suite require exact
values.

Floating-point determinism contracts, relied on by tests and callers:

* segment samples are generated from the lexicographically smaller endpoint,
  so the pair distance is exactly symmetric;
* group averages accumulate pairwise values in (i-outer, j-inner) order with
  a single final division;
* every backend (linear scan, kd-tree, pruned kernel) produces bit-identical
  distances.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy.spatial import cKDTree

from . import _accel
from .config import worker_count
from .errors import InvalidInputError

# below this, a linear scan beats tree construction overhead
LINEAR_SCAN_MAX = 64
# clouds at least this large get the pruned kernel path (3D only)
ACCEL_MIN_POINTS = 2048
_QUERY_CHUNK = 1 << 18

BACKENDS = ("auto", "kdtree", "linear")


@dataclass
class PointCloud:
    """Ordered list of D-dimensional points with optional per-point labels."""

    points: np.ndarray
    semantic_labels: np.ndarray | None = None
    instance_labels: np.ndarray | None = None

    def __post_init__(self):
        pts = np.asarray(self.points, dtype=np.float64)
        if pts.ndim != 2:
            raise InvalidInputError("points must be a 2-D array of shape (N, D)")
        n, d = pts.shape
        if n < 1:
            raise InvalidInputError("point cloud must contain at least one point")
        if d not in (2, 3):
            raise InvalidInputError(f"dimension must be 2 or 3, got {d}")
        if not np.all(np.isfinite(pts)):
            raise InvalidInputError("points must have finite coordinates")
        self.points = np.ascontiguousarray(pts)
        for name in ("semantic_labels", "instance_labels"):
            lab = getattr(self, name)
            if lab is None:
                continue
            lab = np.asarray(lab, dtype=np.int64)
            if lab.shape != (n,):
                raise InvalidInputError(
                    f"{name} must have one entry per point ({n}), got shape {lab.shape}"
                )
            setattr(self, name, lab)

    @property
    def n_points(self) -> int:
        return self.points.shape[0]

    @property
    def dim(self) -> int:
        return self.points.shape[1]

    def subset(self, indices) -> "PointCloud":
        """New cloud from a selection of point indices (labels carried along)."""
        idx = np.asarray(indices, dtype=np.int64)
        if idx.size == 0:
            raise InvalidInputError("cannot build an empty point cloud subset")
        return PointCloud(
            self.points[idx],
            None if self.semantic_labels is None else self.semantic_labels[idx],
            None if self.instance_labels is None else self.instance_labels[idx],
        )


@dataclass(frozen=True)
class SegmentDiscretization:
    """Number of uniformly spaced samples per segment, endpoints included."""

    m: int = 100

    def __post_init__(self):
        if int(self.m) != self.m or self.m < 2:
            raise InvalidInputError("segment discretization requires m >= 2")
        object.__setattr__(self, "m", int(self.m))


@dataclass(frozen=True)
class GroupSamplingPolicy:
    """Uniform-stride group downsampling used by the group distance."""

    max_points_per_group: int = 32

    def __post_init__(self):
        if int(self.max_points_per_group) != self.max_points_per_group or \
                self.max_points_per_group < 1:
            raise InvalidInputError("group cap must be a positive integer")
        object.__setattr__(self, "max_points_per_group", int(self.max_points_per_group))

    def downsample(self, group) -> np.ndarray:
        """Deterministic subset: index-sorted order, uniform stride, capped size.

        Result size is exactly min(len(group), cap).
        """
        idx = np.sort(np.asarray(group, dtype=np.int64))
        n = idx.size
        if n == 0:
            raise InvalidInputError("cannot downsample an empty group")
        cap = self.max_points_per_group
        if n <= cap:
            return idx
        pos = (np.arange(cap, dtype=np.int64) * n) // cap
        return idx[pos]


@dataclass
class CidMatrix:
    """Dense matrix of segment-max distances between two point-index lists."""

    rows: np.ndarray
    cols: np.ndarray
    values: np.ndarray

    def __post_init__(self):
        self.rows = np.asarray(self.rows, dtype=np.int64)
        self.cols = np.asarray(self.cols, dtype=np.int64)
        self.values = np.asarray(self.values, dtype=np.float64)
        if self.values.shape != (self.rows.size, self.cols.size):
            raise InvalidInputError("matrix shape must be len(rows) x len(cols)")


class SpatialIndex:
    """Immutable exact nearest-neighbor index over a PointCloud.

    Queries return the exact minimum Euclidean distance (verified against a
    linear scan in tests). The default "auto" backend picks by size: linear
    scan below LINEAR_SCAN_MAX points, kd-tree above, pruned kernel from
    ACCEL_MIN_POINTS when numba is importable. Pinning backend="linear" or
    "kdtree" forces one path; all backends return bit-identical distances,
    so the pin only matters for benchmarking and tests.
    """

    def __init__(self, cloud: PointCloud, backend: str = "auto"):
        if backend not in BACKENDS:
            raise InvalidInputError(
                f"unknown backend {backend!r}; expected one of {BACKENDS}")
        self.cloud = cloud
        self.points = cloud.points  # contiguous float64, owned by the cloud
        self.dim = cloud.dim
        self.n_points = cloud.n_points
        self.backend = backend
        build_tree = backend == "kdtree" or (
            backend == "auto" and self.n_points >= LINEAR_SCAN_MAX)
        self._tree = cKDTree(self.points) if build_tree else None
        self._kernel = None

    # -- plain exact queries ------------------------------------------------

    def _check_queries(self, q) -> tuple[np.ndarray, bool]:
        qa = np.asarray(q, dtype=np.float64)
        single = qa.ndim == 1
        if single:
            qa = qa[None, :]
        if qa.ndim != 2 or qa.shape[1] != self.dim:
            raise InvalidInputError(
                f"query dimension mismatch: index is {self.dim}-D, "
                f"got shape {np.shape(q)}"
            )
        return np.ascontiguousarray(qa), single

    def _scan_chunk(self) -> int:
        # bound the broadcast intermediate to ~_QUERY_CHUNK cells
        return max(1, _QUERY_CHUNK // self.n_points)

    def query_distance(self, q):
        """Exact distance from each query to its nearest indexed point."""
        qa, single = self._check_queries(q)
        if self._tree is not None:
            d, _ = self._tree.query(qa)
        else:
            d = np.empty(len(qa))
            step = self._scan_chunk()
            for s in range(0, len(qa), step):
                chunk = qa[s:s + step]
                sq = ((chunk[:, None, :] - self.points[None, :, :]) ** 2).sum(axis=2)
                d[s:s + step] = np.sqrt(sq.min(axis=1))
        return float(d[0]) if single else d

    def query_nearest(self, q):
        """(distance, index) per query; ties resolved to the lowest index."""
        qa, single = self._check_queries(q)
        if self._tree is None:
            idx = np.empty(len(qa), dtype=np.int64)
            best = np.empty(len(qa))
            step = self._scan_chunk()
            for s in range(0, len(qa), step):
                chunk = qa[s:s + step]
                d = np.sqrt(((chunk[:, None, :] - self.points[None, :, :]) ** 2).sum(axis=2))
                loc = np.argmin(d, axis=1)  # first occurrence = lowest index
                idx[s:s + step] = loc
                best[s:s + step] = d[np.arange(len(chunk)), loc]
        else:
            d0, _ = self._tree.query(qa)
            # re-resolve inside a padded ball so exact ties go to the lowest
            # index no matter which representative the tree returned
            radii = d0 * (1.0 + 1e-12) + 1e-300
            balls = self._tree.query_ball_point(qa, radii)
            idx = np.empty(len(qa), dtype=np.int64)
            best = np.empty(len(qa))
            for i, cand in enumerate(balls):
                cand = np.sort(np.asarray(cand, dtype=np.int64))
                dc = np.sqrt(((self.points[cand] - qa[i]) ** 2).sum(axis=1))
                m = dc.min()
                idx[i] = cand[int(np.argmax(dc == m))]
                best[i] = m
        if single:
            return float(best[0]), int(idx[0])
        return best, idx

    # -- pruned segment-max kernel -------------------------------------------

    def enable_acceleration(self):
        """Force-build the pruned kernel state (normally built lazily).

        No-op when the backend is pinned to "linear" or "kdtree".
        """
        if self.backend != "auto":
            return False
        if self._kernel is None and _accel.HAVE_NUMBA and self.dim == 3:
            tree = _accel.build_flat_kdtree(self.points)
            grid = _accel.build_distance_grid(self.points)
            scale = 1.0 + float(np.abs(self.points).max())
            self._kernel = {
                "sd": tree[0], "sv": tree[1], "lc": tree[2], "rc": tree[3],
                "pts": tree[4],
                "edt": grid[0], "glo": grid[1], "h": grid[2],
                "dims": grid[3], "slack": grid[4],
                "lip_pad": 1e-9 * scale,
            }
        return self._kernel is not None

    def _kernel_state(self):
        if self._kernel is None and self.backend == "auto" and self.dim == 3 \
                and self.n_points >= ACCEL_MIN_POINTS and _accel.HAVE_NUMBA:
            self.enable_acceleration()
        return self._kernel


def point_to_set_distance(q, index: SpatialIndex) -> float:
    """Exact minimum Euclidean distance from q to the indexed cloud."""
    qa = np.asarray(q, dtype=np.float64)
    if qa.shape != (index.dim,):
        raise InvalidInputError(
            f"point dimension mismatch: index is {index.dim}-D, got shape {qa.shape}"
        )
    if not np.all(np.isfinite(qa)):
        raise InvalidInputError("query point must be finite")
    return index.query_distance(qa)


def _lex_order_pairs(A, B):
    """Per-pair (lo, hi) endpoint arrays in lexicographic coordinate order."""
    swap = np.zeros(len(A), dtype=bool)
    undecided = np.ones(len(A), dtype=bool)
    for c in range(A.shape[1]):
        lt = undecided & (B[:, c] < A[:, c])
        swap |= lt
        undecided &= B[:, c] == A[:, c]
    lo = np.where(swap[:, None], B, A)
    hi = np.where(swap[:, None], A, B)
    return lo, hi


def _segment_max_pairs_numpy(index: SpatialIndex, A, B, m: int) -> np.ndarray:
    """Unpruned reference path: evaluate all m samples of every pair."""
    lo, hi = _lex_order_pairs(A, B)
    t = np.arange(m, dtype=np.float64) / (m - 1)
    out = np.empty(len(A))
    pair_chunk = max(1, _QUERY_CHUNK // m)
    for s in range(0, len(A), pair_chunk):
        clo = lo[s:s + pair_chunk]
        chi = hi[s:s + pair_chunk]
        samples = clo[:, None, :] + t[None, :, None] * (chi - clo)[:, None, :]
        d = index.query_distance(samples.reshape(-1, samples.shape[2]))
        out[s:s + pair_chunk] = d.reshape(len(clo), m).max(axis=1)
    return out


def _segment_max_to_targets(index: SpatialIndex, a, targets, m: int) -> np.ndarray:
    """Segment max from one source point to each target point."""
    targets = np.ascontiguousarray(targets, dtype=np.float64)
    k = index._kernel_state()
    if k is not None:
        out = np.empty(len(targets))
        _accel.segment_max_to_targets(
            k["sd"], k["sv"], k["lc"], k["rc"], k["pts"],
            np.ascontiguousarray(a, dtype=np.float64), targets, m,
            k["edt"], k["glo"], k["h"], k["dims"], k["slack"], k["lip_pad"], out)
        return out
    A = np.broadcast_to(np.asarray(a, dtype=np.float64), targets.shape)
    return _segment_max_pairs_numpy(index, A, targets, m)


def _segment_max_pairs(index: SpatialIndex, A, B, m: int) -> np.ndarray:
    A = np.ascontiguousarray(A, dtype=np.float64)
    B = np.ascontiguousarray(B, dtype=np.float64)
    k = index._kernel_state()
    if k is not None:
        out = np.empty(len(A))
        _accel.segment_max_pairs(
            k["sd"], k["sv"], k["lc"], k["rc"], k["pts"], A, B, m,
            k["edt"], k["glo"], k["h"], k["dims"], k["slack"], k["lip_pad"], out)
        return out
    return _segment_max_pairs_numpy(index, A, B, m)


def cid_p(a, b, index: SpatialIndex, disc: SegmentDiscretization = SegmentDiscretization()) -> float:
    """Max over m uniform samples of segment ab of the distance to the cloud.

    Both endpoints are assumed to be cloud members, so the value is exactly
    0 for a == b. Exactly symmetric in (a, b) because samples are generated
    from the lexicographically smaller endpoint.
    """
    aa = np.asarray(a, dtype=np.float64)
    bb = np.asarray(b, dtype=np.float64)
    if aa.shape != (index.dim,) or bb.shape != (index.dim,):
        raise InvalidInputError(
            f"endpoint dimension mismatch: index is {index.dim}-D, "
            f"got {aa.shape} and {bb.shape}"
        )
    if not (np.all(np.isfinite(aa)) and np.all(np.isfinite(bb))):
        raise InvalidInputError("segment endpoints must be finite")
    return float(_segment_max_pairs(index, aa[None, :], bb[None, :], disc.m)[0])


def _check_point_indices(indices, n: int, what: str) -> np.ndarray:
    idx = np.asarray(indices, dtype=np.int64)
    if idx.ndim != 1:
        raise InvalidInputError(f"{what} must be a flat index list")
    if idx.size and (idx.min() < 0 or idx.max() >= n):
        raise InvalidInputError(f"{what} contains out-of-range point indices")
    return idx


def cid_matrix(sources, targets, index: SpatialIndex,
               disc: SegmentDiscretization = SegmentDiscretization()) -> CidMatrix:
    """values[i][j] = cid_p(points[sources[i]], points[targets[j]]).

    Rows are independent work units; with CID_THREADS > 1 they are evaluated
    by a thread pool (the kernel releases the GIL), and results are identical
    to sequential evaluation because each row writes its own slot.
    """
    src = _check_point_indices(sources, index.n_points, "sources")
    tgt = _check_point_indices(targets, index.n_points, "targets")
    values = np.empty((src.size, tgt.size))
    tgt_pts = index.points[tgt]

    def fill_row(i):
        values[i] = _segment_max_to_targets(index, index.points[src[i]], tgt_pts, disc.m)

    workers = worker_count()
    if workers > 1 and src.size > 1:
        from concurrent.futures import ThreadPoolExecutor

        with ThreadPoolExecutor(max_workers=workers) as pool:
            list(pool.map(fill_row, range(src.size)))
    else:
        for i in range(src.size):
            fill_row(i)
    return CidMatrix(rows=src, cols=tgt, values=values)


def cid_g(gi, gj, index: SpatialIndex,
          disc: SegmentDiscretization = SegmentDiscretization(),
          policy: GroupSamplingPolicy = GroupSamplingPolicy()) -> float:
    """Average segment-max distance over all cross pairs of two groups.

    Groups beyond the policy cap are downsampled deterministically; within
    the cap this is the exact all-pairs average. Accumulation order is
    (i-outer, j-inner) with a single final division, matching the oracle.
    """
    gi = _check_point_indices(gi, index.n_points, "group gi")
    gj = _check_point_indices(gj, index.n_points, "group gj")
    if gi.size == 0 or gj.size == 0:
        raise InvalidInputError("cid_g requires two non-empty groups")
    di = policy.downsample(gi)
    dj = policy.downsample(gj)
    tgt_pts = index.points[dj]
    rows = np.empty((di.size, dj.size))
    for i in range(di.size):
        rows[i] = _segment_max_to_targets(index, index.points[di[i]], tgt_pts, disc.m)
    acc = 0.0
    for v in rows.reshape(-1).tolist():  # row-major == i-outer, j-inner
        acc += v
    return acc / (di.size * dj.size)
