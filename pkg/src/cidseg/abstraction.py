"""Greedy group merging and convex-hull extraction.

Merging repeatedly unions the pair of groups with minimal group distance,
either for a fixed number of iterations or until the minimum exceeds a
threshold. Each final group is abstracted by the convex hull of its points,
with affinely degenerate groups flagged instead of forced into a full-
dimensional polytope.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy.spatial import ConvexHull

from .errors import InvalidInputError
from .geometry import (GroupSamplingPolicy, PointCloud, SegmentDiscretization,
                       SpatialIndex, cid_g)
from .segmentation import GroupAssignment


@dataclass
class MergeEvent:
    iteration: int
    group_a: int
    group_b: int
    value: float


@dataclass
class MergeSchedule:
    """Merge stopping rule plus the recorded history of performed merges."""

    mode: str                       # "fixed" | "threshold"
    iterations: int | None = None   # fixed mode: exact number of merges
    threshold: float | None = None  # threshold mode: stop when min exceeds it
    history: list = field(default_factory=list)

    @classmethod
    def fixed(cls, iterations: int) -> "MergeSchedule":
        if int(iterations) != iterations or iterations < 0:
            raise InvalidInputError("fixed schedule needs iterations >= 0")
        return cls(mode="fixed", iterations=int(iterations))

    @classmethod
    def with_threshold(cls, threshold: float) -> "MergeSchedule":
        t = float(threshold)
        if not (t >= 0.0):
            raise InvalidInputError("threshold must be non-negative")
        return cls(mode="threshold", threshold=t)


def merge_groups(assignment: GroupAssignment, index: SpatialIndex,
                 disc: SegmentDiscretization = SegmentDiscretization(),
                 policy: GroupSamplingPolicy = GroupSamplingPolicy(),
                 schedule: MergeSchedule = None):
    """Greedy minimum-distance merging; returns (assignment, filled schedule).

    Each iteration merges exactly one pair: the one with minimal group
    distance, ties to the lexicographically smallest (i, j) over current
    group ids. Only pairs touching the merged group are recomputed; values
    between untouched groups are reused, which is exact because their
    downsampled representatives are unchanged.
    """
    if schedule is None:
        raise InvalidInputError("merge_groups requires a schedule")
    k = assignment.n_groups
    if schedule.mode == "fixed" and schedule.iterations > max(0, k - 1):
        raise InvalidInputError(
            f"cannot merge {schedule.iterations} times with {k} groups")

    members = {g: np.asarray(assignment.groups[g], dtype=np.int64)
               for g in range(k)}
    alive = sorted(members)
    values = {}
    for a in range(len(alive)):
        for b in range(a + 1, len(alive)):
            i, j = alive[a], alive[b]
            values[(i, j)] = cid_g(members[i], members[j], index, disc, policy)

    history = []
    max_iters = schedule.iterations if schedule.mode == "fixed" else k - 1
    for it in range(max_iters):
        if len(alive) < 2:
            break
        (i, j), best = min(values.items(), key=lambda kv: (kv[1], kv[0]))
        if schedule.mode == "threshold" and best > schedule.threshold:
            break
        history.append(MergeEvent(iteration=it, group_a=i, group_b=j, value=best))
        members[i] = np.sort(np.concatenate([members[i], members[j]]))
        del members[j]
        alive.remove(j)
        for key in [key for key in values if j in key]:
            del values[key]
        for g in alive:
            if g == i:
                continue
            pair = (g, i) if g < i else (i, g)
            values[pair] = cid_g(members[pair[0]], members[pair[1]],
                                 index, disc, policy)

    # compact surviving groups, ascending original id
    survivors = sorted(members)
    n = assignment.group_of.size
    group_of = np.empty(n, dtype=np.int64)
    groups = []
    for new_id, g in enumerate(survivors):
        group_of[members[g]] = new_id
        groups.append(members[g])
    merged = GroupAssignment(group_of=group_of, groups=groups)
    filled = MergeSchedule(mode=schedule.mode, iterations=schedule.iterations,
                           threshold=schedule.threshold, history=history)
    return merged, filled


@dataclass
class ConvexPart:
    """Convex hull of one group, or a flagged degenerate record.

    facets hold local indices into `vertices`; triangles for 3-D hulls,
    edges for polygons/segments.
    """

    group_id: int
    vertex_indices: np.ndarray  # global cloud point ids
    vertices: np.ndarray        # (V, D) coordinates
    facets: np.ndarray          # (F, 3) triangles or (F, 2) edges; may be empty
    degeneracy: str             # "none" | "planar" | "linear" | "point"


# relative singular-value cutoff for affine rank detection
_RANK_RTOL = 1e-8


def _affine_rank(pts: np.ndarray):
    centered = pts - pts.mean(axis=0)
    _, s, vt = np.linalg.svd(centered, full_matrices=False)
    if s.size == 0 or s[0] <= 0.0:
        return 0, None
    rank = int(np.sum(s > _RANK_RTOL * s[0]))
    return rank, vt


def _polygon_part(group_id, gidx, pts2, pts_full):
    hull = ConvexHull(pts2)
    verts = hull.vertices  # counter-clockwise cycle
    nv = len(verts)
    edges = np.stack([np.arange(nv), (np.arange(nv) + 1) % nv], axis=1)
    return gidx[verts], pts_full[verts], edges


def _oriented_triangles(hull: ConvexHull, pts: np.ndarray) -> np.ndarray:
    """Qhull simplices with vertex order fixed so normals point outward."""
    centroid = pts[hull.vertices].mean(axis=0)
    tris = hull.simplices.copy()
    a, b, c = pts[tris[:, 0]], pts[tris[:, 1]], pts[tris[:, 2]]
    normals = np.cross(b - a, c - a)
    inward = np.einsum("ij,ij->i", normals, (a + b + c) / 3.0 - centroid) < 0
    tris[inward] = tris[inward][:, [0, 2, 1]]
    return tris


def convex_hulls(cloud: PointCloud, assignment: GroupAssignment):
    """Exact convex hull per group; degenerate groups flagged, not rejected."""
    parts = []
    for g, gidx in enumerate(assignment.groups):
        gidx = np.asarray(gidx, dtype=np.int64)
        if gidx.size == 0:
            raise InvalidInputError(f"group {g} is empty")
        pts = cloud.points[gidx]
        rank, vt = _affine_rank(pts)
        full = cloud.dim
        if rank == 0:
            parts.append(ConvexPart(g, gidx[:1], pts[:1],
                                    np.empty((0, 2), dtype=np.int64), "point"))
            continue
        if rank == 1:
            proj = (pts - pts.mean(axis=0)) @ vt[0]
            lo, hi = int(np.argmin(proj)), int(np.argmax(proj))
            sel = np.array([lo, hi])
            parts.append(ConvexPart(g, gidx[sel], pts[sel],
                                    np.array([[0, 1]], dtype=np.int64), "linear"))
            continue
        if rank == 2 and full == 3:
            coords2 = (pts - pts.mean(axis=0)) @ vt[:2].T
            vi, vc, edges = _polygon_part(g, gidx, coords2, pts)
            parts.append(ConvexPart(g, vi, vc, edges, "planar"))
            continue
        if full == 2:
            vi, vc, edges = _polygon_part(g, gidx, pts, pts)
            parts.append(ConvexPart(g, vi, vc, edges, "none"))
            continue
        hull = ConvexHull(pts)
        tris = _oriented_triangles(hull, pts)
        # remap facet point ids into local hull-vertex positions
        local = np.full(len(pts), -1, dtype=np.int64)
        local[hull.vertices] = np.arange(len(hull.vertices))
        parts.append(ConvexPart(g, gidx[hull.vertices], pts[hull.vertices],
                                local[tris], "none"))
    return parts
