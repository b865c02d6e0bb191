"""Farthest point sampling under the segment-max distance.

Selects K seed points: the first uniformly at random from the recorded rng
seed, each subsequent seed the unselected point with maximal minimum
distance to the already selected seeds. Distance columns are computed
incrementally (one new column per seed) and cached; the cache doubles as
the assignment matrix for grouping.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import InvalidInputError
from .geometry import (CidMatrix, PointCloud, SegmentDiscretization,
                       SpatialIndex, _segment_max_to_targets)


@dataclass
class SeedProposal:
    """FPS result: seeds in selection order plus the cached distance matrix.

    cached_matrix rows are the remainder points (ascending point index),
    columns the seeds in selection order; entry (r, c) is the exact pair
    distance between remainder point r and seed c. selection_values[j] is
    the min-distance of seed j to the earlier seeds at the moment it was
    picked (inf for the first, random seed); the sequence is non-increasing
    and useful for choosing K.
    """

    seed_indices: np.ndarray
    remainder_indices: np.ndarray
    cached_matrix: CidMatrix
    rng_seed: int
    selection_values: np.ndarray | None = None


def cid_fps(cloud: PointCloud, index: SpatialIndex, k: int,
            disc: SegmentDiscretization = SegmentDiscretization(),
            rng_seed: int = 0) -> SeedProposal:
    """Greedy farthest-point seed selection with incremental column caching."""
    n = cloud.n_points
    if int(k) != k or k < 1:
        raise InvalidInputError("k must be a positive integer")
    if k > n:
        raise InvalidInputError(f"k={k} exceeds the point count {n}")
    k = int(k)

    rng = np.random.default_rng(rng_seed)
    first = int(rng.integers(n))

    pts = index.points
    unselected = np.ones(n, dtype=bool)
    unselected[first] = False
    seeds = np.empty(k, dtype=np.int64)
    seeds[0] = first

    # column store over all points; rows of eventual seeds get dropped at the
    # end, which costs k*k extra cells but keeps indexing trivial
    columns = np.empty((n, k))
    d_min = np.full(n, np.inf)
    values = np.full(k, np.inf)

    for step in range(k):
        s = seeds[step]
        live = np.flatnonzero(unselected)  # ascending point index
        col = _segment_max_to_targets(index, pts[s], pts[live], disc.m)
        columns[live, step] = col
        d_min[live] = np.minimum(d_min[live], col)
        if step == k - 1:
            break
        # argmax of min-distance-to-seeds; ties go to the lowest point index
        pick = live[int(np.argmax(d_min[live]))]
        seeds[step + 1] = pick
        values[step + 1] = d_min[pick]
        unselected[pick] = False

    remainder = np.flatnonzero(unselected)
    matrix = CidMatrix(rows=remainder, cols=seeds.copy(),
                       values=columns[remainder].copy())
    return SeedProposal(seed_indices=seeds, remainder_indices=remainder,
                        cached_matrix=matrix, rng_seed=int(rng_seed),
                        selection_values=values)
