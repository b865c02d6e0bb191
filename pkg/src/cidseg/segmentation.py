"""Point grouping, label propagation, and full-resolution upsampling.

Every unselected point joins the seed minimizing the cached pair distance
(row-wise argmin of the FPS cache); seed labels then propagate to their
groups; finally labels transfer from the working subsample back to the full
cloud by exact Euclidean nearest neighbor.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import InvalidInputError
from .geometry import PointCloud, SpatialIndex
from .sampling import SeedProposal


@dataclass
class GroupAssignment:
    """Partition of point indices into groups, with optional seed/labels."""

    group_of: np.ndarray              # point index -> group id in [0, K)
    groups: list                      # per-group sorted point-index arrays
    seed_of_group: np.ndarray | None = None
    semantic_of_group: np.ndarray | None = None
    instance_of_group: np.ndarray | None = None

    @property
    def n_groups(self) -> int:
        return len(self.groups)

    def point_semantic_labels(self) -> np.ndarray:
        if self.semantic_of_group is None:
            raise InvalidInputError("assignment has no semantic labels")
        return self.semantic_of_group[self.group_of]

    def point_instance_labels(self) -> np.ndarray:
        if self.instance_of_group is None:
            raise InvalidInputError("assignment has no instance labels")
        return self.instance_of_group[self.group_of]


@dataclass
class LabeledSeedSet:
    """Per-seed (semantic, instance) label pairs."""

    seed_indices: np.ndarray
    semantic_labels: np.ndarray
    instance_labels: np.ndarray

    def __post_init__(self):
        self.seed_indices = np.asarray(self.seed_indices, dtype=np.int64)
        self.semantic_labels = np.asarray(self.semantic_labels, dtype=np.int64)
        self.instance_labels = np.asarray(self.instance_labels, dtype=np.int64)
        if not (self.seed_indices.shape == self.semantic_labels.shape
                == self.instance_labels.shape):
            raise InvalidInputError("seed set requires one label pair per seed")

    @classmethod
    def from_ground_truth(cls, cloud: PointCloud, seed_indices) -> "LabeledSeedSet":
        """Label each seed with the ground-truth labels of its own point."""
        idx = np.asarray(seed_indices, dtype=np.int64)
        if cloud.semantic_labels is None or cloud.instance_labels is None:
            raise InvalidInputError("cloud lacks ground-truth labels for seeds")
        return cls(idx, cloud.semantic_labels[idx], cloud.instance_labels[idx])


def subsample_cloud(cloud: PointCloud, max_points: int, rng_seed: int):
    """Uniform random working-resolution subsample; returns (cloud, indices).

    Indices are sorted ascending so downstream tie-breaks stay aligned with
    original point order. Identity (no-op) when the cloud is small enough.
    """
    if int(max_points) != max_points or max_points < 1:
        raise InvalidInputError("subsample size must be a positive integer")
    n = cloud.n_points
    if n <= max_points:
        return cloud, np.arange(n, dtype=np.int64)
    rng = np.random.default_rng(rng_seed)
    keep = np.sort(rng.permutation(n)[:int(max_points)])
    return cloud.subset(keep), keep


def group_points(proposal: SeedProposal) -> GroupAssignment:
    """Assign every point to a seed: seeds to themselves, the rest by argmin.

    Argmin ties are resolved to the seed with the lowest point index.
    """
    seeds = proposal.seed_indices
    remainder = proposal.remainder_indices
    values = proposal.cached_matrix.values
    k = seeds.size
    n = seeds.size + remainder.size
    if values.shape != (remainder.size, k):
        raise InvalidInputError("cached matrix shape does not match the proposal")

    group_of = np.empty(n, dtype=np.int64)
    group_of[seeds] = np.arange(k)
    if remainder.size:
        rowmin = values.min(axis=1, keepdims=True)
        ties = values == rowmin
        # scan tie columns in ascending seed-point-index order
        col_order = np.argsort(seeds, kind="stable")
        pos = np.argmax(ties[:, col_order], axis=1)
        group_of[remainder] = col_order[pos]
    groups = [np.flatnonzero(group_of == g) for g in range(k)]
    return GroupAssignment(group_of=group_of, groups=groups,
                           seed_of_group=seeds.copy())


def propagate_labels(assignment: GroupAssignment, seeds: LabeledSeedSet) -> GroupAssignment:
    """Copy each group seed's (semantic, instance) labels onto the group."""
    if assignment.seed_of_group is None:
        raise InvalidInputError("assignment carries no seed identities")
    label_of = {int(s): (int(sem), int(inst))
                for s, sem, inst in zip(seeds.seed_indices,
                                        seeds.semantic_labels,
                                        seeds.instance_labels)}
    k = assignment.n_groups
    semantic = np.empty(k, dtype=np.int64)
    instance = np.empty(k, dtype=np.int64)
    for g in range(k):
        s = int(assignment.seed_of_group[g])
        if s not in label_of:
            raise InvalidInputError(f"group {g} has no labeled seed (seed index {s})")
        semantic[g], instance[g] = label_of[s]
    return GroupAssignment(group_of=assignment.group_of.copy(),
                           groups=[g.copy() for g in assignment.groups],
                           seed_of_group=assignment.seed_of_group.copy(),
                           semantic_of_group=semantic,
                           instance_of_group=instance)


def upsample_labels(labeled_subsample: PointCloud, full_cloud: PointCloud):
    """Transfer labels to the full cloud by exact Euclidean nearest neighbor.

    Ties go to the lowest subsample index. Returns (semantic, instance)
    arrays; semantic is None when the subsample has no semantic labels.
    """
    if labeled_subsample.dim != full_cloud.dim:
        raise InvalidInputError("subsample and full cloud dimensions differ")
    if labeled_subsample.instance_labels is None:
        raise InvalidInputError("subsample carries no instance labels to upsample")
    index = SpatialIndex(labeled_subsample)
    _, nearest = index.query_nearest(full_cloud.points)
    instance = labeled_subsample.instance_labels[nearest]
    semantic = None
    if labeled_subsample.semantic_labels is not None:
        semantic = labeled_subsample.semantic_labels[nearest]
    return semantic, instance
