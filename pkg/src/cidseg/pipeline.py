"""End-to-end drivers: subsample -> seeds -> groups -> labels -> evaluation.

The CLI, the experiment scripts, and the test harness all run through these
two functions so every entry point shares identical semantics.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .abstraction import MergeSchedule, convex_hulls, merge_groups
from .config import RunConfig
from .errors import InvalidInputError
from .geometry import (GroupSamplingPolicy, PointCloud, SegmentDiscretization,
                       SpatialIndex)
from .metrics import (ApReport, build_gt_instances, evaluate_abstraction,
                      evaluate_ap, predictions_from_point_labels)
from .sampling import cid_fps
from .segmentation import (GroupAssignment, LabeledSeedSet, group_points,
                           propagate_labels, subsample_cloud, upsample_labels)


@dataclass
class SegmentationResult:
    subsample: PointCloud
    subsample_indices: np.ndarray
    seed_indices: np.ndarray          # into the subsample
    assignment: GroupAssignment
    semantic_labels: np.ndarray | None  # full resolution
    instance_labels: np.ndarray         # full resolution
    ap_report: ApReport | None


def _labeled_assignment(sub: PointCloud, assignment: GroupAssignment,
                        seed_indices: np.ndarray) -> GroupAssignment:
    if sub.semantic_labels is not None and sub.instance_labels is not None:
        seeds = LabeledSeedSet.from_ground_truth(sub, seed_indices)
        return propagate_labels(assignment, seeds)
    # unsupervised fallback: every group is its own predicted instance
    k = assignment.n_groups
    out = GroupAssignment(group_of=assignment.group_of.copy(),
                          groups=[g.copy() for g in assignment.groups],
                          seed_of_group=assignment.seed_of_group.copy(),
                          semantic_of_group=np.zeros(k, dtype=np.int64),
                          instance_of_group=np.arange(k, dtype=np.int64))
    return out


def run_segmentation(cloud: PointCloud, config: RunConfig) -> SegmentationResult:
    """Seed, group, label, and upsample one scene under one recorded seed."""
    sub, keep = subsample_cloud(cloud, config.subsample_size, config.rng_seed)
    index = SpatialIndex(sub)
    disc = SegmentDiscretization(config.m_discretization)
    proposal = cid_fps(sub, index, config.k_seeds, disc, config.rng_seed)
    assignment = group_points(proposal)
    labeled = _labeled_assignment(sub, assignment, proposal.seed_indices)

    labeled_sub = PointCloud(sub.points,
                             semantic_labels=labeled.point_semantic_labels(),
                             instance_labels=labeled.point_instance_labels())
    semantic, instance = upsample_labels(labeled_sub, cloud)

    ap = None
    if cloud.semantic_labels is not None and cloud.instance_labels is not None:
        preds = predictions_from_point_labels(semantic, instance)
        gts = build_gt_instances(cloud)
        ap = evaluate_ap(preds, gts, config.iou_thresholds)
    return SegmentationResult(subsample=sub, subsample_indices=keep,
                              seed_indices=proposal.seed_indices,
                              assignment=labeled,
                              semantic_labels=semantic,
                              instance_labels=instance,
                              ap_report=ap)


@dataclass
class AbstractionResult:
    subsample: PointCloud
    subsample_indices: np.ndarray
    assignment: GroupAssignment       # merged groups over the subsample
    schedule: MergeSchedule
    parts: list
    report: object | None             # AbstractionReport when GT available


def run_abstraction(cloud: PointCloud, config: RunConfig) -> AbstractionResult:
    """Seed, group, merge, and hull one scene at working resolution."""
    if config.merge_mode is None:
        raise InvalidInputError("abstraction requires a merge schedule")
    sub, keep = subsample_cloud(cloud, config.subsample_size, config.rng_seed)
    index = SpatialIndex(sub)
    disc = SegmentDiscretization(config.m_discretization)
    policy = GroupSamplingPolicy(config.group_cap)
    proposal = cid_fps(sub, index, config.k_seeds, disc, config.rng_seed)
    assignment = group_points(proposal)
    if config.merge_mode == "fixed":
        schedule = MergeSchedule.fixed(config.merge_iters)
    else:
        schedule = MergeSchedule.with_threshold(config.merge_thresh)
    merged, filled = merge_groups(assignment, index, disc, policy, schedule)
    parts = convex_hulls(sub, merged)
    report = None
    if sub.instance_labels is not None:
        report = evaluate_abstraction(merged, sub.instance_labels)
    return AbstractionResult(subsample=sub, subsample_indices=keep,
                             assignment=merged, schedule=filled,
                             parts=parts, report=report)
