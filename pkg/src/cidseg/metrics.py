"""Evaluation harness: instance AP, compactness, purity.

AP follows the PASCAL VOC protocol with all-point interpolation: predictions
sorted by confidence, greedy one-to-one matching to the ground-truth
instance of maximal IoU at or above the threshold, precision-recall area
from the right-envelope of the curve.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import InvalidInputError
from .geometry import PointCloud
from .segmentation import GroupAssignment

DEFAULT_IOU_THRESHOLDS = (0.25, 0.5, 0.75)


@dataclass
class InstancePrediction:
    indices: np.ndarray
    semantic_label: int
    confidence: float = 1.0
    group_id: int = 0

    def __post_init__(self):
        self.indices = np.asarray(self.indices, dtype=np.int64)
        if self.indices.size == 0:
            raise InvalidInputError("prediction must cover at least one point")


@dataclass
class GtInstance:
    indices: np.ndarray
    semantic_label: int

    def __post_init__(self):
        self.indices = np.asarray(self.indices, dtype=np.int64)
        if self.indices.size == 0:
            raise InvalidInputError("ground-truth instance must be non-empty")


def instance_iou(pred, gt) -> float:
    """|pred ∩ gt| / |pred ∪ gt| over point-index sets."""
    a = np.unique(np.asarray(pred, dtype=np.int64))
    b = np.unique(np.asarray(gt, dtype=np.int64))
    if a.size == 0 or b.size == 0:
        raise InvalidInputError("IoU inputs must be non-empty")
    inter = np.intersect1d(a, b, assume_unique=True).size
    return inter / (a.size + b.size - inter)


def average_precision(preds, gt_instances, category, iou_threshold) -> float | None:
    """AP for one category at one IoU threshold; None when the category has
    no ground-truth instances (absent, not zero)."""
    if not (0.0 < iou_threshold < 1.0):
        raise InvalidInputError("IoU threshold must lie in (0, 1)")
    gts = [g for g in gt_instances if g.semantic_label == category]
    if not gts:
        return None
    cand = [p for p in preds if p.semantic_label == category]
    if not cand:
        return 0.0
    # confidence desc, then larger prediction first, then lower group id
    order = sorted(range(len(cand)),
                   key=lambda i: (-cand[i].confidence,
                                  -cand[i].indices.size,
                                  cand[i].group_id))
    matched = np.zeros(len(gts), dtype=bool)
    tp = np.zeros(len(cand))
    fp = np.zeros(len(cand))
    for rank, i in enumerate(order):
        best_iou = 0.0
        best_g = -1
        for gi, g in enumerate(gts):  # ties: first (lowest) gt index wins
            iou = instance_iou(cand[i].indices, g.indices)
            if iou > best_iou:
                best_iou = iou
                best_g = gi
        if best_g >= 0 and best_iou >= iou_threshold and not matched[best_g]:
            matched[best_g] = True
            tp[rank] = 1.0
        else:
            fp[rank] = 1.0
    ctp = np.cumsum(tp)
    cfp = np.cumsum(fp)
    recall = ctp / len(gts)
    precision = ctp / (ctp + cfp)
    # all-point interpolation: right-envelope of precision over recall
    mrec = np.concatenate([[0.0], recall, [1.0]])
    mpre = np.concatenate([[0.0], precision, [0.0]])
    for i in range(len(mpre) - 2, -1, -1):
        mpre[i] = max(mpre[i], mpre[i + 1])
    steps = np.flatnonzero(mrec[1:] != mrec[:-1])
    return float(np.sum((mrec[steps + 1] - mrec[steps]) * mpre[steps + 1]))


@dataclass
class ApReport:
    """Per-category and mean AP at each threshold, plus GT instance counts.

    Categories without ground truth are absent from all maps and excluded
    from means.
    """

    per_category: dict
    mean_ap: dict
    gt_counts: dict
    thresholds: tuple = DEFAULT_IOU_THRESHOLDS

    def to_json_dict(self) -> dict:
        def key(t):
            return f"ap{int(round(t * 100))}"

        return {
            "per_category": {
                str(c): {key(t): self.per_category[c][t] for t in self.thresholds}
                for c in sorted(self.per_category)
            },
            "mean": {key(t): self.mean_ap[t] for t in self.thresholds},
            "gt_instance_counts": {str(c): self.gt_counts[c]
                                   for c in sorted(self.gt_counts)},
        }


def evaluate_ap(preds, gt_instances, thresholds=DEFAULT_IOU_THRESHOLDS) -> ApReport:
    """AP across all categories present in the ground truth."""
    cats = sorted({g.semantic_label for g in gt_instances})
    if not cats:
        raise InvalidInputError("no ground-truth instances to evaluate")
    per_category = {}
    gt_counts = {}
    for c in cats:
        per_category[c] = {t: average_precision(preds, gt_instances, c, t)
                           for t in thresholds}
        gt_counts[c] = sum(1 for g in gt_instances if g.semantic_label == c)
    mean_ap = {t: float(np.mean([per_category[c][t] for c in cats]))
               for t in thresholds}
    return ApReport(per_category=per_category, mean_ap=mean_ap,
                    gt_counts=gt_counts, thresholds=tuple(thresholds))


def compactness(k_gt: int, k_prime: int) -> float:
    """Ground-truth instance count over final group count; may exceed 1."""
    if int(k_gt) != k_gt or int(k_prime) != k_prime or k_gt < 1 or k_prime < 1:
        raise InvalidInputError("compactness requires positive integer counts")
    return k_gt / k_prime


def majority_counts(assignment: GroupAssignment, gt_instance_labels) -> np.ndarray:
    """Per-group count of its most frequent ground-truth instance label."""
    labels = np.asarray(gt_instance_labels)
    if labels.ndim != 1 or labels.size != assignment.group_of.size:
        raise InvalidInputError("instance labels must cover all points")
    out = np.empty(assignment.n_groups, dtype=np.int64)
    for g, idx in enumerate(assignment.groups):
        _, counts = np.unique(labels[idx], return_counts=True)
        out[g] = counts.max()
    return out


def purity(assignment: GroupAssignment, gt_instance_labels) -> float:
    """Fraction of points that belong to their group's majority instance."""
    m = majority_counts(assignment, gt_instance_labels)
    return float(m.sum() / assignment.group_of.size)


@dataclass
class AbstractionReport:
    compactness: float
    purity: float
    k_gt: int
    k_prime: int
    majority_counts: list

    def to_json_dict(self) -> dict:
        return {
            "compactness": self.compactness,
            "purity": self.purity,
            "k_gt": self.k_gt,
            "k_prime": self.k_prime,
            "majority_counts": [int(m) for m in self.majority_counts],
        }


def evaluate_abstraction(assignment: GroupAssignment, gt_instance_labels) -> AbstractionReport:
    labels = np.asarray(gt_instance_labels)
    m = majority_counts(assignment, labels)
    k_gt = int(np.unique(labels).size)
    k_prime = assignment.n_groups
    return AbstractionReport(
        compactness=compactness(k_gt, k_prime),
        purity=float(m.sum() / assignment.group_of.size),
        k_gt=k_gt, k_prime=k_prime, majority_counts=m.tolist(),
    )


def build_gt_instances(cloud: PointCloud):
    """Ground-truth instances from a labeled cloud; one per instance id.

    The instance's category is the majority semantic label of its points
    (they normally all agree).
    """
    if cloud.instance_labels is None or cloud.semantic_labels is None:
        raise InvalidInputError("cloud lacks instance or semantic labels")
    out = []
    for inst in np.unique(cloud.instance_labels):
        idx = np.flatnonzero(cloud.instance_labels == inst)
        sems, counts = np.unique(cloud.semantic_labels[idx], return_counts=True)
        out.append(GtInstance(indices=idx, semantic_label=int(sems[np.argmax(counts)])))
    return out


def build_instance_predictions(assignment: GroupAssignment):
    """Predicted instances from a labeled assignment.

    Groups whose seeds carry the same instance label are unioned into one
    prediction. All confidences are 1.0; predictions are ordered by size
    descending (then lowest contributing group id) so the AP ranking is
    deterministic.
    """
    if assignment.instance_of_group is None or assignment.semantic_of_group is None:
        raise InvalidInputError("assignment has no propagated labels")
    by_instance = {}
    for g in range(assignment.n_groups):
        key = int(assignment.instance_of_group[g])
        if key not in by_instance:
            by_instance[key] = {"groups": [], "semantic": int(assignment.semantic_of_group[g])}
        by_instance[key]["groups"].append(g)
    preds = []
    for inst, rec in by_instance.items():
        idx = np.sort(np.concatenate([assignment.groups[g] for g in rec["groups"]]))
        preds.append(InstancePrediction(indices=idx,
                                        semantic_label=rec["semantic"],
                                        confidence=1.0,
                                        group_id=min(rec["groups"])))
    preds.sort(key=lambda p: (-p.indices.size, p.group_id))
    return preds


def predictions_from_point_labels(semantic_labels, instance_labels):
    """Predicted instances straight from full-resolution label arrays."""
    sem = np.asarray(semantic_labels, dtype=np.int64)
    inst = np.asarray(instance_labels, dtype=np.int64)
    if sem.shape != inst.shape or sem.ndim != 1:
        raise InvalidInputError("label arrays must be equal-length vectors")
    preds = []
    for i in np.unique(inst):
        idx = np.flatnonzero(inst == i)
        sems, counts = np.unique(sem[idx], return_counts=True)
        preds.append(InstancePrediction(indices=idx,
                                        semantic_label=int(sems[np.argmax(counts)]),
                                        confidence=1.0,
                                        group_id=int(i)))
    preds.sort(key=lambda p: (-p.indices.size, p.group_id))
    return preds
