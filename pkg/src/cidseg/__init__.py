"""Concavity-induced distance segmentation and convex scene abstraction.

Point-pair distances measure how far the straight segment between two
points strays from the cloud's surface, so cuts across concave creases
cost more than travel along a convex face. On top of that metric the
package builds farthest-point seeding, label propagation, greedy group
merging, and convex-hull abstraction, plus AP/compactness/purity scoring.
"""

from .abstraction import ConvexPart, MergeEvent, MergeSchedule, convex_hulls, merge_groups
from .config import RunConfig, worker_count
from .errors import (CidsegError, InvalidInputError, ParseError, UsageError,
                     WriteError)
from .fileio import (SceneFile, convert_s3dis_room, detect_format,
                     parse_point_cloud, read_label_sidecar, write_hulls,
                     write_json_report, write_label_sidecar, write_point_cloud)
from .geometry import (BACKENDS, CidMatrix, GroupSamplingPolicy, PointCloud,
                       SegmentDiscretization, SpatialIndex, cid_g, cid_matrix,
                       cid_p, point_to_set_distance)
from .metrics import (AbstractionReport, ApReport, GtInstance, InstancePrediction,
                      average_precision, build_gt_instances,
                      build_instance_predictions, compactness, evaluate_abstraction,
                      evaluate_ap, instance_iou, predictions_from_point_labels,
                      purity)
from .pipeline import (AbstractionResult, SegmentationResult, run_abstraction,
                       run_segmentation)
from .sampling import SeedProposal, cid_fps
from .segmentation import (GroupAssignment, LabeledSeedSet, group_points,
                           propagate_labels, subsample_cloud, upsample_labels)
from .synth import SCENE_NAMES, synth_scene

__version__ = "0.1.0"

__all__ = [
    "AbstractionReport", "AbstractionResult", "ApReport", "BACKENDS", "CidMatrix",
    "CidsegError", "ConvexPart", "GroupAssignment", "GroupSamplingPolicy",
    "GtInstance", "InstancePrediction", "InvalidInputError", "LabeledSeedSet", "MergeEvent",
    "MergeSchedule", "ParseError", "PointCloud", "RunConfig",
    "SCENE_NAMES", "SceneFile", "SeedProposal", "SegmentDiscretization",
    "SegmentationResult", "SpatialIndex", "UsageError", "WriteError",
    "average_precision", "build_gt_instances", "build_instance_predictions",
    "cid_fps", "cid_g", "cid_matrix", "cid_p", "compactness",
    "convert_s3dis_room", "convex_hulls", "detect_format",
    "evaluate_abstraction", "evaluate_ap", "group_points", "instance_iou",
    "merge_groups", "parse_point_cloud", "point_to_set_distance",
    "predictions_from_point_labels", "propagate_labels", "purity",
    "read_label_sidecar", "run_abstraction", "run_segmentation",
    "subsample_cloud", "synth_scene", "upsample_labels", "worker_count",
    "write_hulls", "write_json_report", "write_label_sidecar",
    "write_point_cloud",
]
