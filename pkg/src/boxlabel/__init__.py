"""boxlabel: turn pose-tracked image sequences plus 3D virtual boxes into
annotated 2D object-detection datasets.

Workflow: define boxes in the world frame (by hand, from a tracked marker
pen, or by carving silhouettes), then reproject them through every frame's
camera pose to get per-image bounding boxes, and audit the result with
standard detection metrics and viewpoint-coverage histograms.
"""

from .coverage import (
    DEFAULT_PHI_BINS,
    DEFAULT_THETA_BINS,
    CoverageHistogram,
    PolarViewpoint,
    bin_of,
    camera_in_object_frame,
    coverage_gaps,
    coverage_histogram,
    histogram_to_dict,
    parse_bins,
    save_histogram_csv,
    save_histogram_json,
)
from .errors import (
    BoxlabelError,
    CoincidentPosition,
    CollinearPoints,
    DegenerateDepth,
    DegenerateEdge,
    DuplicateId,
    EmptyHull,
    EmptyHullError,
    FrameMismatch,
    InconsistentObservations,
    InvalidPose,
    InvalidSize,
    NoGroundTruth,
    NoMarkersVisible,
    NotFound,
    ParseError,
    RevisionConflict,
    TooFewViews,
    UnknownFormat,
)
from .geometry import (
    CameraModel,
    PixelPoint,
    RigidTransform,
    compose,
    invert,
    project_point,
    rot_x,
    rot_y,
    rot_z,
    transform_points,
)
from .hull import (
    DEFAULT_RESOLUTION,
    SilhouetteMask,
    VoxelHull,
    carve,
    hull_to_instance,
    load_hull,
    load_masks,
    points_in_polygon,
    save_hull,
    save_masks,
)
from .labeler import (
    DEFAULT_CONFIG,
    Annotation2D,
    DatasetStats,
    LabeledFrame,
    LabelerConfig,
    annotations_from_dict,
    generate_dataset,
    label_all,
    label_frame,
    load_annotations,
    min_bbox,
    reproject_box,
    split_frame_ids,
)
from .metrics import (
    DEFAULT_IOU_THRESHOLD,
    AgreementReport,
    AvgIou,
    ClassReport,
    ClassStats,
    EvalReport,
    MatchResult,
    PRCurve,
    agreement_report_to_dict,
    average_precision,
    compare_annotation_sets,
    eval_report_to_dict,
    evaluate_detections,
    iou,
    load_predictions,
    match_predictions,
    mean_average_precision,
    pr_curve,
    predictions_from_dict,
    save_predictions,
)
from .pen import (
    MarkerObservation,
    TipEstimate,
    box_to_world,
    build_virtual_box,
    estimate_tip,
    load_pen_layout,
    read_observation_stream,
)
from .scene import (
    BOX_EDGES,
    Frame,
    FrameSet,
    InstanceSet,
    VirtualBox,
    box_local_vertices,
    box_vertices,
    load_frames,
    load_instances,
    save_frames,
    save_instances,
    validate_images,
)

__version__ = "0.1.0"

__all__ = [
    "AgreementReport",
    "Annotation2D",
    "AvgIou",
    "BOX_EDGES",
    "BoxlabelError",
    "CameraModel",
    "ClassReport",
    "ClassStats",
    "CoincidentPosition",
    "CollinearPoints",
    "CoverageHistogram",
    "DEFAULT_CONFIG",
    "DEFAULT_IOU_THRESHOLD",
    "DEFAULT_PHI_BINS",
    "DEFAULT_RESOLUTION",
    "DEFAULT_THETA_BINS",
    "DatasetStats",
    "DegenerateDepth",
    "DegenerateEdge",
    "DuplicateId",
    "EmptyHull",
    "EmptyHullError",
    "EvalReport",
    "Frame",
    "FrameMismatch",
    "FrameSet",
    "InconsistentObservations",
    "InstanceSet",
    "InvalidPose",
    "InvalidSize",
    "LabeledFrame",
    "LabelerConfig",
    "MarkerObservation",
    "MatchResult",
    "NoGroundTruth",
    "NoMarkersVisible",
    "NotFound",
    "PRCurve",
    "ParseError",
    "PixelPoint",
    "PolarViewpoint",
    "RevisionConflict",
    "RigidTransform",
    "SilhouetteMask",
    "TipEstimate",
    "TooFewViews",
    "UnknownFormat",
    "VirtualBox",
    "VoxelHull",
    "agreement_report_to_dict",
    "annotations_from_dict",
    "average_precision",
    "bin_of",
    "box_local_vertices",
    "box_to_world",
    "box_vertices",
    "build_virtual_box",
    "camera_in_object_frame",
    "carve",
    "compare_annotation_sets",
    "compose",
    "coverage_gaps",
    "coverage_histogram",
    "estimate_tip",
    "eval_report_to_dict",
    "evaluate_detections",
    "generate_dataset",
    "histogram_to_dict",
    "hull_to_instance",
    "invert",
    "iou",
    "label_all",
    "label_frame",
    "load_annotations",
    "load_frames",
    "load_hull",
    "load_instances",
    "load_masks",
    "load_pen_layout",
    "load_predictions",
    "match_predictions",
    "mean_average_precision",
    "min_bbox",
    "parse_bins",
    "points_in_polygon",
    "pr_curve",
    "predictions_from_dict",
    "project_point",
    "read_observation_stream",
    "reproject_box",
    "rot_x",
    "rot_y",
    "rot_z",
    "save_frames",
    "save_histogram_csv",
    "save_histogram_json",
    "save_hull",
    "save_instances",
    "save_masks",
    "save_predictions",
    "split_frame_ids",
    "transform_points",
    "validate_images",
    "__version__",
]
