"""Geometric and algorithmic machinery for rotation-proposal text detection."""

from .anchors import AnchorGrid, AnchorSpec, filter_border, generate_anchors
from .datasets import (
    EvalResult,
    GroundTruthInstance,
    ParseError,
    enlarge_context,
    evaluate,
    filter_unreadable,
    parse_detections,
    parse_icdar13,
    parse_icdar15,
    parse_msra,
    quad_to_rotated_rect,
    serialize_detections,
    serialize_icdar13,
    serialize_icdar15,
    serialize_msra,
    to_horizontal,
)
from .geometry import (
    ImageSize,
    Polygon,
    RotatedBox,
    angle_sub,
    box_vertices,
    canonicalize,
    intersection_polygon,
    normalize_angle,
    polygon_area,
    rotate_ground_truth,
    skew_iou,
    skew_iou_matrix,
)
from .linking import LinkConfig, link_text_segments
from .matching import (
    Detection,
    MatchConfig,
    MatchLabel,
    assign_labels,
    skew_nms,
)
from .regression import (
    ClassScore,
    LossConfig,
    RegressionTarget,
    cls_loss,
    decode,
    encode,
    multitask_loss,
    reg_loss,
    smooth_l1,
)
from .rroi import FeatureMap, PoolConfig, rroi_pool, rroi_pool_oracle

__version__ = "0.1.0"
