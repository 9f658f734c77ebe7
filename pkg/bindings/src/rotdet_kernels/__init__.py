"""Native kernels for rotated-box geometry.

Array-based frontends to the same algorithms as the pure-Python ``rotdet``
package; every function is bit-identical to its reference counterpart.
Boxes cross the boundary as dense (N, 5) float64 arrays with columns
(x, y, h, w, theta).
"""

from ._core import (
    decode,
    encode,
    generate_anchors,
    rroi_pool,
    skew_iou,
    skew_iou_matrix,
    skew_nms,
)

__version__ = "0.1.0"

__all__ = [
    "decode",
    "encode",
    "generate_anchors",
    "rroi_pool",
    "skew_iou",
    "skew_iou_matrix",
    "skew_nms",
]
