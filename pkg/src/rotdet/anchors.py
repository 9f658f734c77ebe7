"""Rotation-anchor lattice generation and border filtering."""

import math
from dataclasses import dataclass, field

from .geometry import RotatedBox, box_vertices

DEFAULT_SCALES = (8.0, 16.0, 32.0)
DEFAULT_RATIOS = (2.0, 5.0, 8.0)  # h:w of 1:2, 1:5, 1:8
DEFAULT_ORIENTATIONS = (
    -math.pi / 6,
    0.0,
    math.pi / 6,
    math.pi / 3,
    math.pi / 2,
    2 * math.pi / 3,
)


@dataclass(frozen=True)
class AnchorSpec:
    """Scales, h:w ratios, orientations and the feature-to-image stride.

    Defaults give 54 anchors per feature-map location (3 scales x 3 ratios
    x 6 orientations).
    """

    scales: tuple = DEFAULT_SCALES
    aspect_ratios: tuple = DEFAULT_RATIOS
    orientations: tuple = DEFAULT_ORIENTATIONS
    stride: float = 16.0

    def __post_init__(self):
        if not self.scales or not self.aspect_ratios or not self.orientations:
            raise ValueError("scales, aspect_ratios and orientations must be non-empty")
        if self.stride <= 0:
            raise ValueError("stride must be positive")
        if any(s <= 0 for s in self.scales) or any(r <= 0 for r in self.aspect_ratios):
            raise ValueError("scales and ratios must be positive")
        for o in self.orientations:
            if not (-math.pi / 4 <= o < 3 * math.pi / 4):
                raise ValueError("orientation %r outside [-pi/4, 3*pi/4)" % (o,))

    @property
    def anchors_per_location(self):
        return len(self.scales) * len(self.aspect_ratios) * len(self.orientations)


@dataclass(frozen=True)
class AnchorGrid:
    """Dense anchor set over an H x W feature map.

    Iteration order is row-major over (row, col), then orientation, ratio,
    scale innermost; indices are stable across runs.
    """

    spec: AnchorSpec
    feat_width: int
    feat_height: int
    boxes: tuple = field(repr=False)

    def __len__(self):
        return len(self.boxes)


def generate_anchors(spec, feat_w, feat_h):
    """Generate the dense anchor lattice for a feat_w x feat_h feature map.

    Each anchor is centered on its cell center in image coordinates; for
    scale s and ratio 1:r the sides are h = s*stride/sqrt(r), w =
    s*stride*sqrt(r), so the anchor area is (s*stride)**2.
    """
    if feat_w < 1 or feat_h < 1:
        raise ValueError("feature map extent must be >= 1")
    stride = spec.stride
    boxes = []
    for row in range(feat_h):
        cy = (row + 0.5) * stride
        for col in range(feat_w):
            cx = (col + 0.5) * stride
            for theta in spec.orientations:
                for ratio in spec.aspect_ratios:
                    root = math.sqrt(ratio)
                    for scale in spec.scales:
                        base = scale * stride
                        boxes.append(
                            RotatedBox(cx, cy, base / root, base * root, theta)
                        )
    return AnchorGrid(spec, feat_w, feat_h, tuple(boxes))


def filter_border(grid, img, padding_factor):
    """Keep anchors whose vertices stay inside the padded image rectangle.

    The padded rectangle is [-p*W, (1+p)*W] x [-p*H, (1+p)*H]; p = 0.25
    reproduces the border-padding setting, p = 0 the strict one.  Returns
    (grid_index, box) pairs for the survivors.
    """
    if padding_factor < 0:
        raise ValueError("padding_factor must be >= 0")
    x_lo = -padding_factor * img.width
    x_hi = (1.0 + padding_factor) * img.width
    y_lo = -padding_factor * img.height
    y_hi = (1.0 + padding_factor) * img.height
    kept = []
    for idx, box in enumerate(grid.boxes):
        ok = True
        for px, py in box_vertices(box).vertices:
            if not (x_lo <= px <= x_hi and y_lo <= py <= y_hi):
                ok = False
                break
        if ok:
            kept.append((idx, box))
    return kept
