"""Greedy text-linking: merge short collinear detections into text lines."""

import math
from dataclasses import dataclass

from .geometry import RotatedBox


@dataclass(frozen=True)
class LinkConfig:
    angle_threshold: float = 10.0  # degrees

    def __post_init__(self):
        if self.angle_threshold <= 0:
            raise ValueError("angle_threshold must be positive")


def link_text_segments(proposals, cfg=LinkConfig()):
    """Single greedy pass merging aligned neighbor proposals.

    For each pair (i < j) still valid, the pair merges when the center
    distance is below the mean width and the center-line gradient agrees
    with the orientation of P_i within the angle threshold (degrees).  The
    merge keeps the midpoint center, mean height, summed width and mean
    angle, replacing P_i in place so later pairs see the merged box.
    """
    boxes = list(proposals)
    n = len(boxes)
    if n <= 1:
        return boxes
    valid = [True] * n
    for i in range(n):
        if not valid[i]:
            continue
        for j in range(i + 1, n):
            if not valid[i] or not valid[j]:
                continue
            bi = boxes[i]
            bj = boxes[j]
            mean_width = (bi.w + bj.w) / 2.0
            dx = bj.x - bi.x
            dy = bj.y - bi.y
            dist = math.hypot(dx, dy)
            if dx == 0.0:
                grad_deg = 90.0  # arctan limit for a vertical pair
            else:
                grad_deg = abs(math.degrees(math.atan(dy / dx)))
            if dist < mean_width and abs(
                grad_deg - math.degrees(bi.theta)
            ) < cfg.angle_threshold:
                boxes[i] = RotatedBox(
                    (bi.x + bj.x) / 2.0,
                    (bi.y + bj.y) / 2.0,
                    (bi.h + bj.h) / 2.0,
                    bi.w + bj.w,
                    (bi.theta + bj.theta) / 2.0,
                )
                valid[j] = False
    return [boxes[k] for k in range(n) if valid[k]]
