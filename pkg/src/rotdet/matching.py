"""Anchor-to-ground-truth labeling and skew non-maximum suppression."""

import math
from dataclasses import dataclass
from typing import Optional

from .geometry import angle_sub, skew_iou, skew_iou_matrix

POSITIVE = "positive"
NEGATIVE = "negative"
IGNORE = "ignore"


@dataclass(frozen=True)
class MatchLabel:
    kind: str
    gt_index: Optional[int] = None

    def __post_init__(self):
        if self.kind not in (POSITIVE, NEGATIVE, IGNORE):
            raise ValueError("bad label kind %r" % (self.kind,))
        if self.kind == POSITIVE and self.gt_index is None:
            raise ValueError("positive label needs a gt index")


@dataclass(frozen=True)
class MatchConfig:
    pos_iou: float = 0.7
    neg_iou: float = 0.3
    angle_limit: float = math.pi / 12

    def __post_init__(self):
        if not (0.0 <= self.neg_iou < self.pos_iou <= 1.0):
            raise ValueError("need 0 <= neg_iou < pos_iou <= 1")
        if not (0.0 < self.angle_limit <= math.pi / 2):
            raise ValueError("angle_limit must be in (0, pi/2]")


@dataclass(frozen=True)
class Detection:
    box: object
    score: float

    def __post_init__(self):
        if not (math.isfinite(self.score) and 0.0 <= self.score <= 1.0):
            raise ValueError("score must be finite and in [0, 1]")


def assign_labels(anchors, gts, cfg=MatchConfig()):
    """Label each anchor positive/negative/ignore against the ground truth.

    An anchor is positive for a gt when it either has the highest IoU with
    that gt among all angle-compatible anchors, or overlaps it above
    cfg.pos_iou; the intersection angle must stay below cfg.angle_limit.
    Positives bind to the qualifying gt of highest IoU (ties to the lowest
    index).  Anchors with max IoU below cfg.neg_iou are negative, as are
    anchors above cfg.pos_iou whose angle against their best gt exceeds the
    limit.  Everything else is ignored.  Empty gts make all anchors negative.
    """
    if not anchors:
        raise ValueError("anchors must be non-empty")
    if not gts:
        return [MatchLabel(NEGATIVE)] * len(anchors)

    iou = skew_iou_matrix(anchors, gts)
    n_a, n_g = len(anchors), len(gts)
    angle_ok = [
        [abs(angle_sub(a.theta, g.theta)) < cfg.angle_limit for g in gts]
        for a in anchors
    ]

    positive = {}
    # high-overlap rule: bind to the best angle-compatible gt above pos_iou
    for i in range(n_a):
        best = None
        for j in range(n_g):
            if angle_ok[i][j] and iou[i, j] > cfg.pos_iou:
                if best is None or iou[i, j] > iou[i, best]:
                    best = j
        if best is not None:
            positive[i] = best

    # highest-IoU rule: each gt claims its best angle-compatible anchor,
    # falling back to unclaimed anchors so no matchable gt is starved
    for j in range(n_g):
        if any(g == j for g in positive.values()):
            continue
        best = None
        for i in range(n_a):
            if not angle_ok[i][j] or i in positive:
                continue
            if best is None or iou[i, j] > iou[best, j]:
                best = i
        if best is not None:
            positive[best] = j

    labels = []
    for i, anchor in enumerate(anchors):
        if i in positive:
            labels.append(MatchLabel(POSITIVE, positive[i]))
            continue
        gmax = int(iou[i].argmax())
        if iou[i, gmax] < cfg.neg_iou:
            labels.append(MatchLabel(NEGATIVE))
        elif iou[i, gmax] > cfg.pos_iou and abs(
            angle_sub(anchor.theta, gts[gmax].theta)
        ) > cfg.angle_limit:
            labels.append(MatchLabel(NEGATIVE))
        else:
            labels.append(MatchLabel(IGNORE))
    return labels


def skew_nms(dets, iou_keep=0.7, iou_low=0.3, angle_limit=math.pi / 12):
    """Greedy suppression over detections sorted by descending score.

    A kept detection suppresses a lower-scored one when their skew IoU
    exceeds iou_keep, or when it lies in [iou_low, iou_keep] and the angle
    difference is below angle_limit.  Score ties break by input index.
    """
    if iou_low >= iou_keep:
        raise ValueError("iou_low must be < iou_keep")
    order = sorted(range(len(dets)), key=lambda i: (-dets[i].score, i))
    kept = []
    for i in order:
        d = dets[i]
        suppressed = False
        for k in kept:
            iou = skew_iou(d.box, k.box)
            if iou > iou_keep:
                suppressed = True
                break
            if iou_low <= iou <= iou_keep and abs(
                angle_sub(d.box.theta, k.box.theta)
            ) < angle_limit:
                suppressed = True
                break
        if not suppressed:
            kept.append(d)
    return kept
