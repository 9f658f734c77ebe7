"""Annotation parsing, box fitting, ground-truth transforms and evaluation.

Supported ground-truth formats:
  - MSRA-TD500: "index difficulty x y w h angle" with (x, y) the top-left of
    the axis-aligned rectangle and the angle in radians about its center.
  - ICDAR2015: "x1,y1,x2,y2,x3,y3,x4,y4,transcription" (optional BOM);
    transcription "###" marks an unreadable instance.
  - ICDAR2013: "left, top, right, bottom, \"transcription\"".

Detections interchange as "cx cy w h theta score" lines, theta in radians.
"""

import math
import random
from dataclasses import dataclass
from typing import Optional

from .geometry import (
    RotatedBox,
    box_vertices,
    canonicalize,
    skew_iou,
)
from .matching import Detection


@dataclass(frozen=True)
class GroundTruthInstance:
    box: RotatedBox
    readable: bool = True
    transcription: Optional[str] = None


@dataclass(frozen=True)
class EvalResult:
    precision: float
    recall: float
    f_measure: float
    matches: tuple


class ParseError(ValueError):
    pass


def _lines(contents):
    for lineno, raw in enumerate(contents.split("\n"), start=1):
        line = raw.lstrip("\ufeff").strip()
        if line:
            yield lineno, line


def parse_msra(contents):
    out = []
    for lineno, line in _lines(contents):
        parts = line.split()
        if len(parts) != 7:
            raise ParseError("line %d: expected 7 fields, got %d" % (lineno, len(parts)))
        try:
            _, difficulty = int(parts[0]), int(parts[1])
            x, y, w, h, angle = (float(p) for p in parts[2:])
        except ValueError:
            raise ParseError("line %d: malformed MSRA record" % lineno)
        box = canonicalize(RotatedBox(x + w / 2.0, y + h / 2.0, h, w, angle))
        out.append(GroundTruthInstance(box, readable=(difficulty == 0)))
    return out


def serialize_msra(gts):
    lines = []
    for idx, gt in enumerate(gts):
        b = gt.box
        difficulty = 0 if gt.readable else 1
        lines.append(
            "%d %d %s %s %s %s %s"
            % (idx, difficulty, b.x - b.w / 2.0, b.y - b.h / 2.0, b.w, b.h, b.theta)
        )
    return "".join(line + "\n" for line in lines)


def parse_icdar15(contents):
    out = []
    for lineno, line in _lines(contents):
        parts = line.split(",", 8)
        if len(parts) < 9:
            raise ParseError("line %d: expected 8 coordinates + transcription" % lineno)
        try:
            coords = [float(p) for p in parts[:8]]
        except ValueError:
            raise ParseError("line %d: non-numeric vertex" % lineno)
        quad = [(coords[k], coords[k + 1]) for k in range(0, 8, 2)]
        transcription = parts[8]
        box = quad_to_rotated_rect(quad)
        out.append(
            GroundTruthInstance(
                box, readable=(transcription != "###"), transcription=transcription
            )
        )
    return out


def serialize_icdar15(gts):
    lines = []
    for gt in gts:
        coords = []
        for px, py in box_vertices(gt.box).vertices:
            coords.extend((str(px), str(py)))
        transcription = gt.transcription
        if transcription is None:
            transcription = "" if gt.readable else "###"
        lines.append(",".join(coords + [transcription]))
    return "".join(line + "\n" for line in lines)


def parse_icdar13(contents):
    out = []
    for lineno, line in _lines(contents):
        parts = line.split(",", 4)
        if len(parts) < 5:
            raise ParseError("line %d: expected 4 coordinates + transcription" % lineno)
        try:
            left, top, right, bottom = (float(p.strip()) for p in parts[:4])
        except ValueError:
            raise ParseError("line %d: non-numeric coordinate" % lineno)
        if right <= left or bottom <= top:
            raise ParseError("line %d: empty box extent" % lineno)
        word = parts[4].strip()
        if len(word) >= 2 and word.startswith('"') and word.endswith('"'):
            word = word[1:-1]
        box = canonicalize(
            RotatedBox((left + right) / 2.0, (top + bottom) / 2.0, bottom - top,
                       right - left, 0.0)
        )
        out.append(GroundTruthInstance(box, readable=True, transcription=word))
    return out


def serialize_icdar13(gts):
    lines = []
    for gt in gts:
        box = gt.box
        # exact paths for the two axis-aligned orientations so that
        # parse/serialize reach a fixed point without trig rounding
        if box.theta == 0.0:
            half_x, half_y = box.w / 2.0, box.h / 2.0
        elif box.theta == math.pi / 2:
            half_x, half_y = box.h / 2.0, box.w / 2.0
        else:
            verts = box_vertices(box).vertices
            xs = [p[0] for p in verts]
            ys = [p[1] for p in verts]
            half_x = (max(xs) - min(xs)) / 2.0
            half_y = (max(ys) - min(ys)) / 2.0
        word = gt.transcription or ""
        lines.append(
            '%s, %s, %s, %s, "%s"'
            % (box.x - half_x, box.y - half_y, box.x + half_x, box.y + half_y,
               word)
        )
    return "".join(line + "\n" for line in lines)


def parse_detections(contents):
    out = []
    for lineno, line in _lines(contents):
        parts = line.split()
        if len(parts) != 6:
            raise ParseError("line %d: expected 'cx cy w h theta score'" % lineno)
        try:
            cx, cy, w, h, theta, score = (float(p) for p in parts)
        except ValueError:
            raise ParseError("line %d: malformed detection record" % lineno)
        out.append(Detection(RotatedBox(cx, cy, h, w, theta), score))
    return out


def serialize_detections(dets, precision=6):
    fmt = "%%.%df" % precision
    lines = []
    for d in dets:
        b = d.box
        lines.append(" ".join(fmt % v for v in (b.x, b.y, b.w, b.h, b.theta, d.score)))
    return "".join(line + "\n" for line in lines)


def _convex_hull(points):
    pts = sorted(set(points))
    if len(pts) < 3:
        return pts

    def half(seq):
        hull = []
        for p in seq:
            while len(hull) >= 2:
                ox, oy = hull[-2]
                ax, ay = hull[-1]
                if (ax - ox) * (p[1] - oy) - (ay - oy) * (p[0] - ox) <= 0:
                    hull.pop()
                else:
                    break
            hull.append(p)
        return hull

    lower = half(pts)
    upper = half(reversed(pts))
    return lower[:-1] + upper[:-1]


def quad_to_rotated_rect(quad):
    """Minimum-area enclosing rotated rectangle of 4 points (rotating calipers)."""
    hull = _convex_hull([(float(x), float(y)) for x, y in quad])
    if len(hull) < 3:
        raise ValueError("degenerate quadrilateral: points are collinear or duplicated")
    best = None
    n = len(hull)
    for i in range(n):
        px, py = hull[i]
        qx, qy = hull[(i + 1) % n]
        ex, ey = qx - px, qy - py
        norm = math.hypot(ex, ey)
        ux, uy = ex / norm, ey / norm
        proj_u = [x * ux + y * uy for x, y in hull]
        proj_v = [-x * uy + y * ux for x, y in hull]
        du = max(proj_u) - min(proj_u)
        dv = max(proj_v) - min(proj_v)
        area = du * dv
        if best is None or area < best[0]:
            cu = (max(proj_u) + min(proj_u)) / 2.0
            cv = (max(proj_v) + min(proj_v)) / 2.0
            best = (area, cu * ux - cv * uy, cu * uy + cv * ux, dv, du,
                    math.atan2(uy, ux))
    _, cx, cy, h, w, theta = best
    return canonicalize(RotatedBox(cx, cy, h, w, theta))


def enlarge_context(box, factor):
    """Scale both sides by factor about a fixed center and orientation."""
    if factor <= 0:
        raise ValueError("enlargement factor must be positive")
    return RotatedBox(box.x, box.y, box.h * factor, box.w * factor, box.theta)


def filter_unreadable(gts, remove_proportion, seed):
    """Drop floor(p * n_unreadable) unreadable instances, seeded and deterministic."""
    if not (0.0 <= remove_proportion <= 1.0):
        raise ValueError("remove_proportion must be in [0, 1]")
    unreadable = [i for i, g in enumerate(gts) if not g.readable]
    k = int(math.floor(remove_proportion * len(unreadable)))
    removed = set(random.Random(seed).sample(unreadable, k))
    return [g for i, g in enumerate(gts) if i not in removed]


def to_horizontal(box):
    """Axis-aligned bounding rectangle of the box's vertices."""
    verts = box_vertices(box).vertices
    xs = [p[0] for p in verts]
    ys = [p[1] for p in verts]
    return canonicalize(
        RotatedBox(
            (min(xs) + max(xs)) / 2.0,
            (min(ys) + max(ys)) / 2.0,
            max(ys) - min(ys),
            max(xs) - min(xs),
            0.0,
        )
    )


def match_detections(dets, gts, iou_thresh=0.5):
    """Greedy one-to-one matching of detections against readable ground truth.

    Detections are visited in descending score order (ties by input index);
    each matches the unmatched readable gt of highest skew IoU when that IoU
    exceeds the threshold.  Returns (matches, dont_care) where dont_care
    counts unmatched detections overlapping only unreadable gts above the
    threshold; those leave the precision denominator.
    """
    if not (0.0 < iou_thresh < 1.0):
        raise ValueError("iou_thresh must be in (0, 1)")
    readable = [i for i, g in enumerate(gts) if g.readable]
    unreadable = [i for i, g in enumerate(gts) if not g.readable]
    order = sorted(range(len(dets)), key=lambda i: (-dets[i].score, i))
    taken = set()
    matches = []
    dont_care = 0
    for di in order:
        box = dets[di].box
        best_gt = -1
        best_iou = iou_thresh
        for gi in readable:
            if gi in taken:
                continue
            iou = skew_iou(box, gts[gi].box)
            if iou > best_iou:
                best_iou = iou
                best_gt = gi
        if best_gt >= 0:
            taken.add(best_gt)
            matches.append((di, best_gt))
            continue
        if any(skew_iou(box, gts[gi].box) > iou_thresh for gi in unreadable):
            dont_care += 1
    return sorted(matches), dont_care


def prf(matched, counted_dets, readable_gts):
    precision = matched / counted_dets if counted_dets else 0.0
    recall = matched / readable_gts if readable_gts else 0.0
    f = 2 * precision * recall / (precision + recall) if precision + recall else 0.0
    return precision, recall, f


def evaluate(dets, gts, iou_thresh=0.5):
    """Precision/recall/F-measure of detections against ground truth
    (see match_detections for the matching protocol)."""
    matches, dont_care = match_detections(dets, gts, iou_thresh)
    readable = sum(1 for g in gts if g.readable)
    precision, recall, f = prf(len(matches), len(dets) - dont_care, readable)
    return EvalResult(precision, recall, f, tuple(matches))
