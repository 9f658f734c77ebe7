"""Rotated-box geometry: canonical 5-tuple boxes, angle arithmetic and skew IoU.

Boxes are (x, y, h, w, theta): center, short side, long side, orientation in
radians.  theta is kept in the half-open interval [-pi/4, 3*pi/4); opposite
reading directions map to the same box.
"""

import math
from dataclasses import dataclass

import numpy as np

_QUARTER_PI = math.pi / 4
_THETA_HI = 3 * math.pi / 4

# Tolerances for the polygon-intersection kernel.
_PARALLEL_EPS = 1e-9
_INSIDE_EPS = 1e-9
_DEDUP_EPS_SQ = 1e-16  # points closer than 1e-8 are merged


def normalize_angle(theta):
    """Map theta to the equivalent angle theta + k*pi in [-pi/4, 3*pi/4)."""
    if not math.isfinite(theta):
        raise ValueError("angle must be finite, got %r" % (theta,))
    r = math.fmod(theta + _QUARTER_PI, math.pi)
    if r < 0.0:
        r += math.pi
    out = r - _QUARTER_PI
    if out >= _THETA_HI:  # guard against rounding at the seam
        out -= math.pi
    return out


def angle_sub(a, b):
    """Difference a - b wrapped into [-pi/4, 3*pi/4) (the ``a (-) b`` operation)."""
    if not (math.isfinite(a) and math.isfinite(b)):
        raise ValueError("angles must be finite")
    return normalize_angle(a - b)


@dataclass(frozen=True)
class RotatedBox:
    """Rotated rectangle (x, y, h, w, theta); theta normalized on construction."""

    x: float
    y: float
    h: float
    w: float
    theta: float

    def __post_init__(self):
        for name in ("x", "y", "h", "w", "theta"):
            v = getattr(self, name)
            if not math.isfinite(v):
                raise ValueError("RotatedBox.%s must be finite, got %r" % (name, v))
        if self.h <= 0 or self.w <= 0:
            raise ValueError(
                "RotatedBox dims must be positive, got h=%r w=%r" % (self.h, self.w)
            )
        object.__setattr__(self, "theta", normalize_angle(self.theta))

    @property
    def area(self):
        return self.w * self.h

    def astuple(self):
        return (self.x, self.y, self.h, self.w, self.theta)


@dataclass(frozen=True)
class ImageSize:
    width: int
    height: int

    def __post_init__(self):
        if self.width < 1 or self.height < 1:
            raise ValueError("image size must be >= 1x1")


@dataclass(frozen=True)
class Polygon:
    """Ordered 2D point list; intersection results are convex and anticlockwise."""

    vertices: tuple

    def __len__(self):
        return len(self.vertices)


def canonicalize(box):
    """Return the equivalent box with w >= h (swapping sides rotates by pi/2)."""
    x, y, h, w, theta = box.x, box.y, box.h, box.w, box.theta
    if w < h:
        h, w = w, h
        theta = normalize_angle(theta + math.pi / 2)
    return RotatedBox(x, y, h, w, theta)


def box_vertices(box):
    """Four corners of the box in anticlockwise order."""
    c = math.cos(box.theta)
    s = math.sin(box.theta)
    hw = 0.5 * box.w
    hh = 0.5 * box.h
    pts = []
    for dx, dy in ((-hw, -hh), (hw, -hh), (hw, hh), (-hw, hh)):
        pts.append((box.x + dx * c - dy * s, box.y + dx * s + dy * c))
    return Polygon(tuple(pts))


def rotate_ground_truth(box, alpha, img):
    """Transform an annotation for an image rotated by alpha about its center.

    The center moves through T(cx,cy) R(alpha) T(-cx,-cy); the sides are
    unchanged and the orientation advances by alpha (then wraps).
    """
    if not (0.0 <= alpha < 2 * math.pi):
        raise ValueError("alpha must lie in [0, 2*pi), got %r" % (alpha,))
    cx = img.width / 2.0
    cy = img.height / 2.0
    ca = math.cos(alpha)
    sa = math.sin(alpha)
    dx = box.x - cx
    dy = box.y - cy
    x2 = dx * ca + dy * sa + cx
    y2 = -dx * sa + dy * ca + cy
    return RotatedBox(x2, y2, box.h, box.w, normalize_angle(box.theta + alpha))


def _segment_intersection(p1, q1, p2, q2, out):
    d1x = q1[0] - p1[0]
    d1y = q1[1] - p1[1]
    d2x = q2[0] - p2[0]
    d2y = q2[1] - p2[1]
    denom = d1x * d2y - d1y * d2x
    if abs(denom) <= _PARALLEL_EPS:
        return
    ex = p2[0] - p1[0]
    ey = p2[1] - p1[1]
    t = (ex * d2y - ey * d2x) / denom
    u = (ex * d1y - ey * d1x) / denom
    if -1e-9 <= t <= 1.0 + 1e-9 and -1e-9 <= u <= 1.0 + 1e-9:
        out.append((p1[0] + t * d1x, p1[1] + t * d1y))


def _point_in_convex(p, verts):
    n = len(verts)
    for i in range(n):
        ax, ay = verts[i]
        bx, by = verts[(i + 1) % n]
        cross = (bx - ax) * (p[1] - ay) - (by - ay) * (p[0] - ax)
        if cross < -_INSIDE_EPS:
            return False
    return True


def intersection_polygon(a, b):
    """Convex intersection of two rotated boxes, vertices sorted anticlockwise.

    Point set = edge-edge intersections plus contained vertices, deduplicated
    and sorted by angle about the centroid.  Disjoint boxes give an empty
    polygon; touching boxes give a zero-area one.
    """
    va = box_vertices(a).vertices
    vb = box_vertices(b).vertices
    pset = []
    for i in range(4):
        for j in range(4):
            _segment_intersection(va[i], va[(i + 1) % 4], vb[j], vb[(j + 1) % 4], pset)
    for p in va:
        if _point_in_convex(p, vb):
            pset.append(p)
    for p in vb:
        if _point_in_convex(p, va):
            pset.append(p)

    kept = []
    for p in pset:
        dup = False
        for q in kept:
            dx = p[0] - q[0]
            dy = p[1] - q[1]
            if dx * dx + dy * dy < _DEDUP_EPS_SQ:
                dup = True
                break
        if not dup:
            kept.append(p)

    if len(kept) >= 3:
        cx = sum(p[0] for p in kept) / len(kept)
        cy = sum(p[1] for p in kept) / len(kept)
        kept.sort(
            key=lambda p: (
                math.atan2(p[1] - cy, p[0] - cx),
                (p[0] - cx) ** 2 + (p[1] - cy) ** 2,
            )
        )
    return Polygon(tuple(kept))


def polygon_area(poly):
    """Area by fan triangulation from the first vertex; degenerate inputs give 0."""
    verts = poly.vertices
    if len(verts) < 3:
        return 0.0
    x0, y0 = verts[0]
    total = 0.0
    for i in range(1, len(verts) - 1):
        ax = verts[i][0] - x0
        ay = verts[i][1] - y0
        bx = verts[i + 1][0] - x0
        by = verts[i + 1][1] - y0
        total += 0.5 * abs(ax * by - ay * bx)
    return total


def _aabb(box):
    verts = box_vertices(box).vertices
    xs = [p[0] for p in verts]
    ys = [p[1] for p in verts]
    return min(xs), min(ys), max(xs), max(ys)


def skew_iou(a, b):
    """Intersection-over-union of two rotated boxes; in [0, 1], symmetric."""
    # canonical argument order makes the kernel exactly symmetric
    if b.astuple() < a.astuple():
        a, b = b, a
    ax0, ay0, ax1, ay1 = _aabb(a)
    bx0, by0, bx1, by1 = _aabb(b)
    if ax1 < bx0 or bx1 < ax0 or ay1 < by0 or by1 < ay0:
        return 0.0
    inter = polygon_area(intersection_polygon(a, b))
    union = a.w * a.h + b.w * b.h - inter
    iou = inter / union
    if iou < 0.0:
        return 0.0
    if iou > 1.0:
        return 1.0
    return iou


def skew_iou_matrix(boxes_a, boxes_b):
    """Pairwise skew IoU; element [i, j] equals skew_iou(boxes_a[i], boxes_b[j])."""
    out = np.zeros((len(boxes_a), len(boxes_b)), dtype=np.float64)
    for i, a in enumerate(boxes_a):
        for j, b in enumerate(boxes_b):
            out[i, j] = skew_iou(a, b)
    return out
