"""Shared test oracles: rasterized IoU reference and random box generation."""

import math
import random

import numpy as np

from rotdet import RotatedBox, box_vertices


def aabb(box):
    verts = box_vertices(box).vertices
    xs = [p[0] for p in verts]
    ys = [p[1] for p in verts]
    return min(xs), min(ys), max(xs), max(ys)


def points_in_box(box, xs, ys):
    dx = xs - box.x
    dy = ys - box.y
    c = math.cos(box.theta)
    s = math.sin(box.theta)
    u = dx * c + dy * s
    v = -dx * s + dy * c
    return (np.abs(u) <= box.w / 2) & (np.abs(v) <= box.h / 2)


def raster_iou(a, b, n=1000):
    """IoU estimate from an n x n point grid over the overlap of the two
    axis-aligned bounding boxes; union from the exact rectangle areas."""
    ax0, ay0, ax1, ay1 = aabb(a)
    bx0, by0, bx1, by1 = aabb(b)
    x0, x1 = max(ax0, bx0), min(ax1, bx1)
    y0, y1 = max(ay0, by0), min(ay1, by1)
    if x0 >= x1 or y0 >= y1:
        inter = 0.0
    else:
        xs = x0 + (np.arange(n) + 0.5) * (x1 - x0) / n
        ys = y0 + (np.arange(n) + 0.5) * (y1 - y0) / n
        gx, gy = np.meshgrid(xs, ys)
        inside = points_in_box(a, gx, gy) & points_in_box(b, gx, gy)
        inter = inside.mean() * (x1 - x0) * (y1 - y0)
    union = a.w * a.h + b.w * b.h - inter
    return inter / union


def random_box(rng, center_span=300.0, dim_lo=1.0, dim_hi=200.0):
    return RotatedBox(
        rng.uniform(0.0, center_span),
        rng.uniform(0.0, center_span),
        rng.uniform(dim_lo, dim_hi),
        rng.uniform(dim_lo, dim_hi),
        rng.uniform(-math.pi / 4, 3 * math.pi / 4),
    )


def make_rng(seed):
    return random.Random(seed)
