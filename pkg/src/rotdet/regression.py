"""Scale-invariant box regression codec and the multitask loss terms."""

import math
from dataclasses import dataclass

from .geometry import RotatedBox, angle_sub, canonicalize, normalize_angle

_PROB_EPS = 1e-12


@dataclass(frozen=True)
class RegressionTarget:
    """Dimensionless offsets (v_x, v_y, v_h, v_w, v_theta)."""

    v_x: float
    v_y: float
    v_h: float
    v_w: float
    v_theta: float

    def __post_init__(self):
        for name in ("v_x", "v_y", "v_h", "v_w", "v_theta"):
            if not math.isfinite(getattr(self, name)):
                raise ValueError("RegressionTarget.%s must be finite" % name)

    def astuple(self):
        return (self.v_x, self.v_y, self.v_h, self.v_w, self.v_theta)


@dataclass(frozen=True)
class ClassScore:
    p0: float
    p1: float

    def __post_init__(self):
        if not (0.0 <= self.p0 <= 1.0 and 0.0 <= self.p1 <= 1.0):
            raise ValueError("probabilities must be in [0, 1]")
        if abs(self.p0 + self.p1 - 1.0) > 1e-9:
            raise ValueError("probabilities must sum to 1")


@dataclass(frozen=True)
class LossConfig:
    lam: float = 1.0

    def __post_init__(self):
        if self.lam <= 0:
            raise ValueError("lambda must be positive")


def encode(gt, anchor):
    """Regression target carrying gt relative to anchor:

    v_x = (x* - x_a)/w_a, v_y = (y* - y_a)/h_a, v_h = log(h*/h_a),
    v_w = log(w*/w_a), v_theta = theta* (-) theta_a.
    """
    if gt.h <= 0 or gt.w <= 0:
        raise ValueError("ground-truth dims must be positive")
    return RegressionTarget(
        (gt.x - anchor.x) / anchor.w,
        (gt.y - anchor.y) / anchor.h,
        math.log(gt.h / anchor.h),
        math.log(gt.w / anchor.w),
        angle_sub(gt.theta, anchor.theta),
    )


def decode(anchor, v):
    """Invert encode(): apply a regression target to an anchor.

    The decoded box is canonicalized (w >= h).  Targets whose exponentials
    overflow signal divergent regression.
    """
    try:
        h = anchor.h * math.exp(v.v_h)
        w = anchor.w * math.exp(v.v_w)
    except OverflowError:
        raise ValueError("regression target overflows box dimensions")
    if not (math.isfinite(h) and math.isfinite(w)):
        raise ValueError("regression target overflows box dimensions")
    return canonicalize(
        RotatedBox(
            v.v_x * anchor.w + anchor.x,
            v.v_y * anchor.h + anchor.y,
            h,
            w,
            normalize_angle(v.v_theta + anchor.theta),
        )
    )


def smooth_l1(x):
    """0.5*x**2 inside |x| < 1, |x| - 0.5 outside; continuous at the joint."""
    if not math.isfinite(x):
        raise ValueError("smooth_l1 input must be finite")
    ax = abs(x)
    if ax < 1.0:
        return 0.5 * x * x
    return ax - 0.5


def reg_loss(v_star, v):
    """Sum of smooth-L1 terms over the five target components."""
    return sum(
        smooth_l1(a - b) for a, b in zip(v_star.astuple(), v.astuple())
    )


def cls_loss(p, label):
    """Negative log likelihood of the labeled class; probabilities clamped at 1e-12."""
    if label not in (0, 1):
        raise ValueError("class label must be 0 or 1")
    pl = p.p1 if label == 1 else p.p0
    return -math.log(max(pl, _PROB_EPS))


def multitask_loss(p, label, v_star, v, cfg=LossConfig()):
    """cls_loss + lambda * l * reg_loss; background (l=0) skips regression."""
    total = cls_loss(p, label)
    if label == 1:
        total += cfg.lam * reg_loss(v_star, v)
    return total
