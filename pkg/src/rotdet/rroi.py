"""Rotated RoI max pooling of oriented proposals onto a fixed grid."""

import math
from dataclasses import dataclass

import numpy as np


@dataclass(frozen=True)
class FeatureMap:
    """Dense C x H x W map plus the feature-per-image-pixel scale."""

    values: np.ndarray
    spatial_scale: float

    def __post_init__(self):
        v = np.asarray(self.values, dtype=np.float64)
        if v.ndim != 3:
            raise ValueError("feature map must be C x H x W")
        if not np.all(np.isfinite(v)):
            raise ValueError("feature map values must be finite")
        if self.spatial_scale <= 0:
            raise ValueError("spatial_scale must be positive")
        object.__setattr__(self, "values", v)

    @property
    def channels(self):
        return self.values.shape[0]

    @property
    def height(self):
        return self.values.shape[1]

    @property
    def width(self):
        return self.values.shape[2]


@dataclass(frozen=True)
class PoolConfig:
    pooled_h: int
    pooled_w: int

    def __post_init__(self):
        if self.pooled_h < 1 or self.pooled_w < 1:
            raise ValueError("pooled extent must be >= 1")


def _sample_counts(grid_h, grid_w, ss):
    nk = int(math.floor(grid_h * ss))
    nl = int(math.floor(grid_w * ss))
    # tiny subregions would sample nothing; fall back to the rotated origin
    return max(nk, 1), max(nl, 1)


def rroi_pool(fm, proposal, cfg):
    """Max-pool an oriented proposal into a pooled_h x pooled_w x C array.

    The proposal (image coordinates) is split into pooled_h x pooled_w
    subregions sharing its orientation; each subregion is sampled on a
    rotated integer lattice on the feature map (indices clamped to the
    border) and reduced with max per channel.
    """
    values = fm.values
    ss = fm.spatial_scale
    h_r, w_r = cfg.pooled_h, cfg.pooled_w
    grid_w = proposal.w / w_r
    grid_h = proposal.h / h_r
    ct = math.cos(proposal.theta)
    st = math.sin(proposal.theta)
    x, y = proposal.x, proposal.y
    nk, nl = _sample_counts(grid_h, grid_w, ss)
    ks = np.arange(nk, dtype=np.float64)[:, None]
    ls = np.arange(nl, dtype=np.float64)[None, :]

    out = np.empty((h_r, w_r, values.shape[0]), dtype=values.dtype)
    for i in range(h_r):
        for j in range(w_r):
            left = x - proposal.w / 2 + j * grid_w
            top = y - proposal.h / 2 + i * grid_h
            l_rot = (left - x) * ct + (top - y) * st + x
            t_rot = (top - y) * ct - (left - x) * st + y
            px = np.floor(l_rot * ss + ls * ct + ks * st + 0.5).astype(np.int64)
            py = np.floor(t_rot * ss - ls * st + ks * ct + 0.5).astype(np.int64)
            np.clip(px, 0, values.shape[2] - 1, out=px)
            np.clip(py, 0, values.shape[1] - 1, out=py)
            out[i, j, :] = values[:, py, px].max(axis=(1, 2))
    return out


def rroi_pool_oracle(fm, proposal, cfg):
    """Literal loop transcription of the pooling procedure; same contract as
    rroi_pool, kept unoptimized as a differential reference."""
    values = fm.values
    ss = fm.spatial_scale
    h_r, w_r = cfg.pooled_h, cfg.pooled_w
    grid_w = proposal.w / w_r
    grid_h = proposal.h / h_r
    ct = math.cos(proposal.theta)
    st = math.sin(proposal.theta)
    x, y = proposal.x, proposal.y
    nk, nl = _sample_counts(grid_h, grid_w, ss)
    c, height, width = values.shape

    out = np.empty((h_r, w_r, c), dtype=values.dtype)
    for i in range(h_r):
        for j in range(w_r):
            left = x - proposal.w / 2 + j * grid_w
            top = y - proposal.h / 2 + i * grid_h
            l_rot = (left - x) * ct + (top - y) * st + x
            t_rot = (top - y) * ct - (left - x) * st + y
            for ch in range(c):
                best = None
                for k in range(nk):
                    for l in range(nl):
                        px = math.floor(l_rot * ss + l * ct + k * st + 0.5)
                        py = math.floor(t_rot * ss - l * st + k * ct + 0.5)
                        px = min(max(px, 0), width - 1)
                        py = min(max(py, 0), height - 1)
                        v = values[ch, int(py), int(px)]
                        if best is None or v > best:
                            best = v
                out[i, j, ch] = best
    return out
