"""Inter-frame translation estimation by exhaustive block matching.

A coarse integer-pixel shift between consecutive frames, measured over a
region of interest, is enough to steer re-detection and to compensate the
search window for camera motion. Costs use mean absolute difference over an
integer-snapped sample grid, so a pure integer translation of a textured
region is recovered exactly.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .geometry import BBox, FrameDims, clip

# A region whose samples deviate less than this from their mean carries no
# texture to match against.
FLAT_MAD = 1e-9


@dataclass(frozen=True)
class FlowResult:
    """Estimated integer shift (prev -> current) and its trust in [0, 1]."""

    dx: int
    dy: int
    reliability: float


def _sample_axis(start: float, stop: float, limit: int, max_points: int) -> np.ndarray:
    """Integer sample coordinates covering [start, stop), subsampled to at
    most ``max_points`` by a uniform stride."""
    lo = int(math.ceil(start))
    hi = min(int(math.ceil(stop)) - 1, limit - 1)
    if hi < lo:
        mid = min(max(int((start + stop) / 2), 0), limit - 1)
        return np.array([mid], dtype=np.intp)
    stride = max(1, math.ceil((hi - lo + 1) / max_points))
    return np.arange(lo, hi + 1, stride, dtype=np.intp)


def estimate_shift(
    prev_frame: np.ndarray,
    frame: np.ndarray,
    region: BBox,
    radius: int = 16,
    max_points: int = 64,
) -> FlowResult:
    """Estimate the translation of ``region`` content between two frames.

    Every integer displacement within ``radius`` is scored by the mean
    absolute intensity difference over the sample grid (displaced samples
    falling off the frame are excluded). Ties prefer the smallest
    displacement magnitude, then scan order. Reliability compares the best
    cost against the region's own intensity spread: 1 for a perfect match
    of a textured region, 0 when the match is no better than the region's
    mean absolute deviation or the region is flat.
    """
    if prev_frame.shape != frame.shape:
        raise ValueError("frames differ in shape")
    h, w = frame.shape
    r = clip(region, FrameDims(w, h))
    ys = _sample_axis(r.y, r.y2, h, max_points)
    xs = _sample_axis(r.x, r.x2, w, max_points)
    prev = np.ascontiguousarray(prev_frame, dtype=np.float64)
    cur = np.ascontiguousarray(frame, dtype=np.float64)
    block = prev[np.ix_(ys, xs)]

    best = (math.inf, math.inf)  # (cost, squared displacement)
    best_d = (0, 0)
    for dy in range(-radius, radius + 1):
        vy = (ys + dy >= 0) & (ys + dy < h)
        if not vy.any():
            continue
        for dx in range(-radius, radius + 1):
            vx = (xs + dx >= 0) & (xs + dx < w)
            if not vx.any():
                continue
            moved = cur[np.ix_(ys[vy] + dy, xs[vx] + dx)]
            cost = float(np.abs(block[np.ix_(vy, vx)] - moved).mean())
            key = (cost, dx * dx + dy * dy)
            if key < best:
                best = key
                best_d = (dx, dy)

    mad = float(np.abs(block - block.mean()).mean())
    if mad < FLAT_MAD:
        reliability = 0.0
    else:
        reliability = float(np.clip(1.0 - best[0] / mad, 0.0, 1.0))
    return FlowResult(dx=best_d[0], dy=best_d[1], reliability=reliability)


def compensate(box: BBox, flow: FlowResult) -> BBox:
    """Translate a box by an estimated shift; no clipping is applied."""
    return BBox(box.x + flow.dx, box.y + flow.dy, box.w, box.h)
