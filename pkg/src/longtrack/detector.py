"""Cascade re-detection: staged candidate search after tracking failure.

Search regions grow in area around a motion-compensated anchor (local
neighborhood, then 25x and 324x the box area, then the whole frame), so
cheap nearby searches run before expensive global ones. Each stage
generates candidate boxes (Gaussian samples locally, gradient-scored
sliding windows elsewhere), ranks them by a composite of calibrated
appearance, shape consistency, and proximity, refines the most promising
few, and accepts the first refined candidate that passes both the
classifier and calibrated-similarity gates.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .appearance import AppearanceModel, ScorePair
from .geometry import BBox, FrameDims, expand_region
from .motion import compensate, estimate_shift
from .shortterm import gaussian_sample, similarity_refine

PROPOSAL_SCALES = (0.5, 0.71, 1.0, 1.41, 2.0)
PROPOSAL_ASPECTS = (0.5, 1.0, 2.0)
NMS_IOU = 0.7
# Cap the pool entering non-maximum suppression; windows are already
# objectness-sorted so the tail never survives anyway.
NMS_POOL = 2000
REFINE_STEPS = (4.0, 2.0, 1.0)
# Candidates whose pre-refinement calibrated similarity clears this are
# worth the refinement cost; the top two ranked are refined regardless.
PREFILTER_CONF = 0.1
MIN_REFINED = 2

STAGE_LOCAL = "local"
STAGE_AREA5 = "area5"
STAGE_AREA18 = "area18"
STAGE_GLOBAL = "global"
STAGE_NONE = "none"


@dataclass
class DetectorConfig:
    stage_scales: tuple[float, float] = (5.0, 18.0)
    local_span_scale: float = 3.0
    local_n: int = 128
    det_sim: float = 0.5
    det_cls: float = 0.0
    budget_stage: int = 64
    budget_global: int = 256
    gate_top_k: int = 8
    one_stage_per_frame: bool = False
    ranking_mode: str = "composite"
    cascade_enabled: bool = True
    square_regions: bool = False
    search_radius: int = 16
    motion_reliability_floor: float = 0.2
    flow_region_scale: float = 3.0
    refine_scales: tuple[float, ...] = (0.975, 1.0, 1.025)


@dataclass(frozen=True)
class DetectionOutcome:
    """Result of one detection attempt.

    ``anchor`` is the motion-compensated previous box (always inside the
    frame); it becomes the next search anchor when nothing is found.
    ``best_confidence`` is the highest calibrated similarity among the
    candidates examined, reported even on failure.
    """

    found: bool
    box: BBox | None
    scores: ScorePair | None
    stage: str
    anchor: BBox
    best_confidence: float


def _force_inside(box: BBox, dims: FrameDims) -> BBox:
    w = min(box.w, dims.width)
    h = min(box.h, dims.height)
    x = min(max(box.x, 0.0), dims.width - w)
    y = min(max(box.y, 0.0), dims.height - h)
    return BBox(x, y, w, h)


def _iou_many(box: np.ndarray, others: np.ndarray) -> np.ndarray:
    x1 = np.maximum(box[0], others[:, 0])
    y1 = np.maximum(box[1], others[:, 1])
    x2 = np.minimum(box[0] + box[2], others[:, 0] + others[:, 2])
    y2 = np.minimum(box[1] + box[3], others[:, 1] + others[:, 3])
    inter = np.clip(x2 - x1, 0, None) * np.clip(y2 - y1, 0, None)
    union = box[2] * box[3] + others[:, 2] * others[:, 3] - inter
    return inter / union


def _axis_positions(start: float, stop: float, size: float, stride: float) -> np.ndarray:
    """Window origins covering [start, stop - size], last position included."""
    last = stop - size
    if last < start:
        return np.empty(0)
    pos = np.arange(start, last + 1e-9, stride)
    if pos.size == 0 or pos[-1] < last - 1e-9:
        pos = np.append(pos, last)
    return pos


def _integral(img: np.ndarray) -> np.ndarray:
    ii = np.zeros((img.shape[0] + 1, img.shape[1] + 1))
    ii[1:, 1:] = img.cumsum(0).cumsum(1)
    return ii


def _box_sums(ii: np.ndarray, boxes: np.ndarray, dims: FrameDims) -> tuple[np.ndarray, np.ndarray]:
    """Summed values and pixel areas of integer-clipped boxes."""
    x0 = np.clip(np.floor(boxes[:, 0]).astype(int), 0, dims.width)
    y0 = np.clip(np.floor(boxes[:, 1]).astype(int), 0, dims.height)
    x1 = np.clip(np.ceil(boxes[:, 0] + boxes[:, 2]).astype(int), 0, dims.width)
    y1 = np.clip(np.ceil(boxes[:, 1] + boxes[:, 3]).astype(int), 0, dims.height)
    sums = ii[y1, x1] - ii[y0, x1] - ii[y1, x0] + ii[y0, x0]
    areas = np.clip(x1 - x0, 0, None) * np.clip(y1 - y0, 0, None)
    return sums, areas


def propose(
    frame: np.ndarray,
    region: BBox,
    prior_size: tuple[float, float],
    budget: int,
    grad_integral: np.ndarray | None = None,
) -> list[BBox]:
    """Objectness-ranked sliding-window proposals inside a region.

    Windows span five scales and three area-preserving aspect variants of
    the prior size, at a 25% stride. Objectness is the mean gradient
    magnitude inside a window minus that of its surrounding ring, so
    texture standing out from its neighborhood ranks first. Overlapping
    windows are pruned by non-maximum suppression before the budget cut.
    When the region cannot fit a single window, it becomes the proposal.
    """
    dims = FrameDims(frame.shape[1], frame.shape[0])
    if grad_integral is None:
        grad_integral = gradient_integral(frame)

    all_boxes: list[np.ndarray] = []
    for s in PROPOSAL_SCALES:
        for a in PROPOSAL_ASPECTS:
            w = prior_size[0] * s * math.sqrt(a)
            h = prior_size[1] * s / math.sqrt(a)
            if w < 4 or h < 4 or w > region.w or h > region.h:
                continue
            xs = _axis_positions(region.x, region.x2, w, max(1.0, 0.25 * w))
            ys = _axis_positions(region.y, region.y2, h, max(1.0, 0.25 * h))
            if xs.size == 0 or ys.size == 0:
                continue
            gx, gy = np.meshgrid(xs, ys)
            n = gx.size
            block = np.column_stack(
                [gx.ravel(), gy.ravel(), np.full(n, w), np.full(n, h)]
            )
            all_boxes.append(block)

    if not all_boxes:
        return [region]
    boxes = np.concatenate(all_boxes)

    inner_sum, inner_area = _box_sums(grad_integral, boxes, dims)
    ring = boxes.copy()
    ring[:, 0] -= boxes[:, 2] * 0.25
    ring[:, 1] -= boxes[:, 3] * 0.25
    ring[:, 2] *= 1.5
    ring[:, 3] *= 1.5
    outer_sum, outer_area = _box_sums(grad_integral, ring, dims)
    ring_sum = outer_sum - inner_sum
    ring_area = outer_area - inner_area
    inner_mean = inner_sum / np.maximum(inner_area, 1)
    ring_mean = np.where(ring_area > 0, ring_sum / np.maximum(ring_area, 1), 0.0)
    scores = inner_mean - ring_mean

    order = np.argsort(-scores, kind="stable")[:NMS_POOL]
    kept: list[int] = []
    while order.size and len(kept) < budget:
        i = int(order[0])
        kept.append(i)
        rest = order[1:]
        if rest.size == 0:
            break
        overlap = _iou_many(boxes[i], boxes[rest])
        order = rest[overlap <= NMS_IOU]
    return [BBox(*boxes[i]) for i in kept]


def gradient_integral(frame: np.ndarray) -> np.ndarray:
    gy, gx = np.gradient(frame.astype(np.float64))
    return _integral(np.hypot(gx, gy))


def rank_proposals(
    model: AppearanceModel,
    frame: np.ndarray,
    proposals: list[BBox],
    prev_box: BBox,
    mode: str = "composite",
) -> list[BBox]:
    """Order proposals by likelihood of being the lost target.

    Composite mode multiplies calibrated similarity by shape- and
    distance-consistency penalties relative to the last known box; ties
    break on classifier margin, then input order. Sequential mode filters
    by distance, then shape, then appearance, mirroring a staged pipeline.
    Both return a permutation of the input.
    """
    if not proposals:
        return []
    dims = FrameDims(frame.shape[1], frame.shape[0])
    sims, cls = model.score_boxes(frame, proposals)
    conf = np.asarray(model.calibrate(sims), dtype=np.float64)
    pcx, pcy = prev_box.center()
    centers = np.array([p.center() for p in proposals])
    dist = np.hypot(centers[:, 0] - pcx, centers[:, 1] - pcy)
    shape_pen = np.array(
        [
            math.exp(-abs(math.log(p.w / prev_box.w)) - abs(math.log(p.h / prev_box.h)))
            for p in proposals
        ]
    )
    dist_pen = np.exp(-dist / dims.diagonal())
    n = len(proposals)

    if mode == "composite":
        composite = conf * shape_pen * dist_pen
        order = np.lexsort((np.arange(n), -cls, -composite))
        return [proposals[i] for i in order]
    if mode == "sequential":
        n1 = min(16, n)
        stage1 = np.lexsort((np.arange(n), dist))[:n1]
        n2 = min(8, n1)
        stage2 = stage1[np.lexsort((np.arange(n1), -shape_pen[stage1]))[:n2]]
        winners = stage2[np.lexsort((np.arange(n2), -conf[stage2]))]
        rest = [i for i in range(n) if i not in set(winners.tolist())]
        return [proposals[i] for i in list(winners) + rest]
    raise ValueError(f"unknown ranking mode: {mode}")


def stage_regions(anchor: BBox, dims: FrameDims, cfg: DetectorConfig) -> list[tuple[str, BBox]]:
    """Nested search regions for each cascade stage, clipped to the frame."""
    sq = cfg.square_regions
    return [
        (STAGE_LOCAL, expand_region(anchor, cfg.local_span_scale, dims, square=sq)),
        (STAGE_AREA5, expand_region(anchor, cfg.stage_scales[0], dims, square=sq)),
        (STAGE_AREA18, expand_region(anchor, cfg.stage_scales[1], dims, square=sq)),
        (STAGE_GLOBAL, dims.as_box()),
    ]


def _intersect(box: BBox, region: BBox) -> BBox | None:
    x1 = max(box.x, region.x)
    y1 = max(box.y, region.y)
    x2 = min(box.x2, region.x2)
    y2 = min(box.y2, region.y2)
    if x2 - x1 < 2 or y2 - y1 < 2:
        return None
    return BBox(x1, y1, x2 - x1, y2 - y1)


def detect(
    model: AppearanceModel,
    prev_frame: np.ndarray,
    frame: np.ndarray,
    prev_box: BBox,
    cfg: DetectorConfig,
    rng: np.random.Generator,
    only_stage: str | None = None,
) -> DetectionOutcome:
    """Run the cascade (or one named stage) and gate the best candidates.

    Stages run in area order; within a stage the top-ranked candidates are
    refined by a similarity search and the first one passing both gates is
    accepted, so earlier stages and higher ranks win outright.
    """
    dims = FrameDims(frame.shape[1], frame.shape[0])
    region = expand_region(_force_inside(prev_box, dims), cfg.flow_region_scale, dims)
    flow = estimate_shift(prev_frame, frame, region, radius=cfg.search_radius)
    moved = prev_box
    if flow.reliability >= cfg.motion_reliability_floor:
        moved = compensate(prev_box, flow)
    anchor = _force_inside(moved, dims)

    grad_ii = gradient_integral(frame)
    best_conf = 0.0
    for stage, stage_region in stage_regions(anchor, dims, cfg):
        if only_stage is not None and stage != only_stage:
            continue
        if stage == STAGE_LOCAL:
            raw = gaussian_sample(anchor, dims, cfg.local_n, rng, sigma_xy=0.5, sigma_scale=0.1)
            cands = [c for c in (_intersect(b, stage_region) for b in raw) if c is not None]
            if not cands:
                cands = [stage_region]
        else:
            budget = cfg.budget_global if stage == STAGE_GLOBAL else cfg.budget_stage
            cands = propose(
                frame, stage_region, (prev_box.w, prev_box.h), budget, grad_ii
            )
        ranked = rank_proposals(model, frame, cands, anchor, cfg.ranking_mode)

        pre_sims, _ = model.score_boxes(frame, ranked)
        pre_conf = np.asarray(model.calibrate(pre_sims))
        best_conf = max(best_conf, float(pre_conf.max()))
        to_refine = [
            i for i in range(len(ranked))
            if i < MIN_REFINED or pre_conf[i] > PREFILTER_CONF
        ][: cfg.gate_top_k]

        for i in to_refine:
            refined, s_sim = similarity_refine(
                model, frame, ranked[i], REFINE_STEPS, cfg.refine_scales, max_hops=4
            )
            conf = float(model.calibrate(s_sim))
            s_cls = model.classify(frame, refined)
            best_conf = max(best_conf, conf)
            if s_cls > cfg.det_cls and conf > cfg.det_sim:
                return DetectionOutcome(
                    found=True,
                    box=refined,
                    scores=ScorePair(s_sim, s_cls),
                    stage=stage,
                    anchor=anchor,
                    best_confidence=best_conf,
                )

    return DetectionOutcome(
        found=False, box=None, scores=None, stage=STAGE_NONE,
        anchor=anchor, best_confidence=best_conf,
    )
