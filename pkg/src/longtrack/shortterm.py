"""Short-term tracking step: candidate sampling, selection, refinement.

One step proposes Gaussian-jittered candidate boxes around the previous
position, selects the candidate with the strongest classifier margin, and
polishes the winner with a small deterministic similarity search. The
``resolve`` routine then repairs that result according to the judgement
decision (re-sampling around the prior, flow compensation, or geometric
regression).
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .appearance import AppearanceModel, BBoxRegressor, ScorePair, regress
from .geometry import BBox, FrameDims, clip, expand_region
from .judgement import Decision
from .motion import compensate, estimate_shift


@dataclass
class ShortTermConfig:
    n_candidates: int = 256
    sigma_xy: float = 0.3
    sigma_scale: float = 0.05
    refine_step_px: float = 2.0
    refine_scales: tuple[float, ...] = (0.975, 1.0, 1.025)
    search_radius: int = 16
    motion_reliability_floor: float = 0.2
    flow_region_scale: float = 3.0


def _clip_candidate(box: BBox, dims: FrameDims) -> BBox | None:
    try:
        out = clip(box, dims)
    except ValueError:
        return None
    if out.w < 2 or out.h < 2:
        return None
    return out


def gaussian_sample(
    box: BBox,
    dims: FrameDims,
    n: int,
    rng: np.random.Generator,
    sigma_xy: float = 0.3,
    sigma_scale: float = 0.05,
) -> list[BBox]:
    """Jittered candidate boxes around ``box``, all inside the frame.

    Translation noise scales with the box size; scale noise is log-normal
    and aspect-preserving. Candidates that fall outside the frame (or
    collapse below 2 px) are replaced by the clipped prior box.
    """
    cx, cy = box.center()
    span = (box.w + box.h) / 2.0
    fallback = _clip_candidate(box, dims)
    out: list[BBox] = []
    for _ in range(n):
        dx, dy = rng.normal(0.0, sigma_xy * span, size=2)
        s = float(np.exp(rng.normal(0.0, sigma_scale)))
        cand = _clip_candidate(
            BBox.from_center(cx + dx, cy + dy, box.w * s, box.h * s), dims
        )
        if cand is None:
            cand = fallback
        if cand is not None:
            out.append(cand)
    if not out:
        raise ValueError("no valid candidates: box lies outside the frame")
    return out


def similarity_refine(
    model: AppearanceModel,
    frame: np.ndarray,
    box: BBox,
    steps: tuple[float, ...],
    scales: tuple[float, ...],
    max_hops: int = 20,
) -> tuple[BBox, float]:
    """Greedy local search maximizing similarity over a position/scale grid.

    Each pass tests a 3x3 offset grid at one step size crossed with the
    scale set, moving to the best improvement; the identity candidate is
    always included so the result never scores worse than the input.
    """
    dims = FrameDims(frame.shape[1], frame.shape[0])
    best = box
    best_score = model.similarity(frame, box)
    for step in steps:
        moved = True
        hops = 0
        while moved and hops < max_hops:
            hops += 1
            moved = False
            cands: list[BBox] = []
            for oy in (-step, 0.0, step):
                for ox in (-step, 0.0, step):
                    for s in scales:
                        cx, cy = best.center()
                        cand = _clip_candidate(
                            BBox.from_center(cx + ox, cy + oy, best.w * s, best.h * s),
                            dims,
                        )
                        if cand is not None:
                            cands.append(cand)
            sims, _ = model.score_boxes(frame, cands)
            i = int(np.argmax(sims))
            if sims[i] > best_score + 1e-12:
                best, best_score = cands[i], float(sims[i])
                moved = True
    return best, best_score


def track_frame(
    model: AppearanceModel,
    frame: np.ndarray,
    prev_box: BBox,
    cfg: ShortTermConfig,
    rng: np.random.Generator,
) -> tuple[BBox, ScorePair]:
    """One short-term step: sample, select by margin, refine by similarity.

    The returned pair carries the refined box's similarity and the selected
    candidate's classification margin.
    """
    dims = FrameDims(frame.shape[1], frame.shape[0])
    candidates = gaussian_sample(
        prev_box, dims, cfg.n_candidates, rng, cfg.sigma_xy, cfg.sigma_scale
    )
    anchor = _clip_candidate(prev_box, dims)
    if anchor is not None:
        candidates.append(anchor)
    _, cls_scores = model.score_boxes(frame, candidates)
    best = int(np.argmax(cls_scores))
    selected = candidates[best]
    refined, s_sim = similarity_refine(
        model, frame, selected, (cfg.refine_step_px,), cfg.refine_scales
    )
    return refined, ScorePair(s_sim, float(cls_scores[best]))


def resolve(
    decision: Decision,
    model: AppearanceModel,
    regressor: BBoxRegressor,
    prev_frame: np.ndarray,
    frame: np.ndarray,
    prev_box: BBox,
    tracked_box: BBox,
    cfg: ShortTermConfig,
    rng: np.random.Generator,
) -> BBox:
    """Repair the tracked box according to the judgement decision.

    SUCCESS keeps the box. DISTRACTOR_RESAMPLE re-samples tightly around
    the previous position and picks by similarity, ignoring the margin a
    nearby look-alike just corrupted. FLOW_RESAMPLE re-centers the search
    on the motion-compensated previous box before selecting by margin.
    REFINE trusts the classifier's location but repairs geometry with the
    first-frame regressor, then polishes by similarity.
    """
    dims = FrameDims(frame.shape[1], frame.shape[0])
    if decision is Decision.SUCCESS:
        return tracked_box

    if decision is Decision.DISTRACTOR_RESAMPLE:
        cands = gaussian_sample(
            prev_box, dims, cfg.n_candidates, rng, cfg.sigma_xy / 2.0, cfg.sigma_scale
        )
        anchor = _clip_candidate(prev_box, dims)
        if anchor is not None:
            cands.append(anchor)
        sims, _ = model.score_boxes(frame, cands)
        best = cands[int(np.argmax(model.calibrate(sims)))]
        refined, _ = similarity_refine(
            model, frame, best, (cfg.refine_step_px,), cfg.refine_scales
        )
        return refined

    if decision is Decision.FLOW_RESAMPLE:
        region = expand_region(prev_box, cfg.flow_region_scale, dims)
        flow = estimate_shift(prev_frame, frame, region, radius=cfg.search_radius)
        base = prev_box
        if flow.reliability >= cfg.motion_reliability_floor:
            base = compensate(prev_box, flow)
        moved = _clip_candidate(base, dims) or _clip_candidate(prev_box, dims)
        cands = gaussian_sample(
            moved, dims, cfg.n_candidates, rng, cfg.sigma_xy, cfg.sigma_scale
        )
        cands.append(moved)
        _, cls_scores = model.score_boxes(frame, cands)
        best = cands[int(np.argmax(cls_scores))]
        refined, _ = similarity_refine(
            model, frame, best, (cfg.refine_step_px,), cfg.refine_scales
        )
        return refined

    # Decision.REFINE
    regressed = regress(regressor, frame, tracked_box)
    if regressed.w < 2 or regressed.h < 2:
        regressed = tracked_box
    refined, _ = similarity_refine(
        model, frame, regressed, (cfg.refine_step_px,), cfg.refine_scales
    )
    return refined
