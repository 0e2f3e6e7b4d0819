"""Per-frame result judgement: decision table, failure check, update policy.

After the short-term tracker proposes a box, its two scores (template
similarity and target-vs-background margin) are mapped to one of four
decisions that determine how the frame result is repaired before being
accepted. A separate calibrated confidence drives the failure check that
switches the pipeline into re-detection.
"""
from __future__ import annotations

import enum
from dataclasses import dataclass

import numpy as np

from .appearance import AppearanceModel, ScorePair
from .geometry import BBox


class Decision(enum.Enum):
    SUCCESS = "success"
    DISTRACTOR_RESAMPLE = "distractor_resample"
    FLOW_RESAMPLE = "flow_resample"
    REFINE = "refine"


@dataclass
class JudgementConfig:
    th_mid: float = 0.5
    th_low: float = 0.1
    # Which scalar gates sample collection: the calibrated confidence
    # ("s_t") or the raw similarity ("s_sim").
    update_confidence: str = "s_t"


def decide(scores: ScorePair, cfg: JudgementConfig | None = None) -> Decision:
    """Map a score pair to a repair decision.

    Both tests are strict: a similarity exactly at the threshold counts as
    low, a margin exactly at zero counts as non-positive.
    """
    cfg = cfg or JudgementConfig()
    sim_high = scores.s_sim > cfg.th_mid
    cls_pos = scores.s_cls > 0.0
    if sim_high and cls_pos:
        return Decision.SUCCESS
    if sim_high:
        return Decision.DISTRACTOR_RESAMPLE
    if cls_pos:
        return Decision.REFINE
    return Decision.FLOW_RESAMPLE


def confidence(model: AppearanceModel, frame: np.ndarray, box: BBox) -> float:
    """Calibrated presence confidence in [0, 1] for a box."""
    return float(model.calibrate(model.similarity(frame, box)))


def check_failure(s_t: float, cfg: JudgementConfig | None = None) -> bool:
    """True when confidence has dropped below the failure threshold.

    Exactly at the threshold still counts as tracked.
    """
    cfg = cfg or JudgementConfig()
    return s_t < cfg.th_low


def apply_update_policy(
    model: AppearanceModel,
    frame: np.ndarray,
    box: BBox,
    conf: float,
    frame_index: int,
    rng: np.random.Generator,
    cfg: JudgementConfig | None = None,
) -> bool:
    """Collect adaptation samples only from confidently tracked frames.

    Returns True when samples were collected. In the dead zone (at or
    below th_mid) the model is left bit-identical.
    """
    cfg = cfg or JudgementConfig()
    if conf > cfg.th_mid:
        model.collect_samples(frame, box, frame_index, rng)
        return True
    return False
