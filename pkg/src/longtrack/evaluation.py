"""Metrics for long-term tracking with explicit absence.

A prediction is a box plus a confidence, or a declared absence. Precision
and recall are confidence-thresholded overlap averages, combined into a
threshold-swept F-score. Overlap quality on visible frames is summarized
by the success curve and its area; center accuracy by the fraction of
frames within a pixel radius. Reappearance handling gets its own event
metric, since averages hide exactly the frames long-term tracking is
about.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .geometry import BBox, center_distance, iou

# Success-rate thresholds: 101 points, endpoint-exclusive so a perfect
# overlap of 1.0 yields an area of exactly 1.0 and the area matches the
# mean overlap to within one grid cell.
SUCCESS_THRESHOLDS = np.arange(101) / 101.0
PRECISION_RADIUS_PX = 20.0


@dataclass(frozen=True)
class FramePrediction:
    """Tracker output for one frame: a box (or None for absent) and a
    presence confidence in [0, 1]."""

    box: BBox | None
    confidence: float

    def __post_init__(self):
        if not (0.0 <= self.confidence <= 1.0):
            raise ValueError(f"confidence out of range: {self.confidence}")


def _check_lengths(predictions, groundtruth):
    if len(predictions) != len(groundtruth):
        raise ValueError(
            f"length mismatch: {len(predictions)} predictions, "
            f"{len(groundtruth)} groundtruth frames"
        )


def pr_re(
    predictions: list[FramePrediction],
    groundtruth: list[BBox | None],
    tau: float,
) -> tuple[float, float]:
    """Precision and recall at one confidence threshold.

    A prediction counts when its box is present and its confidence is at
    least tau. Precision averages overlap over counted predictions (zero
    overlap when the target is actually absent); recall sums overlap on
    visible frames and divides by the number of visible frames. Empty
    denominators yield zero.
    """
    _check_lengths(predictions, groundtruth)
    overlaps = []
    visible_overlap = 0.0
    n_visible = 0
    for pred, gt in zip(predictions, groundtruth):
        if gt is not None:
            n_visible += 1
        if pred.box is None or pred.confidence < tau:
            continue
        o = iou(pred.box, gt) if gt is not None else 0.0
        overlaps.append(o)
        if gt is not None:
            visible_overlap += o
    pr = float(np.mean(overlaps)) if overlaps else 0.0
    re = visible_overlap / n_visible if n_visible else 0.0
    return pr, re


def f_measure(pr: float, re: float) -> float:
    if pr + re == 0.0:
        return 0.0
    return 2.0 * pr * re / (pr + re)


def f_score(
    predictions: list[FramePrediction],
    groundtruth: list[BBox | None],
) -> tuple[float, float]:
    """Best F-measure over all meaningful thresholds and the threshold
    achieving it (the smallest one on ties)."""
    _check_lengths(predictions, groundtruth)
    taus = sorted({p.confidence for p in predictions} | {0.0, 1.0})
    best_f, best_tau = -1.0, 0.0
    for tau in taus:
        f = f_measure(*pr_re(predictions, groundtruth, tau))
        if f > best_f:
            best_f, best_tau = f, tau
    return best_f, best_tau


def overlap_series(
    predictions: list[FramePrediction],
    groundtruth: list[BBox | None],
) -> np.ndarray:
    """Per-visible-frame overlap; a missing prediction scores zero."""
    _check_lengths(predictions, groundtruth)
    out = []
    for pred, gt in zip(predictions, groundtruth):
        if gt is None:
            continue
        out.append(iou(pred.box, gt) if pred.box is not None else 0.0)
    return np.asarray(out, dtype=np.float64)


def distance_series(
    predictions: list[FramePrediction],
    groundtruth: list[BBox | None],
) -> np.ndarray:
    """Per-visible-frame center distance; infinite when prediction absent."""
    _check_lengths(predictions, groundtruth)
    out = []
    for pred, gt in zip(predictions, groundtruth):
        if gt is None:
            continue
        out.append(
            center_distance(pred.box, gt) if pred.box is not None else np.inf
        )
    return np.asarray(out, dtype=np.float64)


def success_curve(overlaps: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Fraction of frames whose overlap strictly exceeds each threshold."""
    overlaps = np.asarray(overlaps, dtype=np.float64)
    if overlaps.size == 0:
        return SUCCESS_THRESHOLDS, np.zeros_like(SUCCESS_THRESHOLDS)
    rates = (overlaps[None, :] > SUCCESS_THRESHOLDS[:, None]).mean(axis=1)
    return SUCCESS_THRESHOLDS, rates


def success_auc(overlaps: np.ndarray) -> float:
    """Area under the success curve (mean success rate over the grid)."""
    _, rates = success_curve(overlaps)
    return float(rates.mean())


def precision_at(distances: np.ndarray, radius: float = PRECISION_RADIUS_PX) -> float:
    """Fraction of frames with center error within the radius (inclusive)."""
    distances = np.asarray(distances, dtype=np.float64)
    if distances.size == 0:
        return 0.0
    return float((distances <= radius).mean())


def false_presence_rate(
    predictions: list[FramePrediction],
    groundtruth: list[BBox | None],
) -> float:
    """Fraction of target-absent frames where a box was still reported."""
    _check_lengths(predictions, groundtruth)
    absent = [p for p, g in zip(predictions, groundtruth) if g is None]
    if not absent:
        return 0.0
    return float(np.mean([p.box is not None for p in absent]))


def recapture_events(
    predictions: list[FramePrediction],
    groundtruth: list[BBox | None],
    window: int = 10,
    min_overlap: float = 0.5,
) -> list[bool]:
    """One outcome per reappearance: was the target re-localized (overlap
    at least ``min_overlap``) within ``window`` frames of becoming visible
    again? Frames where it is absent again do not extend the window."""
    _check_lengths(predictions, groundtruth)
    out = []
    for t in range(1, len(groundtruth)):
        if groundtruth[t] is None or groundtruth[t - 1] is not None:
            continue
        ok = False
        for s in range(t, min(t + window, len(groundtruth))):
            gt = groundtruth[s]
            if gt is None:
                continue
            pred = predictions[s]
            if pred.box is not None and iou(pred.box, gt) >= min_overlap:
                ok = True
                break
        out.append(ok)
    return out


@dataclass(frozen=True)
class SequenceMetrics:
    frames: int
    visible_frames: int
    best_f: float
    best_tau: float
    pr: float
    re: float
    auc: float
    precision: float
    false_presence: float
    recaptured: int
    reappearances: int


def evaluate_sequence(
    predictions: list[FramePrediction],
    groundtruth: list[BBox | None],
) -> SequenceMetrics:
    """All headline metrics for one sequence."""
    best_f, best_tau = f_score(predictions, groundtruth)
    pr, re = pr_re(predictions, groundtruth, best_tau)
    overlaps = overlap_series(predictions, groundtruth)
    events = recapture_events(predictions, groundtruth)
    return SequenceMetrics(
        frames=len(predictions),
        visible_frames=int(sum(g is not None for g in groundtruth)),
        best_f=float(best_f),
        best_tau=float(best_tau),
        pr=float(pr),
        re=float(re),
        auc=success_auc(overlaps),
        precision=precision_at(distance_series(predictions, groundtruth)),
        false_presence=false_presence_rate(predictions, groundtruth),
        recaptured=int(sum(events)),
        reappearances=len(events),
    )


def attribute_report(
    entries: list[tuple[str, tuple[str, ...], SequenceMetrics]],
) -> list[dict]:
    """Unweighted per-attribute means plus an "all" row.

    Each entry is (sequence name, attribute tags, metrics). A sequence
    contributes once to each of its tags and once to "all".
    """
    tags = sorted({tag for _, attrs, _ in entries for tag in attrs})
    rows = []
    for tag in tags + ["all"]:
        group = [
            m for _, attrs, m in entries if tag == "all" or tag in attrs
        ]
        if not group:
            continue
        rows.append(
            {
                "attribute": tag,
                "sequences": len(group),
                "mean_f": float(np.mean([m.best_f for m in group])),
                "mean_auc": float(np.mean([m.auc for m in group])),
                "mean_precision": float(np.mean([m.precision for m in group])),
                "mean_false_presence": float(
                    np.mean([m.false_presence for m in group])
                ),
            }
        )
    return rows
