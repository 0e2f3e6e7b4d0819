"""Long-term tracking loop tying search, judgement, and re-detection together.

Each frame runs in one of two modes. In short-term mode the tracker
samples around the previous box, repairs the pick according to the
judgement decision, and drops to detecting mode when the repaired box
still scores below the failure threshold. In detecting mode the cascade
scans progressively wider regions around the motion-compensated anchor
until a candidate passes both gates, which re-arms short-term tracking.
Model adaptation only ever happens on confident short-term frames.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .appearance import BBoxRegressor, init_model, train_regressor
from .config import RunConfig
from .detector import (
    STAGE_AREA5,
    STAGE_AREA18,
    STAGE_GLOBAL,
    STAGE_LOCAL,
    STAGE_NONE,
    detect,
)
from .evaluation import FramePrediction
from .geometry import BBox
from .judgement import apply_update_policy, check_failure, decide
from .shortterm import resolve, track_frame

MODE_INIT = "init"
MODE_SHORT_TERM = "shortterm"
MODE_DETECTING = "detecting"

# classifier exemplars are rebuilt after this many sample collections
REFIT_INTERVAL = 10

_STAGE_ROTATION = (STAGE_LOCAL, STAGE_AREA5, STAGE_AREA18, STAGE_GLOBAL)


@dataclass(frozen=True)
class FrameRecord:
    """One row of the per-frame run log."""

    frame: int
    mode: str
    decision: str
    stage: str
    s_sim: float
    s_cls: float
    s_t: float
    present: bool


class Tracker:
    """Stateful long-term tracker fed one frame at a time.

    Frame 0 is consumed by the constructor, which reports the given box
    back with the model's own confidence in it. Every later frame goes
    through :meth:`step`.
    """

    def __init__(
        self,
        frame: np.ndarray,
        box: BBox,
        config: RunConfig | None = None,
        rng: np.random.Generator | None = None,
    ):
        self.config = config or RunConfig()
        self.rng = rng if rng is not None else np.random.default_rng(self.config.seed)
        self.model = init_model(frame, box, self.config.appearance, self.rng)
        self.regressor: BBoxRegressor = train_regressor(
            frame, box, self.config.appearance, self.rng
        )
        self.mode = MODE_SHORT_TERM
        self.box = box
        self.prev_frame = frame
        self.frame_index = 0
        self._collects = 0
        self._stage_cursor = 0
        self._confident_size = (box.w, box.h)

        scores = self.model.score(frame, box)
        s_t = float(self.model.calibrate(scores.s_sim))
        self.predictions: list[FramePrediction] = [FramePrediction(box, s_t)]
        self.records: list[FrameRecord] = [
            FrameRecord(0, MODE_INIT, "", "", scores.s_sim, scores.s_cls, s_t, True)
        ]

    def step(self, frame: np.ndarray) -> FramePrediction:
        """Process the next frame and report a box or an absence."""
        self.frame_index += 1
        if self.mode == MODE_SHORT_TERM:
            pred, record = self._short_term_step(frame)
        else:
            pred, record = self._detect_step(frame)
        self.prev_frame = frame
        self.predictions.append(pred)
        self.records.append(record)
        return pred

    def _short_term_step(self, frame: np.ndarray) -> tuple[FramePrediction, FrameRecord]:
        cfg = self.config
        tracked, scores = track_frame(self.model, frame, self.box, cfg.shortterm, self.rng)
        decision = decide(scores, cfg.judgement)
        resolved = resolve(
            decision, self.model, self.regressor,
            self.prev_frame, frame, self.box, tracked,
            cfg.shortterm, self.rng,
        )
        final = self.model.score(frame, resolved)
        s_t = float(self.model.calibrate(final.s_sim))
        channel = s_t if cfg.judgement.update_confidence == "s_t" else final.s_sim

        # size is adapted state like the model: in the low-confidence dead
        # zone it reverts to the last confident shape, so junk frames
        # cannot compound scale drift
        if channel <= cfg.judgement.th_mid:
            cx, cy = resolved.center()
            resolved = BBox.from_center(cx, cy, *self._confident_size)
            final = self.model.score(frame, resolved)
            s_t = float(self.model.calibrate(final.s_sim))
            channel = s_t if cfg.judgement.update_confidence == "s_t" else final.s_sim
        self.box = resolved

        if check_failure(s_t, cfg.judgement):
            self.mode = MODE_DETECTING
            record = FrameRecord(
                self.frame_index, MODE_SHORT_TERM, decision.value, "",
                final.s_sim, final.s_cls, s_t, False,
            )
            return FramePrediction(None, s_t), record

        collected = apply_update_policy(
            self.model, frame, resolved, channel,
            self.frame_index, self.rng, cfg.judgement,
        )
        if collected:
            self._confident_size = (resolved.w, resolved.h)
            self._collects += 1
            if self._collects % REFIT_INTERVAL == 0:
                self.model.refit()
        record = FrameRecord(
            self.frame_index, MODE_SHORT_TERM, decision.value, "",
            final.s_sim, final.s_cls, s_t, True,
        )
        return FramePrediction(resolved, s_t), record

    def _detect_step(self, frame: np.ndarray) -> tuple[FramePrediction, FrameRecord]:
        cfg = self.config
        if not cfg.detector.cascade_enabled:
            record = FrameRecord(
                self.frame_index, MODE_DETECTING, "", STAGE_NONE, 0.0, 0.0, 0.0, False
            )
            return FramePrediction(None, 0.0), record

        only = None
        if cfg.detector.one_stage_per_frame:
            only = _STAGE_ROTATION[self._stage_cursor % len(_STAGE_ROTATION)]
            self._stage_cursor += 1
        outcome = detect(
            self.model, self.prev_frame, frame, self.box,
            cfg.detector, self.rng, only_stage=only,
        )

        if outcome.found and outcome.best_confidence >= cfg.judgement.th_low:
            self.mode = MODE_SHORT_TERM
            self.box = outcome.box
            self._stage_cursor = 0
            record = FrameRecord(
                self.frame_index, MODE_DETECTING, "", outcome.stage,
                outcome.scores.s_sim, outcome.scores.s_cls,
                outcome.best_confidence, True,
            )
            return FramePrediction(outcome.box, outcome.best_confidence), record

        # keep the anchor moving with the camera so later stages stay centered
        self.box = outcome.anchor
        record = FrameRecord(
            self.frame_index, MODE_DETECTING, "", outcome.stage,
            0.0, 0.0, outcome.best_confidence, False,
        )
        return FramePrediction(None, outcome.best_confidence), record


def validate_records(records: list[FrameRecord]):
    """Check a run log against the mode automaton; raise on any violation.

    Legal traces: frame 0 is the init record, short-term frames carry a
    decision and hand off to detecting exactly when absent, detecting
    frames carry a stage and return to short-term exactly when present.
    """
    if not records:
        raise ValueError("empty record list")
    first = records[0]
    if first.frame != 0 or first.mode != MODE_INIT or not first.present:
        raise ValueError("first record must be a present init frame")
    for i, r in enumerate(records):
        if r.frame != i:
            raise ValueError(f"record {i}: non-contiguous frame index {r.frame}")
        if not (0.0 <= r.s_sim <= 1.0 and 0.0 <= r.s_t <= 1.0):
            raise ValueError(f"record {i}: scores out of range")
        if i == 0:
            continue
        if r.mode == MODE_SHORT_TERM:
            if not r.decision or r.stage:
                raise ValueError(f"record {i}: short-term rows carry a decision, no stage")
        elif r.mode == MODE_DETECTING:
            if r.decision or not r.stage:
                raise ValueError(f"record {i}: detecting rows carry a stage, no decision")
        else:
            raise ValueError(f"record {i}: unknown mode {r.mode!r}")
    for prev, cur in zip(records, records[1:]):
        expected = MODE_SHORT_TERM if prev.present else MODE_DETECTING
        if prev.mode == MODE_DETECTING and not prev.present:
            expected = MODE_DETECTING
        if cur.mode != expected:
            raise ValueError(
                f"record {cur.frame}: mode {cur.mode!r} after "
                f"{prev.mode!r} (present={prev.present})"
            )


def track_sequence(
    frames: list[np.ndarray],
    init_box: BBox,
    config: RunConfig | None = None,
    rng: np.random.Generator | None = None,
) -> tuple[list[FramePrediction], list[FrameRecord]]:
    """Track a whole sequence from its first-frame box."""
    if not frames:
        raise ValueError("cannot track an empty sequence")
    tracker = Tracker(frames[0], init_box, config, rng)
    for frame in frames[1:]:
        tracker.step(frame)
    return tracker.predictions, tracker.records
