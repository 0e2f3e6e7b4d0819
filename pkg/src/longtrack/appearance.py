"""Appearance scoring: template similarity, target/background classification,
and first-frame bounding-box regression.

The reference backend is classical: fixed-resolution grayscale patches
compared by normalized cross-correlation (NCC). Similarity is measured
against the immutable first-frame template; classification is a margin
between the best match in an adaptive template bank and the best match in
a background exemplar set. Both scores sit behind one model interface so a
learned scorer can replace them without touching the pipeline.
"""
from __future__ import annotations

import logging
from collections import deque
from dataclasses import dataclass, field

import numpy as np

from .geometry import BBox, FrameDims, clip, iou

log = logging.getLogger(__name__)

# Patches with intensity std below this are treated as flat (textureless).
FLAT_STD = 1e-3
# Negatives this correlated with the initial template cannot serve as
# background exemplars (they would cancel the target's own appearance).
BG_DEDUP_NCC = 0.8
# A tracked patch joins the template bank only while it still resembles the
# verified first-frame appearance; drifted appearance goes through the
# sample buffer and refit instead.
BANK_GATE_NCC = 0.5
# Initialization samples this many times the per-frame sample counts.
INIT_SAMPLE_FACTOR = 10


@dataclass(frozen=True)
class ScorePair:
    """Similarity in [0,1] plus a signed classification margin."""

    s_sim: float
    s_cls: float

    def __post_init__(self):
        if not (0.0 <= self.s_sim <= 1.0):
            raise ValueError(f"s_sim out of range: {self.s_sim}")
        if not np.isfinite(self.s_cls):
            raise ValueError(f"s_cls not finite: {self.s_cls}")


@dataclass
class AppearanceConfig:
    patch_resolution: int = 32
    bank_capacity: int = 50
    pos_iou: float = 0.7
    neg_iou: float = 0.3
    pos_per_frame: int = 5
    neg_per_frame: int = 20
    ridge_lambda: float = 1.0
    buffer_frames: int = 50
    # Confidence calibration exponent: the presence confidence consumed by
    # the failure check and detection gates is similarity ** conf_gamma,
    # so "uncorrelated" NCC lands well below the fixed failure threshold.
    conf_gamma: float = 6.0
    # Measure similarity against the adaptive bank instead of the initial
    # template (off by default: confidence is anchored to frame 0).
    similarity_bank: bool = False


def extract_patches(frame: np.ndarray, boxes: np.ndarray, res: int) -> np.ndarray:
    """Bilinearly sample an (N, res, res) stack of grayscale patches.

    ``boxes`` is (N, 4) as x,y,w,h in continuous pixel coordinates; sample
    points outside the frame are clamped to the border.
    """
    h, w = frame.shape
    boxes = np.atleast_2d(np.asarray(boxes, dtype=np.float64))
    if np.any(boxes[:, 2] <= 0) or np.any(boxes[:, 3] <= 0):
        raise ValueError("degenerate box passed to extract_patches")
    ks = (np.arange(res) + 0.5) / res
    us = boxes[:, 0, None] + ks[None, :] * boxes[:, 2, None]
    vs = boxes[:, 1, None] + ks[None, :] * boxes[:, 3, None]
    fx = np.clip(us - 0.5, 0.0, w - 1.0)
    fy = np.clip(vs - 0.5, 0.0, h - 1.0)
    x0 = fx.astype(np.intp)
    y0 = fy.astype(np.intp)
    x1 = np.minimum(x0 + 1, w - 1)
    y1 = np.minimum(y0 + 1, h - 1)
    wx = (fx - x0)[:, None, :]
    wy = (fy - y0)[:, :, None]
    f = np.ascontiguousarray(frame, dtype=np.float64)
    i00 = f[y0[:, :, None], x0[:, None, :]]
    i01 = f[y0[:, :, None], x1[:, None, :]]
    i10 = f[y1[:, :, None], x0[:, None, :]]
    i11 = f[y1[:, :, None], x1[:, None, :]]
    top = i00 * (1.0 - wx) + i01 * wx
    bot = i10 * (1.0 - wx) + i11 * wx
    return top * (1.0 - wy) + bot * wy


def ncc_matrix(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    """Pairwise NCC between two patch stacks, shape (len(a), len(b)).

    Textured pairs use zero-mean normalized correlation in [-1, 1]. When
    exactly one patch is flat the pair is uncorrelated (0); when both are
    flat, correlation degrades to a mean-intensity comparison so identical
    flat patches still match perfectly.
    """
    af = a.reshape(len(a), -1).astype(np.float64)
    bf = b.reshape(len(b), -1).astype(np.float64)
    ma = af.mean(axis=1)
    mb = bf.mean(axis=1)
    ac = af - ma[:, None]
    bc = bf - mb[:, None]
    na = np.linalg.norm(ac, axis=1)
    nb = np.linalg.norm(bc, axis=1)
    floor = FLAT_STD * np.sqrt(af.shape[1])
    flat_a = na < floor
    flat_b = nb < floor
    denom = np.outer(np.maximum(na, floor), np.maximum(nb, floor))
    out = np.clip((ac @ bc.T) / denom, -1.0, 1.0)
    one_flat = flat_a[:, None] ^ flat_b[None, :]
    both_flat = flat_a[:, None] & flat_b[None, :]
    if one_flat.any():
        out[one_flat] = 0.0
    if both_flat.any():
        mean_match = np.clip(1.0 - np.abs(ma[:, None] - mb[None, :]) / 127.5, -1.0, 1.0)
        out[both_flat] = mean_match[both_flat]
    return out


def ncc_pair(a: np.ndarray, b: np.ndarray) -> float:
    return float(ncc_matrix(a[None], b[None])[0, 0])


def _frame_dims(frame: np.ndarray) -> FrameDims:
    return FrameDims(frame.shape[1], frame.shape[0])


def _check_scorable(frame: np.ndarray, box: BBox):
    if box.w < 2 or box.h < 2:
        raise ValueError(f"box too small to score: {box.as_tuple()}")
    clip(box, _frame_dims(frame))  # raises when fully outside


def _jitter_boxes(
    box: BBox,
    dims: FrameDims,
    n: int,
    rng: np.random.Generator,
    sigma_xy: float,
    sigma_scale: float,
    iou_min: float,
    iou_max: float,
    max_tries: int = 50,
) -> list[BBox]:
    """Rejection-sample up to ``n`` jittered boxes whose IoU with ``box``
    falls in [iou_min, iou_max]; boxes fully outside the frame are skipped."""
    cx, cy = box.center()
    span = (box.w + box.h) / 2.0
    out: list[BBox] = []
    tries = 0
    budget = max_tries * n
    while len(out) < n and tries < budget:
        tries += 1
        dx, dy = rng.normal(0.0, sigma_xy * span, size=2)
        s = float(np.exp(rng.normal(0.0, sigma_scale)))
        cand = BBox.from_center(cx + dx, cy + dy, box.w * s, box.h * s)
        try:
            cand = clip(cand, dims)
        except ValueError:
            continue
        if cand.w < 2 or cand.h < 2:
            continue
        v = iou(cand, box)
        if iou_min <= v <= iou_max:
            out.append(cand)
    return out


class SampleBuffer:
    """Bounded FIFO of training patches, evicted a whole frame at a time."""

    def __init__(self, max_frames: int):
        self.max_frames = max_frames
        self.positives: deque[tuple[int, np.ndarray]] = deque()
        self.negatives: deque[tuple[int, np.ndarray]] = deque()

    def add(self, frame_index: int, positives: np.ndarray, negatives: np.ndarray):
        self.positives.append((frame_index, positives))
        self.negatives.append((frame_index, negatives))
        while len(self.positives) > self.max_frames:
            self.positives.popleft()
        while len(self.negatives) > self.max_frames:
            self.negatives.popleft()

    def pos_count(self) -> int:
        return sum(len(p) for _, p in self.positives)

    def neg_count(self) -> int:
        return sum(len(p) for _, p in self.negatives)

    def is_empty(self) -> bool:
        return not self.positives and not self.negatives


class AppearanceModel:
    """Template bank plus background exemplars behind one scoring surface.

    The first-frame template is frozen at initialization and anchors both
    the similarity score and the calibrated presence confidence. The bank
    and the classifier exemplars adapt online through ``collect_samples``
    and ``refit``.
    """

    def __init__(self, initial_template: np.ndarray, cfg: AppearanceConfig):
        tpl = np.array(initial_template, dtype=np.float64)
        tpl.setflags(write=False)
        self.initial_template = tpl
        self.cfg = cfg
        self.templates: list[np.ndarray] = [tpl]
        self.weights: list[float] = [1.0]
        self.pos_exemplars = tpl[None].copy()
        self.neg_exemplars = np.empty((0, tpl.shape[0], tpl.shape[1]))
        self.buffer = SampleBuffer(cfg.buffer_frames)

    # -- scoring ---------------------------------------------------------

    def score_boxes(self, frame: np.ndarray, boxes) -> tuple[np.ndarray, np.ndarray]:
        """Similarity and classification scores for a batch of boxes."""
        arr = np.array([b.as_tuple() for b in boxes], dtype=np.float64)
        patches = extract_patches(frame, arr, self.cfg.patch_resolution)
        return self._score_patches(patches)

    def _score_patches(self, patches: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
        bank = np.stack(self.templates)
        bank_ncc = ncc_matrix(patches, bank)
        if self.cfg.similarity_bank:
            sim_ncc = (bank_ncc * np.asarray(self.weights)[None, :]).max(axis=1)
        else:
            sim_ncc = bank_ncc[:, 0]
        s_sim = (sim_ncc + 1.0) / 2.0

        target = (bank_ncc * np.asarray(self.weights)[None, :]).max(axis=1)
        if len(self.pos_exemplars):
            target = np.maximum(target, ncc_matrix(patches, self.pos_exemplars).max(axis=1))
        if len(self.neg_exemplars):
            background = ncc_matrix(patches, self.neg_exemplars).max(axis=1)
        else:
            background = np.zeros(len(patches))
        return s_sim, target - background

    def similarity(self, frame: np.ndarray, box: BBox) -> float:
        _check_scorable(frame, box)
        s_sim, _ = self.score_boxes(frame, [box])
        return float(s_sim[0])

    def classify(self, frame: np.ndarray, box: BBox) -> float:
        _check_scorable(frame, box)
        _, s_cls = self.score_boxes(frame, [box])
        return float(s_cls[0])

    def score(self, frame: np.ndarray, box: BBox) -> ScorePair:
        _check_scorable(frame, box)
        s_sim, s_cls = self.score_boxes(frame, [box])
        return ScorePair(float(s_sim[0]), float(s_cls[0]))

    def calibrate(self, s_sim) -> float | np.ndarray:
        """Map raw similarity to presence confidence (monotone on [0,1])."""
        return np.clip(s_sim, 0.0, 1.0) ** self.cfg.conf_gamma

    # -- online adaptation -------------------------------------------------

    def collect_samples(
        self,
        frame: np.ndarray,
        tracked_box: BBox,
        frame_index: int,
        rng: np.random.Generator,
    ):
        """Harvest positive/negative patches around a confidently tracked box.

        Samples falling outside the frame are silently skipped, so a box
        hugging the border yields fewer samples instead of an error.
        """
        dims = _frame_dims(frame)
        res = self.cfg.patch_resolution
        pos = _jitter_boxes(
            tracked_box, dims, self.cfg.pos_per_frame, rng,
            sigma_xy=0.05, sigma_scale=0.03,
            iou_min=self.cfg.pos_iou, iou_max=1.0,
        )
        neg = _jitter_boxes(
            tracked_box, dims, self.cfg.neg_per_frame, rng,
            sigma_xy=0.7, sigma_scale=0.3,
            iou_min=0.0, iou_max=self.cfg.neg_iou,
        )
        pos_patches = (
            extract_patches(frame, np.array([b.as_tuple() for b in pos]), res)
            if pos else np.empty((0, res, res))
        )
        neg_patches = (
            extract_patches(frame, np.array([b.as_tuple() for b in neg]), res)
            if neg else np.empty((0, res, res))
        )
        self.buffer.add(frame_index, pos_patches, neg_patches)

        tracked = extract_patches(frame, np.array([tracked_box.as_tuple()]), res)[0]
        match = ncc_pair(tracked, self.initial_template)
        if match >= BANK_GATE_NCC:
            self.templates.append(tracked)
            self.weights.append(match)
            while len(self.templates) > self.cfg.bank_capacity:
                # never evict the frame-0 template at index 0
                self.templates.pop(1)
                self.weights.pop(1)

    def refit(self, max_pos: int = 32, max_neg: int = 64) -> bool:
        """Rebuild the classifier exemplars from the buffered samples.

        Returns False (after a warning) when the buffer is empty; the
        model is left untouched in that case.
        """
        if self.buffer.is_empty():
            log.warning("refit requested with an empty sample buffer; model unchanged")
            return False
        pos = [p for _, group in self.buffer.positives for p in group]
        neg = [p for _, group in self.buffer.negatives for p in group]
        res = self.cfg.patch_resolution
        if pos:
            self.pos_exemplars = np.stack(pos[-max_pos:])
        if neg:
            stack = np.stack(neg[-max_neg:])
            keep = ncc_matrix(stack, self.initial_template[None])[:, 0] < BG_DEDUP_NCC
            self.neg_exemplars = stack[keep]
        else:
            self.neg_exemplars = np.empty((0, res, res))
        return True


def init_model(
    frame: np.ndarray,
    box: BBox,
    cfg: AppearanceConfig | None = None,
    rng: np.random.Generator | None = None,
) -> AppearanceModel:
    """Build an appearance model from the first frame and its target box.

    Captures the immutable template, then trains the classifier from
    Gaussian-sampled positives and negatives around the box.
    """
    cfg = cfg or AppearanceConfig()
    rng = rng if rng is not None else np.random.default_rng(0)
    _check_scorable(frame, box)
    dims = _frame_dims(frame)
    res = cfg.patch_resolution
    template = extract_patches(frame, np.array([box.as_tuple()]), res)[0]
    model = AppearanceModel(template, cfg)

    pos = _jitter_boxes(
        box, dims, INIT_SAMPLE_FACTOR * cfg.pos_per_frame, rng,
        sigma_xy=0.05, sigma_scale=0.03, iou_min=cfg.pos_iou, iou_max=1.0,
    )
    neg = _jitter_boxes(
        box, dims, INIT_SAMPLE_FACTOR * cfg.neg_per_frame, rng,
        sigma_xy=0.7, sigma_scale=0.3, iou_min=0.0, iou_max=cfg.neg_iou,
    )
    if pos:
        stack = extract_patches(frame, np.array([b.as_tuple() for b in pos]), res)
        model.pos_exemplars = np.concatenate([model.pos_exemplars, stack])[:64]
    if neg:
        stack = extract_patches(frame, np.array([b.as_tuple() for b in neg]), res)
        keep = ncc_matrix(stack, template[None])[:, 0] < BG_DEDUP_NCC
        model.neg_exemplars = stack[keep][:128]
    return model


# -- bounding-box regression -------------------------------------------------


@dataclass(frozen=True)
class BBoxRegressor:
    """Frozen linear map from patch features to box offsets (dx, dy, dlogw, dlogh)."""

    coefficients: np.ndarray = field(repr=False)  # (n_features + 1, 4), last row is bias
    trained: bool = False


def _box_features(frame: np.ndarray, boxes: np.ndarray, res: int = 32, pool: int = 8) -> np.ndarray:
    """Coarse appearance features: pooled intensity plus pooled gradient magnitude."""
    patches = extract_patches(frame, boxes, res)
    gy, gx = np.gradient(patches, axis=(1, 2))
    grad = np.hypot(gx, gy)
    cell = res // pool
    n = len(patches)
    pooled_i = patches.reshape(n, pool, cell, pool, cell).mean(axis=(2, 4))
    pooled_g = grad.reshape(n, pool, cell, pool, cell).mean(axis=(2, 4))
    return np.concatenate(
        [pooled_i.reshape(n, -1) / 255.0, pooled_g.reshape(n, -1) / 255.0], axis=1
    )


def _offsets_to(target: BBox, boxes: list[BBox]) -> np.ndarray:
    tcx, tcy = target.center()
    out = np.empty((len(boxes), 4))
    for i, b in enumerate(boxes):
        cx, cy = b.center()
        out[i] = ((tcx - cx) / b.w, (tcy - cy) / b.h, np.log(target.w / b.w), np.log(target.h / b.h))
    return out


def train_regressor(
    frame: np.ndarray,
    box: BBox,
    cfg: AppearanceConfig | None = None,
    rng: np.random.Generator | None = None,
    n_train: int = 192,
) -> BBoxRegressor:
    """Fit the first-frame ridge regressor that pulls jittered boxes back
    onto the target box. Never retrained after frame 0."""
    cfg = cfg or AppearanceConfig()
    rng = rng if rng is not None else np.random.default_rng(0)
    _check_scorable(frame, box)
    dims = _frame_dims(frame)
    samples = [box] + _jitter_boxes(
        box, dims, n_train - 1, rng,
        sigma_xy=0.08, sigma_scale=0.06, iou_min=0.45, iou_max=1.0,
    )
    x = _box_features(frame, np.array([b.as_tuple() for b in samples]), cfg.patch_resolution)
    x = np.concatenate([x, np.ones((len(x), 1))], axis=1)
    y = _offsets_to(box, samples)
    penalty = cfg.ridge_lambda * np.eye(x.shape[1])
    penalty[-1, -1] = 0.0  # bias is not shrunk
    coef = np.linalg.solve(x.T @ x + penalty, x.T @ y)
    coef.setflags(write=False)
    return BBoxRegressor(coefficients=coef, trained=True)


def regress(regressor: BBoxRegressor, frame: np.ndarray, box: BBox) -> BBox:
    """Apply the trained offsets to a box; the result is clipped to the frame."""
    if not regressor.trained:
        raise ValueError("regressor has not been trained")
    _check_scorable(frame, box)
    x = _box_features(frame, np.array([box.as_tuple()]))
    x = np.concatenate([x, np.ones((1, 1))], axis=1)
    dx, dy, dlw, dlh = (x @ regressor.coefficients)[0]
    cx, cy = box.center()
    moved = BBox.from_center(
        cx + dx * box.w, cy + dy * box.h, box.w * np.exp(dlw), box.h * np.exp(dlh)
    )
    return clip(moved, _frame_dims(frame))
