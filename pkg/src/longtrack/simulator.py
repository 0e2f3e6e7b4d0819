"""Synthetic grayscale sequence generator with exact ground truth.

Sequences are built from band-limited noise textures composited in a fixed
order (background, target, distractors, occluders, illumination, sensor
noise), all driven by keyframed parameters. The target is drawn at integer
positions so the ground-truth box is the exact rendered extent, and every
random draw is derived from the sequence seed, making rendering
byte-reproducible.

Absence is declared, not inferred: a frame's ground truth is absent exactly
when it falls in an occlusion or out-of-view interval. Trajectories in the
standard suite are designed so the target is geometrically invisible
precisely on those frames.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .geometry import BBox, FrameDims, scale_about_center

# Entity ids feeding per-entity random streams.
_BG = 0
_TARGET_A = 1
_TARGET_B = 2
_NOISE = 3
_OCCLUDER_BASE = 10
_PARTIAL_BASE = 40
_DISTRACTOR_BASE = 70

_OCCLUDER_TEXTURE_SIDE = 176


def _round_half_up(v: float) -> int:
    # Deterministic monotone rounding; avoids round-half-even surprises at
    # interval boundaries.
    return int(math.floor(v + 0.5))


def _gaussian_kernel(sigma: float) -> np.ndarray:
    radius = max(1, int(3.0 * sigma))
    xs = np.arange(-radius, radius + 1, dtype=np.float64)
    k = np.exp(-0.5 * (xs / sigma) ** 2)
    return k / k.sum()


def _smooth(fieldarr: np.ndarray, sigma: float) -> np.ndarray:
    kernel = _gaussian_kernel(sigma)
    out = np.apply_along_axis(np.convolve, 0, fieldarr, kernel, mode="same")
    out = np.apply_along_axis(np.convolve, 1, out, kernel, mode="same")
    return out


def make_texture(shape: tuple[int, int], rng: np.random.Generator, sigma: float) -> np.ndarray:
    """Band-limited texture in [0, 255] as float64."""
    fieldarr = _smooth(rng.standard_normal(shape), sigma)
    lo, hi = fieldarr.min(), fieldarr.max()
    if hi - lo < 1e-12:
        return np.full(shape, 128.0)
    return (fieldarr - lo) / (hi - lo) * 255.0


def _resize(img: np.ndarray, out_h: int, out_w: int) -> np.ndarray:
    """Bilinear resize sampling at output cell centers, border-clamped."""
    h, w = img.shape
    fy = np.clip((np.arange(out_h) + 0.5) * h / out_h - 0.5, 0, h - 1)
    fx = np.clip((np.arange(out_w) + 0.5) * w / out_w - 0.5, 0, w - 1)
    y0 = fy.astype(np.intp)
    x0 = fx.astype(np.intp)
    y1 = np.minimum(y0 + 1, h - 1)
    x1 = np.minimum(x0 + 1, w - 1)
    wy = (fy - y0)[:, None]
    wx = (fx - x0)[None, :]
    top = img[np.ix_(y0, x0)] * (1 - wx) + img[np.ix_(y0, x1)] * wx
    bot = img[np.ix_(y1, x0)] * (1 - wx) + img[np.ix_(y1, x1)] * wx
    return top * (1 - wy) + bot * wy


def _interp(keys: tuple[tuple, ...], t: float) -> tuple[float, ...]:
    """Piecewise-linear interpolation over (frame, *values) keyframes,
    clamped at both ends."""
    if t <= keys[0][0]:
        return tuple(float(v) for v in keys[0][1:])
    if t >= keys[-1][0]:
        return tuple(float(v) for v in keys[-1][1:])
    for (t0, *v0), (t1, *v1) in zip(keys, keys[1:]):
        if t0 <= t <= t1:
            a = (t - t0) / (t1 - t0)
            return tuple(float(x0) + a * (float(x1) - float(x0)) for x0, x1 in zip(v0, v1))
    raise ValueError("keyframes not sorted")


def _in_intervals(t: int, intervals: tuple[tuple[int, int], ...]) -> bool:
    return any(a <= t < b for a, b in intervals)


def _paste(frame: np.ndarray, x: int, y: int, block: np.ndarray):
    fh, fw = frame.shape
    h, w = block.shape
    x0, y0 = max(x, 0), max(y, 0)
    x1, y1 = min(x + w, fw), min(y + h, fh)
    if x1 > x0 and y1 > y0:
        frame[y0:y1, x0:x1] = block[y0 - y : y1 - y, x0 - x : x1 - x]


@dataclass(frozen=True)
class SequenceSpec:
    """Declarative description of one synthetic sequence.

    All keyframe tuples are (frame, value...) with linear interpolation and
    end clamping. Intervals are half-open [start, stop). Positions are the
    target center in world coordinates; the camera offset (also keyframed)
    is subtracted to get screen coordinates.
    """

    name: str
    length: int
    size: tuple[int, int]  # target base (w, h)
    pos_keys: tuple[tuple[int, float, float], ...]
    dims: FrameDims = FrameDims(320, 240)
    scale_keys: tuple[tuple[int, float, float], ...] = ((0, 1.0, 1.0),)
    gain_keys: tuple[tuple[int, float, float], ...] = ((0, 1.0, 0.0),)
    morph_keys: tuple[tuple[int, float], ...] = ((0, 0.0),)
    camera_keys: tuple[tuple[int, float, float], ...] = ((0, 0.0, 0.0),)
    occlusions: tuple[tuple[int, int], ...] = ()
    out_of_view: tuple[tuple[int, int], ...] = ()
    partial_occlusions: tuple[tuple[int, int, float], ...] = ()
    distractors: int = 0
    distractor_speed: float = 1.0
    texture_sigma: float = 1.2
    bg_sigma: float = 2.5
    noise_sigma: float = 2.0
    attributes: tuple[str, ...] = ()

    def __post_init__(self):
        if self.length < 1:
            raise ValueError("sequence length must be >= 1")
        if self.size[0] < 4 or self.size[1] < 4:
            raise ValueError("target size must be at least 4x4")
        for seq in (self.occlusions, self.out_of_view):
            for a, b in seq:
                if not (0 <= a < b <= self.length):
                    raise ValueError(f"interval ({a}, {b}) outside sequence")
        for a, b, frac in self.partial_occlusions:
            if not (0 <= a < b <= self.length and 0.0 < frac < 1.0):
                raise ValueError("invalid partial occlusion")
        for keys in (self.pos_keys, self.scale_keys, self.gain_keys,
                     self.morph_keys, self.camera_keys):
            frames = [k[0] for k in keys]
            if frames != sorted(frames):
                raise ValueError("keyframes must be sorted by frame")

    def absent(self, t: int) -> bool:
        return _in_intervals(t, self.occlusions) or _in_intervals(t, self.out_of_view)


@dataclass
class RenderedSequence:
    """Frames plus exact per-frame ground truth (None while absent)."""

    frames: list[np.ndarray]
    boxes: list[BBox | None]
    spec: SequenceSpec

    def __len__(self):
        return len(self.frames)


def _entity_rng(seed: int, entity: int) -> np.random.Generator:
    return np.random.default_rng(np.random.SeedSequence([seed, entity]))


def _target_screen_box(spec: SequenceSpec, t: int, cam: tuple[int, int]) -> tuple[int, int, int, int]:
    cx, cy = _interp(spec.pos_keys, t)
    sx, sy = _interp(spec.scale_keys, t)
    wt = max(2, _round_half_up(spec.size[0] * sx))
    ht = max(2, _round_half_up(spec.size[1] * sy))
    x = _round_half_up(cx - cam[0] - wt / 2.0)
    y = _round_half_up(cy - cam[1] - ht / 2.0)
    return x, y, wt, ht


def render_sequence(spec: SequenceSpec, seed: int) -> RenderedSequence:
    """Render every frame of a spec deterministically from a seed."""
    w, h = spec.dims.width, spec.dims.height
    w0, h0 = spec.size

    bg = make_texture((h, w), _entity_rng(seed, _BG), spec.bg_sigma)
    tex_a = make_texture((h0, w0), _entity_rng(seed, _TARGET_A), spec.texture_sigma)
    tex_b = make_texture((h0, w0), _entity_rng(seed, _TARGET_B), spec.texture_sigma)
    occ_tex = [
        make_texture((_OCCLUDER_TEXTURE_SIDE, _OCCLUDER_TEXTURE_SIDE),
                     _entity_rng(seed, _OCCLUDER_BASE + k), 2.0)
        for k in range(len(spec.occlusions))
    ]
    part_tex = [
        make_texture((_OCCLUDER_TEXTURE_SIDE, _OCCLUDER_TEXTURE_SIDE),
                     _entity_rng(seed, _PARTIAL_BASE + k), 2.0)
        for k in range(len(spec.partial_occlusions))
    ]
    dis_tex = []
    for k in range(spec.distractors):
        own = make_texture((h0, w0), _entity_rng(seed, _DISTRACTOR_BASE + k), spec.texture_sigma)
        dis_tex.append(0.3 * tex_a + 0.7 * own)

    # Distractor paths: a moving distractor crosses the target's position
    # once, at its own staggered time, briskly enough that contact is a
    # short brush instead of a lingering pile-up (starts may lie off-frame).
    # Stationary clutter is planted beside the path instead, never on it.
    dis_paths = []
    for k in range(spec.distractors):
        t_cross = spec.length * (k + 1) // (spec.distractors + 1)
        cross_c = np.array(_interp(spec.pos_keys, t_cross))
        ang = 2.0 * math.pi * k / max(spec.distractors, 1) + 0.7
        direction = np.array([math.cos(ang), math.sin(ang)])
        if spec.distractor_speed == 0.0:
            p0 = cross_c + direction * 60.0
            p0[0] = min(max(p0[0], 25.0), w - 25.0)
            p0[1] = min(max(p0[1], 25.0), h - 25.0)
            dis_paths.append((p0, p0))
            continue
        step = direction * 3.5 * spec.distractor_speed
        p0 = cross_c - step * t_cross
        p1 = p0 + step * (spec.length - 1)
        dis_paths.append((p0, p1))

    noise_root = np.random.SeedSequence([seed, _NOISE])
    noise_children = noise_root.spawn(spec.length)

    frames: list[np.ndarray] = []
    boxes: list[BBox | None] = []
    for t in range(spec.length):
        ox, oy = _interp(spec.camera_keys, t)
        cam = (_round_half_up(ox), _round_half_up(oy))
        frame = np.roll(bg, (-cam[1], -cam[0]), axis=(0, 1)).copy()

        hidden = _in_intervals(t, spec.out_of_view)
        x, y, wt, ht = _target_screen_box(spec, t, cam)

        if not hidden:
            m = _interp(spec.morph_keys, t)[0]
            tex = (1.0 - m) * tex_a + m * tex_b
            _paste(frame, x, y, _resize(tex, ht, wt))

        for k, (p0, p1) in enumerate(dis_paths):
            a = t / max(spec.length - 1, 1)
            dc = p0 + (p1 - p0) * a
            dx = _round_half_up(dc[0] - cam[0] - w0 / 2.0)
            dy = _round_half_up(dc[1] - cam[1] - h0 / 2.0)
            _paste(frame, dx, dy, dis_tex[k])

        for k, (a, b) in enumerate(spec.occlusions):
            if a <= t < b:
                grown = scale_about_center(BBox(x, y, wt, ht), 1.3)
                gx = _round_half_up(grown.x) - 2
                gy = _round_half_up(grown.y) - 2
                gw = _round_half_up(grown.w) + 4
                gh = _round_half_up(grown.h) + 4
                block = occ_tex[k]
                if gh > block.shape[0] or gw > block.shape[1]:
                    block = _resize(block, max(gh, 1), max(gw, 1))
                _paste(frame, gx, gy, block[:gh, :gw])

        for k, (a, b, frac) in enumerate(spec.partial_occlusions):
            if a <= t < b:
                sw = max(1, _round_half_up(frac * wt))
                sy0 = y - _round_half_up(0.1 * ht)
                sh = _round_half_up(1.2 * ht)
                _paste(frame, x, sy0, part_tex[k][:sh, :sw])

        gain, offset = _interp(spec.gain_keys, t)
        out = frame * gain + offset
        if spec.noise_sigma > 0:
            nrng = np.random.default_rng(noise_children[t])
            out = out + nrng.normal(0.0, spec.noise_sigma, out.shape)
        frames.append(np.clip(out, 0, 255).astype(np.uint8))

        if spec.absent(t):
            boxes.append(None)
        else:
            ix0, iy0 = max(x, 0), max(y, 0)
            ix1, iy1 = min(x + wt, w), min(y + ht, h)
            if ix1 > ix0 and iy1 > iy0:
                boxes.append(BBox(ix0, iy0, ix1 - ix0, iy1 - iy0))
            else:
                boxes.append(None)

    return RenderedSequence(frames=frames, boxes=boxes, spec=spec)


def standard_suite() -> list[SequenceSpec]:
    """The fixed 24-scenario benchmark, covering all attribute tags.

    Ten scenarios contain full-absence intervals (occlusion or out of
    view); the rest stress appearance, motion, and camera variation while
    the target stays visible.
    """
    specs = [
        SequenceSpec(
            name="baseline_drift", length=140, size=(44, 36),
            pos_keys=((0, 80, 120), (139, 240, 120)),
        ),
        SequenceSpec(
            name="occlusion_short", length=150, size=(44, 36),
            pos_keys=((0, 80, 100), (149, 230, 140)),
            occlusions=((60, 75),), attributes=("FOC",),
        ),
        SequenceSpec(
            name="occlusion_long", length=200, size=(44, 36),
            pos_keys=((0, 70, 120), (40, 120, 120), (151, 170, 125), (199, 230, 125)),
            occlusions=((40, 151),), attributes=("FOC", "SOB"),
        ),
        SequenceSpec(
            name="out_of_view_near", length=150, size=(40, 34),
            pos_keys=((0, 80, 120), (50, 25, 120), (70, -45, 120),
                      (95, -45, 120), (115, 30, 120), (149, 120, 120)),
            out_of_view=((63, 107),), attributes=("OV",),
        ),
        SequenceSpec(
            name="reappear_far", length=170, size=(42, 36),
            pos_keys=((0, 90, 70), (40, 90, 70), (55, -60, 70),
                      (110, 380, 185), (125, 270, 185), (169, 250, 185)),
            out_of_view=((52, 116),), attributes=("OV", "FM"),
        ),
        SequenceSpec(
            name="distractor_light", length=150, size=(44, 36),
            pos_keys=((0, 80, 120), (149, 240, 120)),
            distractors=2, attributes=("POC",),
        ),
        SequenceSpec(
            name="distractor_heavy", length=160, size=(44, 36),
            pos_keys=((0, 80, 130), (159, 235, 110)),
            distractors=5, bg_sigma=1.2, attributes=("POC", "BC"),
        ),
        SequenceSpec(
            name="camera_pan", length=150, size=(42, 36),
            pos_keys=((0, 280, 120), (149, 320, 130)),
            camera_keys=((0, 0, 0), (149, 180, 0)), attributes=("CM",),
        ),
        SequenceSpec(
            name="camera_shake", length=140, size=(42, 36),
            pos_keys=((0, 100, 120), (139, 210, 120)),
            camera_keys=((0, 0, 0), (10, 5, -4), (20, -4, 5), (30, 4, 4),
                         (40, -5, -3), (50, 3, -5), (60, -3, 4), (70, 5, 3),
                         (80, -4, -4), (90, 4, -3), (100, -5, 4), (110, 3, 3),
                         (120, -3, -5), (130, 4, 4), (139, 0, 0)),
            attributes=("CM",),
        ),
        SequenceSpec(
            name="fast_motion", length=140, size=(40, 34),
            pos_keys=((0, 50, 60), (25, 270, 70), (50, 60, 180),
                      (75, 265, 175), (100, 70, 70), (139, 230, 120)),
            attributes=("FM",),
        ),
        SequenceSpec(
            name="scale_grow", length=150, size=(36, 30),
            pos_keys=((0, 90, 120), (149, 215, 120)),
            scale_keys=((0, 1.0, 1.0), (149, 1.8, 1.8)), attributes=("SV",),
        ),
        SequenceSpec(
            name="scale_shrink", length=150, size=(44, 38),
            pos_keys=((0, 100, 120), (149, 225, 120)),
            scale_keys=((0, 1.0, 1.0), (149, 0.42, 0.42)),
            attributes=("SV", "LR"),
        ),
        SequenceSpec(
            name="low_res", length=140, size=(18, 14),
            pos_keys=((0, 70, 120), (139, 245, 125)),
            texture_sigma=0.9, attributes=("LR",),
        ),
        SequenceSpec(
            name="illumination", length=150, size=(44, 36),
            pos_keys=((0, 90, 120), (149, 220, 120)),
            gain_keys=((0, 1.0, 0.0), (40, 1.0, 0.0), (70, 0.55, -10.0),
                       (100, 1.25, 15.0), (130, 1.0, 0.0), (149, 1.0, 0.0)),
            attributes=("IV",),
        ),
        SequenceSpec(
            name="aspect_change", length=150, size=(42, 36),
            pos_keys=((0, 100, 120), (149, 215, 120)),
            scale_keys=((0, 1.0, 1.0), (70, 1.45, 0.7), (149, 0.75, 1.35)),
            attributes=("ARC",),
        ),
        SequenceSpec(
            name="viewpoint_morph", length=160, size=(44, 36),
            pos_keys=((0, 90, 120), (159, 225, 120)),
            morph_keys=((0, 0.0), (50, 0.0), (120, 0.85), (159, 0.85)),
            attributes=("VC",),
        ),
        SequenceSpec(
            name="background_clutter", length=140, size=(44, 36),
            pos_keys=((0, 75, 120), (139, 240, 120)),
            bg_sigma=1.2, distractors=3, distractor_speed=0.0,
            attributes=("BC",),
        ),
        SequenceSpec(
            name="occlusion_pan", length=160, size=(44, 36),
            pos_keys=((0, 120, 120), (159, 300, 120)),
            camera_keys=((0, 0, 0), (159, 130, 0)),
            occlusions=((60, 95),), attributes=("FOC", "CM"),
        ),
        SequenceSpec(
            name="ov_fast", length=140, size=(40, 34),
            pos_keys=((0, 240, 100), (55, 240, 100), (68, 400, 100),
                      (80, 400, 100), (93, 245, 105), (139, 150, 110)),
            out_of_view=((64, 86),), attributes=("OV", "FM"),
        ),
        SequenceSpec(
            name="partial_occlusion", length=150, size=(44, 36),
            pos_keys=((0, 90, 120), (149, 220, 120)),
            partial_occlusions=((60, 110, 0.45),), attributes=("POC",),
        ),
        SequenceSpec(
            name="illumination_occlusion", length=160, size=(44, 36),
            pos_keys=((0, 85, 115), (159, 230, 125)),
            gain_keys=((0, 1.0, 0.0), (50, 1.0, 0.0), (80, 0.6, -12.0),
                       (110, 1.0, 0.0), (159, 1.0, 0.0)),
            occlusions=((55, 80),), attributes=("IV", "FOC"),
        ),
        SequenceSpec(
            name="occlusion_medium", length=150, size=(44, 36),
            pos_keys=((0, 90, 120), (50, 130, 120), (90, 150, 122), (149, 215, 122)),
            occlusions=((50, 90),), attributes=("FOC",),
        ),
        SequenceSpec(
            name="ov_long", length=200, size=(42, 34),
            pos_keys=((0, 75, 120), (30, 75, 120), (42, -55, 120),
                      (150, -55, 120), (162, 80, 125), (199, 170, 125)),
            out_of_view=((39, 154),), attributes=("OV", "SOB"),
        ),
        SequenceSpec(
            name="double_occlusion", length=170, size=(44, 36),
            pos_keys=((0, 80, 120), (40, 115, 120), (62, 130, 120),
                      (105, 160, 120), (130, 175, 122), (169, 215, 122)),
            occlusions=((40, 62), (105, 130)), attributes=("FOC",),
        ),
    ]
    return specs
