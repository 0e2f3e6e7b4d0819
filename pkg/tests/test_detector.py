import math

import numpy as np
import pytest

from longtrack.appearance import init_model
from longtrack.detector import (
    DetectorConfig,
    detect,
    propose,
    rank_proposals,
    stage_regions,
)
from longtrack.geometry import BBox, FrameDims, center_distance, contains, iou, scale_about_center
from longtrack.shortterm import ShortTermConfig

from conftest import paste, smooth_noise

DIMS = FrameDims(320, 240)


def scene(box=BBox(120, 90, 44, 36), bg_seed=1, target_seed=2):
    frame = smooth_noise((240, 320), np.random.default_rng(bg_seed), sigma=2.5)
    target = smooth_noise((box.h, box.w), np.random.default_rng(target_seed))
    paste(frame, box.x, box.y, target)
    return frame, box, target


class TestPropose:
    def test_all_proposals_inside_region_and_budgeted(self):
        frame, _, _ = scene()
        region = BBox(40, 30, 200, 160)
        props = propose(frame, region, (44, 36), budget=32)
        assert 0 < len(props) <= 32
        for p in props:
            assert p.x >= region.x - 1e-9 and p.y >= region.y - 1e-9
            assert p.x2 <= region.x2 + 1e-9 and p.y2 <= region.y2 + 1e-9

    def test_uniform_region_first_window_wins(self):
        # all objectness scores tie at zero, so the stable sort keeps scan
        # order: smallest scale, smallest aspect, top-left position first
        frame = np.full((240, 320), 128, dtype=np.uint8)
        props = propose(frame, BBox(0, 0, 100, 100), (40, 40), budget=5)
        w = 40 * 0.5 * math.sqrt(0.5)
        h = 40 * 0.5 / math.sqrt(0.5)
        first = props[0]
        assert first.x == 0 and first.y == 0
        assert first.w == pytest.approx(w)
        assert first.h == pytest.approx(h)

    def test_textured_blob_ranks_first(self):
        frame = np.full((240, 320), 128, dtype=np.uint8)
        blob = BBox(130, 100, 40, 40)
        paste(frame, blob.x, blob.y, smooth_noise((40, 40), np.random.default_rng(3), sigma=0.8))
        props = propose(frame, BBox(0, 0, 320, 240), (40, 40), budget=64)
        assert iou(props[0], blob) >= 0.5

    def test_tiny_region_falls_back_to_region(self):
        frame, _, _ = scene()
        region = BBox(10, 10, 6, 6)
        assert propose(frame, region, (44, 36), budget=16) == [region]

    def test_nms_limits_overlap(self):
        frame, _, _ = scene()
        props = propose(frame, BBox(0, 0, 320, 240), (44, 36), budget=64)
        arr = [p.as_tuple() for p in props]
        for i in range(len(arr)):
            for j in range(i + 1, len(arr)):
                assert iou(BBox(*arr[i]), BBox(*arr[j])) <= 0.7 + 1e-9

    def test_deterministic(self):
        frame, _, _ = scene()
        a = propose(frame, BBox(20, 20, 250, 200), (44, 36), budget=32)
        b = propose(frame, BBox(20, 20, 250, 200), (44, 36), budget=32)
        assert a == b


class TestRankProposals:
    def test_output_is_permutation(self):
        frame, box, _ = scene()
        model = init_model(frame, box)
        props = propose(frame, BBox(0, 0, 320, 240), (44, 36), budget=32)
        ranked = rank_proposals(model, frame, props, box)
        assert sorted(p.as_tuple() for p in ranked) == sorted(p.as_tuple() for p in props)

    def test_true_target_ranked_first(self):
        frame, box, _ = scene()
        model = init_model(frame, box)
        junk = [BBox(10, 10, 44, 36), BBox(250, 180, 44, 36), BBox(60, 150, 50, 40)]
        ranked = rank_proposals(model, frame, junk + [box], box)
        assert ranked[0] == box

    def test_distance_breaks_appearance_ties(self):
        # two pixel-identical copies: the one nearer the prior wins
        frame = smooth_noise((240, 320), np.random.default_rng(4), sigma=2.5)
        tex = smooth_noise((36, 44), np.random.default_rng(5))
        near = BBox(100, 90, 44, 36)
        far = BBox(240, 170, 44, 36)
        paste(frame, near.x, near.y, tex)
        paste(frame, far.x, far.y, tex)
        prev_frame = smooth_noise((240, 320), np.random.default_rng(4), sigma=2.5)
        paste(prev_frame, 90, 90, tex)
        model = init_model(prev_frame, BBox(90, 90, 44, 36))
        ranked = rank_proposals(model, frame, [far, near], BBox(90, 90, 44, 36))
        assert ranked[0] == near

    def test_sequential_mode_is_permutation(self):
        frame, box, _ = scene()
        model = init_model(frame, box)
        props = propose(frame, BBox(0, 0, 320, 240), (44, 36), budget=24)
        ranked = rank_proposals(model, frame, props, box, mode="sequential")
        assert sorted(p.as_tuple() for p in ranked) == sorted(p.as_tuple() for p in props)

    def test_unknown_mode_rejected(self):
        frame, box, _ = scene()
        model = init_model(frame, box)
        with pytest.raises(ValueError):
            rank_proposals(model, frame, [box], box, mode="best")


class TestStageRegions:
    def test_nesting_after_clipping(self):
        cfg = DetectorConfig()
        rng = np.random.default_rng(6)
        for _ in range(50):
            w = rng.uniform(10, 80)
            h = rng.uniform(10, 80)
            x = rng.uniform(0, 320 - w)
            y = rng.uniform(0, 240 - h)
            anchor = BBox(x, y, w, h)
            regions = [r for _, r in stage_regions(anchor, DIMS, cfg)]
            for inner, outer in zip(regions, regions[1:]):
                assert contains(outer, inner)
            assert contains(DIMS.as_box(), regions[-1])

    def test_preclip_area_factors(self):
        anchor = BBox(150, 110, 20, 14)
        assert scale_about_center(anchor, 5).area() == pytest.approx(25 * anchor.area())
        assert scale_about_center(anchor, 18).area() == pytest.approx(324 * anchor.area())

    def test_square_mode_produces_squares(self):
        cfg = DetectorConfig(square_regions=True)
        anchor = BBox(140, 100, 40, 20)
        pre = scale_about_center(anchor, 5, square=True)
        assert pre.w == pytest.approx(pre.h)
        assert pre.area() == pytest.approx(25 * anchor.area())
        regions = stage_regions(anchor, DIMS, cfg)
        assert regions[0][0] == "local"


class TestDetect:
    def make_model(self, box=BBox(120, 90, 44, 36)):
        prev_frame, _, target = scene(box)
        model = init_model(prev_frame, box)
        return model, prev_frame, box, target

    def test_nearby_reappearance_found_locally(self):
        model, prev_frame, box, target = self.make_model()
        frame = smooth_noise((240, 320), np.random.default_rng(1), sigma=2.5)
        true_box = BBox(box.x + 18, box.y - 10, box.w, box.h)
        paste(frame, true_box.x, true_box.y, target)
        out = detect(model, prev_frame, frame, box, DetectorConfig(), np.random.default_rng(7))
        assert out.found
        assert out.stage in ("local", "area5")
        assert iou(out.box, true_box) > 0.5
        assert out.scores.s_cls > 0
        assert out.best_confidence > 0.5

    def test_far_reappearance_needs_wide_stage(self):
        model, prev_frame, box, target = self.make_model()
        frame = smooth_noise((240, 320), np.random.default_rng(1), sigma=2.5)
        true_box = BBox(20, 180, box.w, box.h)
        paste(frame, true_box.x, true_box.y, target)
        out = detect(model, prev_frame, frame, box, DetectorConfig(), np.random.default_rng(8))
        assert out.found
        assert out.stage in ("area18", "global")
        assert iou(out.box, true_box) > 0.5

    def test_absent_target_rejected(self):
        model, prev_frame, box, _ = self.make_model()
        frame = smooth_noise((240, 320), np.random.default_rng(1), sigma=2.5)
        out = detect(model, prev_frame, frame, box, DetectorConfig(), np.random.default_rng(9))
        assert not out.found
        assert out.box is None
        assert out.stage == "none"
        assert 0.0 <= out.best_confidence <= 0.5

    def test_earliest_stage_wins_over_far_copy(self):
        model, prev_frame, box, target = self.make_model()
        frame = smooth_noise((240, 320), np.random.default_rng(1), sigma=2.5)
        near = BBox(box.x + 14, box.y + 8, box.w, box.h)
        far = BBox(250, 30, box.w, box.h)
        paste(frame, near.x, near.y, target)
        paste(frame, far.x, far.y, target)
        out = detect(model, prev_frame, frame, box, DetectorConfig(), np.random.default_rng(10))
        assert out.found
        assert center_distance(out.box, near) < center_distance(out.box, far)

    def test_anchor_follows_scene_motion(self):
        model, prev_frame, box, _ = self.make_model()
        # whole scene slides +10 px in x and the target vanishes: the
        # anchor must follow the motion even though nothing is found
        slid = np.roll(prev_frame, 10, axis=1)
        paste(slid, box.x + 10, box.y, smooth_noise((box.h, box.w), np.random.default_rng(30), sigma=2.5))
        out = detect(model, prev_frame, slid, box, DetectorConfig(), np.random.default_rng(11))
        assert out.anchor.x == box.x + 10
        assert out.anchor.y == box.y

    def test_only_stage_restricts_search(self):
        model, prev_frame, box, target = self.make_model()
        frame = smooth_noise((240, 320), np.random.default_rng(1), sigma=2.5)
        true_box = BBox(box.x + 12, box.y + 6, box.w, box.h)
        paste(frame, true_box.x, true_box.y, target)
        found_global = detect(
            model, prev_frame, frame, box, DetectorConfig(),
            np.random.default_rng(12), only_stage="global",
        )
        assert found_global.stage in ("global", "none")
        if found_global.found:
            assert iou(found_global.box, true_box) > 0.3

    def test_deterministic(self):
        model, prev_frame, box, target = self.make_model()
        frame = smooth_noise((240, 320), np.random.default_rng(1), sigma=2.5)
        paste(frame, box.x + 18, box.y - 10, target)
        a = detect(model, prev_frame, frame, box, DetectorConfig(), np.random.default_rng(13))
        b = detect(model, prev_frame, frame, box, DetectorConfig(), np.random.default_rng(13))
        assert a == b
