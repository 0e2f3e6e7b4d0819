import numpy as np
import pytest

from longtrack.evaluation import (
    FramePrediction,
    attribute_report,
    distance_series,
    evaluate_sequence,
    f_measure,
    f_score,
    false_presence_rate,
    overlap_series,
    pr_re,
    precision_at,
    recapture_events,
    success_auc,
    success_curve,
)
from longtrack.geometry import BBox, iou


def oracle_pr_re(predictions, groundtruth, tau):
    """Straight-line reimplementation used as an independent check."""
    counted = []
    for pred, gt in zip(predictions, groundtruth):
        if pred.box is not None and pred.confidence >= tau:
            counted.append(iou(pred.box, gt) if gt is not None else 0.0)
    visible = [
        (iou(pred.box, gt) if pred.box is not None and pred.confidence >= tau else 0.0)
        for pred, gt in zip(predictions, groundtruth)
        if gt is not None
    ]
    pr = sum(counted) / len(counted) if counted else 0.0
    re = sum(visible) / len(visible) if visible else 0.0
    return pr, re


def random_case(rng, n=8):
    gts, preds = [], []
    conf_grid = [0.0, 0.2, 0.4, 0.6, 0.8, 1.0]
    for _ in range(n):
        if rng.random() < 0.7:
            gt = BBox(rng.uniform(0, 200), rng.uniform(0, 150), rng.uniform(10, 50), rng.uniform(10, 50))
        else:
            gt = None
        gts.append(gt)
        if rng.random() < 0.25:
            preds.append(FramePrediction(None, float(rng.choice(conf_grid))))
        else:
            if gt is not None and rng.random() < 0.7:
                box = BBox(gt.x + rng.uniform(-8, 8), gt.y + rng.uniform(-8, 8), gt.w, gt.h)
            else:
                box = BBox(rng.uniform(0, 200), rng.uniform(0, 150), rng.uniform(10, 50), rng.uniform(10, 50))
            preds.append(FramePrediction(box, float(rng.choice(conf_grid))))
    return preds, gts


FOUR_FRAME_PREDS = [
    FramePrediction(BBox(10, 10, 20, 20), 0.9),   # exact hit
    FramePrediction(BBox(100, 100, 20, 20), 0.8), # complete miss
    FramePrediction(None, 0.0),                   # declared absent
    FramePrediction(BBox(50, 50, 20, 20), 0.75),  # box while target absent
]
FOUR_FRAME_GT = [
    BBox(10, 10, 20, 20),
    BBox(10, 60, 20, 20),
    BBox(200, 100, 20, 20),
    None,
]


class TestPrRe:
    def test_four_frame_toy(self):
        pr, re = pr_re(FOUR_FRAME_PREDS, FOUR_FRAME_GT, 0.7)
        assert pr == pytest.approx(1.0 / 3.0)
        assert re == pytest.approx(1.0 / 3.0)

    def test_high_threshold_counts_nothing(self):
        preds = [FramePrediction(BBox(0, 0, 10, 10), 0.3)]
        assert pr_re(preds, [BBox(0, 0, 10, 10)], 0.9) == (0.0, 0.0)

    def test_all_absent_groundtruth(self):
        preds = [FramePrediction(BBox(0, 0, 10, 10), 0.9)]
        pr, re = pr_re(preds, [None], 0.5)
        assert pr == 0.0
        assert re == 0.0

    def test_length_mismatch_rejected(self):
        with pytest.raises(ValueError):
            pr_re([FramePrediction(None, 0.0)], [], 0.5)

    def test_matches_bruteforce_on_random_cases(self):
        rng = np.random.default_rng(0)
        for _ in range(100):
            preds, gts = random_case(rng, n=int(rng.integers(1, 11)))
            for tau in (0.0, 0.3, 0.5, 0.8, 1.0):
                assert pr_re(preds, gts, tau) == pytest.approx(
                    oracle_pr_re(preds, gts, tau)
                )


class TestFMeasure:
    @pytest.mark.parametrize(
        "pr,re,expected",
        [
            (0.6095, 0.4856, 0.5405),
            (0.6766, 0.4053, 0.5069),
            (0.3732, 0.4010, 0.3866),
        ],
    )
    def test_reference_triples(self, pr, re, expected):
        assert f_measure(pr, re) == pytest.approx(expected, abs=5e-4)

    def test_zero(self):
        assert f_measure(0.0, 0.0) == 0.0

    def test_symmetry(self):
        assert f_measure(0.3, 0.7) == pytest.approx(f_measure(0.7, 0.3))


class TestFScore:
    def test_sweep_matches_dense_grid(self):
        rng = np.random.default_rng(1)
        for _ in range(30):
            preds, gts = random_case(rng, n=int(rng.integers(2, 11)))
            best_f, best_tau = f_score(preds, gts)
            dense = max(
                f_measure(*pr_re(preds, gts, t)) for t in np.linspace(0, 1, 501)
            )
            assert best_f == pytest.approx(dense, abs=1e-12)
            assert 0.0 <= best_tau <= 1.0

    def test_monotone_confidence_reparametrization_preserves_best_f(self):
        rng = np.random.default_rng(2)
        preds, gts = random_case(rng, n=10)
        warped = [FramePrediction(p.box, p.confidence**3) for p in preds]
        assert f_score(preds, gts)[0] == pytest.approx(f_score(warped, gts)[0])

    def test_tie_prefers_smallest_threshold(self):
        gt = [BBox(0, 0, 10, 10)] * 3
        preds = [FramePrediction(BBox(0, 0, 10, 10), 0.8)] * 3
        best_f, best_tau = f_score(preds, gt)
        assert best_f == pytest.approx(1.0)
        assert best_tau == 0.0


class TestSuccess:
    def test_perfect_overlap_gives_unit_area(self):
        assert success_auc(np.ones(50)) == pytest.approx(1.0)

    def test_zero_overlap_gives_zero_area(self):
        assert success_auc(np.zeros(50)) == 0.0

    def test_area_tracks_mean_overlap(self):
        rng = np.random.default_rng(3)
        for _ in range(50):
            ious = rng.uniform(0, 1, size=int(rng.integers(1, 300)))
            assert abs(success_auc(ious) - ious.mean()) < 1.0 / 101.0

    def test_curve_shape(self):
        ts, rates = success_curve(np.array([0.5]))
        assert ts.shape == rates.shape == (101,)
        assert rates[0] == 1.0
        assert rates[-1] == 0.0
        assert np.all(np.diff(rates) <= 0)

    def test_empty_input(self):
        assert success_auc(np.array([])) == 0.0


class TestPrecisionAt:
    def test_boundary_inclusive(self):
        assert precision_at(np.array([20.0])) == 1.0
        assert precision_at(np.array([20.001])) == 0.0

    def test_absent_predictions_count_as_misses(self):
        preds = [
            FramePrediction(BBox(0, 0, 10, 10), 0.9),
            FramePrediction(None, 0.0),
        ]
        gts = [BBox(2, 0, 10, 10), BBox(0, 0, 10, 10)]
        dists = distance_series(preds, gts)
        assert precision_at(dists) == 0.5

    def test_empty(self):
        assert precision_at(np.array([])) == 0.0


class TestSeriesHelpers:
    def test_overlap_series_skips_absent_gt(self):
        out = overlap_series(FOUR_FRAME_PREDS, FOUR_FRAME_GT)
        assert out.shape == (3,)
        assert out[0] == pytest.approx(1.0)
        assert out[1] == 0.0
        assert out[2] == 0.0

    def test_false_presence_rate(self):
        assert false_presence_rate(FOUR_FRAME_PREDS, FOUR_FRAME_GT) == 1.0
        honest = FOUR_FRAME_PREDS[:3] + [FramePrediction(None, 0.1)]
        assert false_presence_rate(honest, FOUR_FRAME_GT) == 0.0
        assert false_presence_rate(FOUR_FRAME_PREDS[:2], FOUR_FRAME_GT[:2]) == 0.0


class TestRecapture:
    def build(self, found_at, n=20, absent=range(5, 10)):
        gts = [BBox(50, 50, 20, 20) if t not in absent else None for t in range(n)]
        preds = []
        for t in range(n):
            if gts[t] is not None and found_at is not None and t >= found_at:
                preds.append(FramePrediction(BBox(50, 50, 20, 20), 0.9))
            else:
                preds.append(FramePrediction(None, 0.05))
        return preds, gts

    def test_prompt_recapture_counts(self):
        preds, gts = self.build(found_at=12)
        assert recapture_events(preds, gts) == [True]

    def test_late_recapture_fails_window(self):
        preds, gts = self.build(found_at=12, n=40)
        assert recapture_events(preds, gts, window=2) == [False]

    def test_no_reappearance_no_events(self):
        preds, gts = self.build(found_at=0, absent=())
        assert recapture_events(preds, gts) == []

    def test_two_events(self):
        gts = [BBox(0, 0, 10, 10)] * 30
        for t in list(range(5, 8)) + list(range(15, 18)):
            gts[t] = None
        preds = [FramePrediction(BBox(0, 0, 10, 10), 0.9)] * 30
        assert recapture_events(preds, gts) == [True, True]


class TestEvaluateSequence:
    def test_fields_consistent(self):
        m = evaluate_sequence(FOUR_FRAME_PREDS, FOUR_FRAME_GT)
        assert m.frames == 4
        assert m.visible_frames == 3
        assert 0.0 <= m.best_f <= 1.0
        assert m.false_presence == 1.0
        assert m.reappearances == 0

    def test_perfect_tracking(self):
        gts = [BBox(10, 10, 30, 30) for _ in range(10)]
        preds = [FramePrediction(BBox(10, 10, 30, 30), 1.0) for _ in range(10)]
        m = evaluate_sequence(preds, gts)
        assert m.best_f == pytest.approx(1.0)
        assert m.auc == pytest.approx(1.0)
        assert m.precision == 1.0


class TestAttributeReport:
    def test_grouping_and_all_row(self):
        gts = [BBox(0, 0, 10, 10)] * 4
        good = [FramePrediction(BBox(0, 0, 10, 10), 0.9)] * 4
        bad = [FramePrediction(BBox(50, 50, 10, 10), 0.9)] * 4
        m_good = evaluate_sequence(good, gts)
        m_bad = evaluate_sequence(bad, gts)
        rows = attribute_report(
            [
                ("s1", ("FOC",), m_good),
                ("s2", ("FOC", "OV"), m_bad),
                ("s3", ("OV",), m_good),
            ]
        )
        by_tag = {r["attribute"]: r for r in rows}
        assert by_tag["FOC"]["sequences"] == 2
        assert by_tag["OV"]["sequences"] == 2
        assert by_tag["all"]["sequences"] == 3
        assert by_tag["FOC"]["mean_f"] == pytest.approx((1.0 + 0.0) / 2)
        assert by_tag["all"]["mean_f"] == pytest.approx(2.0 / 3.0)


class TestFramePrediction:
    def test_confidence_range_enforced(self):
        with pytest.raises(ValueError):
            FramePrediction(None, 1.5)
