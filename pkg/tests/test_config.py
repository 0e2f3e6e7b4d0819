import dataclasses

import pytest

from longtrack.appearance import AppearanceConfig
from longtrack.config import (
    RunConfig,
    config_keys,
    format_config,
    load_config,
    parse_config,
)
from longtrack.detector import DetectorConfig
from longtrack.judgement import JudgementConfig
from longtrack.shortterm import ShortTermConfig


def test_empty_text_gives_defaults():
    cfg = parse_config("")
    assert cfg == RunConfig()
    assert cfg.appearance == AppearanceConfig()
    assert cfg.shortterm == ShortTermConfig()
    assert cfg.judgement == JudgementConfig()
    assert cfg.detector == DetectorConfig()


def test_single_override_leaves_rest_alone():
    cfg = parse_config("th_mid = 0.6\n")
    assert cfg.judgement.th_mid == 0.6
    assert cfg.judgement.th_low == JudgementConfig().th_low
    assert cfg.detector == DetectorConfig()


def test_comments_and_blank_lines_ignored():
    text = "# a comment\n\nseed = 7   # trailing note\n\n"
    assert parse_config(text).seed == 7


def test_unknown_key_rejected():
    with pytest.raises(ValueError, match="unknown config key"):
        parse_config("serch_radius = 10\n")


def test_duplicate_key_rejected():
    with pytest.raises(ValueError, match="duplicate"):
        parse_config("seed = 1\nseed = 2\n")


def test_malformed_line_rejected():
    with pytest.raises(ValueError, match="key=value"):
        parse_config("just words\n")


def test_bool_parsing_variants():
    assert parse_config("cascade_enabled = false\n").detector.cascade_enabled is False
    assert parse_config("cascade_enabled = ON\n").detector.cascade_enabled is True
    assert parse_config("similarity_bank = 1\n").appearance.similarity_bank is True
    with pytest.raises(ValueError, match="boolean"):
        parse_config("cascade_enabled = maybe\n")


def test_tuple_parsing():
    cfg = parse_config("stage_scales = 4,12\nrefine_scales = 0.9,1.0,1.1\n")
    assert cfg.detector.stage_scales == (4.0, 12.0)
    assert cfg.shortterm.refine_scales == (0.9, 1.0, 1.1)


def test_shared_keys_reach_both_consumers():
    cfg = parse_config(
        "search_radius = 24\nmotion_reliability_floor = 0.35\n"
        "flow_region_scale = 2.5\nrefine_scales = 0.95,1.0,1.05\n"
    )
    assert cfg.shortterm.search_radius == 24
    assert cfg.detector.search_radius == 24
    assert cfg.shortterm.motion_reliability_floor == 0.35
    assert cfg.detector.motion_reliability_floor == 0.35
    assert cfg.shortterm.flow_region_scale == 2.5
    assert cfg.detector.flow_region_scale == 2.5
    assert cfg.detector.refine_scales == (0.95, 1.0, 1.05)


def test_int_keys_stay_int():
    cfg = parse_config("n_candidates = 64\nbuffer_frames = 12\n")
    assert cfg.shortterm.n_candidates == 64
    assert isinstance(cfg.shortterm.n_candidates, int)
    assert cfg.appearance.buffer_frames == 12


def test_string_keys():
    cfg = parse_config("update_confidence = s_sim\nranking_mode = sequential\n")
    assert cfg.judgement.update_confidence == "s_sim"
    assert cfg.detector.ranking_mode == "sequential"


def test_format_round_trips_defaults():
    assert parse_config(format_config(RunConfig())) == RunConfig()


def test_format_round_trips_modified():
    text = (
        "seed = 99\nconf_gamma = 2.5\nstage_scales = 6,20\n"
        "one_stage_per_frame = true\nth_low = 0.05\n"
    )
    cfg = parse_config(text)
    assert parse_config(format_config(cfg)) == cfg


def test_every_key_appears_in_format():
    text = format_config(RunConfig())
    for key in config_keys():
        assert any(line.startswith(f"{key} =") for line in text.splitlines()), key


def test_registry_covers_all_dataclass_fields():
    # every tunable on the sub-configs must be reachable from a flat key
    reachable = {
        ("appearance", f) for f in [k for k in config_keys()]
    }
    targets = {
        "appearance": set(), "shortterm": set(), "judgement": set(), "detector": set(),
    }
    from longtrack.config import _KEYMAP

    for sections, attr in _KEYMAP.values():
        for s in sections:
            if s in targets:
                targets[s].add(attr)
    for cls, name in [
        (AppearanceConfig, "appearance"),
        (ShortTermConfig, "shortterm"),
        (JudgementConfig, "judgement"),
        (DetectorConfig, "detector"),
    ]:
        missing = {f.name for f in dataclasses.fields(cls)} - targets[name]
        assert not missing, f"{name} fields without config keys: {missing}"


def test_load_config_reads_file(tmp_path):
    path = tmp_path / "run.cfg"
    path.write_text("seed = 5\ndet_sim = 0.4\n")
    cfg = load_config(path)
    assert cfg.seed == 5
    assert cfg.detector.det_sim == 0.4
