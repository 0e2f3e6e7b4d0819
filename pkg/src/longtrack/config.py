"""Flat ``key=value`` run configuration mapped onto per-module settings.

One file configures the whole tracker. Every key is registered here with
the sub-configuration it feeds; a few keys (the flow search controls)
fan out to more than one consumer so the same numbers govern short-term
recovery and detection anchoring. Unknown keys are rejected outright so
typos fail loudly instead of silently running defaults.
"""
from __future__ import annotations

import dataclasses
from dataclasses import dataclass
from pathlib import Path

from .appearance import AppearanceConfig
from .detector import DetectorConfig
from .judgement import JudgementConfig
from .shortterm import ShortTermConfig


@dataclass(frozen=True)
class RunConfig:
    seed: int = 0
    appearance: AppearanceConfig = AppearanceConfig()
    shortterm: ShortTermConfig = ShortTermConfig()
    judgement: JudgementConfig = JudgementConfig()
    detector: DetectorConfig = DetectorConfig()


# flat key -> (target sections, attribute name) ; "root" targets RunConfig itself
_KEYMAP: dict[str, tuple[tuple[str, ...], str]] = {
    "seed": (("root",), "seed"),
    # appearance model
    "patch_resolution": (("appearance",), "patch_resolution"),
    "bank_capacity": (("appearance",), "bank_capacity"),
    "pos_iou": (("appearance",), "pos_iou"),
    "neg_iou": (("appearance",), "neg_iou"),
    "pos_per_frame": (("appearance",), "pos_per_frame"),
    "neg_per_frame": (("appearance",), "neg_per_frame"),
    "ridge_lambda": (("appearance",), "ridge_lambda"),
    "buffer_frames": (("appearance",), "buffer_frames"),
    "conf_gamma": (("appearance",), "conf_gamma"),
    "similarity_bank": (("appearance",), "similarity_bank"),
    # short-term search
    "n_candidates": (("shortterm",), "n_candidates"),
    "sigma_xy": (("shortterm",), "sigma_xy"),
    "sigma_scale": (("shortterm",), "sigma_scale"),
    "refine_step_px": (("shortterm",), "refine_step_px"),
    "refine_scales": (("shortterm", "detector"), "refine_scales"),
    "search_radius": (("shortterm", "detector"), "search_radius"),
    "motion_reliability_floor": (("shortterm", "detector"), "motion_reliability_floor"),
    "flow_region_scale": (("shortterm", "detector"), "flow_region_scale"),
    # judgement thresholds
    "th_mid": (("judgement",), "th_mid"),
    "th_low": (("judgement",), "th_low"),
    "update_confidence": (("judgement",), "update_confidence"),
    # cascade detector
    "stage_scales": (("detector",), "stage_scales"),
    "local_span_scale": (("detector",), "local_span_scale"),
    "local_n": (("detector",), "local_n"),
    "det_sim": (("detector",), "det_sim"),
    "det_cls": (("detector",), "det_cls"),
    "budget_stage": (("detector",), "budget_stage"),
    "budget_global": (("detector",), "budget_global"),
    "gate_top_k": (("detector",), "gate_top_k"),
    "one_stage_per_frame": (("detector",), "one_stage_per_frame"),
    "ranking_mode": (("detector",), "ranking_mode"),
    "cascade_enabled": (("detector",), "cascade_enabled"),
    "square_regions": (("detector",), "square_regions"),
}

_SECTION_GROUPS = [
    ("run", ("seed",)),
    ("appearance model", (
        "patch_resolution", "bank_capacity", "pos_iou", "neg_iou",
        "pos_per_frame", "neg_per_frame", "ridge_lambda", "buffer_frames",
        "conf_gamma", "similarity_bank",
    )),
    ("short-term search", (
        "n_candidates", "sigma_xy", "sigma_scale", "refine_step_px",
        "refine_scales", "search_radius", "motion_reliability_floor",
        "flow_region_scale",
    )),
    ("judgement", ("th_mid", "th_low", "update_confidence")),
    ("cascade detector", (
        "stage_scales", "local_span_scale", "local_n", "det_sim", "det_cls",
        "budget_stage", "budget_global", "gate_top_k", "one_stage_per_frame",
        "ranking_mode", "cascade_enabled", "square_regions",
    )),
]


def _default_value(key: str):
    sections, attr = _KEYMAP[key]
    base = RunConfig()
    section = sections[0]
    holder = base if section == "root" else getattr(base, section)
    return getattr(holder, attr)


def _parse_value(key: str, raw: str):
    template = _default_value(key)
    raw = raw.strip()
    if isinstance(template, bool):
        low = raw.lower()
        if low in ("true", "1", "yes", "on"):
            return True
        if low in ("false", "0", "no", "off"):
            return False
        raise ValueError(f"config key {key!r}: expected a boolean, got {raw!r}")
    if isinstance(template, int):
        return int(raw)
    if isinstance(template, float):
        return float(raw)
    if isinstance(template, tuple):
        return tuple(float(p) for p in raw.split(",") if p.strip())
    return raw


def _format_value(value) -> str:
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, tuple):
        return ",".join(_format_value(v) for v in value)
    if isinstance(value, float):
        return f"{value:g}"
    return str(value)


def parse_config(text: str) -> RunConfig:
    """Build a run configuration from flat ``key=value`` text."""
    overrides: dict[str, object] = {}
    for lineno, line in enumerate(text.splitlines(), 1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        key, sep, raw = line.partition("=")
        key = key.strip()
        if not sep or not key:
            raise ValueError(f"line {lineno}: expected key=value, got {line!r}")
        if key not in _KEYMAP:
            raise ValueError(f"line {lineno}: unknown config key {key!r}")
        if key in overrides:
            raise ValueError(f"line {lineno}: duplicate config key {key!r}")
        overrides[key] = _parse_value(key, raw)

    fields: dict[str, dict[str, object]] = {
        "root": {}, "appearance": {}, "shortterm": {}, "judgement": {}, "detector": {},
    }
    for key, value in overrides.items():
        sections, attr = _KEYMAP[key]
        for section in sections:
            fields[section][attr] = value
    return RunConfig(
        seed=fields["root"].get("seed", 0),
        appearance=AppearanceConfig(**fields["appearance"]),
        shortterm=ShortTermConfig(**fields["shortterm"]),
        judgement=JudgementConfig(**fields["judgement"]),
        detector=DetectorConfig(**fields["detector"]),
    )


def load_config(path: str | Path) -> RunConfig:
    return parse_config(Path(path).read_text(encoding="utf-8"))


def format_config(cfg: RunConfig) -> str:
    """Render a configuration as flat text that parses back to itself."""
    lines: list[str] = []
    for title, keys in _SECTION_GROUPS:
        lines.append(f"# {title}")
        for key in keys:
            sections, attr = _KEYMAP[key]
            section = sections[0]
            holder = cfg if section == "root" else getattr(cfg, section)
            lines.append(f"{key} = {_format_value(getattr(holder, attr))}")
        lines.append("")
    return "\n".join(lines)


def config_keys() -> list[str]:
    return sorted(_KEYMAP)


def _consistency_check():
    # every registered attr must exist on its dataclasses
    names = {
        "appearance": {f.name for f in dataclasses.fields(AppearanceConfig)},
        "shortterm": {f.name for f in dataclasses.fields(ShortTermConfig)},
        "judgement": {f.name for f in dataclasses.fields(JudgementConfig)},
        "detector": {f.name for f in dataclasses.fields(DetectorConfig)},
        "root": {"seed"},
    }
    grouped = [k for _, keys in _SECTION_GROUPS for k in keys]
    if sorted(grouped) != sorted(_KEYMAP):
        raise AssertionError("config section groups out of sync with key map")
    for key, (sections, attr) in _KEYMAP.items():
        for section in sections:
            if attr not in names[section]:
                raise AssertionError(f"config key {key!r} targets missing field {section}.{attr}")


_consistency_check()
