"""Long-term single-object tracking toolkit.

A short-term tracker follows the target frame to frame; a judgement stage
repairs or rejects each result; on failure a cascade detector searches
progressively larger regions until the target is re-found. Ships with a
synthetic sequence generator, long-term evaluation metrics, and a CLI.
"""
from .config import RunConfig, format_config, load_config, parse_config
from .evaluation import (
    FramePrediction,
    SequenceMetrics,
    evaluate_sequence,
    f_measure,
    f_score,
    overlap_series,
    pr_re,
    success_curve,
)
from .geometry import BBox, FrameDims, iou
from .pipeline import FrameRecord, Tracker, track_sequence, validate_records
from .report import run_suite, write_single_report
from .seqio import read_sequence, write_sequence
from .simulator import SequenceSpec, render_sequence, standard_suite

__version__ = "0.1.0"

__all__ = [
    "BBox",
    "FrameDims",
    "FramePrediction",
    "FrameRecord",
    "RunConfig",
    "SequenceMetrics",
    "SequenceSpec",
    "Tracker",
    "evaluate_sequence",
    "f_measure",
    "f_score",
    "format_config",
    "iou",
    "load_config",
    "overlap_series",
    "parse_config",
    "pr_re",
    "read_sequence",
    "render_sequence",
    "run_suite",
    "standard_suite",
    "success_curve",
    "track_sequence",
    "validate_records",
    "write_sequence",
    "write_single_report",
    "__version__",
]
