"""On-disk formats: PGM frames, ground-truth and prediction files, metadata.

A sequence directory holds zero-padded binary PGM frames, a
``groundtruth.txt`` with one line per frame (``x,y,w,h`` or ``absent``),
and a ``sequence.meta`` of ``key=value`` pairs. Predictions use the same
line-oriented shape with a trailing confidence. All writers emit
deterministic bytes so identical runs produce identical files.
"""
from __future__ import annotations

import hashlib
from pathlib import Path

import numpy as np

from .evaluation import FramePrediction
from .geometry import BBox
from .simulator import RenderedSequence, SequenceSpec

FRAME_PATTERN = "{:08d}.pgm"
GROUNDTRUTH_FILE = "groundtruth.txt"
META_FILE = "sequence.meta"


def write_pgm(path: str | Path, frame: np.ndarray):
    if frame.ndim != 2 or frame.dtype != np.uint8:
        raise ValueError("PGM frames must be 2-d uint8 arrays")
    h, w = frame.shape
    with open(path, "wb") as fh:
        fh.write(f"P5\n{w} {h}\n255\n".encode("ascii"))
        fh.write(frame.tobytes())


def read_pgm(path: str | Path) -> np.ndarray:
    data = Path(path).read_bytes()
    if not data.startswith(b"P5"):
        raise ValueError(f"not a binary PGM file: {path}")
    fields: list[bytes] = []
    pos = 2
    while len(fields) < 3:
        while pos < len(data) and data[pos : pos + 1].isspace():
            pos += 1
        if data[pos : pos + 1] == b"#":
            while pos < len(data) and data[pos : pos + 1] != b"\n":
                pos += 1
            continue
        start = pos
        while pos < len(data) and not data[pos : pos + 1].isspace():
            pos += 1
        fields.append(data[start:pos])
    pos += 1  # single whitespace after maxval
    w, h, maxval = (int(f) for f in fields)
    if maxval != 255:
        raise ValueError(f"unsupported PGM maxval {maxval}")
    pixels = np.frombuffer(data, dtype=np.uint8, count=w * h, offset=pos)
    return pixels.reshape(h, w).copy()


def _format_box(box: BBox) -> str:
    return ",".join(f"{float(v):.4f}".rstrip("0").rstrip(".") for v in box.as_tuple())


def _parse_box(parts: list[str]) -> BBox:
    return BBox(*(float(p) for p in parts))


def spec_hash(spec: SequenceSpec) -> str:
    return hashlib.sha256(repr(spec).encode("utf-8")).hexdigest()[:16]


def write_groundtruth(path: str | Path, boxes: list[BBox | None]):
    lines = [("absent" if b is None else _format_box(b)) for b in boxes]
    Path(path).write_text("\n".join(lines) + "\n", encoding="ascii")


def read_groundtruth(path: str | Path) -> list[BBox | None]:
    out: list[BBox | None] = []
    for lineno, line in enumerate(Path(path).read_text(encoding="ascii").splitlines(), 1):
        line = line.strip()
        if not line:
            continue
        if line == "absent":
            out.append(None)
            continue
        parts = line.split(",")
        if len(parts) != 4:
            raise ValueError(f"{path}:{lineno}: expected x,y,w,h or absent")
        out.append(_parse_box(parts))
    return out


def write_predictions(path: str | Path, predictions: list[FramePrediction]):
    lines = []
    for p in predictions:
        conf = f"{p.confidence:.6f}"
        if p.box is None:
            lines.append(f"absent,{conf}")
        else:
            lines.append(f"{_format_box(p.box)},{conf}")
    Path(path).write_text("\n".join(lines) + "\n", encoding="ascii")


def read_predictions(path: str | Path) -> list[FramePrediction]:
    out: list[FramePrediction] = []
    for lineno, line in enumerate(Path(path).read_text(encoding="ascii").splitlines(), 1):
        line = line.strip()
        if not line:
            continue
        parts = line.split(",")
        if parts[0] == "absent" and len(parts) == 2:
            out.append(FramePrediction(None, float(parts[1])))
        elif len(parts) == 5:
            out.append(FramePrediction(_parse_box(parts[:4]), float(parts[4])))
        else:
            raise ValueError(f"{path}:{lineno}: expected x,y,w,h,conf or absent,conf")
    return out


def write_sequence(directory: str | Path, seq: RenderedSequence):
    """Write frames, ground truth, and metadata for a rendered sequence."""
    directory = Path(directory)
    directory.mkdir(parents=True, exist_ok=True)
    for i, frame in enumerate(seq.frames):
        write_pgm(directory / FRAME_PATTERN.format(i), frame)
    write_groundtruth(directory / GROUNDTRUTH_FILE, seq.boxes)
    spec = seq.spec
    meta = {
        "name": spec.name,
        "width": str(spec.dims.width),
        "height": str(spec.dims.height),
        "length": str(spec.length),
        "attributes": ",".join(spec.attributes),
        "spec_hash": spec_hash(spec),
    }
    lines = [f"{k}={v}" for k, v in meta.items()]
    (directory / META_FILE).write_text("\n".join(lines) + "\n", encoding="ascii")


def read_meta(directory: str | Path) -> dict[str, str]:
    out = {}
    for line in (Path(directory) / META_FILE).read_text(encoding="ascii").splitlines():
        line = line.strip()
        if not line or line.startswith("#"):
            continue
        key, _, value = line.partition("=")
        out[key.strip()] = value.strip()
    return out


def read_sequence(directory: str | Path) -> tuple[list[np.ndarray], list[BBox | None], dict[str, str]]:
    """Load frames (in index order), ground truth, and metadata."""
    directory = Path(directory)
    paths = sorted(directory.glob("*.pgm"))
    if not paths:
        raise ValueError(f"no PGM frames found in {directory}")
    frames = [read_pgm(p) for p in paths]
    gt_path = directory / GROUNDTRUTH_FILE
    boxes = read_groundtruth(gt_path) if gt_path.exists() else []
    meta = read_meta(directory) if (directory / META_FILE).exists() else {}
    return frames, boxes, meta
