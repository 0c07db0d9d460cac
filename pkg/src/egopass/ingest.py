"""Frame loading, perceptual sharpness scoring, and key-frame selection.

Frames come in as a directory of grayscale-converted images; key frames go
out either wherever an eye fixation was logged or, without an eye camera,
wherever the frame is at least as sharp as the corpus median.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass, field
from pathlib import Path
from typing import Optional

import cv2
import numpy as np

from .errors import (
    ConfigurationError,
    CorpusEmptyError,
    DegenerateInputError,
    FrameReadError,
)

FRAME_SUFFIXES = (".png", ".jpg", ".jpeg")

# Support of the uniform low-pass used by the sharpness estimator.
BLUR_TAPS = 9


@dataclass
class Frame:
    """One timestamped grayscale video frame.

    sharpness is filled lazily by the blur-median key-frame filter; it stays
    None until someone scores the frame.
    """

    frame_id: int
    timestamp_ms: int
    day_tag: int
    pixels: np.ndarray  # uint8, shape (height, width)
    sharpness: Optional[float] = None
    has_fixation: bool = False


@dataclass
class FixationLog:
    """Fixation intervals as (timestamp_ms, duration_ms), sorted by start."""

    entries: list[tuple[int, int]] = field(default_factory=list)

    def __post_init__(self):
        for _, duration in self.entries:
            if duration <= 0:
                raise ConfigurationError("fixation duration_ms must be > 0")
        starts = [t for t, _ in self.entries]
        if starts != sorted(starts):
            raise ConfigurationError("fixation entries must be sorted by timestamp_ms")

    def covers(self, timestamp_ms: int) -> bool:
        """Closed-interval membership test against any logged fixation."""
        return any(t <= timestamp_ms <= t + d for t, d in self.entries)

    @classmethod
    def from_csv(cls, path: str | Path) -> "FixationLog":
        with open(path, newline="") as fh:
            reader = csv.DictReader(fh)
            entries = [(int(row["timestamp_ms"]), int(row["duration_ms"])) for row in reader]
        return cls(entries=entries)


@dataclass
class IngestConfig:
    working_width: int = 320
    working_height: int = 180
    selection_mode: str = "blur_median"  # or "fixation"
    day_tag: int = 0
    fps: float = 5.0  # timestamp fallback when no sidecar index exists

    def __post_init__(self):
        if self.working_width <= 0 or self.working_height <= 0:
            raise ConfigurationError("working resolution must be positive")
        if self.selection_mode not in ("fixation", "blur_median"):
            raise ConfigurationError(f"unknown selection_mode {self.selection_mode!r}")
        if self.fps <= 0:
            raise ConfigurationError("fps must be positive")


def _read_sidecar_index(directory: Path) -> dict[int, int]:
    """Parse index.tsv lines of `frame_id<TAB>timestamp_ms`."""
    timestamps: dict[int, int] = {}
    index_path = directory / "index.tsv"
    if not index_path.exists():
        return timestamps
    for line in index_path.read_text().splitlines():
        line = line.strip()
        if not line or line.startswith("#"):
            continue
        frame_id, timestamp_ms = line.split("\t")
        timestamps[int(frame_id)] = int(timestamp_ms)
    return timestamps


def load_frames(directory_path: str | Path, config: IngestConfig) -> list[Frame]:
    """Load a frame directory into grayscale frames at the working resolution.

    Files are taken in lexicographic order and re-indexed 0..n-1 in that
    order. Timestamps come from an optional index.tsv sidecar; missing
    entries fall back to uniform spacing at config.fps.

    Raises CorpusEmptyError for an empty directory and FrameReadError for
    any file that cannot be decoded.
    """
    directory = Path(directory_path)
    if not directory.is_dir():
        raise CorpusEmptyError(f"not a directory: {directory}")
    paths = sorted(p for p in directory.iterdir() if p.suffix.lower() in FRAME_SUFFIXES)
    if not paths:
        raise CorpusEmptyError(f"no frame images in {directory}")

    sidecar = _read_sidecar_index(directory)
    step_ms = 1000.0 / config.fps
    size = (config.working_width, config.working_height)

    frames = []
    for frame_id, path in enumerate(paths):
        pixels = cv2.imread(str(path), cv2.IMREAD_GRAYSCALE)  # BT.601 luma
        if pixels is None:
            raise FrameReadError(path, "imread returned no data")
        if (pixels.shape[1], pixels.shape[0]) != size:
            pixels = cv2.resize(pixels, size, interpolation=cv2.INTER_LINEAR)
        timestamp_ms = sidecar.get(frame_id, int(round(frame_id * step_ms)))
        frames.append(
            Frame(
                frame_id=frame_id,
                timestamp_ms=timestamp_ms,
                day_tag=config.day_tag,
                pixels=pixels,
            )
        )
    return frames


def score_sharpness(frame: Frame) -> float:
    """Perceptual sharpness in [0, 1] via the blur-spread estimate.

    A strong 9-tap uniform low-pass is applied along each axis; the share of
    neighboring-pixel variation that survives re-blurring is high for sharp
    content and near zero for content that was already blurred. The worse
    (blurrier) axis wins, and the result is flipped so 1 means sharp.

    A constant frame has no variation to lose and scores 0 by convention.
    """
    pixels = frame.pixels
    if pixels.shape[0] < BLUR_TAPS or pixels.shape[1] < BLUR_TAPS:
        raise DegenerateInputError(
            f"frame {frame.frame_id} is {pixels.shape[1]}x{pixels.shape[0]}, "
            f"smaller than the {BLUR_TAPS}-tap filter support"
        )
    f = pixels.astype(np.float64)
    blurred_ver = cv2.blur(f, (1, BLUR_TAPS))  # vertical low-pass
    blurred_hor = cv2.blur(f, (BLUR_TAPS, 1))  # horizontal low-pass

    d_f_ver = np.abs(np.diff(f, axis=0))
    d_f_hor = np.abs(np.diff(f, axis=1))
    d_b_ver = np.abs(np.diff(blurred_ver, axis=0))
    d_b_hor = np.abs(np.diff(blurred_hor, axis=1))

    # Variation destroyed by the low-pass, per axis.
    v_ver = np.maximum(0.0, d_f_ver - d_b_ver)
    v_hor = np.maximum(0.0, d_f_hor - d_b_hor)

    s_f_ver = float(d_f_ver.sum())
    s_f_hor = float(d_f_hor.sum())
    if s_f_ver == 0.0 or s_f_hor == 0.0:
        return 0.0
    blur_ver = (s_f_ver - float(v_ver.sum())) / s_f_ver
    blur_hor = (s_f_hor - float(v_hor.sum())) / s_f_hor
    blur = max(blur_ver, blur_hor)
    return float(min(1.0, max(0.0, 1.0 - blur)))


def select_keyframes(
    frames: list[Frame],
    fixations: Optional[FixationLog],
    config: IngestConfig,
) -> list[Frame]:
    """Reduce a frame sequence to its key frames.

    fixation mode keeps frames whose timestamp falls inside any logged
    fixation interval; blur_median keeps frames whose sharpness is at least
    the median sharpness of the whole sequence. Order and identity are
    preserved; at least one frame must survive.
    """
    if not frames:
        raise CorpusEmptyError("no frames to select from")

    if config.selection_mode == "fixation":
        if fixations is None:
            raise ConfigurationError("fixation selection_mode requires a fixation log")
        kept = []
        for frame in frames:
            if fixations.covers(frame.timestamp_ms):
                frame.has_fixation = True
                kept.append(frame)
    else:
        for frame in frames:
            if frame.sharpness is None:
                frame.sharpness = score_sharpness(frame)
        median = float(np.median([frame.sharpness for frame in frames]))
        kept = [frame for frame in frames if frame.sharpness >= median]

    if not kept:
        raise CorpusEmptyError(
            f"{config.selection_mode} selection removed all {len(frames)} frames"
        )
    return kept
