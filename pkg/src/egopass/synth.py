"""Procedural test corpora with known ground truth.

Each scene renders as a distinct integer-valued texture (differing in both
intensity layout and edge orientation, so census histograms and
edge-orientation histograms both separate scenes). Per-frame variation is
photometric: a seeded global brightness flicker plus a slow brightness ramp
that restarts at each occurrence, over a seeded low-contrast sensor patch
stamped in one corner. Integer brightness shifts change every frame's pixels
while leaving census comparisons and the gradient field exactly unchanged,
so within a scene all consecutive descriptor distances are exactly zero and
every nonzero distance is a real scene cut: the median-distance threshold
separates cuts cleanly and ground-truth boundary checks are exact rather
than statistical.

Junk (blank / washed-out / sensor-static) frames can be injected between
occurrences; each has a distinct appearance so density clustering sees them
as isolated noise rather than as a junk cluster.
"""

from __future__ import annotations

import json
import zlib
from dataclasses import dataclass, field
from pathlib import Path
from typing import Optional

import cv2
import numpy as np

from .errors import ConfigurationError
from .ingest import Frame

TEXTURES = ("stripes", "checker", "blobs", "rings", "bars", "grid")
JUNK_KINDS = ("dark", "washout", "static")

# Corner sensor patch: outer ring stays constant, interior alternates.
PATCH_SIZE = 14
PATCH_GUARD = 2
PATCH_BASE = 128
# Keeps the patch's own gradients safely below the Canny low threshold that
# the anchor marker pins, so the patch never contributes edge pixels.
PATCH_CONTRAST = 3

# High-contrast marker stamped on every scene frame (opposite corner to the
# patch): pins the relative Canny thresholds at the same level for smooth and
# busy textures alike.
ANCHOR_SIZE = 16
ANCHOR_DARK = 16
ANCHOR_BRIGHT = 239

FLICKER_MAX = 4  # +-gray levels of per-frame global flicker
RAMP_MAX = 5  # slow brightness drift within an occurrence
TEXTURE_LOW = 40
TEXTURE_HIGH = 215


@dataclass(frozen=True)
class SceneSpec:
    scene_id: str
    texture: str
    n_frames: int
    day_tag: int = 0


@dataclass
class SyntheticScenePlan:
    """Scene definitions plus the order they play back in.

    playback entries are (scene_id, day_tag); a repeated pair is a recurring
    scene. junk_after lists playback indices that each get one junk frame
    appended (kinds cycle dark, washout, static in listing order).
    """

    scenes: list[SceneSpec]
    playback: list[tuple[str, int]]
    junk_after: list[int] = field(default_factory=list)
    width: int = 320
    height: int = 180
    frame_period_ms: int = 200

    def __post_init__(self):
        if not self.playback:
            raise ConfigurationError("playback order is empty")
        index = {(s.scene_id, s.day_tag) for s in self.scenes}
        if len(index) != len(self.scenes):
            raise ConfigurationError("duplicate (scene_id, day_tag) entries")
        for key in self.playback:
            if tuple(key) not in index:
                raise ConfigurationError(f"playback references unknown scene {key}")
        for idx in self.junk_after:
            if not 0 <= idx < len(self.playback):
                raise ConfigurationError(f"junk_after index {idx} out of range")

    def scene(self, scene_id: str, day_tag: int) -> SceneSpec:
        return next(s for s in self.scenes if s.scene_id == scene_id and s.day_tag == day_tag)

    def days(self) -> list[int]:
        return sorted({day for _, day in self.playback}, reverse=True)


def default_plan(
    scene_ids: str = "ABCDEF",
    frames_per_scene: int = 20,
    recur: Optional[str] = "B",
    junk_after: Optional[list[int]] = None,
) -> SyntheticScenePlan:
    """Single-day plan: each scene once in order, one optional recurrence at
    the end, junk defaulting to three scene boundaries."""
    scenes = [
        SceneSpec(sid, TEXTURES[i % len(TEXTURES)], frames_per_scene)
        for i, sid in enumerate(scene_ids)
    ]
    playback = [(sid, 0) for sid in scene_ids]
    if recur:
        playback.append((recur, 0))
    if junk_after is None:
        junk_after = [0, 2, 4]
    return SyntheticScenePlan(scenes=scenes, playback=playback, junk_after=junk_after)


def _kind_for(scene_id: str) -> str:
    return TEXTURES[zlib.crc32(scene_id.encode()) % len(TEXTURES)]


def two_day_plan(
    yesterday_ids: str = "ABCDEFG",
    today_ids: str = "HIJKLMN",
    shared_ids: str = "S",
    frames_per_scene: int = 12,
) -> SyntheticScenePlan:
    """Two-day plan for selection challenges: day-exclusive scenes on each
    day plus shared scenes that occur on both days (and must never be shown).
    """
    scenes: list[SceneSpec] = []
    playback: list[tuple[str, int]] = []
    for day, ids in ((1, yesterday_ids + shared_ids), (0, today_ids + shared_ids)):
        for sid in ids:
            scenes.append(SceneSpec(sid, _kind_for(sid), frames_per_scene, day_tag=day))
            playback.append((sid, day))
    return SyntheticScenePlan(scenes=scenes, playback=playback)


def _scene_style(scene_id: str) -> dict:
    """Stable per-scene pattern parameters, independent of seed and day."""
    rng = np.random.default_rng(zlib.crc32(scene_id.encode("utf-8")))
    return {
        "angle_deg": float(rng.uniform(0.0, 180.0)),
        "frequency": float(rng.uniform(4.0, 11.0)),
        "phase": float(rng.uniform(0.0, 2 * np.pi)),
        "cell": int(rng.integers(12, 30)),
        "centers": rng.uniform(0.15, 0.85, size=(6, 2)),
    }


_GRID_CACHE: dict[tuple[int, int], tuple[np.ndarray, np.ndarray]] = {}


def _grid(width: int, height: int) -> tuple[np.ndarray, np.ndarray]:
    if (width, height) not in _GRID_CACHE:
        _GRID_CACHE[(width, height)] = np.meshgrid(
            np.arange(width, dtype=np.float64), np.arange(height, dtype=np.float64)
        )
    return _GRID_CACHE[(width, height)]


def _render_base(texture: str, style: dict, width: int, height: int) -> np.ndarray:
    """Integer-valued base pattern for one scene, constant for its lifetime."""
    xs, ys = _grid(width, height)
    lo, hi = float(TEXTURE_LOW), float(TEXTURE_HIGH)
    mid, amp = (lo + hi) / 2.0, (hi - lo) / 2.0
    theta = np.deg2rad(style["angle_deg"])
    axis = xs * np.cos(theta) + ys * np.sin(theta)

    if texture == "stripes":
        img = mid + amp * np.sin(2 * np.pi * style["frequency"] * axis / width + style["phase"])
    elif texture == "bars":
        img = np.where(
            np.sin(2 * np.pi * style["frequency"] * axis / width + style["phase"]) >= 0, hi, lo
        )
    elif texture == "checker":
        cell = style["cell"]
        u = axis + style["phase"] * cell
        v = (ys * np.cos(theta) - xs * np.sin(theta)) + style["phase"] * cell
        img = np.where((u // cell + v // cell) % 2 == 0, hi, lo)
    elif texture == "rings":
        cx, cy = style["centers"][0]
        r = np.hypot(xs - cx * width, ys - cy * height)
        img = mid + amp * np.sin(2 * np.pi * style["frequency"] * r / width + style["phase"])
    elif texture == "blobs":
        img = np.full((height, width), lo)
        sigma = width / 14.0
        for cx, cy in style["centers"]:
            d2 = (xs - cx * width) ** 2 + (ys - cy * height) ** 2
            img = img + (hi - lo) * np.exp(-d2 / (2 * sigma**2))
        img = np.clip(img, lo, hi)
    elif texture == "grid":
        cell = style["cell"]
        u = axis + style["phase"] * cell
        v = (ys * np.cos(theta) - xs * np.sin(theta)) + style["phase"] * cell
        img = np.where((u % cell < cell / 3) | (v % cell < cell / 3), hi, lo)
    else:
        raise ConfigurationError(f"unknown texture kind {texture!r}")
    return np.rint(img).astype(np.int16)


def _sensor_patch(rng: np.random.Generator) -> np.ndarray:
    """Seeded low-contrast interior pattern for the sensor patch."""
    inner = PATCH_SIZE - 2 * PATCH_GUARD
    lo, hi = PATCH_BASE - PATCH_CONTRAST, PATCH_BASE + PATCH_CONTRAST + 1
    return rng.integers(lo, hi, size=(inner, inner), dtype=np.int16)


def _stamp_overlays(base: np.ndarray, patch: np.ndarray) -> np.ndarray:
    img = base.copy()
    img[:PATCH_SIZE, :PATCH_SIZE] = PATCH_BASE
    img[PATCH_GUARD : PATCH_SIZE - PATCH_GUARD, PATCH_GUARD : PATCH_SIZE - PATCH_GUARD] = patch
    half = ANCHOR_SIZE // 2
    img[-ANCHOR_SIZE:, -ANCHOR_SIZE:] = ANCHOR_DARK
    img[-ANCHOR_SIZE:, -half:] = ANCHOR_BRIGHT
    return img


def _finish(img: np.ndarray, shift: int = 0, bounds: Optional[tuple[int, int]] = None) -> np.ndarray:
    lo, hi = bounds if bounds is not None else (int(img.min()), int(img.max()))
    if lo + shift < 0 or hi + shift > 255:
        raise ConfigurationError("synthetic frame escaped the 8-bit range")
    return (img + shift).astype(np.uint8)


def _render_junk(kind: str, width: int, height: int, rng: np.random.Generator) -> np.ndarray:
    if kind == "dark":
        return np.full((height, width), 12, dtype=np.int16)
    if kind == "washout":
        xs, ys = np.meshgrid(np.arange(width), np.arange(height))
        cx, cy = rng.uniform(0.3, 0.7) * width, rng.uniform(0.3, 0.7) * height
        r2 = (xs - cx) ** 2 + (ys - cy) ** 2
        img = 130.0 + 70.0 * np.exp(-r2 / (2 * (width / 2.5) ** 2))
        return np.rint(img).astype(np.int16)
    if kind == "static":
        return rng.integers(0, 256, size=(height, width), dtype=np.int16)
    raise ConfigurationError(f"unknown junk kind {kind!r}")


def render_plan(plan: SyntheticScenePlan, seed: int) -> tuple[dict[int, list[Frame]], dict]:
    """Render the plan in memory.

    Returns frames per day_tag and the ground-truth structure: per-day frame
    records (scene_id or junk flag), occurrence spans, and boundary frame
    ids. Pixel noise (flicker, patch patterns, junk appearance) depends on
    the seed; everything structural does not.
    """
    rng = np.random.default_rng(seed)
    patch = _sensor_patch(rng)
    base_cache: dict[tuple[str, str], tuple[np.ndarray, tuple[int, int]]] = {}

    frames_by_day: dict[int, list[Frame]] = {day: [] for day in plan.days()}
    records: dict[int, list[dict]] = {day: [] for day in plan.days()}
    occurrences: dict[int, list[dict]] = {day: [] for day in plan.days()}

    def emit(day: int, pixels: np.ndarray, scene_id: Optional[str]) -> None:
        day_frames = frames_by_day[day]
        frame_id = len(day_frames)
        day_frames.append(
            Frame(
                frame_id=frame_id,
                timestamp_ms=frame_id * plan.frame_period_ms,
                day_tag=day,
                pixels=pixels,
            )
        )
        records[day].append(
            {"frame_id": frame_id, "scene_id": scene_id, "junk": scene_id is None}
        )

    junk_counter = 0
    for play_idx, (scene_id, day) in enumerate(plan.playback):
        spec = plan.scene(scene_id, day)
        key = (scene_id, spec.texture)
        if key not in base_cache:
            stamped = _stamp_overlays(
                _render_base(spec.texture, _scene_style(scene_id), plan.width, plan.height),
                patch,
            )
            base_cache[key] = (stamped, (int(stamped.min()), int(stamped.max())))
        base, bounds = base_cache[key]
        start = len(frames_by_day[day])
        for local in range(spec.n_frames):
            flicker = int(rng.integers(-FLICKER_MAX, FLICKER_MAX + 1))
            ramp = min(RAMP_MAX, local // 4)
            emit(day, _finish(base, flicker + ramp, bounds), scene_id)
        occurrences[day].append(
            {"scene_id": scene_id, "start": start, "end": len(frames_by_day[day]) - 1}
        )
        for _ in range(plan.junk_after.count(play_idx)):
            kind = JUNK_KINDS[junk_counter % len(JUNK_KINDS)]
            junk_counter += 1
            emit(day, _finish(_render_junk(kind, plan.width, plan.height, rng)), None)

    ground_truth = {
        "width": plan.width,
        "height": plan.height,
        "frame_period_ms": plan.frame_period_ms,
        "days": {
            str(day): {
                "frames": records[day],
                "occurrences": occurrences[day],
                "boundaries": [occ["start"] for occ in occurrences[day][1:]],
            }
            for day in plan.days()
        },
    }
    return frames_by_day, ground_truth


def make_synthetic_corpus(plan: SyntheticScenePlan, seed: int, out_dir: str | Path) -> dict:
    """Render the plan to disk: one `day<d>/` frame directory per day (PNG
    frames, index.tsv timestamps, full-coverage fixations.csv) plus the
    ground-truth JSON. Returns {"days": {day: dir}, "ground_truth": path}."""
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    frames_by_day, ground_truth = render_plan(plan, seed)

    day_dirs = {}
    for day, frames in frames_by_day.items():
        day_dir = out / f"day{day}"
        day_dir.mkdir(exist_ok=True)
        index_lines = []
        for frame in frames:
            cv2.imwrite(str(day_dir / f"{frame.frame_id:06d}.png"), frame.pixels)
            index_lines.append(f"{frame.frame_id}\t{frame.timestamp_ms}")
        (day_dir / "index.tsv").write_text("\n".join(index_lines) + "\n")
        span = frames[-1].timestamp_ms + plan.frame_period_ms
        (day_dir / "fixations.csv").write_text("timestamp_ms,duration_ms\n" + f"0,{span}\n")
        day_dirs[day] = day_dir

    gt_path = out / "ground_truth.json"
    gt_path.write_text(json.dumps(ground_truth, sort_keys=True, indent=1) + "\n")
    return {"days": day_dirs, "ground_truth": gt_path}
