import sys
from pathlib import Path

import numpy as np
import pytest

sys.path.insert(0, str(Path(__file__).parent))

from egopass.ingest import Frame, FixationLog, IngestConfig
from egopass.pipeline import run_pipeline_frames, run_two_day_pipeline_frames
from egopass.synth import default_plan, render_plan, two_day_plan


def frame_from(pixels, frame_id=0, timestamp_ms=0, day_tag=0, sharpness=None):
    return Frame(
        frame_id=frame_id,
        timestamp_ms=timestamp_ms,
        day_tag=day_tag,
        pixels=np.asarray(pixels, dtype=np.uint8),
        sharpness=sharpness,
    )


def full_coverage_log(frames):
    return FixationLog(entries=[(0, frames[-1].timestamp_ms + 1)])


@pytest.fixture(scope="session")
def recovery_corpus():
    """The A..F plan with a B recurrence and three junk frames, seed 0."""
    plan = default_plan("ABCDEF", 20, recur="B", junk_after=[0, 2, 4])
    frames_by_day, ground_truth = render_plan(plan, seed=0)
    return plan, frames_by_day[0], ground_truth


@pytest.fixture(scope="session")
def recovery_artifacts(recovery_corpus):
    _, frames, _ = recovery_corpus
    config = IngestConfig(selection_mode="fixation")
    return run_pipeline_frames(frames, full_coverage_log(frames), config)


@pytest.fixture(scope="session")
def two_day_artifacts():
    plan = two_day_plan("ABCDEFG", "HIJKLMN", shared_ids="SZ", frames_per_scene=8)
    frames_by_day, _ = render_plan(plan, seed=7)
    config = IngestConfig(selection_mode="fixation")
    logs = {day: full_coverage_log(frames) for day, frames in frames_by_day.items()}
    return run_two_day_pipeline_frames(frames_by_day, logs, config)
