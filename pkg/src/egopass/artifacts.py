"""Serialization of pipeline outputs: descriptor matrix, PCA model, timeline.

Writers are deterministic (fixed float formatting, sorted keys) so a rerun
with the same seed and config produces byte-identical files.
"""

from __future__ import annotations

import json
from pathlib import Path

import numpy as np

from .descriptors import Descriptor, PcaModel
from .timeline import Segment, TimelineModel


def write_descriptor_matrix(path: str | Path, descriptors: list[Descriptor]) -> None:
    """Textual matrix: header `n_frames n_components`, then one line per
    frame holding its frame_id and the row-major vector values."""
    n = len(descriptors)
    m = len(descriptors[0].vector) if n else 0
    lines = [f"{n} {m}"]
    for d in descriptors:
        values = " ".join(f"{v:.17g}" for v in d.vector)
        lines.append(f"{d.frame_id}\t{values}")
    Path(path).write_text("\n".join(lines) + "\n")


def read_descriptor_matrix(path: str | Path) -> list[Descriptor]:
    lines = Path(path).read_text().splitlines()
    n, m = (int(x) for x in lines[0].split())
    descriptors = []
    for line in lines[1 : n + 1]:
        frame_id, values = line.split("\t")
        vector = np.array([float(v) for v in values.split()], dtype=np.float64)
        if vector.shape[0] != m:
            raise ValueError(f"descriptor row for frame {frame_id} has {vector.shape[0]} values")
        descriptors.append(Descriptor(frame_id=int(frame_id), vector=vector))
    return descriptors


def write_pca_model(path: str | Path, model: PcaModel) -> None:
    np.savez(
        path,
        mean=model.mean,
        components=model.components,
        explained_variance=model.explained_variance,
    )


def read_pca_model(path: str | Path) -> PcaModel:
    data = np.load(path)
    components = data["components"]
    return PcaModel(
        mean=data["mean"],
        components=components,
        n_components=components.shape[0],
        explained_variance=data["explained_variance"],
    )


def timeline_to_dict(timeline: TimelineModel) -> dict:
    return {
        "threshold": timeline.threshold,
        "min_points": timeline.min_points,
        "segments": [
            {
                "start": seg.start_frame_id,
                "end": seg.end_frame_id,
                "representative": seg.representative_frame_id,
                "cluster": timeline.cluster_of_segment[idx],
            }
            for idx, seg in enumerate(timeline.segments)
        ],
        "frame_clusters": [
            [fid, timeline.cluster_of_frame[fid]] for fid in sorted(timeline.cluster_of_frame)
        ],
    }


def timeline_from_dict(data: dict) -> TimelineModel:
    segments = [
        Segment(
            start_frame_id=item["start"],
            end_frame_id=item["end"],
            representative_frame_id=item["representative"],
        )
        for item in data["segments"]
    ]
    return TimelineModel(
        threshold=data["threshold"],
        segments=segments,
        cluster_of_frame={fid: label for fid, label in data["frame_clusters"]},
        cluster_of_segment={i: item["cluster"] for i, item in enumerate(data["segments"])},
        min_points=data["min_points"],
    )


def write_timeline(path: str | Path, timeline: TimelineModel) -> None:
    Path(path).write_text(json.dumps(timeline_to_dict(timeline), sort_keys=True, indent=1) + "\n")


def read_timeline(path: str | Path) -> TimelineModel:
    return timeline_from_dict(json.loads(Path(path).read_text()))


def write_candidates(path: str | Path, candidates: list[Segment]) -> None:
    payload = [
        {
            "start": seg.start_frame_id,
            "end": seg.end_frame_id,
            "representative": seg.representative_frame_id,
        }
        for seg in candidates
    ]
    Path(path).write_text(json.dumps(payload, sort_keys=True, indent=1) + "\n")
