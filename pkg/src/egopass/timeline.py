"""Temporal structure of a descriptor sequence: segments split at the
personalized distance threshold, density clusters over the same threshold,
and the per-segment labels that mark repetitive scenes and noise.
"""

from __future__ import annotations

from collections import Counter, deque
from dataclasses import dataclass
from typing import Optional

import numpy as np

from .descriptors import Descriptor
from .errors import ConfigurationError, InsufficientDataError

# Label for frames no density cluster reaches, and for segments whose
# majority is such frames.
NOISE = -1
DISCARDED = -1

_UNVISITED = -2


@dataclass
class Segment:
    start_frame_id: int
    end_frame_id: int
    representative_frame_id: int


@dataclass
class ClusterConfig:
    min_points: int = 3
    eps_override: Optional[float] = None

    def __post_init__(self):
        if self.min_points < 1:
            raise ConfigurationError("min_points must be >= 1")


@dataclass
class TimelineModel:
    threshold: float
    segments: list[Segment]
    cluster_of_frame: dict[int, int]
    cluster_of_segment: dict[int, int]
    min_points: int = 3

    def segment_label(self, index: int) -> int:
        return self.cluster_of_segment[index]

    def live_segments(self) -> list[tuple[int, Segment]]:
        """Segments that were not discarded as noise, with their indices."""
        return [
            (i, seg)
            for i, seg in enumerate(self.segments)
            if self.cluster_of_segment[i] != DISCARDED
        ]


def _matrix(descriptors: list[Descriptor]) -> np.ndarray:
    return np.asarray([d.vector for d in descriptors], dtype=np.float64)


def consecutive_distances(descriptors: list[Descriptor]) -> np.ndarray:
    vectors = _matrix(descriptors)
    return np.linalg.norm(np.diff(vectors, axis=0), axis=1)


def compute_threshold(descriptors: list[Descriptor]) -> float:
    """Median Euclidean distance between consecutive descriptors.

    One distance per adjacent pair keeps this O(n); an even count of pairs
    takes the mean of the two middle values.
    """
    if len(descriptors) < 2:
        raise InsufficientDataError("threshold needs at least 2 descriptors")
    return float(np.median(consecutive_distances(descriptors)))


def segment(descriptors: list[Descriptor], threshold: float) -> list[Segment]:
    """Split the sequence wherever a consecutive distance exceeds threshold.

    Equal-to-threshold pairs stay together. Each segment's representative is
    its medoid (earliest frame on ties).
    """
    if not descriptors:
        return []
    vectors = _matrix(descriptors)
    gaps = np.linalg.norm(np.diff(vectors, axis=0), axis=1) > threshold
    starts = [0] + [i + 1 for i in np.nonzero(gaps)[0]]
    ends = [s - 1 for s in starts[1:]] + [len(descriptors) - 1]

    segments = []
    for a, b in zip(starts, ends):
        block = vectors[a : b + 1]
        diffs = block[:, None, :] - block[None, :, :]
        cost = np.sqrt((diffs**2).sum(axis=2)).sum(axis=1)
        medoid = a + int(np.argmin(cost))
        segments.append(
            Segment(
                start_frame_id=descriptors[a].frame_id,
                end_frame_id=descriptors[b].frame_id,
                representative_frame_id=descriptors[medoid].frame_id,
            )
        )
    return segments


def _dbscan_labels(points: np.ndarray, eps: float, min_points: int) -> np.ndarray:
    """Classic density clustering over a point matrix, scanning in row order.

    A point is core when at least min_points points (itself included) lie
    within eps. Clusters are grown one at a time with a FIFO queue, so a
    border point reachable from several clusters always keeps the
    lowest-numbered one and repeated runs are bit-identical.
    """
    n = len(points)
    if n == 0:
        return np.empty(0, dtype=np.intp)
    # Full distance matrix: corpora here are hundreds of frames, not millions.
    sq = ((points[:, None, :] - points[None, :, :]) ** 2).sum(axis=2)
    within = sq <= eps * eps
    neighbor_counts = within.sum(axis=1)
    core = neighbor_counts >= min_points

    labels = np.full(n, _UNVISITED, dtype=np.intp)
    cluster = 0
    for i in range(n):
        if labels[i] != _UNVISITED:
            continue
        if not core[i]:
            labels[i] = NOISE
            continue
        labels[i] = cluster
        queue = deque(np.nonzero(within[i])[0].tolist())
        while queue:
            j = queue.popleft()
            if labels[j] == NOISE:
                labels[j] = cluster  # border point claimed by this cluster
            if labels[j] != _UNVISITED:
                continue
            labels[j] = cluster
            if core[j]:
                queue.extend(np.nonzero(within[j])[0].tolist())
        cluster += 1
    return labels


def dbscan(descriptors: list[Descriptor], eps: float, min_points: int) -> dict[int, int]:
    """Frame-keyed cluster labels; unreachable low-density frames get NOISE."""
    if eps < 0:
        raise ConfigurationError("eps must be >= 0")
    if min_points < 1:
        raise ConfigurationError("min_points must be >= 1")
    labels = _dbscan_labels(_matrix(descriptors), eps, min_points)
    return {d.frame_id: int(label) for d, label in zip(descriptors, labels)}


def _majority_label(labels: list[int]) -> int:
    counts = Counter(labels)
    best = max(counts.values())
    # Ties break toward the smaller value, so NOISE (-1) wins a tied segment.
    return min(label for label, count in counts.items() if count == best)


def _segment_labels(
    segments: list[Segment],
    descriptors: list[Descriptor],
    cluster_of_frame: dict[int, int],
) -> dict[int, int]:
    by_frame = {d.frame_id: cluster_of_frame[d.frame_id] for d in descriptors}
    ordered_ids = [d.frame_id for d in descriptors]
    result = {}
    position = {fid: i for i, fid in enumerate(ordered_ids)}
    for idx, seg in enumerate(segments):
        a, b = position[seg.start_frame_id], position[seg.end_frame_id]
        majority = _majority_label([by_frame[fid] for fid in ordered_ids[a : b + 1]])
        result[idx] = DISCARDED if majority == NOISE else majority
    return result


def build_timeline(descriptors: list[Descriptor], config: ClusterConfig) -> TimelineModel:
    """Segment and cluster one day's descriptor sequence.

    Segmentation and clustering share one threshold (the consecutive-distance
    median, unless overridden). Segments take the majority label of their
    frames; a noise-majority segment is discarded as non-informative.
    """
    if len(descriptors) < 2:
        raise InsufficientDataError("timeline needs at least 2 descriptors")
    threshold = (
        config.eps_override if config.eps_override is not None else compute_threshold(descriptors)
    )
    segments = segment(descriptors, threshold)
    cluster_of_frame = dbscan(descriptors, threshold, config.min_points)
    cluster_of_segment = _segment_labels(segments, descriptors, cluster_of_frame)
    return TimelineModel(
        threshold=float(threshold),
        segments=segments,
        cluster_of_frame=cluster_of_frame,
        cluster_of_segment=cluster_of_segment,
        min_points=config.min_points,
    )


def build_joint_timelines(
    descriptors_by_day: dict[int, list[Descriptor]], config: ClusterConfig
) -> dict[int, TimelineModel]:
    """Per-day timelines over one shared clustering of all days' frames.

    Needed by selection challenges: a scene must keep the same cluster label
    whichever day it shows up in, so the clusters run over the union of all
    frames. The shared threshold is the median of within-day consecutive
    distances pooled across days (the day seam is not a real adjacency).
    Days play back in decreasing day_tag order (yesterday before today).
    """
    if not descriptors_by_day:
        raise InsufficientDataError("no days supplied")
    days = sorted(descriptors_by_day, reverse=True)
    for day in days:
        if not descriptors_by_day[day]:
            raise InsufficientDataError(f"day {day} has no descriptors")

    if config.eps_override is not None:
        threshold = config.eps_override
    else:
        pooled = [
            gap
            for day in days
            if len(descriptors_by_day[day]) >= 2
            for gap in consecutive_distances(descriptors_by_day[day])
        ]
        if not pooled:
            raise InsufficientDataError("need at least one consecutive pair to set a threshold")
        threshold = float(np.median(pooled))

    joint = [d for day in days for d in descriptors_by_day[day]]
    labels = _dbscan_labels(_matrix(joint), threshold, config.min_points)

    timelines = {}
    offset = 0
    for day in days:
        day_descriptors = descriptors_by_day[day]
        day_labels = labels[offset : offset + len(day_descriptors)]
        offset += len(day_descriptors)
        cluster_of_frame = {
            d.frame_id: int(label) for d, label in zip(day_descriptors, day_labels)
        }
        segments = segment(day_descriptors, threshold)
        timelines[day] = TimelineModel(
            threshold=threshold,
            segments=segments,
            cluster_of_frame=cluster_of_frame,
            cluster_of_segment=_segment_labels(segments, day_descriptors, cluster_of_frame),
            min_points=config.min_points,
        )
    return timelines
