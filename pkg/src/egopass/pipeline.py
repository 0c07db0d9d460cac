"""End-to-end orchestration: frames in, timeline and challenge pools out.

The single-day path feeds arrangement challenges; the two-day path fits one
shared feature space over both days and clusters their union so selection
challenges can tell day-exclusive scenes from recurring ones.
"""

from __future__ import annotations

from dataclasses import dataclass
from pathlib import Path
from typing import Optional

from . import artifacts
from .challenges import candidates_for_arrangement
from .descriptors import (
    Descriptor,
    DescriptorConfig,
    PcaModel,
    extract_raw_descriptors,
    featurize_corpus,
    fit_pca,
    project,
)
from .ingest import Frame, FixationLog, IngestConfig, load_frames, select_keyframes
from .timeline import (
    NOISE,
    ClusterConfig,
    Segment,
    TimelineModel,
    build_joint_timelines,
    build_timeline,
)


@dataclass
class PipelineArtifacts:
    frames: list[Frame]
    keyframes: list[Frame]
    pca: PcaModel
    descriptors: list[Descriptor]
    timeline: TimelineModel
    candidates: list[Segment]

    def summary(self) -> dict:
        noise_frames = sum(1 for v in self.timeline.cluster_of_frame.values() if v == NOISE)
        clusters = {v for v in self.timeline.cluster_of_frame.values() if v != NOISE}
        return {
            "frames": len(self.frames),
            "keyframes": len(self.keyframes),
            "segments": len(self.timeline.segments),
            "clusters": len(clusters),
            "noise_frames": noise_frames,
            "arrangement_candidates": len(self.candidates),
        }


@dataclass
class TwoDayArtifacts:
    frames_by_day: dict[int, list[Frame]]
    keyframes_by_day: dict[int, list[Frame]]
    pca: PcaModel
    descriptors_by_day: dict[int, list[Descriptor]]
    timelines: dict[int, TimelineModel]


def run_pipeline_frames(
    frames: list[Frame],
    fixations: Optional[FixationLog],
    ingest_config: IngestConfig,
    descriptor_config: Optional[DescriptorConfig] = None,
    cluster_config: Optional[ClusterConfig] = None,
) -> PipelineArtifacts:
    """Run selection, featurization, and timeline building on loaded frames."""
    descriptor_config = descriptor_config or DescriptorConfig()
    cluster_config = cluster_config or ClusterConfig()
    keyframes = select_keyframes(frames, fixations, ingest_config)
    pca, descriptors = featurize_corpus(keyframes, descriptor_config)
    timeline = build_timeline(descriptors, cluster_config)
    return PipelineArtifacts(
        frames=frames,
        keyframes=keyframes,
        pca=pca,
        descriptors=descriptors,
        timeline=timeline,
        candidates=candidates_for_arrangement(timeline),
    )


def run_pipeline(
    frames_dir: str | Path,
    fixations_path: Optional[str | Path],
    ingest_config: IngestConfig,
    descriptor_config: Optional[DescriptorConfig] = None,
    cluster_config: Optional[ClusterConfig] = None,
    out_dir: Optional[str | Path] = None,
) -> PipelineArtifacts:
    """Disk-to-artifacts variant of run_pipeline_frames.

    When out_dir is given, writes descriptors.tsv, pca_model.npz,
    timeline.json, and candidates.json there.
    """
    frames = load_frames(frames_dir, ingest_config)
    fixations = FixationLog.from_csv(fixations_path) if fixations_path else None
    result = run_pipeline_frames(
        frames, fixations, ingest_config, descriptor_config, cluster_config
    )
    if out_dir is not None:
        out = Path(out_dir)
        out.mkdir(parents=True, exist_ok=True)
        artifacts.write_descriptor_matrix(out / "descriptors.tsv", result.descriptors)
        artifacts.write_pca_model(out / "pca_model.npz", result.pca)
        artifacts.write_timeline(out / "timeline.json", result.timeline)
        artifacts.write_candidates(out / "candidates.json", result.candidates)
    return result


def run_two_day_pipeline_frames(
    frames_by_day: dict[int, list[Frame]],
    fixations_by_day: dict[int, Optional[FixationLog]],
    ingest_config: IngestConfig,
    descriptor_config: Optional[DescriptorConfig] = None,
    cluster_config: Optional[ClusterConfig] = None,
) -> TwoDayArtifacts:
    """Two-day variant: one PCA fit over the union of both days' keyframes,
    one joint clustering, per-day timelines in a shared label space."""
    descriptor_config = descriptor_config or DescriptorConfig()
    cluster_config = cluster_config or ClusterConfig()
    days = sorted(frames_by_day, reverse=True)  # yesterday first

    keyframes_by_day = {}
    raw_by_day = {}
    for day in days:
        keyframes = select_keyframes(frames_by_day[day], fixations_by_day.get(day), ingest_config)
        keyframes_by_day[day] = keyframes
        raw_by_day[day] = extract_raw_descriptors(keyframes, descriptor_config)

    pooled = [vec for day in days for vec in raw_by_day[day]]
    pca = fit_pca(pooled, descriptor_config.n_components)
    descriptors_by_day = {
        day: [
            Descriptor(frame_id=frame.frame_id, vector=project(pca, vec))
            for frame, vec in zip(keyframes_by_day[day], raw_by_day[day])
        ]
        for day in days
    }
    timelines = build_joint_timelines(descriptors_by_day, cluster_config)
    return TwoDayArtifacts(
        frames_by_day=frames_by_day,
        keyframes_by_day=keyframes_by_day,
        pca=pca,
        descriptors_by_day=descriptors_by_day,
        timelines=timelines,
    )


def run_two_day_pipeline(
    dirs_by_day: dict[int, str | Path],
    fixations_by_day: dict[int, Optional[str | Path]],
    ingest_config: IngestConfig,
    descriptor_config: Optional[DescriptorConfig] = None,
    cluster_config: Optional[ClusterConfig] = None,
) -> TwoDayArtifacts:
    frames_by_day = {}
    logs_by_day = {}
    for day, directory in dirs_by_day.items():
        day_config = IngestConfig(
            working_width=ingest_config.working_width,
            working_height=ingest_config.working_height,
            selection_mode=ingest_config.selection_mode,
            day_tag=day,
            fps=ingest_config.fps,
        )
        frames_by_day[day] = load_frames(directory, day_config)
        path = fixations_by_day.get(day)
        logs_by_day[day] = FixationLog.from_csv(path) if path else None
    return run_two_day_pipeline_frames(
        frames_by_day, logs_by_day, ingest_config, descriptor_config, cluster_config
    )
