import numpy as np
import pytest

from egopass.descriptors import Descriptor
from egopass.errors import InsufficientDataError
from egopass.timeline import (
    DISCARDED,
    NOISE,
    ClusterConfig,
    build_joint_timelines,
    build_timeline,
    compute_threshold,
    dbscan,
    segment,
)

from reference_dbscan import canonical_relabel, reference_dbscan


def descriptors_1d(positions):
    return [Descriptor(frame_id=i, vector=np.array([float(p)])) for i, p in enumerate(positions)]


def descriptors_from(points):
    return [Descriptor(frame_id=i, vector=np.asarray(p, dtype=float)) for i, p in enumerate(points)]


class TestComputeThreshold:
    def test_odd_count_median(self):
        # consecutive distances 1, 2, 9
        assert compute_threshold(descriptors_1d([0, 1, 3, 12])) == 2.0

    def test_all_identical_is_zero(self):
        assert compute_threshold(descriptors_1d([5, 5, 5, 5])) == 0.0

    def test_even_count_averages_middles(self):
        # distances 1, 3
        assert compute_threshold(descriptors_1d([0, 1, 4])) == 2.0

    def test_needs_two(self):
        with pytest.raises(InsufficientDataError):
            compute_threshold(descriptors_1d([1]))


class TestSegment:
    def test_no_boundary_when_all_within(self):
        segs = segment(descriptors_1d([0, 1, 2, 3]), threshold=1.0)
        assert len(segs) == 1
        assert (segs[0].start_frame_id, segs[0].end_frame_id) == (0, 3)

    def test_all_boundaries_when_all_above(self):
        segs = segment(descriptors_1d([0, 10, 20, 30]), threshold=1.0)
        assert len(segs) == 4

    def test_equality_keeps_frames_together(self):
        segs = segment(descriptors_1d([0, 1, 2]), threshold=1.0)
        assert len(segs) == 1

    def test_medoid_representative(self):
        # 0.0, 0.4, 0.5 -> 0.4 minimizes summed distance
        segs = segment(descriptors_1d([0.0, 0.4, 0.5]), threshold=1.0)
        assert segs[0].representative_frame_id == 1

    def test_medoid_tie_prefers_earliest(self):
        segs = segment(descriptors_1d([0.0, 1.0]), threshold=2.0)
        assert segs[0].representative_frame_id == 0

    def test_boundaries_depend_only_on_consecutive_distances(self):
        a = segment(descriptors_1d([0, 1, 9, 10]), threshold=2.0)
        b = segment(descriptors_1d([100, 101, 109, 110]), threshold=2.0)
        spans_a = [(s.start_frame_id, s.end_frame_id) for s in a]
        spans_b = [(s.start_frame_id, s.end_frame_id) for s in b]
        assert spans_a == spans_b == [(0, 1), (2, 3)]


class TestDbscan:
    def test_two_separated_blobs(self):
        rng = np.random.default_rng(0)
        blob_a = rng.normal(0.0, 0.05, size=(5, 2))
        blob_b = rng.normal(10.0, 0.05, size=(5, 2))
        descs = descriptors_from(np.vstack([blob_a, blob_b]))
        labels = dbscan(descs, eps=0.5, min_points=3)
        assert set(labels.values()) == {0, 1}
        assert len({labels[i] for i in range(5)}) == 1
        assert len({labels[i] for i in range(5, 10)}) == 1

    def test_isolated_point_is_noise(self):
        rng = np.random.default_rng(1)
        blob = rng.normal(0.0, 0.05, size=(6, 2))
        descs = descriptors_from(np.vstack([blob, [[50.0, 50.0]]]))
        labels = dbscan(descs, eps=0.5, min_points=3)
        assert labels[6] == NOISE

    def test_matches_bruteforce_reference(self):
        for seed in range(6):
            rng = np.random.default_rng(seed)
            points = rng.uniform(0, 1, size=(100, 2))
            for eps, min_points in ((0.06, 3), (0.1, 5), (0.04, 1)):
                descs = descriptors_from(points)
                mine = [dbscan(descs, eps, min_points)[i] for i in range(len(points))]
                ref = reference_dbscan(points, eps, min_points)
                assert canonical_relabel(mine) == canonical_relabel(ref)

    def test_repeated_runs_bit_identical(self):
        rng = np.random.default_rng(2)
        descs = descriptors_from(rng.uniform(0, 1, size=(60, 3)))
        assert dbscan(descs, 0.2, 3) == dbscan(descs, 0.2, 3)

    def test_order_invariant_up_to_relabeling(self):
        rng = np.random.default_rng(3)
        points = rng.uniform(0, 1, size=(50, 2))
        labels_fwd = [dbscan(descriptors_from(points), 0.1, 3)[i] for i in range(50)]
        perm = rng.permutation(50)
        shuffled = [Descriptor(frame_id=int(i), vector=points[i]) for i in perm]
        labels_perm = dbscan(shuffled, 0.1, 3)
        back = [labels_perm[i] for i in range(50)]
        # same partition: identical co-membership matrix
        fwd = np.array(labels_fwd)
        bk = np.array(back)
        same_fwd = (fwd[:, None] == fwd[None, :]) & (fwd[:, None] != NOISE)
        same_bk = (bk[:, None] == bk[None, :]) & (bk[:, None] != NOISE)
        assert np.array_equal(same_fwd, same_bk)
        assert np.array_equal(fwd == NOISE, bk == NOISE)

    def test_noise_count_monotone_in_eps(self):
        rng = np.random.default_rng(4)
        points = rng.uniform(0, 1, size=(40, 2))
        descs = descriptors_from(points)
        noise_counts = []
        for eps in (0.02, 0.05, 0.1, 0.2, 0.5):
            labels = dbscan(descs, eps, 3)
            noise_counts.append(sum(1 for v in labels.values() if v == NOISE))
        assert noise_counts == sorted(noise_counts, reverse=True)


class TestBuildTimeline:
    def test_recurring_scene_shares_cluster(self):
        # A(5) B(5) A(5): unit steps within scenes (exactly representable,
        # so every within-scene gap is the identical float), big jumps between
        points = (
            [0.0, 1.0, 2.0, 3.0, 4.0]
            + [50.0, 51.0, 52.0, 53.0, 54.0]
            + [0.5, 1.5, 2.5, 3.5, 4.5]
        )
        timeline = build_timeline(descriptors_1d(points), ClusterConfig(min_points=3))
        assert len(timeline.segments) == 3
        labels = timeline.cluster_of_segment
        assert labels[0] == labels[2] != labels[1]
        assert DISCARDED not in labels.values()

    def test_blank_run_discarded_with_min_points_above_count(self):
        # five identical junk frames between two static scenes; min_points = 6
        # exceeds the junk count but not the scenes' sizes
        scene_a = [10.0] * 7
        junk = [500.0] * 5
        scene_b = [1000.0] * 7
        timeline = build_timeline(descriptors_1d(scene_a + junk + scene_b), ClusterConfig(min_points=6))
        assert len(timeline.segments) == 3
        junk_ids = range(7, 12)
        assert all(timeline.cluster_of_frame[i] == NOISE for i in junk_ids)
        assert timeline.cluster_of_segment[1] == DISCARDED
        assert timeline.cluster_of_segment[0] != DISCARDED
        assert timeline.cluster_of_segment[2] != DISCARDED

    def test_eps_override_zero_min_points_one(self):
        points = [0.0, 0.0, 1.0, 2.0, 2.0]
        timeline = build_timeline(
            descriptors_1d(points), ClusterConfig(min_points=1, eps_override=0.0)
        )
        labels = timeline.cluster_of_frame
        assert labels[0] == labels[1]
        assert labels[3] == labels[4]
        assert len({labels[0], labels[2], labels[3]}) == 3

    def test_needs_two_descriptors(self):
        with pytest.raises(InsufficientDataError):
            build_timeline(descriptors_1d([1.0]), ClusterConfig())

    def test_segments_partition_the_sequence(self):
        rng = np.random.default_rng(5)
        points = np.cumsum(rng.uniform(0, 1, size=40))
        timeline = build_timeline(descriptors_1d(points), ClusterConfig())
        spans = [(s.start_frame_id, s.end_frame_id) for s in timeline.segments]
        assert spans[0][0] == 0
        assert spans[-1][1] == 39
        for (_, end), (start, _) in zip(spans, spans[1:]):
            assert start == end + 1
        for seg in timeline.segments:
            assert seg.start_frame_id <= seg.representative_frame_id <= seg.end_frame_id


class TestJointTimelines:
    def test_shared_label_space_across_days(self):
        yesterday = descriptors_1d([0.0, 0.1, 0.2, 50.0, 50.1, 50.2])
        today = descriptors_1d([50.05, 50.15, 50.25, 90.0, 90.1, 90.2])
        timelines = build_joint_timelines({1: yesterday, 0: today}, ClusterConfig(min_points=3))
        # the 50-ish scene appears on both days under one label
        label_y = timelines[1].cluster_of_frame[3]
        label_t = timelines[0].cluster_of_frame[0]
        assert label_y == label_t != NOISE
        assert timelines[1].threshold == timelines[0].threshold

    def test_empty_day_rejected(self):
        with pytest.raises(InsufficientDataError):
            build_joint_timelines({1: [], 0: descriptors_1d([1, 2])}, ClusterConfig())
