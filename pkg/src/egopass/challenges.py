"""Graphical-password challenges built from a timeline: image-arrangement
(restore chronological order) and image-selection (mark yesterday's scenes
that did not recur today), plus answer verification with partial-correctness
scoring.
"""

from __future__ import annotations

import math
import random
import time
from collections import Counter
from dataclasses import dataclass, field
from typing import Iterable, Optional, Sequence

from .errors import ConfigurationError, InsufficientVariationError, InvalidAnswerError
from .timeline import NOISE, Segment, TimelineModel

ARRANGEMENT = "arrangement"
SELECTION = "selection"

SELECTION_MIN_IMAGES = 2
SELECTION_MAX_IMAGES = 8

DAY_TODAY = 0
DAY_YESTERDAY = 1


@dataclass(frozen=True)
class PresentedImage:
    slot: int
    frame_id: int
    day_tag: int


@dataclass
class Challenge:
    """An issued graphical password. ground_truth stays on the server."""

    challenge_id: str
    format: str
    images: list[PresentedImage]
    ground_truth: object  # tuple of slots (arrangement) or frozenset (selection)
    n: int
    k: Optional[int] = None
    issued_at: float = field(default_factory=time.time)

    @property
    def slots(self) -> list[int]:
        return [img.slot for img in self.images]


@dataclass
class ArrangementPolicy:
    n_images: int = 4
    rng_seed: Optional[int] = None

    def __post_init__(self):
        if self.n_images < 2:
            raise ConfigurationError("arrangement needs at least 2 images")


@dataclass(frozen=True)
class AnswerVerdict:
    correct: bool
    similarity: float
    accepted: bool


def _new_challenge_id(rng: random.Random) -> str:
    return f"{rng.getrandbits(64):016x}"


def candidates_for_arrangement(timeline: TimelineModel) -> list[Segment]:
    """Segments usable for an arrangement challenge, chronological order.

    Discarded (noise) segments are dropped, and any cluster that shows up in
    two or more segments is a repetitive scene: all of its segments go,
    because interleaved look-alikes would make the true order ambiguous for
    the user while helping an observer.
    """
    live = timeline.live_segments()
    label_spread = Counter(timeline.cluster_of_segment[idx] for idx, _ in live)
    return [seg for idx, seg in live if label_spread[timeline.cluster_of_segment[idx]] == 1]


def generate_arrangement(
    timeline: TimelineModel,
    policy: ArrangementPolicy,
    day_tag: int = DAY_TODAY,
    now: Optional[float] = None,
) -> Challenge:
    """Sample distinct-scene representatives and shuffle them into slots.

    ground_truth lists the slot indices in true chronological order. The
    presented order is reshuffled if it happens to already be the answer, so
    a shown challenge is never pre-solved.
    """
    candidates = candidates_for_arrangement(timeline)
    if len(candidates) < policy.n_images:
        raise InsufficientVariationError(
            f"only {len(candidates)} candidate scenes for a "
            f"{policy.n_images}-image arrangement"
        )
    rng = random.Random(policy.rng_seed)
    chosen = rng.sample(candidates, policy.n_images)
    # Representative ids follow segment order, which follows the clock.
    chronological = sorted(chosen, key=lambda seg: seg.representative_frame_id)

    order = list(range(policy.n_images))
    identity = tuple(range(policy.n_images))
    while True:
        rng.shuffle(order)
        # order[j] = presented slot of the j-th chronological image
        ground_truth = tuple(order)
        if ground_truth != identity:
            break

    images = [None] * policy.n_images
    for chrono_rank, seg in enumerate(chronological):
        slot = order[chrono_rank]
        images[slot] = PresentedImage(
            slot=slot, frame_id=seg.representative_frame_id, day_tag=day_tag
        )
    return Challenge(
        challenge_id=_new_challenge_id(rng),
        format=ARRANGEMENT,
        images=list(images),
        ground_truth=ground_truth,
        n=policy.n_images,
        issued_at=time.time() if now is None else now,
    )


def _day_exclusive_pools(
    timeline_yesterday: TimelineModel, timeline_today: TimelineModel
) -> tuple[list[int], list[int]]:
    """Representatives of segments whose cluster lives in exactly one day.

    Clusters present in both days are discarded entirely. Repetitive scenes
    within one day are kept: several segments of the same yesterday-only
    cluster all stay in the pool.
    """
    labels_yesterday = {v for v in timeline_yesterday.cluster_of_frame.values() if v != NOISE}
    labels_today = {v for v in timeline_today.cluster_of_frame.values() if v != NOISE}
    yesterday_only = labels_yesterday - labels_today
    today_only = labels_today - labels_yesterday

    valid_pool = [
        seg.representative_frame_id
        for idx, seg in timeline_yesterday.live_segments()
        if timeline_yesterday.cluster_of_segment[idx] in yesterday_only
    ]
    decoy_pool = [
        seg.representative_frame_id
        for idx, seg in timeline_today.live_segments()
        if timeline_today.cluster_of_segment[idx] in today_only
    ]
    return valid_pool, decoy_pool


def generate_selection(
    timeline_yesterday: TimelineModel,
    timeline_today: TimelineModel,
    rng_seed: Optional[int] = None,
    force_n: Optional[int] = None,
    now: Optional[float] = None,
) -> Challenge:
    """Build a "what have you not done today?" grid.

    Both timelines must share one joint clustering (see
    timeline.build_joint_timelines); any cluster seen on both days is
    excluded outright. n is drawn from [2, 8] and k from [1, n-1], both
    clamped to what the pools can actually supply; force_n pins the grid
    size for the hardened eight-image mode.
    """
    valid_pool, decoy_pool = _day_exclusive_pools(timeline_yesterday, timeline_today)
    if not valid_pool or not decoy_pool:
        raise InsufficientVariationError(
            f"selection needs both day-exclusive pools non-empty "
            f"(valid={len(valid_pool)}, decoys={len(decoy_pool)})"
        )
    rng = random.Random(rng_seed)

    n_cap = min(SELECTION_MAX_IMAGES, len(valid_pool) + len(decoy_pool))
    if force_n is not None:
        if not SELECTION_MIN_IMAGES <= force_n <= SELECTION_MAX_IMAGES:
            raise ConfigurationError(f"forced length {force_n} outside [2, 8]")
        if force_n > n_cap:
            raise InsufficientVariationError(
                f"pools support at most {n_cap} images, cannot force {force_n}"
            )
        n = force_n
    else:
        n = rng.randint(SELECTION_MIN_IMAGES, n_cap)

    k_low = max(1, n - len(decoy_pool))
    k_high = min(n - 1, len(valid_pool))
    k = rng.randint(k_low, k_high)

    valids = rng.sample(valid_pool, k)
    decoys = rng.sample(decoy_pool, n - k)
    deck = [(fid, DAY_YESTERDAY) for fid in valids] + [(fid, DAY_TODAY) for fid in decoys]
    rng.shuffle(deck)

    images = [
        PresentedImage(slot=slot, frame_id=fid, day_tag=day) for slot, (fid, day) in enumerate(deck)
    ]
    ground_truth = frozenset(img.slot for img in images if img.day_tag == DAY_YESTERDAY)
    return Challenge(
        challenge_id=_new_challenge_id(rng),
        format=SELECTION,
        images=images,
        ground_truth=ground_truth,
        n=n,
        k=k,
        issued_at=time.time() if now is None else now,
    )


def verify_arrangement(challenge: Challenge, submitted_order: Sequence[int]) -> AnswerVerdict:
    """Exact-match acceptance; positional similarity reported for analytics."""
    if challenge.format != ARRANGEMENT:
        raise InvalidAnswerError(f"challenge {challenge.challenge_id} is not an arrangement")
    if sorted(submitted_order) != sorted(challenge.slots):
        raise InvalidAnswerError(
            f"submitted order {list(submitted_order)} is not a permutation of the slots"
        )
    matches = sum(1 for got, want in zip(submitted_order, challenge.ground_truth) if got == want)
    similarity = matches / challenge.n
    correct = tuple(submitted_order) == challenge.ground_truth
    return AnswerVerdict(correct=correct, similarity=similarity, accepted=correct)


def verify_selection(
    challenge: Challenge, selected_slots: Iterable[int], acceptance_threshold: float = 1.0
) -> AnswerVerdict:
    """Per-slot state matching against the hidden valid set.

    similarity counts slots whose selected/unselected state agrees with the
    ground truth; the configured threshold decides how much partial
    correctness is allowed through.
    """
    if challenge.format != SELECTION:
        raise InvalidAnswerError(f"challenge {challenge.challenge_id} is not a selection")
    selected = set(selected_slots)
    known = set(challenge.slots)
    if not selected <= known:
        raise InvalidAnswerError(f"unknown slot indices {sorted(selected - known)}")
    truth = challenge.ground_truth
    matches = sum(1 for slot in known if (slot in selected) == (slot in truth))
    similarity = matches / challenge.n
    correct = similarity == 1.0
    return AnswerVerdict(
        correct=correct, similarity=similarity, accepted=similarity >= acceptance_threshold
    )


def challenge_space_size(format: str, n: int, k: Optional[int] = None) -> int:
    """Answers an attacker must search blind.

    Arrangement: all n! orders. Selection: with (n, k) hidden, every
    non-empty proper subset of the grid is admissible, 2^n - 2.
    """
    if format == ARRANGEMENT:
        return math.factorial(n)
    if format == SELECTION:
        return 2**n - 2
    raise ConfigurationError(f"unknown challenge format {format!r}")
