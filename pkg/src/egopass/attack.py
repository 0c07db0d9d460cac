"""Attacker simulators for the threat model: random guessers, fixed-pattern
guessers, and informed adversaries modeled by a pairwise-order prior. Each
trial drives a real login session against the service (in-process by
default, over HTTP for blind profiles) and records effort: attempts,
simulated entry time, clicks.

A legitimate user is the informed attacker with a perfect prior; comparing
its effort to the adversaries' is what makes effort-threshold attack
detection meaningful.
"""

from __future__ import annotations

import random
import statistics
from dataclasses import dataclass, field
from typing import Optional

from .challenges import ARRANGEMENT, SELECTION
from .errors import ConfigurationError
from .service import (
    OUTCOME_ACCEPTED,
    OUTCOME_NEW_CHALLENGE,
    OUTCOME_RETRY,
    AuthService,
)

KINDS = ("random", "fixed_pattern", "informed")


@dataclass
class AttackerProfile:
    kind: str
    knowledge: Optional[float] = None  # P(correct pairwise order), informed only

    def __post_init__(self):
        if self.kind not in KINDS:
            raise ConfigurationError(f"unknown attacker kind {self.kind!r}")
        if self.kind == "informed":
            if self.knowledge is None or not 0.5 <= self.knowledge <= 1.0:
                raise ConfigurationError("informed attacker needs knowledge in [0.5, 1]")

    @classmethod
    def oracle(cls) -> "AttackerProfile":
        """A legitimate user: perfect knowledge of their own timeline."""
        return cls(kind="informed", knowledge=1.0)


@dataclass
class LatencyModel:
    """Per-attempt think-and-act latency, simulated (no wall-clock sleeps)."""

    mean_s: float = 2.0
    std_s: float = 0.5

    def draw(self, rng: random.Random) -> float:
        return max(0.05, rng.gauss(self.mean_s, self.std_s))


@dataclass
class EffortStats:
    trials: int
    attempts: list[int] = field(default_factory=list)
    entry_times_s: list[float] = field(default_factory=list)
    clicks: list[int] = field(default_factory=list)
    successes: int = 0
    total_attempts: int = 0

    @property
    def mean_attempts(self) -> float:
        return statistics.mean(self.attempts)

    @property
    def std_attempts(self) -> float:
        return statistics.pstdev(self.attempts)

    @property
    def mean_entry_s(self) -> float:
        return statistics.mean(self.entry_times_s)

    @property
    def std_entry_s(self) -> float:
        return statistics.pstdev(self.entry_times_s)

    @property
    def success_rate(self) -> float:
        return self.successes / self.trials

    @property
    def per_attempt_success_rate(self) -> float:
        return self.successes / self.total_attempts

    def table(self) -> str:
        lines = [
            f"trials                {self.trials}",
            f"entry time (seconds)  {self.mean_entry_s:.2f} ({self.std_entry_s:.2f})",
            f"number of attempts    {self.mean_attempts:.2f} ({self.std_attempts:.2f})",
            f"success rate          {self.success_rate:.4f}",
            f"per-attempt success   {self.per_attempt_success_rate:.6f}",
        ]
        if self.clicks:
            lines.insert(3, f"number of clicks      {statistics.mean(self.clicks):.2f}")
        return "\n".join(lines)


def _noisy_sort(items: list, rank: dict, accuracy: float, rng: random.Random) -> list:
    """Insertion sort with a comparator that tells the truth with
    probability `accuracy` per query; at 1.0 this is a perfect recall."""
    ordered: list = []
    for item in items:
        lo, hi = 0, len(ordered)
        while lo < hi:
            mid = (lo + hi) // 2
            truth = rank[item] < rank[ordered[mid]]
            belief = truth if rng.random() < accuracy else not truth
            if belief:
                hi = mid
            else:
                lo = mid + 1
        ordered.insert(lo, item)
    return ordered


class InProcessHarness:
    """Runs login sessions straight against an AuthService instance.

    Informed profiles peek at the hidden answer through the service's
    challenge table; that is the simulation of an adversary who watched the
    user, not a hole in the wire protocol.
    """

    def __init__(
        self,
        service: AuthService,
        format: str = ARRANGEMENT,
        force_length: Optional[int] = None,
        device_id: str = "sim-device",
        prune: bool = True,
    ):
        self.service = service
        self.format = format
        self.force_length = force_length
        self.prune = prune
        self.secret = service.pair(device_id, service.pairing_code).shared_secret
        self.device_id = device_id

    def open_session(self):
        login = self.service.request_login(
            self.device_id,
            self.secret,
            format=self.format,
            force_length=self.force_length,
        )
        if login["outcome"] != "challenged":
            raise ConfigurationError(f"harness corpus cannot issue challenges: {login['outcome']}")
        self.service.mark_rendered(login["session_id"])
        return login["session_id"], login["challenge"]

    def true_order(self, challenge_id: str) -> list[int]:
        return list(self.service._challenges[challenge_id].ground_truth)

    def true_selection(self, challenge_id: str) -> set[int]:
        return set(self.service._challenges[challenge_id].ground_truth)

    def submit(self, session_id: str, payload: dict, click_count: int = 0) -> dict:
        return self.service.submit_answer(session_id, payload, click_count=click_count)

    def close_session(self, session_id: str) -> None:
        if self.prune:
            self.service.prune_session(session_id)


class HttpHarness:
    """Drives a live service over its wire protocol.

    Only blind profiles (random, fixed_pattern) can run here: the wire never
    carries ground truth, so informed profiles have nothing to be informed
    by and must use the in-process harness.
    """

    def __init__(
        self,
        base_url: str,
        format: str = ARRANGEMENT,
        force_length: Optional[int] = None,
        device_id: str = "sim-device",
        pairing_code: str = "wearable-setup",
    ):
        import httpx

        self.client = httpx.Client(base_url=base_url, timeout=30.0)
        self.format = format
        self.force_length = force_length
        self.device_id = f"{device_id}-{random.randrange(1 << 32):08x}"
        res = self.client.post(
            "/pair", json={"device_id": self.device_id, "credential": pairing_code}
        )
        res.raise_for_status()
        self.secret = res.json()["shared_secret"]

    def open_session(self):
        body = {
            "device_id": self.device_id,
            "shared_secret": self.secret,
            "format": self.format,
        }
        if self.force_length:
            body["force_length"] = self.force_length
        res = self.client.post("/login", json=body)
        res.raise_for_status()
        login = res.json()
        if login["outcome"] != "challenged":
            raise ConfigurationError(f"service cannot issue challenges: {login['outcome']}")
        self.client.post("/rendered", json={"session_id": login["session_id"]})
        return login["session_id"], login["challenge"]

    def true_order(self, challenge_id: str) -> list[int]:
        raise ConfigurationError("informed profiles need the in-process harness")

    true_selection = true_order

    def submit(self, session_id: str, payload: dict, click_count: int = 0) -> dict:
        body = {"session_id": session_id, "click_count": click_count, **payload}
        res = self.client.post("/answer", json=body)
        res.raise_for_status()
        return res.json()

    def close_session(self, session_id: str) -> None:
        pass


def _arrangement_guess(profile, view, harness, trial_state, rng):
    slots = [img["slot"] for img in view["images"]]
    if profile.kind == "random":
        guess = slots.copy()
        rng.shuffle(guess)
        return guess
    if profile.kind == "fixed_pattern":
        if "pattern" not in trial_state:
            pattern = list(range(len(slots)))
            rng.shuffle(pattern)
            trial_state["pattern"] = pattern
        return [slots[i] for i in trial_state["pattern"]]
    truth = harness.true_order(view["challenge_id"])
    rank = {slot: i for i, slot in enumerate(truth)}
    return _noisy_sort(slots, rank, profile.knowledge, rng)


def _selection_guess(profile, view, harness, trial_state, rng):
    n = view["n"]
    slots = [img["slot"] for img in view["images"]]
    if profile.kind == "random":
        mask = rng.randrange(1, 2**n - 1)  # every non-empty proper subset, uniformly
        return {slots[i] for i in range(n) if mask >> i & 1}
    if profile.kind == "fixed_pattern":
        if "mask" not in trial_state:
            trial_state["mask"] = rng.randrange(1, 2**n - 1)
        mask = trial_state["mask"]
        return {slots[i] for i in range(n) if mask >> i & 1}
    truth = harness.true_selection(view["challenge_id"])
    while True:
        guess = {
            slot
            for slot in slots
            if (slot in truth) == (rng.random() < profile.knowledge)
        }
        if 0 < len(guess) < n:
            return guess
        if profile.knowledge == 1.0:
            return guess  # the true answer is always admissible


def simulate_attacker(
    profile: AttackerProfile,
    harness: InProcessHarness,
    trials: int,
    seed: int = 0,
    latency: Optional[LatencyModel] = None,
    max_attempts_per_trial: int = 100_000,
) -> EffortStats:
    """Effort statistics over independent login sessions."""
    latency = latency or LatencyModel()
    rng = random.Random(seed)
    stats = EffortStats(trials=trials)

    for _ in range(trials):
        session_id, view = harness.open_session()
        trial_state: dict = {}
        attempts = 0
        entry_time = 0.0
        clicks = 0
        previous_selection: set[int] = set()
        succeeded = False
        while attempts < max_attempts_per_trial:
            if harness.format == ARRANGEMENT:
                payload = {"order": _arrangement_guess(profile, view, harness, trial_state, rng)}
                click_count = 0
            else:
                guess = _selection_guess(profile, view, harness, trial_state, rng)
                clicks += len(guess ^ previous_selection)
                previous_selection = guess
                payload = {"selected": sorted(guess)}
                click_count = clicks
            entry_time += latency.draw(rng)
            outcome = harness.submit(session_id, payload, click_count=click_count)
            attempts += 1
            if outcome["outcome"] == OUTCOME_ACCEPTED:
                succeeded = True
                break
            if outcome["outcome"] == OUTCOME_NEW_CHALLENGE:
                view = outcome["challenge"]
                trial_state.pop("mask", None)
            elif outcome["outcome"] != OUTCOME_RETRY:
                break  # locked out or pushed to fallback
        harness.close_session(session_id)

        stats.attempts.append(attempts)
        stats.entry_times_s.append(entry_time)
        if harness.format == SELECTION:
            stats.clicks.append(clicks)
        stats.total_attempts += attempts
        stats.successes += int(succeeded)
    return stats
