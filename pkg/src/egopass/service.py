"""Login service core: device pairing, challenge issuance, answer
verification with fresh-challenge-on-failure, effort accounting, and the
lockout policy that turns excessive effort into attack detection.

The HTTP layer in api.py is a thin veneer over AuthService; everything here
is directly drivable in-process, which is what the attacker simulator and
the protocol tests do.
"""

from __future__ import annotations

import random
import secrets
import statistics
import threading
import time
import uuid
from dataclasses import dataclass, field
from typing import Callable, Optional

import cv2

from .challenges import (
    ARRANGEMENT,
    SELECTION,
    ArrangementPolicy,
    Challenge,
    generate_arrangement,
    generate_selection,
    verify_arrangement,
    verify_selection,
)
from .errors import (
    AuthenticationError,
    ConfigurationError,
    InsufficientVariationError,
    InvalidAnswerError,
    PairingConflictError,
    SessionNotFoundError,
    SessionStateError,
)
from .ingest import Frame
from .pipeline import PipelineArtifacts, TwoDayArtifacts
from .timeline import TimelineModel

STATE_PAIRED = "paired"
STATE_CHALLENGED = "challenged"
STATE_SUCCEEDED = "succeeded"
STATE_LOCKED_OUT = "locked_out"
STATE_FALLBACK = "fallback"

OUTCOME_ACCEPTED = "accepted"
OUTCOME_RETRY = "retry"
OUTCOME_NEW_CHALLENGE = "retry_with_new_challenge"
OUTCOME_LOCKED_OUT = "locked_out"
OUTCOME_FALLBACK = "fallback_required"

SELECTION_QUESTION = "What have you not done today?"

# Regeneration attempts before conceding the candidate pool forces a repeat.
MAX_REGENERATION_DRAWS = 64


@dataclass
class LockoutPolicy:
    max_attempts: int = 10
    max_entry_time_ms: int = 300_000
    on_exceed: str = "lock"  # or "fallback"

    def __post_init__(self):
        if self.max_attempts < 1:
            raise ConfigurationError("max_attempts must be >= 1")
        if self.on_exceed not in ("lock", "fallback"):
            raise ConfigurationError("on_exceed must be 'lock' or 'fallback'")

    @property
    def exceeded_state(self) -> str:
        return STATE_LOCKED_OUT if self.on_exceed == "lock" else STATE_FALLBACK

    @property
    def exceeded_outcome(self) -> str:
        return OUTCOME_LOCKED_OUT if self.on_exceed == "lock" else OUTCOME_FALLBACK


@dataclass
class PairingRecord:
    device_id: str
    shared_secret: str
    created_at: float


@dataclass
class SessionRecord:
    session_id: str
    device_id: str
    state: str
    format: str
    attempts: int = 0
    clicks_by_challenge: dict = field(default_factory=dict)
    started_at: Optional[float] = None
    ended_at: Optional[float] = None
    challenge_history: list[str] = field(default_factory=list)

    @property
    def clicks(self) -> int:
        return sum(self.clicks_by_challenge.values())

    @property
    def entry_time_ms(self) -> Optional[int]:
        if self.started_at is None or self.ended_at is None:
            return None
        return int(round((self.ended_at - self.started_at) * 1000))

    def summary(self) -> dict:
        return {
            "session_id": self.session_id,
            "device_id": self.device_id,
            "state": self.state,
            "format": self.format,
            "attempts": self.attempts,
            "clicks": self.clicks,
            "started_at": self.started_at,
            "ended_at": self.ended_at,
            "entry_time_ms": self.entry_time_ms,
            "challenge_history": list(self.challenge_history),
        }


class ChallengeVault:
    """Pipeline artifacts a service instance serves challenges from."""

    def __init__(
        self,
        timelines: dict[int, TimelineModel],
        frames_by_day: dict[int, dict[int, Frame]],
    ):
        self.timelines = timelines
        self.frames_by_day = frames_by_day

    @classmethod
    def from_pipeline(cls, artifacts: PipelineArtifacts, day: int = 0) -> "ChallengeVault":
        return cls(
            timelines={day: artifacts.timeline},
            frames_by_day={day: {f.frame_id: f for f in artifacts.keyframes}},
        )

    @classmethod
    def from_two_day(cls, artifacts: TwoDayArtifacts) -> "ChallengeVault":
        return cls(
            timelines=dict(artifacts.timelines),
            frames_by_day={
                day: {f.frame_id: f for f in frames}
                for day, frames in artifacts.keyframes_by_day.items()
            },
        )

    def arrangement_day(self, day: Optional[int]) -> int:
        if day is not None:
            if day not in self.timelines:
                raise ConfigurationError(f"no corpus for day {day}")
            return day
        return min(self.timelines)  # most recent footage

    def supports_selection(self) -> bool:
        return 0 in self.timelines and 1 in self.timelines

    def frame(self, day_tag: int, frame_id: int) -> Frame:
        return self.frames_by_day[day_tag][frame_id]


def challenge_client_view(challenge: Challenge) -> dict:
    """The only challenge payload allowed to cross the server boundary:
    no ground truth, no valid-image count, no day tags, no frame ids."""
    view = {
        "challenge_id": challenge.challenge_id,
        "format": challenge.format,
        "n": challenge.n,
        "images": [
            {"slot": img.slot, "url": f"/image/{challenge.challenge_id}/{img.slot}"}
            for img in challenge.images
        ],
    }
    if challenge.format == SELECTION:
        view["question"] = SELECTION_QUESTION
    return view


class AuthService:
    def __init__(
        self,
        vault: ChallengeVault,
        policy: Optional[LockoutPolicy] = None,
        n_images: int = 4,
        selection_tau: float = 1.0,
        rng_seed: Optional[int] = None,
        pairing_code: str = "wearable-setup",
        event_log=None,
        clock: Callable[[], float] = time.time,
    ):
        from .store import EventLog

        self.vault = vault
        self.policy = policy or LockoutPolicy()
        self.n_images = n_images
        self.selection_tau = selection_tau
        self.pairing_code = pairing_code
        self.log = event_log or EventLog()
        self.clock = clock
        self._rng = random.Random(rng_seed)
        self._pairings: dict[str, PairingRecord] = {}
        self._sessions: dict[str, SessionRecord] = {}
        self._challenges: dict[str, Challenge] = {}
        self._current_challenge: dict[str, str] = {}
        self._answered_keys: dict[tuple[str, str], dict] = {}
        self._registry_lock = threading.Lock()
        self._session_locks: dict[str, threading.Lock] = {}

    # -- pairing ---------------------------------------------------------

    def pair(self, device_id: str, credential: str) -> PairingRecord:
        if credential != self.pairing_code:
            raise AuthenticationError("bad pairing credential")
        with self._registry_lock:
            if device_id in self._pairings:
                raise PairingConflictError(f"device {device_id} already paired")
            record = PairingRecord(
                device_id=device_id,
                shared_secret=secrets.token_hex(16),
                created_at=self.clock(),
            )
            self._pairings[device_id] = record
        self.log.append("paired", device_id=device_id)
        return record

    def _authenticate(self, device_id: str, shared_secret: str) -> None:
        record = self._pairings.get(device_id)
        if record is None or record.shared_secret != shared_secret:
            raise AuthenticationError("unknown device or wrong shared secret")

    # -- challenge generation -------------------------------------------

    def _generate(
        self,
        format: str,
        day: Optional[int],
        force_length: Optional[int],
        avoid_image_sets: Optional[set[frozenset]] = None,
    ) -> Challenge:
        if format == ARRANGEMENT:
            timeline = self.vault.timelines[self.vault.arrangement_day(day)]
            policy_day = self.vault.arrangement_day(day)
            n_images = force_length or self.n_images
            challenge = None
            for _ in range(MAX_REGENERATION_DRAWS):
                challenge = generate_arrangement(
                    timeline,
                    ArrangementPolicy(n_images=n_images, rng_seed=self._rng.getrandbits(64)),
                    day_tag=policy_day,
                    now=self.clock(),
                )
                image_set = frozenset(img.frame_id for img in challenge.images)
                if not avoid_image_sets or image_set not in avoid_image_sets:
                    break
            return challenge
        if format == SELECTION:
            if not self.vault.supports_selection():
                raise ConfigurationError("selection challenges need two consecutive days")
            return generate_selection(
                self.vault.timelines[1],
                self.vault.timelines[0],
                rng_seed=self._rng.getrandbits(64),
                force_n=force_length,
                now=self.clock(),
            )
        raise ConfigurationError(f"unknown challenge format {format!r}")

    def _register_challenge(self, session: SessionRecord, challenge: Challenge) -> None:
        self._challenges[challenge.challenge_id] = challenge
        self._current_challenge[session.session_id] = challenge.challenge_id
        session.challenge_history.append(challenge.challenge_id)
        self.log.append(
            "challenge_issued",
            session_id=session.session_id,
            challenge_id=challenge.challenge_id,
            format=challenge.format,
            n=challenge.n,
            ground_truth=sorted(challenge.ground_truth)
            if challenge.format == SELECTION
            else list(challenge.ground_truth),
        )

    # -- protocol --------------------------------------------------------

    def request_login(
        self,
        device_id: str,
        shared_secret: str,
        format: str = ARRANGEMENT,
        day: Optional[int] = None,
        force_length: Optional[int] = None,
    ) -> dict:
        self._authenticate(device_id, shared_secret)
        session = SessionRecord(
            session_id=uuid.uuid4().hex,
            device_id=device_id,
            state=STATE_PAIRED,
            format=format,
        )
        with self._registry_lock:
            self._sessions[session.session_id] = session
            self._session_locks[session.session_id] = threading.Lock()
        self.log.append("login_requested", session_id=session.session_id, device_id=device_id)

        try:
            challenge = self._generate(format, day, force_length)
        except InsufficientVariationError as err:
            session.state = STATE_FALLBACK
            session.ended_at = self.clock()
            self.log.append("fallback_required", session_id=session.session_id, reason=str(err))
            return {"session_id": session.session_id, "outcome": OUTCOME_FALLBACK}

        session.state = STATE_CHALLENGED
        session.started_at = self.clock()  # send time; rendered beacon refines it
        self._register_challenge(session, challenge)
        return {
            "session_id": session.session_id,
            "outcome": "challenged",
            "challenge": challenge_client_view(challenge),
        }

    def _session(self, session_id: str) -> SessionRecord:
        session = self._sessions.get(session_id)
        if session is None:
            raise SessionNotFoundError(f"unknown session {session_id}")
        return session

    def mark_rendered(self, session_id: str, challenge_id: Optional[str] = None) -> None:
        """Client beacon: the challenge is fully visible, start the clock.

        Only the first beacon moves the timer anchor; entry time spans from
        the first challenge appearing to the final verdict, failed attempts
        included. Server clock throughout, so client clock skew cannot bend
        the effort metrics.
        """
        session = self._session(session_id)
        with self._session_locks[session_id]:
            if session.state != STATE_CHALLENGED:
                raise SessionStateError(f"session {session_id} is {session.state}")
            if len(session.challenge_history) == 1:
                session.started_at = self.clock()
            self.log.append("rendered", session_id=session_id, challenge_id=challenge_id)

    def _verify(self, challenge: Challenge, answer: dict):
        if challenge.format == ARRANGEMENT:
            order = answer.get("order")
            if not isinstance(order, (list, tuple)):
                raise InvalidAnswerError("arrangement answer needs an 'order' list")
            return verify_arrangement(challenge, list(order))
        selected = answer.get("selected")
        if not isinstance(selected, (list, tuple, set)):
            raise InvalidAnswerError("selection answer needs a 'selected' list")
        return verify_selection(challenge, set(selected), self.selection_tau)

    def submit_answer(
        self,
        session_id: str,
        answer: dict,
        click_count: int = 0,
        idempotency_key: Optional[str] = None,
    ) -> dict:
        session = self._session(session_id)
        with self._session_locks[session_id]:
            if idempotency_key is not None:
                cached = self._answered_keys.get((session_id, idempotency_key))
                if cached is not None:
                    return cached

            if session.state != STATE_CHALLENGED:
                raise SessionStateError(
                    f"session {session_id} is {session.state}, not awaiting an answer"
                )
            challenge = self._challenges[self._current_challenge[session_id]]

            verdict = self._verify(challenge, answer)  # malformed answers raise before counting
            session.attempts += 1
            if click_count:
                previous = session.clicks_by_challenge.get(challenge.challenge_id, 0)
                session.clicks_by_challenge[challenge.challenge_id] = max(previous, click_count)
            now = self.clock()
            elapsed_ms = (now - session.started_at) * 1000 if session.started_at else 0.0
            self.log.append(
                "answer_received",
                session_id=session_id,
                challenge_id=challenge.challenge_id,
                attempt=session.attempts,
                similarity=verdict.similarity,
                correct=verdict.correct,
            )

            over_attempts = session.attempts > self.policy.max_attempts
            over_time = elapsed_ms > self.policy.max_entry_time_ms
            if over_attempts or over_time:
                session.state = self.policy.exceeded_state
                session.ended_at = now
                outcome = {
                    "outcome": self.policy.exceeded_outcome,
                    "reason": "attempts" if over_attempts else "entry_time",
                }
            elif verdict.accepted:
                session.state = STATE_SUCCEEDED
                session.ended_at = now
                outcome = {"outcome": OUTCOME_ACCEPTED}
            elif challenge.format == ARRANGEMENT:
                # fresh password after every wrong arrangement; consecutive
                # challenges must not repeat an image set when avoidable
                current_set = frozenset(img.frame_id for img in challenge.images)
                replacement = self._generate(
                    ARRANGEMENT, None, challenge.n, avoid_image_sets={current_set}
                )
                self._register_challenge(session, replacement)
                outcome = {
                    "outcome": OUTCOME_NEW_CHALLENGE,
                    "challenge": challenge_client_view(replacement),
                }
            else:
                # selection keeps the same grid; the user keeps toggling
                outcome = {"outcome": OUTCOME_RETRY}

            self.log.append(
                "state_change", session_id=session_id, state=session.state, outcome=outcome["outcome"]
            )
            if idempotency_key is not None:
                self._answered_keys[(session_id, idempotency_key)] = outcome
            return outcome

    def prune_session(self, session_id: str) -> None:
        """Drop a finished session and its challenges from memory.

        Operational retention hook; bulk simulations call it per trial so a
        hundred thousand sessions do not accumulate. The event log, when
        enabled, still holds the full audit trail.
        """
        with self._registry_lock:
            session = self._sessions.pop(session_id, None)
            if session is None:
                return
            for challenge_id in session.challenge_history:
                self._challenges.pop(challenge_id, None)
            self._current_challenge.pop(session_id, None)
            self._session_locks.pop(session_id, None)
            stale = [key for key in self._answered_keys if key[0] == session_id]
            for key in stale:
                del self._answered_keys[key]

    # -- reporting -------------------------------------------------------

    def session_metrics(self, session_id: str) -> dict:
        return self._session(session_id).summary()

    def aggregate_metrics(self) -> dict:
        def stats(values):
            values = list(values)
            if not values:
                return {"mean": None, "std": None, "count": 0}
            return {
                "mean": statistics.mean(values),
                "std": statistics.pstdev(values),
                "count": len(values),
            }

        sessions = list(self._sessions.values())
        finished = [s for s in sessions if s.state == STATE_SUCCEEDED]
        return {
            "sessions": len(sessions),
            "by_state": {
                state: sum(1 for s in sessions if s.state == state)
                for state in (
                    STATE_CHALLENGED,
                    STATE_SUCCEEDED,
                    STATE_LOCKED_OUT,
                    STATE_FALLBACK,
                )
            },
            "attempts": stats(s.attempts for s in finished),
            "clicks": stats(s.clicks for s in finished),
            "entry_time_ms": stats(s.entry_time_ms for s in finished if s.entry_time_ms is not None),
        }

    # -- image serving ----------------------------------------------------

    def image_png(self, challenge_id: str, slot: int) -> bytes:
        challenge = self._challenges.get(challenge_id)
        if challenge is None:
            raise SessionNotFoundError(f"unknown challenge {challenge_id}")
        for img in challenge.images:
            if img.slot == slot:
                frame = self.vault.frame(img.day_tag, img.frame_id)
                ok, buf = cv2.imencode(".png", frame.pixels)
                if not ok:
                    raise ConfigurationError("png encoding failed")
                return bytes(buf)
        raise SessionNotFoundError(f"challenge {challenge_id} has no slot {slot}")
