import numpy as np
from fastapi.testclient import TestClient

from egopass.api import create_app
from egopass.challenges import ARRANGEMENT, SELECTION
from egopass.ingest import Frame
from egopass.service import (
    STATE_CHALLENGED,
    STATE_FALLBACK,
    STATE_LOCKED_OUT,
    STATE_SUCCEEDED,
    AuthService,
    ChallengeVault,
    LockoutPolicy,
)
from egopass.timeline import TimelineModel

from test_challenges import make_timeline


class FakeClock:
    def __init__(self, t=1_000_000.0):
        self.t = t

    def __call__(self):
        return self.t

    def advance(self, seconds):
        self.t += seconds


def vault_from_timelines(timelines: dict[int, TimelineModel]) -> ChallengeVault:
    rng = np.random.default_rng(0)
    frames_by_day = {}
    for day, timeline in timelines.items():
        frames = {}
        for fid in timeline.cluster_of_frame:
            frames[fid] = Frame(
                frame_id=fid,
                timestamp_ms=fid * 200,
                day_tag=day,
                pixels=rng.integers(0, 256, size=(18, 32), dtype=np.uint8),
            )
        frames_by_day[day] = frames
    return ChallengeVault(timelines=timelines, frames_by_day=frames_by_day)


def arrangement_vault(n_segments=6):
    return vault_from_timelines({0: make_timeline(list(range(n_segments)))})


def selection_vault():
    yesterday = make_timeline([0, 1, 2, 3, 4, 5, 6], start_id=0)
    today = make_timeline([10, 11, 12, 13, 14, 15, 16], start_id=1000)
    return vault_from_timelines({1: yesterday, 0: today})


def make_service(vault=None, **kwargs) -> tuple[AuthService, FakeClock]:
    clock = kwargs.pop("clock", FakeClock())
    service = AuthService(vault or arrangement_vault(), clock=clock, rng_seed=42, **kwargs)
    return service, clock


def paired_client(service) -> tuple[TestClient, str, str]:
    client = TestClient(create_app(service))
    res = client.post("/pair", json={"device_id": "cam-1", "credential": "wearable-setup"})
    assert res.status_code == 200
    return client, "cam-1", res.json()["shared_secret"]


def start_login(client, device, secret, format=ARRANGEMENT, force_length=None):
    body = {"device_id": device, "shared_secret": secret, "format": format}
    if force_length:
        body["force_length"] = force_length
    res = client.post("/login", json=body)
    assert res.status_code == 200
    return res.json()


class TestPairing:
    def test_pair_and_duplicate_conflict(self):
        service, _ = make_service()
        client = TestClient(create_app(service))
        first = client.post("/pair", json={"device_id": "d", "credential": "wearable-setup"})
        assert first.status_code == 200 and first.json()["shared_secret"]
        second = client.post("/pair", json={"device_id": "d", "credential": "wearable-setup"})
        assert second.status_code == 409

    def test_bad_credential(self):
        service, _ = make_service()
        client = TestClient(create_app(service))
        res = client.post("/pair", json={"device_id": "d", "credential": "nope"})
        assert res.status_code == 401

    def test_wrong_secret_rejected(self):
        service, _ = make_service()
        client, device, _ = paired_client(service)
        res = client.post(
            "/login", json={"device_id": device, "shared_secret": "bogus", "format": ARRANGEMENT}
        )
        assert res.status_code == 401

    def test_unpaired_device_rejected(self):
        service, _ = make_service()
        client = TestClient(create_app(service))
        res = client.post(
            "/login", json={"device_id": "ghost", "shared_secret": "x", "format": ARRANGEMENT}
        )
        assert res.status_code == 401


class TestLoginFlow:
    def test_challenge_issued_with_view_only_fields(self):
        service, _ = make_service()
        client, device, secret = paired_client(service)
        login = start_login(client, device, secret)
        challenge = login["challenge"]
        assert set(challenge.keys()) == {"challenge_id", "format", "n", "images"}
        assert challenge["n"] == 4
        assert [img["slot"] for img in challenge["images"]] == [0, 1, 2, 3]
        record = service.session_metrics(login["session_id"])
        assert record["state"] == STATE_CHALLENGED
        assert record["attempts"] == 0

    def test_selection_includes_question(self):
        service, _ = make_service(selection_vault())
        client, device, secret = paired_client(service)
        login = start_login(client, device, secret, format=SELECTION)
        assert login["challenge"]["question"] == "What have you not done today?"

    def test_degenerate_corpus_forces_fallback(self):
        # A B A B: every cluster spans two segments, no candidates survive
        vault = vault_from_timelines({0: make_timeline([0, 1, 0, 1])})
        service, _ = make_service(vault)
        client, device, secret = paired_client(service)
        login = start_login(client, device, secret)
        assert login["outcome"] == "fallback_required"
        assert service.session_metrics(login["session_id"])["state"] == STATE_FALLBACK

    def test_correct_first_answer_timing(self):
        service, clock = make_service()
        client, device, secret = paired_client(service)
        login = start_login(client, device, secret)
        session_id = login["session_id"]
        clock.advance(0.5)
        assert (
            client.post(
                "/rendered",
                json={"session_id": session_id, "challenge_id": login["challenge"]["challenge_id"]},
            ).status_code
            == 204
        )
        truth = service._challenges[login["challenge"]["challenge_id"]].ground_truth
        clock.advance(3.8)
        res = client.post(
            "/answer", json={"session_id": session_id, "order": list(truth), "click_count": 4}
        )
        assert res.json()["outcome"] == "accepted"
        record = service.session_metrics(session_id)
        assert record["state"] == STATE_SUCCEEDED
        assert record["attempts"] == 1
        assert record["entry_time_ms"] == 3800

    def test_wrong_arrangement_gets_new_challenge(self):
        service, _ = make_service()
        client, device, secret = paired_client(service)
        login = start_login(client, device, secret)
        session_id = login["session_id"]
        cid = login["challenge"]["challenge_id"]
        truth = list(service._challenges[cid].ground_truth)
        wrong = truth[1:] + truth[:1]
        res = client.post("/answer", json={"session_id": session_id, "order": wrong}).json()
        assert res["outcome"] == "retry_with_new_challenge"
        assert res["challenge"]["challenge_id"] != cid
        record = service.session_metrics(session_id)
        assert record["attempts"] == 1
        assert len(record["challenge_history"]) == 2

    def test_consecutive_challenges_change_images_when_pool_allows(self):
        service, _ = make_service(arrangement_vault(n_segments=6))
        client, device, secret = paired_client(service)
        login = start_login(client, device, secret)
        session_id = login["session_id"]
        history = [login["challenge"]["challenge_id"]]
        for _ in range(6):
            cid = history[-1]
            truth = list(service._challenges[cid].ground_truth)
            wrong = truth[1:] + truth[:1]
            res = client.post("/answer", json={"session_id": session_id, "order": wrong}).json()
            if res["outcome"] != "retry_with_new_challenge":
                break
            history.append(res["challenge"]["challenge_id"])
        sets = [
            frozenset(img.frame_id for img in service._challenges[cid].images) for cid in history
        ]
        for a, b in zip(sets, sets[1:]):
            assert a != b

    def test_repeat_allowed_when_pool_is_exactly_n(self):
        service, _ = make_service(arrangement_vault(n_segments=4))
        client, device, secret = paired_client(service)
        login = start_login(client, device, secret)
        session_id = login["session_id"]
        cid = login["challenge"]["challenge_id"]
        truth = list(service._challenges[cid].ground_truth)
        res = client.post(
            "/answer", json={"session_id": session_id, "order": truth[1:] + truth[:1]}
        ).json()
        assert res["outcome"] == "retry_with_new_challenge"
        assert res["challenge"]["challenge_id"] != cid

    def test_wrong_selection_keeps_challenge(self):
        service, _ = make_service(selection_vault())
        client, device, secret = paired_client(service)
        login = start_login(client, device, secret, format=SELECTION)
        session_id = login["session_id"]
        cid = login["challenge"]["challenge_id"]
        challenge = service._challenges[cid]
        wrong = sorted(set(challenge.slots) - set(challenge.ground_truth))[:1]
        res = client.post(
            "/answer", json={"session_id": session_id, "selected": wrong, "click_count": 1}
        ).json()
        assert res["outcome"] == "retry"
        record = service.session_metrics(session_id)
        assert record["challenge_history"] == [cid]
        # toggling to the right answer on the same challenge succeeds
        res = client.post(
            "/answer",
            json={
                "session_id": session_id,
                "selected": sorted(challenge.ground_truth),
                "click_count": 5,
            },
        ).json()
        assert res["outcome"] == "accepted"
        assert service.session_metrics(session_id)["clicks"] == 5


class TestPolicy:
    def test_lockout_at_exactly_max_plus_one(self):
        service, _ = make_service(policy=LockoutPolicy(max_attempts=10))
        client, device, secret = paired_client(service)
        login = start_login(client, device, secret)
        session_id = login["session_id"]
        outcomes = []
        for _ in range(25):
            record = service.session_metrics(session_id)
            if record["state"] != STATE_CHALLENGED:
                break
            cid = record["challenge_history"][-1]
            truth = list(service._challenges[cid].ground_truth)
            res = client.post(
                "/answer", json={"session_id": session_id, "order": truth[1:] + truth[:1]}
            )
            outcomes.append(res.json().get("outcome", res.status_code))
        assert outcomes[:10] == ["retry_with_new_challenge"] * 10
        assert outcomes[10] == "locked_out"
        record = service.session_metrics(session_id)
        assert record["state"] == STATE_LOCKED_OUT
        assert record["attempts"] == 11
        # no transitions out of locked_out
        res = client.post("/answer", json={"session_id": session_id, "order": [0, 1, 2, 3]})
        assert res.status_code == 409

    def test_entry_time_policy_breach(self):
        service, clock = make_service(
            policy=LockoutPolicy(max_attempts=50, max_entry_time_ms=10_000, on_exceed="fallback")
        )
        client, device, secret = paired_client(service)
        login = start_login(client, device, secret)
        session_id = login["session_id"]
        clock.advance(11.0)
        cid = login["challenge"]["challenge_id"]
        truth = list(service._challenges[cid].ground_truth)
        res = client.post("/answer", json={"session_id": session_id, "order": truth}).json()
        assert res["outcome"] == "fallback_required"
        assert service.session_metrics(session_id)["state"] == STATE_FALLBACK

    def test_malformed_answers_do_not_count(self):
        service, _ = make_service()
        client, device, secret = paired_client(service)
        login = start_login(client, device, secret)
        session_id = login["session_id"]
        assert client.post("/answer", json={"session_id": session_id}).status_code == 422
        assert (
            client.post("/answer", json={"session_id": session_id, "order": [0, 0, 1, 2]}).status_code
            == 422
        )
        assert (
            client.post("/answer", json={"session_id": session_id, "order": [0, 1]}).status_code
            == 422
        )
        assert service.session_metrics(session_id)["attempts"] == 0

    def test_unknown_session(self):
        service, _ = make_service()
        client, *_ = paired_client(service)
        assert client.post("/answer", json={"session_id": "nope", "order": [0]}).status_code == 404
        assert client.get("/session/nope").status_code == 404

    def test_idempotent_resubmission(self):
        service, _ = make_service()
        client, device, secret = paired_client(service)
        login = start_login(client, device, secret)
        session_id = login["session_id"]
        cid = login["challenge"]["challenge_id"]
        truth = list(service._challenges[cid].ground_truth)
        body = {
            "session_id": session_id,
            "order": truth[1:] + truth[:1],
            "idempotency_key": "retry-1",
        }
        first = client.post("/answer", json=body).json()
        second = client.post("/answer", json=body).json()
        assert first == second
        assert service.session_metrics(session_id)["attempts"] == 1


class TestWireSafety:
    FORBIDDEN_KEYS = {"ground_truth", "day_tag", "k", "frame_id", "pixels", "valid"}

    def _scan(self, node, path="$"):
        if isinstance(node, dict):
            for key, value in node.items():
                assert key not in self.FORBIDDEN_KEYS, f"{path}.{key} leaked to a client payload"
                self._scan(value, f"{path}.{key}")
        elif isinstance(node, list):
            for i, value in enumerate(node):
                self._scan(value, f"{path}[{i}]")

    def test_no_ground_truth_in_any_payload(self):
        for vault, format in ((arrangement_vault(), ARRANGEMENT), (selection_vault(), SELECTION)):
            service, _ = make_service(vault)
            client, device, secret = paired_client(service)
            captured = []
            login = start_login(client, device, secret, format=format)
            captured.append(login)
            session_id = login["session_id"]
            cid = login["challenge"]["challenge_id"]
            challenge = service._challenges[cid]
            if format == ARRANGEMENT:
                wrong = list(challenge.ground_truth)[1:] + [challenge.ground_truth[0]]
                captured.append(
                    client.post("/answer", json={"session_id": session_id, "order": wrong}).json()
                )
            else:
                wrong = sorted(set(challenge.slots) - set(challenge.ground_truth))[:1]
                captured.append(
                    client.post("/answer", json={"session_id": session_id, "selected": wrong}).json()
                )
            captured.append(client.get(f"/session/{session_id}").json())
            captured.append(client.get("/metrics").json())
            for payload in captured:
                self._scan(payload)

    def test_image_urls_are_positional_only(self):
        service, _ = make_service()
        client, device, secret = paired_client(service)
        login = start_login(client, device, secret)
        challenge = login["challenge"]
        # urls carry only the challenge id and the presentation slot
        for img in challenge["images"]:
            assert img["url"] == f"/image/{challenge['challenge_id']}/{img['slot']}"
        assert {img["slot"] for img in challenge["images"]} == set(range(challenge["n"]))

    def test_image_endpoint_serves_png(self):
        import cv2

        service, _ = make_service()
        client, device, secret = paired_client(service)
        login = start_login(client, device, secret)
        challenge = login["challenge"]
        res = client.get(challenge["images"][0]["url"])
        assert res.status_code == 200
        assert res.headers["content-type"] == "image/png"
        decoded = cv2.imdecode(np.frombuffer(res.content, np.uint8), cv2.IMREAD_GRAYSCALE)
        assert decoded is not None and decoded.shape == (18, 32)
        assert client.get(f"/image/{challenge['challenge_id']}/99").status_code == 404


class TestMetrics:
    def test_aggregate_over_oracle_sessions(self):
        service, clock = make_service()
        client, device, secret = paired_client(service)
        for _ in range(5):
            login = start_login(client, device, secret)
            cid = login["challenge"]["challenge_id"]
            truth = list(service._challenges[cid].ground_truth)
            clock.advance(1.0)
            res = client.post(
                "/answer", json={"session_id": login["session_id"], "order": truth}
            ).json()
            assert res["outcome"] == "accepted"
        metrics = client.get("/metrics").json()
        assert metrics["sessions"] == 5
        assert metrics["by_state"][STATE_SUCCEEDED] == 5
        assert metrics["attempts"]["mean"] == 1.0
        assert metrics["entry_time_ms"]["mean"] == 1000.0
