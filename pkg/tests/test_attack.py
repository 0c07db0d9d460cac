import math

import pytest

from egopass.attack import (
    AttackerProfile,
    InProcessHarness,
    LatencyModel,
    simulate_attacker,
)
from egopass.challenges import ARRANGEMENT, SELECTION
from egopass.errors import ConfigurationError
from egopass.service import AuthService, LockoutPolicy
from egopass.store import NullLog

from test_service import arrangement_vault, selection_vault


def sim_service(vault):
    return AuthService(
        vault,
        policy=LockoutPolicy(max_attempts=1_000_000, max_entry_time_ms=2**40),
        rng_seed=7,
        event_log=NullLog(),
    )


class TestProfiles:
    def test_oracle_is_perfect_informed(self):
        oracle = AttackerProfile.oracle()
        assert oracle.kind == "informed" and oracle.knowledge == 1.0

    def test_informed_needs_prior(self):
        with pytest.raises(ConfigurationError):
            AttackerProfile(kind="informed")
        with pytest.raises(ConfigurationError):
            AttackerProfile(kind="informed", knowledge=0.2)

    def test_unknown_kind(self):
        with pytest.raises(ConfigurationError):
            AttackerProfile(kind="psychic")


class TestArrangementAttacks:
    def test_oracle_mean_attempts_exactly_one(self):
        harness = InProcessHarness(sim_service(arrangement_vault()), format=ARRANGEMENT)
        stats = simulate_attacker(AttackerProfile.oracle(), harness, trials=200, seed=1)
        assert stats.mean_attempts == 1.0
        assert stats.success_rate == 1.0

    def test_random_attacker_geometric_effort(self):
        harness = InProcessHarness(sim_service(arrangement_vault()), format=ARRANGEMENT)
        stats = simulate_attacker(AttackerProfile(kind="random"), harness, trials=1500, seed=2)
        # geometric with p = 1/24: mean 24, sd 23.5 -> 1500 trials gives se ~0.61
        assert 21.0 <= stats.mean_attempts <= 27.0
        assert stats.success_rate == 1.0

    def test_informed_attacker_between_oracle_and_random(self):
        service = sim_service(arrangement_vault())
        harness = InProcessHarness(service, format=ARRANGEMENT)
        weak = simulate_attacker(
            AttackerProfile(kind="informed", knowledge=0.7), harness, trials=400, seed=3
        )
        strong = simulate_attacker(
            AttackerProfile(kind="informed", knowledge=0.9), harness, trials=400, seed=4
        )
        assert 1.0 < strong.mean_attempts < weak.mean_attempts < 24.0

    def test_fixed_pattern_attacker_measured(self):
        harness = InProcessHarness(sim_service(arrangement_vault()), format=ARRANGEMENT)
        stats = simulate_attacker(
            AttackerProfile(kind="fixed_pattern"),
            harness,
            trials=300,
            seed=5,
            max_attempts_per_trial=500,
        )
        # non-identity fixed guesses face fresh truths drawn from the 23
        # non-identity orders; identity guesses never succeed
        assert stats.mean_attempts > 10.0

    def test_entry_time_tracks_attempts(self):
        harness = InProcessHarness(sim_service(arrangement_vault()), format=ARRANGEMENT)
        stats = simulate_attacker(
            AttackerProfile(kind="random"),
            harness,
            trials=300,
            seed=6,
            latency=LatencyModel(mean_s=2.0, std_s=0.0),
        )
        assert stats.mean_entry_s == pytest.approx(2.0 * stats.mean_attempts, rel=1e-9)


class TestSelectionAttacks:
    def test_random_selection_per_attempt_rate(self):
        harness = InProcessHarness(sim_service(selection_vault()), format=SELECTION, force_length=8)
        stats = simulate_attacker(AttackerProfile(kind="random"), harness, trials=400, seed=7)
        p = 1 / 254
        sigma = math.sqrt(p * (1 - p) / stats.total_attempts)
        assert abs(stats.per_attempt_success_rate - p) <= 3 * sigma

    def test_oracle_selection_clicks_lower_bound(self):
        service = sim_service(selection_vault())
        harness = InProcessHarness(service, format=SELECTION)
        stats = simulate_attacker(AttackerProfile.oracle(), harness, trials=100, seed=8)
        assert stats.mean_attempts == 1.0
        assert all(c >= 1 for c in stats.clicks)  # at least the valid tiles were toggled

    def test_effort_ordering_attacker_vs_legitimate(self):
        service = sim_service(selection_vault())
        harness = InProcessHarness(service, format=SELECTION, force_length=8)
        legit = simulate_attacker(AttackerProfile.oracle(), harness, trials=100, seed=9)
        adversary = simulate_attacker(AttackerProfile(kind="random"), harness, trials=100, seed=10)
        assert adversary.mean_attempts > 10 * legit.mean_attempts
        assert adversary.mean_entry_s > 10 * legit.mean_entry_s

    def test_table_renders(self):
        harness = InProcessHarness(sim_service(selection_vault()), format=SELECTION)
        stats = simulate_attacker(AttackerProfile.oracle(), harness, trials=10, seed=11)
        text = stats.table()
        assert "entry time" in text and "attempts" in text
