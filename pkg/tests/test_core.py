import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from stopsearch.core import (
    Action,
    FullTrajectory,
    Prefix,
    SchemaError,
    halt_time,
    simulate_return,
)
from stopsearch.environments import BktDomain, TicketReward
from stopsearch.policies import (
    AlwaysHaltPolicy,
    BktThresholdPolicy,
    NeverHaltPolicy,
    TicketSimplePolicy,
)

TICKET_FEATURES = ("price", "days_to_depart")


def ticket_trajectory(prices, days=None, seed=0):
    if days is None:
        days = list(range(len(prices) - 1, -1, -1))
    rows = tuple((float(p), float(d)) for p, d in zip(prices, days))
    return FullTrajectory(TICKET_FEATURES, rows, seed, "tickets")


class TestHaltTime:
    def test_always_halt_policy_halts_first_step(self, bkt_domain):
        trajectory = bkt_domain.sample_full(7)
        assert halt_time(AlwaysHaltPolicy(), trajectory) == 1

    def test_never_halt_policy_forced_at_horizon(self, bkt_domain):
        trajectory = bkt_domain.sample_full(7)
        assert halt_time(NeverHaltPolicy(), trajectory) == 20

    def test_ticket_threshold_hand_stepped(self):
        # wait while price > 400 and days > 5; prices drop below at step 3
        prices = [450, 430, 390, 380, 370]
        days = [30, 29, 28, 27, 26]
        trajectory = ticket_trajectory(prices, days)
        policy = TicketSimplePolicy(theta0=400, theta1=5)
        assert halt_time(policy, trajectory) == 3

    def test_empty_trajectory_rejected(self):
        with pytest.raises(ValueError):
            FullTrajectory(TICKET_FEATURES, (), 0, "tickets")


class TestSimulateReturn:
    def test_always_halt_pays_first_price(self):
        trajectory = ticket_trajectory([380, 400, 500])
        reward = TicketReward(price_cap=1000)
        assert simulate_return(AlwaysHaltPolicy(), trajectory, reward) == -380.0

    def test_never_halt_pays_last_price(self):
        trajectory = ticket_trajectory([380, 500, 631])
        reward = TicketReward(price_cap=1000)
        assert simulate_return(NeverHaltPolicy(), trajectory, reward) == -631.0

    def test_threshold_policy_pays_at_halt(self):
        trajectory = ticket_trajectory([450, 430, 390, 380], [30, 29, 28, 27])
        reward = TicketReward(price_cap=1000)
        policy = TicketSimplePolicy(theta0=400, theta1=5)
        assert simulate_return(policy, trajectory, reward) == -390.0

    def test_schema_mismatch_raises(self, bkt_domain):
        trajectory = bkt_domain.sample_full(3)
        policy = TicketSimplePolicy(theta0=400, theta1=5)
        with pytest.raises(SchemaError):
            simulate_return(policy, trajectory, TicketReward(price_cap=1000))


@st.composite
def bkt_policies(draw):
    prob = st.floats(0.02, 0.98)
    return BktThresholdPolicy(
        draw(prob), draw(prob), draw(prob), draw(prob), draw(st.floats(0.0, 1.0))
    )


class TestInvariants:
    @given(policy=bkt_policies(), seed=st.integers(0, 2**32))
    @settings(max_examples=60, deadline=None)
    def test_halt_time_in_range_and_pure(self, policy, seed):
        domain = BktDomain()
        trajectory = domain.sample_full(seed)
        t = halt_time(policy, trajectory)
        assert 1 <= t <= len(trajectory)
        assert halt_time(policy, trajectory) == t

    @given(policy=bkt_policies(), seed=st.integers(0, 2**32))
    @settings(max_examples=60, deadline=None)
    def test_prefix_monotonicity(self, policy, seed):
        # if decide() halts on some prefix, the halt time is no later
        domain = BktDomain()
        trajectory = domain.sample_full(seed)
        t = halt_time(policy, trajectory)
        for length in range(1, len(trajectory) + 1):
            if policy.decide(trajectory.prefix(length)) is Action.HALT:
                assert t <= length
                break

    @given(policy=bkt_policies(), seed=st.integers(0, 2**32))
    @settings(max_examples=60, deadline=None)
    def test_return_bounded_and_deterministic(self, policy, seed):
        domain = BktDomain()
        trajectory = domain.sample_full(seed)
        value = simulate_return(policy, trajectory, domain.reward)
        assert abs(value) <= domain.reward.v_max
        assert simulate_return(policy, trajectory, domain.reward) == value

    @given(policy=bkt_policies(), seed=st.integers(0, 2**32))
    @settings(max_examples=60, deadline=None)
    def test_first_halt_override_matches_decide_loop(self, policy, seed):
        # the one-pass scan must agree with the generic prefix replay
        domain = BktDomain()
        trajectory = domain.sample_full(seed)
        rows = trajectory.observations
        generic = None
        for t in range(1, len(rows) + 1):
            if policy.decide(Prefix(trajectory.feature_names, rows[:t])) is Action.HALT:
                generic = t
                break
        assert policy.first_halt(trajectory.feature_names, rows) == generic


class TestPrefix:
    def test_prefix_is_exact_head_of_trajectory(self, bkt_domain):
        trajectory = bkt_domain.sample_full(11)
        for t in (1, 5, 20):
            prefix = trajectory.prefix(t)
            assert prefix.observations == trajectory.observations[:t]

    def test_prefix_bounds_checked(self, bkt_domain):
        trajectory = bkt_domain.sample_full(11)
        with pytest.raises(ValueError):
            trajectory.prefix(0)
        with pytest.raises(ValueError):
            trajectory.prefix(21)

    def test_latest_and_column(self):
        trajectory = ticket_trajectory([450, 430], [30, 29])
        prefix = trajectory.prefix(2)
        assert prefix.latest("price") == 430.0
        assert prefix.column("days_to_depart") == (30.0, 29.0)
        with pytest.raises(SchemaError):
            prefix.latest("missing")


class TestRollout:
    def test_rollout_matches_replay_on_same_seed(self, bkt_domain):
        policy = BktThresholdPolicy(0.3, 0.1, 0.25, 0.2, 0.7)
        for seed in range(25):
            episode = bkt_domain.rollout(policy, seed)
            trajectory = bkt_domain.sample_full(seed)
            assert episode.observations == trajectory.observations[: episode.halt_time]
            assert episode.return_value == simulate_return(
                policy, trajectory, bkt_domain.reward
            )

    def test_rollout_never_generates_past_halt(self, bkt_domain):
        episode = bkt_domain.rollout(AlwaysHaltPolicy(), 5)
        assert len(episode.observations) == 1
        assert episode.halt_time == 1
