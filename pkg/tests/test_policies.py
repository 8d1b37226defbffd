import itertools
import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from stopsearch.core import Action, FullTrajectory, Prefix, SchemaError
from stopsearch.policies import (
    AfmThresholdPolicy,
    AssetLogisticPolicy,
    BktThresholdPolicy,
    TicketComplexPolicy,
    TicketSimplePolicy,
    afm_predict_correct,
    afm_threshold_class,
    asset_logistic_class,
    bkt_predict_correct,
    bkt_threshold_class,
    load_policy,
    save_policy,
    ticket_complex_class,
    ticket_simple_class,
)
from stopsearch._seeding import generator

PAPER_BKT = dict(p_i=0.18, p_t=0.2, p_g=0.2, p_s=0.1)


def ticket_prefix(price, days):
    return Prefix(("price", "days_to_depart"), ((float(price), float(days)),))


def outcome_prefix(outcomes):
    return Prefix(("correct",), tuple((float(o),) for o in outcomes))


def forward_prediction(p_i, p_t, p_g, p_s, outcomes):
    """Independent oracle: joint forward pass over the two-state chain."""
    transition = np.array([[1.0 - p_t, p_t], [0.0, 1.0]])
    emit_correct = np.array([p_g, 1.0 - p_s])
    alpha = np.array([1.0 - p_i, p_i])
    for outcome in outcomes:
        likelihood = emit_correct if outcome else 1.0 - emit_correct
        alpha = alpha * likelihood
        alpha = alpha @ transition
    alpha = alpha / alpha.sum()
    return float(alpha @ emit_correct)


def path_enumeration_prediction(p_i, p_t, p_g, p_s, outcomes):
    """Second oracle: exhaustive sum over latent state paths (small L only)."""
    length = len(outcomes)
    total_joint = 0.0
    total_correct = 0.0
    for states in itertools.product((0, 1), repeat=length + 1):
        prob = p_i if states[0] == 1 else 1.0 - p_i
        for previous, current in zip(states, states[1:]):
            if previous == 1:
                prob *= 1.0 if current == 1 else 0.0
            else:
                prob *= p_t if current == 1 else 1.0 - p_t
        for state, outcome in zip(states, outcomes):
            p_correct = (1.0 - p_s) if state == 1 else p_g
            prob *= p_correct if outcome else 1.0 - p_correct
        total_joint += prob
        total_correct += prob * ((1.0 - p_s) if states[-1] == 1 else p_g)
    return total_correct / total_joint


class TestBktPrediction:
    def test_empty_prefix_paper_parameters(self):
        # 0.18 * 0.9 + 0.82 * 0.2
        assert bkt_predict_correct(**PAPER_BKT, outcomes=()) == pytest.approx(
            0.326, abs=1e-12
        )

    def test_prior_mastery_one_fixes_prediction(self):
        for outcomes in ((), (1.0,), (1.0, 1.0)):
            assert bkt_predict_correct(
                1.0, 0.2, 0.2, 0.1, outcomes
            ) == pytest.approx(0.9, abs=1e-12)

    def test_two_corrects_matches_forward_oracle(self):
        expected = forward_prediction(0.18, 0.2, 0.2, 0.1, (1.0, 1.0))
        actual = bkt_predict_correct(**PAPER_BKT, outcomes=(1.0, 1.0))
        assert actual == pytest.approx(expected, abs=1e-12)

    def test_filter_matches_oracles_exhaustively(self):
        for length in range(0, 7):
            for bits in itertools.product((0.0, 1.0), repeat=length):
                expected = forward_prediction(0.18, 0.2, 0.2, 0.1, bits)
                enumerated = path_enumeration_prediction(0.18, 0.2, 0.2, 0.1, bits)
                actual = bkt_predict_correct(**PAPER_BKT, outcomes=bits)
                assert actual == pytest.approx(expected, abs=1e-12)
                assert actual == pytest.approx(enumerated, abs=1e-10)

    @given(
        p_i=st.floats(0.02, 0.98),
        p_t=st.floats(0.02, 0.98),
        p_g=st.floats(0.02, 0.45),
        p_s=st.floats(0.02, 0.45),
        bits=st.lists(st.sampled_from([0.0, 1.0]), max_size=8),
    )
    @settings(max_examples=150, deadline=None)
    def test_filter_matches_forward_oracle_random_parameters(
        self, p_i, p_t, p_g, p_s, bits
    ):
        expected = forward_prediction(p_i, p_t, p_g, p_s, tuple(bits))
        actual = bkt_predict_correct(p_i, p_t, p_g, p_s, tuple(bits))
        assert actual == pytest.approx(expected, abs=1e-12)

    def test_correct_observation_never_decreases_mastery(self):
        # requires guess + slip < 1
        from stopsearch.policies import bkt_filtered_mastery

        grid = (0.1, 0.3, 0.5, 0.7, 0.9)
        for p_i in grid:
            for p_t in (0.05, 0.3):
                for p_g in (0.1, 0.35):
                    for p_s in (0.1, 0.35):
                        for bits in itertools.product((0.0, 1.0), repeat=4):
                            before = bkt_filtered_mastery(p_i, p_t, p_g, p_s, bits)
                            after = bkt_filtered_mastery(
                                p_i, p_t, p_g, p_s, bits + (1.0,)
                            )
                            assert after >= before - 1e-12

    def test_non_binary_outcome_rejected(self):
        with pytest.raises(SchemaError):
            bkt_predict_correct(**PAPER_BKT, outcomes=(0.5,))


class TestBktDecide:
    def test_zero_threshold_halts_immediately(self):
        policy = BktThresholdPolicy(**PAPER_BKT, theta0=0.0)
        assert policy.decide(outcome_prefix([1])) is Action.HALT

    def test_threshold_one_never_halts(self):
        policy = BktThresholdPolicy(**PAPER_BKT, theta0=1.0)
        for bits in itertools.product((0, 1), repeat=6):
            assert policy.decide(outcome_prefix(bits or (1,))) is Action.CONTINUE

    def test_prior_prediction_drives_first_decision(self):
        # prediction before any outcome is 0.326 > 0.3, so the first step
        # is already the last one regardless of its outcome
        policy = BktThresholdPolicy(**PAPER_BKT, theta0=0.3)
        assert policy.decide(outcome_prefix([0])) is Action.HALT
        assert policy.decide(outcome_prefix([1])) is Action.HALT
        assert policy.first_halt(("correct",), ((0.0,), (1.0,))) == 1


class TestAfm:
    def test_constant_logistic(self):
        policy = AfmThresholdPolicy(beta1=0.0, beta2=0.0, theta0=0.4)
        assert afm_predict_correct(0.0, 0.0, (1.0, 0.0)) == pytest.approx(0.5)
        assert policy.decide(outcome_prefix([1])) is Action.HALT
        assert AfmThresholdPolicy(0.0, 0.0, 0.6).decide(
            outcome_prefix([1])
        ) is Action.CONTINUE

    def test_two_corrects_cross_threshold(self):
        assert afm_predict_correct(0.0, 1.0, (1.0, 1.0)) == pytest.approx(
            1.0 / (1.0 + math.exp(-2.0))
        )
        policy = AfmThresholdPolicy(beta1=0.0, beta2=1.0, theta0=0.8)
        # decision at step t uses outcomes before t: three observed steps
        # mean n_c counts the first two
        assert policy.decide(outcome_prefix([1, 1, 0])) is Action.HALT

    def test_incorrect_attempts_leave_count_unchanged(self):
        policy = AfmThresholdPolicy(beta1=0.0, beta2=1.0, theta0=0.8)
        base = outcome_prefix([1, 1, 0])
        padded = outcome_prefix([1, 1, 0, 0, 0])
        assert policy.decide(base) is policy.decide(padded)


class TestAsset:
    def test_fresh_asset_uses_intercept_only(self):
        policy = AssetLogisticPolicy(beta1=1.0, beta2=5.0, beta3=0.5, x_max=100.0)
        prefix = Prefix(("value",), ((100.0,),))
        assert policy.depreciation(100.0) == 0.0
        assert policy.decide(prefix) is Action.HALT  # logistic(1.0) > 0.5

    def test_worthless_asset_clamps_to_one(self):
        policy = AssetLogisticPolicy(beta1=0.0, beta2=1.0, beta3=0.9, x_max=100.0)
        assert policy.depreciation(0.0) == 1.0
        assert policy.depreciation(-5.0) == 1.0

    def test_crossover_at_half_depreciation(self):
        policy = AssetLogisticPolicy(beta1=-5.0, beta2=10.0, beta3=0.5, x_max=100.0)
        assert policy.crossover_depreciation() == pytest.approx(0.5)
        values = [100.0, 80.0, 60.0, 45.0, 30.0]
        rows = tuple((v,) for v in values)
        # halts first when depreciation exceeds 0.5, i.e. value below 50
        assert policy.first_halt(("value",), rows) == 4


class TestTickets:
    def test_simple_rule_examples(self):
        policy = TicketSimplePolicy(theta0=400, theta1=5)
        assert policy.decide(ticket_prefix(450, 30)) is Action.CONTINUE
        assert policy.decide(ticket_prefix(390, 30)) is Action.HALT
        assert policy.decide(ticket_prefix(450, 3)) is Action.HALT

    def test_raising_price_threshold_only_adds_halts(self):
        lower = TicketSimplePolicy(theta0=380, theta1=5)
        higher = TicketSimplePolicy(theta0=420, theta1=5)
        for price in (350, 390, 410, 450):
            for days in (2, 10, 40):
                if lower.decide(ticket_prefix(price, days)) is Action.HALT:
                    assert higher.decide(ticket_prefix(price, days)) is Action.HALT

    def test_complex_band_selection(self):
        policy = TicketComplexPolicy(b1=20, b2=8, d_buy=1, p1=330, p2=360, p3=420)
        assert policy.decide(ticket_prefix(340, 30)) is Action.CONTINUE  # band p1
        assert policy.decide(ticket_prefix(325, 30)) is Action.HALT
        assert policy.decide(ticket_prefix(350, 15)) is Action.HALT  # band p2
        assert policy.decide(ticket_prefix(400, 5)) is Action.HALT  # band p3
        assert policy.decide(ticket_prefix(500, 5)) is Action.CONTINUE
        assert policy.decide(ticket_prefix(999, 0.5)) is Action.HALT  # last-day rule

    def test_complex_boundaries_canonicalized(self):
        policy = TicketComplexPolicy(b1=5, b2=20, d_buy=0, p1=1, p2=2, p3=3)
        assert policy.b1 == 20 and policy.b2 == 5


class TestPolicyClasses:
    @pytest.mark.parametrize(
        "factory",
        [
            bkt_threshold_class,
            afm_threshold_class,
            asset_logistic_class,
            ticket_simple_class,
            ticket_complex_class,
        ],
    )
    def test_samples_stay_in_box(self, factory):
        policy_class = factory()
        rng = generator(5)
        for _ in range(200):
            policy = policy_class.sample(rng)
            assert len(policy.theta) == policy_class.dim
            for value, (lo, hi) in zip(policy.theta, policy_class.parameter_box):
                assert lo - 1e-12 <= value <= hi + 1e-12

    def test_d_hints(self):
        assert ticket_simple_class().d_hint == 3
        assert ticket_complex_class().d_hint == 7
        assert bkt_threshold_class().d_hint == 6
        assert afm_threshold_class().d_hint == 4
        assert asset_logistic_class().d_hint == 4


class TestSerialization:
    @pytest.mark.parametrize(
        "factory",
        [
            bkt_threshold_class,
            afm_threshold_class,
            asset_logistic_class,
            ticket_simple_class,
            ticket_complex_class,
        ],
    )
    def test_round_trip_exact(self, factory, tmp_path):
        policy_class = factory()
        rng = generator(17)
        for i in range(5):
            policy = policy_class.sample(rng)
            path = save_policy(policy, tmp_path / f"p{i}.policy")
            loaded = load_policy(path)
            assert loaded.class_id == policy.class_id
            assert loaded.theta == policy.theta

    def test_unknown_class_rejected(self, tmp_path):
        path = tmp_path / "bad.policy"
        path.write_text("class_id = nonsense\n")
        with pytest.raises(ValueError):
            load_policy(path)

    def test_missing_parameter_rejected(self, tmp_path):
        path = tmp_path / "bad.policy"
        path.write_text("class_id = ticket_simple\ntheta0 = 400.0\n")
        with pytest.raises(ValueError):
            load_policy(path)
