"""Simulated student tutoring as a stopping problem.

A student works through up to H practice problems; after each decision
point the tutor may stop assigning practice.  The trajectory step at
which the tutor halts is the student's final, scored attempt, so a good
policy stops as soon as the student is likely to get the next problem
right -- balancing practice cost against the risk of stopping too early.

Students are simulated with a two-state mastery process: mastery starts
with probability ``p_i``, is gained after any step with probability
``p_t`` (and never lost), and answers are correct with probability
``1 - p_s`` when mastered (slip) and ``p_g`` otherwise (guess).

The realized return for halting after ``t`` observed attempts is

    -(problem_cost * t + posttest_penalty * P(last attempt incorrect))

where the incorrectness probability comes from the *generating* process's
own filter over the first ``t - 1`` outcomes.  Using the expectation
instead of a sampled test outcome keeps the reward a deterministic
function of the observations; all stochasticity lives in the trajectory.
The environment computes this internally -- learners only ever see
realized returns, never the generating parameters.
"""

from __future__ import annotations

from collections.abc import Iterator

import numpy as np

from ..core import FullTrajectory, Observation, Prefix, RewardModel, StoppingDomain
from .._seeding import generator
from ..policies import _logistic, afm_predict_correct, bkt_predict_correct

FEATURES = ("correct",)


def _validate_probability(name: str, value: float, closed: bool = True) -> None:
    lo_ok = value >= 0.0 if closed else value > 0.0
    hi_ok = value <= 1.0 if closed else value < 1.0
    if not (lo_ok and hi_ok):
        raise ValueError(f"{name} must be a probability, got {value}")


class TutoringReward(RewardModel):
    """Practice cost plus expected-posttest penalty under the true filter."""

    def __init__(
        self,
        p_i: float,
        p_t: float,
        p_g: float,
        p_s: float,
        horizon: int,
        posttest_penalty: float = 20.0,
        problem_cost: float = 1.0,
    ) -> None:
        self.p_i, self.p_t, self.p_g, self.p_s = p_i, p_t, p_g, p_s
        self.horizon = horizon
        self.posttest_penalty = posttest_penalty
        self.problem_cost = problem_cost

    @property
    def v_max(self) -> float:
        return self.problem_cost * self.horizon + self.posttest_penalty

    def return_of(self, prefix: Prefix) -> float:
        outcomes = prefix.column("correct")
        t = len(outcomes)
        predicted = bkt_predict_correct(
            self.p_i, self.p_t, self.p_g, self.p_s, outcomes[:-1]
        )
        return -(self.problem_cost * t + self.posttest_penalty * (1.0 - predicted))


class BktDomain(StoppingDomain):
    """Two-state mastery student simulator with the tutoring reward."""

    def __init__(
        self,
        p_i: float = 0.18,
        p_t: float = 0.2,
        p_g: float = 0.2,
        p_s: float = 0.1,
        horizon: int = 20,
        posttest_penalty: float = 20.0,
        problem_cost: float = 1.0,
    ) -> None:
        for name, value in (("p_i", p_i), ("p_t", p_t), ("p_g", p_g), ("p_s", p_s)):
            _validate_probability(name, value)
        if posttest_penalty < 0 or problem_cost <= 0:
            raise ValueError("posttest_penalty must be >= 0 and problem_cost > 0")
        self.p_i, self.p_t, self.p_g, self.p_s = p_i, p_t, p_g, p_s
        reward = TutoringReward(
            p_i, p_t, p_g, p_s, horizon, posttest_penalty, problem_cost
        )
        super().__init__("bkt", horizon, FEATURES, reward)

    def _latent_stream(
        self, rng: np.random.Generator
    ) -> Iterator[tuple[Observation, bool]]:
        # Two uniforms per step in fixed order, so truncation never shifts
        # the stream.
        mastered = bool(rng.random() < self.p_i)
        while True:
            u_obs = rng.random()
            u_transition = rng.random()
            p_correct = (1.0 - self.p_s) if mastered else self.p_g
            correct = u_obs < p_correct
            yield (1.0 if correct else 0.0,), mastered
            if not mastered and u_transition < self.p_t:
                mastered = True

    def _stream(self, rng: np.random.Generator) -> Iterator[Observation]:
        for observation, _ in self._latent_stream(rng):
            yield observation

    def sample_with_latent(self, seed: int) -> tuple[FullTrajectory, tuple[bool, ...]]:
        """Full trajectory plus the hidden mastery flag at each emission.

        The latent states are exposed for oracle-style tests only; they are
        not part of any observation.
        """
        rng = generator(seed)
        stream = self._latent_stream(rng)
        rows, states = [], []
        for _ in range(self.horizon):
            observation, mastered = next(stream)
            rows.append(observation)
            states.append(mastered)
        trajectory = FullTrajectory(FEATURES, tuple(rows), seed, self.domain_id)
        return trajectory, tuple(states)


class AfmBeliefReward(RewardModel):
    """Tutoring reward whose posttest belief is a logistic count model.

    Used when simulating from a fitted logistic student model: the
    simulator's own belief about the final attempt stands in for the true
    filter.
    """

    def __init__(
        self,
        beta1: float,
        beta2: float,
        horizon: int,
        posttest_penalty: float = 20.0,
        problem_cost: float = 1.0,
    ) -> None:
        self.beta1, self.beta2 = beta1, beta2
        self.horizon = horizon
        self.posttest_penalty = posttest_penalty
        self.problem_cost = problem_cost

    @property
    def v_max(self) -> float:
        return self.problem_cost * self.horizon + self.posttest_penalty

    def return_of(self, prefix: Prefix) -> float:
        outcomes = prefix.column("correct")
        t = len(outcomes)
        predicted = afm_predict_correct(self.beta1, self.beta2, outcomes[:-1])
        return -(self.problem_cost * t + self.posttest_penalty * (1.0 - predicted))


class AfmSimDomain(StoppingDomain):
    """Student simulator whose correctness probability is logistic in the
    number of previous correct answers.  Primarily used to simulate from a
    fitted model inside the model-based baseline."""

    def __init__(
        self,
        beta1: float,
        beta2: float,
        horizon: int = 20,
        posttest_penalty: float = 20.0,
        problem_cost: float = 1.0,
    ) -> None:
        self.beta1, self.beta2 = beta1, beta2
        reward = AfmBeliefReward(beta1, beta2, horizon, posttest_penalty, problem_cost)
        super().__init__("afm_sim", horizon, FEATURES, reward)

    def _stream(self, rng: np.random.Generator) -> Iterator[Observation]:
        n_correct = 0
        while True:
            u = rng.random()
            correct = u < _logistic(self.beta1 + self.beta2 * n_correct)
            yield (1.0 if correct else 0.0,)
            if correct:
                n_correct += 1
