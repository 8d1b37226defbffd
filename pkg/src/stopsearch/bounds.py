"""Sample-size certification for uniform policy-value estimation.

For a policy class of VC-dimension ``d`` (as maps from histories to the
two actions), the number of full trajectories sufficient for every
policy's empirical value estimate to be within ``epsilon`` of its true
value, simultaneously, with probability ``1 - delta``, scales as

    n = ceil( c * (v_max / epsilon)^2 * (d * ln H + ln(1 / delta)) )

The logarithmic dependence on the horizon comes from the stopping
structure: a full trajectory of length H supports only H distinct
behaviours, so the class of induced return maps has capacity O(d log H).
The multiplicative constant hidden by the asymptotic statement is exposed
as ``constant_c`` (default 1) rather than baked in; the underlying
uniform-convergence argument does not pin it down, and experiments
routinely run far below the certified n.

VC dimensions of concrete policy classes are supplied by the caller.  The
bundled classes ship a *heuristic, non-rigorous* default of one plus the
number of free threshold parameters (see ``PolicyClass.d_hint``).
"""

from __future__ import annotations

import math
from dataclasses import dataclass

from .evaluation import EvalReport


@dataclass(frozen=True)
class BoundInputs:
    """Inputs to the trajectory-count bound.

    epsilon     accuracy target for every policy's value estimate (> 0)
    delta       allowed failure probability, in (0, 1)
    v_max       bound on the magnitude of any return (> 0)
    d           VC-dimension of the policy class (positive integer)
    horizon     maximum trajectory length, >= 2
    constant_c  explicit multiplicative constant (> 0, default 1)
    """

    epsilon: float
    delta: float
    v_max: float
    d: int
    horizon: int
    constant_c: float = 1.0

    def validate(self) -> None:
        if not self.epsilon > 0:
            raise ValueError("epsilon must be > 0")
        if not 0 < self.delta < 1:
            raise ValueError("delta must lie in (0, 1)")
        if not self.v_max > 0:
            raise ValueError("v_max must be > 0")
        if self.d < 1:
            raise ValueError("d must be a positive integer")
        if self.horizon < 2:
            raise ValueError("horizon must be at least 2")
        if not self.constant_c > 0:
            raise ValueError("constant_c must be > 0")


def required_trajectories(inputs: BoundInputs) -> int:
    """Number of full trajectories certifying uniform epsilon-accuracy.

    Natural logarithms throughout; any base change is absorbed into
    ``constant_c``.  Monotonically nondecreasing in v_max, d, horizon,
    1/epsilon and 1/delta.
    """
    inputs.validate()
    ratio = inputs.v_max / inputs.epsilon
    capacity = inputs.d * math.log(inputs.horizon) + math.log(1.0 / inputs.delta)
    return math.ceil(inputs.constant_c * ratio * ratio * capacity)


def certify_estimates(reports: list[EvalReport], inputs: BoundInputs) -> bool:
    """Whether a batch of estimates is backed by a certified trajectory count.

    All reports must come from the same trajectory set; mixed sample sizes
    are rejected.  True iff that shared size meets ``required_trajectories``.
    """
    sizes = {report.n_used for report in reports}
    if len(sizes) > 1:
        raise ValueError(f"reports mix trajectory-set sizes: {sorted(sizes)}")
    n = sizes.pop() if sizes else 0
    return n >= required_trajectories(inputs)
