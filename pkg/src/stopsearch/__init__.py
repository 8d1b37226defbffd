"""stopsearch: learn near-optimal stopping policies from environment data.

Gather full-horizon trajectories once, evaluate an entire policy class on
them by replay, execute the empirical argmax -- plus the sample-complexity
bound that certifies the pool size, three experiment domains, and the
baselines the method is measured against.
"""

from .bounds import BoundInputs, certify_estimates, required_trajectories
from .core import (
    Action,
    Episode,
    FullTrajectory,
    Observation,
    Policy,
    Prefix,
    RewardModel,
    SchemaError,
    StoppingDomain,
    halt_time,
    simulate_return,
)
from .evaluation import (
    EvalReport,
    StoredEpisode,
    TrajectoryPool,
    evaluate,
    evaluate_batch,
    gather_full,
    load_pool_csv,
    monte_carlo_on_policy,
    save_pool_csv,
    select_best,
    usable_return,
)
from .search import (
    GfseReResult,
    GfseResult,
    PolicyClass,
    SearchConfig,
    execute,
    gfse,
    gfse_re,
    search_on_pool,
)

__version__ = "0.1.0"

__all__ = [
    "Action",
    "BoundInputs",
    "Episode",
    "EvalReport",
    "FullTrajectory",
    "GfseReResult",
    "GfseResult",
    "Observation",
    "Policy",
    "PolicyClass",
    "Prefix",
    "RewardModel",
    "SchemaError",
    "SearchConfig",
    "StoppingDomain",
    "StoredEpisode",
    "TrajectoryPool",
    "certify_estimates",
    "evaluate",
    "evaluate_batch",
    "execute",
    "gather_full",
    "gfse",
    "gfse_re",
    "halt_time",
    "load_pool_csv",
    "monte_carlo_on_policy",
    "required_trajectories",
    "save_pool_csv",
    "search_on_pool",
    "select_best",
    "simulate_return",
    "usable_return",
]
