"""Method drivers: execute a configured experiment and produce result rows.

Row semantics by mode:

* online -- one row per episode: that episode's return plus the running
  mean (budget-gathering episodes included, so curves account for the
  cost of exploration).
* budget -- one row per seed: the selected policy's value estimated on a
  fresh evaluation pool drawn per seed (shared across methods for paired
  comparisons).
* pool -- tickets only: one row per stored trajectory, replaying a fixed
  baseline policy over the whole expanded pool.

Seed streams are split per stage (gather / search / execute / eval) so
methods sharing a run seed see aligned environments where that helps
(paired evaluation pools) and independent draws where it matters.
"""

from __future__ import annotations

from collections.abc import Sequence

from .._seeding import generator, spawn_seed
from ..baselines import BoConfig, DomainTemplate, bo_re_search, bo_search, model_based_policy
from ..core import Policy, StoppingDomain
from ..evaluation import (
    evaluate,
    gather_full,
    monte_carlo_on_policy,
    select_best,
)
from ..search import (
    PolicyClass,
    SearchConfig,
    execute,
    gfse_re,
    sample_candidates,
    search_on_pool,
)
from .config import (
    ExperimentConfig,
    build_baseline_policy,
    build_domain,
    build_policy_class,
)
from .results import ResultTable, RunLog

_GATHER, _SEARCH, _EXECUTE, _EVAL = 101, 102, 103, 104


def _oracle_value(
    policy: Policy, domain: StoppingDomain, eval_episodes: int, seed: int
) -> float:
    pool = gather_full(domain, eval_episodes, spawn_seed(seed, _EVAL))
    return evaluate(policy, pool, domain.reward).estimate


def _online_rows(
    table: ResultTable, method: str, seed: int, returns: Sequence[float]
) -> None:
    running = 0.0
    for episode, value in enumerate(returns, start=1):
        running += value
        table.append(method, seed, episode, value, running / episode)


def _run_gfse_seed(
    config: ExperimentConfig,
    domain: StoppingDomain,
    policy_class: PolicyClass,
    seed: int,
    table: ResultTable,
) -> None:
    search = config.search
    search_config = SearchConfig(
        n_candidates=search.n_candidates,
        seed=spawn_seed(seed, _SEARCH),
        workers=search.workers,
    )
    pool = gather_full(domain, search.budget, spawn_seed(seed, _GATHER))
    result = search_on_pool(pool, policy_class, search_config, domain.reward)
    if config.mode == "budget":
        value = _oracle_value(result.best_policy, domain, search.eval_episodes, seed)
        table.append(config.method, seed, search.budget, value, value)
        return
    gather_returns = [
        domain.reward.return_of(t.prefix(len(t))) for t in pool.trajectories
    ]
    executed = execute(
        result.best_policy,
        domain,
        search.episodes - search.budget,
        spawn_seed(seed, _EXECUTE),
    )
    _online_rows(table, config.method, seed, gather_returns + executed)


def _run_mc_seed(config, domain, policy_class, seed, table) -> None:
    search = config.search
    rng = generator(spawn_seed(seed, _SEARCH))
    search_config = SearchConfig(n_candidates=search.n_candidates, seed=0)
    policies = sample_candidates(policy_class, search_config, rng)
    reports = monte_carlo_on_policy(
        policies, domain, search.budget, spawn_seed(seed, _GATHER)
    )
    best = policies[select_best(reports)]
    value = _oracle_value(best, domain, search.eval_episodes, seed)
    table.append(config.method, seed, search.budget, value, value)


def _run_model_based_seed(config, domain, seed, table) -> None:
    search, mb = config.search, config.model_based
    pool = gather_full(domain, search.budget, spawn_seed(seed, _GATHER))
    template = DomainTemplate(
        model=mb.template,
        horizon=domain.horizon,
        posttest_penalty=getattr(domain.reward, "posttest_penalty", 20.0),
        problem_cost=getattr(domain.reward, "problem_cost", 1.0),
    )
    policy = model_based_policy(
        pool,
        template,
        mb.threshold_grid,
        sim_trajectories=mb.sim_trajectories,
        seed=spawn_seed(seed, _SEARCH),
    )
    value = _oracle_value(policy, domain, search.eval_episodes, seed)
    table.append(config.method, seed, search.budget, value, value)


def _run_bo_seed(config, domain, policy_class, seed, table) -> None:
    search, bo = config.search, config.bo
    episodes = search.episodes if config.mode == "online" else search.budget
    bo_config = BoConfig(
        seed=spawn_seed(seed, _SEARCH),
        n_init=bo.n_init,
        refit_every=bo.refit_every,
        ei_candidates=bo.ei_candidates,
    )
    runner = bo_re_search if config.method == "bo_re" else bo_search
    result = runner(domain, policy_class, episodes, bo_config)
    if config.mode == "budget":
        value = _oracle_value(result.best_policy, domain, search.eval_episodes, seed)
        table.append(config.method, seed, episodes, value, value)
    else:
        _online_rows(table, config.method, seed, result.episode_returns)


def _run_gfse_re_seed(config, domain, policy_class, seed, table) -> None:
    search = config.search
    search_config = SearchConfig(
        n_candidates=search.n_candidates,
        seed=spawn_seed(seed, _SEARCH),
        workers=search.workers,
    )
    result = gfse_re(
        domain, policy_class, search_config, search.initial_budget, search.episodes
    )
    _online_rows(table, config.method, seed, result.episode_returns)


def _run_fixed_baseline_seed(config, domain, seed, table) -> None:
    policy = build_baseline_policy(config.baseline_policy)
    method = f"{config.method}:{config.baseline_policy}"
    if config.mode == "pool":
        report = evaluate(policy, domain.pool, domain.reward)
        running = 0.0
        for index, value in enumerate(report.per_trajectory_returns, start=1):
            running += value
            table.append(method, seed, index, value, running / index)
        return
    episodes = config.search.episodes if config.search.episodes else 20
    returns = execute(policy, domain, episodes, spawn_seed(seed, _EXECUTE))
    _online_rows(table, method, seed, returns)


def run_experiment(config: ExperimentConfig, log: RunLog | None = None) -> ResultTable:
    """Run the configured method over all seeds; returns the result table."""
    log = log if log is not None else RunLog()
    table = ResultTable()
    for seed in config.seeds:
        log.start(f"seed-{seed}")
        domain = build_domain(config.domain, seed)
        policy_class = (
            build_policy_class(config.policy_class_kind, config.domain)
            if config.policy_class_kind
            else None
        )
        if config.method == "gfse":
            _run_gfse_seed(config, domain, policy_class, seed, table)
        elif config.method == "mc":
            _run_mc_seed(config, domain, policy_class, seed, table)
        elif config.method == "model_based":
            _run_model_based_seed(config, domain, seed, table)
        elif config.method in ("bo", "bo_re"):
            _run_bo_seed(config, domain, policy_class, seed, table)
        elif config.method == "gfse_re":
            _run_gfse_re_seed(config, domain, policy_class, seed, table)
        elif config.method == "fixed_baseline":
            _run_fixed_baseline_seed(config, domain, seed, table)
        else:  # pragma: no cover - guarded by config validation
            raise ValueError(f"unhandled method {config.method!r}")
        log.finish(f"seed-{seed}", method=config.method)
    return table


def run_to_directory(config: ExperimentConfig) -> tuple[ResultTable, RunLog]:
    """Run and persist results.csv, config echo, and the run log."""
    log = RunLog()
    log.start("run")
    table = run_experiment(config, log)
    out = config.output_dir
    table.write_csv(out / "results.csv")
    config.echo(out / "config.echo.ini")
    log.finish("run", rows=len(table.rows))
    log.write(out / "run.log.json")
    return table, log
