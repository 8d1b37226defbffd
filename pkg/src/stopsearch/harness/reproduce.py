"""Bundled desk-scale experiments mirroring the headline comparisons.

Each figure writes one CSV per method curve (standard result-table
format), a manifest with every parameter and seed, and, unless disabled,
a rendered chart next to the CSVs.  Scales are chosen to finish on a
laptop; flags on the CLI shrink them further for smoke runs.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path

from .._seeding import spawn_seed
from ..baselines import BoConfig, DomainTemplate, bo_re_search, bo_search, model_based_policy
from ..core import StoppingDomain
from ..environments import (
    AssetDomain,
    BktDomain,
    SyntheticPriceConfig,
    TicketReward,
    best_possible_returns,
    expand_commencements,
    synth_prices,
)
from ..evaluation import evaluate, gather_full
from ..policies import (
    AlwaysHaltPolicy,
    NeverHaltPolicy,
    asset_logistic_class,
    bkt_threshold_class,
    ticket_complex_class,
    ticket_simple_class,
)
from ..search import SearchConfig, execute, gfse_re, search_on_pool
from .results import ResultTable
from .runner import _online_rows

FIGURES = (
    "tutoring-budget",
    "tutoring-cumulative",
    "tutoring-augmented",
    "asset",
    "tickets",
)

_GATHER, _SEARCH, _EXECUTE, _EVAL = 101, 102, 103, 104


@dataclass(frozen=True)
class ReproduceOptions:
    seeds: int = 20
    episodes: int = 30
    budgets: tuple[int, ...] = (30, 100, 300, 1000)
    bo_budget_cap: int = 100
    n_candidates: int = 500
    eval_episodes: int = 3000
    render: bool = True


@dataclass
class FigureOutput:
    figure: str
    directory: Path
    csv_paths: dict[str, Path] = field(default_factory=dict)
    png_path: Path | None = None


def _write_tables(
    figure: str, out_dir: Path, tables: dict[str, ResultTable], manifest: dict
) -> FigureOutput:
    directory = out_dir / figure
    directory.mkdir(parents=True, exist_ok=True)
    output = FigureOutput(figure, directory)
    for method, table in tables.items():
        path = directory / f"{method}.csv"
        table.write_csv(path)
        output.csv_paths[method] = path
    with open(directory / "manifest.json", "w") as fh:
        json.dump(manifest, fh, indent=2, sort_keys=True)
        fh.write("\n")
    return output


def _bkt_eval_pool(domain: BktDomain, options: ReproduceOptions, seed: int):
    return gather_full(domain, options.eval_episodes, spawn_seed(seed, _EVAL))


def _tutoring_budget(out_dir: Path, options: ReproduceOptions) -> FigureOutput:
    domain = BktDomain()
    bkt_class = bkt_threshold_class()
    tables = {
        "gfse": ResultTable(),
        "model_based_matched": ResultTable(),
        "model_based_mismatched": ResultTable(),
        "bo": ResultTable(),
    }
    grid = tuple(0.05 + 0.05 * i for i in range(19))
    for seed in range(1, options.seeds + 1):
        eval_pool = _bkt_eval_pool(domain, options, seed)

        def true_value(policy) -> float:
            return evaluate(policy, eval_pool, domain.reward).estimate

        for budget in options.budgets:
            pool = gather_full(domain, budget, spawn_seed(seed, _GATHER))
            result = search_on_pool(
                pool,
                bkt_class,
                SearchConfig(
                    n_candidates=options.n_candidates, seed=spawn_seed(seed, _SEARCH)
                ),
                domain.reward,
            )
            value = true_value(result.best_policy)
            tables["gfse"].append("gfse", seed, budget, value, value)
            for name, template in (
                ("model_based_matched", "bkt"),
                ("model_based_mismatched", "afm"),
            ):
                policy = model_based_policy(
                    pool,
                    DomainTemplate(
                        template,
                        domain.horizon,
                        domain.reward.posttest_penalty,
                        domain.reward.problem_cost,
                    ),
                    grid,
                    seed=spawn_seed(seed, _SEARCH),
                )
                value = true_value(policy)
                tables[name].append(name, seed, budget, value, value)
            if budget <= options.bo_budget_cap:
                bo_result = bo_search(
                    domain,
                    bkt_class,
                    budget,
                    BoConfig(seed=spawn_seed(seed, _SEARCH)),
                )
                value = true_value(bo_result.best_policy)
                tables["bo"].append("bo", seed, budget, value, value)
    manifest = {
        "figure": "tutoring-budget",
        "seeds": options.seeds,
        "budgets": list(options.budgets),
        "bo_budget_cap": options.bo_budget_cap,
        "n_candidates": options.n_candidates,
        "eval_episodes": options.eval_episodes,
        "threshold_grid": list(grid),
        "domain": "bkt defaults",
    }
    return _write_tables("tutoring-budget", out_dir, tables, manifest)


def _gfse_online_returns(
    domain: StoppingDomain, policy_class, budget: int, episodes: int, seed: int,
    n_candidates: int,
) -> list[float]:
    pool = gather_full(domain, budget, spawn_seed(seed, _GATHER))
    result = search_on_pool(
        pool,
        policy_class,
        SearchConfig(n_candidates=n_candidates, seed=spawn_seed(seed, _SEARCH)),
        domain.reward,
    )
    gather_returns = [domain.reward.return_of(t.prefix(len(t))) for t in pool]
    executed = execute(
        result.best_policy, domain, episodes - budget, spawn_seed(seed, _EXECUTE)
    )
    return gather_returns + executed


def _tutoring_cumulative(out_dir: Path, options: ReproduceOptions) -> FigureOutput:
    domain = BktDomain()
    bkt_class = bkt_threshold_class()
    initial_budgets = tuple(k for k in (2, 5, 10) if k < options.episodes)
    tables = {f"gfse-{k}": ResultTable() for k in initial_budgets}
    tables["bo"] = ResultTable()
    for seed in range(1, options.seeds + 1):
        for k in initial_budgets:
            returns = _gfse_online_returns(
                domain, bkt_class, k, options.episodes, seed, options.n_candidates
            )
            _online_rows(tables[f"gfse-{k}"], f"gfse-{k}", seed, returns)
        bo_result = bo_search(
            domain,
            bkt_class,
            options.episodes,
            BoConfig(seed=spawn_seed(seed, _SEARCH)),
        )
        _online_rows(tables["bo"], "bo", seed, bo_result.episode_returns)
    manifest = {
        "figure": "tutoring-cumulative",
        "seeds": options.seeds,
        "episodes": options.episodes,
        "initial_budgets": list(initial_budgets),
        "n_candidates": options.n_candidates,
    }
    return _write_tables("tutoring-cumulative", out_dir, tables, manifest)


def _tutoring_augmented(out_dir: Path, options: ReproduceOptions) -> FigureOutput:
    domain = BktDomain()
    bkt_class = bkt_threshold_class()
    initial = 5
    tables = {
        f"gfse-{initial}": ResultTable(),
        f"gfse_re-{initial}": ResultTable(),
        "bo": ResultTable(),
        "bo_re": ResultTable(),
    }
    for seed in range(1, options.seeds + 1):
        returns = _gfse_online_returns(
            domain, bkt_class, initial, options.episodes, seed, options.n_candidates
        )
        _online_rows(tables[f"gfse-{initial}"], f"gfse-{initial}", seed, returns)
        re_result = gfse_re(
            domain,
            bkt_class,
            SearchConfig(
                n_candidates=options.n_candidates, seed=spawn_seed(seed, _SEARCH)
            ),
            initial,
            options.episodes,
        )
        _online_rows(
            tables[f"gfse_re-{initial}"], f"gfse_re-{initial}", seed,
            re_result.episode_returns,
        )
        for name, runner in (("bo", bo_search), ("bo_re", bo_re_search)):
            result = runner(
                domain,
                bkt_class,
                options.episodes,
                BoConfig(seed=spawn_seed(seed, _SEARCH)),
            )
            _online_rows(tables[name], name, seed, result.episode_returns)
    manifest = {
        "figure": "tutoring-augmented",
        "seeds": options.seeds,
        "episodes": options.episodes,
        "initial_budget": initial,
        "n_candidates": options.n_candidates,
    }
    return _write_tables("tutoring-augmented", out_dir, tables, manifest)


def _asset(out_dir: Path, options: ReproduceOptions) -> FigureOutput:
    domain = AssetDomain()
    policy_class = asset_logistic_class(x_max=domain.x_max)
    gfse_budget = 5
    tables = {
        "gfse-5": ResultTable(),
        "bo": ResultTable(),
        "replace_immediately": ResultTable(),
        "never_replace": ResultTable(),
        "hindsight_optimal": ResultTable(),
    }
    for seed in range(1, options.seeds + 1):
        returns = _gfse_online_returns(
            domain, policy_class, gfse_budget, options.episodes, seed,
            options.n_candidates,
        )
        _online_rows(tables["gfse-5"], "gfse-5", seed, returns)
        bo_result = bo_search(
            domain,
            policy_class,
            options.episodes,
            BoConfig(seed=spawn_seed(seed, _SEARCH)),
        )
        _online_rows(tables["bo"], "bo", seed, bo_result.episode_returns)
        for name, policy in (
            ("replace_immediately", AlwaysHaltPolicy()),
            ("never_replace", NeverHaltPolicy()),
        ):
            fixed = execute(
                policy, domain, options.episodes, spawn_seed(seed, _EXECUTE)
            )
            _online_rows(tables[name], name, seed, fixed)
        hindsight = []
        for episode in range(options.episodes):
            trajectory = domain.sample_full(
                spawn_seed(spawn_seed(seed, _EXECUTE), episode)
            )
            hindsight.append(
                max(
                    domain.reward.return_of(trajectory.prefix(t))
                    for t in range(1, len(trajectory) + 1)
                )
            )
        _online_rows(tables["hindsight_optimal"], "hindsight_optimal", seed, hindsight)
    manifest = {
        "figure": "asset",
        "seeds": options.seeds,
        "episodes": options.episodes,
        "gfse_budget": gfse_budget,
        "n_candidates": options.n_candidates,
        "domain": "asset defaults",
    }
    return _write_tables("asset", out_dir, tables, manifest)


def _tickets(out_dir: Path, options: ReproduceOptions) -> FigureOutput:
    synth_config = SyntheticPriceConfig()
    min_length = 30
    tables = {
        name: ResultTable()
        for name in (
            "ours_simple",
            "ours_complex",
            "earliest",
            "latest",
            "best_possible",
        )
    }
    price_range = (
        0.6 * synth_config.base_price,
        1.2 * synth_config.base_price * (1.0 + synth_config.drift),
    )
    simple_class = ticket_simple_class(price_range=price_range)
    complex_class = ticket_complex_class(price_range=price_range)
    for seed in range(1, options.seeds + 1):
        train = expand_commencements(
            synth_prices(synth_config, spawn_seed(seed, 0xDA7A)), min_length
        )
        test = expand_commencements(
            synth_prices(synth_config, spawn_seed(seed, 0x7E57)), min_length
        )
        reward = TicketReward(synth_config.price_cap())
        for name, policy_class in (
            ("ours_simple", simple_class),
            ("ours_complex", complex_class),
        ):
            result = search_on_pool(
                train,
                policy_class,
                SearchConfig(
                    n_candidates=options.n_candidates, seed=spawn_seed(seed, _SEARCH)
                ),
                reward,
            )
            value = evaluate(result.best_policy, test, reward).estimate
            tables[name].append(name, seed, 0, value, value)
        earliest = evaluate(AlwaysHaltPolicy(), test, reward).estimate
        latest = evaluate(NeverHaltPolicy(), test, reward).estimate
        best = sum(best_possible_returns(test)) / len(test)
        tables["earliest"].append("earliest", seed, 0, earliest, earliest)
        tables["latest"].append("latest", seed, 0, latest, latest)
        tables["best_possible"].append("best_possible", seed, 0, best, best)
    manifest = {
        "figure": "tickets",
        "seeds": options.seeds,
        "n_candidates": options.n_candidates,
        "min_length": min_length,
        "synthetic_config": synth_config.__dict__,
    }
    return _write_tables("tickets", out_dir, tables, manifest)


_DRIVERS = {
    "tutoring-budget": _tutoring_budget,
    "tutoring-cumulative": _tutoring_cumulative,
    "tutoring-augmented": _tutoring_augmented,
    "asset": _asset,
    "tickets": _tickets,
}


def reproduce_figure(
    figure: str, out_dir: str | Path, options: ReproduceOptions | None = None
) -> FigureOutput:
    """Run one bundled experiment; writes CSVs (and a chart) under
    ``out_dir/<figure>/``."""
    if figure not in _DRIVERS:
        raise ValueError(f"unknown figure {figure!r}; choose from {FIGURES}")
    options = options or ReproduceOptions()
    output = _DRIVERS[figure](Path(out_dir), options)
    if options.render:
        from . import plots

        output.png_path = plots.render_figure(output)
    return output
