"""Experiment configuration: flat INI-style files, validated up front.

A config fully determines a run, seeds included; the harness echoes the
parsed config next to the results so every table can be regenerated.
Relative output paths resolve against the ``STOPSEARCH_OUT_DIR``
environment variable when it is set.
"""

from __future__ import annotations

import configparser
import os
from dataclasses import dataclass, field
from pathlib import Path

from .._seeding import spawn_seed
from ..core import StoppingDomain
from ..environments import (
    AssetDomain,
    BktDomain,
    SyntheticPriceConfig,
    TicketDataDomain,
    expand_commencements,
    synth_prices,
)
from ..policies import (
    AlwaysHaltPolicy,
    NeverHaltPolicy,
    afm_threshold_class,
    asset_logistic_class,
    bkt_threshold_class,
    ticket_complex_class,
    ticket_simple_class,
)
from ..search import PolicyClass

METHODS = ("gfse", "gfse_re", "mc", "model_based", "bo", "bo_re", "fixed_baseline")
MODES = ("online", "budget", "pool")
DOMAIN_KINDS = ("bkt", "asset", "tickets_synth")
POLICY_CLASS_KINDS = (
    "bkt_threshold",
    "afm_threshold",
    "asset_logistic",
    "ticket_simple",
    "ticket_complex",
)
BASELINE_POLICIES = ("always_halt", "never_halt")

OUT_DIR_ENV = "STOPSEARCH_OUT_DIR"


class ConfigError(ValueError):
    """Invalid experiment configuration; names the offending field."""

    def __init__(self, fieldname: str, message: str) -> None:
        super().__init__(f"{fieldname}: {message}")
        self.fieldname = fieldname


def _parse_seeds(raw: str) -> tuple[int, ...]:
    raw = raw.strip()
    try:
        if ".." in raw:
            lo, hi = raw.split("..")
            seeds = tuple(range(int(lo), int(hi) + 1))
        else:
            seeds = tuple(int(part) for part in raw.split(",") if part.strip())
    except ValueError:
        raise ConfigError("experiment.seeds", f"cannot parse {raw!r}") from None
    if not seeds:
        raise ConfigError("experiment.seeds", "at least one seed is required")
    return seeds


def parse_threshold_grid(raw: str) -> tuple[float, ...]:
    """Either ``lo:hi:count`` or a comma-separated list."""
    raw = raw.strip()
    if ":" in raw:
        parts = raw.split(":")
        if len(parts) != 3:
            raise ConfigError("model_based.threshold_grid", "expected lo:hi:count")
        lo, hi, count = float(parts[0]), float(parts[1]), int(parts[2])
        if count < 1 or hi < lo:
            raise ConfigError("model_based.threshold_grid", "need count >= 1, hi >= lo")
        if count == 1:
            return (lo,)
        step = (hi - lo) / (count - 1)
        return tuple(lo + i * step for i in range(count))
    values = tuple(float(part) for part in raw.split(",") if part.strip())
    if not values:
        raise ConfigError("model_based.threshold_grid", "empty grid")
    return values


@dataclass(frozen=True)
class DomainSettings:
    kind: str
    params: dict[str, float] = field(default_factory=dict)
    min_length: int = 30  # tickets only: commencement length cutoff


@dataclass(frozen=True)
class SearchSettings:
    n_candidates: int = 500
    budget: int = 0
    episodes: int = 0
    initial_budget: int = 5
    eval_episodes: int = 2000
    workers: int = 1


@dataclass(frozen=True)
class ModelBasedSettings:
    template: str = "bkt"
    threshold_grid: tuple[float, ...] = tuple(0.05 + 0.05 * i for i in range(19))
    sim_trajectories: int = 2000


@dataclass(frozen=True)
class BoSettings:
    n_init: int = 3
    refit_every: int = 5
    ei_candidates: int = 256


@dataclass(frozen=True)
class ExperimentConfig:
    method: str
    mode: str
    seeds: tuple[int, ...]
    output_dir: Path
    domain: DomainSettings
    policy_class_kind: str | None
    search: SearchSettings
    model_based: ModelBasedSettings
    bo: BoSettings
    baseline_policy: str | None
    raw: configparser.ConfigParser

    def echo(self, path: str | Path) -> Path:
        path = Path(path)
        path.parent.mkdir(parents=True, exist_ok=True)
        with open(path, "w") as fh:
            self.raw.write(fh)
        return path


def resolve_output_dir(raw_path: str) -> Path:
    path = Path(raw_path)
    if not path.is_absolute():
        base = os.environ.get(OUT_DIR_ENV)
        if base:
            path = Path(base) / path
    return path


_DOMAIN_FIELDS = {
    "bkt": {
        "p_i": float, "p_t": float, "p_g": float, "p_s": float,
        "horizon": int, "posttest_penalty": float, "problem_cost": float,
    },
    "asset": {
        "d": int, "x_max": float, "depreciation_mean": float,
        "depreciation_std": float, "signal_noise_std": float,
        "utility_per_step": float, "replacement_cost_base": float,
        "cost_growth": float, "worthless_penalty": float, "horizon": int,
    },
    "tickets_synth": {
        "n_series": int, "length_min": int, "length_max": int,
        "base_price": float, "volatility": float, "persistence": float,
        "drift": float, "ramp_days": int, "far_weight": float,
        "min_length": int,
    },
}


def _get_typed(section, section_name: str, key: str, kind, default=None):
    if key not in section:
        return default
    raw = section[key]
    try:
        return kind(raw)
    except ValueError:
        raise ConfigError(
            f"{section_name}.{key}", f"cannot parse {raw!r} as {kind.__name__}"
        ) from None


def load_config(path: str | Path) -> ExperimentConfig:
    parser = configparser.ConfigParser()
    read = parser.read(path)
    if not read:
        raise ConfigError("config", f"cannot read {path}")
    if "experiment" not in parser:
        raise ConfigError("experiment", "missing [experiment] section")
    exp = parser["experiment"]
    method = exp.get("method", "").strip()
    if method not in METHODS:
        raise ConfigError("experiment.method", f"must be one of {METHODS}")
    if "seeds" not in exp:
        raise ConfigError("experiment.seeds", "missing")
    seeds = _parse_seeds(exp["seeds"])
    if "output_dir" not in exp:
        raise ConfigError("experiment.output_dir", "missing")
    output_dir = resolve_output_dir(exp["output_dir"])

    if "domain" not in parser:
        raise ConfigError("domain", "missing [domain] section")
    dom = parser["domain"]
    kind = dom.get("kind", "").strip()
    if kind not in DOMAIN_KINDS:
        raise ConfigError("domain.kind", f"must be one of {DOMAIN_KINDS}")
    params: dict[str, float] = {}
    for key, value in dom.items():
        if key == "kind":
            continue
        spec = _DOMAIN_FIELDS[kind]
        if key not in spec:
            raise ConfigError(f"domain.{key}", f"unknown key for domain {kind!r}")
        try:
            params[key] = spec[key](value)
        except ValueError:
            raise ConfigError(f"domain.{key}", f"cannot parse {value!r}") from None
    min_length = int(params.pop("min_length", 30)) if kind == "tickets_synth" else 30
    domain = DomainSettings(kind, params, min_length)

    pc_kind = None
    if "policy_class" in parser:
        pc_kind = parser["policy_class"].get("kind", "").strip() or None
        if pc_kind is not None and pc_kind not in POLICY_CLASS_KINDS:
            raise ConfigError(
                "policy_class.kind", f"must be one of {POLICY_CLASS_KINDS}"
            )

    search_section = parser["search"] if "search" in parser else {}
    search = SearchSettings(
        n_candidates=_get_typed(search_section, "search", "n_candidates", int, 500),
        budget=_get_typed(search_section, "search", "budget", int, 0),
        episodes=_get_typed(search_section, "search", "episodes", int, 0),
        initial_budget=_get_typed(search_section, "search", "initial_budget", int, 5),
        eval_episodes=_get_typed(search_section, "search", "eval_episodes", int, 2000),
        workers=_get_typed(search_section, "search", "workers", int, 1),
    )
    if search.workers < 1:
        raise ConfigError("search.workers", "must be at least 1")

    mb_section = parser["model_based"] if "model_based" in parser else {}
    template = (
        mb_section.get("template", "bkt").strip() if mb_section else "bkt"
    )
    if template not in ("bkt", "afm"):
        raise ConfigError("model_based.template", "must be 'bkt' or 'afm'")
    grid = ModelBasedSettings().threshold_grid
    if mb_section and "threshold_grid" in mb_section:
        grid = parse_threshold_grid(mb_section["threshold_grid"])
    model_based = ModelBasedSettings(
        template=template,
        threshold_grid=grid,
        sim_trajectories=_get_typed(
            mb_section, "model_based", "sim_trajectories", int, 2000
        ),
    )

    bo_section = parser["bo"] if "bo" in parser else {}
    bo = BoSettings(
        n_init=_get_typed(bo_section, "bo", "n_init", int, 3),
        refit_every=_get_typed(bo_section, "bo", "refit_every", int, 5),
        ei_candidates=_get_typed(bo_section, "bo", "ei_candidates", int, 256),
    )

    baseline_policy = None
    if "fixed_baseline" in parser:
        baseline_policy = parser["fixed_baseline"].get("policy", "").strip() or None
        if baseline_policy is not None and baseline_policy not in BASELINE_POLICIES:
            raise ConfigError(
                "fixed_baseline.policy", f"must be one of {BASELINE_POLICIES}"
            )

    mode = exp.get("mode", "").strip()
    if not mode:
        mode = _default_mode(method, domain.kind, search)
    if mode not in MODES:
        raise ConfigError("experiment.mode", f"must be one of {MODES}")

    config = ExperimentConfig(
        method=method,
        mode=mode,
        seeds=seeds,
        output_dir=output_dir,
        domain=domain,
        policy_class_kind=pc_kind,
        search=search,
        model_based=model_based,
        bo=bo,
        baseline_policy=baseline_policy,
        raw=parser,
    )
    _validate_combination(config)
    return config


def _default_mode(method: str, domain_kind: str, search: SearchSettings) -> str:
    if method == "fixed_baseline":
        return "pool" if domain_kind == "tickets_synth" else "online"
    if method in ("mc", "model_based"):
        return "budget"
    if method in ("gfse_re",):
        return "online"
    if method in ("bo", "bo_re"):
        return "online" if search.episodes else "budget"
    # gfse: online run when an episode horizon is given, else budget summary
    return "online" if search.episodes else "budget"


def _validate_combination(config: ExperimentConfig) -> None:
    method, mode, search = config.method, config.mode, config.search
    need_class = method in ("gfse", "gfse_re", "mc", "bo", "bo_re")
    if need_class and config.policy_class_kind is None:
        raise ConfigError("policy_class.kind", f"required by method {method!r}")
    if method == "fixed_baseline" and config.baseline_policy is None:
        raise ConfigError("fixed_baseline.policy", "required by fixed_baseline")
    if method in ("gfse", "mc", "model_based") and search.budget < 1:
        raise ConfigError("search.budget", f"required by method {method!r}")
    if mode == "online" and method != "fixed_baseline" and search.episodes < 1:
        raise ConfigError("search.episodes", "required in online mode")
    if method == "gfse" and mode == "online" and search.episodes <= search.budget:
        raise ConfigError("search.episodes", "must exceed search.budget (gather phase)")
    if method == "gfse_re":
        if search.initial_budget < 1:
            raise ConfigError("search.initial_budget", "must be at least 1")
        if search.episodes <= search.initial_budget:
            raise ConfigError("search.episodes", "must exceed search.initial_budget")
    if method in ("bo", "bo_re"):
        episodes = search.episodes if mode == "online" else search.budget
        if episodes < 2:
            raise ConfigError("search.episodes", "bo needs at least 2 episodes")
    if mode == "budget" and search.eval_episodes < 1:
        raise ConfigError("search.eval_episodes", "must be at least 1 in budget mode")
    if mode == "pool" and config.domain.kind != "tickets_synth":
        raise ConfigError("experiment.mode", "pool mode requires a tickets domain")


def build_domain(settings: DomainSettings, seed: int) -> StoppingDomain:
    """Instantiate the configured domain.

    Generative domains ignore ``seed`` (episode seeds drive them); the
    synthetic ticket domain derives a fresh dataset per run seed.
    """
    if settings.kind == "bkt":
        return BktDomain(**settings.params)
    if settings.kind == "asset":
        return AssetDomain(**settings.params)
    synth_config = SyntheticPriceConfig(
        **{
            key: (int(value) if key in ("n_series", "length_min", "length_max", "ramp_days") else value)
            for key, value in settings.params.items()
        }
    )
    dataset = synth_prices(synth_config, spawn_seed(seed, 0xDA7A))
    pool = expand_commencements(dataset, min_length=settings.min_length)
    return TicketDataDomain(pool, price_cap=synth_config.price_cap())


def build_policy_class(kind: str, domain_settings: DomainSettings) -> PolicyClass:
    if kind == "bkt_threshold":
        return bkt_threshold_class()
    if kind == "afm_threshold":
        return afm_threshold_class()
    if kind == "asset_logistic":
        x_max = domain_settings.params.get("x_max", 100.0)
        return asset_logistic_class(x_max=x_max)
    base = domain_settings.params.get("base_price", 400.0)
    drift = domain_settings.params.get("drift", 0.45)
    price_range = (0.6 * base, 1.2 * base * (1.0 + drift))
    if kind == "ticket_simple":
        return ticket_simple_class(price_range=price_range)
    if kind == "ticket_complex":
        return ticket_complex_class(price_range=price_range)
    raise ConfigError("policy_class.kind", f"unknown kind {kind!r}")


def build_baseline_policy(name: str):
    if name == "always_halt":
        return AlwaysHaltPolicy()
    if name == "never_halt":
        return NeverHaltPolicy()
    raise ConfigError("fixed_baseline.policy", f"unknown baseline {name!r}")
