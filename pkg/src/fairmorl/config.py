"""Experiment configuration: parsing, validation, environment construction.

Configs are a single YAML file with ``env``, ``agent``, ``metrics``,
``out_dir`` and ``seeds`` sections. Unknown keys are rejected so typos in
hyperparameter names fail loudly. The agent's ``lambda`` may be a scalar or
a list; a list produces one run per (lambda, seed) pair.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
import yaml

from .agent import AgentConfig
from .dst import DeepSeaTreasureEnv
from .tndp import CityGrid, TransportEnv, load_city

_TOP_KEYS = {"env", "agent", "metrics", "out_dir", "seeds"}
_ENV_KEYS = {
    "tndp": {"kind", "grid_rows", "grid_cols", "od_file", "groups_file",
             "mask_file", "start_cell", "episode_len", "n_groups",
             "allowed_directions"},
    "dst": {"kind", "step_cap"},
}
_AGENT_KEYS = {"filter_mode", "lambda", "buffer_size", "batch_size",
               "learning_rate", "model_updates", "episodes_per_iter",
               "total_steps", "crowding_threshold", "crowding_penalty",
               "eval_period", "hidden_dims", "optimizer"}
_METRICS_KEYS = {"ref_point", "n_weights"}


@dataclass
class EnvConfig:
    kind: str
    options: dict


@dataclass
class MetricsConfig:
    ref_point: list | None = None
    n_weights: int = 100


@dataclass
class ExperimentConfig:
    env: EnvConfig
    agent: dict            # AgentConfig fields minus lambda and seed
    lambdas: list
    seeds: list
    out_dir: Path
    metrics: MetricsConfig
    raw: dict = field(default_factory=dict)

    def agent_config(self, lam: float, seed: int) -> AgentConfig:
        cfg = AgentConfig(lam=lam, seed=seed, **self.agent)
        cfg.validate()
        return cfg


def _reject_unknown(section: str, keys, allowed) -> None:
    unknown = sorted(set(keys) - allowed)
    if unknown:
        raise ValueError(f"unknown {section} keys: {', '.join(unknown)}")


def _require(mapping: dict, key: str, section: str):
    if key not in mapping:
        raise ValueError(f"missing required {section} key: {key}")
    return mapping[key]


def load_config(path) -> ExperimentConfig:
    """Parse and validate an experiment config file."""
    path = Path(path)
    with open(path) as fh:
        raw = yaml.safe_load(fh)
    if not isinstance(raw, dict):
        raise ValueError(f"{path}: config must be a mapping")
    _reject_unknown("top-level", raw.keys(), _TOP_KEYS)
    base = path.parent

    env_raw = dict(_require(raw, "env", "config"))
    kind = _require(env_raw, "kind", "env")
    if kind not in _ENV_KEYS:
        raise ValueError(f"env kind must be one of {sorted(_ENV_KEYS)}, got {kind!r}")
    _reject_unknown("env", env_raw.keys(), _ENV_KEYS[kind])
    if kind == "tndp":
        for key in ("grid_rows", "grid_cols", "od_file", "groups_file",
                    "start_cell", "episode_len"):
            _require(env_raw, key, "env")
        for key in ("od_file", "groups_file", "mask_file"):
            if env_raw.get(key) is not None:
                env_raw[key] = str((base / env_raw[key]).resolve())
                if not Path(env_raw[key]).exists():
                    raise ValueError(f"env.{key}: file not found: {env_raw[key]}")
    env_cfg = EnvConfig(kind=kind, options={k: v for k, v in env_raw.items() if k != "kind"})

    agent_raw = dict(_require(raw, "agent", "config"))
    _reject_unknown("agent", agent_raw.keys(), _AGENT_KEYS)
    _require(agent_raw, "total_steps", "agent")
    lambdas = agent_raw.pop("lambda", 0.0)
    if not isinstance(lambdas, list):
        lambdas = [lambdas]
    lambdas = [float(l) for l in lambdas]
    if "hidden_dims" in agent_raw:
        agent_raw["hidden_dims"] = tuple(int(h) for h in agent_raw["hidden_dims"])

    metrics_raw = dict(raw.get("metrics") or {})
    _reject_unknown("metrics", metrics_raw.keys(), _METRICS_KEYS)
    metrics_cfg = MetricsConfig(
        ref_point=metrics_raw.get("ref_point"),
        n_weights=int(metrics_raw.get("n_weights", 100)),
    )

    seeds = raw.get("seeds", [0])
    if not isinstance(seeds, list) or not seeds:
        raise ValueError("seeds must be a non-empty list")
    seeds = [int(s) for s in seeds]
    if len(set(seeds)) != len(seeds):
        raise ValueError("seeds must be distinct")

    out_dir = Path(_require(raw, "out_dir", "config"))
    if not out_dir.is_absolute():
        out_dir = base / out_dir

    return ExperimentConfig(env=env_cfg, agent=agent_raw, lambdas=lambdas,
                            seeds=seeds, out_dir=out_dir, metrics=metrics_cfg,
                            raw=raw)


def load_city_for(env_cfg: EnvConfig) -> CityGrid:
    opts = env_cfg.options
    return load_city(rows=int(opts["grid_rows"]), cols=int(opts["grid_cols"]),
                     od_path=opts["od_file"], groups_path=opts["groups_file"],
                     mask_path=opts.get("mask_file"),
                     n_groups=opts.get("n_groups"))


def build_env(env_cfg: EnvConfig, city: CityGrid | None = None):
    """Instantiate a fresh environment for one run."""
    if env_cfg.kind == "dst":
        return DeepSeaTreasureEnv(step_cap=int(env_cfg.options.get("step_cap", 100)))
    if city is None:
        city = load_city_for(env_cfg)
    return TransportEnv(city=city,
                        start_cell=int(env_cfg.options["start_cell"]),
                        episode_len=int(env_cfg.options["episode_len"]),
                        allowed_directions=env_cfg.options.get("allowed_directions"))


def resolve_ref_point(metrics_cfg: MetricsConfig, env) -> np.ndarray:
    """Metrics reference point; defaults depend on the environment's scale."""
    if metrics_cfg.ref_point is not None:
        ref = np.asarray(metrics_cfg.ref_point, dtype=float)
        if ref.size != env.n_objectives:
            raise ValueError(f"ref_point has {ref.size} entries, env has "
                             f"{env.n_objectives} objectives")
        return ref
    if isinstance(env, DeepSeaTreasureEnv):
        return np.array([0.0, -200.0])
    return np.zeros(env.n_objectives)
