"""Experiment command line: train, evaluate, fronts, metrics, prepare-od.

Common flags may also be supplied through ``FAIRMORL_``-prefixed environment
variables (e.g. ``FAIRMORL_SEED``, ``FAIRMORL_OUT``) for CI use; explicit
flags win over the environment.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
from pathlib import Path

import numpy as np

from . import __version__
from .agent import relation_for, run_episode, train
from .config import build_env, load_config, load_city_for, resolve_ref_point
from .dominance import LAMBDA_LORENZ, LORENZ, PARETO, extract_front
from .fileio import read_points_csv, write_jsonl, write_points_csv
from .metrics import front_metrics
from .network import load_params, save_params
from .tndp import estimate_od_mobility_law

_RELATION_FLAGS = {"pareto": PARETO, "lorenz": LORENZ, "lambda": LAMBDA_LORENZ}


def _env_default(name: str, fallback=None):
    return os.environ.get(f"FAIRMORL_{name.upper()}", fallback)


def _parse_ref(text: str) -> np.ndarray:
    try:
        return np.asarray([float(x) for x in text.split(",")])
    except ValueError:
        raise ValueError(f"could not parse reference point {text!r}") from None


def _relation_args(args):
    relation = _RELATION_FLAGS[args.relation]
    lam = args.lam
    if relation == LAMBDA_LORENZ and lam is None:
        raise ValueError("--relation lambda requires --lambda")
    return relation, lam


def _run_dir(out_dir: Path, lam: float, seed: int, sweep: bool) -> Path:
    if sweep:
        return out_dir / f"lambda_{lam:g}" / f"seed_{seed}"
    return out_dir / f"seed_{seed}"


def cmd_train(args) -> int:
    cfg = load_config(args.config)
    if args.env is not None:
        cfg.env.kind = args.env
    seeds = [int(args.seed)] if args.seed is not None else cfg.seeds
    out_dir = Path(args.out) if args.out is not None else cfg.out_dir
    city = load_city_for(cfg.env) if cfg.env.kind == "tndp" else None
    sweep = len(cfg.lambdas) > 1
    for lam in cfg.lambdas:
        for seed in seeds:
            env = build_env(cfg.env, city)
            agent_cfg = cfg.agent_config(lam, seed)
            ref = resolve_ref_point(cfg.metrics, env)
            result = train(agent_cfg, env, ref, n_weights=cfg.metrics.n_weights)
            run_dir = _run_dir(out_dir, lam, seed, sweep)
            run_dir.mkdir(parents=True, exist_ok=True)
            with open(run_dir / "manifest.json", "w") as fh:
                json.dump({"package_version": __version__, "seed": seed,
                           "lambda": lam, "config": cfg.raw}, fh, indent=2)
                fh.write("\n")
            with open(run_dir / "logs.jsonl", "w") as fh:
                write_jsonl(fh, result.logs)
            with open(run_dir / "front.csv", "w") as fh:
                write_points_csv(fh, result.front.points)
            with open(run_dir / "executed_returns.csv", "w") as fh:
                write_points_csv(fh, result.executed)
            targets = np.column_stack([
                result.buffer.returns_matrix()[result.buffer.nondominated()],
                [result.buffer.items[i].length for i in result.buffer.nondominated()],
            ])
            with open(run_dir / "eval_targets.csv", "w") as fh:
                write_points_csv(fh, targets)
            save_params(result.params, run_dir / "checkpoint.npz")
            print(f"run lambda={lam:g} seed={seed}: "
                  f"front size {len(result.front)}, artifacts in {run_dir}")
    return 0


def cmd_evaluate(args) -> int:
    cfg = load_config(args.config)
    if args.env is not None:
        cfg.env.kind = args.env
    run_dir = Path(args.run_dir)
    params = load_params(run_dir / "checkpoint.npz")
    targets = read_points_csv(run_dir / "eval_targets.csv")
    env = build_env(cfg.env)
    lam = args.lam if args.lam is not None else cfg.lambdas[0]
    relation, rel_lam = relation_for(cfg.agent.get("filter_mode", "lorenz"), lam)
    executed = []
    for row in targets:
        traj = run_episode(params, env, row[:-1], row[-1], explore=False)
        executed.append(traj.returns)
    front = extract_front(np.asarray(executed), relation, rel_lam)
    ref = _parse_ref(args.ref) if args.ref is not None else resolve_ref_point(cfg.metrics, env)
    record = front_metrics(front, ref, args.weights or cfg.metrics.n_weights)
    print(json.dumps(record.to_dict()))
    if args.out is not None:
        with open(args.out, "w") as fh:
            write_points_csv(fh, front.points, header=args.header)
    return 0


def cmd_fronts(args) -> int:
    relation, lam = _relation_args(args)
    points = read_points_csv(args.points_csv, header=args.header)
    front = extract_front(points, relation, lam)
    write_points_csv(sys.stdout, front.points, header=args.header)
    return 0


def cmd_metrics(args) -> int:
    points = read_points_csv(args.front, header=args.header)
    ref = _parse_ref(args.ref)
    record = front_metrics(points, ref, args.weights)
    print(json.dumps(record.to_dict()))
    return 0


def cmd_prepare_od(args) -> int:
    pairs = read_points_csv(args.density)
    if pairs.shape[1] != 2:
        raise ValueError("density CSV must have (cell_index, density) rows")
    n_cells = args.rows * args.cols
    density = np.zeros(n_cells)
    cells = pairs[:, 0].astype(int)
    if np.any((cells < 0) | (cells >= n_cells)):
        raise ValueError(f"density cell indices must be in 0..{n_cells - 1}")
    density[cells] = pairs[:, 1]
    excluded = np.setdiff1d(np.arange(n_cells), cells)
    od = estimate_od_mobility_law(density, args.cell_radius, args.f_min,
                                  args.f_max, args.rows, args.cols,
                                  excluded=excluded if excluded.size else None)
    stream = open(args.out, "w") if args.out is not None else sys.stdout
    try:
        origins, dests = np.nonzero(od)
        for o, d in zip(origins, dests):
            stream.write(f"{o},{d},{format(od[o, d], '.17g')}\n")
    finally:
        if args.out is not None:
            stream.close()
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="fairmorl",
                                     description="Fairness-aware multi-objective RL experiments")
    sub = parser.add_subparsers(dest="command", required=True)

    p_train = sub.add_parser("train", help="run training for every (lambda, seed) in a config")
    p_train.add_argument("--config", required=_env_default("config") is None,
                         default=_env_default("config"))
    p_train.add_argument("--seed", type=int, default=_env_default("seed"))
    p_train.add_argument("--out", default=_env_default("out"))
    p_train.add_argument("--env", choices=["tndp", "dst"], default=None,
                         help="override the configured environment kind")
    p_train.set_defaults(func=cmd_train)

    p_eval = sub.add_parser("evaluate", help="re-evaluate a trained checkpoint")
    p_eval.add_argument("--config", required=_env_default("config") is None,
                        default=_env_default("config"))
    p_eval.add_argument("--run-dir", required=True)
    p_eval.add_argument("--env", choices=["tndp", "dst"], default=None)
    p_eval.add_argument("--lambda", dest="lam", type=float, default=None)
    p_eval.add_argument("--ref", default=None)
    p_eval.add_argument("--weights", type=int, default=None)
    p_eval.add_argument("--out", default=None, help="write the executed front CSV here")
    p_eval.add_argument("--header", action="store_true")
    p_eval.set_defaults(func=cmd_evaluate)

    p_fronts = sub.add_parser("fronts", help="extract the non-dominated front of a point CSV")
    p_fronts.add_argument("points_csv")
    p_fronts.add_argument("--relation", choices=sorted(_RELATION_FLAGS), default="pareto")
    p_fronts.add_argument("--lambda", dest="lam", type=float, default=None)
    p_fronts.add_argument("--header", action="store_true")
    p_fronts.set_defaults(func=cmd_fronts)

    p_metrics = sub.add_parser("metrics", help="score a front CSV")
    p_metrics.add_argument("--front", required=True)
    p_metrics.add_argument("--ref", required=True, help="comma-separated reference point")
    p_metrics.add_argument("--weights", type=int, default=100)
    p_metrics.add_argument("--header", action="store_true")
    p_metrics.set_defaults(func=cmd_metrics)

    p_od = sub.add_parser("prepare-od", help="estimate an OD matrix from population density")
    p_od.add_argument("--density", required=True, help="CSV of (cell_index, density) rows")
    p_od.add_argument("--rows", type=int, required=True)
    p_od.add_argument("--cols", type=int, required=True)
    p_od.add_argument("--cell-radius", type=float, default=1.0)
    p_od.add_argument("--f-min", type=float, default=1.0 / 7.0)
    p_od.add_argument("--f-max", type=float, default=7.0)
    p_od.add_argument("--out", default=None)
    p_od.set_defaults(func=cmd_prepare_od)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except (ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
