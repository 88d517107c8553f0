#!/usr/bin/env python3
"""Sweep the fairness blend on the synthetic city and tabulate front sizes.

Larger blends relax the fairness constraint, so the learned coverage set
grows while its best Sen welfare tends to fall.
"""

import argparse
import json
from pathlib import Path

import yaml

from fairmorl.cli import main as fairmorl_main
from run_toy_city import write_city_files


def main() -> int:
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--out", default="runs/lambda_sweep")
    parser.add_argument("--groups", type=int, choices=[2, 3], default=2)
    parser.add_argument("--seed", type=int, default=1)
    parser.add_argument("--steps", type=int, default=10_000)
    parser.add_argument("--lambdas", type=float, nargs="+",
                        default=[0.0, 0.25, 0.5, 0.75, 1.0])
    args = parser.parse_args()
    out_dir = Path(args.out)
    out_dir.mkdir(parents=True, exist_ok=True)
    write_city_files(out_dir, args.groups)
    config = {
        "env": {"kind": "tndp", "grid_rows": 5, "grid_cols": 5,
                "od_file": "od.csv", "groups_file": "groups.csv",
                "start_cell": 12, "episode_len": 3},
        "agent": {"filter_mode": "lorenz", "lambda": list(args.lambdas),
                  "buffer_size": 100, "batch_size": 256, "learning_rate": 0.02,
                  "model_updates": 10, "episodes_per_iter": 10,
                  "total_steps": args.steps, "crowding_threshold": 0.2,
                  "crowding_penalty": 1.0, "eval_period": 2500,
                  "hidden_dims": [64, 64], "optimizer": "adam"},
        "metrics": {"n_weights": 100},
        "out_dir": str(out_dir),
        "seeds": [args.seed],
    }
    config_path = out_dir / "config.yaml"
    config_path.write_text(yaml.safe_dump(config, sort_keys=False))
    code = fairmorl_main(["train", "--config", str(config_path)])
    if code != 0:
        return code
    print(f"{'lambda':>8} {'front':>6} {'sen welfare':>12} {'hypervolume':>12}")
    for lam in args.lambdas:
        run_dir = out_dir / f"lambda_{lam:g}" / f"seed_{args.seed}"
        front_rows = (run_dir / "front.csv").read_text().strip().splitlines()
        record = json.loads((run_dir / "logs.jsonl").read_text().splitlines()[-1])
        print(f"{lam:8.2f} {len(front_rows):6d} {record['sen_welfare']:12.4f} "
              f"{record['hypervolume']:12.4f}")
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
