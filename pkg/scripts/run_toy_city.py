#!/usr/bin/env python3
"""Train on a synthetic 5x5 transport city generated from a density gradient.

Generates the city files with the `prepare-od` subcommand, writes a config,
and trains one run per seed. Pass --groups 2 or 3 to change the reward
dimension.
"""

import argparse
import json
from pathlib import Path

import yaml

from fairmorl.cli import main as fairmorl_main


def write_city_files(out_dir: Path, n_groups: int) -> None:
    rows = cols = 5
    density_lines = []
    group_lines = []
    for cell in range(rows * cols):
        r, c = divmod(cell, cols)
        density = 1.0 + 0.8 * c + (0.3 if (r == 2 and c >= 3) else 0.0)
        density_lines.append(f"{cell},{density}")
        if n_groups == 2:
            group = 0 if c <= 2 else 1
        else:
            group = 0 if c <= 1 else (1 if c == 2 else 2)
        group_lines.append(f"{cell},{group}")
    (out_dir / "density.csv").write_text("\n".join(density_lines) + "\n")
    (out_dir / "groups.csv").write_text("\n".join(group_lines) + "\n")
    code = fairmorl_main(["prepare-od",
                          "--density", str(out_dir / "density.csv"),
                          "--rows", str(rows), "--cols", str(cols),
                          "--out", str(out_dir / "od.csv")])
    if code != 0:
        raise RuntimeError("OD estimation failed")


def main() -> int:
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--out", default="runs/toy_city")
    parser.add_argument("--groups", type=int, choices=[2, 3], default=2)
    parser.add_argument("--seeds", type=int, nargs="+", default=[1, 2, 3, 4, 5])
    parser.add_argument("--steps", type=int, default=10_000)
    parser.add_argument("--lambda", dest="lam", type=float, default=0.0)
    args = parser.parse_args()
    out_dir = Path(args.out)
    out_dir.mkdir(parents=True, exist_ok=True)
    write_city_files(out_dir, args.groups)
    config = {
        "env": {"kind": "tndp", "grid_rows": 5, "grid_cols": 5,
                "od_file": "od.csv", "groups_file": "groups.csv",
                "start_cell": 12, "episode_len": 3},
        "agent": {"filter_mode": "lorenz", "lambda": args.lam,
                  "buffer_size": 100, "batch_size": 256, "learning_rate": 0.02,
                  "model_updates": 10, "episodes_per_iter": 10,
                  "total_steps": args.steps, "crowding_threshold": 0.2,
                  "crowding_penalty": 1.0, "eval_period": 2500,
                  "hidden_dims": [64, 64], "optimizer": "adam"},
        "metrics": {"n_weights": 100},
        "out_dir": str(out_dir),
        "seeds": list(args.seeds),
    }
    config_path = out_dir / "config.yaml"
    config_path.write_text(yaml.safe_dump(config, sort_keys=False))
    code = fairmorl_main(["train", "--config", str(config_path)])
    if code != 0:
        return code
    for seed in args.seeds:
        last = (out_dir / f"seed_{seed}" / "logs.jsonl").read_text().splitlines()[-1]
        record = json.loads(last)
        print(f"seed {seed}: sen welfare {record['sen_welfare']:.4f} "
              f"gini {record['gini']:.3f}")
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
