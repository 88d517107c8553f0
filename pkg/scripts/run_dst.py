#!/usr/bin/env python3
"""Train the conditioned agent on the deep-sea-treasure benchmark.

Writes a config, runs one training per seed, and prints the final metric
record of each run. Artifacts land under --out (default runs/dst).
"""

import argparse
import json
from pathlib import Path

import yaml

from fairmorl.cli import main as fairmorl_main


def build_config(out_dir: Path, seeds, total_steps: int, lam: float) -> Path:
    config = {
        "env": {"kind": "dst", "step_cap": 50},
        "agent": {
            "filter_mode": "lorenz",
            "lambda": lam,
            "buffer_size": 100,
            "batch_size": 256,
            "learning_rate": 0.1,
            "model_updates": 10,
            "episodes_per_iter": 10,
            "total_steps": total_steps,
            "crowding_threshold": 0.2,
            "crowding_penalty": 1.0,
            "eval_period": 3000,
            "hidden_dims": [64, 64],
            "optimizer": "sgd",
        },
        "metrics": {"ref_point": [0.0, -200.0], "n_weights": 100},
        "out_dir": str(out_dir),
        "seeds": list(seeds),
    }
    out_dir.mkdir(parents=True, exist_ok=True)
    path = out_dir / "config.yaml"
    path.write_text(yaml.safe_dump(config, sort_keys=False))
    return path


def main() -> int:
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--out", default="runs/dst")
    parser.add_argument("--seeds", type=int, nargs="+", default=[1, 2, 3, 4, 5])
    parser.add_argument("--steps", type=int, default=30_000)
    parser.add_argument("--lambda", dest="lam", type=float, default=1.0,
                        help="fairness blend; 1.0 explores the widest front")
    args = parser.parse_args()
    out_dir = Path(args.out)
    config_path = build_config(out_dir, args.seeds, args.steps, args.lam)
    code = fairmorl_main(["train", "--config", str(config_path)])
    if code != 0:
        return code
    for seed in args.seeds:
        last = (out_dir / f"seed_{seed}" / "logs.jsonl").read_text().splitlines()[-1]
        record = json.loads(last)
        print(f"seed {seed}: hypervolume {record['hypervolume']:.1f} "
              f"eum {record['eum']:.2f}")
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
