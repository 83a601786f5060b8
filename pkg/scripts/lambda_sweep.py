"""Stability factor and error across the sensitivity parameter lambda."""

import argparse
from pathlib import Path

import numpy as np

from padecache.cli import sweep_rows
from padecache.config import ExperimentConfig
from padecache.export import write_csv


def main():
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--values", default="1,5,10,15,30")
    parser.add_argument("--family", default="rational")
    parser.add_argument("--history-source", default="computed_only", choices=["any", "computed_only"])
    parser.add_argument("--seeds", type=int, default=20)
    parser.add_argument("--out", type=Path, default=Path("results/lambda_sweep.csv"))
    args = parser.parse_args()

    values = [float(v) for v in args.values.split(",")]
    per_seed = []
    for seed in range(args.seeds):
        # theta = -inf so every lambda predicts at the same steps
        cfg = ExperimentConfig(family=args.family, seed=seed, theta=float("-inf"), history_source=args.history_source)
        per_seed.append(sweep_rows(cfg, "lambda", values))

    rows = []
    for i, lam in enumerate(values):
        sig = np.array([rs[i]["mean_sigma"] for rs in per_seed], dtype=float)
        errs = np.array([rs[i]["final_rel_l2"] for rs in per_seed])
        rows.append((lam, np.nanmean(sig), errs.mean()))
        print(f"lambda {lam:6.2f}  mean sigma {np.nanmean(sig):.4g}  final err {errs.mean():.4g}")
    write_csv(args.out, ("lambda", "mean_sigma", "mean_final_rel_l2"), rows)


if __name__ == "__main__":
    main()
