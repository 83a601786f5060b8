"""Skip count and error as the gate threshold moves, averaged over seeds."""

import argparse
from pathlib import Path

import numpy as np

from padecache.cli import sweep_rows
from padecache.config import ExperimentConfig
from padecache.export import write_csv


def main():
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--values", default="0.0,0.5,0.7,1.0,1.3,1.6,1.9")
    parser.add_argument("--family", default="smooth_random")
    parser.add_argument("--tsi-variant", default="alignment", choices=["raw", "alignment"])
    parser.add_argument("--seeds", type=int, default=20)
    parser.add_argument("--out", type=Path, default=Path("results/theta_sweep.csv"))
    args = parser.parse_args()

    values = [float(v) for v in args.values.split(",")]
    per_seed = []
    for seed in range(args.seeds):
        cfg = ExperimentConfig(family=args.family, seed=seed, tsi_variant=args.tsi_variant)
        per_seed.append(sweep_rows(cfg, "theta", values))

    rows = []
    for i, theta in enumerate(values):
        skips = np.array([rs[i]["skip_count"] for rs in per_seed])
        errs = np.array([rs[i]["final_rel_l2"] for rs in per_seed])
        ratio = np.array([rs[i]["compute_ratio"] for rs in per_seed])
        rows.append((theta, skips.mean(), ratio.mean(), errs.mean()))
        print(f"theta {theta:5.2f}  skips {skips.mean():6.2f}  ratio {ratio.mean():5.2f}  final err {errs.mean():.4g}")
    violations = sum(
        any(rs[i]["skip_count"] < rs[i + 1]["skip_count"] for i in range(len(values) - 1)) for rs in per_seed
    )
    print(f"seeds where skips rise with theta: {violations}/{args.seeds}")
    write_csv(args.out, ("theta", "mean_skip_count", "mean_compute_ratio", "mean_final_rel_l2"), rows)


if __name__ == "__main__":
    main()
