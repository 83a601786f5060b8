"""``padecache`` command line: simulate | compare | sweep."""

from __future__ import annotations

import argparse
import concurrent.futures
import logging
import sys
from pathlib import Path
from typing import Sequence

import numpy as np

from . import export
from .config import ExperimentConfig, read_config_file
from .errors import ConfigError, PadeCacheError
from .metrics import annotate_traces, build_report, compare_runs, pca_project, similarity_curves
from .scheduler import run, run_taylor_baseline
from .simulator import oracle_trajectory

log = logging.getLogger("padecache")

EXIT_OK, EXIT_CONFIG, EXIT_IO = 0, 2, 3

# flag dest -> config key
_FLAG_KEYS = {
    "steps": "steps",
    "interval": "interval",
    "warmup": "warmup",
    "theta": "theta",
    "lam": "lambda",
    "alpha1": "alpha1",
    "beta": "beta",
    "family": "family",
    "degree": "degree",
    "dim": "dim",
    "seed": "seed",
    "taylor_order": "taylor_order",
    "tsi_variant": "tsi_variant",
    "history_source": "history_source",
    "taylor_target": "taylor_target",
    "taylor_history": "taylor_history",
    "out": "out",
    "json": "json",
}


def _add_common(p: argparse.ArgumentParser) -> None:
    # defaults stay None so "flag not given" is distinguishable from the default value
    p.add_argument("--config", type=Path, help="TOML or JSON config file")
    p.add_argument("--steps", type=int)
    p.add_argument("--interval", type=int)
    p.add_argument("--warmup", type=int)
    p.add_argument("--theta", type=float, help="gate threshold; 'inf' disables skipping, '-inf' always skips")
    p.add_argument("--lambda", dest="lam", type=float)
    p.add_argument("--alpha1", type=float, help="early-phase weight on the newest residual (alpha2 = 1 - alpha1)")
    p.add_argument("--beta", type=float)
    p.add_argument("--family", choices=["rational", "exponential", "polynomial", "smooth_random", "phase_composite"])
    p.add_argument("--degree", type=int)
    p.add_argument("--dim", type=int)
    p.add_argument("--seed", type=int)
    p.add_argument("--taylor-order", type=int, choices=[1, 2])
    p.add_argument("--tsi-variant", choices=["raw", "alignment"])
    p.add_argument("--history-source", choices=["any", "computed"])
    p.add_argument("--taylor-target", choices=["output", "residual"], help="baseline extrapolates outputs or residuals")
    p.add_argument("--taylor-history", choices=["rolling", "computed"], help="baseline samples: last steps or computed steps")
    p.add_argument("--out", type=str, help="output directory")
    p.add_argument("--json", action="store_const", const=True, help="print the summary JSON to stdout")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="padecache", description=__doc__)
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)
    _add_common(sub.add_parser("simulate", help="one gated run against the oracle"))
    _add_common(sub.add_parser("compare", help="rational-predictor run vs Taylor baseline"))
    sweep = sub.add_parser("sweep", help="one run per value of theta or lambda")
    _add_common(sweep)
    sweep.add_argument("--axis", choices=["theta", "lambda"], required=True)
    sweep.add_argument("--values", required=True, help="comma-separated list, e.g. 0.7,1.0,1.3")
    sweep.add_argument("--jobs", type=int, default=1, help="run sweep points in this many processes")
    for axis in ("theta", "lambda"):
        p = sub.add_parser(f"sweep-{axis}", help=f"shorthand for 'sweep --axis {axis}'")
        _add_common(p)
        p.add_argument("--values", required=True)
        p.add_argument("--jobs", type=int, default=1)
        p.set_defaults(axis=axis)
    return parser


def config_from_args(args: argparse.Namespace) -> ExperimentConfig:
    file_values = read_config_file(args.config) if args.config is not None else {}
    flags = {}
    for dest, key in _FLAG_KEYS.items():
        value = getattr(args, dest, None)
        if value is not None:
            flags[key] = "computed_only" if dest == "history_source" and value == "computed" else value
    return ExperimentConfig.layered(file_values, flags)


# ---------------------------------------------------------------- commands


def simulate_once(cfg: ExperimentConfig):
    policy = cfg.policy()
    result = run(policy, cfg.model(), cfg.x0())
    oracle = oracle_trajectory(cfg.model(), cfg.x0(), cfg.steps)
    result = annotate_traces(result, oracle)
    report = build_report(result, oracle, {**cfg.metadata(), "method": "rational"})
    return result, oracle, report


def cmd_simulate(cfg: ExperimentConfig) -> dict:
    result, oracle, report = simulate_once(cfg)
    out = Path(cfg.out)
    export.write_trace(out / "trace.csv", result)
    export.write_report(out / "report.json", report)
    export.write_similarity(out / "similarity.csv", similarity_curves(result, oracle))
    # oracle and scheduled outputs share one projection so drift is visible
    coords = pca_project(list(oracle.outputs) + list(result.outputs))
    n = cfg.steps
    steps = list(range(n)) * 2
    labels = ["oracle"] * n + [tr.decision.action.value for tr in result.traces]
    export.write_pca(out / "pca.csv", coords, steps, labels)
    return export.report_dict(report)["summary"]


def cmd_compare(cfg: ExperimentConfig) -> dict:
    _, _, pade_report = simulate_once(cfg)
    taylor = run_taylor_baseline(cfg.policy(), cfg.model(), cfg.x0())
    oracle = oracle_trajectory(cfg.model(), cfg.x0(), cfg.steps)
    taylor_report = build_report(
        taylor, oracle, {**cfg.metadata(), "method": "taylor", "taylor_order": cfg.taylor_order}
    )
    cmp = compare_runs(pade_report, taylor_report)
    out = Path(cfg.out)
    export.write_report(out / "pade_report.json", pade_report)
    export.write_report(out / "taylor_report.json", taylor_report)
    summary = {"deltas": cmp.deltas, "winners": cmp.winners, "metadata": cfg.metadata()}
    export.write_json(out / "comparison.json", summary)
    return summary


def _sweep_point(point: ExperimentConfig, value: float) -> dict:
    result, _, report = simulate_once(point)
    sigmas = [tr.sigma for tr in result.traces if tr.sigma is not None]
    return {
        "value": value,
        "skip_count": report.summary.skip_count,
        "compute_ratio": report.summary.compute_ratio,
        "final_rel_l2": report.summary.final_rel_l2,
        "psnr": report.summary.psnr_db,
        "mean_sigma": float(np.mean(sigmas)) if sigmas else None,
    }


def sweep_rows(cfg: ExperimentConfig, axis: str, values: Sequence[float], jobs: int = 1) -> list[dict]:
    """One independent run per value; rows come back in ``values`` order."""
    if not values:
        raise ConfigError("sweep needs at least one value")
    if jobs < 1:
        raise ConfigError(f"jobs must be positive, got {jobs}")
    key = "theta" if axis == "theta" else "lambda"
    points = [ExperimentConfig.from_dict({**cfg.to_dict(), key: v}) for v in values]
    if jobs == 1 or len(points) == 1:
        return [_sweep_point(p, v) for p, v in zip(points, values)]
    with concurrent.futures.ProcessPoolExecutor(max_workers=jobs) as pool:
        return list(pool.map(_sweep_point, points, values))


def cmd_sweep(cfg: ExperimentConfig, axis: str, values: Sequence[float], jobs: int = 1) -> dict:
    rows = sweep_rows(cfg, axis, values, jobs)
    out = Path(cfg.out)
    export.write_csv(out / "sweep.csv", export.SWEEP_HEADER, ([r[k] for k in export.SWEEP_HEADER] for r in rows))
    summary = {"axis": axis, "rows": rows, "metadata": cfg.metadata()}
    export.write_json(out / "sweep.json", summary)
    return summary


def _parse_values(text: str) -> list[float]:
    try:
        return [float(v) for v in text.split(",") if v.strip()]
    except ValueError as exc:
        raise ConfigError(f"bad --values {text!r}") from exc


def main(argv: Sequence[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(message)s")
    try:
        cfg = config_from_args(args)
        if args.command == "simulate":
            summary = cmd_simulate(cfg)
        elif args.command == "compare":
            summary = cmd_compare(cfg)
        else:
            summary = cmd_sweep(cfg, args.axis, _parse_values(args.values), args.jobs)
    except PadeCacheError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except OSError as exc:
        print(f"I/O error: {exc}", file=sys.stderr)
        return EXIT_IO
    log.info("wrote results to %s", cfg.out)
    if cfg.json:
        sys.stdout.write(export.dumps_json(summary))
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
