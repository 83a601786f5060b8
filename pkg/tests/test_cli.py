import json
import math

import pytest

from padecache.cli import build_parser, config_from_args, main, sweep_rows
from padecache.config import ExperimentConfig, read_config_file
from padecache.errors import ConfigError
from padecache.export import PCA_HEADER, SIMILARITY_HEADER, SWEEP_HEADER, TRACE_HEADER

SMALL = ["--dim", "16"]


def _run(tmp_path, *argv):
    code = main([*argv, "--out", str(tmp_path), *SMALL])
    assert code == 0
    return tmp_path


def _header(path):
    return tuple(path.read_text().splitlines()[0].split(","))


# ----------------------------------------------------------------- simulate


def test_simulate_writes_four_files(tmp_path):
    out = _run(tmp_path, "simulate")
    assert sorted(p.name for p in out.iterdir()) == ["pca.csv", "report.json", "similarity.csv", "trace.csv"]
    report = json.loads((out / "report.json").read_text())
    assert report["summary"]["compute_ratio"] >= 1
    assert _header(out / "trace.csv") == TRACE_HEADER
    assert _header(out / "pca.csv") == PCA_HEADER
    assert _header(out / "similarity.csv") == SIMILARITY_HEADER
    assert len((out / "trace.csv").read_text().splitlines()) == 21


def test_simulate_full_compute_is_exact(tmp_path):
    out = _run(tmp_path, "simulate", "--theta", "inf")
    summary = json.loads((out / "report.json").read_text())["summary"]
    assert summary["final_rel_l2"] == 0
    assert summary["compute_ratio"] == 1


def test_simulate_is_byte_identical(tmp_path):
    a = _run(tmp_path / "a", "simulate", "--seed", "7", "--theta=-inf")
    b = _run(tmp_path / "b", "simulate", "--seed", "7", "--theta=-inf")
    for name in ("trace.csv", "report.json", "pca.csv", "similarity.csv"):
        assert (a / name).read_bytes() == (b / name).read_bytes()


def test_json_flag_prints_summary(tmp_path, capsys):
    _run(tmp_path, "simulate", "--json")
    summary = json.loads(capsys.readouterr().out)
    assert set(summary) == {"final_rel_l2", "mean_rel_l2", "psnr_db", "compute_ratio", "skip_count"}


# ------------------------------------------------------------------ compare


def test_compare_polynomial_taylor_is_exact(tmp_path):
    out = _run(
        tmp_path, "compare", "--family", "polynomial", "--degree", "2",
        "--taylor-order", "2", "--taylor-target", "residual", "--theta=-inf",
    )
    taylor = json.loads((out / "taylor_report.json").read_text())
    assert taylor["summary"]["final_rel_l2"] < 1e-9
    cmp = json.loads((out / "comparison.json").read_text())
    assert cmp["winners"]["final_rel_l2"] in ("taylor", "tie")
    assert {"pade_report.json", "taylor_report.json", "comparison.json"} <= {p.name for p in out.iterdir()}


# -------------------------------------------------------------------- sweep


def _sweep_csv(out):
    lines = (out / "sweep.csv").read_text().splitlines()
    assert tuple(lines[0].split(",")) == SWEEP_HEADER
    return [dict(zip(SWEEP_HEADER, line.split(","))) for line in lines[1:]]


@pytest.mark.parametrize("seed", range(5))
def test_theta_sweep_skip_count_non_increasing(tmp_path, seed):
    out = _run(tmp_path, "sweep", "--axis", "theta", "--values", "0.7,1.0,1.3",
               "--family", "smooth_random", "--seed", str(seed))
    skips = [int(r["skip_count"]) for r in _sweep_csv(out)]
    assert skips == sorted(skips, reverse=True)


def test_lambda_sweep_rows(tmp_path):
    out = _run(tmp_path, "sweep-lambda", "--values", "5,10,15")
    rows = _sweep_csv(out)
    assert [float(r["value"]) for r in rows] == [5.0, 10.0, 15.0]


def test_single_value_sweep_matches_simulate(tmp_path):
    sim = _run(tmp_path / "sim", "simulate", "--theta", "1.3")
    sw = _run(tmp_path / "sw", "sweep", "--axis", "theta", "--values", "1.3")
    summary = json.loads((sim / "report.json").read_text())["summary"]
    row = json.loads((sw / "sweep.json").read_text())["rows"][0]
    assert row["skip_count"] == summary["skip_count"]
    assert row["compute_ratio"] == summary["compute_ratio"]
    assert row["final_rel_l2"] == summary["final_rel_l2"]
    assert row["psnr"] == summary["psnr_db"]


def test_empty_sweep_rejected():
    with pytest.raises(ConfigError):
        sweep_rows(ExperimentConfig(), "theta", [])
    assert main(["sweep", "--axis", "theta", "--values", ","]) == 2


# ------------------------------------------------------------------- config

# key -> (file value, flag argv, flag value)
PRECEDENCE = {
    "steps": (12, ["--steps", "16"], 16),
    "interval": (3, ["--interval", "5"], 5),
    "warmup": (4, ["--warmup", "5"], 5),
    "theta": (0.5, ["--theta", "1.5"], 1.5),
    "lambda": (5.0, ["--lambda", "15"], 15.0),
    "alpha1": (0.6, ["--alpha1", "0.8"], 0.8),
    "beta": (0.2, ["--beta", "0.05"], 0.05),
    "family": ("exponential", ["--family", "smooth_random"], "smooth_random"),
    "degree": (1, ["--degree", "3"], 3),
    "dim": (8, ["--dim", "4"], 4),
    "seed": (3, ["--seed", "9"], 9),
    "taylor_order": (1, ["--taylor-order", "2"], 2),
    "tsi_variant": ("raw", ["--tsi-variant", "alignment"], "alignment"),
    "history_source": ("computed_only", ["--history-source", "any"], "any"),
    "taylor_target": ("residual", ["--taylor-target", "output"], "output"),
    "taylor_history": ("computed", ["--taylor-history", "rolling"], "rolling"),
    "out": ("from_file", ["--out", "from_flag"], "from_flag"),
}


def _attr(cfg, key):
    return getattr(cfg, "lam" if key == "lambda" else key)


@pytest.mark.parametrize("key", sorted(PRECEDENCE))
def test_precedence_flag_over_file_over_default(tmp_path, key):
    file_value, argv, flag_value = PRECEDENCE[key]
    default = _attr(ExperimentConfig(), key)
    path = tmp_path / "cfg.json"
    path.write_text(json.dumps({key: file_value}))

    assert _attr(config_from_args(build_parser().parse_args(["simulate"])), key) == default
    from_file = config_from_args(build_parser().parse_args(["simulate", "--config", str(path)]))
    assert _attr(from_file, key) == file_value
    both = config_from_args(build_parser().parse_args(["simulate", "--config", str(path), *argv]))
    assert _attr(both, key) == flag_value


def test_alpha1_sets_alpha2():
    cfg = ExperimentConfig.layered({"alpha1": 0.6})
    assert cfg.alpha2 == pytest.approx(0.4)
    cfg = ExperimentConfig.layered({"alpha1": 0.6, "alpha2": 0.3})
    assert cfg.alpha2 == 0.3


def test_unknown_key_rejected(tmp_path):
    with pytest.raises(ConfigError):
        ExperimentConfig.from_dict({"thetta": 1.0})
    with pytest.raises(ConfigError):
        ExperimentConfig.from_dict({"lam": 1.0})
    path = tmp_path / "bad.toml"
    path.write_text("thetta = 1.0\n")
    assert main(["simulate", "--config", str(path), "--out", str(tmp_path)]) == 2


@pytest.mark.parametrize("suffix", [".toml", ".json"])
def test_config_round_trip(tmp_path, suffix):
    cfg = ExperimentConfig(
        steps=12, theta=math.inf, lam=7.5, family="polynomial", degree=1,
        params={"p": [0.5, -0.25]}, tsi_variant="raw", history_source="computed_only", json=True,
    )
    path = tmp_path / f"cfg{suffix}"
    cfg.save(path)
    assert ExperimentConfig.load(path) == cfg


def test_toml_sections_are_flattened(tmp_path):
    path = tmp_path / "cfg.toml"
    path.write_text("[policy]\ntheta = 0.9\n[model]\nfamily = \"exponential\"\n")
    assert read_config_file(path) == {"theta": 0.9, "family": "exponential"}


# --------------------------------------------------------------- exit codes


def test_config_error_exit_code(tmp_path, capsys):
    assert main(["simulate", "--steps", "2", "--out", str(tmp_path)]) == 2
    assert main(["simulate", "--lambda", "-1", "--out", str(tmp_path)]) == 2
    assert "config error" in capsys.readouterr().err


def test_io_error_exit_code(tmp_path):
    blocker = tmp_path / "file"
    blocker.write_text("")
    assert main(["simulate", "--out", str(blocker / "sub"), *SMALL]) == 3
    assert main(["simulate", "--config", str(tmp_path / "missing.toml")]) == 3


def test_no_temp_files_left(tmp_path):
    out = _run(tmp_path, "simulate")
    _run(tmp_path, "simulate")
    assert not [p for p in out.iterdir() if p.name.startswith(".")]


def test_parallel_sweep_matches_serial(tmp_path):
    a = _run(tmp_path / "serial", "sweep", "--axis", "theta", "--values", "0.7,1.0,1.3")
    b = _run(tmp_path / "parallel", "sweep", "--axis", "theta", "--values", "0.7,1.0,1.3", "--jobs", "3")
    assert (a / "sweep.csv").read_bytes() == (b / "sweep.csv").read_bytes()
    assert (a / "sweep.json").read_bytes() == (b / "sweep.json").read_bytes()
