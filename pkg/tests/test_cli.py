import csv
import json

import numpy as np
import pytest

from maip import io as mio
from maip.cli import (EXIT_BAD_INPUT, EXIT_DIMENSION, EXIT_DIVERGED, EXIT_IO, main,
                      parse_snr_list)
from maip.sim import two_inclusion_phantom

FAST = ["--iterations", "3", "--base-channels", "2", "--fu-channels", "3",
        "--se-reduction", "2", "--aspp-dilations", "1,2"]


@pytest.fixture(scope="module")
def sim_dir(tmp_path_factory):
    root = tmp_path_factory.mktemp("cli")
    two_inclusion_phantom().to_json(root / "ph.json")
    assert main(["simulate", "--phantom", str(root / "ph.json"), "--height", "16",
                 "--width", "16", "--rings", "8", "--out", str(root / "sim")]) == 0
    return root / "sim"


def problem(sim_dir, truth=True):
    args = ["--jacobian", str(sim_dir / "jacobian.csv"),
            "--measurements", str(sim_dir / "measurements.csv"),
            "--mask", str(sim_dir / "mask.txt")]
    return args + (["--truth", str(sim_dir / "truth.csv")] if truth else [])


def test_simulate_outputs(sim_dir):
    names = {p.name for p in sim_dir.iterdir()}
    assert names == {"mask.txt", "jacobian.csv", "measurements.csv", "measurements.json",
                     "truth.csv", "phantom.json", "manifest.json"}
    manifest = json.loads((sim_dir / "manifest.json").read_text())
    assert manifest["command"] == "simulate"
    assert set(manifest["outputs"]) == names - {"manifest.json"}
    assert mio.read_matrix(sim_dir / "jacobian.csv").shape[0] == 208


def test_simulate_replicate_and_noise(tmp_path, sim_dir):
    out = tmp_path / "rep"
    code = main(["simulate", "--phantom", str(sim_dir / "phantom.json"), "--height", "16",
                 "--width", "16", "--rings", "8", "--replicate", "3", "--copies", "4",
                 "--snr", "40", "--out", str(out)])
    assert code == 0
    V = mio.read_matrix(out / "measurements.csv")
    truth = mio.read_matrix(out / "truth.csv")
    assert V.shape == (208, 4) and np.all(truth == truth[:, :1])
    assert not np.array_equal(V[:, 0], V[:, 1])  # independent noise per column


def test_reconstruct_and_rerun(tmp_path, sim_dir):
    out = tmp_path / "rec"
    assert main(["reconstruct", *problem(sim_dir), *FAST, "--out", str(out)]) == 0
    names = {p.name for p in out.iterdir()}
    assert {"sigma.csv", "loss.csv", "attention.csv", "frames", "metrics.json",
            "config.json", "manifest.json"} <= names
    assert not any(n.startswith(".staging") for n in names)
    config = json.loads((out / "config.json").read_text())
    assert config["reconstruction"]["iterations"] == 3
    assert config["network"]["branches"] == 4
    assert main(["rerun", str(out / "manifest.json"), "--out", str(tmp_path / "again"),
                 "--check"]) == 0
    assert (out / "sigma.csv").read_bytes() == (tmp_path / "again" / "sigma.csv").read_bytes()


def test_config_file_and_override(tmp_path, sim_dir):
    cfg = tmp_path / "c.json"
    cfg.write_text(json.dumps({"reconstruction": {"iterations": 2, "lr": 0.01},
                               "network": {"base_channels": 2, "fu_channels": 3,
                                           "se_reduction": 2, "aspp_dilations": [1, 2]}}))
    out = tmp_path / "rec"
    assert main(["reconstruct", *problem(sim_dir, False), "--config", str(cfg),
                 "--iterations", "1", "--out", str(out)]) == 0
    rec = json.loads((out / "config.json").read_text())["reconstruction"]
    assert rec == {"iterations": 1, "lr": 0.01, "seed": 0, "loss": "l1"}


def test_missing_input_is_io_error(tmp_path, sim_dir):
    args = problem(sim_dir, False)
    args[args.index("--mask") + 1] = str(tmp_path / "nope.txt")
    out = tmp_path / "rec"
    assert main(["reconstruct", *args, *FAST, "--out", str(out)]) == EXIT_IO
    assert not out.exists()


def test_dimension_mismatch(tmp_path, sim_dir):
    mio.write_matrix(tmp_path / "v.csv", np.ones((100, 4)))
    args = problem(sim_dir, False)
    args[args.index("--measurements") + 1] = str(tmp_path / "v.csv")
    assert main(["reconstruct", *args, *FAST, "--out", str(tmp_path / "r")]) == EXIT_DIMENSION


def test_bad_input(tmp_path, sim_dir):
    (tmp_path / "v.csv").write_text("oops\n")
    args = problem(sim_dir, False)
    args[args.index("--measurements") + 1] = str(tmp_path / "v.csv")
    assert main(["reconstruct", *args, *FAST, "--out", str(tmp_path / "r")]) == EXIT_BAD_INPUT
    assert main(["reconstruct", *problem(sim_dir), *FAST, "--iterations", "0",
                 "--out", str(tmp_path / "r")]) == EXIT_BAD_INPUT
    assert main(["reconstruct", "--bogus"]) == EXIT_BAD_INPUT


def test_divergence_exit_code_and_no_partial_output(tmp_path, sim_dir):
    V = mio.read_matrix(sim_dir / "measurements.csv")
    V[0, 0] = np.inf
    mio.write_matrix(tmp_path / "v.csv", V)
    args = problem(sim_dir, False)
    args[args.index("--measurements") + 1] = str(tmp_path / "v.csv")
    out = tmp_path / "r"
    assert main(["reconstruct", *args, *FAST, "--out", str(out)]) == EXIT_DIVERGED
    assert not out.exists()


def test_evaluate_single_and_batch(tmp_path, sim_dir):
    truth = str(sim_dir / "truth.csv")
    mask = str(sim_dir / "mask.txt")
    assert main(["evaluate", "--pred", truth, "--truth", truth, "--mask", mask,
                 "--out", str(tmp_path / "ev")]) == 0
    report = json.loads((tmp_path / "ev" / "metrics.json").read_text())
    assert report["rie"] == [0.0] * 4
    runs = tmp_path / "runs"
    for name in ("a", "b"):
        (runs / name).mkdir(parents=True)
        (runs / name / "sigma.csv").write_bytes((sim_dir / "truth.csv").read_bytes())
    assert main(["evaluate", "--runs", str(runs), "--truth", truth, "--mask", mask,
                 "--out", str(tmp_path / "batch")]) == 0
    rows = list(csv.DictReader(open(tmp_path / "batch" / "metrics.csv")))
    assert [r["run"] for r in rows] == ["a", "b"]
    assert main(["evaluate", "--truth", truth, "--mask", mask,
                 "--out", str(tmp_path / "x")]) == EXIT_BAD_INPUT


def test_parse_snr_list():
    assert parse_snr_list("10..90:10") == [10.0, 20.0, 30.0, 40.0, 50.0, 60.0, 70.0, 80.0, 90.0]
    assert parse_snr_list("20,inf") == [20.0, np.inf]
    with pytest.raises(ValueError):
        parse_snr_list("50..10")


def test_noise_sweep_continues_past_failures(tmp_path, sim_dir, monkeypatch):
    import maip.cli as cli
    real = cli.run_maip
    calls = []

    def flaky(*args, **kw):
        calls.append(1)
        if len(calls) == 2:
            raise cli.DivergenceError(0, 1.0, float("nan"))
        return real(*args, **kw)

    monkeypatch.setattr(cli, "run_maip", flaky)
    out = tmp_path / "sweep"
    assert main(["noise-sweep", *problem(sim_dir), *FAST, "--snr-list", "20,30,inf",
                 "--out", str(out)]) == 0
    rows = list(csv.DictReader(open(out / "aggregate.csv")))
    assert [r["run"] for r in rows] == ["snr_20", "snr_30", "snr_inf"]
    assert [r["status"] for r in rows] == ["ok", "diverged", "ok"]
    assert (out / "snr_20" / "metrics.json").exists()
    assert not (out / "snr_30").exists()


def test_ablate(tmp_path, sim_dir):
    out = tmp_path / "abl"
    assert main(["ablate", *problem(sim_dir), *FAST, "--variants", "full,no-ba,frobenius",
                 "--out", str(out)]) == 0
    rows = list(csv.DictReader(open(out / "aggregate.csv")))
    assert [r["run"] for r in rows] == ["full", "no-ba", "frobenius"]
    assert not (out / "no-ba" / "attention.csv").exists()
    assert main(["ablate", *problem(sim_dir), "--variants", "nope",
                 "--out", str(tmp_path / "x")]) == EXIT_BAD_INPUT
