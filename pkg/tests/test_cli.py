"""Command line behavior, report files, exit codes."""

import json

import numpy as np
import pytest

from noisescale import cli, quadratic, reports
from noisescale.data import Dataset, make_rng, save_dataset


def _run(capsys, *argv):
    status = cli.main(list(argv))
    captured = capsys.readouterr()
    return status, captured.out, captured.err


def _read(path):
    return reports.read_json_report(path)


def test_train_writes_report_and_epoch_log(tmp_path, capsys):
    out = tmp_path / "run"
    status, stdout, _ = _run(
        capsys,
        "train",
        "--seed", "0",
        "--output-dir", str(out),
        "--set", "blobs_classes=2",
        "--set", "blobs_separation=3.0",
        "--set", "max_steps=500",
    )
    assert status == 0
    payload = _read(out / "train_report.json")
    assert payload["summary"]["steps"] == 500
    assert payload["summary"]["val_acc"] > 0.95
    assert payload["summary"]["n_train"] + payload["summary"]["n_val"] == 1024
    assert "output_dir" not in payload["config"]
    assert payload["timing"]["wall_seconds"] > 0
    lines = (out / "epochs.csv").read_text().strip().splitlines()
    assert lines[0].startswith("epoch,")
    assert len(lines) == 1 + payload["summary"]["epochs"]
    assert "val acc" in stdout or "val loss" in stdout


def test_train_zero_steps_reports_initial_model(tmp_path, capsys):
    out = tmp_path / "run"
    status, _, _ = _run(
        capsys,
        "train",
        "--seed", "0",
        "--output-dir", str(out),
        "--set", "max_steps=0",
    )
    assert status == 0
    summary = _read(out / "train_report.json")["summary"]
    assert summary["steps"] == 0
    assert summary["epochs"] == 0


@pytest.mark.parametrize("command", ["train", "estimate-gns"])
def test_reports_are_deterministic_outside_timing(tmp_path, capsys, command):
    name = "train_report.json" if command == "train" else "gns_report.json"
    args = ["--set", "max_steps=120"]
    if command == "estimate-gns":
        args += ["--set", "gns_warmup=20"]
    first = tmp_path / "a"
    second = tmp_path / "b"
    for out in (first, second):
        status, _, _ = _run(
            capsys, command, "--seed", "3", "--output-dir", str(out), *args
        )
        assert status == 0
    a = reports.strip_timing(_read(first / name))
    b = reports.strip_timing(_read(second / name))
    assert json.dumps(a, sort_keys=True) == json.dumps(b, sort_keys=True)
    assert _read(first / name)["timing"]["wall_seconds"] >= 0


def test_estimate_gns_on_dataset_writes_recommendation(tmp_path, capsys):
    out = tmp_path / "run"
    status, stdout, _ = _run(
        capsys,
        "estimate-gns",
        "--seed", "0",
        "--output-dir", str(out),
        "--set", "max_steps=200",
        "--set", "learning_rate=0.05",
    )
    assert status == 0
    summary = _read(out / "gns_report.json")["summary"]
    assert summary["source"] == "dataset"
    assert summary["b_small"] == 8 and summary["b_big"] == 32
    rec = summary["recommended_batch"]
    assert rec >= 1 and rec & (rec - 1) == 0
    assert "recommended batch size" in stdout
    grid_banner = (out / "tradeoff.csv").read_text().splitlines()
    assert grid_banner[0] == "batch,eps_opt,relative_steps,relative_examples"


def test_estimate_gns_quadratic_tracks_the_analytic_value(tmp_path, capsys):
    # identity Hessian makes the two noise numbers coincide, so the
    # paired estimate must land within 10% of both
    qpath = tmp_path / "quad.kv"
    dim = 64
    rng = make_rng(0)
    w = rng.normal(size=(dim, dim))
    sigma = w @ w.T / dim + 0.5 * np.eye(dim)
    spec = quadratic.QuadraticSpec(
        dim=dim, hessian=np.eye(dim), noise_cov=sigma, center=np.zeros(dim), seed=0
    )
    quadratic.save_quadratic_spec(spec, qpath)

    out = tmp_path / "run"
    status, stdout, _ = _run(
        capsys,
        "estimate-gns",
        "--seed", "0",
        "--output-dir", str(out),
        "--quadratic", str(qpath),
        "--set", "b_small=1",
        "--set", "b_big=16",
    )
    assert status == 0
    summary = _read(out / "gns_report.json")["summary"]
    assert summary["source"] == "quadratic"
    assert summary["steps_used"] == 2000
    analytic = summary["analytic_b_simple"]
    assert abs(summary["b_noise_hat"] - analytic) / analytic < 0.10
    assert "analytic" in stdout and "estimated" in stdout


def test_estimate_gns_duplicated_example_recommends_one(tmp_path, capsys):
    # 256 copies of one row has zero gradient noise: the estimate must
    # collapse to zero and the recommendation to batch size 1
    features = np.tile(np.linspace(0.1, 0.9, 8), (256, 1))
    labels = np.ones(256, dtype=np.int64)
    labels[0] = 0  # one odd row keeps two classes while leaving s tiny
    data_path = tmp_path / "dup.csv"
    save_dataset(Dataset(features=features, labels=labels, name="dup"), data_path)

    out = tmp_path / "run"
    status, _, _ = _run(
        capsys,
        "estimate-gns",
        "--seed", "0",
        "--output-dir", str(out),
        "--data", str(data_path),
        "--set", "max_steps=150",
        "--set", "gns_warmup=50",
    )
    assert status == 0
    summary = _read(out / "gns_report.json")["summary"]
    assert summary["b_noise_hat"] < 0.5
    assert summary["recommended_batch"] == 1


def test_estimate_gns_is_stable_across_seeds(tmp_path, capsys):
    # the recommendation may wobble by one power of two between seeds,
    # not more
    recs = []
    for seed in ("0", "1"):
        out = tmp_path / f"seed{seed}"
        status, _, _ = _run(
            capsys,
            "estimate-gns",
            "--seed", seed,
            "--output-dir", str(out),
            "--set", "max_steps=200",
            "--set", "learning_rate=0.05",
        )
        assert status == 0
        recs.append(_read(out / "gns_report.json")["summary"]["recommended_batch"])
    spread = abs(np.log2(recs[0]) - np.log2(recs[1]))
    assert spread <= 1.0


def test_sweep_single_batch(tmp_path, capsys):
    out = tmp_path / "run"
    status, stdout, _ = _run(
        capsys,
        "sweep",
        "--seed", "0",
        "--output-dir", str(out),
        "--set", "sweep_grid=16",
        "--set", "lr_rule=fixed",
        "--set", "target_val_loss=0.35",
        "--set", "blobs_classes=2",
        "--set", "blobs_separation=3.0",
        "--set", "max_steps=600",
    )
    assert status == 0
    summary = _read(out / "sweep_report.json")["summary"]
    assert summary["grid"] == [16]
    assert len(summary["rows"]) == 1
    row = summary["rows"][0]
    assert row["batch"] == 16
    assert "wall_seconds" not in row
    assert row["converged"] is True
    csv_lines = (out / "sweep.csv").read_text().strip().splitlines()
    assert len(csv_lines) == 2


def test_sweep_fixed_rule_warns_on_wide_grid(tmp_path, capsys):
    out = tmp_path / "run"
    status, _, stderr = _run(
        capsys,
        "sweep",
        "--seed", "0",
        "--output-dir", str(out),
        "--set", "sweep_grid=8,256",
        "--set", "lr_rule=fixed",
        "--set", "target_val_loss=0.01",
        "--set", "max_steps=40",
    )
    assert status == 0
    assert "warning" in stderr and "fixed learning rate" in stderr
    rows = _read(out / "sweep_report.json")["summary"]["rows"]
    assert [row["batch"] for row in rows] == [8, 256]
    assert any(row["converged"] is False for row in rows)


def test_sweep_requires_target(tmp_path, capsys):
    status, _, stderr = _run(
        capsys, "sweep", "--seed", "0", "--output-dir", str(tmp_path)
    )
    assert status == 2
    assert "target_val_loss" in stderr


def test_sweep_eps_opt_scales_learning_rates(tmp_path, capsys):
    out = tmp_path / "run"
    status, _, _ = _run(
        capsys,
        "sweep",
        "--seed", "0",
        "--output-dir", str(out),
        "--set", "sweep_grid=8,64",
        "--set", "lr_rule=eps_opt_scaled",
        "--set", "eps_max=0.5",
        "--set", "target_val_loss=0.35",
        "--set", "blobs_classes=2",
        "--set", "blobs_separation=3.0",
        "--set", "max_steps=400",
        "--set", "gns_warmup=30",
        "--set", "learning_rate=0.1",
    )
    assert status == 0
    rows = _read(out / "sweep_report.json")["summary"]["rows"]
    lrs = {row["batch"]: row["learning_rate"] for row in rows}
    # bigger batches average away more noise and earn bigger steps
    assert 0 < lrs[8] < lrs[64] < 0.5


def test_verify_quadratic_passes_with_defaults(tmp_path, capsys):
    status, stdout, _ = _run(
        capsys, "verify-quadratic", "--seed", "0", "--output-dir", str(tmp_path)
    )
    assert status == 0
    assert "PASS" in stdout
    assert "FAIL" not in stdout


def test_group_transforms_identity_only_grid(tmp_path, capsys):
    out = tmp_path / "run"
    status, stdout, _ = _run(
        capsys,
        "group-transforms",
        "--seed", "0",
        "--output-dir", str(out),
        "--set", "magnitudes=0",
        "--set", "num_groups=4",
    )
    assert status == 0
    payload = _read(out / "groups_report.json")
    groups = payload["summary"]["groups"]
    assert len(groups) == 1
    assert payload["summary"]["fewer_than_requested"] is True
    assert "group 0" in stdout


def test_group_transforms_reruns_byte_identical(tmp_path, capsys):
    outputs = []
    for sub in ("a", "b"):
        out = tmp_path / sub
        status, _, _ = _run(
            capsys,
            "group-transforms",
            "--seed", "0",
            "--output-dir", str(out),
            "--set", "blobs_dim=16",
        )
        assert status == 0
        payload = reports.strip_timing(_read(out / "groups_report.json"))
        outputs.append(json.dumps(payload, sort_keys=True))
    assert outputs[0] == outputs[1]


class TestErrorExits:
    def test_missing_seed(self, capsys):
        status, _, stderr = _run(capsys, "train")
        assert status == 2
        assert "seed" in stderr

    def test_unknown_set_key(self, tmp_path, capsys):
        status, _, stderr = _run(
            capsys,
            "train",
            "--seed", "0",
            "--output-dir", str(tmp_path),
            "--set", "max_stepz=10",
        )
        assert status == 2
        assert "max_stepz" in stderr

    def test_malformed_set_flag(self, tmp_path, capsys):
        status, _, stderr = _run(
            capsys, "train", "--seed", "0", "--set", "max_steps"
        )
        assert status == 2
        assert "key=value" in stderr

    def test_missing_data_file(self, tmp_path, capsys):
        status, _, stderr = _run(
            capsys,
            "train",
            "--seed", "0",
            "--output-dir", str(tmp_path),
            "--data", str(tmp_path / "absent.csv"),
        )
        assert status == 2
        assert "does not exist" in stderr

    def test_warmup_swallowing_the_budget(self, tmp_path, capsys):
        status, _, stderr = _run(
            capsys,
            "estimate-gns",
            "--seed", "0",
            "--output-dir", str(tmp_path),
            "--set", "max_steps=40",
            "--set", "gns_warmup=50",
        )
        assert status == 2
        assert "warmup" in stderr
