"""CLI behaviour: exit codes, stream discipline, artifact round-trips."""

import json

import numpy as np
import pytest

from harwin.cli import cli
from harwin.dataset import load_signals
from harwin.model import load_model

pytestmark = pytest.mark.usefixtures("tmp_cwd")


@pytest.fixture
def tmp_cwd(tmp_path, monkeypatch):
    monkeypatch.chdir(tmp_path)
    monkeypatch.delenv("HARWIN_DATA_DIR", raising=False)
    return tmp_path


def _synth(path="cache.bin", extra=()):
    rc = cli(["synth", "--seed", "42", "--samples-per-class", "2", "--segment-len", "120", "--out", str(path), *extra])
    assert rc == 0
    return path


def test_unknown_flag_exits_2(capsys):
    assert cli(["synth", "--frobnicate"]) == 2
    assert cli(["no-such-command"]) == 2
    assert cli([]) == 2


def test_synth_writes_loadable_cache(capsys):
    _synth()
    out = capsys.readouterr()
    assert "cache.bin" in out.out
    assert "fingerprint sha256:" in out.out
    (sig,) = load_signals("cache.bin")
    assert sig.channels.shape == (18, 2 * 5 * 120)


def test_synth_is_reproducible(tmp_cwd):
    _synth("a.bin")
    _synth("b.bin")
    assert (tmp_cwd / "a.bin").read_bytes() == (tmp_cwd / "b.bin").read_bytes()


def test_synth_validation_exit_2(capsys):
    assert cli(["synth", "--samples-per-class", "0", "--out", "x.bin"]) == 2
    assert cli(["synth", "--segment-len", "1", "--out", "x.bin"]) == 2
    err = capsys.readouterr().err
    assert "segment-len" in err


def test_missing_cache_exits_1_with_stderr_only(capsys):
    rc = cli(["train", "--cache", "absent.bin", "--window", "0.5"])
    assert rc == 1
    out = capsys.readouterr()
    assert out.out == ""
    assert "absent.bin" in out.err


def test_no_input_source_exits_1(capsys):
    rc = cli(["sweep"])
    assert rc == 1
    assert "HARWIN_DATA_DIR" in capsys.readouterr().err


def test_train_writes_model_and_metrics(tmp_cwd, capsys):
    _synth()
    rc = cli(
        [
            "train", "--cache", "cache.bin", "--window", "0.25",
            "--max-epochs", "3", "--patience", "3", "--batch-size", "64",
            "--model-out", "model.bin", "--metrics-json", "metrics.json",
        ]
    )
    assert rc == 0
    out = capsys.readouterr()
    assert "accuracy" in out.out
    net = load_model(tmp_cwd / "model.bin")
    assert net.plan.window_len == 25
    doc = json.loads((tmp_cwd / "metrics.json").read_text())
    assert doc["window_sec"] == 0.25
    assert 0.0 <= doc["accuracy"] <= 1.0
    assert len(doc["history"]) <= 3
    assert {"train_loss", "stop_loss"} <= set(doc["history"][0])


def test_train_kernel_override(tmp_cwd):
    _synth()
    rc = cli(
        [
            "train", "--cache", "cache.bin", "--window", "0.25", "--kernels", "3,3",
            "--max-epochs", "2", "--patience", "2", "--model-out", "m.bin",
        ]
    )
    assert rc == 0
    assert load_model(tmp_cwd / "m.bin").spec.kernels == (3, 3)
    assert cli(["train", "--cache", "cache.bin", "--window", "0.25", "--kernels", "3", "--max-epochs", "2"]) == 2


def test_sweep_writes_all_outputs(tmp_cwd, capsys):
    _synth()
    capsys.readouterr()  # drop the synth chatter
    rc = cli(
        [
            "sweep", "--cache", "cache.bin", "--windows", "0.1,0.25",
            "--folds", "2", "--max-epochs", "2", "--patience", "2", "--out-dir", "out",
        ]
    )
    assert rc == 0
    captured = capsys.readouterr()
    assert captured.out.startswith("window_sec,k1,k2,")
    for name in ("report.json", "report.csv", "accuracy_boxplot.svg", "loss_boxplot.svg", "epochs_boxplot.svg"):
        assert (tmp_cwd / "out" / name).is_file(), name
    assert (tmp_cwd / "out" / "report.csv").read_text() == captured.out


def test_sweep_folds_below_two_exit_2(capsys):
    _synth()
    assert cli(["sweep", "--cache", "cache.bin", "--folds", "1"]) == 2
    assert "--folds" in capsys.readouterr().err


def test_sweep_bad_windows_exit_2(capsys):
    _synth()
    assert cli(["sweep", "--cache", "cache.bin", "--windows", "0.1,zebra"]) == 2
    assert cli(["sweep", "--cache", "cache.bin", "--windows", "0.1,0.1"]) == 2


def test_report_regenerates_byte_identical_outputs(tmp_cwd):
    _synth()
    assert (
        cli(
            [
                "sweep", "--cache", "cache.bin", "--windows", "0.1",
                "--folds", "2", "--max-epochs", "2", "--patience", "2", "--out-dir", "one",
            ]
        )
        == 0
    )
    assert cli(["report", "--report", "one/report.json", "--out-dir", "two"]) == 0
    for name in ("report.csv", "accuracy_boxplot.svg", "loss_boxplot.svg", "epochs_boxplot.svg"):
        assert (tmp_cwd / "one" / name).read_bytes() == (tmp_cwd / "two" / name).read_bytes(), name


def test_ingest_via_env_var(tmp_cwd, monkeypatch, capsys):
    data = tmp_cwd / "data"
    data.mkdir()
    rows = []
    rng = np.random.default_rng(0)
    for i in range(40):
        vals = rng.normal(size=52)
        rows.append(" ".join([f"{0.01 * (i + 1):.2f}", "4"] + [f"{v:.5f}" for v in vals]))
    (data / "subject101.dat").write_text("\n".join(rows) + "\n")
    monkeypatch.setenv("HARWIN_DATA_DIR", str(data))
    rc = cli(["ingest", "--out", "pamap.bin"])
    assert rc == 0
    assert "1 subject(s), 40 timesteps" in capsys.readouterr().out
    (sig,) = load_signals("pamap.bin")
    assert sig.subject_id == 101
    assert sig.channels.shape == (18, 40)


def test_ingest_missing_dir_exits_1(capsys):
    assert cli(["ingest", "--data-dir", "nowhere", "--out", "x.bin"]) == 1
    assert "not found" in capsys.readouterr().err
