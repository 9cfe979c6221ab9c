import json

import pytest

from quditvqc import checkpoint
from quditvqc.cli import main
from quditvqc.data import TimeSeriesRecord, load_feature_csv, synthesize_series, write_series_csv


def run(*argv):
    return main([str(a) for a in argv])


@pytest.fixture(scope="module")
def prepared(tmp_path_factory):
    d = tmp_path_factory.mktemp("prep")
    assert run("prepare", "--data", "synthetic:10", "--out", d, "--seed", 4) == 0
    return d


def test_prepare_synthetic_default_counts(tmp_path):
    assert run("prepare", "--data", "synthetic", "--out", tmp_path) == 0
    manifest = json.loads((tmp_path / "manifest.json").read_text())
    assert (manifest["train_rows"], manifest["test_rows"]) == (720, 180)
    assert manifest["train_class_counts"] == [80] * 9
    assert len(load_feature_csv(tmp_path / "test.csv")) == 180


def test_prepare_is_byte_identical(tmp_path):
    for sub in ("a", "b"):
        assert run("prepare", "--data", "synthetic:6", "--out", tmp_path / sub, "--seed", 11) == 0
    for name in ("train.csv", "test.csv", "manifest.json"):
        assert (tmp_path / "a" / name).read_bytes() == (tmp_path / "b" / name).read_bytes()


def test_prepare_from_series(tmp_path):
    series = tmp_path / "series.csv"
    write_series_csv(synthesize_series(0, 30), series)
    assert run("prepare", "--data", series, "--out", tmp_path / "p") == 0
    manifest = json.loads((tmp_path / "p" / "manifest.json").read_text())
    assert manifest["windows"] == 9 * 21 and manifest["warnings"] == 0


def test_prepare_short_series_warns(tmp_path, capsys):
    series = tmp_path / "short.csv"
    write_series_csv([TimeSeriesRecord(i, 0.02, 900.0, 3) for i in range(5)], series)
    assert run("prepare", "--data", series, "--out", tmp_path / "p") == 0
    manifest = json.loads((tmp_path / "p" / "manifest.json").read_text())
    assert manifest["train_rows"] == 0 and manifest["test_rows"] == 0
    assert manifest["warnings"] == 1
    assert (tmp_path / "p" / "train.csv").read_text() == "f1,f2,f3,f4,f5,label\n"
    assert "warning" in capsys.readouterr().err


def test_prepare_input_errors(tmp_path, capsys):
    bad = tmp_path / "bad.csv"
    bad.write_text("f1,f2,f3,f4,f5,label\n1,2,3,4,5,0\n1,2,3,4,5,12\n")
    assert run("prepare", "--data", bad, "--out", tmp_path / "o") == 2
    assert "line 3" in capsys.readouterr().err
    assert run("prepare", "--data", tmp_path / "missing.csv", "--out", tmp_path / "o") == 2


def test_usage_errors(tmp_path, prepared):
    assert run("train", "--model", "transformer", "--data", prepared, "--out", tmp_path) == 1
    assert run("train", "--data", prepared, "--out", tmp_path, "--epochs", "x") == 1
    assert run("frobnicate") == 1
    assert run("compare", tmp_path) == 1


def test_missing_data_exit_2(tmp_path, capsys):
    assert run("train", "--model", "dense-nn", "--data", tmp_path / "nowhere", "--out", tmp_path / "r") == 2
    assert "not found" in capsys.readouterr().err


def test_nan_loss_exit_3(tmp_path, prepared, capsys):
    code = run("train", "--model", "dense-nn", "--data", prepared, "--out", tmp_path / "r", "--lr", "1e300",
               "--epochs", 3)
    assert code == 3
    assert "epoch" in capsys.readouterr().err


def test_weight_counts_at_zero_epochs(tmp_path, prepared):
    expected = {"dense-nn": 67328, "qae-qudit": 1130, "qudit-raw": 640}
    for kind, count in expected.items():
        out = tmp_path / kind
        assert run("train", "--model", kind, "--data", prepared, "--out", out, "--epochs", 0) == 0
        assert json.loads((out / "run.json").read_text())["n_params"] == count
    stored = sum(a.size for name in ("qae.ckpt", "vqc.ckpt")
                 for a in checkpoint.read(tmp_path / "qae-qudit" / name)[2].values())
    assert stored == 1130
    stored = sum(a.size for a in checkpoint.read(tmp_path / "dense-nn" / "model.ckpt")[2].values())
    assert stored == 67328


def test_config_file_and_flag_override(tmp_path, prepared):
    cfg = tmp_path / "cfg.json"
    cfg.write_text(json.dumps({"epochs": 0, "layers": 3, "lr": 0.5}))
    out = tmp_path / "r"
    assert run("train", "--model", "qudit-raw", "--data", prepared, "--out", out, "--config", cfg, "--layers", 2) == 0
    settings = json.loads((out / "run.json").read_text())["settings"]
    assert settings["layers"] == 2 and settings["lr"] == 0.5 and settings["epochs"] == 0
    cfg.write_text(json.dumps({"colour": "blue"}))
    assert run("train", "--model", "qudit-raw", "--data", prepared, "--out", out, "--config", cfg) == 1


def train_and_evaluate(prepared, out, kind="dense-nn", epochs=2):
    assert run("train", "--model", kind, "--data", prepared, "--out", out, "--epochs", epochs, "--seed", 3) == 0
    assert run("evaluate", "--out", out, "--data", prepared) == 0


def test_train_evaluate_is_deterministic(tmp_path, prepared):
    for sub in ("a", "b"):
        train_and_evaluate(prepared, tmp_path / sub, "qae-qudit", 1)
    names = sorted(p.name for p in (tmp_path / "a").iterdir() if p.name != "timing.json")
    assert "metrics.kv" in names and "vqc.ckpt" in names
    for name in names:
        assert (tmp_path / "a" / name).read_bytes() == (tmp_path / "b" / name).read_bytes(), name
    before = (tmp_path / "a" / "metrics.txt").read_bytes()
    assert run("evaluate", "--out", tmp_path / "a", "--data", prepared) == 0
    assert (tmp_path / "a" / "metrics.txt").read_bytes() == before


def test_evaluate_report_format(tmp_path, prepared):
    train_and_evaluate(prepared, tmp_path / "r")
    lines = (tmp_path / "r" / "metrics.txt").read_text().splitlines()
    assert lines[0] == "model: dense-nn  weights: 67328"
    assert lines[1].split() == ["Class", "#", "Precision", "Recall", "F1-Score", "#", "Data"]
    assert lines[-2].startswith("Accuracy") and lines[-1].startswith("Macro Average")
    kv = (tmp_path / "r" / "metrics.kv").read_text().splitlines()
    assert kv[:3] == ["model = dense-nn", "weights = 67328", kv[2]] and kv[2].startswith("accuracy = ")


def test_evaluate_dimension_mismatch(tmp_path, prepared):
    out = tmp_path / "r"
    train_and_evaluate(prepared, out)
    kind, meta, arrays = checkpoint.read(out / "scaler.ckpt")
    checkpoint.write(out / "scaler.ckpt", kind, {"features": 4}, {k: v[:4] for k, v in arrays.items()})
    assert run("evaluate", "--out", out, "--data", prepared) == 2
    assert run("evaluate", "--out", tmp_path / "absent", "--data", prepared) == 2


def test_compare(tmp_path, prepared, capsys):
    train_and_evaluate(prepared, tmp_path / "nn")
    train_and_evaluate(prepared, tmp_path / "raw", "qudit-raw", 1)
    train_and_evaluate(prepared, tmp_path / "qq", "qae-qudit", 1)
    capsys.readouterr()
    table = tmp_path / "table.txt"
    assert run("compare", tmp_path / "raw", tmp_path / "nn", tmp_path / "qq", "--out", table) == 0
    rows = table.read_text().splitlines()[2:]
    assert [r.split()[0] for r in rows] == ["QAE-Qudit", "Classic", "Qudit"]
    assert [r.split()[-1] for r in rows] == ["1,130", "67,328", "640"]
    assert capsys.readouterr().out == table.read_text()
    assert run("compare", tmp_path / "nn") == 1
    assert run("compare", tmp_path / "nn", tmp_path / "ghost") == 2


def test_no_color(tmp_path, prepared, monkeypatch, capsys):
    monkeypatch.setenv("NO_COLOR", "1")
    train_and_evaluate(prepared, tmp_path / "r")
    assert "\033" not in capsys.readouterr().out
