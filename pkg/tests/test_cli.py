import json

import numpy as np
import pytest

from qcrack.cli import main, parse_run_config
from qcrack.errors import ConfigError


def run(capsys, *argv):
    code = main(list(argv))
    captured = capsys.readouterr()
    return code, captured.out, captured.err


@pytest.fixture()
def feature_csv(tmp_path):
    """Small separable feature file: 12 crack / 12 clean, 8 features."""
    rng = np.random.default_rng(0)
    rows = []
    for i in range(12):
        rows.append(f"c{i},crack," +
                    ",".join(f"{v:.4f}" for v in rng.normal(1.0, 0.3, 8)))
        rows.append(f"n{i},no_crack," +
                    ",".join(f"{v:.4f}" for v in rng.normal(-1.0, 0.3, 8)))
    path = tmp_path / "features.csv"
    path.write_text("\n".join(rows) + "\n")
    return path


def train_config(tmp_path, feature_csv, **overrides):
    doc = {
        "circuit": {"num_qubits": 2, "q_depth": 1},
        "method": "backprop",
        "epochs": 2,
        "seed": 5,
        "split": [0.5, 0.25, 0.25],
        "data": {"source": "features", "path": str(feature_csv)},
        "out_dir": str(tmp_path / "run"),
    }
    doc.update(overrides)
    path = tmp_path / "config.json"
    path.write_text(json.dumps(doc))
    return path


class TestLedgerCommand:
    def test_paper_values(self, capsys):
        code, out, _ = run(capsys, "ledger", "856", "184", "2", "4")
        assert code == 0
        assert "1,040" in out and "7,888" in out and "14,736" in out

    def test_json_output(self, capsys):
        code, out, _ = run(capsys, "ledger", "1", "0", "2", "1", "--json")
        assert code == 0
        doc = json.loads(out)
        assert doc["n_calls"] == {"backprop": 1, "finite-diff": 3,
                                  "param-shift": 5}

    def test_zero_images(self, capsys):
        code, out, _ = run(capsys, "ledger", "0", "0", "3", "4", "--json")
        assert json.loads(out)["n_calls"] == {
            "backprop": 0, "finite-diff": 0, "param-shift": 0}


class TestEstimateCommand:
    def test_named_profile(self, capsys):
        code, out, _ = run(capsys, "estimate", "--profile", "ibmq_ehningen",
                           "--n-calls", "8820", "--shots", "1000",
                           "--layers", "2", "--json")
        assert code == 0
        doc = json.loads(out)
        assert doc["device_seconds"] == pytest.approx(9284.2, abs=0.1)

    def test_custom_clops_with_overhead(self, capsys):
        code, out, _ = run(capsys, "estimate", "--clops", "1900",
                           "--overhead", "6.5", "--n-calls", "8820", "--json")
        doc = json.loads(out)
        assert doc["wall_seconds"] == pytest.approx(6.5 * doc["device_seconds"])

    def test_missing_profile_is_config_error(self, capsys):
        code, _, err = run(capsys, "estimate", "--n-calls", "10")
        assert code == 2 and "config error" in err


class TestGenCommand:
    def test_writes_patches_and_manifest(self, capsys, tmp_path):
        out_dir = tmp_path / "patches"
        code, out, _ = run(capsys, "gen", "10", "10", "--seed", "42",
                           "--out", str(out_dir))
        assert code == 0
        pgms = sorted(out_dir.glob("*.pgm"))
        assert len(pgms) == 20
        manifest = (out_dir / "manifest.csv").read_text().splitlines()
        assert len(manifest) == 21
        assert manifest[0] == "filename,label"

    def test_idempotent(self, capsys, tmp_path):
        out_dir = tmp_path / "patches"
        run(capsys, "gen", "2", "1", "--seed", "7", "--out", str(out_dir))
        first = {p.name: p.read_bytes() for p in out_dir.glob("*.pgm")}
        run(capsys, "gen", "2", "1", "--seed", "7", "--out", str(out_dir))
        second = {p.name: p.read_bytes() for p in out_dir.glob("*.pgm")}
        assert first == second

    def test_empty(self, capsys, tmp_path):
        out_dir = tmp_path / "patches"
        code, _, _ = run(capsys, "gen", "0", "0", "--out", str(out_dir))
        assert code == 0
        assert (out_dir / "manifest.csv").read_text().splitlines() == \
            ["filename,label"]


class TestGradcheckCommand:
    def test_defaults_pass(self, capsys):
        code, out, _ = run(capsys, "gradcheck", "--trials", "5", "--json")
        assert code == 0
        assert json.loads(out)["pass"] is True

    def test_coarse_delta_fails(self, capsys):
        code, out, _ = run(capsys, "gradcheck", "--trials", "5",
                           "--fd-delta", "0.1", "--fd-variant", "central",
                           "--tol-fd", "1e-5", "--json")
        assert code == 1
        doc = json.loads(out)
        assert doc["max_dev_finite_diff_vs_backprop"] > 1e-5

    def test_depth_sweep_passes(self, capsys):
        for depth in (2, 6):
            code, out, _ = run(capsys, "gradcheck", "--trials", "3",
                               "--q-depth", str(depth), "--json")
            assert code == 0, out


class TestTrainCommand:
    def test_train_writes_artifacts(self, capsys, tmp_path, feature_csv):
        cfg = train_config(tmp_path, feature_csv)
        code, out, _ = run(capsys, "train", "--config", str(cfg))
        assert code == 0
        run_dir = tmp_path / "run"
        for name in ("metrics.csv", "report.json", "checkpoint.json",
                     "split.json", "run_config.json"):
            assert (run_dir / name).exists(), name
        report = json.loads((run_dir / "report.json").read_text())
        assert report["ledger"]["n_calls"] == report["ledger"]["predicted"]
        metrics = (run_dir / "metrics.csv").read_text().splitlines()
        assert len(metrics) == 3  # header + 2 epochs
        assert "test accuracy" in out

    def test_zero_epochs_header_only(self, capsys, tmp_path, feature_csv):
        cfg = train_config(tmp_path, feature_csv, epochs=0)
        code, _, _ = run(capsys, "train", "--config", str(cfg))
        assert code == 0
        metrics = (tmp_path / "run" / "metrics.csv").read_text().splitlines()
        assert metrics == ["epoch,train_loss,train_acc,val_loss,val_acc,"
                           "n_calls,elapsed_ms"]

    def test_deterministic_metrics(self, capsys, tmp_path, feature_csv):
        cfg = train_config(tmp_path, feature_csv)
        run(capsys, "train", "--config", str(cfg),
            "--out", str(tmp_path / "a"))
        run(capsys, "train", "--config", str(cfg),
            "--out", str(tmp_path / "b"))
        # identical except the wall-clock column (last field per row)
        strip = lambda p: [",".join(line.split(",")[:-1])
                           for line in p.read_text().splitlines()]
        assert strip(tmp_path / "a" / "metrics.csv") == \
            strip(tmp_path / "b" / "metrics.csv")

    def test_invalid_config_exits_2(self, capsys, tmp_path, feature_csv):
        cfg = train_config(tmp_path, feature_csv, method="adjoint")
        code, _, err = run(capsys, "train", "--config", str(cfg))
        assert code == 2 and "config error" in err

    def test_unknown_key_exits_2(self, capsys, tmp_path, feature_csv):
        cfg = train_config(tmp_path, feature_csv, optimizer="sgd")
        code, _, _ = run(capsys, "train", "--config", str(cfg))
        assert code == 2

    def test_missing_data_file_exits_1(self, capsys, tmp_path):
        cfg = train_config(tmp_path, tmp_path / "nope.csv")
        code, _, err = run(capsys, "train", "--config", str(cfg))
        assert code == 1 and "error" in err

    def test_backprop_with_shots_rejected(self, capsys, tmp_path, feature_csv):
        cfg = train_config(tmp_path, feature_csv, shots=100)
        code, _, _ = run(capsys, "train", "--config", str(cfg))
        assert code == 2

    def test_shots_mode_param_shift(self, capsys, tmp_path, feature_csv):
        cfg = train_config(tmp_path, feature_csv, method="param-shift",
                           shots=256, epochs=1)
        code, _, _ = run(capsys, "train", "--config", str(cfg))
        assert code == 0
        report = json.loads((tmp_path / "run" / "report.json").read_text())
        assert report["ledger"]["n_calls"] == report["ledger"]["predicted"]


class TestEvalCommand:
    def test_matches_training_report(self, capsys, tmp_path, feature_csv):
        cfg = train_config(tmp_path, feature_csv, epochs=1)
        run(capsys, "train", "--config", str(cfg))
        run_dir = tmp_path / "run"
        report = json.loads((run_dir / "report.json").read_text())
        # evaluating on the full feature file covers the test split too
        code, out, _ = run(capsys, "eval",
                           "--checkpoint", str(run_dir / "checkpoint.json"),
                           "--features", str(feature_csv), "--json")
        assert code == 0
        doc = json.loads(out)
        assert sum(doc["confusion_matrix"].values()) == 24

    def test_feature_width_mismatch_exits_2(self, capsys, tmp_path,
                                            feature_csv):
        cfg = train_config(tmp_path, feature_csv, epochs=0)
        run(capsys, "train", "--config", str(cfg))
        bad = tmp_path / "bad.csv"
        bad.write_text("a,crack,1,2,3\n")
        code, _, err = run(capsys, "eval",
                           "--checkpoint",
                           str(tmp_path / "run" / "checkpoint.json"),
                           "--features", str(bad))
        assert code == 2 and "features" in err


class TestRunConfigValidation:
    def test_defaults(self):
        cfg = parse_run_config({})
        assert cfg.method_name == "backprop"
        assert cfg.ratios == (0.7, 0.15, 0.15)

    @pytest.mark.parametrize("doc", [
        {"epochs": -1},
        {"split": [0.5, 0.5]},
        {"split": [0.5, 0.4, 0.2]},
        {"data": {"source": "synthetic", "n_crack": -2, "n_clean": 1}},
        {"data": {"source": "dir"}},
        {"shots": 0, "method": "param-shift"},
        {"circuit": {"num_qubits": 0}},
    ])
    def test_rejects(self, doc):
        with pytest.raises(ConfigError):
            parse_run_config(doc)
