import csv
import json
import subprocess
import sys

import pytest

from mpsqc.cli import main, xcheck
from mpsqc.errors import DomainError

FAST = ["--max-iters", "30", "--restarts", "1"]


@pytest.fixture
def prepared(tmp_path):
    assert main(["prepare", "--schema", "iris", "--pairs", "1:2,2:3,1:3", "--seed", "7",
                 "--out-dir", str(tmp_path)]) == 0
    return tmp_path


def read_json(path):
    return json.loads(path.read_text())


class TestPrepare:
    def test_iris_three_tasks(self, prepared):
        for k in (1, 2, 3):
            man = read_json(prepared / f"Iris{k}.manifest.json")
            assert (man["n_train"], man["n_test"]) == (80, 20)
        assert (prepared / "iris_data.csv").exists()
        assert read_json(prepared / "prepare.config.json")["seed"] == 7

    def test_synthetic_agri(self, tmp_path):
        assert main(["prepare", "--schema", "agri", "--synth", "100", "--out-dir", str(tmp_path)]) == 0
        with open(tmp_path / "agri_synth.csv") as fh:
            assert sum(1 for _ in fh) == 301
        manifests = sorted(p.name for p in tmp_path.glob("*.manifest.json"))
        assert manifests == ["Agri1.manifest.json", "Agri2.manifest.json", "Agri3.manifest.json"]

    def test_missing_file_leaves_nothing(self, tmp_path, capsys):
        out = tmp_path / "out"
        code = main(["prepare", "--schema", "generic", "--data", str(tmp_path / "none.csv"),
                     "--label-column", "y", "--out-dir", str(out)])
        assert code != 0
        assert not out.exists() or not any(out.iterdir())
        assert "error" in capsys.readouterr().err

    def test_synth_needs_agri(self, tmp_path):
        assert main(["prepare", "--synth", "5", "--out-dir", str(tmp_path)]) == 1

    def test_config_file_overridden_by_flag(self, tmp_path):
        cfg = tmp_path / "c.json"
        cfg.write_text(json.dumps({"seed": 3, "ratio": 0.5}))
        out = tmp_path / "o"
        assert main(["prepare", "--config", str(cfg), "--seed", "9", "--out-dir", str(out)]) == 0
        echoed = read_json(out / "prepare.config.json")
        assert echoed["seed"] == 9 and echoed["ratio"] == 0.5

    def test_unknown_config_key(self, tmp_path):
        cfg = tmp_path / "c.json"
        cfg.write_text(json.dumps({"epochs": 3}))
        assert main(["prepare", "--config", str(cfg), "--out-dir", str(tmp_path)]) == 1


class TestTrainEval:
    def test_train_eval_predict(self, prepared, capsys):
        task = str(prepared / "Iris1.manifest.json")
        assert main(["train", "--task", task, "--out-dir", str(prepared), *FAST]) == 0
        assert "train accuracy" in capsys.readouterr().out
        model = prepared / "Iris1.model.json"
        assert main(["eval", "--model", str(model), "--task", task, "--out-dir", str(prepared)]) == 0
        rep = read_json(prepared / "Iris1.test.report.json")
        assert {"acc", "cost", "spec", "sens", "gini", "taylor"} <= set(rep)
        with open(prepared / "Iris1.test.samples.csv") as fh:
            assert len(list(csv.reader(fh))) == 1 + 20

        assert main(["predict", "--model", str(model), "--row", "5.1,3.5,1.4,0.2"]) == 0
        assert "class=Iris-setosa" in capsys.readouterr().out

        rows = prepared / "rows.csv"
        rows.write_text("sepal_length,sepal_width,petal_length,petal_width\n5.1,3.5,1.4,0.2\n6.4,3.2,4.5,1.5\n")
        assert main(["predict", "--model", str(model), "--input", str(rows), "--out-dir", str(prepared)]) == 0
        with open(prepared / "predictions.csv") as fh:
            preds = list(csv.DictReader(fh))
        assert [p["class"] for p in preds] == ["Iris-setosa", "Iris-versicolor"]

        assert main(["report", "--runs", str(prepared), "--out-dir", str(prepared)]) == 0
        assert (prepared / "summary.csv").exists()

    def test_same_seed_same_bytes(self, prepared):
        task = str(prepared / "Iris2.manifest.json")
        a, b = prepared / "a", prepared / "b"
        for out in (a, b):
            assert main(["train", "--task", task, "--seed", "4", "--out-dir", str(out), *FAST]) == 0
        assert (a / "Iris2.model.json").read_bytes() == (b / "Iris2.model.json").read_bytes()
        assert (a / "Iris2.history.csv").read_bytes() == (b / "Iris2.history.csv").read_bytes()

    def test_model_task_mismatch(self, prepared, tmp_path):
        main(["prepare", "--schema", "agri", "--synth", "10", "--out-dir", str(tmp_path / "agri")])
        main(["train", "--task", str(prepared / "Iris1.manifest.json"), "--out-dir", str(prepared), *FAST])
        code = main(["eval", "--model", str(prepared / "Iris1.model.json"),
                     "--task", str(tmp_path / "agri" / "Agri1.manifest.json"), "--out-dir", str(tmp_path)])
        assert code == 1

    def test_class_mapping_mismatch(self, prepared):
        main(["train", "--task", str(prepared / "Iris1.manifest.json"), "--out-dir", str(prepared), *FAST])
        code = main(["eval", "--model", str(prepared / "Iris1.model.json"),
                     "--task", str(prepared / "Iris2.manifest.json"), "--out-dir", str(prepared)])
        assert code == 1

    def test_missing_task_flag(self, tmp_path):
        assert main(["train", "--out-dir", str(tmp_path)]) == 1


class TestXcheck:
    def test_five_wires(self):
        result = xcheck(5, 200, seed=0)
        assert result["passed"] and result["max_abs_diff"] < 1e-8

    def test_seven_wires_bond_bound(self):
        result = xcheck(7, 50, seed=1)
        assert result["passed"]
        assert all(p <= b for p, b in zip(result["bond_profile"], (2, 4, 8, 8, 4, 2)))

    def test_zero_trials(self, tmp_path):
        with pytest.raises(DomainError):
            xcheck(5, 0, seed=0)
        assert main(["xcheck", "--trials", "0", "--out-dir", str(tmp_path)]) == 1

    def test_command_writes_summary(self, tmp_path):
        assert main(["xcheck", "--n-wires", "4", "--trials", "10", "--out-dir", str(tmp_path)]) == 0
        assert read_json(tmp_path / "xcheck_4w.json")["passed"] is True


def test_console_entry_point():
    out = subprocess.run([sys.executable, "-m", "mpsqc.cli", "--version"], capture_output=True, text=True)
    assert out.returncode == 0 and out.stdout.startswith("mpsqc ")
