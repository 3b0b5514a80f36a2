import csv
import json

import numpy as np
import pytest

from guide.cli import main
from guide.config import ConfigError, derive_seed, load_config, read_ini
from guide.graph import load_labels, save_attributes, save_edge_list

from conftest import random_graph

FAST = ["--set", "model.epochs=3", "--set", "model.attr_hidden=8,6", "--set", "model.struct_hidden=8,6",
        "--set", "model.embedding_dim=4", "--set", "inject.p=4", "--set", "inject.k=5",
        "--set", "run.ks=5,10"]


@pytest.fixture
def dataset(tmp_path):
    rng = np.random.default_rng(0)
    g = random_graph(rng, 80, 0.06, d=10)
    g = g.with_attributes((rng.random((80, 10)) < 0.2).astype(float))
    save_edge_list(g, tmp_path / "g.edges")
    save_attributes(g.attributes, tmp_path / "g.coo")
    return tmp_path


def config_args(dataset, out="run"):
    return ["--set", f"data.edges={dataset / 'g.edges'}", "--set", f"data.attributes={dataset / 'g.coo'}",
            "--output", str(dataset / out)] + FAST


def test_run_writes_artifacts_and_is_deterministic(dataset, capsys):
    assert main(["run", "--seed", "7"] + config_args(dataset, "a")) == 0
    printed = json.loads(capsys.readouterr().out)
    assert set(printed) == {"roc_auc", "pr_auc", "recall_at"}
    assert set(printed["recall_at"]) == {"5", "10"}
    out = dataset / "a"
    for name in ("config.ini", "perturbed.edges", "perturbed.coo", "labels.txt", "structure.tsv",
                 "checkpoint.bin", "loss.csv", "roc.csv", "pr.csv", "metrics.json", "scores.txt",
                 "report.json"):
        assert (out / name).is_file(), name
    report = json.loads((out / "report.json").read_text())
    assert report["schema_version"] == 1 and report["seed"] == 7
    assert report["score_sum_minus_loss"] <= 1e-9
    assert report["injection"]["structural"] == report["injection"]["attribute"] == 4
    assert main(["run", "--seed", "7"] + config_args(dataset, "b")) == 0
    for name in ("metrics.json", "checkpoint.bin", "scores.txt", "labels.txt"):
        assert (out / name).read_bytes() == (dataset / "b" / name).read_bytes(), name


def test_run_seed_changes_result(dataset):
    main(["run", "--seed", "1"] + config_args(dataset, "a"))
    main(["run", "--seed", "2"] + config_args(dataset, "b"))
    assert (dataset / "a" / "labels.txt").read_text() != (dataset / "b" / "labels.txt").read_text()


def test_missing_attribute_file_names_ingest(dataset, capsys):
    args = config_args(dataset) + ["--set", f"data.attributes={dataset / 'missing.coo'}"]
    assert main(["run"] + args) == 2
    assert "ingest" in capsys.readouterr().err


def test_unknown_override_rejected(dataset, capsys):
    assert main(["run"] + config_args(dataset) + ["--set", "model.depth=3"]) == 2
    assert "unknown config key" in capsys.readouterr().err


def test_config_file_and_overrides(tmp_path):
    ini = tmp_path / "c.ini"
    ini.write_text("[data]\nedges = e.txt\n[model]\nalpha = 0.5\n[run]\nseed = 3\n")
    cfg = load_config(ini, ["model.alpha=0.3"])
    assert cfg.model.alpha == 0.3
    assert cfg.injection.seed == derive_seed(3, "inject")
    assert cfg.model.seed == derive_seed(3, "init")
    assert cfg.injection.seed != cfg.model.seed
    assert cfg.ks == (50, 100, 150)
    with pytest.raises(ConfigError):
        read_ini(tmp_path / "nope.ini")
    ini.write_text("[data]\nedges = e.txt\n[extra]\nx = 1\n")
    with pytest.raises(ConfigError):
        read_ini(ini)
    with pytest.raises(ConfigError):
        load_config(None, [])


def test_sweep_records_failed_cells(dataset, capsys):
    args = ["sweep", "--axis", "alpha", "--values", "0.0,0.2,1.0,2.0"] + config_args(dataset, "s")
    assert main(args) == 0
    with open(dataset / "s" / "sweep_alpha.csv") as fh:
        rows = list(csv.DictReader(fh))
    assert [r["value"] for r in rows] == ["0.0", "0.2", "1.0", "2.0"]
    assert [r["status"] for r in rows] == ["ok", "ok", "ok", "failed"]
    assert "alpha" in rows[3]["error"]


def test_single_value_sweep_matches_run(dataset):
    main(["sweep", "--axis", "embedding_dim", "--values", "4", "--seed", "5"] + config_args(dataset, "s"))
    main(["run", "--seed", "5"] + config_args(dataset, "r"))
    with open(dataset / "s" / "sweep_embedding_dim.csv") as fh:
        row = next(csv.DictReader(fh))
    metrics = json.loads((dataset / "r" / "metrics.json").read_text())
    assert float(row["roc_auc"]) == metrics["roc_auc"]


def test_inject_census_train_evaluate(dataset, capsys):
    edges, attrs = str(dataset / "g.edges"), str(dataset / "g.coo")
    out = dataset / "inj"
    assert main(["inject", "--edges", edges, "--attributes", attrs, "--p", "4", "--q", "2",
                 "--k", "5", "--seed", "1", "--out-dir", str(out)]) == 0
    assert capsys.readouterr().out.startswith("structural=8 attribute=8 total=16")
    labels = load_labels(out / "labels.txt", 80)
    assert labels.sum() == 16

    assert main(["census", "--edges", str(out / "perturbed.edges"), "--out", str(dataset / "s.tsv")]) == 0
    totals = json.loads(capsys.readouterr().out)
    assert totals["M41"] >= 2 and set(totals) == {"edges", "M31", "M32", "M41", "M42", "M43"}
    assert (dataset / "s.tsv").read_text().startswith("node\tdegree\tM31")

    assert main(["train", "--edges", str(out / "perturbed.edges"), "--attributes", str(out / "perturbed.coo"),
                 "--epochs", "3", "--variant", "GUIDE_GCN", "--out-dir", str(dataset / "t")]) == 0
    capsys.readouterr()
    assert main(["evaluate", "--scores", str(dataset / "t" / "scores.txt"), "--labels",
                 str(out / "labels.txt"), "--ks", "5,16", "--out-dir", str(dataset / "ev")]) == 0
    summary = json.loads(capsys.readouterr().out)
    assert set(summary["recall_at"]) == {"5", "16"}
    roc = (dataset / "ev" / "roc.csv").read_text().splitlines()
    assert roc[0] == "fpr,tpr" and roc[1] == "0.0,0.0"


def test_inject_rejects_bad_spec(dataset, capsys):
    code = main(["inject", "--edges", str(dataset / "g.edges"), "--attributes", str(dataset / "g.coo"),
                 "--p", "30", "--q", "2", "--out-dir", str(dataset / "x")])
    assert code == 2
    assert "inject" in capsys.readouterr().err


def test_ingest_linqs(tmp_path, capsys):
    (tmp_path / "t.content").write_text("a\t1\t0\tX\nb\t0\t1\tY\nc\t1\t1\tX\n")
    (tmp_path / "t.cites").write_text("a b\nb c\n")
    assert main(["ingest", "--content", str(tmp_path / "t.content"), "--cites", str(tmp_path / "t.cites"),
                 "--name", "toy", "--out-dir", str(tmp_path / "o")]) == 0
    assert capsys.readouterr().out.strip() == "toy: nodes=3 edges=2 attributes=2"
    assert (tmp_path / "o" / "toy.ids").read_text() == "0\ta\n1\tb\n2\tc\n"
    assert main(["ingest", "--edges", str(tmp_path / "o" / "toy.edges"),
                 "--attributes", str(tmp_path / "o" / "toy.coo")]) == 0
    assert "nodes=3 edges=2 attributes=2" in capsys.readouterr().out


def test_module_entry_point():
    import subprocess
    import sys
    res = subprocess.run([sys.executable, "-m", "guide", "--help"], capture_output=True, text=True)
    assert res.returncode == 0 and "sweep" in res.stdout
