import csv
import json

import pytest

from embedbench.cli import main
from embedbench.config import DatasetConfig, ExperimentConfig, bench_matrix, canonical_hash, experiment_from_dict
from embedbench.embed import METHODS
from embedbench.pipeline import RESULTS_HEADER, ResultRow, append_result
from embedbench.report import render_report
from helpers import toy_dataset, write_tu


def test_canonical_hash_key_order():
    a = {"x": 1, "y": {"b": [1, 2], "a": 0.5}}
    b = {"y": {"a": 0.5, "b": [1, 2]}, "x": 1}
    assert canonical_hash(a) == canonical_hash(b)
    assert canonical_hash(a) != canonical_hash({**a, "x": 2})


def test_config_hash_changes_with_values():
    base = experiment_from_dict({"dataset": "MUTAG"})
    assert base.config_hash() == experiment_from_dict({"dataset": {"name": "MUTAG"}}).config_hash()
    assert base.config_hash() != experiment_from_dict({"dataset": "MUTAG", "qwalk": {"steps": 16}}).config_hash()
    assert base.train.seed == 7
    assert base.with_overrides(seed=9).train.seed == 9


def test_config_rejects_unknowns():
    with pytest.raises(ValueError):
        experiment_from_dict({"dataset": "X", "train": {"learning_rate": 1}})
    with pytest.raises(ValueError):
        ExperimentConfig(DatasetConfig("X"), method="transformer")


def test_bench_matrix_expansion():
    configs, methods = bench_matrix({"datasets": [{"name": "A"}, "B"], "seed": 3})
    assert [c.dataset.name for c in configs] == ["A", "B"]
    assert methods == list(METHODS)
    assert all(c.seed == 3 for c in configs)


def test_append_result_header_once(tmp_path):
    p = tmp_path / "r.csv"
    row = ResultRow("D", "mlp", True, 0.5, 0.4, 0.3, 0.2, 5, 7, "ok", 1.0)
    append_result(p, row)
    append_result(p, row)
    lines = p.read_text().splitlines()
    assert lines[0] == ",".join(RESULTS_HEADER)
    assert len(lines) == 3


def _row(ds, method, acc, f1):
    return {"dataset": ds, "method": method, "trainable": "Y", "acc": acc, "macro_f1": f1,
            "macro_p": "0.5", "macro_r": "0.5"}


def test_report_bold_and_ties():
    text = render_report([_row("D", "qpe", "0.8", "0.7"), _row("D", "mlp", "0.8", "0.6")])
    lines = text.splitlines()
    mlp = next(l for l in lines if l.startswith("| MLP"))
    qpe = next(l for l in lines if l.startswith("| QPE"))
    assert "**0.8000**" in mlp and "**0.8000**" in qpe
    assert "**0.7000**" in qpe and "**0.6000**" not in mlp
    assert lines.index(mlp) < lines.index(qpe)


def test_report_empty(caplog):
    assert render_report([]) == ""
    assert "empty" in caplog.text


@pytest.fixture
def toy_root(tmp_path):
    write_tu(tmp_path / "data" / "TOY", "TOY", toy_dataset(per_class=10, seed=2))
    cfg = {
        "dataset": {"name": "TOY", "path": str(tmp_path / "data" / "TOY")},
        "out": str(tmp_path / "out"),
        "vqc": {"q": 3},
        "qwalk": {"steps": 8},
        "train": {"max_epochs": 2},
    }
    (tmp_path / "cfg.json").write_text(json.dumps(cfg))
    return tmp_path


def test_cli_prepare_uses_cache(toy_root, caplog):
    import logging

    caplog.set_level(logging.INFO)
    args = ["prepare", "--config", str(toy_root / "cfg.json")]
    assert main(args) == 0
    assert (toy_root / "out" / "TOY" / "split_seed7.json").is_file()
    assert len(list((toy_root / "out" / "cache").glob("*.bin"))) == 3
    caplog.clear()
    assert main(args) == 0
    assert caplog.text.count("cache hit") == 3


def test_cli_run_bench_report(toy_root):
    cfg = str(toy_root / "cfg.json")
    out = toy_root / "out"
    assert main(["run", "--config", cfg, "--method", "qwalkvec-trainable"]) == 0
    run = out / "runs" / "TOY__qwalkvec-trainable__seed7"
    assert (run / "history.csv").is_file() and (run / "checkpoint.npz").is_file()
    (out / "results.csv").unlink()
    assert main(["bench", "--config", cfg]) == 0
    with open(out / "results.csv") as fh:
        rows = list(csv.DictReader(fh))
    assert [r["method"] for r in rows] == list(METHODS)
    assert all(r["status"] == "ok" for r in rows)
    assert main(["report", "--out", str(out)]) == 0
    report = (out / "report.md").read_text()
    assert "### TOY" in report and report.count("**") >= 4


def test_bench_records_failed_dataset(tmp_path):
    cfg = {"datasets": [{"name": "NOPE", "path": str(tmp_path / "missing")}], "methods": ["mlp", "qpe"],
           "out": str(tmp_path / "out")}
    (tmp_path / "b.json").write_text(json.dumps(cfg))
    assert main(["bench", "--config", str(tmp_path / "b.json")]) == 0
    with open(tmp_path / "out" / "results.csv") as fh:
        rows = list(csv.DictReader(fh))
    assert [r["status"] for r in rows] == ["failed", "failed"]


def test_cli_missing_dataset_is_an_error(tmp_path):
    cfg = {"dataset": {"name": "NOPE", "path": str(tmp_path / "missing")}, "out": str(tmp_path / "o")}
    (tmp_path / "c.json").write_text(json.dumps(cfg))
    assert main(["prepare", "--config", str(tmp_path / "c.json")]) == 1
