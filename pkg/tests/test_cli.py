import csv
import hashlib
import json
import os

import pytest

from brepmae.cli import main
from brepmae.nn.checkpoint import payload_bytes

TINY = {
    "data": {"n_parts": 20, "max_features": 2, "seed": 3},
    "pretrain": {"batch": 4, "epochs": 1},
    "finetune": {"max_epochs": 2, "patience": 1, "batch": 8},
    "fewshot": {"way": 2, "shot": 1, "query_size": 2, "episodes": 1, "epochs": 1},
    "ablation": {
        "mask_ratios": [0.5],
        "loss_weights": [[0.1, 0.7, 0.1, 0.1]],
        "uv_resolutions": [5],
        "probing": [["linear", True]],
        "label_ratios": [1.0],
        "pretrain_epochs": 1,
        "finetune_epochs": 1,
    },
}


def dir_hash(path):
    h = hashlib.sha256()
    for root, dirs, files in os.walk(path):
        dirs.sort()
        for name in sorted(files):
            full = os.path.join(root, name)
            h.update(os.path.relpath(full, path).encode())
            with open(full, "rb") as fh:
                h.update(fh.read())
    return h.hexdigest()


def read_csv(path):
    with open(path, newline="") as fh:
        return list(csv.DictReader(fh))


@pytest.fixture(scope="module")
def workspace(tmp_path_factory):
    root = tmp_path_factory.mktemp("cli")
    config = root / "tiny.json"
    config.write_text(json.dumps(TINY))
    assert main(["gen-synth", "--config", str(config), "--out", str(root / "synth")]) == 0
    assert main(["preprocess", str(root / "synth"), "--config", str(config), "--out", str(root / "cache")]) == 0
    assert main(["pretrain", "--config", str(config), "--data", str(root / "cache"), "--out", str(root / "pre")]) == 0
    return root, str(config)


def test_gen_synth_is_reproducible(tmp_path):
    for name in ("a", "b"):
        assert main(["gen-synth", "--n", "12", "--seed", "7", "--out", str(tmp_path / name)]) == 0
    assert dir_hash(tmp_path / "a") == dir_hash(tmp_path / "b")


def test_bad_config_gives_error_json(tmp_path, capsys):
    bad = tmp_path / "bad.json"
    bad.write_text(json.dumps({"pretrain": {"learning_rate": 1.0}}))
    assert main(["gen-synth", "--config", str(bad), "--out", str(tmp_path / "x")]) == 2
    err = json.loads(capsys.readouterr().err)
    assert "learning_rate" in json.dumps(err)


def test_missing_file_gives_error_json(tmp_path, capsys):
    assert main(["inspect", str(tmp_path / "nope.json")]) == 2
    assert json.loads(capsys.readouterr().err)["error"] == "io"


def test_inspect_defective_part(tmp_path, capsys, cube_document):
    cube_document["faces"][0]["loops"][0]["polyline"] = [[0.0, 0.0], [1.0, 1.0], [1.0, 0.0], [0.0, 1.0]]
    part = tmp_path / "broken.json"
    part.write_text(json.dumps(cube_document))
    assert main(["inspect", str(part)]) == 0
    report = json.loads(capsys.readouterr().out)
    assert any("self" in d.lower() for d in report["defects"]), report["defects"]
    assert "gaag" not in report


def test_inspect_valid_part_and_graph(workspace, capsys):
    root, _ = workspace
    with open(root / "synth" / "manifest.json") as fh:
        first = json.load(fh)["parts"][0]["file"]
    assert main(["inspect", str(root / "synth" / first)]) == 0
    report = json.loads(capsys.readouterr().out)
    assert report["defects"] == []
    assert report["gaag"]["face_grid"][1:] == [7, 10, 10]
    cached = sorted(p for p in os.listdir(root / "cache") if p != "cache.json")
    assert main(["inspect", str(root / "cache" / cached[0])]) == 0
    assert json.loads(capsys.readouterr().out)["kind"] == "gaag"


def test_pretrain_outputs(workspace):
    root, _ = workspace
    with open(root / "pre" / "pretrain_run.json") as fh:
        run = json.load(fh)
    assert run["config"]["pretrain"]["batch"] == 4
    assert len(run["history"]) == 1
    assert os.path.getsize(root / "pre" / "pretrain.ckpt") > 0


def test_finetune_eval_and_params(workspace, capsys):
    root, config = workspace
    data = str(root / "cache")
    ft = root / "ft"
    argv = ["finetune", "--config", config, "--data", data, "--out", str(ft),
            "--checkpoint", str(root / "pre" / "pretrain.ckpt"), "--head", "mlp2", "--freeze"]
    assert main(argv) == 0
    rows = read_csv(ft / "results.csv")
    assert {r["split"] for r in rows} == {"val", "test"}
    with open(ft / "finetune_run.json") as fh:
        run = json.load(fh)
    assert run["config"]["finetune"]["max_epochs"] == 2
    assert run["best_epoch"] in (1, 2)  # epochs count from 1

    assert main(["eval", "--config", config, "--data", data, "--out", str(root / "ev"),
                 "--checkpoint", str(ft / "classifier.ckpt")]) == 0
    (row,) = read_csv(root / "ev" / "eval.csv")
    test_row = next(r for r in rows if r["split"] == "test")
    assert row["acc"] == test_row["acc"]

    capsys.readouterr()
    assert main(["params", str(ft / "classifier.ckpt"), "--namespace", "head."]) == 0
    # a frozen encoder leaves only the 256-256-25 head trainable
    assert json.loads(capsys.readouterr().out)["params"] == 256 * 256 + 256 + 256 * 25 + 25


def test_eval_ratio_harness(workspace):
    root, config = workspace
    out = root / "ratios"
    assert main(["eval", "--config", config, "--data", str(root / "cache"), "--out", str(out),
                 "--ratios", "0.5,1.0", "--seeds", "0,1"]) == 0
    rows = read_csv(out / "eval.csv")
    assert [(r["ratio"], r["seed"], r["split"]) for r in rows] == [
        ("0.5", "0", "test"), ("0.5", "1", "test"), ("1", "0", "test"), ("1", "1", "test")
    ]


def test_eval_without_checkpoint_or_ratios_fails(workspace, capsys):
    root, config = workspace
    assert main(["eval", "--config", config, "--data", str(root / "cache"), "--out", str(root / "e")]) == 2
    assert "checkpoint" in capsys.readouterr().err


def test_fewshot(workspace, capsys):
    root, config = workspace
    out = root / "fs"
    assert main(["fewshot", "--config", config, "--data", str(root / "cache"), "--out", str(out),
                 "--split", "train"]) == 0
    summary = json.loads(capsys.readouterr().out)
    assert 0.0 <= summary["acc_mean"] <= 1.0
    assert len(read_csv(out / "fewshot.csv")) == 1


@pytest.mark.parametrize("preset", ["mask-ratio", "loss-weights", "uv-res", "probing", "label-ratio"])
def test_sweep_presets(workspace, preset):
    root, config = workspace
    out = root / f"sweep-{preset}"
    assert main(["sweep", "--config", config, "--data", str(root / "synth"), "--out", str(out),
                 "--preset", preset]) == 0
    (row,) = read_csv(out / f"sweep_{preset}.csv")
    assert row["setting"]
    assert 0.0 <= float(row["acc"]) <= 1.0


def test_repeat_runs_are_byte_identical(workspace):
    root, config = workspace
    outs = []
    for name in ("r1", "r2"):
        out = root / name
        assert main(["pretrain", "--config", config, "--data", str(root / "cache"), "--out", str(out / "pre")]) == 0
        assert main(["finetune", "--config", config, "--data", str(root / "cache"), "--out", str(out / "ft"),
                     "--checkpoint", str(out / "pre" / "pretrain.ckpt")]) == 0
        outs.append(out)
    a, b = outs
    assert payload_bytes(a / "pre" / "pretrain.ckpt") == payload_bytes(b / "pre" / "pretrain.ckpt")
    assert payload_bytes(a / "ft" / "classifier.ckpt") == payload_bytes(b / "ft" / "classifier.ckpt")
    assert (a / "ft" / "results.csv").read_bytes() == (b / "ft" / "results.csv").read_bytes()
