"""Tests para la interfaz de línea de comandos."""

from pathlib import Path
from typing import List

import pandas as pd
import pytest

from amr_cam.harness.cli import EXIT_ERROR, EXIT_OK, build_parser, main

TINY = [
    "--set",
    "epochs=1",
    "--set",
    "batch_size=4",
    "--set",
    "dataset.n_classes=3",
    "--set",
    "dataset.image_size=32",
    "--set",
    "dataset.train_size=8",
    "--set",
    "dataset.val_size=4",
    "--set",
    "model.widths=8,8,8,8",
    "--set",
    "model.channel_kernel=3",
    "--set",
    "model.spatial_kernel=3",
]


@pytest.fixture(name="checkpoint")
def checkpoint_fixture(tmp_path: Path) -> Path:
    assert main(["train", "--seed", "1", "--out", str(tmp_path / "run"), *TINY]) == 0
    return tmp_path / "run" / "checkpoint.amr"


def _error_lines(capsys) -> List[str]:
    err = capsys.readouterr().err
    return [line for line in err.splitlines() if line.startswith("error:")]


def test_every_subcommand_accepts_seed():
    parser = build_parser()
    for argv in (
        ["train", "--seed", "3"],
        ["eval", "--checkpoint", "c", "--seed", "3"],
        ["xi-sweep", "--checkpoint", "c", "--seed", "3"],
        ["bg-sweep", "--checkpoint", "c", "--seed", "3"],
        ["ablate", "--seed", "3"],
        ["modfn-compare", "--seed", "3"],
        ["export-heatmaps", "--checkpoint", "c", "--indices", "0", "--seed", "3"],
        ["gen-data", "--seed", "3"],
    ):
        assert parser.parse_args(argv).seed == 3


def test_train_writes_checkpoint(checkpoint):
    assert checkpoint.is_file()
    assert (checkpoint.parent / "metrics.json").is_file()


def test_eval_prints_every_variant(checkpoint, tmp_path, capsys):
    report = tmp_path / "report.json"
    argv = ["eval", "--checkpoint", str(checkpoint), "--flip-eval"]
    code = main([*argv, "--out", str(report)])
    assert code == EXIT_OK
    out = capsys.readouterr().out
    for kind in ("spotlight", "compensation", "weighted"):
        assert f"{kind}: mIoU=" in out
    assert report.is_file()


def test_xi_sweep_writes_csv(checkpoint, tmp_path):
    out = tmp_path / "xi.csv"
    argv = ["xi-sweep", "--checkpoint", str(checkpoint), "--xis", "0.2,0.8"]
    assert main([*argv, "--out", str(out)]) == EXIT_OK
    assert list(pd.read_csv(out)["xi"]) == [0.2, 0.8]


def test_bg_sweep_writes_csv(checkpoint, tmp_path):
    out = tmp_path / "bg.csv"
    argv = ["bg-sweep", "--checkpoint", str(checkpoint), "--thresholds", "0.2"]
    assert main([*argv, "--out", str(out)]) == EXIT_OK
    assert len(pd.read_csv(out)) == 1


def test_export_heatmaps(checkpoint, tmp_path):
    out = tmp_path / "maps"
    argv = ["export-heatmaps", "--checkpoint", str(checkpoint), "--indices", "0,1"]
    assert main([*argv, "--out", str(out)]) == EXIT_OK
    assert (out / "val_00001_input.ppm").is_file()


def test_gen_data_writes_cache(tmp_path):
    out = tmp_path / "cache"
    assert main(["gen-data", "--seed", "5", "--out", str(out), *TINY]) == EXIT_OK
    assert (out / "dataset.json").is_file()
    assert len(list((out / "train" / "images").iterdir())) == 8


def test_missing_checkpoint_is_a_one_line_error(tmp_path, capsys):
    code = main(["eval", "--checkpoint", str(tmp_path / "missing.amr")])
    assert code == EXIT_ERROR
    lines = _error_lines(capsys)
    assert len(lines) == 1
    assert "missing.amr" in lines[0]


def test_invalid_configuration(capsys):
    assert main(["train", "--set", "xi=2"]) == EXIT_ERROR
    assert len(_error_lines(capsys)) == 1


def test_invalid_coefficient(checkpoint, capsys):
    assert main(["eval", "--checkpoint", str(checkpoint), "--xi", "1.5"]) == EXIT_ERROR
    assert "xi" in _error_lines(capsys)[-1]


def test_invalid_heatmap_index(checkpoint, tmp_path, capsys):
    argv = ["export-heatmaps", "--checkpoint", str(checkpoint), "--indices", "50"]
    assert main([*argv, "--out", str(tmp_path / "maps")]) == EXIT_ERROR


def test_gen_data_needs_a_target(capsys):
    assert main(["gen-data", *TINY]) == EXIT_ERROR
