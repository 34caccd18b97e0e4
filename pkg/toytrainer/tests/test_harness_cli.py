import json

import pytest

from toytrainer.cli import main

TINY = [
    "--image-size", "32", "--patch-size", "8", "--ms-list", "2",
    "--train-count", "16", "--val-count", "6", "--epochs", "1",
    "--batch-size", "8", "--dim", "32", "--depth", "2", "--heads", "2",
    "--data-seed", "3", "--seeds", "0",
]


def test_gen_writes_dataset(tmp_path, capsys):
    out = tmp_path / "data"
    assert main(["gen", "--out", str(out)] + TINY) == 0
    assert "16 train / 6 val" in capsys.readouterr().out
    assert len(list((out / "train").glob("*.png"))) == 16
    assert len(list((out / "train" / "labels").glob("*.png"))) == 16
    assert len(list((out / "val").glob("*.png"))) == 6
    summary = json.loads((out / "summary.json").read_text())
    assert summary["train"]["count"] == 16


def test_quiet_silences_progress(tmp_path, capsys):
    assert main(["--quiet", "gen", "--out", str(tmp_path / "d")] + TINY) == 0
    assert capsys.readouterr().out == ""


def test_invalid_geometry_exits_2(tmp_path, capsys):
    code = main(["gen", "--out", str(tmp_path / "d")] + TINY + ["--patch-size", "7"])
    assert code == 2
    assert "does not divide" in capsys.readouterr().err


def test_unparseable_int_list_is_a_usage_error(tmp_path):
    with pytest.raises(SystemExit) as exc_info:
        main(["gen", "--out", str(tmp_path / "d"), "--ms-list", "two,four"])
    assert exc_info.value.code == 2


def test_validate_checks_the_tool(capsys):
    assert main(["validate"]) == 0
    assert "reference vectors" in capsys.readouterr().out


def test_train_plain_run(tmp_path, capsys):
    data = tmp_path / "data"
    assert main(["--quiet", "gen", "--out", str(data)] + TINY) == 0
    out = tmp_path / "run"
    code = main(["train", "--data", str(data), "--out", str(out), "--variant", "plain"] + TINY)
    assert code == 0
    printed = capsys.readouterr().out
    assert "plain seed 0: aAcc" in printed
    doc = json.loads((out / "result.json").read_text())
    assert doc["variant"] == "plain" and doc["seed"] == 0
    assert len(list((out / "preds").glob("*.png"))) == 6


def test_train_pooled_eval_prints_diagnostic(tmp_path, capsys):
    data = tmp_path / "data"
    assert main(["--quiet", "gen", "--out", str(data)] + TINY) == 0
    out = tmp_path / "run"
    code = main(
        ["train", "--data", str(data), "--out", str(out), "--variant", "ms2",
         "--pooled-eval"] + TINY
    )
    assert code == 0
    assert "against pooled labels" in capsys.readouterr().out


def test_train_unknown_variant_exits_2(tmp_path, capsys):
    data = tmp_path / "data"
    assert main(["--quiet", "gen", "--out", str(data)] + TINY) == 0
    code = main(["train", "--data", str(data), "--out", str(tmp_path / "r"),
                 "--variant", "ms3x"] + TINY)
    assert code == 2
    assert "unknown variant" in capsys.readouterr().err


def test_matrix_writes_reports_and_exit_reflects_trend(tmp_path):
    out = tmp_path / "m"
    code = main(["--quiet", "matrix", "--out", str(out)] + TINY)
    # a 1-epoch toy matrix may or may not satisfy the trend; the exit code
    # must reflect the report either way
    report = (out / "report.tsv").read_text()
    assert code == (0 if "trend\tok" in report else 1)
    assert (out / "report.txt").exists()
    assert (out / "trend.png").read_bytes()[:8] == b"\x89PNG\r\n\x1a\n"
    rows = json.loads((out / "rows.json").read_text())
    assert {(r["variant"], r["seed"]) for r in rows} == {("plain", 0), ("ms2", 0)}
