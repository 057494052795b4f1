import io
import json
import os

import pytest

from petalrisk.cli import DATA_ERROR, USAGE_ERROR, build_parser, run, write_atomic
from petalrisk.evaluation import ingest_csv
from petalrisk.surrogate import load_surrogate_models
from petalrisk.score2 import Sex


def patient_flags(**overrides):
    args = {
        "--sex": "male",
        "--age": "61",
        "--sbp": "150",
        "--total-chol": "6.0",
        "--hdl-chol": "1.5",
    }
    args.update(overrides)
    flat = []
    for key, value in args.items():
        flat.extend([key, value])
    return flat + ["--smoking"]


def test_score_text_output(capsys):
    assert run(["score", *patient_flags()]) == 0
    out = capsys.readouterr().out
    assert "SCORE2 10-year risk" in out
    assert "%" in out


def test_score_json_output(capsys):
    assert run(["score", *patient_flags(), "--json"]) == 0
    body = json.loads(capsys.readouterr().out)
    assert set(body) >= {"risk_score2", "risk_surrogate", "color_class", "display"}


def test_score_out_of_range_exits_2(capsys):
    assert run(["score", *patient_flags(**{"--sbp": "190"})]) == DATA_ERROR
    assert "sbp" in capsys.readouterr().err


def test_score_clamp_recovers(capsys):
    assert run(["score", *patient_flags(**{"--sbp": "190"}), "--clamp"]) == 0
    assert "clamped" in capsys.readouterr().out


def test_unknown_command_exits_1(capsys):
    assert run(["bogus"]) == USAGE_ERROR


def test_unknown_flag_exits_1_with_usage(capsys):
    assert run(["score", "--frobnicate"]) == USAGE_ERROR
    err = capsys.readouterr().err
    assert "usage" in err.lower()


def test_no_command_exits_1(capsys):
    assert run([]) == USAGE_ERROR


@pytest.mark.parametrize(
    "command", ["score", "fit", "validate", "render", "gsc", "cohort", "serve"]
)
def test_help_exits_zero_and_documents_flags(command, capsys):
    with pytest.raises(SystemExit) as exit_info:
        build_parser().parse_args([command, "--help"])
    assert exit_info.value.code == 0
    out = capsys.readouterr().out
    assert "--help" in out or "usage" in out.lower()


def test_validate_deterministic(tmp_path):
    a, b = tmp_path / "a.txt", tmp_path / "b.txt"
    argv = ["validate", "--cohort", "synthetic", "--seed", "7", "--size", "60"]
    assert run([*argv, "--out", str(a)]) == 0
    assert run([*argv, "--out", str(b)]) == 0
    assert a.read_bytes() == b.read_bytes()
    assert b"Sp.Corr" in a.read_bytes()


def test_validate_csv_format(tmp_path):
    out = tmp_path / "report.csv"
    assert (
        run(
            [
                "validate", "--cohort", "synthetic", "--seed", "3", "--size", "50",
                "--format", "csv", "--out", str(out),
            ]
        )
        == 0
    )
    lines = out.read_text().splitlines()
    assert lines[0] == "sex,surrogate,spearman,r2,rmse,mae"
    assert len(lines) == 9  # header + 4 kinds x 2 sexes


def test_render_writes_four_petals(tmp_path):
    out = tmp_path / "flower.svg"
    assert run(["render", *patient_flags(), "--out", str(out)]) == 0
    svg = out.read_text()
    assert svg.count('<path id="petal-') == 4
    assert not [p for p in os.listdir(tmp_path) if p.endswith(".tmp")]


def test_gsc_writes_cells(tmp_path):
    out = tmp_path / "chart.svg"
    assert run(["gsc", "--sex", "female", "--out", str(out)]) == 0
    assert out.read_text().count('id="cell-') == 160


def test_fit_writes_loadable_model_file(tmp_path):
    out = tmp_path / "models.toml"
    assert (
        run(["fit", "--cohort", "synthetic", "--seed", "5", "--size", "80", "--out", str(out)])
        == 0
    )
    models = load_surrogate_models(str(out))
    assert set(models) == {Sex.MALE, Sex.FEMALE}
    assert models[Sex.MALE].provenance == "fitted"
    assert all(a > 0 for a in models[Sex.MALE].alphas)


def test_fit_quantized_provenance(tmp_path):
    out = tmp_path / "models.toml"
    assert (
        run(
            [
                "fit", "--cohort", "synthetic", "--seed", "5", "--size", "80",
                "--quantized", "--out", str(out),
            ]
        )
        == 0
    )
    models = load_surrogate_models(str(out))
    assert models[Sex.FEMALE].provenance == "quantized"


def test_cohort_generate_then_filter_roundtrip(tmp_path, capsys):
    cohort_path = tmp_path / "cohort.csv"
    assert run(["cohort", "--generate", "--size", "30", "--seed", "11", "--out", str(cohort_path)]) == 0
    report_text = capsys.readouterr().err
    assert "included:              60" in report_text

    filtered = tmp_path / "filtered.csv"
    assert run(["cohort", "--filter", str(cohort_path), "--out", str(filtered)]) == 0
    rows, report = ingest_csv(str(filtered))
    assert report.included == 60 and len(rows) == 60


def test_cohort_filter_reports_exclusions(tmp_path, capsys):
    path = tmp_path / "raw.csv"
    path.write_text(
        "id,sex,age,smoking,sbp,total_chol,hdl_chol,prior_cvd,diabetes\n"
        "a,male,61,1,150,6.0,1.5,0,0\n"
        "b,male,61,1,150,6.0,1.5,1,0\n"
        "c,female,55,0,,5.0,1.2,0,0\n"
    )
    assert run(["cohort", "--filter", str(path)]) == 0
    captured = capsys.readouterr()
    assert "excluded (CVD/diab.):  1" in captured.err
    assert "excluded (missing):    1" in captured.err
    assert captured.out.count("male") == 1


def test_cohort_filter_missing_file_exits_2(capsys):
    assert run(["cohort", "--filter", "/nonexistent/file.csv"]) == DATA_ERROR


def test_bad_coefficient_file_exits_2(tmp_path, capsys):
    bad = tmp_path / "bad.toml"
    bad.write_text("not toml [")
    assert run(["score", *patient_flags(), "--coefficients", str(bad)]) == DATA_ERROR


def test_write_atomic_replaces_content(tmp_path):
    target = tmp_path / "out.txt"
    target.write_text("old")
    write_atomic(str(target), "new")
    assert target.read_text() == "new"
    assert not [p for p in os.listdir(tmp_path) if p.startswith(".petalrisk-")]
