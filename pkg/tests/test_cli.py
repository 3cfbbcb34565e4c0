import io

import pytest

from framesel.cli import main
from framesel.data import SyntheticSpec, generate_synthetic, save_csv


def run(argv):
    out, err = io.StringIO(), io.StringIO()
    code = main(argv, out=out, err=err)
    return code, out.getvalue(), err.getvalue()


@pytest.fixture
def csv_path(tmp_path):
    ds = generate_synthetic(SyntheticSpec(n_samples=80, n_features=12, n_informative=3,
                                          class_sep=3.0, seed=2))
    p = tmp_path / "data.csv"
    save_csv(ds, p, target_name="y")
    return p


def test_help_exits_zero():
    for argv in (["--help"], ["bench", "--help"], ["select", "--help"]):
        assert run(argv)[0] == 0


def test_unknown_flag_exit_one():
    code, _, err = run(["select", "--bogus"])
    assert code == 1 and "usage" in err


def test_generate(tmp_path):
    out = tmp_path / "g.csv"
    code, _, _ = run(["generate", "--n-samples", "20", "--n-features", "5", "--n-informative", "2",
                      "--output", str(out), "--truth", str(tmp_path / "t.txt")])
    assert code == 0
    assert out.read_text().splitlines()[0] == "x0,x1,x2,x3,x4,target"
    assert len((tmp_path / "t.txt").read_text().split()) == 2
    code, text, _ = run(["generate", "--n-samples", "5", "--n-features", "2",
                         "--n-informative", "1"])
    assert code == 0 and len(text.splitlines()) == 6


def test_generate_invalid_spec():
    assert run(["generate", "--n-informative", "0"])[0] == 1


def test_profile(csv_path):
    code, text, _ = run(["profile", "--input", str(csv_path), "--target", "y"])
    assert code == 0 and text.splitlines()[0].startswith("Dataset Type")
    code, text, _ = run(["profile", "--input", str(csv_path), "--format", "markdown"])
    assert code == 0 and text.startswith("| Dataset Type")


def test_select_frame(csv_path, tmp_path):
    trace = tmp_path / "trace.csv"
    code, text, _ = run(["select", "--method", "frame", "--k", "3", "--input", str(csv_path),
                         "--target", "y", "--trace", str(trace)])
    assert code == 0
    lines = text.splitlines()
    assert len(lines) == 2 and lines[1].startswith("frame,")
    rows = trace.read_text().splitlines()
    assert rows[0] == "round,stage,size,score" and any(",forward," in r for r in rows)


def test_select_errors(csv_path):
    assert run(["select", "--method", "frame", "--input", str(csv_path)])[0] == 1
    assert run(["select", "--method", "frame", "--k", "3", "--input", "missing.csv"])[0] == 1
    assert run(["select", "--method", "frame", "--k", "3", "--pool", "x",
                "--input", str(csv_path)])[0] == 1
    # runtime failure: nothing survives the variance cut
    code, _, err = run(["select", "--method", "variance_threshold", "--threshold", "1e9",
                        "--input", str(csv_path)])
    assert code == 2 and "variance" in err


def test_bench_and_report(tiny_config_file, tmp_path):
    out = tmp_path / "out"
    code, text, _ = run(["bench", "--config", str(tiny_config_file), "--output-dir", str(out),
                         "--quiet"])
    assert code == 0 and "8 records (0 failed)" in text
    assert (out / "records.csv").exists() and (out / "report.md").exists()
    assert len(list(out.glob("chart_*.svg"))) == 2
    md = (out / "report.md").read_text()
    assert "frame_pool=auto" in md and "epsilon=0.0001" in md
    again = tmp_path / "again"
    code, _, _ = run(["report", "--from", str(out / "records.csv"), "--output-dir", str(again)])
    assert code == 0 and (again / "report.md").exists()


def test_bench_output_dir_from_env(tiny_config_file, tmp_path, monkeypatch):
    monkeypatch.setenv("FRAMESEL_OUTPUT_DIR", str(tmp_path / "envout"))
    assert run(["bench", "--config", str(tiny_config_file), "--quiet",
                "--formats", "csv"])[0] == 0
    assert (tmp_path / "envout" / "records.csv").exists()


def test_bench_missing_config():
    code, _, err = run(["bench", "--config", "does/not/exist.json"])
    assert code == 1 and "does/not/exist.json" in err


def test_report_missing_file(tmp_path):
    code, _, err = run(["report", "--from", str(tmp_path / "none.csv")])
    assert code == 1 and "none.csv" in err


def test_bad_formats():
    assert run(["report", "--from", "x.csv", "--formats", "pdf"])[0] == 1
