import csv
import json
import subprocess
import sys
from pathlib import Path

import pytest
import yaml

from orbitmatch.cli import main
from orbitmatch.config import ConfigError, parse_config
from orbitmatch.report import FIELDS, ReportRow, emit_report

CONFIGS = Path(__file__).resolve().parent.parent / "configs"
HEADER = "experiment_id,system,x_id,y_id,L,m_count,sup_cost,inf_cost,tail_sup,tail_inf,solver_tag,gap_bound"


def write_cfg(tmp_path, doc, name="cfg.yaml"):
    p = tmp_path / name
    p.write_text(yaml.safe_dump(doc))
    return str(p)


GOLDEN_DOC = {"experiment_id": "t", "system": {"kind": "rotation", "alpha": "golden"},
              "points": {"a": {"circle": "0"}, "b": {"circle": "1/3"}}, "pairs": [["a", "b"]],
              "schedule": {"min_length": 8, "max_length": 64, "horizon": 256}}


def test_header_is_exact():
    assert ",".join(FIELDS) == HEADER


def test_empty_and_single_row_reports(tmp_path):
    assert emit_report([], "csv") == HEADER + "\n"
    row = ReportRow("e", "s", "x", "y", 8, 3, 0.1, 0.05, 0.1, 0.05, "circle", 0.0)
    text = emit_report([row], "csv", tmp_path / "r.csv")
    assert text.splitlines() == [HEADER, "e,s,x,y,8,3,0.1,0.05,0.1,0.05,circle,0"]
    assert (tmp_path / "r.csv").read_text() == text


def test_twelve_significant_digits():
    row = ReportRow("e", "s", "x", "y", 8, 1, 1 / 3, 0.0, 2 / 3, 0.0, "exact", 0.0)
    line = emit_report([row], "csv").splitlines()[1]
    assert "0.333333333333," in line and "0.666666666667," in line


def test_rows_sorted_stably():
    rows = [ReportRow("b", "s", "x", "y", 8, 1, 0, 0, 0, 0, "exact", 0),
            ReportRow("a", "s", "x2", "y", 16, 1, 0, 0, 0, 0, "exact", 0),
            ReportRow("a", "s", "x1", "y", 16, 1, 0, 0, 0, 0, "exact", 0),
            ReportRow("a", "s", "x", "y", 8, 1, 0, 0, 0, 0, "exact", 0)]
    out = [ln.split(",")[:3] for ln in emit_report(rows, "csv").splitlines()[1:]]
    assert out == [["a", "s", "x"], ["a", "s", "x2"], ["a", "s", "x1"], ["b", "s", "x"]]


def test_unwritable_path():
    with pytest.raises(OSError):
        emit_report([], "csv", "/nonexistent/dir/r.csv")


def test_bf_csv_and_meta(tmp_path):
    out = tmp_path / "bf.csv"
    assert main(["bf", "--config", write_cfg(tmp_path, GOLDEN_DOC), "--out", str(out)]) == 0
    rows = list(csv.DictReader(out.open()))
    assert [int(r["L"]) for r in rows] == [8, 16, 32, 64]
    meta = json.loads((tmp_path / "bf.csv.meta.json").read_text())
    assert meta["schedule"]["horizon"] == 256 and meta["solver"] == "auto"
    assert meta["thresholds"]["tau0"] == 0.02


def test_json_embeds_config(tmp_path):
    out = tmp_path / "bf.json"
    assert main(["bf", "--config", write_cfg(tmp_path, GOLDEN_DOC), "--out", str(out), "--format", "json",
                 "--solver", "exact"]) == 0
    doc = json.loads(out.read_text())
    assert list(doc["rows"][0]) == list(FIELDS)
    assert doc["config"]["solver"] == "exact" and doc["rows"][0]["solver_tag"] == "exact"


def test_overrides(tmp_path, capsys):
    assert main(["bf", "--config", write_cfg(tmp_path, GOLDEN_DOC), "--max-length", "32",
                 "--horizon", "128"]) == 0
    lines = capsys.readouterr().out.splitlines()
    assert lines[0] == HEADER and [ln.split(",")[4] for ln in lines[1:]] == ["8", "16", "32"]


def test_f_command(tmp_path, capsys):
    doc = {**GOLDEN_DOC, "system": {"kind": "fullshift"},
           "points": {"z": {"word": "0"}, "a": {"word": "01"}}, "pairs": [["z", "a"]]}
    assert main(["f", "--config", write_cfg(tmp_path, doc)]) == 0
    rows = list(csv.DictReader(capsys.readouterr().out.splitlines()))
    assert all(float(r["sup_cost"]) == 0.75 and r["m_count"] == "1" for r in rows)


def test_density_evens(tmp_path, capsys):
    doc = {"experiment_id": "d", "system": {"kind": "rotation", "alpha": "golden"},
           "density": {"kind": "evens", "horizon": 1024}}
    assert main(["density", "--config", write_cfg(tmp_path, doc)]) == 0
    row = next(csv.DictReader(capsys.readouterr().out.splitlines()))
    for k in ("upper", "lower", "upper_banach"):
        assert abs(float(row[k]) - 0.5) <= 1 / 1024


def test_avg_and_bound(tmp_path, capsys):
    doc = {**GOLDEN_DOC, "observables": ["cos1"]}
    assert main(["avg", "--config", write_cfg(tmp_path, doc)]) == 0
    assert capsys.readouterr().out.startswith("experiment_id,system,x_id,observable,L")
    doc = {**GOLDEN_DOC, "bound": {"eps": 0.1}}
    assert main(["bound", "--config", write_cfg(tmp_path, doc), "--format", "json"]) == 0
    rep = json.loads(capsys.readouterr().out)
    assert rep["config"]["certificates"][0]["certified_at_horizon"] == 256


def test_probe_exit_codes(tmp_path):
    doc = {"experiment_id": "p", "system": {"kind": "fullshift"},
           "points": {"z": {"word": "0"}, "o": {"word": "1"}},
           "probe": {"kind": "unique_ergodicity", "points": ["z", "o"]},
           "schedule": {"min_length": 8, "max_length": 64, "horizon": 256}}
    out = tmp_path / "p.json"
    assert main(["probe", "--config", write_cfg(tmp_path, doc), "--out", str(out)]) == 1
    assert json.loads(out.read_text())["verdict"]["status"] == "inconsistent"
    doc["points"]["o"] = {"word": "0"}
    assert main(["probe", "--config", write_cfg(tmp_path, doc), "--out", str(out)]) == 0


@pytest.mark.parametrize("doc,needle", [
    ({**GOLDEN_DOC, "extra": 1}, "extra"),
    ({**GOLDEN_DOC, "points": {"a": {"random": True}, "b": {"circle": 0}}}, "seed"),
    ({**GOLDEN_DOC, "pairs": [["a", "zz"]]}, "pairs"),
    ({**GOLDEN_DOC, "points": {"a": {"word": "01"}, "b": {"circle": 0}}}, "points.a"),
    ({**GOLDEN_DOC, "schedule": {"min_length": 8, "max_length": 512, "horizon": 256}}, "schedule"),
    ({**GOLDEN_DOC, "system": {"kind": "rotation"}}, "alpha"),
    ({**GOLDEN_DOC, "pairs": []}, "pairs"),
])
def test_config_errors_name_field(tmp_path, capsys, doc, needle):
    assert main(["bf", "--config", write_cfg(tmp_path, doc)]) == 2
    assert needle in capsys.readouterr().err


def test_usage_errors(tmp_path):
    assert main(["bogus"]) == 2
    assert main(["bf"]) == 2
    assert main(["bf", "--config", str(tmp_path / "missing.yaml")]) == 2
    (tmp_path / "bad.yaml").write_text("a: [")
    assert main(["bf", "--config", str(tmp_path / "bad.yaml")]) == 2


def test_seeded_random_points_are_reproducible(tmp_path, capsys):
    doc = {**GOLDEN_DOC, "points": {"a": {"random": True}, "b": {"random": True}}, "seed": 42}
    cfg = write_cfg(tmp_path, doc)
    main(["bf", "--config", cfg])
    first = capsys.readouterr().out
    main(["bf", "--config", cfg])
    assert capsys.readouterr().out == first
    main(["bf", "--config", cfg, "--seed", "43"])
    assert capsys.readouterr().out != first


def test_parse_config_rejects_non_mapping():
    with pytest.raises(ConfigError):
        parse_config([1, 2])


def test_module_entry_point(tmp_path):
    cfg = write_cfg(tmp_path, GOLDEN_DOC)
    res = subprocess.run([sys.executable, "-m", "orbitmatch", "bf", "--config", cfg],
                         capture_output=True, text=True)
    assert res.returncode == 0 and res.stdout.startswith(HEADER)


def test_shipped_configs_parse():
    names = sorted(p.name for p in CONFIGS.glob("*.yaml"))
    assert names
    for p in CONFIGS.glob("*.yaml"):
        parse_config(yaml.safe_load(p.read_text()))
