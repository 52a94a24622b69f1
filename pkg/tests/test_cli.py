import csv
import json

from nrsim import __version__
from nrsim.cli import EXIT_IO, EXIT_OK, EXIT_VALIDATION, OUTPUT_ENV, main, run
from nrsim.config import load_preset, parse_config, preset_text
from nrsim.report import KPI_HEADER, emit_report, fmt, kpi_table_text
from nrsim.simulation import run_scenario

def _read(path):
    with open(path, newline="") as fh:
        return list(csv.reader(fh))

def test_presets_list(capsys):
    assert main(["presets", "list"]) == EXIT_OK
    assert capsys.readouterr().out.split() == ["S1-sub6-mimo", "S2-ca-refarm", "S3-mmwave-28", "S4-nsa-sa"]

def test_presets_show(capsys):
    assert main(["presets", "show", "S3-mmwave-28"]) == EXIT_OK
    assert capsys.readouterr().out == preset_text("S3-mmwave-28")

def test_validate(capsys, tmp_path):
    assert main(["validate", "--preset", "S1-sub6-mimo"]) == EXIT_OK
    assert "digest=" in capsys.readouterr().out
    bad = tmp_path / "bad.yaml"
    bad.write_text(preset_text("S4-nsa-sa").replace("tx_power_dbm: 46", "tx_power_dbm: 60"))
    assert main(["validate", "--config", str(bad)]) == EXIT_VALIDATION
    assert "layout.tx_power_dbm" in capsys.readouterr().err

def test_run_writes_bundle(tmp_path):
    out = tmp_path / "out"
    code = main(["run", "--preset", "S4-nsa-sa", "--drops", "3", "--seed", "9", "--out", str(out), "--per-ue"])
    assert code == EXIT_OK
    rows = _read(out / "kpi_table.csv")
    assert tuple(rows[0]) == KPI_HEADER
    names = [r[1] for r in rows[1:]]
    assert names == ["coverage_pct", "median_throughput", "p5_throughput", "median_sinr",
                     "coverage_nsa_pct", "coverage_sa_pct", "latency_median"]
    assert rows[1][0] == "S4-nsa-sa" and rows[1][5] == "percent"
    man = json.loads((out / "manifest.json").read_text())
    assert man["seed"] == 9
    assert man["config"]["drops"] == 3
    assert man["tool_version"] == __version__
    assert man["start"] and man["end"]
    assert (out / "per_ue.csv").exists()
    assert not list(out.glob("*.tmp"))

def test_manifest_digest_recomputable(tmp_path):
    assert main(["run", "--preset", "S3-mmwave-28", "--drops", "2", "--out", str(tmp_path)]) == EXIT_OK
    man = json.loads((tmp_path / "manifest.json").read_text())
    cfg_file = tmp_path / "echo.json"
    cfg_file.write_text(json.dumps(man["config"]))
    assert main(["validate", "--config", str(cfg_file)]) == EXIT_OK

    assert parse_config(cfg_file).digest() == man["config_digest"]

def test_parallelism_identical_bytes(tmp_path):
    a, b = tmp_path / "a", tmp_path / "b"
    assert main(["run", "--preset", "S1-sub6-mimo", "--drops", "4", "--out", str(a)]) == EXIT_OK
    assert main(["run", "--preset", "S1-sub6-mimo", "--drops", "4", "--out", str(b), "--parallelism", "2"]) == EXIT_OK
    assert (a / "kpi_table.csv").read_bytes() == (b / "kpi_table.csv").read_bytes()

def test_append_mode(tmp_path):
    main(["run", "--preset", "S3-mmwave-28", "--drops", "2", "--out", str(tmp_path)])
    main(["run", "--preset", "S1-sub6-mimo", "--drops", "2", "--out", str(tmp_path), "--append"])
    rows = _read(tmp_path / "kpi_table.csv")
    assert sum(1 for r in rows if r[0] == "scenario_id") == 1
    assert {r[0] for r in rows[1:]} == {"S3-mmwave-28", "S1-sub6-mimo"}

def test_env_output_dir(tmp_path, monkeypatch):
    monkeypatch.setenv(OUTPUT_ENV, str(tmp_path / "envout"))
    assert run(None, None, preset="S3-mmwave-28", drops=2) == EXIT_OK
    assert (tmp_path / "envout" / "kpi_table.csv").exists()

def test_bad_override(tmp_path, capsys):
    assert main(["run", "--preset", "S1-sub6-mimo", "--set", "foo=1", "--out", str(tmp_path)]) == EXIT_VALIDATION
    assert "foo" in capsys.readouterr().err

def test_guard_rail_violation_exit(tmp_path):
    code = main(["run", "--preset", "S2-ca-refarm", "--out", str(tmp_path), "--drops", "2",
                 "--set", "refarm_policy.moves=[{band: 700.0e+6, fraction_to_nr: 1.0}]"])
    assert code == EXIT_VALIDATION

def test_missing_config_file(tmp_path):
    assert main(["run", "--config", str(tmp_path / "none.yaml"), "--out", str(tmp_path)]) == EXIT_IO

def test_unwritable_output(tmp_path):
    blocker = tmp_path / "file"
    blocker.write_text("x")
    assert main(["run", "--preset", "S3-mmwave-28", "--drops", "2", "--out", str(blocker / "sub")]) == EXIT_IO

def test_emit_is_byte_stable(tmp_path):
    rep = run_scenario(load_preset("S3-mmwave-28").with_overrides({"drops": 2}))
    emit_report(rep, tmp_path / "x")
    emit_report(rep, tmp_path / "y")
    assert (tmp_path / "x" / "kpi_table.csv").read_bytes() == (tmp_path / "y" / "kpi_table.csv").read_bytes()
    assert "latency" not in kpi_table_text(rep)

def test_fmt():
    assert fmt(1 / 3) == "0.333333333"
    assert fmt(float("nan")) == "nan"
    assert fmt(123456789012.0) == "1.23456789e+11"
