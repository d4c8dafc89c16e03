"""Configuration, serialization, and CLI surface tests."""

import json

import numpy as np
import pytest

from fluxglobal.cli import main
from fluxglobal.config import ConfigError, RunConfig, parse_config
from fluxglobal.seriesio import read_series, write_manifest, write_report, write_series


# ---------------------------------------------------------------------------
# configuration
# ---------------------------------------------------------------------------

def test_minimal_config_fills_defaults(tmp_path):
    cfg_file = tmp_path / "run.cfg"
    cfg_file.write_text("[run]\nexample = 4\norder = 5\n")
    cfg = parse_config(cfg_file)
    assert cfg.example == 4
    assert cfg.order == 5
    assert cfg.cfl == 0.5
    assert cfg.theta == 1.3
    assert cfg.dx is None  # experiment default meshes apply


def test_unsupported_order_rejected():
    with pytest.raises(ConfigError, match="order"):
        RunConfig(order=3)


def test_unknown_key_rejected_by_name(tmp_path):
    cfg_file = tmp_path / "run.cfg"
    cfg_file.write_text("[run]\nexample = 4\nbogus_key = 1\n")
    with pytest.raises(ConfigError, match="bogus_key"):
        parse_config(cfg_file)
    cfg_file.write_text("[nosuchsection]\na = 1\n")
    with pytest.raises(ConfigError, match="nosuchsection"):
        parse_config(cfg_file)


def test_malformed_value_reported_with_key(tmp_path):
    cfg_file = tmp_path / "run.cfg"
    cfg_file.write_text("[time]\ncfl = fast\n")
    with pytest.raises(ConfigError, match="time.cfl"):
        parse_config(cfg_file)


def test_flag_overrides_and_system_section(tmp_path):
    cfg_file = tmp_path / "run.cfg"
    cfg_file.write_text("[run]\nexample = 6\n[system]\ng = 9.81\n")
    cfg = parse_config(cfg_file, {"order": 2, "system.r": "0.9"})
    assert cfg.order == 2
    assert cfg.overrides == {"g": 9.81, "r": 0.9}


def test_config_range_validation():
    with pytest.raises(ConfigError):
        RunConfig(theta=2.5)
    with pytest.raises(ConfigError):
        RunConfig(cfl=0.0)
    with pytest.raises(ConfigError):
        RunConfig(example=9)


# ---------------------------------------------------------------------------
# series files
# ---------------------------------------------------------------------------

def test_write_series_line_count(tmp_path):
    path = tmp_path / "s.csv"
    write_series(path, np.array([0.1, 0.2, 0.3]), {"h": np.array([1.0, 2.0, 3.0])})
    lines = path.read_text().split("\n")
    assert lines[0] == "x,h"
    assert len([ln for ln in lines if ln]) == 4


def test_write_series_round_trip_is_bitwise(tmp_path, rng):
    path = tmp_path / "s.csv"
    x = rng.normal(size=40)
    cols = {"a": rng.normal(size=40) * 1e-17, "b": rng.normal(size=40) * 1e14}
    write_series(path, x, cols)
    x2, cols2 = read_series(path)
    assert np.array_equal(x, x2)
    for k in cols:
        assert np.array_equal(cols[k], cols2[k])


def test_write_series_rejects_mismatched_columns(tmp_path):
    with pytest.raises(ValueError, match="h"):
        write_series(tmp_path / "s.csv", np.zeros(3), {"h": np.zeros(4)})


def test_write_report_empty_sweep_is_valid_json(tmp_path):
    path = write_report({"rows": [], "rates": []}, tmp_path / "r.json")
    data = json.loads(path.read_text())
    assert data == {"rows": [], "rates": []}


def test_write_report_handles_numpy_and_nonfinite(tmp_path):
    path = write_report(
        {"rate": np.float64(5.02), "n": np.int64(4), "bad": np.inf, "none": np.nan},
        tmp_path / "r.json",
    )
    data = json.loads(path.read_text())
    assert data["rate"] == 5.02
    assert data["n"] == 4
    assert data["bad"] == "inf"
    assert data["none"] == "nan"


def test_manifest_records_config_and_versions(tmp_path):
    write_manifest({"example": 4, "order": 5}, tmp_path)
    data = json.loads((tmp_path / "manifest.json").read_text())
    assert data["config"]["example"] == 4
    assert "fluxglobal" in data["versions"]
    assert "numpy" in data["versions"]


# ---------------------------------------------------------------------------
# CLI surface
# ---------------------------------------------------------------------------

def test_cli_run_writes_series_and_manifest(tmp_path):
    out = tmp_path / "out"
    rc = main(["run", "--dx", "0.1", "--t-final", "0.02", "--order", "2", "--out", str(out)])
    assert rc == 0
    assert (out / "manifest.json").exists()
    files = list(out.glob("run_order2_*.csv"))
    assert len(files) == 1
    x, cols = read_series(files[0])
    assert set(cols) == {"h1", "q1", "h2", "q2"}
    assert x.size == 20
    assert np.all(np.isfinite(cols["h1"]))


def test_cli_run_is_deterministic(tmp_path):
    outs = []
    for tag in ("a", "b"):
        out = tmp_path / tag
        main(["run", "--dx", "0.1", "--t-final", "0.02", "--order", "2", "--out", str(out)])
        outs.append((out / "run_order2_t0.02.csv").read_bytes())
    assert outs[0] == outs[1]


def test_cli_wb_check_passes_quickly(tmp_path):
    rc = main([
        "wb-check", "1", "--order", "2", "--t-final", "0.05", "--out", str(tmp_path)
    ])
    assert rc == 0
    report = json.loads((tmp_path / "wb_check_example1.json").read_text())
    assert all(entry["pass"] for entry in report.values())


def test_cli_rejects_bad_override(tmp_path):
    rc = main(["run", "--dx", "0.1", "--t-final", "0.01", "--out", str(tmp_path),
               "--override", "nonsense"])
    assert rc == 2
