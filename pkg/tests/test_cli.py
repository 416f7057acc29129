import json
import os
import shutil

import numpy as np
import pytest

from cylscat.cli import main
from cylscat.config import scenario_from_file
from cylscat.errors import ConfigError

CONFIGS = os.path.join(os.path.dirname(__file__), "..", "configs")


def cfg(name):
    return os.path.join(CONFIGS, name)


def test_config_round_trip():
    scen = scenario_from_file(cfg("mixing3.toml"))
    assert scen.n_channels == 4
    assert scen.mu == 6.0
    assert len(scen.blocks) == 2
    v = scen.v_eff(np.array([0.3]))[0]
    assert abs(v[0, 1] - (0.35 + 0.15j)) < 1e-12
    assert np.max(np.abs(v - v.conj().T)) < 1e-12


def test_config_schema_violation(tmp_path):
    bad = tmp_path / "bad.toml"
    bad.write_text("""
[cross_section]
[[cross_section.component]]
kind = "circle"
radius = 1.0
[discretization]
x_max = 10.0
n_nodes = 101
""")
    with pytest.raises(ConfigError, match="channels.n_modes"):
        scenario_from_file(bad)


def test_cli_free_run_identity_pattern(tmp_path):
    out = tmp_path / "out"
    code = main(["--config", cfg("free.toml"), "--out", str(out), "spectrum"])
    assert code == 0
    code = main(["--config", cfg("free.toml"), "--out", str(out), "smatrix"])
    assert code == 0
    path = out / "smatrix.csv"
    lines = path.read_text().splitlines()
    assert lines[0].startswith("# cylscat")
    assert "scenario=" in lines[0]
    header = lines[1].split(",")
    rows = [l.split(",") for l in lines[2:]]
    re_i = header.index("re")
    im_i = header.index("im")
    for row in rows:
        same = (row[1] == row[3]) and (row[2] == row[4])
        val = complex(float(row[re_i]), float(row[im_i]))
        assert abs(val - (1.0 if same else 0.0)) < 1e-7, row
    manifest = json.loads((out / "run_manifest.json").read_text())
    for fname in manifest["files"]:
        assert (out / fname).exists()
        with open(out / fname) as fh:
            assert manifest["scenario_hash"] in fh.readline()


def test_cli_low_mu_timedelay_refused(tmp_path, capsys):
    out = tmp_path / "out"
    code = main(["--config", cfg("lowmu.toml"), "--out", str(out), "timedelay"])
    captured = capsys.readouterr()
    assert code == 3
    assert "mu > 4" in captured.err


def test_cli_rerun_bit_identical(tmp_path):
    out1, out2 = tmp_path / "a", tmp_path / "b"
    for out in (out1, out2):
        code = main(["--config", cfg("free.toml"), "--out", str(out),
                     "spectrum"])
        assert code == 0
        code = main(["--config", cfg("free.toml"), "--out", str(out), "lap"])
        assert code == 0
    for name in ("spectrum.csv", "lap_probes.csv", "lap_limits.csv"):
        assert (out1 / name).read_bytes() == (out2 / name).read_bytes()


def test_cli_prerequisite_missing(tmp_path, capsys):
    out = tmp_path / "out"
    code = main(["--config", cfg("lowmu.toml"), "--out", str(out),
                 "--force", "timedelay"])
    # with --force the refusal is lifted but the smatrix prerequisite bites
    assert code == 4
    assert "prerequisite" in capsys.readouterr().err


def test_cli_report_from_persisted_outputs(tmp_path):
    out = tmp_path / "out"
    for stage in ("spectrum", "smatrix", "lap", "mourre"):
        assert main(["--config", cfg("free.toml"), "--out", str(out),
                     stage]) == 0
    code = main(["--out", str(out), "report"])
    assert code == 0
    summary = json.loads((out / "summary.json").read_text())
    assert "timedelay" in summary["gaps"]
    for fig in ("thresholds.png", "unitarity.png", "lap.png", "mourre.png"):
        assert (out / fig).exists()
    assert (out / "summary.txt").exists()


def test_cli_missing_config_exit_code():
    assert main(["--config", "/nonexistent/thing.toml", "--out", "/tmp/x",
                 "spectrum"]) == 2
