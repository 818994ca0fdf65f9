import csv
import subprocess
import sys

import numpy as np
import pytest

from stabcorr.cli import main
from stabcorr.harness import REFERENCE_ERRORS, TABLE_STEPS


def test_heat_table_csv(tmp_path):
    out = tmp_path / "t2.csv"
    assert main(["converge", "heat", "--table", "2", "--out", str(out)]) == 0
    rows = list(csv.DictReader(out.open()))
    assert len(rows) == 12
    for row in rows:
        ref = REFERENCE_ERRORS[2][row["scheme"]][TABLE_STEPS.index(round(1 / float(row["dt"])))]
        assert float(row["error"]) == pytest.approx(ref, rel=0.03)
        assert row["norm"] == "L2"


def test_region_csv(tmp_path):
    out = tmp_path / "region.csv"
    assert main(["stability", "region", "--condition", "rstar", "--mu", "0.5:4:8", "--nu", "0.1:5:10",
                 "--phi-samples", "128", "--out", str(out)]) == 0
    rows = list(csv.DictReader(out.open()))
    assert len(rows) == 80
    for row in rows:
        mu, nu = float(row["mu"]), float(row["nu"])
        if abs(nu - 2 / mu) > 0.6:
            assert row["stable"] == str(int(nu <= 2 / mu))


def test_unknown_subcommand(capsys):
    assert main(["frobnicate"]) != 0
    assert "usage" in capsys.readouterr().err


def test_module_entry_point():
    res = subprocess.run([sys.executable, "-m", "stabcorr", "stability", "nope"], capture_output=True, text=True)
    assert res.returncode != 0 and "usage" in res.stderr


def test_sharpness_output(capsys):
    assert main(["stability", "sharpness", "--s", "2", "--alpha", "1.6207963", "--samples", "20000",
                 "--seed", "1"]) == 0
    assert capsys.readouterr().out.strip().endswith("violation")


def test_config_overrides(tmp_path, capsys):
    cfg = tmp_path / "run.ini"
    cfg.write_text("samples = 2000\nseed = 5\nz0-mode = unit_disk_shifted\n")
    assert main(["--config", str(cfg), "stability", "sharpness", "--s", "3"]) == 0
    line = capsys.readouterr().out
    assert "z0=unit_disk_shifted" in line and line.strip().endswith("bounded")
    # the command line still wins over the file
    cfg.write_text("[run]\nsamples = 2000\nalpha = 1.7\n")
    assert main(["--config", str(cfg), "stability", "sharpness", "--alpha", "0"]) == 0
    assert "alpha=0 " in capsys.readouterr().out


def test_wave_and_schnak_commands(tmp_path):
    out = tmp_path / "w.csv"
    assert main(["converge", "wave", "--epsilon", "1", "--h-list", "0.1", "0.05", "--schemes", "SC1A", "HV",
                 "--t", "0.2", "--out", str(out)]) == 0
    rows = list(csv.DictReader(out.open()))
    assert [r["scheme"] for r in rows] == ["SC1A"] * 4 + ["HV"] * 4
    out = tmp_path / "s.csv"
    assert main(["converge", "schnak", "--nsub", "4", "--t", "0.05", "--dt-list", "0.01", "0.005",
                 "--schemes", "SC1B", "--out", str(out)]) == 0
    rows = list(csv.DictReader(out.open()))
    assert len(rows) == 2 and rows[1]["order"] != ""


def test_snapshot(tmp_path):
    out, mesh = tmp_path / "snap.csv", tmp_path / "mesh.txt"
    assert main(["snapshot", "schnak", "--nsub", "4", "--t", "0.01", "--dt", "0.005", "--out", str(out),
                 "--mesh-out", str(mesh)]) == 0
    data = np.loadtxt(out, delimiter=",", skiprows=1)
    assert data.shape == (61, 4) and np.all(np.isfinite(data))
    assert sum(line.startswith("t ") for line in mesh.read_text().splitlines()) == 96
