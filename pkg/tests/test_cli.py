import csv
import subprocess
import sys

import pytest

from godunov_tv import cli


def read_rows(path):
    with open(path) as fh:
        first = fh.readline()
        rows = list(csv.reader(fh))
    return first, rows[0], rows[1:]


def test_resonance_rows_and_determinism(tmp_path):
    out = tmp_path / "o"
    argv = ["resonance", "--sigma", "1.1", "--y-range", "-200:0", "--out", str(out)]
    assert cli.main(argv) == 0
    path = out / "resonance_sigma1.1.csv"
    first, header, rows = read_rows(path)
    assert first.startswith("# config sha256=")
    assert header == ["y", "phi", "psi", "k"]
    assert len(rows) == 201
    blob = path.read_bytes()
    assert cli.main(argv) == 0
    assert path.read_bytes() == blob


def test_resonance_variable(tmp_path, capsys):
    assert cli.main(["resonance", "--variable", "--T", "4096", "--out", str(tmp_path)]) == 0
    _, header, rows = read_rows(tmp_path / "dyadic_T4096.csv")
    assert header == ["j", "y_lo", "y_hi", "tv"] and len(rows) == 6
    assert "N=6" in capsys.readouterr().out


@pytest.mark.parametrize("argv", [
    ["resonance"],
    ["resonance", "--sigma", "-1"],
    ["resonance", "--sigma", "x1"],
    ["resonance", "--sigma", "1.1", "--y-range", "5:1"],
    ["resonance", "--variable", "--T", "8"],
    ["simulate", "--T", "16"],
    ["simulate", "--mu", "0.4"],
    ["sweep", "--T-list", "256"],
    ["sweep", "--T-list", "64,128,256,1000"],
])
def test_config_errors_exit_2(argv, tmp_path, capsys):
    assert cli.main(argv + ["--out", str(tmp_path)]) == 2
    assert "config error" in capsys.readouterr().err


def test_mu_message(tmp_path, capsys):
    cli.main(["simulate", "--mu", "0.4", "--out", str(tmp_path)])
    assert "mu=0.4 must lie in (1/2, 1)" in capsys.readouterr().err


def test_simulate_crosscheck(tmp_path, capsys):
    assert cli.main(["simulate", "--T", "64", "--crosscheck", "--out", str(tmp_path)]) == 0
    text = capsys.readouterr().out
    assert "crosscheck max|V_direct - V_repr|" in text
    _, header, rows = read_rows(tmp_path / "V_T64.csv")
    assert header == ["j", "V"]
    _, header, rows = read_rows(tmp_path / "u_checkpoints_T64.csv")
    assert header == ["n", "j", "u"]
    assert {r[0] for r in rows} == {"-128", "-64", "-8", "0"}


def test_config_file_and_override(tmp_path):
    cfg = tmp_path / "run.cfg"
    cfg.write_text("# small run\nT = 64\nmu = 0.52\nright_margin = 32\n")
    out = tmp_path / "o"
    assert cli.main(["simulate", "--config", str(cfg), "--right-margin", "40", "--out", str(out)]) == 0
    first, _, rows = read_rows(out / "V_T64.csv")
    assert "right_margin=40" in first and "T=64" in first
    assert int(rows[-1][0]) == 39


@pytest.mark.parametrize("text", ["T 64\n", "colour = red\n", "T = sixty\n"])
def test_bad_config_file(tmp_path, text):
    cfg = tmp_path / "bad.cfg"
    cfg.write_text(text)
    assert cli.main(["simulate", "--config", str(cfg), "--out", str(tmp_path)]) == 2


def test_numeric_failure_exit_1(tmp_path, capsys):
    # one Gauss node per panel misses the failure tolerance on the initial row
    assert cli.main(["simulate", "--T", "64", "--quad-nodes", "1", "--out", str(tmp_path)]) == 1
    assert "numerical failure" in capsys.readouterr().err


def test_checks():
    assert cli.main(["kernels-check"]) == 0
    assert cli.main(["colehopf-check", "--rows", "20"]) == 0


def test_hash_tracks_config():
    a = cli.config_hash({"T": 64, "mu": 0.52})
    assert a == cli.config_hash({"mu": 0.52, "T": 64})
    assert a != cli.config_hash({"T": 65, "mu": 0.52})


def test_module_entry_point(tmp_path):
    proc = subprocess.run([sys.executable, "-m", "godunov_tv", "colehopf-check", "--rows", "5"],
                          capture_output=True, text=True, cwd=tmp_path)
    assert proc.returncode == 0 and "max residual" in proc.stdout
