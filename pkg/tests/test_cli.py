import json
import subprocess
import sys

import numpy as np
import pytest

from specwalk import cli, files
from specwalk.spectra import WeightedSpectrum


def run(*argv):
    return cli.main([str(a) for a in argv])


def test_spectrum_infinite_temperature_weights_sum_to_dimension(tmp_path):
    out = tmp_path / "s.json"
    assert run("spectrum", "--model", "xxz-nnn", "--L", 4, "--delta", 0.5, "--alpha", 0.1, "-o", out) == 0
    spec = files.read_spectrum(out)
    assert spec.weights.sum() == pytest.approx(16)
    man = json.loads((tmp_path / "s.json.manifest.json").read_text())
    assert man["command"] == "spectrum" and man["outputs"][0]["sha256"] == files.sha256_file(out)


def test_syk_is_reproducible(tmp_path):
    a, b = tmp_path / "a.json", tmp_path / "b.json"
    for p in (a, b):
        assert run("spectrum", "--model", "syk", "--n-majorana", 8, "--seed", 3, "-o", p) == 0
    assert a.read_bytes() == b.read_bytes()


def test_xy_prime_chain_level_count(tmp_path):
    out = tmp_path / "xy.json"
    assert run("spectrum", "--model", "xy", "--L", 127, "--h", 0.2, "--gamma", 0.3, "-o", out) == 0
    doc = json.loads(out.read_text())
    assert len(doc["levels"]) == 64


def test_moments_flat_weights(tmp_path):
    spec = WeightedSpectrum(np.arange(8.0), np.ones(8), model_meta={"name": "flat"})
    inp = files.write_spectrum(tmp_path / "flat.json", spec)
    out = tmp_path / "m.json"
    assert run("moments", "-i", inp, "--p-max", 5, "-o", out) == 0
    assert json.loads(out.read_text())["I_exact"] == [8, 120, 2528, 66424, 2039808]


def test_moments_overflow_falls_back_to_logs(tmp_path):
    spec = WeightedSpectrum(np.arange(3.0), [1e70, 1e70, 1e70], model_meta={"name": "huge"})
    inp = files.write_spectrum(tmp_path / "h.json", spec)
    assert run("moments", "-i", inp, "--p-max", 4, "-o", tmp_path / "m.json") == 0
    assert "ln_I_exact" in json.loads((tmp_path / "m.json").read_text())


def test_walk_sff_dist_lyapunov_chain(tmp_path):
    s = tmp_path / "s.json"
    run("spectrum", "--model", "xxz-nnn", "--L", 6, "--delta", 0.5, "--alpha", 0.4, "-o", s)
    assert run("walk", "-i", s, "--t", 1000.5, "-o", tmp_path / "w.csv") == 0
    header, rows = files.read_csv(tmp_path / "w.csv")
    assert header == ["step", "re", "im"] and len(rows) == files.read_spectrum(s).n_blocks + 1
    assert run("sff", "-i", s, "--n", 500, "-o", tmp_path / "f.csv") == 0
    assert run("dist", "-i", s, "--n", 500, "-o", tmp_path / "d.json") == 0
    assert (tmp_path / "d.hist.csv").exists()
    assert run("lyapunov", "-i", s, "-o", tmp_path / "l.json") == 0
    assert (tmp_path / "l.L.csv").exists() and (tmp_path / "l.window.csv").exists()


def test_calibrate_koch(tmp_path):
    out = tmp_path / "k.json"
    assert run("calibrate", "--kind", "koch", "--depth", 6, "--resolution", 2048, "--pgm", tmp_path / "k.pgm", "-o", out) == 0
    doc = json.loads(out.read_text())
    assert abs(doc["d_F"] - doc["exact"]) < 0.02
    assert files.read_pgm(tmp_path / "k.pgm").shape == (2048, 2048)


def test_exit_codes(tmp_path, capsys):
    assert run("walk", "-i", tmp_path / "missing.json", "-o", tmp_path / "x.csv") == 1
    bad = tmp_path / "bad.json"
    bad.write_text('{"version": 1}')
    assert run("walk", "-i", bad, "-o", tmp_path / "x.csv") == 2
    assert run("calibrate", "--kind", "line", "--resolution", 64, "-o", tmp_path / "c.json") == 2
    assert run("sff", "-i", bad, "--window", 5, 1, "-o", tmp_path / "x.csv") == 2
    assert not (tmp_path / "x.csv.manifest.json").exists()
    assert run("nosuchcommand") == 2
    capsys.readouterr()


def test_console_entry_point(tmp_path):
    r = subprocess.run([sys.executable, "-m", "specwalk.cli", "--help"], capture_output=True, text=True)
    assert r.returncode == 0 and "calibrate" in r.stdout
