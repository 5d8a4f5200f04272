import json
import math
import subprocess
import sys
from pathlib import Path

import numpy as np
import pytest

from qsup import cli
from qsup.io import read_visibility
from qsup.spectra import Spectrum, read_spectrum, write_spectrum
from qsup.sweep import read_sweep_csv
from qsup.synthetic import mixture, single_band

DATA = Path(cli.__file__).parent / "data"
SMALL = {"grid": {"signal_nm": {"start": 733.0, "stop": 743.0, "count": 801},
                  "theta_deg": {"start": -1.0, "stop": 1.0, "count": 81}}}


@pytest.fixture
def cfg(tmp_path):
    p = tmp_path / "run.json"
    p.write_text(json.dumps(dict(SMALL, output_dir="out")))
    return p


def run(*argv):
    return cli.main([str(a) for a in argv])


# ----------------------------------------------------------------- errors


def test_missing_input_exit_2(tmp_path, capsys):
    missing = tmp_path / "nope.csv"
    assert run("ingest", missing, "--out-dir", tmp_path) == 2
    assert "nope.csv" in capsys.readouterr().err


def test_invalid_json_config_exit_2(tmp_path, capsys):
    bad = tmp_path / "bad.json"
    bad.write_text('{"sweep": {"parameter": "gap_L_a",}\n}')
    assert run("sweep", "--config", bad) == 2
    err = capsys.readouterr().err
    assert "bad.json:1:" in err


def test_unknown_config_key_exit_2(tmp_path, capsys):
    p = tmp_path / "c.json"
    p.write_text(json.dumps({"geometry": {"L_x_mm": 1}}))
    assert run("simulate", "--config", p) == 2
    assert "geometry.L_x_mm" in capsys.readouterr().err


def test_dispersion_env_override(tmp_path, monkeypatch, capsys):
    monkeypatch.setenv("QSUP_DISPERSION_FILE", str(tmp_path / "absent.json"))
    assert run("simulate", "--flat-tau", "0.5", "--out-dir", tmp_path) == 2
    assert "absent.json" in capsys.readouterr().err


def test_empty_band_window_exit_1(tmp_path):
    f = write_spectrum(mixture("bsa_24C"), tmp_path / "a.csv")
    assert run("fit", f, "--band-window", 1702, 1702.5, "--baseline-window", 1600, 1750, "--out-dir", tmp_path) == 1


def test_version():
    out = subprocess.run([sys.executable, "-m", "qsup", "--version"], capture_output=True, text=True)
    assert out.returncode == 0 and out.stdout.startswith("qsup ")


# ----------------------------------------------------------------- ingest


def test_ingest_zero_absorbance(tmp_path):
    ax = np.arange(1000.0, 2000.0, 2.0)
    f = write_spectrum(Spectrum(ax, np.zeros_like(ax), "cm-1", "absorbance"), tmp_path / "zero.csv")
    assert run("ingest", f, "--out-dir", tmp_path / "o") == 0
    tau = read_spectrum(tmp_path / "o" / "zero_tau.csv")
    assert tau.kind == "transmissivity_amplitude" and np.all(tau.values == 1.0)
    meta = json.loads((tmp_path / "o" / "ingest_metadata.json").read_text())
    assert meta["config"]["conversion"]["penetration_depth_nm"] == 100.0


def test_ingest_worked_example(tmp_path):
    f = write_spectrum(Spectrum([1600.0, 1700.0], [0.01, 0.01], "cm-1", "absorbance"), tmp_path / "a.csv")
    assert run("ingest", f, "--out-dir", tmp_path, "--sample-path-um", 6) == 0
    tau = read_spectrum(tmp_path / "a_tau.csv")
    assert tau.values[0] == pytest.approx(10**-0.3, rel=1e-12)


# --------------------------------------------------------------- simulate


def _visibility(out):
    return read_visibility(out / "visibility.csv")


def test_simulate_outputs_and_determinism(cfg, tmp_path):
    assert run("simulate", "--config", cfg, "--flat-tau", 0.7) == 0
    out = tmp_path / "out"
    names = {p.name for p in out.iterdir()}
    assert {"map.csv", "fringe.csv", "visibility.csv", "simulate_metadata.json"} <= names
    meta = json.loads((out / "simulate_metadata.json").read_text())
    assert meta["config"]["sample"]["flat_tau"] == 0.7
    assert "resolved_geometry" in meta["config"]
    first = (out / "visibility.csv").read_bytes()
    assert run("simulate", "--config", cfg, "--flat-tau", 0.7, "--no-map") == 0
    assert (out / "visibility.csv").read_bytes() == first


@pytest.mark.xfail(strict=True, reason="angle integration washes out fringe contrast; see ledger (flat-tau identity)")
@pytest.mark.parametrize("tau, tol", [(1.0, 1e-3), (0.5, 0.005)])
def test_simulate_flat_tau_identity(tmp_path, tau, tol):
    assert run("simulate", "--flat-tau", tau, "--no-map", "--out-dir", tmp_path) == 0
    np.testing.assert_allclose(_visibility(tmp_path).visibility, tau, atol=tol)


def test_simulate_bsa_minima(tmp_path):
    """Visibility, normalised by a lossless run, dips at Amide I and Amide II and recovers between them."""
    assert run("simulate", "--absorbance", DATA / "synthetic_bsa_24C_absorbance.csv", "--no-map", "--out-dir", tmp_path) == 0
    base = tmp_path / "base"
    assert run("simulate", "--flat-tau", 1.0, "--no-map", "--out-dir", base) == 0
    c, ref = _visibility(tmp_path), _visibility(base)
    ratio = c.visibility / ref.visibility
    cm1 = 1e7 / 660.0 - 1e7 / c.signal_nm

    def dip(lo, hi):
        m = (cm1 > lo) & (cm1 < hi)
        i = np.argmin(ratio[m])
        return cm1[m][i], ratio[m][i]

    pos_i, v_i = dip(1620, 1690)
    pos_ii, v_ii = dip(1510, 1580)
    assert 1645 < pos_i < 1665 and v_i < 0.6
    assert 1535 < pos_ii < 1555 and v_ii < 0.75
    gap = (cm1 > 1585) & (cm1 < 1600)
    assert np.all(ratio[gap] > 0.99)


# ------------------------------------------------------------------ sweep


def test_one_point_sweep_matches_simulate(cfg, tmp_path):
    assert run("simulate", "--config", cfg, "--flat-tau", 0.6, "--no-map") == 0
    beta = json.loads((tmp_path / "out" / "simulate_metadata.json").read_text())["beta"]["beta"]
    sw = tmp_path / "sw.json"
    sw.write_text(json.dumps(dict(SMALL, output_dir="sweep_out", sample={"flat_tau": 0.6},
                                  sweep={"parameter": "crystal_L", "values": [5.0]})))
    assert run("sweep", "--config", sw) == 0
    (p,) = read_sweep_csv(tmp_path / "sweep_out" / "sweep_crystal_L.csv").points
    assert p.beta == beta


def test_sweep_overrides_and_threads(cfg, tmp_path, capsys):
    rc = run("sweep", "--config", cfg, "--parameter", "gap_L_a", "--start", -9, "--stop", -5,
             "--count", 3, "--threads", 2, "--out-dir", tmp_path / "s")
    assert rc == 2  # no sample configured
    assert "sample" in capsys.readouterr().err
    c = json.loads(cfg.read_text())
    c["sample"] = {"flat_tau": 0.5}
    cfg.write_text(json.dumps(c))
    assert run("sweep", "--config", cfg, "--parameter", "gap_L_a", "--start", -9, "--stop", -5,
               "--count", 3, "--threads", 2, "--out-dir", tmp_path / "s") == 0
    r = read_sweep_csv(tmp_path / "s" / "sweep_gap_L_a.csv")
    assert [p.value for p in r.points] == [-9.0, -7.0, -5.0]
    summary = json.loads((tmp_path / "s" / "sweep_gap_L_a.json").read_text())
    assert summary["config"]["threads"] == 2


# -------------------------------------------------------------------- fit


def test_fit_bsa(tmp_path, capsys):
    assert run("fit", DATA / "synthetic_bsa_24C_absorbance.csv", "--out-dir", tmp_path) == 0
    rep = json.loads((tmp_path / "synthetic_bsa_24C_absorbance_structure.json").read_text())
    pct = {c["assignment"]: c["area_percent"] for c in rep["components"]}
    assert pct == pytest.approx({"beta_sheet": 8.6, "alpha_helix": 78.7, "beta_turn": 12.7}, abs=0.5)
    assert "alpha_helix" in capsys.readouterr().out


def test_fit_single_band(tmp_path):
    s = single_band(1655.0, 10.0, 0.02)
    f = write_spectrum(s, tmp_path / "one.csv")
    assert run("fit", f, "--out-dir", tmp_path, "--output", "one") == 0
    rep = json.loads((tmp_path / "one.json").read_text())
    assert len(rep["components"]) == 1 and rep["components"][0]["area_percent"] == 100.0


# ---------------------------------------------------------------- compare


def _tau_file(tmp_path, lo=5.5, hi=7.0, value=0.5):
    lam = np.linspace(lo, hi, 151)
    return write_spectrum(Spectrum(lam, np.full_like(lam, value), "um", "transmissivity_amplitude"), tmp_path / "tau.csv")


@pytest.mark.xfail(strict=True, reason="angle integration washes out fringe contrast; see ledger (flat-tau identity)")
def test_compare_closed_loop_flat(tmp_path):
    tau = _tau_file(tmp_path)
    assert run("simulate", "--transmissivity", tau, "--no-map", "--out-dir", tmp_path) == 0
    assert run("compare", tmp_path / "visibility.csv", tau, "--out-dir", tmp_path) == 0
    stats = json.loads((tmp_path / "compare_stats.json").read_text())
    assert stats["mean_abs_deviation"] <= 0.005


def test_compare_outputs(cfg, tmp_path):
    tau = _tau_file(tmp_path)
    assert run("simulate", "--config", cfg, "--transmissivity", tau, "--no-map") == 0
    vis = tmp_path / "out" / "visibility.csv"
    assert run("compare", vis, tau, "--out-dir", tmp_path, "--idler-window", 6.0, 6.3) == 0
    stats = json.loads((tmp_path / "compare_stats.json").read_text())
    rows = np.loadtxt(tmp_path / "compare.csv", delimiter=",", skiprows=1)
    assert stats["n_points"] == len(rows) > 0
    assert np.all((rows[:, 0] >= 6.0) & (rows[:, 0] <= 6.3))
    assert stats["mean_abs_deviation"] == pytest.approx(np.mean(np.abs(rows[:, 4])), rel=1e-12)
    assert math.isclose(rows[0, 3], 0.5)


def test_compare_disjoint(tmp_path, cfg):
    tau = _tau_file(tmp_path)
    assert run("simulate", "--config", cfg, "--transmissivity", tau, "--no-map") == 0
    far = _tau_file(tmp_path, 9.0, 10.0)
    assert run("compare", tmp_path / "out" / "visibility.csv", far, "--out-dir", tmp_path) == 1


def test_fit_diagnostics_residual_small(tmp_path):
    assert run("fit", DATA / "synthetic_bsa_24C_absorbance.csv", "--out-dir", tmp_path, "--output", "d") == 0
    rows = np.loadtxt(tmp_path / "d_diagnostics.csv", delimiter=",", skiprows=1)
    assert np.max(np.abs(rows[:, 3])) < 1e-3 * np.max(rows[:, 1])
    assert (tmp_path / "d_table.csv").read_text().startswith("position_cm1,secondary_structure,percent")
