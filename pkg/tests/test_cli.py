import subprocess
import sys

import pytest

from rectenna.cli import main

FAST = ["--set", "rectifier.stages=2"]


def run(capsys, *argv):
    code = main(list(argv))
    out = capsys.readouterr()
    return code, out.out, out.err


def test_design_combiner(capsys):
    code, out, _ = run(capsys, "design-combiner")
    assert code == 0
    assert "quarter_wave_impedance_ohm,70.7107" in out
    assert "isolation_resistor_ohm,50" in out


def test_microstrip(capsys):
    code, out, _ = run(capsys, "microstrip")
    assert code == 0 and "width_m,0.00306" in out


def test_sweep_power_nine_rows(capsys):
    code, out, _ = run(capsys, "sweep-power", "--set", "sweep.power_step_db=10", *FAST)
    assert code == 0
    lines = out.splitlines()
    assert lines[1] == "x,v_dc_V,efficiency_pct,settled"
    assert len(lines) - 2 == 9


def test_missing_antenna_csv(capsys, tmp_path):
    missing = tmp_path / "gone.csv"
    code, _, err = run(capsys, "chain", "--set", f"antenna.table={missing}")
    assert code == 2
    assert str(missing) in err and len(err.strip().splitlines()) == 1


def test_missing_config_file(capsys, tmp_path):
    code, _, err = run(capsys, "chain", "--config", str(tmp_path / "x.ini"))
    assert code == 2 and "--config" in err


def test_unknown_key(capsys):
    code, _, err = run(capsys, "chain", "--set", "rectifier.bogus=1")
    assert code == 2 and "rectifier.bogus" in err


def test_solver_failure_exit_3(capsys):
    code, _, err = run(capsys, "simulate-rectifier", "--set", "solver.max_iterations=1")
    assert code == 3 and "rectifier" in err


def test_chain_prints_ledger(capsys):
    code, out, _ = run(capsys, "chain", *FAST)
    assert code == 0
    assert "stage,input_W,delivered_W,reflected_W,dissipated_W" in out
    assert "junction," in out


def test_dump_config_round_trip(capsys, tmp_path):
    code, out, _ = run(capsys, "design-combiner", "--dump-config", "--set", "chain.elements=8")
    assert code == 0
    p = tmp_path / "c.ini"
    p.write_text(out)
    code, out2, _ = run(capsys, "design-combiner", "--dump-config", "--config", str(p))
    assert out2 == out


def test_out_and_plot(capsys, tmp_path):
    pytest.importorskip("matplotlib")
    args = ["sweep-power", "--set", "sweep.power_from_dbm=0", "--set", "sweep.power_to_dbm=10",
            "--set", "sweep.power_step_db=10", *FAST, "--plot", "--seedless"]
    assert main(args + ["--out", str(tmp_path / "a")]) == 0
    assert main(args + ["--out", str(tmp_path / "b")]) == 0
    capsys.readouterr()
    for name in ("sweep_power.csv", "sweep_power.svg"):
        assert (tmp_path / "a" / name).read_bytes() == (tmp_path / "b" / name).read_bytes()
    svg = (tmp_path / "a" / "sweep_power.svg").read_text()
    assert "<!-- data" in svg and "x,v_dc_V,efficiency_pct,settled" in svg


def test_console_entry_point():
    r = subprocess.run([sys.executable, "-m", "rectenna.cli", "design-combiner"], capture_output=True, text=True)
    assert r.returncode == 0 and "70.7107" in r.stdout
    r = subprocess.run([sys.executable, "-m", "rectenna.cli", "nope"], capture_output=True, text=True)
    assert r.returncode == 2
