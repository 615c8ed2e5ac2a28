import numpy as np
import pytest

from nematic.cli import EXIT_BLOWUP, EXIT_CONFIG, EXIT_OK, EXIT_VALIDATION, main
from nematic.diagnostics import CSV_COLUMNS
from nematic.io import load_checkpoint, read_csv

pytestmark = pytest.mark.filterwarnings("ignore::RuntimeWarning")

SMALL = "grid.n = 16\ninitial.preset = director-wave+shear-wave\nrun.T = 0.01\nstepper.cadence = 2\n"
BAD = "coefficients.mu4 = -1\n"


def _cfg(tmp_path, text, name="run.cfg"):
    p = tmp_path / name
    p.write_text(text)
    return str(p)


def test_check_coefficients(tmp_path, capsys):
    assert main(["check-coefficients", "--config", _cfg(tmp_path, SMALL)]) == EXIT_OK
    out = capsys.readouterr().out.splitlines()
    keys = [ln.split("=", 1)[0] for ln in out]
    assert keys == ["lambda1", "lambda2", "parodi_residual", "parodi_ok", "dissipation_ok", "regime",
                    "violations"]
    assert "regime=CaseI" in out
    assert main(["check-coefficients", "--config", _cfg(tmp_path, BAD)]) == EXIT_VALIDATION
    assert "dissipation_ok=false" in capsys.readouterr().out


def test_run_writes_outputs(tmp_path, capsys):
    out = tmp_path / "out"
    assert main(["run", "--config", _cfg(tmp_path, SMALL), "--output", str(out), "--seed", "5"]) == EXIT_OK
    lines = (out / "diagnostics.csv").read_text().splitlines()
    assert lines[0] == "# forced=false seed=5"
    assert lines[1] == ",".join(CSV_COLUMNS)
    data = read_csv(str(out / "diagnostics.csv"))
    assert np.allclose(data["t"], [0.0, 0.002, 0.004, 0.006, 0.008, 0.01])
    assert np.all(np.diff(data["E_tot"]) < 0)
    assert "run.seed = 5" in (out / "config.used").read_text()
    s = load_checkpoint(str(out / "checkpoint.elcs"))
    assert s.t == pytest.approx(0.01)
    assert "steps=10" in capsys.readouterr().out


def test_resume_continues_in_time(tmp_path):
    out = tmp_path / "a"
    cfg = _cfg(tmp_path, SMALL)
    assert main(["run", "--config", cfg, "--output", str(out)]) == EXIT_OK
    cfg2 = _cfg(tmp_path, SMALL.replace("run.T = 0.01", "run.T = 0.02"), "long.cfg")
    out2 = tmp_path / "b"
    assert main(["run", "--config", cfg2, "--output", str(out2), "--resume", str(out / "checkpoint.elcs")]) == EXIT_OK
    t = read_csv(str(out2 / "diagnostics.csv"))["t"]
    assert t[0] == pytest.approx(0.01) and t[-1] == pytest.approx(0.02)

    # a straight run to 0.02 agrees with the resumed one to round-off
    out3 = tmp_path / "c"
    assert main(["run", "--config", cfg2, "--output", str(out3)]) == EXIT_OK
    a = load_checkpoint(str(out2 / "checkpoint.elcs"))
    b = load_checkpoint(str(out3 / "checkpoint.elcs"))
    assert np.max(np.abs(a.d.values - b.d.values)) < 1e-12


def test_inadmissible_run_and_force(tmp_path, capsys):
    cfg = _cfg(tmp_path, SMALL + BAD)
    assert main(["run", "--config", cfg, "--output", str(tmp_path / "x")]) == EXIT_VALIDATION
    assert "inadmissible" in capsys.readouterr().err
    code = main(["run", "--config", cfg, "--output", str(tmp_path / "y"), "--force"])
    assert code in (EXIT_OK, EXIT_BLOWUP)
    assert (tmp_path / "y" / "diagnostics.csv").read_text().startswith("# forced=true")


def test_blowup_exit_code(tmp_path, capsys):
    text = "grid.n = 16\ninitial.preset = shear-wave\ninitial.shear_amplitude = 100\nstepper.dt = 0.1\nrun.T = 1\n"
    assert main(["run", "--config", _cfg(tmp_path, text), "--output", str(tmp_path / "o")]) == EXIT_BLOWUP
    assert "CFL" in capsys.readouterr().err


def test_config_errors(tmp_path, capsys, monkeypatch):
    assert main(["run", "--config", _cfg(tmp_path, "grid.n = 7\nfoo = 1\n")]) == EXIT_CONFIG
    err = capsys.readouterr().err
    assert "grid.n" in err and "foo" in err
    assert main(["run", "--config", str(tmp_path / "missing.cfg")]) == EXIT_CONFIG
    assert main(["run", "--config", _cfg(tmp_path, SMALL), "--resume", str(tmp_path / "none.elcs")]) == EXIT_CONFIG
    (tmp_path / "junk.elcs").write_bytes(b"junkjunkjunkjunk")
    assert main(["run", "--config", _cfg(tmp_path, SMALL), "--resume", str(tmp_path / "junk.elcs")]) == EXIT_CONFIG
    monkeypatch.setenv("NEMATIC_THREADS", "0")
    assert main(["check-coefficients"]) == EXIT_CONFIG


def test_oracle_compare(tmp_path, capsys):
    text = "grid.n = 16\ninitial.preset = director-wave+shear-wave\noracle.m = 2\noracle.T = 0.002\n"
    assert main(["oracle-compare", "--config", _cfg(tmp_path, text)]) == EXIT_OK
    out = capsys.readouterr().out
    first = out.splitlines()[0]
    assert first.startswith("max_discrepancy=")
    assert float(first.split("=")[1]) < 1e-6


def test_verify(capsys):
    assert main(["verify", "--seed", "3"]) == EXIT_OK
    out = capsys.readouterr().out.splitlines()
    assert out[-1].endswith("checks passed")
    assert all(ln.startswith("PASS") for ln in out[:-1])


def test_version(capsys):
    with pytest.raises(SystemExit) as exc:
        main(["--version"])
    assert exc.value.code == 0
    assert "0.1.0" in capsys.readouterr().out
