import csv
import io
import json
import re
import subprocess
import sys

import pytest

from gauss_entangle import FIG1_INITIAL
from gauss_entangle.cli import fmt, main
from gauss_entangle.config import ConfigError, RunConfig, parse_assignment


def run_cli(capsys, *argv):
    code = main(list(argv))
    out, err = capsys.readouterr()
    return code, out, err


def events_block(text):
    samples, _, events = text.partition("\n\n")
    return list(csv.reader(io.StringIO(samples))), list(csv.reader(io.StringIO(events)))


class TestAsymptote:
    def test_figure_environment(self, capsys):
        code, out, _ = run_cli(capsys, "asymptote", "--set", "environment.d_xpy=0.1")
        assert code == 0
        data = json.loads(out)
        assert abs(data["S_inf"] - (-0.0045730)) <= 1e-6
        assert abs(data["L_inf"] - 0.06811) <= 1e-5
        assert abs(data["S_inf"] - data["S_inf_numeric"]) <= 1e-12
        assert abs(data["window"]["d_low"] - 0.076485) <= 1e-6
        assert data["window"]["d_high"] == pytest.approx(0.115, abs=1e-15)
        assert data["window"]["nonempty"] is True
        assert set(data["sigma_inf"]) == {"xx", "xpx", "xy", "xpy", "pxpx", "ypx", "pxpy",
                                          "yy", "ypy", "pypy"}

    def test_general_environment_has_no_window(self, capsys):
        code, out, _ = run_cli(
            capsys, "asymptote", "--set", "environment.gibbs=false",
            "--set", "environment.d_pxpx=0.2",
        )
        assert code == 0
        assert json.loads(out)["window"] is None

    def test_undamped_is_an_engine_error(self, capsys):
        code, _, err = run_cli(capsys, "asymptote", "--set", "environment.gibbs=false",
                               "--set", "environment.lambda=0", "--set", "environment.d_pxpx=0.1")
        assert code == 1 and "error" in err


class TestEvolve:
    def test_zero_time_echoes_initial_state(self, capsys):
        code, out, _ = run_cli(capsys, "evolve")
        assert code == 0
        assert json.loads(out)["sigma"] == FIG1_INITIAL.entries()

    def test_explicit_entries_echo_exactly(self, capsys):
        code, out, _ = run_cli(capsys, "evolve", "--set", "initial.xx=1.2345678901234567",
                               "--set", "initial.xy=0.1", "--format", "csv")
        assert code == 0
        header, row = list(csv.reader(io.StringIO(out)))
        values = dict(zip(header, row))
        assert float(values["xx"]) == 1.2345678901234567
        assert float(values["xy"]) == 0.1

    def test_positive_time(self, capsys):
        code, out, _ = run_cli(capsys, "evolve", "--set", "time.t=5", "--set",
                               "environment.d_xpy=0.1")
        assert code == 0
        assert json.loads(out)["sigma"]["xx"] != FIG1_INITIAL.entries()["xx"]


class TestTrajectory:
    def test_sudden_death(self, capsys):
        code, out, _ = run_cli(capsys, "trajectory", "--set", "initial.preset='fig2'",
                               "--set", "environment.d_xpy=0.02")
        assert code == 0
        samples, events = events_block(out)
        assert samples[0] == ["t", "S", "L", "f", "nu_minus", "classification"]
        assert samples[1][-1] == "Entangled"
        assert events[0] == ["event_t", "kind"]
        assert "Death" in [row[1] for row in events[1:]]

    def test_json_output(self, capsys):
        code, out, _ = run_cli(capsys, "trajectory", "--format", "json",
                               "--set", "time.t_max=10", "--set", "time.n_steps=20")
        data = json.loads(out)
        assert code == 0 and len(data["samples"]) == 21 and data["events"] == []

    def test_full_precision_fields(self, capsys):
        _, out, _ = run_cli(capsys, "trajectory", "--set", "time.t_max=3",
                            "--set", "time.n_steps=7", "--set", "environment.d_xpy=0.1")
        samples, _ = events_block(out)
        for row in samples[2:]:
            for text in row[:5]:
                assert float(text) == float(fmt(float(text)))
                assert re.fullmatch(r"-?[0-9.e+-]+|inf", text)


class TestSweep:
    def test_long_format(self, capsys):
        code, out, _ = run_cli(capsys, "sweep", "--set", "sweep.count=3",
                               "--set", "time.n_steps=4", "--set", "time.t_max=2")
        assert code == 0
        rows = list(csv.reader(io.StringIO(out)))
        assert rows[0] == ["t", "coeff_value", "S", "L"]
        assert len(rows) == 1 + 5 * 3
        assert {float(r[1]) for r in rows[1:]} == {0.0, 0.0575, 0.115}

    def test_strict_failure_exits_one(self, capsys):
        code, _, err = run_cli(capsys, "sweep", "--strict", "--set", "sweep.count=3",
                               "--set", "time.n_steps=4")
        assert code == 1 and "d_xpy=" in err


class TestValidate:
    def test_reports_minors_and_psd(self, capsys):
        code, out, _ = run_cli(capsys, "validate", "--set", "environment.d_xpy=0.1")
        assert code == 0
        data = json.loads(out)
        assert data["psd_ok"] is False
        assert all(c["satisfied"] for c in data["minor_checks"])
        assert data["min_eigenvalue"] == pytest.approx(0.115 - 0.02 ** 0.5, abs=1e-12)

    def test_strict_failure_names_violation(self, capsys):
        code, _, err = run_cli(capsys, "validate", "--strict", "--set",
                               "environment.d_xpy=0.1")
        assert code == 1 and "invalid environment" in err

    def test_minor_violation_message(self, capsys):
        code, _, err = run_cli(capsys, "validate", "--strict", "--set",
                               "environment.d_xx=0.05")
        assert code == 1
        assert "d_xx*d_pxpx - d_xpx^2 >= lambda^2/4" in err


class TestConfigErrors:
    @pytest.mark.parametrize("argv", [
        ["evolve", "--set", "environment.bogus=1"],
        ["evolve", "--set", "time.t=abc"],
        ["evolve", "--set", "sweep.count=3"],
        ["asymptote", "--format", "csv"],
        ["evolve", "--set", "environment.m=-1"],
        ["evolve", "--set", "noequals"],
        ["evolve", "--set", "environment.d_pxpx=0.3"],
    ])
    def test_exit_two(self, capsys, argv):
        code, _, err = run_cli(capsys, *argv)
        assert code == 2 and "config error" in err

    def test_unknown_key_is_named(self, capsys):
        _, _, err = run_cli(capsys, "evolve", "--set", "environment.bogus=1")
        assert "environment.bogus" in err

    def test_missing_file(self, capsys, tmp_path):
        code, _, _ = run_cli(capsys, "evolve", "--config", str(tmp_path / "none.toml"))
        assert code == 2

    def test_command_conflict(self, capsys, tmp_path):
        path = tmp_path / "c.toml"
        path.write_text('command = "sweep"\n')
        code, _, _ = run_cli(capsys, "evolve", "--config", str(path))
        assert code == 2

    def test_parse_assignment_keeps_bare_strings(self):
        assert parse_assignment("initial.preset=fig2") == ("initial.preset", "fig2")
        assert parse_assignment("time.n_steps=10") == ("time.n_steps", 10)
        with pytest.raises(ConfigError):
            parse_assignment("=3")

    def test_flags_override_file(self, tmp_path):
        path = tmp_path / "c.toml"
        path.write_text('[environment]\nd_xpy = 0.05\n')
        from gauss_entangle.config import load_file
        cfg = RunConfig.build("asymptote", [load_file(str(path)), {"environment.d_xpy": 0.1}])
        assert cfg.environment().d_xpy == 0.1


class TestRoundTrip:
    @pytest.mark.parametrize("argv", [
        ["sweep", "--set", "sweep.count=4", "--set", "time.n_steps=6",
         "--set", "environment.lambda=0.3000000000000001"],
        ["trajectory", "--set", "initial.preset=fig2", "--set", "environment.d_xpy=0.07",
         "--set", "time.n_steps=50"],
    ])
    def test_dump_config_reproduces_output(self, capsys, tmp_path, argv):
        code, first, _ = run_cli(capsys, *argv)
        assert code == 0
        code, dumped, _ = run_cli(capsys, *argv, "--dump-config")
        assert code == 0
        path = tmp_path / "run.toml"
        path.write_text(dumped)
        code, second, _ = run_cli(capsys, argv[0], "--config", str(path))
        assert code == 0
        assert second.encode() == first.encode()

    def test_out_file(self, capsys, tmp_path):
        target = tmp_path / "grid.csv"
        code, out, _ = run_cli(capsys, "sweep", "--set", "sweep.count=2",
                               "--set", "time.n_steps=2", "--out", str(target))
        assert code == 0 and out == ""
        assert target.read_bytes().startswith(b"t,coeff_value,S,L\n")


def test_module_entry_point():
    proc = subprocess.run([sys.executable, "-m", "gauss_entangle", "evolve"],
                          capture_output=True, text=True, check=False)
    assert proc.returncode == 0
    assert json.loads(proc.stdout)["t"] == 0.0
