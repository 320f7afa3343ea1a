"""
Tests for the command-line surface: artifacts, exit codes and error documents
"""

import json

import pytest

import cli
from cli import CommandModes, RunConfig, run
from src.errors import FitError

CAR1 = {"p": 1, "q": 0, "a": [0.8], "b": [1.0], "sigma": 1.3}


@pytest.fixture(autouse=True)
def quiet_logging(mocker):
    return mocker.patch("cli.configure_logging")


@pytest.fixture
def simulated(spec_file, tmp_path, settings):
    out = tmp_path / "sim"
    config = RunConfig(
        command=CommandModes.SIMULATE, spec_path=spec_file(CAR1), out_dir=out, terminal=200.0, n=2000, seed=5,
    )
    assert run(config, settings) == cli.EXIT_OK
    return out


def _error_document(capsys):
    return json.loads(capsys.readouterr().err.strip().splitlines()[-1])


class TestSimulate:
    def test_artifacts(self, simulated):
        assert sorted(p.name for p in simulated.iterdir()) == ["noise.csv", "path.csv", "spec.json"]
        lines = (simulated / "path.csv").read_text(encoding="utf-8").splitlines()
        assert lines[0] == "t,y,x0"
        assert len(lines) == 2002
        echo = json.loads((simulated / "spec.json").read_text(encoding="utf-8"))
        assert echo["noise"]["family"] == "Brownian"
        assert echo["h"] == pytest.approx(0.1)
        assert echo["seed"] == 5

    def test_deterministic_bytes(self, simulated, spec_file, tmp_path, settings):
        again = tmp_path / "again"
        config = RunConfig(
            command=CommandModes.SIMULATE, spec_path=spec_file(CAR1), out_dir=again, terminal=200.0, n=2000, seed=5,
        )
        assert run(config, settings) == cli.EXIT_OK
        for name in ("path.csv", "noise.csv", "spec.json"):
            assert (again / name).read_bytes() == (simulated / name).read_bytes()

    def test_missing_spec(self, tmp_path, settings, capsys):
        config = RunConfig(command=CommandModes.SIMULATE, spec_path=tmp_path / "absent.json", out_dir=tmp_path)
        assert run(config, settings) == cli.EXIT_INPUT_ERROR
        document = _error_document(capsys)
        assert document["error"] == "SpecError"
        assert document["exit_code"] == 2

    def test_spec_flag_required(self, tmp_path, settings, capsys):
        assert run(RunConfig(command=CommandModes.SIMULATE, out_dir=tmp_path), settings) == cli.EXIT_INPUT_ERROR
        assert _error_document(capsys)["details"]["flag"] == "--spec"


class TestFit:
    def test_fit_with_noise_family(self, simulated, spec_file, tmp_path, settings, capsys):
        out = tmp_path / "fit"
        config = RunConfig(
            command=CommandModes.FIT, spec_path=spec_file(CAR1), data_path=simulated / "path.csv",
            out_dir=out, family="brownian",
        )
        assert run(config, settings) == cli.EXIT_OK
        assert "Two Stage Quasi-Maximum likelihood estimation" in capsys.readouterr().out

        fit = json.loads((out / "fit.json").read_text(encoding="utf-8"))
        assert fit["stationary"] is True
        assert fit["increments"]["count"] == 2000
        assert fit["increments_path"] == "increments.csv"
        assert fit["noise_fit"]["family"] == "Brownian"
        assert isinstance(fit["-2logL"], float)
        rows = (out / "increments.csv").read_text(encoding="utf-8").splitlines()
        assert rows[0] == "t,dL"
        assert len(rows) == 2001

    def test_fit_noise_composes_with_fit(self, simulated, spec_file, tmp_path, settings):
        fit_dir, noise_dir = tmp_path / "fit", tmp_path / "noise"
        assert run(RunConfig(
            command=CommandModes.FIT, spec_path=spec_file(CAR1), data_path=simulated / "path.csv",
            out_dir=fit_dir, family="brownian", burn_in=10,
        ), settings) == cli.EXIT_OK
        assert run(RunConfig(
            command=CommandModes.FIT_NOISE, data_path=fit_dir / "increments.csv",
            out_dir=noise_dir, family="brownian", burn_in=10,
        ), settings) == cli.EXIT_OK

        embedded = json.loads((fit_dir / "fit.json").read_text(encoding="utf-8"))["noise_fit"]
        separate = json.loads((noise_dir / "noise_fit.json").read_text(encoding="utf-8"))
        for mine, theirs in zip(embedded["coefficients"], separate["coefficients"]):
            assert mine["name"] == theirs["name"]
            assert mine["estimate"] == pytest.approx(theirs["estimate"], abs=1e-10)
        assert embedded["loglik"] == pytest.approx(separate["loglik"], abs=1e-8)

    def test_nig_fit_noise_matches_embedded_fit(self, spec_file, tmp_path, settings):
        spec = spec_file({
            **CAR1,
            "noise": {"family": "NormalInverseGaussian", "params": {"alpha": 1.0, "beta": 0.0, "delta": 1.0, "mu": 0.0}},
        }, "nig.json")
        sim_dir, fit_dir, noise_dir = tmp_path / "sim", tmp_path / "fit", tmp_path / "noise"
        assert run(RunConfig(
            command=CommandModes.SIMULATE, spec_path=spec, out_dir=sim_dir, terminal=400.0, n=4000, seed=7,
        ), settings) == cli.EXIT_OK
        assert run(RunConfig(
            command=CommandModes.FIT, spec_path=spec, data_path=sim_dir / "path.csv",
            out_dir=fit_dir, family="nig", burn_in=20,
        ), settings) == cli.EXIT_OK
        assert run(RunConfig(
            command=CommandModes.FIT_NOISE, data_path=fit_dir / "increments.csv",
            out_dir=noise_dir, family="nig", burn_in=20,
        ), settings) == cli.EXIT_OK

        embedded = json.loads((fit_dir / "fit.json").read_text(encoding="utf-8"))["noise_fit"]
        separate = json.loads((noise_dir / "noise_fit.json").read_text(encoding="utf-8"))
        assert separate["family"] == "NormalInverseGaussian"
        for mine, theirs in zip(embedded["coefficients"], separate["coefficients"]):
            assert mine["name"] == theirs["name"]
            assert mine["estimate"] == pytest.approx(theirs["estimate"], abs=1e-10)
        assert embedded["loglik"] == pytest.approx(separate["loglik"], abs=1e-8)

    def test_malformed_csv(self, spec_file, tmp_path, settings, capsys):
        data = tmp_path / "data.csv"
        data.write_text("t,value\n0,1\n", encoding="utf-8")
        config = RunConfig(command=CommandModes.FIT, spec_path=spec_file(CAR1), data_path=data, out_dir=tmp_path)
        assert run(config, settings) == cli.EXIT_INPUT_ERROR
        assert _error_document(capsys)["error"] == "DataError"

    def test_fit_error_writes_no_result(self, simulated, spec_file, tmp_path, settings, mocker, capsys):
        mocker.patch("cli.qmle", side_effect=FitError("did not converge", best_params={"a1": 0.5}))
        out = tmp_path / "fit"
        config = RunConfig(
            command=CommandModes.FIT, spec_path=spec_file(CAR1), data_path=simulated / "path.csv", out_dir=out,
        )
        assert run(config, settings) == cli.EXIT_MODEL_ERROR
        document = _error_document(capsys)
        assert document["error"] == "FitError"
        assert document["details"]["best_params"] == {"a1": 0.5}
        assert not (out / "fit.json").exists()

    def test_failed_increments_write_leaves_no_fit(self, simulated, spec_file, tmp_path, settings, mocker, capsys):
        mocker.patch("cli.write_increments_csv", side_effect=PermissionError(13, "Permission denied", "increments.csv"))
        out = tmp_path / "fit"
        config = RunConfig(
            command=CommandModes.FIT, spec_path=spec_file(CAR1), data_path=simulated / "path.csv", out_dir=out,
        )
        assert run(config, settings) == cli.EXIT_INPUT_ERROR
        document = _error_document(capsys)
        assert document["error"] == "PermissionError"
        assert document["details"]["path"] == "increments.csv"
        assert list(out.iterdir()) == []


class TestRecoverNoise:
    def test_writes_increments(self, simulated, spec_file, tmp_path, settings):
        out = tmp_path / "rec"
        config = RunConfig(
            command=CommandModes.RECOVER_NOISE, spec_path=spec_file(CAR1), data_path=simulated / "path.csv",
            out_dir=out,
        )
        assert run(config, settings) == cli.EXIT_OK
        assert len((out / "increments.csv").read_text(encoding="utf-8").splitlines()) == 2001

    def test_non_stationary_spec(self, simulated, spec_file, tmp_path, settings, capsys):
        spec = spec_file({"p": 1, "q": 0, "a": [-0.3], "b": [1.0]}, "unstable.json")
        config = RunConfig(
            command=CommandModes.RECOVER_NOISE, spec_path=spec, data_path=simulated / "path.csv", out_dir=tmp_path,
        )
        assert run(config, settings) == cli.EXIT_MODEL_ERROR
        assert _error_document(capsys)["error"] == "NonStationaryError"


class TestFitNoise:
    def test_family_required(self, simulated, tmp_path, settings):
        config = RunConfig(command=CommandModes.FIT_NOISE, data_path=simulated / "noise.csv", out_dir=tmp_path)
        assert run(config, settings) == cli.EXIT_INPUT_ERROR

    def test_unknown_family(self, simulated, tmp_path, settings):
        config = RunConfig(
            command=CommandModes.FIT_NOISE, data_path=simulated / "noise.csv", out_dir=tmp_path, family="stable",
        )
        assert run(config, settings) == cli.EXIT_INPUT_ERROR


class TestMain:
    def test_main_runs_simulate(self, spec_file, tmp_path, quiet_logging):
        out = tmp_path / "main"
        argv = ["simulate", "--spec", str(spec_file(CAR1)), "--terminal", "10", "--n", "100", "--out", str(out)]
        assert cli.main(argv) == 0
        assert (out / "path.csv").is_file()
        quiet_logging.assert_called_once()

    def test_aggregate_zero_disables(self, mocker):
        run_mock = mocker.patch("cli.run", return_value=0)
        cli.main(["fit-noise", "--data", "x.csv", "--family", "vg", "--aggregate", "0"])
        assert run_mock.call_args.args[0].aggregate is None

    def test_unknown_command_exits(self):
        with pytest.raises(SystemExit):
            cli.main(["estimate"])


class TestOutputDirectory:
    def test_out_is_a_regular_file(self, spec_file, tmp_path, settings, capsys):
        blocker = tmp_path / "taken"
        blocker.write_text("not a directory", encoding="utf-8")
        config = RunConfig(command=CommandModes.SIMULATE, spec_path=spec_file(CAR1), out_dir=blocker)
        assert run(config, settings) == cli.EXIT_INPUT_ERROR
        document = _error_document(capsys)
        assert document["exit_code"] == 2
        assert document["error"] == "FileExistsError"
        assert blocker.read_text(encoding="utf-8") == "not a directory"

    def test_main_reports_unusable_out(self, spec_file, tmp_path, capsys):
        blocker = tmp_path / "taken"
        blocker.write_text("", encoding="utf-8")
        argv = ["simulate", "--spec", str(spec_file(CAR1)), "--terminal", "10", "--n", "100", "--out", str(blocker)]
        assert cli.main(argv) == 2
        assert _error_document(capsys)["exit_code"] == 2
