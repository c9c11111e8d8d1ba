"""CLI tests: sweep CSV contract, subcommands, config handling."""

import json

import numpy as np
import pytest
from numpy.testing import assert_allclose

from rccap.cli import (
    EXPECTED_HEADER,
    ExperimentConfig,
    main,
    make_figure1_system,
    run_figure1,
    thread_count,
)
from rccap.lincap import controllability, memory_capacity_via_rank
from rccap.systems import system_to_json


def small_config(tmp_path, **overrides):
    base = dict(
        n=4,
        spectral_radius=0.8,
        tau_max=25,
        length=1200,
        seed=5,
        param_grid=(0.0, 0.5),
        model="all",
        output_dir=tmp_path / "out",
    )
    base.update(overrides)
    return ExperimentConfig(**base)


class TestMakeFigure1System:
    def test_full_controllability_rank(self):
        system = make_figure1_system(15, 0.9, seed=0)
        assert controllability(system).rank == 15
        assert system.contraction < 1.0

    def test_rank_route_recovers_dimension(self):
        system = make_figure1_system(8, 0.9, seed=1)
        assert memory_capacity_via_rank(system).mc == 8

    def test_scalar_case(self):
        system = make_figure1_system(1, 0.5, seed=2)
        assert_allclose(abs(system.connectivity[0, 0]), 0.5)
        assert_allclose(abs(system.input_weights[0]), 1.0)

    def test_input_validation(self):
        with pytest.raises(ValueError):
            make_figure1_system(0, 0.9)
        with pytest.raises(ValueError):
            make_figure1_system(3, 1.2)


class TestRunFigure1:
    def test_csv_schema_and_white_noise_row(self, tmp_path):
        path = run_figure1(small_config(tmp_path))
        lines = path.read_text().strip().split("\n")
        assert lines[0] == EXPECTED_HEADER
        assert len(lines) == 1 + 3 * 2  # three models, two grid points
        white_rows = [ln for ln in lines[1:] if ln.split(",")[1] == "0" and ln.split(",")[2] == "0"]
        assert len(white_rows) == 3
        for row in white_rows:
            fields = row.split(",")
            assert_allclose(float(fields[5]), 4.0, atol=1e-9)  # bounds = n at independence
            assert_allclose(float(fields[6]), 4.0, atol=1e-9)
            assert_allclose(float(fields[7]), 4.0, atol=1e-9)

    def test_byte_identical_reruns(self, tmp_path):
        a = run_figure1(small_config(tmp_path, output_dir=tmp_path / "a")).read_bytes()
        b = run_figure1(small_config(tmp_path, output_dir=tmp_path / "b")).read_bytes()
        assert a == b

    def test_plots_do_not_change_csv(self, tmp_path):
        plain = run_figure1(small_config(tmp_path, output_dir=tmp_path / "plain")).read_bytes()
        with_plots_cfg = small_config(tmp_path, output_dir=tmp_path / "plots", plot=True)
        with_plots = run_figure1(with_plots_cfg).read_bytes()
        assert plain == with_plots
        svgs = sorted(p.name for p in (tmp_path / "plots").glob("*.svg"))
        assert svgs == ["figure1_ar1.svg", "figure1_arma11.svg", "figure1_ma1.svg"]

    def test_single_model_selection(self, tmp_path):
        path = run_figure1(small_config(tmp_path, model="ma1"))
        lines = path.read_text().strip().split("\n")
        assert len(lines) == 3
        assert all(ln.startswith("ma1,") for ln in lines[1:])


class TestMainEntry:
    def test_figure1_via_flags(self, tmp_path, capsys):
        code = main(
            [
                "figure1",
                "--n", "3",
                "--rho", "0.7",
                "--tau-max", "20",
                "--length", "900",
                "--seed", "3",
                "--grid", "0,0.4",
                "--model", "ar1",
                "--out", str(tmp_path / "sweep"),
            ]
        )
        assert code == 0
        assert (tmp_path / "sweep" / "figure1.csv").exists()

    def test_config_file_with_flag_override(self, tmp_path):
        config = tmp_path / "run.toml"
        config.write_text(
            '[figure1]\nn = 3\nrho = 0.7\ntau_max = 20\nlength = 900\n'
            'seed = 9\ngrid = [0.0, 0.3]\nmodel = "ar1"\nout = "IGNORED"\n'
        )
        out = tmp_path / "from-flag"
        code = main(["figure1", "--config", str(config), "--out", str(out)])
        assert code == 0
        csv_text = (out / "figure1.csv").read_text()
        assert csv_text.startswith(EXPECTED_HEADER)
        assert ",0.3," in csv_text  # grid came from the file

    def test_unknown_config_key_is_a_usage_error(self, tmp_path):
        config = tmp_path / "bad.toml"
        config.write_text("[figure1]\nbogus = 1\n")
        with pytest.raises(SystemExit):
            main(["figure1", "--config", str(config)])

    def test_capacity_subcommand_emits_json(self, tmp_path):
        out = tmp_path / "cap.json"
        code = main(
            [
                "capacity",
                "--n", "3",
                "--rho", "0.7",
                "--seed", "4",
                "--model", "ar1",
                "--phi", "0.5",
                "--tau-max", "30",
                "--length", "2000",
                "--out", str(out),
            ]
        )
        assert code == 0
        doc = json.loads(out.read_text())
        assert set(doc) == {"system", "input", "report", "bounds", "violations"}
        assert doc["input"]["phi"] == 0.5
        assert len(doc["report"]["mc_tau"]) == 31

    def test_bounds_subcommand(self, capsys):
        code = main(["bounds", "--model", "ar1", "--phi", "0.5", "--n", "15"])
        assert code == 0
        doc = json.loads(capsys.readouterr().out)
        assert doc["bounds"]["gershgorin"] == pytest.approx(45.0, abs=1e-6)

    def test_reduce_subcommand_with_system_file(self, tmp_path, capsys):
        from rccap.systems import LinearStateSystem

        system = LinearStateSystem(np.diag([0.5, 0.5]), np.array([1.0, 1.0]))
        sys_file = tmp_path / "system.json"
        sys_file.write_text(json.dumps(system_to_json(system)))
        code = main(["reduce", "--system", str(sys_file)])
        assert code == 0
        doc = json.loads(capsys.readouterr().out)
        assert doc["rank"] == 1
        assert_allclose(doc["A_bar"], [[0.5]], atol=1e-12)
        assert_allclose(doc["C_bar"], [np.sqrt(2.0)], atol=1e-12)

    def test_rank_subcommand(self, tmp_path, capsys):
        code = main(["rank", "--n", "4", "--rho", "0.8", "--seed", "6"])
        assert code == 0
        doc = json.loads(capsys.readouterr().out)
        assert doc["rank"] == 4
        assert doc["mc"] == 4
        assert doc["kalman_full"] in (True, False)

    def test_usage_error_exit_code(self):
        with pytest.raises(SystemExit) as err:
            main(["figure1", "--model", "arma99"])
        assert err.value.code == 2

    def test_thread_count_env(self, monkeypatch):
        monkeypatch.setenv("RCCAP_THREADS", "3")
        assert thread_count() == 3
        monkeypatch.setenv("RCCAP_THREADS", "zero")
        with pytest.raises(SystemExit):
            thread_count()
