import json
import math

import numpy as np
import pytest

from circadian_mfg import cli, ergodic, solution_io
from circadian_mfg.config import ConfigError, RunConfig, load_config, parse_config_text
from circadian_mfg.grid import ModelParams, make_grid
from circadian_mfg.operators import Scheme


class TestConfigParsing:
    def test_defaults_are_reference(self):
        cfg = parse_config_text("")
        assert cfg.model.omega_s == pytest.approx(2 * math.pi / 24)
        assert cfg.model.omega_0 == pytest.approx(2 * math.pi / 24.5)
        assert (cfg.model.sigma, cfg.model.K, cfg.model.F) == (0.1, 0.01, 0.01)
        assert cfg.n == 120 and cfg.p_hours == 9
        assert cfg.eps == 1e-5 and cfg.eps_w == 0.01 and cfg.eps_z == 0.2
        assert cfg.T_days == 100.0
        assert cfg.scheme is Scheme.CENTERED and cfg.method == "method1"

    def test_full_file(self, tmp_path):
        text = """
        # experiment setup
        omega_0 = 0.2
        sigma = 0.2
        K = 0.005
        F = 0.02
        p_hours = -7
        n = 48
        scheme = monotone
        method = 2
        eps = 1e-6
        eps_w = 0.02
        eps_z = 0.1
        horizon_days = 5
        T_days = 10
        max_iter = 42
        subsample_hours = 0.5
        out_dir = results
        """
        path = tmp_path / "run.cfg"
        path.write_text(text, encoding="utf-8")
        cfg = load_config(path)
        assert cfg.model.omega_0 == 0.2 and cfg.model.sigma == 0.2
        assert cfg.p_hours == -7 and cfg.n == 48
        assert cfg.scheme is Scheme.MONOTONE and cfg.method == "method2"
        assert cfg.max_iter == 42 and cfg.subsample_hours == 0.5
        assert cfg.out_dir.name == "results"
        assert cfg.p == pytest.approx(-7 * cfg.model.omega_s)

    @pytest.mark.parametrize(
        "line",
        [
            "frequency = 3",
            "sigma = fast",
            "p_hours = 1.5",
            "scheme = upwindish",
            "method = method3",
            "n = two",
            "just a line",
            "eps = -1e-5",
            "sigma = -0.1",
        ],
    )
    def test_bad_inputs_rejected(self, line):
        with pytest.raises(ConfigError):
            parse_config_text(line)

    def test_solver_iteration_defaults(self):
        cfg = parse_config_text("")
        assert cfg.solver_max_iter("method1") == 1000
        assert cfg.solver_max_iter("method2") == 10**6
        assert cfg.mfg_max_iter() == 500
        cfg2 = parse_config_text("max_iter = 7")
        assert cfg2.solver_max_iter("method1") == 7
        assert cfg2.mfg_max_iter() == 7

    def test_missing_file(self, tmp_path):
        with pytest.raises(ConfigError):
            load_config(tmp_path / "nope.cfg")


@pytest.fixture(scope="module")
def small_solution():
    grid = make_grid(48)
    sol = ergodic.solve_method1(grid, ModelParams(p=0.0), Scheme.CENTERED)
    assert sol.outcome == "converged"
    return sol


class TestSolutionRoundTrip:

    def test_bit_exact_roundtrip(self, small_solution, tmp_path):
        path = tmp_path / "sol.json"
        solution_io.save_solution(small_solution, path)
        loaded = solution_io.load_solution(path)
        np.testing.assert_array_equal(loaded.mu, small_solution.mu)
        np.testing.assert_array_equal(loaded.U, small_solution.U)
        np.testing.assert_array_equal(loaded.beta, small_solution.beta)
        assert loaded.lam == small_solution.lam
        assert loaded.outcome == small_solution.outcome
        assert loaded.scheme is small_solution.scheme
        assert loaded.grid.n == small_solution.grid.n
        for name in ("omega_s", "omega_0", "sigma", "K", "F", "p"):
            assert getattr(loaded.params, name) == getattr(small_solution.params, name)

    def test_tampered_file_rejected(self, small_solution, tmp_path):
        path = tmp_path / "sol.json"
        solution_io.save_solution(small_solution, path)
        doc = json.loads(path.read_text())
        doc["lambda"] = "0.123"
        path.write_text(json.dumps(doc))
        with pytest.raises(solution_io.SolutionFileError):
            solution_io.load_solution(path)

    def test_garbage_file_rejected(self, tmp_path):
        path = tmp_path / "sol.json"
        path.write_text("not json at all")
        with pytest.raises(solution_io.SolutionFileError):
            solution_io.load_solution(path)


# the monotone scheme keeps coarse-grid densities nonnegative, which makes the
# tiny end-to-end configs robust
BASE_CFG = """
n = 48
p_hours = 9
scheme = monotone
horizon_days = 4
T_days = 2
subsample_hours = 1
"""


def write_cfg(tmp_path, extra="", name="run.cfg"):
    path = tmp_path / name
    path.write_text(BASE_CFG + f"out_dir = {tmp_path / 'out'}\n" + extra, encoding="utf-8")
    return path


class TestCliEndToEnd:
    def test_ergodic_then_recover(self, tmp_path, capsys):
        cfg_path = write_cfg(tmp_path)
        assert cli.main(["ergodic", "--config", str(cfg_path)]) == 0
        out = capsys.readouterr().out
        assert "converged" in out
        sol_file = tmp_path / "out" / "ergodic_solution.json"
        assert sol_file.exists()

        code = cli.main(
            ["recover", "--config", str(cfg_path), "--mode", "ergodic", "--solution", str(sol_file)]
        )
        assert code == 0
        for stem in ("ergodic_p+9_path", "ergodic_p+9_z", "ergodic_p+9_costs"):
            assert (tmp_path / "out" / f"{stem}.csv").exists()
        report = json.loads((tmp_path / "out" / "ergodic_p+9_report.json").read_text())
        assert set(report) >= {
            "tau_w_hours",
            "tau_z_hours",
            "f_alpha_costhours",
            "f_osc_costhours",
            "f_sun_costhours",
            "f_total_costhours",
        }
        path_csv = (tmp_path / "out" / "ergodic_p+9_path.csv").read_text().splitlines()
        assert path_csv[0] == "t_hours," + ",".join(f"phi_{j}" for j in range(48))
        assert len(path_csv) == 1 + 4 * 24 + 1  # header + hourly slices + t=0

    def test_recover_mfg_mode(self, tmp_path):
        cfg_path = write_cfg(tmp_path)
        assert cli.main(["ergodic", "--config", str(cfg_path)]) == 0
        sol_file = tmp_path / "out" / "ergodic_solution.json"
        code = cli.main(
            ["recover", "--config", str(cfg_path), "--mode", "mfg", "--solution", str(sol_file)]
        )
        assert code == 0
        assert (tmp_path / "out" / "mfg_p+9_controls.csv").exists()

    def test_determinism_byte_identical(self, tmp_path):
        cfg_path = write_cfg(tmp_path)
        assert cli.main(["ergodic", "--config", str(cfg_path)]) == 0
        sol_file = tmp_path / "out" / "ergodic_solution.json"
        blobs = []
        for run in (1, 2):
            assert (
                cli.main(
                    [
                        "recover",
                        "--config",
                        str(cfg_path),
                        "--mode",
                        "ergodic",
                        "--solution",
                        str(sol_file),
                    ]
                )
                == 0
            )
            blobs.append((tmp_path / "out" / "ergodic_p+9_path.csv").read_bytes())
        assert blobs[0] == blobs[1]

    def test_exit_code_not_converged(self, tmp_path):
        # strong interaction defeats the centered alternating solver
        cfg_path = write_cfg(tmp_path, extra="scheme = centered\nK = 1\nF = 1\nmax_iter = 40\n")
        assert cli.main(["ergodic", "--config", str(cfg_path)]) == 2

    def test_exit_code_invalid_solution(self, tmp_path):
        # stronger interaction drives the coarse centered density negative
        # past the validity floor: converged iterates, invalid solution
        cfg_path = write_cfg(tmp_path, extra="scheme = centered\nK = 0.1\nmax_iter = 300\n")
        assert cli.main(["ergodic", "--config", str(cfg_path)]) == 3

    def test_exit_code_config_error(self, tmp_path):
        bad = tmp_path / "bad.cfg"
        bad.write_text("mystery_key = 3\n")
        assert cli.main(["ergodic", "--config", str(bad)]) == 4

    def test_exit_code_missing_config(self, tmp_path):
        assert cli.main(["ergodic", "--config", str(tmp_path / "none.cfg")]) == 4

    def test_recover_rejects_mismatched_grid(self, tmp_path):
        cfg_path = write_cfg(tmp_path)
        assert cli.main(["ergodic", "--config", str(cfg_path)]) == 0
        sol_file = tmp_path / "out" / "ergodic_solution.json"
        other_cfg = tmp_path / "other.cfg"
        other_cfg.write_text(f"n = 72\nout_dir = {tmp_path / 'out2'}\n")
        code = cli.main(
            ["recover", "--config", str(other_cfg), "--mode", "ergodic", "--solution", str(sol_file)]
        )
        assert code == 4

    def test_recover_rejects_tampered_solution(self, tmp_path):
        cfg_path = write_cfg(tmp_path)
        assert cli.main(["ergodic", "--config", str(cfg_path)]) == 0
        sol_file = tmp_path / "out" / "ergodic_solution.json"
        doc = json.loads(sol_file.read_text())
        doc["mu"][0] = "0.999"
        sol_file.write_text(json.dumps(doc))
        code = cli.main(
            ["recover", "--config", str(cfg_path), "--mode", "ergodic", "--solution", str(sol_file)]
        )
        assert code == 4

    def test_outcome_exit_mapping(self):
        assert cli._outcome_exit("converged") == 0
        assert cli._outcome_exit("not_converged") == 2
        assert cli._outcome_exit("invalid_solution") == 3


class TestSweep:
    def test_sweep_p_rows_sorted_and_complete(self, tmp_path):
        cfg_path = write_cfg(tmp_path)
        code = cli.main(
            ["sweep", "--config", str(cfg_path), "--sweep-param", "p", "--values", "3,1,2"]
        )
        assert code == 0
        lines = (tmp_path / "out" / "sweep_p.csv").read_text().splitlines()
        assert lines[0].split(",")[:5] == [
            "value",
            "tau_w_east",
            "tau_w_west",
            "tau_z_east",
            "tau_z_west",
        ]
        assert len(lines) == 4
        values = [float(line.split(",")[0]) for line in lines[1:]]
        assert values == sorted(values)

    def test_twelve_zones_east_west_identical(self, tmp_path):
        cfg_path = write_cfg(tmp_path)
        code = cli.main(
            ["sweep", "--config", str(cfg_path), "--sweep-param", "p", "--values", "12"]
        )
        assert code == 0
        lines = (tmp_path / "out" / "sweep_p.csv").read_text().splitlines()
        header = lines[0].split(",")
        row = dict(zip(header, lines[1].split(",")))
        for field in ("tau_w", "tau_z", "f_alpha", "f_osc", "f_sun", "f_total"):
            assert row[f"{field}_east"] == row[f"{field}_west"]

    def test_sweep_records_failures_and_continues(self, tmp_path):
        cfg_path = write_cfg(tmp_path, extra="max_iter = 5\n")
        # K = 1 with five iterations cannot converge; the sweep row records it
        code = cli.main(
            ["sweep", "--config", str(cfg_path), "--sweep-param", "K", "--values", "0.01,1.0"]
        )
        assert code == 0
        lines = (tmp_path / "out" / "sweep_K.csv").read_text().splitlines()
        assert len(lines) == 3
        assert "failed" in lines[2]

    def test_sweep_worker_pool(self, tmp_path):
        cfg_path = write_cfg(tmp_path)
        code = cli.main(
            [
                "sweep",
                "--config",
                str(cfg_path),
                "--sweep-param",
                "p",
                "--values",
                "1,2",
                "--jobs",
                "2",
            ]
        )
        assert code == 0
        assert len((tmp_path / "out" / "sweep_p.csv").read_text().splitlines()) == 3

    def test_sweep_rejects_unknown_parameter(self, tmp_path):
        cfg_path = write_cfg(tmp_path)
        code = cli.main(
            ["sweep", "--config", str(cfg_path), "--sweep-param", "K", "--values", "abc"]
        )
        assert code == 4


class TestOracleCheckCommand:
    def test_oracle_check_passes(self, tmp_path, capsys):
        cfg = tmp_path / "oracle.cfg"
        cfg.write_text("K = 0\nomega_0 = 0.2617993877991494\n")  # 2*pi/24
        assert cli.main(["oracle-check", "--config", str(cfg)]) == 0
        out = capsys.readouterr().out
        assert "PASS" in out
        assert "second order" in out
