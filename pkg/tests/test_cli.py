"""The command-line interface: exit codes, reports, determinism."""

import json
import subprocess
import sys

from ncpoly.cli import main, parse_config


def run_cli(args):
    return main(list(args))


def test_empty_args_prints_help_exit_2(capsys):
    assert main([]) == 2
    assert "usage" in capsys.readouterr().out.lower()


def test_unknown_command_exit_2():
    proc = subprocess.run([sys.executable, "-m", "ncpoly.cli", "frobnicate"],
                          capture_output=True, text=True)
    assert proc.returncode == 2


def test_element_dimension_mismatch_exit_2(capsys):
    assert run_cli(["solve-study", "--element", "dssy1", "--dim", "4",
                    "--n", "4,8,16"]) == 2
    assert "supports" in capsys.readouterr().err


def test_non_increasing_n_exit_2():
    assert run_cli(["interp-study", "--n", "8,4"]) == 2


def test_perturb2d_dim_mismatch_exit_2():
    assert run_cli(["solve-study", "--dim", "3", "--mesh", "perturb2d",
                    "--n", "4,8,16"]) == 2


def test_mesh_check_n1_warns_and_passes(tmp_path, capsys):
    code = run_cli(["mesh-check", "--dim", "2", "--n", "1",
                    "--out", str(tmp_path)])
    assert code == 0
    out = capsys.readouterr().out
    assert "warning" in out and "no interior" in out
    payload = json.loads((tmp_path / "report.json").read_text())
    assert payload["pass"] is True


def test_patch_test_sheared_3d(tmp_path):
    code = run_cli(["patch-test", "--dim", "3", "--mesh", "shear", "--n", "3",
                    "--out", str(tmp_path)])
    assert code == 0
    payload = json.loads((tmp_path / "report.json").read_text())
    assert payload["max_coefficient_deviation"] <= 1e-8


def test_solve_study_writes_reports_and_dump(tmp_path):
    code = run_cli(["solve-study", "--dim", "2", "--n", "4,8,16",
                    "--element", "p1nc", "--coeff", "laplace",
                    "--dump-system", "--out", str(tmp_path)])
    assert code == 0
    csv = (tmp_path / "report.csv").read_text().strip().split("\n")
    assert csv[0] == "h,n_dofs,err_l2,err_h1_broken,iters,seconds"
    assert len(csv) == 4
    payload = json.loads((tmp_path / "report.json").read_text())
    assert 1.9 <= payload["rates"]["l2"] <= 2.1
    assert (tmp_path / "system.mtx").exists()
    assert (tmp_path / "rhs.txt").exists()
    header = (tmp_path / "system.mtx").read_text().splitlines()[0]
    assert header == "%%MatrixMarket matrix coordinate real symmetric"


def test_interp_study_3d(tmp_path):
    code = run_cli(["interp-study", "--dim", "3", "--n", "4,8,16",
                    "--out", str(tmp_path)])
    assert code == 0


def test_patch_test_rejects_rotated_element():
    assert run_cli(["patch-test", "--element", "dssy1", "--n", "3"]) == 2


def test_config_file_and_flag_precedence(tmp_path):
    cfg = tmp_path / "run.cfg"
    cfg.write_text("dim = 3\nn = 2,4\nelement = cr\nseed = 5\n")
    config = parse_config(["mesh-check", "--config", str(cfg), "--dim", "2"])
    assert config.dim == 2  # flag beats file
    assert config.ns == [2, 4]  # file beats default
    assert config.element == "cr"
    assert config.seed == 5


def test_config_file_unknown_key(tmp_path):
    cfg = tmp_path / "run.cfg"
    cfg.write_text("made_up_key = 1\n")
    assert run_cli(["mesh-check", "--config", str(cfg)]) == 2


def test_solver_failure_exit_4(tmp_path, capsys):
    code = run_cli(["solve-study", "--dim", "2", "--n", "4,8,16",
                    "--coeff", "varcoef", "--max-iters", "1", "--tol", "1e-14",
                    "--out", str(tmp_path)])
    assert code == 4
    assert "numerical failure" in capsys.readouterr().err


def test_csv_determinism(tmp_path):
    # The determinism contract covers every column except wall time.
    args = ["solve-study", "--dim", "2", "--n", "4,8,16", "--coeff", "varcoef",
            "--mesh", "perturb2d", "--seed", "11"]

    def strip_seconds(path):
        rows = path.read_text().strip().split("\n")
        return [",".join(r.split(",")[:-1]) for r in rows]

    code_a = run_cli(args + ["--out", str(tmp_path / "a")])
    code_b = run_cli(args + ["--out", str(tmp_path / "b")])
    assert code_a == code_b
    assert strip_seconds(tmp_path / "a" / "report.csv") == \
        strip_seconds(tmp_path / "b" / "report.csv")


def test_element_props_commands(tmp_path):
    assert run_cli(["element-props", "--element", "dssy2", "--dim", "3",
                    "--out", str(tmp_path / "d")]) == 0
    assert run_cli(["element-props", "--element", "p1nc", "--dim", "2",
                    "--out", str(tmp_path / "p")]) == 0
    payload = json.loads((tmp_path / "p" / "report.json").read_text())
    assert payload["unisolvency"]["rejected"] == 1000
