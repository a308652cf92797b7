import json
import math

import numpy as np
import pytest

from multislope import load_profile, normalize, run_exact
from multislope.cli import main
from multislope.sim import default_grid

CLASSICAL_DOC = {"slopes": [{"buy": 0, "rent": 1}, {"buy": 1, "rent": 0}]}


@pytest.fixture()
def classical_file(tmp_path):
    path = tmp_path / "classical.json"
    path.write_text(json.dumps(CLASSICAL_DOC))
    return str(path)


@pytest.fixture()
def three_slope_file(tmp_path):
    doc = {"slopes": [{"buy": 0, "rent": 3}, {"buy": 1, "rent": 1}, {"buy": 3, "rent": 0}]}
    path = tmp_path / "three.json"
    path.write_text(json.dumps(doc))
    return str(path)


class TestValidate:
    def test_ok(self, classical_file, capsys):
        assert main(["validate", classical_file]) == 0
        out = capsys.readouterr().out
        assert "no dominated slopes" in out
        assert "1,1,0,1" in out

    def test_reports_dropped(self, tmp_path, capsys):
        doc = {"slopes": [{"buy": 0, "rent": 1}, {"buy": 2, "rent": 1}]}
        path = tmp_path / "dom.json"
        path.write_text(json.dumps(doc))
        assert main(["validate", str(path)]) == 0
        assert "position(s): 1" in capsys.readouterr().out

    def test_empty_slopes_is_malformed(self, tmp_path):
        path = tmp_path / "empty.json"
        path.write_text('{"slopes": []}')
        assert main(["validate", str(path)]) == 2

    def test_unparseable_file(self, tmp_path):
        path = tmp_path / "bad.json"
        path.write_text("{")
        assert main(["validate", str(path)]) == 2

    def test_missing_file(self):
        assert main(["validate", "/nonexistent/inst.json"]) == 2

    def test_negative_cost_is_domain_error(self, tmp_path):
        path = tmp_path / "neg.json"
        path.write_text('{"slopes": [{"buy": -1, "rent": 1}]}')
        assert main(["validate", str(path)]) == 1


class TestSolve:
    def test_classical_value(self, classical_file, capsys):
        assert main(["solve", classical_file, "--eps", "1e-9"]) == 0
        value = float(capsys.readouterr().out.strip())
        assert abs(value - 1.5819767068693265) <= 1e-9

    def test_profile_round_trip_preserves_ratios(self, three_slope_file, tmp_path, capsys):
        out = tmp_path / "prof.json"
        assert main(["solve", three_slope_file, "--profile-out", str(out)]) == 0
        capsys.readouterr()
        prof = load_profile(str(out))
        inst = normalize([(0, 3), (1, 1), (3, 0)])
        grid = default_grid(inst, 12, prof)
        from multislope import solve_optimal

        _, direct = solve_optimal(inst, 1e-9)
        a = run_exact(prof, grid).exact_ratio
        b = run_exact(direct, grid).exact_ratio
        assert np.max(np.abs(a - b)) <= 1e-12

    def test_bad_eps(self, classical_file):
        assert main(["solve", classical_file, "--eps", "-1"]) == 1


class TestFeasible:
    def test_infeasible_message(self, classical_file, capsys):
        assert main(["feasible", classical_file, "--c", "1.5"]) == 0
        out = capsys.readouterr().out.strip()
        assert out == "infeasible: negative-buy-rate at t=1"

    def test_feasible_message(self, classical_file, capsys):
        assert main(["feasible", classical_file, "--c", "1.7"]) == 0
        assert capsys.readouterr().out.strip() == "feasible"

    def test_precondition_exit_code(self, classical_file):
        assert main(["feasible", classical_file, "--c", "0.5"]) == 1


class TestDecompose:
    def test_bound_printed(self, three_slope_file, capsys):
        assert main(["decompose", three_slope_file]) == 0
        value = float(capsys.readouterr().out.strip())
        assert value == pytest.approx(math.e / (math.e - 1.0), abs=1e-11)

    def test_profile_out_loadable(self, three_slope_file, tmp_path, capsys):
        out = tmp_path / "hat.json"
        assert main(["decompose", three_slope_file, "--profile-out", str(out)]) == 0
        prof = load_profile(str(out))
        assert prof.inst.k == 2


class TestOpt:
    def test_csv(self, classical_file, capsys):
        assert main(["opt", classical_file, "--grid-points", "3"]) == 0
        lines = capsys.readouterr().out.strip().splitlines()
        assert lines[0] == "t,opt"
        ts = [float(line.split(",")[0]) for line in lines[1:]]
        assert 1.0 in ts and ts == sorted(ts)


class TestSimulate:
    def test_csv_shape_and_determinism(self, three_slope_file, tmp_path, capsys):
        prof_path = tmp_path / "prof.json"
        main(["solve", three_slope_file, "--profile-out", str(prof_path)])
        capsys.readouterr()
        args = [
            "simulate", three_slope_file,
            "--profile", str(prof_path),
            "--samples", "500", "--seed", "11", "--grid-points", "4",
        ]
        assert main(args) == 0
        first = capsys.readouterr().out
        assert main(args) == 0
        assert capsys.readouterr().out == first
        lines = first.strip().splitlines()
        assert lines[0] == "t,opt,exact_cost,ratio,mc_mean,mc_stderr"
        assert len(lines) > 4

    def test_mismatched_instance_rejected(self, classical_file, three_slope_file, tmp_path, capsys):
        prof_path = tmp_path / "prof.json"
        main(["solve", three_slope_file, "--profile-out", str(prof_path)])
        capsys.readouterr()
        assert main(["simulate", classical_file, "--profile", str(prof_path)]) == 1


class TestNonadditive:
    def test_output_line(self, classical_file, capsys):
        args = [
            "nonadditive", classical_file,
            "--alpha", "2.718281828", "--tau", "2.0",
            "--samples", "20000", "--seed", "3",
        ]
        assert main(args) == 0
        out = capsys.readouterr().out.strip()
        fields = dict(part.split("=") for part in out.split())
        assert float(fields["mean_ratio"]) <= math.e + 4 * float(fields["stderr"])

    def test_alpha_validation(self, classical_file):
        assert main(["nonadditive", classical_file, "--alpha", "1.0", "--tau", "1.0"]) == 1


class TestReport:
    def test_writes_csv_and_figures(self, three_slope_file, tmp_path, capsys):
        out_dir = tmp_path / "report"
        args = [
            "report", three_slope_file,
            "--out-dir", str(out_dir),
            "--samples", "400", "--grid-points", "8",
        ]
        assert main(args) == 0
        stdout = capsys.readouterr().out
        assert "c_star=" in stdout and "decompose_bound=" in stdout
        for name in ("report.csv", "profile.json", "ratio_curve.png", "profile.png", "opt_curve.png"):
            target = out_dir / name
            assert target.exists() and target.stat().st_size > 0
        header = (out_dir / "report.csv").read_text().splitlines()[0]
        assert header == "t,opt,exact_cost,ratio,mc_mean,mc_stderr"
