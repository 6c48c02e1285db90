"""CLI behaviour: file formats, exit codes, command semantics."""

import json
import subprocess
import sys

import numpy as np
import pytest

from l0spike import io
from l0spike.cli import main


def run_cli(*argv):
    return main([str(a) for a in argv])


def write_example_trace(path, values=(1.00, 0.98, 0.96)):
    path.write_text("".join(f"{v}\n" for v in values), encoding="utf-8")
    return path


class TestTraceFiles:
    def test_single_column_with_header(self, tmp_path):
        p = tmp_path / "t.csv"
        p.write_text("fluorescence\n1.0\n2.0\n3.0\n", encoding="utf-8")
        tr = io.read_trace(p)
        np.testing.assert_array_equal(tr.values, [1.0, 2.0, 3.0])
        assert tr.rate == 100.0

    def test_two_column_infers_rate(self, tmp_path):
        p = tmp_path / "t.csv"
        p.write_text("time,value\n0.00,1.0\n0.02,2.0\n0.04,3.0\n", encoding="utf-8")
        tr = io.read_trace(p)
        assert tr.rate == pytest.approx(50.0)

    def test_two_column_nonuniform_rejected(self, tmp_path):
        p = tmp_path / "t.csv"
        p.write_text("0.0,1.0\n0.02,2.0\n0.05,3.0\n", encoding="utf-8")
        with pytest.raises(ValueError):
            io.read_trace(p)

    def test_garbage_rejected(self, tmp_path):
        p = tmp_path / "t.csv"
        p.write_text("1.0\nbogus\n", encoding="utf-8")
        with pytest.raises(ValueError):
            io.read_trace(p)

    def test_round_trip(self, tmp_path):
        from l0spike import Trace

        tr = Trace(np.array([0.5, -1.25, 3.0]), rate=100.0)
        p = tmp_path / "t.csv"
        io.write_trace(p, tr)
        back = io.read_trace(p)
        np.testing.assert_array_equal(back.values, tr.values)


class TestDeconvolve:
    def test_worked_example(self, tmp_path, capsys):
        trace = write_example_trace(tmp_path / "y.csv")
        out = tmp_path / "res.json"
        code = run_cli("deconvolve", "--input", trace, "--gamma", 0.98,
                       "--lambda", 0.5, "--output", out)
        assert code == 0
        payload = json.loads(out.read_text())
        assert payload["spikes"] == []
        assert payload["objective"] == pytest.approx(5.4e-8, abs=1e-8)
        assert payload["config"]["constrained"] is True
        assert len(payload["calcium"]) == 3

    def test_huge_penalty_no_spikes(self, tmp_path):
        trace = write_example_trace(tmp_path / "y.csv", np.linspace(0, 5, 40))
        out = tmp_path / "res.json"
        assert run_cli("deconvolve", "--input", trace, "--gamma", 0.95,
                       "--lambda", 1e9, "--output", out) == 0
        assert json.loads(out.read_text())["spikes"] == []

    def test_objective_recomputes_from_own_calcium(self, tmp_path):
        rng = np.random.default_rng(0)
        trace = write_example_trace(tmp_path / "y.csv", rng.normal(1, 0.5, 60))
        out = tmp_path / "res.json"
        run_cli("deconvolve", "--input", trace, "--gamma", 0.95, "--lambda", 0.3,
                "--output", out)
        payload = json.loads(out.read_text())
        y = io.read_trace(trace).values
        c = np.array(payload["calcium"])
        k = len(payload["spikes"])
        recomputed = 0.5 * np.sum((y - c) ** 2) + 0.3 * k
        assert payload["objective"] == pytest.approx(recomputed, rel=1e-9)

    def test_round_trip_lossless(self, tmp_path):
        trace = write_example_trace(tmp_path / "y.csv")
        out = tmp_path / "res.json"
        run_cli("deconvolve", "--input", trace, "--gamma", 0.98, "--lambda", 0.5,
                "--output", out)
        payload = json.loads(out.read_text())
        assert json.loads(json.dumps(payload)) == payload

    def test_no_calcium_flag(self, tmp_path):
        trace = write_example_trace(tmp_path / "y.csv")
        out = tmp_path / "res.json"
        run_cli("deconvolve", "--input", trace, "--gamma", 0.98, "--lambda", 0.5,
                "--output", out, "--no-calcium")
        assert "calcium" not in json.loads(out.read_text())

    def test_noiseless_single_spike_round_trip(self, tmp_path):
        prefix = tmp_path / "sim"
        run_cli("simulate", "--T", 200, "--gamma", 0.95, "--sigma", 0.0,
                "--theta", 0.008, "--seed", 3, "--output-prefix", prefix)
        truth = io.read_spikes(f"{prefix}.spikes.txt").times
        assert len(truth) >= 1
        out = tmp_path / "res.json"
        run_cli("deconvolve", "--input", f"{prefix}.csv", "--gamma", 0.95,
                "--lambda", 1e-6, "--output", out)
        payload = json.loads(out.read_text())
        got = [s["time_s"] for s in payload["spikes"]]
        np.testing.assert_allclose(got, truth[truth > 0])

    def test_beta0_grid(self, tmp_path):
        t = np.arange(30)
        trace = write_example_trace(tmp_path / "y.csv", 5.0 + 0.98**t)
        out = tmp_path / "res.json"
        run_cli("deconvolve", "--input", trace, "--gamma", 0.98, "--lambda", 0.5,
                "--beta0-grid", "0:5:2", "--output", out)
        assert json.loads(out.read_text())["config"]["beta0"] == 5.0

    def test_missing_file_exits_2(self, tmp_path, capsys):
        assert run_cli("deconvolve", "--input", tmp_path / "nope.csv",
                       "--gamma", 0.98, "--lambda", 0.5) == 2
        assert "error" in capsys.readouterr().err

    def test_bad_gamma_exits_2(self, tmp_path):
        trace = write_example_trace(tmp_path / "y.csv")
        assert run_cli("deconvolve", "--input", trace, "--gamma", 1.5,
                       "--lambda", 0.5) == 2


class TestSimulate:
    def test_files_and_determinism(self, tmp_path):
        a, b = tmp_path / "a", tmp_path / "b"
        for prefix in (a, b):
            assert run_cli("simulate", "--T", 500, "--gamma", 0.998, "--sigma", 0.15,
                           "--theta", 0.01, "--seed", 9, "--output-prefix", prefix) == 0
        assert (tmp_path / "a.csv").read_bytes() == (tmp_path / "b.csv").read_bytes()
        assert (tmp_path / "a.spikes.txt").read_bytes() == (tmp_path / "b.spikes.txt").read_bytes()

    def test_silent_neuron_empty_spike_file(self, tmp_path):
        prefix = tmp_path / "s"
        run_cli("simulate", "--T", 100, "--gamma", 0.9, "--sigma", 0.0,
                "--theta", 0.0, "--seed", 1, "--output-prefix", prefix)
        assert len(io.read_spikes(f"{prefix}.spikes.txt")) == 0

    def test_invalid_config_exits_2(self, tmp_path):
        assert run_cli("simulate", "--T", 0, "--gamma", 0.9, "--sigma", 0.0,
                       "--theta", 0.0, "--seed", 1,
                       "--output-prefix", tmp_path / "x") == 2


class TestEvaluate:
    def test_identical_vr_is_zero(self, tmp_path, capsys):
        p = tmp_path / "s.txt"
        io.write_spikes(p, [0.1, 0.5])
        assert run_cli("evaluate", "--estimated", p, "--truth", p, "--metric", "vr") == 0
        assert capsys.readouterr().out.strip() == "0"

    def test_empty_vs_empty_vp(self, tmp_path, capsys):
        p = tmp_path / "e.txt"
        p.write_text("", encoding="utf-8")
        run_cli("evaluate", "--estimated", p, "--truth", p, "--metric", "vp")
        assert float(capsys.readouterr().out) == 0.0

    def test_lone_spike_vr(self, tmp_path, capsys):
        a, b = tmp_path / "a.txt", tmp_path / "b.txt"
        io.write_spikes(a, [0.0])
        b.write_text("", encoding="utf-8")
        run_cli("evaluate", "--estimated", a, "--truth", b, "--metric", "vr")
        assert capsys.readouterr().out.strip() == "0.707107"

    def test_result_json_as_estimate(self, tmp_path, capsys):
        trace = write_example_trace(tmp_path / "y.csv", [0.1, 0.1, 5.0, 4.9])
        res = tmp_path / "res.json"
        run_cli("deconvolve", "--input", trace, "--gamma", 0.98, "--lambda", 0.1,
                "--output", res)
        truth = tmp_path / "t.txt"
        io.write_spikes(truth, [0.02])  # index 3 at 100 Hz
        run_cli("evaluate", "--estimated", res, "--truth", truth, "--metric", "vp")
        assert float(capsys.readouterr().out) == 0.0

    def test_json_report(self, tmp_path, capsys):
        p = tmp_path / "s.txt"
        io.write_spikes(p, [0.1])
        rep = tmp_path / "rep.json"
        run_cli("evaluate", "--estimated", p, "--truth", p, "--metric", "vp",
                "--json", rep)
        assert json.loads(rep.read_text())["value"] == 0.0

    def test_unreadable_exits_2(self, tmp_path):
        p = tmp_path / "s.txt"
        io.write_spikes(p, [0.1])
        assert run_cli("evaluate", "--estimated", tmp_path / "missing.txt",
                       "--truth", p, "--metric", "vr") == 2


class TestTune:
    @pytest.fixture
    def noiseless(self, tmp_path):
        prefix = tmp_path / "sim"
        run_cli("simulate", "--T", 400, "--gamma", 0.95, "--sigma", 0.0,
                "--theta", 0.01, "--seed", 21, "--output-prefix", prefix)
        return prefix

    def test_noiseless_recovery_and_outputs(self, tmp_path, noiseless, capsys):
        out = tmp_path / "report"
        code = run_cli("tune", "--input", f"{noiseless}.csv", "--truth",
                       f"{noiseless}.spikes.txt", "--metric", "vr",
                       "--lambda-grid", "1e-3:1e3:7", "--gamma", 0.95,
                       "--output-prefix", out)
        assert code == 0
        stdout = capsys.readouterr().out
        assert "chosen_lambda=" in stdout and "test_score=0" in stdout
        rows = (tmp_path / "report.csv").read_text().strip().splitlines()
        assert rows[0] == "lambda,train_score,train_spike_count"
        assert len(rows) == 8
        summary = json.loads((tmp_path / "report.json").read_text())
        assert summary["test_score"] == pytest.approx(0.0, abs=1e-9)

    def test_singleton_grid(self, tmp_path, noiseless, capsys):
        code = run_cli("tune", "--input", f"{noiseless}.csv", "--truth",
                       f"{noiseless}.spikes.txt", "--metric", "vp",
                       "--lambda-grid", "2.5:2.5:1", "--gamma", 0.95,
                       "--output-prefix", tmp_path / "r")
        assert code == 0
        assert "chosen_lambda=2.5" in capsys.readouterr().out

    def test_class_gamma_echoed(self, tmp_path, noiseless):
        code = run_cli("tune", "--input", f"{noiseless}.csv", "--truth",
                       f"{noiseless}.spikes.txt", "--metric", "vr",
                       "--lambda-grid", "0.1:1:2", "--class", "fast",
                       "--output-prefix", tmp_path / "r")
        assert code == 0
        summary = json.loads((tmp_path / "r.json").read_text())
        assert summary["gamma"] == pytest.approx(0.98571, abs=1e-5)

    def test_needs_gamma_or_class(self, tmp_path, noiseless):
        assert run_cli("tune", "--input", f"{noiseless}.csv", "--truth",
                       f"{noiseless}.spikes.txt", "--metric", "vr",
                       "--lambda-grid", "0.1:1:2",
                       "--output-prefix", tmp_path / "r") == 2

    def test_bad_grid_exits_2(self, tmp_path, noiseless):
        assert run_cli("tune", "--input", f"{noiseless}.csv", "--truth",
                       f"{noiseless}.spikes.txt", "--metric", "vr",
                       "--lambda-grid", "nonsense", "--gamma", 0.95,
                       "--output-prefix", tmp_path / "r") == 2


class TestBenchmark:
    def test_reps_rows_and_objective_match(self, tmp_path, capsys):
        out_f = tmp_path / "fpop.csv"
        out_o = tmp_path / "op.csv"
        assert run_cli("benchmark", "--solver", "fpop", "--T", 300, "--theta", 0.01,
                       "--gamma", 0.998, "--sigma", 0.15, "--reps", 3, "--seed", 5,
                       "--output", out_f) == 0
        assert run_cli("benchmark", "--solver", "op", "--T", 300, "--theta", 0.01,
                       "--gamma", 0.998, "--sigma", 0.15, "--reps", 3, "--seed", 5,
                       "--output", out_o) == 0
        rows_f = out_f.read_text().strip().splitlines()
        rows_o = out_o.read_text().strip().splitlines()
        assert len(rows_f) == 4 and len(rows_o) == 4
        for rf, ro in zip(rows_f[1:], rows_o[1:]):
            obj_f = float(rf.split(",")[8])
            obj_o = float(ro.split(",")[8])
            assert obj_f == pytest.approx(obj_o, abs=1e-8)
        assert rows_f[1].split(",")[9] != ""  # fpop reports regions
        assert rows_o[1].split(",")[9] == ""

    def test_op_constrained_exits_2(self):
        assert run_cli("benchmark", "--solver", "op", "--T", 100, "--theta", 0.01,
                       "--gamma", 0.998, "--sigma", 0.15, "--constrained") == 2


class TestEntryPoint:
    def test_module_invocation(self, tmp_path):
        trace = write_example_trace(tmp_path / "y.csv")
        proc = subprocess.run(
            [sys.executable, "-m", "l0spike", "deconvolve", "--input", str(trace),
             "--gamma", "0.98", "--lambda", "0.5"],
            capture_output=True, text=True,
        )
        assert proc.returncode == 0
        assert json.loads(proc.stdout)["spikes"] == []

    def test_usage_error_exits_2(self):
        proc = subprocess.run(
            [sys.executable, "-m", "l0spike", "deconvolve"],
            capture_output=True, text=True,
        )
        assert proc.returncode == 2
