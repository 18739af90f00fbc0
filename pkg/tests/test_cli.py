import json
import math

import numpy as np
import pytest

from sadmm.cli import TRACE_COLUMNS, load_config, main


def run(args):
    return main([str(a) for a in args])


TINY = ["--l", 24, "--m", 72, "--spikes", 6, "--seed", 3,
        "--epsilon", "1e-8", "--max-iter", 300]


class TestSolveCommand:
    def test_outputs_present_and_finite(self, tmp_path):
        out = tmp_path / "run"
        assert run(["solve", *TINY, "--out", out]) == 0
        summary = json.loads((out / "summary.json").read_text())
        for key in ("it", "final_ire", "final_equ", "l2_error", "terminated_by"):
            assert key in summary
        assert summary["it"] > 0
        assert math.isfinite(summary["final_ire"])
        assert math.isfinite(summary["final_equ"])
        assert math.isfinite(summary["l2_error"])
        assert (out / "trace.csv").exists()
        assert (out / "convergence.png").exists()
        assert (out / "recovery.png").exists()

    def test_trace_header_fixed(self, tmp_path):
        out = tmp_path / "run"
        run(["solve", *TINY, "--out", out])
        header = (out / "trace.csv").read_text().splitlines()[0]
        assert header == ",".join(TRACE_COLUMNS)
        assert header == "k,beta,gamma,r_norm,s_norm,ire,L_beta,L_tilde,dx_G,dy,dlambda"

    def test_huge_epsilon_single_iteration(self, tmp_path):
        out = tmp_path / "run"
        run(["solve", *TINY, "--epsilon", "1e9", "--out", out])
        summary = json.loads((out / "summary.json").read_text())
        assert summary["it"] == 1

    def test_byte_identical_traces(self, tmp_path):
        out1, out2 = tmp_path / "a", tmp_path / "b"
        run(["solve", *TINY, "--out", out1])
        run(["solve", *TINY, "--out", out2])
        assert (out1 / "trace.csv").read_bytes() == (out2 / "trace.csv").read_bytes()

    def test_no_plots_flag(self, tmp_path):
        out = tmp_path / "run"
        run(["solve", *TINY, "--no-plots", "--out", out])
        assert not (out / "convergence.png").exists()
        assert (out / "trace.csv").exists()

    def test_instance_round_trip(self, tmp_path):
        saved = tmp_path / "inst.txt"
        out1, out2 = tmp_path / "a", tmp_path / "b"
        run(["solve", *TINY, "--save-instance", saved, "--out", out1])
        run(["solve", "--instance", saved, "--epsilon", "1e-8",
             "--max-iter", 300, "--out", out2])
        s1 = json.loads((out1 / "summary.json").read_text())
        s2 = json.loads((out2 / "summary.json").read_text())
        assert s1["it"] == s2["it"]
        assert s1["final_ire"] == s2["final_ire"]

    def test_unreadable_instance_fails(self, tmp_path):
        code = run(["solve", "--instance", tmp_path / "missing.txt",
                    "--out", tmp_path / "o"])
        assert code != 0

    def test_unwritable_output_fails(self, tmp_path):
        blocker = tmp_path / "file"
        blocker.write_text("x")
        code = run(["solve", *TINY, "--out", blocker / "nested"])
        assert code != 0


class TestConfigFile:
    def test_parse(self, tmp_path):
        cfg = tmp_path / "run.cfg"
        cfg.write_text("tau = 0.3\nalpha 0.32\n# comment\nmax_iter = 50\n")
        values = load_config(cfg)
        assert values == {"tau": "0.3", "alpha": "0.32", "max_iter": "50"}

    def test_flags_override_config(self, tmp_path):
        cfg = tmp_path / "run.cfg"
        cfg.write_text("epsilon = 1e9\nl = 24\nm = 72\nspikes = 6\nseed = 3\n")
        out1 = tmp_path / "a"
        run(["solve", "--config", cfg, "--max-iter", 300, "--out", out1])
        s1 = json.loads((out1 / "summary.json").read_text())
        assert s1["it"] == 1  # epsilon from config stops immediately
        out2 = tmp_path / "b"
        run(["solve", "--config", cfg, "--epsilon", "1e-8", "--max-iter", 300,
             "--out", out2])
        s2 = json.loads((out2 / "summary.json").read_text())
        assert s2["it"] > 1  # flag overrides the config epsilon

    def test_malformed_config_errors(self, tmp_path):
        cfg = tmp_path / "bad.cfg"
        cfg.write_text("tau\n")
        assert run(["solve", "--config", cfg, "--out", tmp_path / "o"]) == 1


class TestSweepCommand:
    def test_rows_and_domain_handling(self, tmp_path):
        out = tmp_path / "sweep"
        assert run(["sweep", *TINY, "--max-iter", 150,
                    "--pairs", "0.65:0.32,-0.3:0.32", "--out", out]) == 0
        lines = (out / "sweep.csv").read_text().splitlines()
        assert len(lines) == 3
        assert "skipped" in lines[2]  # negative tau skipped in strict mode

    def test_allow_outside_domain_runs_negative_tau(self, tmp_path):
        out = tmp_path / "sweep"
        run(["sweep", *TINY, "--max-iter", 100, "--pairs=-0.1:0.32",
             "--allow-outside-domain", "--out", out])
        lines = (out / "sweep.csv").read_text().splitlines()
        assert "skipped" not in lines[1]

    def test_sum_outside_unit_interval_always_skipped(self, tmp_path):
        out = tmp_path / "sweep"
        run(["sweep", *TINY, "--max-iter", 100, "--pairs", "0.8:0.4",
             "--allow-outside-domain", "--out", out])
        assert "skipped" in (out / "sweep.csv").read_text().splitlines()[1]

    def test_single_pair(self, tmp_path):
        out = tmp_path / "sweep"
        run(["sweep", *TINY, "--max-iter", 150, "--pairs", "0.65:0.32", "--out", out])
        assert len((out / "sweep.csv").read_text().splitlines()) == 2


class TestCompareCommand:
    def test_pairs_solved_from_identical_data(self, tmp_path):
        out = tmp_path / "cmp"
        assert run(["compare", "--sizes", "24:72", "--seeds", "0,1",
                    "--spikes", 6, "--mu-factor", 0.01, "--epsilon", "1e-8",
                    "--max-iter", 400, "--out", out]) == 0
        lines = (out / "compare.csv").read_text().splitlines()
        assert len(lines) == 1 + 4  # 2 seeds x 2 regularizers
        assert (out / "compare.png").exists()


class TestDoaCommand:
    def test_spectrum_rows_and_peaks(self, tmp_path):
        out = tmp_path / "doa"
        assert run(["doa", "--sensors", 16, "--grid-size", 45, "--seed", 0,
                    "--epsilon", "1e-9", "--max-iter", 800, "--out", out]) == 0
        lines = (out / "spectrum.csv").read_text().splitlines()
        assert lines[0] == "angle_rad,magnitude"
        assert len(lines) == 1 + 45
        summary = json.loads((out / "summary.json").read_text())
        assert len(summary["peak_indices"]) == 2
        assert (out / "spectrum.png").exists()


class TestAuditCommand:
    def test_compliant_audit_passes(self, tmp_path):
        out = tmp_path / "audit"
        assert run(["audit", "--l", 24, "--m", 72, "--spikes", 6, "--seed", 0,
                    "--max-iter", 120, "--out", out]) == 0
        report = json.loads((out / "audit.json").read_text())
        assert report["descent_violations"] == []
        assert report["rate_x_violations"] == []
        assert report["rate_y_violations"] == []
        assert report["rate_lam_violations"] == []
        assert (out / "audit.png").exists()
