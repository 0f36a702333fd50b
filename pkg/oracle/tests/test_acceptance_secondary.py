"""Secondary acceptance gate: agreement between the SDPs and the main
solver, exercised through the shared file contract (config JSON in, result
JSON out, comparison via the solver's crosscheck command)."""

import json
import subprocess
import sys

from sdp_oracle import SdpInstance, emit_result, sdp_finite, solve_config


def _report(name: str, ok: bool, detail: str = "") -> bool:
    line = f"[{'PASS' if ok else 'FAIL'}] {name}"
    if detail:
        line += f"  ({detail})"
    print(line)
    return ok


def run_crosscheck(config_path, oracle_path, report_path):
    proc = subprocess.run(
        [sys.executable, "-m", "nrdf", "crosscheck", "--config", config_path,
         "--oracle", str(oracle_path), "--out", str(report_path)],
        capture_output=True, text=True)
    return proc, json.loads(report_path.read_text()) if report_path.exists() else None


class TestSecondaryAcceptance:
    def test_s1_stationary_sweep_coincides_with_waterfilling(
            self, tmp_path, vector_config, write_config):
        config_path = write_config(vector_config)
        result = solve_config(vector_config, "stationary2")
        oracle_path = tmp_path / "oracle_stationary.json"
        emit_result(result, oracle_path)
        proc, report = run_crosscheck(config_path, oracle_path,
                                      tmp_path / "report.json")
        ok = (proc.returncode == 0 and report is not None and report["pass"]
              and report["max_rate_diff_bits"] <= 1e-4)
        assert _report(
            "S1a stationary SDP vs eigenvalue waterfilling on the 3-state sweep",
            ok, f"max rate diff {report['max_rate_diff_bits']:.2e} bits, "
                f"max matrix diff {report['max_matrix_diff_rel']:.2e}"
                if report else proc.stderr)

    def test_s1_finite_scalar_coincides_with_dynamic_waterfilling(
            self, tmp_path, finite_scalar_config, write_config):
        raw = json.loads(json.dumps(finite_scalar_config))
        raw["distortion"] = {"start": 0.7, "stop": 1.3, "count": 3,
                             "spacing": "linear"}
        config_path = write_config(raw, name="finite.json")
        result = solve_config(raw, "finite2")
        oracle_path = tmp_path / "oracle_finite.json"
        emit_result(result, oracle_path)
        proc, report = run_crosscheck(config_path, oracle_path,
                                      tmp_path / "report_finite.json")
        ok = (proc.returncode == 0 and report is not None and report["pass"]
              and report["max_rate_diff_bits"] <= 1e-3)
        assert _report(
            "S1b finite SDP vs dynamic waterfilling on scalar two-stage sweeps",
            ok, f"max rate diff {report['max_rate_diff_bits']:.2e} bits"
                if report else proc.stderr)

    def test_s2_variant_agreement(self, finite_scalar_config):
        diffs = []
        for D in (0.75, 0.9, 1.1):
            r1 = sdp_finite(SdpInstance.from_config(finite_scalar_config, "finite1", D))
            r2 = sdp_finite(SdpInstance.from_config(finite_scalar_config, "finite2", D))
            diffs.append(abs(r1["rate_bits"] - r2["rate_bits"]))
        ok = max(diffs) <= 1e-5
        assert _report("S2 lifting variants agree on shared-hypothesis instances",
                       ok, f"max objective diff {max(diffs):.2e} bits")
