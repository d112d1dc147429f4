"""End-to-end checks of the wiener_cli runner: determinism, exit codes, config precedence,
output files and the zero-drift SPDE surface against the closed-form heat kernel."""

import csv
import json
import math
import os
import subprocess
import sys
import tempfile
import unittest

CLI = None


def run(*args, env=None):
    return subprocess.run([CLI, *args], capture_output=True, text=True, env=env)


def heat_gaussian(r, t, s=1.0):
    # E exp(-(r + W_t)^2 / (2 s^2))
    v = s * s + t
    return s / math.sqrt(v) * math.exp(-r * r / (2.0 * v))


class CliTest(unittest.TestCase):
    def setUp(self):
        self.tmp = tempfile.TemporaryDirectory()
        self.dir = self.tmp.name

    def tearDown(self):
        self.tmp.cleanup()

    def out(self, name):
        return os.path.join(self.dir, name)

    def test_verify_report_is_deterministic(self):
        reports = []
        for k, threads in enumerate(["1", "2"]):
            d = self.out(f"run{k}")
            p = run("verify", "--preset", "minimal", "--seed", "7", "--threads", threads, "-o", d)
            self.assertEqual(p.returncode, 0, p.stdout + p.stderr)
            with open(os.path.join(d, "report.json"), "rb") as f:
                reports.append(f.read())
        self.assertEqual(reports[0], reports[1])
        report = json.loads(reports[0])
        self.assertEqual(len(report["records"]), 14)
        self.assertTrue(all(r["anchor"] for r in report["records"]))
        self.assertNotIn("runtime", reports[0].decode())

    def test_chaos_suite_contains_exponential_vector_check(self):
        p = run("verify", "--suite", "chaos", "--preset", "minimal", "-o", self.dir)
        self.assertEqual(p.returncode, 0, p.stdout + p.stderr)
        with open(self.out("report.json")) as f:
            anchors = {r["name"]: r["anchor"] for r in json.load(f)["records"]}
        self.assertEqual(anchors["second_quantization_exp"], "second-quantization-exponential")
        self.assertNotIn("fbm_covariance", anchors)

    def test_failing_check_gives_exit_one(self):
        p = run("verify", "--suite", "chaos", "--preset", "minimal", "--tolerance", "chaos_norm=1e-9", "-o", self.dir)
        self.assertEqual(p.returncode, 1)
        with open(self.out("report.json")) as f:
            report = json.load(f)
        self.assertFalse(report["passed"])
        self.assertEqual(report["exit_status"], 1)

    def test_time_limit_records_timeout(self):
        p = run("verify", "--suite", "chaos", "--preset", "minimal", "--time_limit", "1e-9", "-o", self.dir)
        self.assertEqual(p.returncode, 1)
        with open(self.out("report.json")) as f:
            statuses = {r["status"] for r in json.load(f)["records"]}
        self.assertEqual(statuses, {"timeout"})

    def test_usage_errors(self):
        p = run("verify", "--n", "0", "-o", self.dir)
        self.assertEqual(p.returncode, 2)
        self.assertIn("grid.n", p.stderr)
        self.assertEqual(run("verify", "--no-such-flag", "1").returncode, 2)
        self.assertEqual(run().returncode, 2)
        bad = self.out("bad.ini")
        with open(bad, "w") as f:
            f.write("[grid]\nsteps = 3\n")
        p = run("verify", "--config", bad)
        self.assertEqual(p.returncode, 2)
        self.assertIn("unknown key", p.stderr)

    def test_flag_overrides_file(self):
        cfg = self.out("run.ini")
        with open(cfg, "w") as f:
            f.write("[grid]\nn = 8\n[chaos]\nK = 3\n")
        p = run("spde", "--config", cfg, "--n", "32", "--print-config")
        self.assertEqual(p.returncode, 0, p.stderr)
        self.assertIn("n = 32\n", p.stdout)
        self.assertIn("K = 3\n", p.stdout)
        self.assertIn("command = spde\n", p.stdout)
        # The printed configuration parses back to itself.
        with open(cfg, "w") as f:
            f.write(p.stdout)
        q = run("spde", "--config", cfg, "--print-config")
        self.assertEqual(q.stdout, p.stdout)

    def test_output_directory_from_environment(self):
        env = dict(os.environ, WIENER_OUTPUT_DIR=self.out("env_out"))
        p = run("fbm", "--n", "8", env=env)
        self.assertEqual(p.returncode, 0, p.stderr)
        self.assertTrue(os.path.exists(self.out("env_out/report.json")))
        with open(self.out("env_out/fbm_covariance.csv")) as f:
            rows = list(csv.reader(f))
        self.assertEqual(rows[0], ["s", "t", "grid", "exact"])
        self.assertEqual(len(rows), 1 + 8 * 9 // 2)

    def test_zero_drift_spde_matches_heat_kernel(self):
        p = run("spde", "--a2", "zero", "--rho", "0.0", "-o", self.dir)
        self.assertEqual(p.returncode, 0, p.stdout + p.stderr)
        with open(self.out("spde_mean.csv")) as f:
            reader = csv.DictReader(f)
            rows = [(float(r["t"]), float(r["r"]), float(r["mean"])) for r in reader]
        worst = 0.0
        for t, r, u in rows:
            if abs(r) <= 6.0:
                worst = max(worst, abs(u - heat_gaussian(r, t)))
        self.assertLess(worst, 0.02)


if __name__ == "__main__":
    CLI = sys.argv.pop(1)
    unittest.main()
