#!/usr/bin/env python3
# Copyright 2026 The Tandem Authors.
#
# Licensed under the Apache License, Version 2.0 (the "License");
# you may not use this file except in compliance with the License.
# You may obtain a copy of the License at
#
#     http://www.apache.org/licenses/LICENSE-2.0
#
# Unless required by applicable law or agreed to in writing, software
# distributed under the License is distributed on an "AS IS" BASIS,
# WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
# See the License for the specific language governing permissions and
# limitations under the License.
"""Black-box checks of the tandem command-line tool.

Usage: cli_test.py <path-to-tandem> [unittest args]
"""

import csv
import json
import os
import subprocess
import sys
import tempfile
import unittest
from pathlib import Path

import jsonschema

ROOT = Path(__file__).resolve().parent.parent
SCHEMAS = ROOT / "schemas"
TOOL = None


def run(*args, cwd=None, env=None):
    full_env = dict(os.environ)
    full_env.pop("TANDEM_SEED", None)
    if env:
        full_env.update(env)
    return subprocess.run([TOOL, *args], cwd=cwd, env=full_env, capture_output=True, text=True)


def rows(path):
    with open(path, newline="") as f:
        return list(csv.DictReader(line for line in f if not line.startswith("#")))


def schema(name):
    return json.loads((SCHEMAS / f"{name}.schema.json").read_text())


class CliTest(unittest.TestCase):
    def setUp(self):
        self._tmp = tempfile.TemporaryDirectory()
        self.dir = Path(self._tmp.name)

    def tearDown(self):
        self._tmp.cleanup()

    def expect_ok(self, result):
        self.assertEqual(result.returncode, 0, result.stderr)
        self.assertEqual(len(result.stdout.strip().splitlines()), 1, result.stdout)

    def expect_error(self, result, code, kind):
        self.assertEqual(result.returncode, code, result.stdout + result.stderr)
        err = json.loads(result.stderr.strip().splitlines()[-1])
        jsonschema.validate(err, schema("error"))
        self.assertEqual(err["error"], kind)
        self.assertEqual(err["exit_code"], code)

    def test_version(self):
        r = run("--version")
        self.assertEqual(r.returncode, 0)
        self.assertRegex(r.stdout.strip(), r"^tandem \d+\.\d+\.\d+$")

    def test_schedule_rows(self):
        out = self.dir / "schedule.csv"
        self.expect_ok(run("schedule", "--m", "10", "--model", "0.25,0.75", "--out", str(out)))
        table = {int(r["m"]): (int(r["k_m"]), int(r["r_m"])) for r in rows(out)}
        self.assertEqual(sorted(table), list(range(1, 11)))
        self.assertEqual(table[7], (1, 1))
        self.assertEqual(table[8], (2, 2))

    def test_constant0_exact(self):
        out = self.dir / "exact.csv"
        self.expect_ok(run("exact", "--profile", "constant0", "--n", "100", "--out", str(out)))
        data = rows(out)
        self.assertGreater(len(data), 1)
        for r in data:
            self.assertEqual(float(r["p_correct"]), 0.5)

    def test_outputs_embed_config(self):
        out = self.dir / "exact.csv"
        self.expect_ok(run("exact", "--n", "50", "--out", str(out)))
        header = [line for line in out.read_text().splitlines() if line.startswith("#")]
        self.assertTrue(header[0].startswith("# tandem "))
        cfg = json.loads(header[1].split(" ", 2)[2])
        self.assertEqual(cfg["command"], "exact")
        self.assertEqual(cfg["n"], 50)
        self.assertEqual(cfg["profile"], "designed")

    def test_simulate_byte_identical(self):
        outputs = []
        for name in ("a", "b"):
            d = self.dir / name
            d.mkdir()
            self.expect_ok(run("simulate", "--n", "2000", "--reps", "200", "--seed", "7", "--out", "sim.csv", cwd=d))
            outputs.append(((d / "sim.csv").read_bytes(), (d / "sim.json").read_bytes()))
        self.assertEqual(outputs[0], outputs[1])

    def test_seed_env_default(self):
        def sim(seed_env, name):
            d = self.dir / name
            d.mkdir()
            self.expect_ok(run("simulate", "--n", "500", "--reps", "100", "--out", "s.csv", cwd=d,
                               env={"TANDEM_SEED": seed_env}))
            return json.loads((d / "s.json").read_text())
        a, b, c = sim("11", "a"), sim("11", "b"), sim("12", "c")
        self.assertEqual(a["config"]["seed"], 11)
        self.assertEqual(a, b)
        self.assertNotEqual(a["checkpoints"], c["checkpoints"])

    def test_simulate_summary_schema(self):
        out = self.dir / "sim.csv"
        self.expect_ok(run("simulate", "--n", "1000", "--reps", "50", "--out", str(out)))
        jsonschema.validate(json.loads((self.dir / "sim.json").read_text()), schema("simulate_summary"))

    def test_equilibrium_schema_and_query(self):
        out = self.dir / "eq.json"
        self.expect_ok(run("equilibrium", "--range", "1..60", "--delta", "0.5", "--eps", "0.01", "--window", "00",
                           "--out", str(out)))
        report = json.loads(out.read_text())
        jsonschema.validate(report, schema("equilibrium_report"))
        self.assertGreater(len(report["violations"]), 0)
        self.assertLess(2 * report["tail_bound"], report["epsilon"])

    def test_myopic_zero_discount_passes(self):
        out = self.dir / "eq.json"
        self.expect_ok(run("equilibrium", "--profile", "myopic:1", "--model", "0.4,0.6", "--range", "1..200",
                           "--delta", "0", "--eps", "1e-9", "--out", str(out)))
        report = json.loads(out.read_text())
        jsonschema.validate(report, schema("equilibrium_report"))
        self.assertEqual(report["violations"], [])

    def test_config_file_with_override(self):
        cfg = self.dir / "cfg.json"
        cfg.write_text(json.dumps({"command": "exact", "profile": "constant1", "n": 20}))
        out = self.dir / "exact.csv"
        self.expect_ok(run("exact", "--config", str(cfg), "--n", "30", "--out", str(out)))
        data = rows(out)
        self.assertEqual(int(data[-1]["n"]), 30)
        self.assertEqual(float(data[-1]["p_correct"]), 0.5)

    def test_custom_profile_file(self):
        out = self.dir / "custom.csv"
        ref = self.dir / "ref.csv"
        spec = ROOT / "configs" / "designed_custom.json"
        self.expect_ok(run("exact", "--profile", f"@{spec}", "--n", "5000", "--out", str(out)))
        self.expect_ok(run("exact", "--profile", "designed", "--n", "5000", "--out", str(ref)))
        self.assertEqual([r["p_correct"] for r in rows(out)], [r["p_correct"] for r in rows(ref)])

    def test_invalid_model_exit_2(self):
        self.expect_error(run("exact", "--model", "0.5,0.5", "--out", str(self.dir / "x.csv")), 2, "invalid_model")
        self.expect_error(run("exact", "--model", "0,0.7", "--out", str(self.dir / "x.csv")), 2, "invalid_model")

    def test_zero_probability_exit_3(self):
        r = run("equilibrium", "--profile", "copy:2", "--range", "5..5", "--window", "11", "--out",
                str(self.dir / "eq.json"))
        self.expect_error(r, 3, "zero_probability")

    def test_contract_violation_exit_4(self):
        self.expect_error(run("equilibrium", "--delta", "1", "--out", str(self.dir / "eq.json")), 4,
                          "contract_violation")
        self.expect_error(run("equilibrium", "--horizon", "1", "--out", str(self.dir / "eq.json")), 4,
                          "contract_violation")
        self.expect_error(run("exact", "--profile", "designed:1", "--out", str(self.dir / "x.csv")), 4,
                          "contract_violation")

    def test_input_error_exit_1(self):
        self.expect_error(run("exact", "--config", str(self.dir / "missing.json")), 1, "input")
        bad = self.dir / "bad.json"
        bad.write_text("{not json")
        self.expect_error(run("exact", "--config", str(bad)), 1, "input")


if __name__ == "__main__":
    TOOL = str(Path(sys.argv.pop(1)).resolve())
    unittest.main()
