"""Command-line interface: output contracts, error envelope, exit codes.

Everything runs in-process through main() for speed; one subprocess test
at the end proves the installed entry point works end to end.
"""

import contextlib
import csv
import io
import json
import os
import subprocess
import sys

import pytest

from dagcast.cli import SWEEP_COLUMNS, main


def call(argv):
    out, err = io.StringIO(), io.StringIO()
    with contextlib.redirect_stdout(out), contextlib.redirect_stderr(err):
        try:
            rc = main(argv)
        except SystemExit as exc:  # argparse usage failures
            rc = exc.code
    return rc, out.getvalue(), err.getvalue()


def error_payload(err):
    doc = json.loads(err.strip().splitlines()[-1])
    return doc["error"]


class TestCapacity:
    def test_fig5_lambda_one(self):
        rc, out, err = call(["capacity", "builtin:fig5"])
        assert rc == 0
        doc = json.loads(out)
        assert doc["lambda"] == "1/1"
        assert doc["method"] == "node-cuts"
        assert len(doc["beta"]) == 6
        assert len(doc["binding_cuts"]) == 3

    def test_k4_lambda_half(self):
        rc, out, _ = call(["capacity", "builtin:k4_unit"])
        assert json.loads(out)["lambda"] == "1/2"

    def test_all_cuts_method(self):
        rc, out, _ = call(["capacity", "builtin:fig5", "--method", "all-cuts"])
        doc = json.loads(out)
        assert doc["lambda"] == "1/1"
        assert doc["method"] == "all-cuts"

    def test_dag10(self):
        rc, out, _ = call(["capacity", "builtin:dag10"])
        assert json.loads(out)["lambda"] == "12517/3790"


class TestTrees:
    def test_count_only(self):
        rc, out, _ = call(["trees", "builtin:dag10", "--count-only"])
        assert rc == 0
        assert out.strip() == "362880"

    def test_subset_values(self):
        rc, out, _ = call(["trees", "builtin:fig5", "--subset-max", "2"])
        doc = json.loads(out)
        assert doc["count"] == 6
        assert doc["best_subsets"]["1"]["lambda"] == "3/4"
        assert doc["best_subsets"]["2"]["lambda"] == "1/1"

    def test_cyclic_fallback(self):
        rc, out, _ = call(["trees", "builtin:cycle4", "--count-only"])
        assert rc == 0
        assert int(out.strip()) > 0


class TestSimulate:
    def _sim(self, tmp_path, *extra, scenario="builtin:k4_unit", lam="0.45"):
        mpath = tmp_path / "metrics.json"
        ppath = tmp_path / "packets.csv"
        argv = [
            "simulate", scenario, "--policy", "pistar", "--lambda", lam,
            "--slots", "400", "--seed", "3", "--out", str(mpath),
            "--packets", str(ppath), *extra,
        ]
        rc, out, err = call(argv)
        return rc, mpath, ppath, out, err

    def test_writes_metrics_and_packets(self, tmp_path):
        rc, mpath, ppath, out, err = self._sim(tmp_path)
        assert rc == 0, err
        doc = json.loads(mpath.read_text())
        assert doc["policy"] == "pistar"
        assert doc["slots"] == 400
        assert doc["seed"] == 3
        assert 0 < doc["min_rate"] <= 0.45 * 1.2
        rows = list(csv.DictReader(ppath.open()))
        assert rows and rows[0]["packet_id"] == "1"
        assert set(rows[0]) == {"packet_id", "arrival_slot", "full_delivery_slot", "delay"}

    def test_deterministic_outputs(self, tmp_path):
        (tmp_path / "a").mkdir()
        (tmp_path / "b").mkdir()
        _, m1, p1, _, _ = self._sim(tmp_path / "a")
        _, m2, p2, _, _ = self._sim(tmp_path / "b")
        assert m1.read_text() == m2.read_text()
        assert p1.read_text() == p2.read_text()

    def test_stdout_streams(self, tmp_path):
        ppath = tmp_path / "p.csv"
        rc, out, err = call([
            "simulate", "builtin:k4_unit", "--policy", "pistar", "--lambda", "0.3",
            "--slots", "100", "--seed", "1", "--out", "-", "--packets", str(ppath),
        ])
        assert rc == 0
        assert json.loads(out)["policy"] == "pistar"

    def test_trace_file(self, tmp_path):
        tpath = tmp_path / "trace.csv"
        rc, mpath, ppath, _, err = self._sim(tmp_path, "--trace", str(tpath))
        assert rc == 0, err
        header = tpath.read_text().splitlines()[0]
        assert header.startswith("slot,activation,R_r")

    def test_fraction_rate_accepted(self, tmp_path):
        rc, mpath, _, _, err = self._sim(tmp_path, lam="2/5")
        assert rc == 0, err
        assert json.loads(mpath.read_text())["lambda"] == 0.4

    def test_pitree_with_tree_spec(self, tmp_path):
        mpath = tmp_path / "m.json"
        rc, out, err = call([
            "simulate", "builtin:fig5", "--policy", "pitree", "--trees", "auto:1",
            "--lambda", "0.5", "--slots", "300", "--seed", "2",
            "--out", str(mpath), "--packets", "-",
        ])
        assert rc == 0, err
        doc = json.loads(mpath.read_text())
        assert doc["policy"] == "pitree"
        assert doc["n_trees"] == 1

    def test_pirand(self, tmp_path):
        mpath = tmp_path / "m.json"
        rc, out, err = call([
            "simulate", "builtin:k4_unit", "--policy", "pirand", "--lambda", "0.4",
            "--eps", "0.05", "--slots", "300", "--seed", "2",
            "--out", str(mpath), "--packets", "-",
        ])
        assert rc == 0, err
        assert json.loads(mpath.read_text())["policy"] == "pirand"

    def test_backend_flag(self, tmp_path):
        rc, mpath, _, _, err = self._sim(tmp_path, "--backend", "numpy")
        assert rc == 0, err
        assert json.loads(mpath.read_text())["backend"] == "numpy"


class TestSweep:
    def test_grid_and_seed_family(self, tmp_path):
        spath = tmp_path / "s.csv"
        rc, _, err = call([
            "sweep", "builtin:fig5", "--policy", "pistar",
            "--lambdas", "0.5,0.9", "--seeds", "2", "--slots", "300",
            "--seed", "5", "--out", str(spath),
        ])
        assert rc == 0, err
        rows = list(csv.DictReader(spath.open()))
        assert len(rows) == 4
        assert [r["seed"] for r in rows] == ["5", "6", "5", "6"]
        assert [r["lambda"] for r in rows] == ["0.5", "0.5", "0.9", "0.9"]
        assert all(r["policy"] == "pistar" for r in rows)
        assert all(r["deadlock"] == "0" for r in rows)

    def test_columns_pinned(self, tmp_path):
        spath = tmp_path / "s.csv"
        call([
            "sweep", "builtin:k4_unit", "--policy", "pistar", "--lambdas", "0.3",
            "--slots", "100", "--seed", "1", "--out", str(spath),
        ])
        header = spath.read_text().splitlines()[0]
        assert header == ",".join(SWEEP_COLUMNS)
        assert header == "policy,trees,lambda,seed,min_rate,avg_delay,delivered,deadlock"

    def test_append_skips_header(self, tmp_path):
        spath = tmp_path / "s.csv"
        base = [
            "sweep", "builtin:k4_unit", "--policy", "pistar", "--slots", "100",
            "--seed", "1", "--out", str(spath),
        ]
        call(base + ["--lambdas", "0.3"])
        call(base + ["--lambdas", "0.4", "--append"])
        text = spath.read_text()
        assert text.count("policy,trees") == 1
        assert len(text.strip().splitlines()) == 3

    def test_stable_grid_under_capacity(self, tmp_path):
        spath = tmp_path / "s.csv"
        rc, _, err = call([
            "sweep", "builtin:fig5", "--policy", "pistar",
            "--lambdas", "0.5,0.75,0.95", "--slots", "2000", "--seed", "7",
            "--out", str(spath),
        ])
        assert rc == 0, err
        rows = list(csv.DictReader(spath.open()))
        assert len(rows) == 3
        for row in rows:
            assert row["deadlock"] == "0"
            assert float(row["min_rate"]) > 0.85 * float(row["lambda"])

    def test_pitree_records_tree_count(self, tmp_path):
        spath = tmp_path / "s.csv"
        rc, _, err = call([
            "sweep", "builtin:fig5", "--policy", "pitree", "--trees", "auto:2",
            "--lambdas", "0.5", "--slots", "200", "--seed", "1", "--out", str(spath),
        ])
        assert rc == 0, err
        rows = list(csv.DictReader(spath.open()))
        assert rows[0]["trees"] == "2"


class TestErrorEnvelope:
    def test_unknown_scenario(self):
        rc, out, err = call(["capacity", "builtin:nope"])
        assert rc == 1
        payload = error_payload(err)
        assert payload["type"] == "UnknownScenario"
        assert "nope" in payload["message"]

    def test_usage_error_exit_two(self):
        rc, out, err = call([
            "simulate", "builtin:k4_unit", "--policy", "pistar", "--lambda", "0.4",
        ])
        assert rc == 2
        assert error_payload(err)["type"] == "UsageError"

    def test_bad_policy_choice(self):
        rc, _, err = call([
            "simulate", "builtin:k4_unit", "--policy", "dijkstra", "--lambda", "0.4",
            "--seed", "1", "--out", "-", "--packets", "-",
        ])
        assert rc == 2
        assert error_payload(err)["type"] == "UsageError"

    def test_validation_problems_listed(self, tmp_path):
        bad = tmp_path / "bad.json"
        bad.write_text(json.dumps({
            "nodes": ["r", "a"],
            "source": "r",
            "edges": [{"from": "r", "to": "zz", "capacity": 1}],
            "interference": {"model": "none"},
        }))
        rc, _, err = call(["capacity", str(bad)])
        assert rc == 1
        payload = error_payload(err)
        assert payload["type"] == "ValidationError"
        assert any("zz" in p for p in payload["problems"])

    def test_rate_too_high_for_pirand(self, tmp_path):
        rc, _, err = call([
            "simulate", "builtin:k4_unit", "--policy", "pirand", "--lambda", "0.9",
            "--slots", "100", "--seed", "1", "--out", "-", "--packets", "-",
        ])
        assert rc == 1
        assert error_payload(err)["type"] == "RateTooHigh"

    def test_missing_file_is_clean_error(self):
        rc, _, err = call(["capacity", "/does/not/exist.json"])
        assert rc == 1
        assert error_payload(err)["type"] == "FileNotFoundError"


class TestOutDir:
    def test_relative_outputs_land_in_env_dir(self, tmp_path, monkeypatch):
        monkeypatch.setenv("DAGCAST_OUT_DIR", str(tmp_path / "results"))
        rc, _, err = call([
            "simulate", "builtin:k4_unit", "--policy", "pistar", "--lambda", "0.3",
            "--slots", "100", "--seed", "1", "--out", "m.json", "--packets", "p.csv",
        ])
        assert rc == 0, err
        assert (tmp_path / "results" / "m.json").exists()
        assert (tmp_path / "results" / "p.csv").exists()

    def test_absolute_paths_ignore_env_dir(self, tmp_path, monkeypatch):
        monkeypatch.setenv("DAGCAST_OUT_DIR", str(tmp_path / "results"))
        mpath = tmp_path / "direct.json"
        rc, _, err = call([
            "simulate", "builtin:k4_unit", "--policy", "pistar", "--lambda", "0.3",
            "--slots", "100", "--seed", "1", "--out", str(mpath), "--packets", "-",
        ])
        assert rc == 0, err
        assert mpath.exists()


def test_module_entry_point(tmp_path):
    out = subprocess.run(
        [sys.executable, "-m", "dagcast", "capacity", "builtin:k4_unit"],
        capture_output=True, text=True, cwd=str(tmp_path),
    )
    assert out.returncode == 0, out.stderr
    assert json.loads(out.stdout)["lambda"] == "1/2"
