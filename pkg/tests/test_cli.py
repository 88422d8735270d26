import json
from pathlib import Path

import numpy as np
import pytest

from parabolab import cli
from parabolab import mixed_norms as mn


class TestConfigValidation:
    def test_unknown_top_level_key(self, tmp_path):
        cfg = tmp_path / "c.json"
        cfg.write_text(json.dumps({"kind": "norms", "bogus": 1}))
        assert cli.main(["norms", "--config", str(cfg), "--out", str(tmp_path / "o")]) == 2

    def test_unknown_parameter(self, tmp_path):
        cfg = tmp_path / "c.json"
        cfg.write_text(json.dumps({"kind": "norms", "parameters": {"nope": 1}}))
        assert cli.main(["norms", "--config", str(cfg), "--out", str(tmp_path / "o")]) == 2

    def test_kind_mismatch(self, tmp_path):
        cfg = tmp_path / "c.json"
        cfg.write_text(json.dumps({"kind": "sde"}))
        assert cli.main(["norms", "--config", str(cfg), "--out", str(tmp_path / "o")]) == 2

    def test_parameter_range_checked_before_compute(self, tmp_path):
        cfg = tmp_path / "c.json"
        cfg.write_text(json.dumps({"kind": "sde", "parameters": {"dt": 0.5}}))
        assert cli.main(["sde", "--config", str(cfg), "--out", str(tmp_path / "o")]) == 2

    def test_unknown_fixture_rejected(self, tmp_path):
        cfg = tmp_path / "c.json"
        cfg.write_text(json.dumps({"kind": "pde", "parameters": {"fixture": "wat"}}))
        assert cli.main(["pde", "--config", str(cfg), "--out", str(tmp_path / "o")]) == 2


class TestExperiments:
    def test_norms_constant_fixture_reports_unit_value(self, tmp_path):
        out = tmp_path / "norms"
        assert cli.main(["norms", "--out", str(out), "--seed", "1"]) == 0
        rep = json.loads((out / "report.json").read_text())
        mixed = [r for r in rep["records"] if r["op"] == "mixed_norm"]
        assert mixed[0]["value"] == 1.0
        assert rep["version"] and rep["config_hash"]
        # the sampled field is exported in the grid format
        assert (out / "field.json").exists() and (out / "field.bin").exists()
        g = mn.load_grid_function(out / "field")
        assert np.all(g.values == 1.0)

    def test_rerun_byte_identical(self, tmp_path):
        a, b = tmp_path / "a", tmp_path / "b"
        for out in (a, b):
            assert cli.main(["sde", "--out", str(out), "--seed", "42"]) == 0
        assert (a / "report.json").read_bytes() == (b / "report.json").read_bytes()

    def test_seed_changes_report(self, tmp_path):
        a, b = tmp_path / "a", tmp_path / "b"
        assert cli.main(["sde", "--out", str(a), "--seed", "1"]) == 0
        assert cli.main(["sde", "--out", str(b), "--seed", "2"]) == 0
        ra = json.loads((a / "report.json").read_text())
        rb = json.loads((b / "report.json").read_text())
        assert ra["config_hash"] != rb["config_hash"]
        assert ra["sup_moment"] != rb["sup_moment"]

    def test_embed_writes_sweep_table(self, tmp_path):
        out = tmp_path / "embed"
        cfg = tmp_path / "c.json"
        cfg.write_text(json.dumps({"kind": "embed", "parameters": {"n_points": 20}}))
        assert cli.main(["embed", "--config", str(cfg), "--out", str(out)]) == 0
        rep = json.loads((out / "report.json").read_text())
        assert rep["n_rows"] == 60
        assert (out / "sweep.csv").exists()
        row = rep["rows"][0]
        assert {"d", "p0", "p", "q", "predicate", "value"} <= set(row)

    def test_degiorgi_diagnostic_rows(self, tmp_path):
        out = tmp_path / "dg"
        cfg = tmp_path / "c.json"
        cfg.write_text(json.dumps({"kind": "degiorgi", "parameters": {"nx": 50, "dt": 0.04}}))
        assert cli.main(["degiorgi", "--config", str(cfg), "--out", str(out)]) == 0
        rep = json.loads((out / "report.json").read_text())
        ops = {r["op"] for r in rep["diagnostics"]}
        assert ops == {"energy_estimate", "local_max"}
        for row in rep["diagnostics"]:
            assert {"run_id", "op", "lhs", "rhs", "ratio", "gamma_fit"} <= set(row)

    def test_pde_solution_export(self, tmp_path):
        out = tmp_path / "pde"
        cfg = tmp_path / "c.json"
        cfg.write_text(json.dumps({"kind": "pde",
                                   "parameters": {"nx": 24, "dt": 0.05, "T": 0.2}}))
        assert cli.main(["pde", "--config", str(cfg), "--out", str(out)]) == 0
        u = mn.load_grid_function(out / "solution")
        assert u.d == 2 and np.all(np.isfinite(u.values))
        rep = json.loads((out / "report.json").read_text())
        assert "max_principle" in rep and "hypotheses" in rep and "grad_sup" in rep


class TestFixtures:
    def test_catalog_contents(self, capsys):
        assert cli.main(["fixtures"]) == 0
        catalog = json.loads(capsys.readouterr().out)
        assert "example-6.1" in catalog
        assert "min(d/2 - 1, 1/2 + 1/(d-1))" in catalog["example-6.1"]["condition"]
        for entry in catalog.values():
            assert "condition" in entry and "kind" in entry

    def test_acceptance_subset_via_cli(self, tmp_path, capsys):
        cfg = tmp_path / "c.json"
        cfg.write_text(json.dumps({"kind": "acceptance", "parameters": {"criteria": [2, 4]}}))
        rc = cli.main(["acceptance", "--config", str(cfg), "--out", str(tmp_path / "acc")])
        assert rc == 0
        rep = json.loads((tmp_path / "acc" / "report.json").read_text())
        assert [r["index"] for r in rep["criteria"]] == [2, 4]
        assert rep["all_passed"] is True
