import csv
import json
import math
import subprocess
import sys
from pathlib import Path

import jsonschema
import pytest
from jsonschema import validators

import reeb_lab
from reeb_lab.cli import main

SCHEMA_DIR = Path(reeb_lab.__file__).parent / "schemas"
SQRT2 = "1.4142135623730951"


def run_cli(args, capsys):
    code = main(args)
    out = capsys.readouterr()
    return code, out.out, out.err


def load_schema(name):
    schema = json.loads((SCHEMA_DIR / name).read_text())
    store = {}
    for f in SCHEMA_DIR.glob("*.schema.json"):
        doc = json.loads(f.read_text())
        store[f.name] = doc
        if "$id" in doc:
            store[doc["$id"]] = doc
    resolver = jsonschema.RefResolver(base_uri="", referrer=schema, store=store)
    cls = validators.validator_for(schema)
    return cls(schema, resolver=resolver)


def validate(name, payload, pointer=None):
    validator = load_schema(name)
    if pointer:
        schema = json.loads((SCHEMA_DIR / name).read_text())
        sub = schema
        for part in pointer.split("/"):
            sub = sub[part]
        sub = {**sub, "definitions": schema.get("definitions", {})}
        store = {f.name: json.loads(f.read_text())
                 for f in SCHEMA_DIR.glob("*.schema.json")}
        resolver = jsonschema.RefResolver(base_uri="", referrer=sub, store=store)
        jsonschema.validate(payload, sub, resolver=resolver)
    else:
        validator.validate(payload)


@pytest.fixture
def sqrt2_system_file(tmp_path):
    from reeb_lab.audit import OrbitSystem, SystemOrbit
    from reeb_lab.ellipsoid import EllipsoidSpec, ellipsoid_profile
    from reeb_lab.hamiltonian import build_profile
    from reeb_lab.indices import IterationProfile

    spec = EllipsoidSpec((1.0, math.sqrt(2.0)))
    system = OrbitSystem(
        orbits=(
            SystemOrbit(period=3.0, profile=IterationProfile(hyperbolic=(3,)),
                        hyperbolic=True),
            SystemOrbit(period=math.pi, profile=ellipsoid_profile(spec, 1)),
            SystemOrbit(period=math.sqrt(2.0) * math.pi,
                        profile=ellipsoid_profile(spec, 2)),
        ),
        hamiltonian=build_profile("quadratic", slope=5.0, r_max=2.0),
        n=2, sigma=0.6, eta=0.1, ell0=3, cbar=2.0, mode="hyperbolic")
    path = tmp_path / "system.json"
    path.write_text(json.dumps(system.to_json()))
    return path


class TestSubcommands:
    def test_cz_index_rotation(self, capsys, tmp_path):
        out_file = tmp_path / "cz.json"
        code, out, _ = run_cli(["cz-index", "--rotation", "1.2",
                                "--out", str(out_file)], capsys)
        assert code == 0 and "index 3" in out
        payload = json.loads(out_file.read_text())
        validate("cli_reports.schema.json", payload, pointer="definitions/cz_index")
        assert payload["index"] == 3

    def test_cz_index_path_file(self, capsys, tmp_path):
        import numpy as np
        from reeb_lab.indices import rotation_path
        path_file = tmp_path / "path.json"
        path_file.write_text(json.dumps(rotation_path(0.3).tolist()))
        code, out, _ = run_cli(["cz-index", "--path-file", str(path_file)], capsys)
        assert code == 0 and "index 1" in out

    def test_iterate_indices_csv(self, capsys, tmp_path):
        profile = tmp_path / "p.json"
        profile.write_text(json.dumps(
            {"loop_index": 2, "elliptic": [0.3], "hyperbolic": []}))
        out_file = tmp_path / "table.csv"
        code, out, _ = run_cli(["iterate-indices", "--profile", str(profile),
                                "--k-max", "5", "--out", str(out_file)], capsys)
        assert code == 0
        rows = list(csv.reader(out_file.read_text().splitlines()))
        assert rows[0] == ["k", "mu_minus", "mu_plus", "mu_hat"]
        assert len(rows) == 6

    def test_williamson(self, capsys, tmp_path):
        matrix = tmp_path / "m.json"
        matrix.write_text(json.dumps([[1.0, -1.0], [0.0, 1.0]]))
        out_file = tmp_path / "w.json"
        code, out, _ = run_cli(["williamson", "--matrix", str(matrix),
                                "--out", str(out_file)], capsys)
        assert code == 0
        payload = json.loads(out_file.read_text())
        validate("williamson.schema.json", payload)
        assert payload["b_plus"] == 1

    def test_hamiltonian_tables_and_checks(self, capsys, tmp_path):
        out_file = tmp_path / "h.json"
        code, out, _ = run_cli([
            "hamiltonian", "--family", "quadratic", "--slope", "5",
            "--r-max", "2", "--check-ratio-r0", "2.0", "--transfer", "3,2",
            "--out", str(out_file)], capsys)
        assert code == 0
        payload = json.loads(out_file.read_text())
        validate("cli_reports.schema.json", payload, pointer="definitions/hamiltonian")
        assert payload["action_ratio_monotone"] is True

    def test_hamiltonian_trace_check(self, capsys, tmp_path):
        lines = ["s,t,r"]
        for s in range(5):
            for t in (0.0, 1.0, 2.0):
                lines.append(f"{s},{t},1.5")
        trace = tmp_path / "trace.csv"
        trace.write_text("\n".join(lines))
        out_file = tmp_path / "h.json"
        code, out, _ = run_cli([
            "hamiltonian", "--family", "quadratic", "--slope", "5",
            "--r-max", "2", "--trace", str(trace), "--trace-r-plus", "1.5",
            "--trace-r-minus", "1.5", "--trace-k", "2",
            "--out", str(out_file)], capsys)
        assert code == 0
        assert json.loads(out_file.read_text())["trace"]["ok"] is True

    def test_recurrence_search_streams_jsonl(self, capsys, tmp_path):
        out_file = tmp_path / "sols.jsonl"
        code, out, err = run_cli([
            "recurrence-search", "--weights", f"1,{SQRT2}", "--eta", "0.1",
            "--ell0", "3", "--k-bound", "1000000", "--count", "3",
            "--out", str(out_file)], capsys)
        assert code == 0
        lines = [json.loads(line) for line in
                 out_file.read_text().strip().splitlines()]
        assert len(lines) == 3
        for sol in lines:
            validate("recurrence_solution.schema.json", sol)
        assert "3 solutions" in out

    def test_ellipsoid_convexity(self, capsys, tmp_path):
        out_file = tmp_path / "e.json"
        code, out, _ = run_cli([
            "ellipsoid", "--weights", f"1,{SQRT2}", "--convexity",
            "--k-max", "100", "--out", str(out_file)], capsys)
        assert code == 0
        payload = json.loads(out_file.read_text())
        validate("cli_reports.schema.json", payload, pointer="definitions/ellipsoid")
        assert payload["pseudo_rotation"]["convexity"]["ok"]
        assert "min mu_-=3" in out

    def test_ellipsoid_spectrum_csv(self, capsys, tmp_path):
        out_file = tmp_path / "spec.csv"
        code, _, _ = run_cli(["ellipsoid", "--weights", "1,2", "--spectrum",
                              "7", "--out", str(out_file)], capsys)
        assert code == 0
        rows = list(csv.reader(out_file.read_text().splitlines()))[1:]
        assert [float(r[0]) for r in rows] == sorted(float(r[0]) for r in rows)

    def test_barcode(self, capsys, tmp_path):
        cx = tmp_path / "cx.json"
        cx.write_text(json.dumps({
            "generators": [{"id": "y", "action": 0.0, "degree": 3},
                           {"id": "x", "action": 1.0, "degree": 4}],
            "boundary": {"x": ["y"]}}))
        out_file = tmp_path / "bars.csv"
        code, out, _ = run_cli(["barcode", "--complex", str(cx),
                                "--out", str(out_file)], capsys)
        assert code == 0
        rows = list(csv.reader(out_file.read_text().splitlines()))
        assert rows[1] == ["0.0", "1.0", "3"]

    def test_audit_lemma(self, capsys, tmp_path, sqrt2_system_file):
        out_file = tmp_path / "audit.json"
        code, out, _ = run_cli(["audit-lemma", "--system", str(sqrt2_system_file),
                                "--count", "2", "--out", str(out_file)], capsys)
        assert code == 0
        payload = json.loads(out_file.read_text())
        validate("audit_report.schema.json", payload)
        assert payload["ok"] and "pairs certified" in out

    def test_fixed_point_index(self, capsys, tmp_path):
        rows = ["x,y,fx,fy"]
        for t in [2 * math.pi * i / 64 for i in range(64)]:
            x, y = math.cos(t), math.sin(t)
            c, s = math.cos(1.0), math.sin(1.0)
            rows.append(f"{x},{y},{c * x - s * y},{s * x + c * y}")
        samples = tmp_path / "map.csv"
        samples.write_text("\n".join(rows))
        out_file = tmp_path / "fp.json"
        code, out, _ = run_cli(["fixed-point-index", "--samples", str(samples),
                                "--out", str(out_file)], capsys)
        assert code == 0
        payload = json.loads(out_file.read_text())
        validate("cli_reports.schema.json", payload, pointer="definitions/fixed_point")
        assert payload["index"] == 1

    def test_fuzz_deterministic(self, capsys, tmp_path):
        a, b = tmp_path / "a.json", tmp_path / "b.json"
        code1, _, _ = run_cli(["fuzz", "--seed", "7", "--cases", "50",
                               "--out", str(a)], capsys)
        code2, _, _ = run_cli(["fuzz", "--seed", "7", "--cases", "50",
                               "--out", str(b)], capsys)
        assert code1 == code2 == 0
        assert a.read_bytes() == b.read_bytes()
        validate("cli_reports.schema.json", json.loads(a.read_text()),
                 pointer="definitions/fuzz")


class TestConfigAndErrors:
    def test_config_file_merged_flags_win(self, capsys, tmp_path):
        cfg = tmp_path / "cfg.json"
        cfg.write_text(json.dumps({"rotation": 0.3, "tol": 1e-9}))
        code, out, _ = run_cli(["cz-index", "--config", str(cfg)], capsys)
        assert code == 0 and "index 1" in out
        code, out, _ = run_cli(["cz-index", "--config", str(cfg),
                                "--rotation", "1.2"], capsys)
        assert code == 0 and "index 3" in out

    def test_unknown_config_key_rejected(self, capsys, tmp_path):
        cfg = tmp_path / "cfg.json"
        cfg.write_text(json.dumps({"rotation": 0.3, "frobnicate": 1}))
        code, _, err = run_cli(["cz-index", "--config", str(cfg)], capsys)
        assert code == 2 and "frobnicate" in err

    def test_nonpositive_tolerance_rejected(self, capsys, tmp_path):
        cfg = tmp_path / "cfg.json"
        cfg.write_text(json.dumps({"rotation": 0.3, "tol": -1.0}))
        code, _, err = run_cli(["cz-index", "--config", str(cfg)], capsys)
        assert code == 2

    def test_validation_error_exit_2(self, capsys, tmp_path):
        matrix = tmp_path / "m.json"
        matrix.write_text(json.dumps([[2.0, 0.0], [0.0, 2.0]]))
        code, _, err = run_cli(["williamson", "--matrix", str(matrix)], capsys)
        assert code == 2

    def test_audit_failure_exit_3(self, capsys, tmp_path, sqrt2_system_file):
        blob = json.loads(sqrt2_system_file.read_text())
        # resonant companion whose action gap exceeds sigma: not excludable
        blob["orbits"].append({
            "period": 4.0,
            "profile": {"loop_index": 0, "elliptic": [], "hyperbolic": [4],
                        "degenerate": None},
            "hyperbolic": True, "locally_maximal": False})
        blob["constants"]["sigma"] = 0.45    # still above C * eta = 0.4
        bad = tmp_path / "bad.json"
        bad.write_text(json.dumps(blob))
        code, _, err = run_cli(["audit-lemma", "--system", str(bad),
                                "--count", "1"], capsys)
        # the resonant gap stays below C*eta < sigma, so this should PASS;
        # to force a failure shrink sigma is not allowed by the constructor.
        # Instead: failure via no solutions below a tiny horizon.
        code2, _, err2 = run_cli(["audit-lemma", "--system", str(sqrt2_system_file),
                                  "--k-bound", "10", "--count", "1"], capsys)
        assert code2 == 3 and "audit failed" in err2

    def test_deterministic_outputs_byte_identical(self, capsys, tmp_path,
                                                  sqrt2_system_file):
        a, b = tmp_path / "a.json", tmp_path / "b.json"
        run_cli(["audit-lemma", "--system", str(sqrt2_system_file),
                 "--count", "2", "--out", str(a)], capsys)
        run_cli(["audit-lemma", "--system", str(sqrt2_system_file),
                 "--count", "2", "--out", str(b)], capsys)
        assert a.read_bytes() == b.read_bytes()

    def test_orbit_system_schema(self, sqrt2_system_file):
        validate("orbit_system.schema.json",
                 json.loads(sqrt2_system_file.read_text()))


def test_console_entry_point():
    proc = subprocess.run([sys.executable, "-m", "reeb_lab.cli", "--version"],
                          capture_output=True, text=True)
    assert proc.returncode == 0
