import csv
import io
import json

import pytest

from dpnls import cli, stability
from dpnls.errors import ConsistencyError, QuadratureError


def call(*argv):
    out, err = io.StringIO(), io.StringIO()
    code = cli.run(list(argv), stdout=out, stderr=err)
    return code, out.getvalue(), err.getvalue()


def ok_json(*argv):
    code, out, err = call(*argv)
    assert code == 0, err
    return json.loads(out)


def ok_csv(*argv):
    code, out, err = call(*argv)
    assert code == 0, err
    head, body = out.split("\n", 1)
    assert head.startswith("# ")
    return json.loads(head[2:]), list(csv.reader(io.StringIO(body)))


class TestExamples:
    def test_classify_stable_all(self):
        doc = ok_json("classify", "--p", "2", "--q", "3")
        assert doc["report"]["regime"] == "stable_all"

    def test_limit_divergent(self):
        doc = ok_json("limit", "--p", "2.5", "--q", "3")
        assert doc["limit"]["kind"] == "negative_infinity"

    def test_threshold(self):
        doc = ok_json("threshold", "--p", "3", "--q", "4")
        assert 0 < doc["omega_star"] < doc["omega0"]
        assert doc["regime"] == "sharp_threshold"

    def test_threshold_absent(self):
        doc = ok_json("threshold", "--p", "2", "--q", "3")
        assert doc["omega_star"] is None and doc["regime"] == "stable_all"


class TestCommands:
    def test_dmass_sign(self):
        doc = ok_json("dmass", "--p", "2", "--q", "3", "--omega", "0.3")
        assert doc["dmass"] > 0 and doc["sign"] == 1

    def test_critical_points(self):
        doc = ok_json("critical-points", "--p", "2", "--q", "3")
        assert set(doc["critical_points"]) >= {"h0", "s0", "t2", "omega0"}
        assert doc["ordering_flags"]["s0_le_t2"] is True

    def test_h_limit_side_by_side(self):
        doc = ok_json("h-limit", "--p", "2", "--q", "4")
        assert not doc["divergent"]
        assert doc["quadrature"] == pytest.approx(doc["closed_form"], rel=1e-10)
        assert doc["series"] == pytest.approx(doc["closed_form"], rel=1e-8)

    def test_h_limit_divergent(self):
        doc = ok_json("h-limit", "--p", "3", "--q", "4")
        assert doc["divergent"] is True and doc["quadrature"] is None

    def test_audit(self):
        doc = ok_json("audit", "--p", "2", "--q", "4")
        assert doc["passed"] is True

    def test_classify_gap_intervals_tile(self):
        ivs = ok_json("classify", "--p", "1.5", "--q", "4.5")["report"]["theory_intervals"]
        for left, right in zip(ivs, ivs[1:]):
            assert left["upper"] == right["lower"]
            assert left["upper_closed"] != right["lower_closed"]

    def test_profile_csv(self):
        meta, rows = ok_csv("profile", "--p", "2", "--q", "3", "--omega", "0.3",
                            "--n-samples", "65")
        assert rows[0] == ["x", "phi"] and len(rows) == 66
        x0, phi0 = map(float, rows[1])
        assert x0 == 0.0 and phi0 == pytest.approx(meta["peak"])
        assert meta["config"]["command"] == "profile"

    def test_profile_json(self):
        doc = ok_json("profile", "--p", "2", "--q", "3", "--omega", "0.3",
                      "--n-samples", "9", "--format", "json")
        assert len(doc["x"]) == len(doc["phi"]) == 9

    def test_simulate_csv(self):
        meta, rows = ok_csv("simulate", "--p", "2", "--q", "3", "--omega", "0.3",
                            "--t-end", "0.2", "--record-every", "0.1")
        assert rows[0] == ["t", "orbital_distance", "mass", "energy"]
        assert len(rows) == 4
        assert meta["verdict_is_heuristic"] is True
        assert meta["verdict_hint"] in {"consistent_with_stable", "consistent_with_unstable",
                                        "inconclusive"}

    def test_region_scan_sorted(self):
        meta, rows = ok_csv("region-scan", "--p-min", "2", "--p-max", "3", "--p-steps", "3",
                            "--q-min", "3.5", "--q-max", "4.5", "--q-steps", "3",
                            "--workers", "2")
        assert rows[0] == ["p", "q", "regime", "omega_star"]
        keys = [(float(r[0]), float(r[1])) for r in rows[1:]]
        assert keys == sorted(keys) and len(keys) == 9
        for r in rows[1:]:
            assert (r[3] != "") == (r[2] == "sharp_threshold")

    def test_region_scan_skips_invalid_cells(self):
        _, rows = ok_csv("region-scan", "--p-min", "2", "--p-max", "4", "--p-steps", "2",
                         "--q-min", "3", "--q-max", "4.5", "--q-steps", "2", "--workers", "1")
        assert all(float(r[1]) > float(r[0]) for r in rows[1:])

    def test_region_scan_serial_matches_parallel(self):
        args = ("region-scan", "--p-steps", "3", "--q-steps", "3")
        serial = call(*args, "--workers", "1")[1]
        parallel = call(*args, "--workers", "3")[1]
        body = lambda s: s.split("\n", 1)[1]
        assert body(serial) == body(parallel)


class TestProvenance:
    def test_config_echo(self):
        doc = ok_json("dmass", "--p", "2", "--q", "3", "--omega", "0.3", "--quad-tol", "1e-10")
        cfg = doc["config"]
        assert doc["schema"] == 1
        assert cfg == {"command": "dmass", "p": 2.0, "q": 3.0, "omega": 0.3,
                       "quad_tol": 1e-10, "root_tol": 1e-12, "series_tol": 1e-12,
                       "output_format": "json"}

    def test_deterministic_bytes(self):
        argv = ("classify", "--p", "3", "--q", "4")
        assert call(*argv)[1] == call(*argv)[1]

    def test_fifteen_significant_digits(self):
        _, out, _ = call("dmass", "--p", "2", "--q", "3", "--omega", "0.3")
        value = json.loads(out)["dmass"]
        assert len(repr(value).replace(".", "").lstrip("0")) <= 15

    def test_out_path(self, tmp_path):
        target = tmp_path / "limit.json"
        code, out, _ = call("limit", "--p", "2", "--q", "4", "--out", str(target))
        assert code == 0 and out == ""
        assert json.loads(target.read_text())["limit"]["kind"] == "finite"


class TestExitCodes:
    @pytest.mark.parametrize("argv", [
        [],
        ["classify", "--p", "2"],
        ["dmass", "--p", "two", "--q", "3", "--omega", "1"],
        ["launch"],
        ["classify", "--p", "2", "--q", "3", "--format", "xml"],
    ])
    def test_usage(self, argv):
        code, out, err = call(*argv)
        assert code == 1 and out == "" and err

    @pytest.mark.parametrize("argv", [
        ["classify", "--p", "3", "--q", "2"],
        ["dmass", "--p", "0.5", "--q", "3", "--omega", "1"],
        ["dmass", "--p", "2", "--q", "3", "--omega", "-1"],
        ["critical-points", "--p", "2", "--q", "6"],
        ["simulate", "--p", "2", "--q", "3", "--omega", "0.3", "--perturbation", "scale",
         "--eps", "0"],
    ])
    def test_domain(self, argv):
        code, _, err = call(*argv)
        assert code == 2 and "domain error" in err

    def test_numeric(self, monkeypatch):
        def boom(*a, **k):
            raise QuadratureError("no convergence")
        monkeypatch.setattr(stability, "dmass", boom)
        code, _, err = call("dmass", "--p", "2", "--q", "3", "--omega", "0.3")
        assert code == 3 and "no convergence" in err

    def test_inconsistency(self, monkeypatch):
        def boom(*a, **k):
            raise ConsistencyError("dual computation mismatch")
        monkeypatch.setattr(stability, "classify", boom)
        code, _, err = call("classify", "--p", "2", "--q", "3")
        assert code == 4 and "mismatch" in err

    def test_help_lists_csv_columns(self, capsys):
        with pytest.raises(SystemExit) as info:
            cli.run(["simulate", "--help"])
        assert info.value.code == 0
        assert "orbital_distance" in capsys.readouterr().out


def test_module_entry_point():
    import subprocess
    import sys
    res = subprocess.run([sys.executable, "-m", "dpnls", "limit", "--p", "2", "--q", "3"],
                         capture_output=True, text=True, check=False)
    assert res.returncode == 0
    assert json.loads(res.stdout)["limit"]["value"] == 0
