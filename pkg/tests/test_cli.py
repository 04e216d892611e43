"""Command-line interface: exit codes, formats, loaders, verify suites."""

import json

import pytest

from nahmpole import cli
from nahmpole.geometry import load_background
from nahmpole.series import from_json, to_json


MATCHED_S3 = {"c_minus": [["-2/3", "0", "0"],
                          ["0", "-2/3", "0"],
                          ["0", "0", "-2/3"]]}


@pytest.fixture(autouse=True)
def plain_output(monkeypatch):
    monkeypatch.setenv("NAHM_COLOR", "0")


def _write_json(tmp_path, name, doc):
    p = tmp_path / name
    p.write_text(json.dumps(doc))
    return str(p)


class TestBackgrounds:
    def test_lists_catalog(self, capsys):
        assert cli.main(["backgrounds"]) == 0
        out = capsys.readouterr().out
        for name in ("flat", "round-s3", "hyperbolic-h3", "berger-s3", "h2xr"):
            assert f"builtin:{name}" in out
        assert "einstein" in out and "non-einstein" in out
        assert "squash=Q" in out


class TestExpand:
    def test_json_output_round_trips(self, capsys, tmp_path, field):
        free = _write_json(tmp_path, "free.json", MATCHED_S3)
        out_file = tmp_path / "series.json"
        code = cli.main(["expand", "--background", "builtin:round-s3",
                         "--free-data", free, "--order", "6",
                         "--format", "json", "--out", str(out_file)])
        assert code == 0
        text = out_file.read_text()
        bg = load_background("builtin:round-s3", field)
        series = from_json(text, background=bg)
        assert to_json(series) == text
        err = capsys.readouterr().err
        assert "log_free=true" in err
        assert "einstein=true" in err
        assert "parity=ok" in err

    def test_csv_contains_known_coefficient(self, capsys, tmp_path):
        free = _write_json(tmp_path, "free.json", MATCHED_S3)
        code = cli.main(["expand", "--background", "builtin:round-s3",
                         "--free-data", free, "--order", "4",
                         "--format", "csv"])
        assert code == 0
        out = capsys.readouterr().out
        lines = out.strip().split("\n")
        assert lines[0].startswith("k,p,")
        k4 = [ln for ln in lines if ln.startswith("4,0,")]
        assert len(k4) == 1
        assert "2/9" in k4[0]

    def test_pretty_contains_known_coefficient(self, capsys, tmp_path):
        free = _write_json(tmp_path, "free.json", MATCHED_S3)
        code = cli.main(["expand", "--background", "builtin:round-s3",
                         "--free-data", free, "--order", "4",
                         "--format", "pretty"])
        assert code == 0
        out = capsys.readouterr().out
        assert "2/9" in out
        # a log-free series renders no log-weighted blocks
        assert "log" not in out

    def test_log_background_summary(self, capsys):
        code = cli.main(["expand", "--background",
                         "builtin:berger-s3?squash=2", "--order", "3",
                         "--format", "pretty"])
        assert code == 0
        captured = capsys.readouterr()
        assert "(log y)^1" in captured.out
        assert "log_free=false" in captured.err
        assert "einstein=false" in captured.err
        assert "parity=ok" in captured.err

    def test_float_mode(self, capsys, tmp_path):
        code = cli.main(["expand", "--background", "builtin:round-s3",
                         "--order", "3", "--scalar", "float",
                         "--prec", "128", "--format", "json"])
        assert code == 0
        doc = json.loads(capsys.readouterr().out)
        assert doc["background"] == "round-s3"

    def test_unknown_background(self, capsys):
        assert cli.main(["expand", "--background", "builtin:nosuch"]) == 1
        assert "cannot load background" in capsys.readouterr().err

    def test_missing_background_file(self, capsys, tmp_path):
        missing = str(tmp_path / "nope.json")
        assert cli.main(["expand", "--background", missing]) == 1

    def test_low_order(self, capsys):
        assert cli.main(["expand", "--background", "builtin:flat",
                         "--order", "1"]) == 1
        assert "order" in capsys.readouterr().err

    def test_low_precision(self, capsys):
        assert cli.main(["expand", "--background", "builtin:flat",
                         "--scalar", "float", "--prec", "32"]) == 1
        assert "precision" in capsys.readouterr().err


class TestFreeDataLoader:
    def test_rejects_off_eigenspace_exact(self, capsys, tmp_path):
        bad = {"c_plus": [["1", "0", "0"], ["0", "1", "0"], ["0", "0", "1"]]}
        free = _write_json(tmp_path, "bad.json", bad)
        code = cli.main(["expand", "--background", "builtin:round-s3",
                         "--free-data", free])
        assert code == 1
        assert "eigenspace" in capsys.readouterr().err

    def test_rejects_unknown_keys(self, capsys, tmp_path):
        free = _write_json(tmp_path, "bad.json", {"c_bogus": []})
        code = cli.main(["expand", "--background", "builtin:round-s3",
                         "--free-data", free])
        assert code == 1
        assert "unknown free-data keys" in capsys.readouterr().err

    def test_rejects_malformed_json(self, capsys, tmp_path):
        p = tmp_path / "bad.json"
        p.write_text("{not json")
        code = cli.main(["expand", "--background", "builtin:round-s3",
                         "--free-data", str(p)])
        assert code == 1

    def test_float_mode_accepts_near_eigenspace(self, tmp_path, capsys):
        # a value off V+ by ~1e-12 passes the float-mode gate
        near = {"c_plus": [["1.000000000001", "0", "0"],
                           ["0", "-0.5", "0"],
                           ["0", "0", "-0.5"]]}
        free = _write_json(tmp_path, "near.json", near)
        code = cli.main(["expand", "--background", "builtin:round-s3",
                         "--free-data", free, "--scalar", "float",
                         "--prec", "128", "--order", "2"])
        assert code == 0

    def test_float_mode_rejects_far_eigenspace(self, tmp_path, capsys):
        far = {"c_plus": [["1", "0", "0"], ["0", "1", "0"], ["0", "0", "1"]]}
        free = _write_json(tmp_path, "far.json", far)
        code = cli.main(["expand", "--background", "builtin:round-s3",
                         "--free-data", free, "--scalar", "float",
                         "--prec", "128"])
        assert code == 1
        assert "eigenspace" in capsys.readouterr().err


class TestVerify:
    @pytest.mark.parametrize("suite", ["s3", "hyperbolic", "flat",
                                       "identities", "einstein-catalog"])
    def test_suites_pass(self, capsys, suite):
        assert cli.main(["verify", suite]) == 0
        out = capsys.readouterr().out
        assert "PASS" in out
        assert "FAIL" not in out
        assert "checks passed" in out
        assert "\x1b[" not in out  # NAHM_COLOR=0 strips ANSI

    def test_failing_suite_exits_three(self, capsys, monkeypatch):
        monkeypatch.setitem(cli._SUITES, "s3",
                            lambda: [("forced failure", False, "details here")])
        assert cli.main(["verify", "s3"]) == 3
        out = capsys.readouterr().out
        assert "FAIL forced failure" in out
        assert "details here" in out
        assert "0/1 checks passed" in out

    def test_unknown_suite(self, capsys):
        assert cli.main(["verify", "bogus"]) == 1


class TestOdeCompare:
    def test_flat_runs_and_writes_csv(self, capsys, tmp_path):
        out_file = tmp_path / "conv.csv"
        code = cli.main(["ode-compare", "flat", "--order", "2,3",
                         "--out", str(out_file)])
        assert code == 0
        lines = out_file.read_text().strip().split("\n")
        assert lines[0] == "N,max_err,slope"
        assert len(lines) == 3
        assert "ode check:" in capsys.readouterr().err

    def test_unknown_solution(self, capsys):
        assert cli.main(["ode-compare", "bogus"]) == 1
        assert "no closed-form solution" in capsys.readouterr().err

    def test_bad_order_list(self, capsys):
        assert cli.main(["ode-compare", "flat", "--order", "2,x"]) == 1

    def test_orders_below_two(self, capsys):
        assert cli.main(["ode-compare", "flat", "--order", "1,2"]) == 1


class TestUsage:
    def test_no_command(self):
        assert cli.main([]) == 1

    def test_unknown_command(self):
        assert cli.main(["frobnicate"]) == 1

    def test_unknown_flag(self):
        assert cli.main(["backgrounds", "--nope"]) == 1

    def test_bad_format_choice(self):
        assert cli.main(["expand", "--background", "builtin:flat",
                         "--format", "yaml"]) == 1
