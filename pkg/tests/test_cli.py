from __future__ import annotations

import json
import subprocess
import sys

import jsonschema
import pytest

from hierpi.cli import REPORT_SCHEMA, main, run, validate_report

from conftest import CORPUS

C = str(CORPUS)

COMMANDS = [
    ["parse", f"{C}/server_client.pi"],
    ["nf", f"{C}/stack.pi"],
    ["forest", f"{C}/server_client_annotated.pi"],
    ["phi", f"{C}/server_client_annotated.pi", "--forest", f"{C}/scmd.json"],
    ["compat", f"{C}/tied_to.pi", "--forest", f"{C}/tied_ab.json"],
    ["shaped", f"{C}/server_client_annotated.pi", "--forest", f"{C}/scmd.json"],
    ["typecheck", f"{C}/server_client_annotated.pi", "--forest", f"{C}/scmd.json"],
    ["infer", f"{C}/server_client.pi"],
    ["infer", f"{C}/stack.pi"],
    ["explore", f"{C}/self_send.pi"],
    ["depth", f"{C}/server_client.pi", "--max-states", "20"],
    ["nda", "simulate", f"{C}/two_level.json"],
    ["nda", "encode-to-pi", f"{C}/two_level.json"],
    ["nda", "encode-from-pi", f"{C}/self_send.pi", "--forest", f"{C}/self_send.json"],
    ["bisim", f"{C}/self_send.pi", "--forest", f"{C}/self_send.json"],
    ["bisim", f"{C}/two_level.json", "--rounds", "3"],
    ["random", "--seed", "4"],
]


def _json(capsys, argv):
    code = main(argv + ["--json"])
    doc = json.loads(capsys.readouterr().out)
    return code, doc


@pytest.mark.parametrize("argv", COMMANDS, ids=lambda a: " ".join(a[:2]).replace(C + "/", ""))
def test_reports_validate(capsys, argv):
    code, doc = _json(capsys, argv)
    jsonschema.validate(doc, REPORT_SCHEMA)
    assert doc["command"].split()[0] == argv[0]
    assert code == {"ok": 0, "unknown": 0, "negative": 1, "error": 2}[doc["verdict"]]


def test_global_json_flag(capsys):
    assert main(["--json", "parse", f"{C}/stack.pi"]) == 0
    validate_report(json.loads(capsys.readouterr().out))


def test_infer_exit_codes(capsys):
    assert main(["infer", f"{C}/server_client.pi"]) == 0
    out = capsys.readouterr().out
    assert "t_s◃t_c◃t_m◃t_d" in out
    assert main(["infer", f"{C}/stack.pi"]) == 1
    assert "inconsistent with s : t_s[t_a], b : t_a" in capsys.readouterr().out


def test_parse_error_exits_2(tmp_path, capsys):
    bad = tmp_path / "bad.pi"
    bad.write_text("new a. (a<a>.0 | ")
    assert main(["parse", str(bad)]) == 2
    code, doc = _json(capsys, ["infer", str(bad)])
    assert code == 2 and doc["verdict"] == "error" and "error" in doc["details"]


def test_typecheck_negative(capsys):
    code, doc = _json(capsys, ["typecheck", f"{C}/migration.pi", "--forest", f"{C}/scmd.json"])
    assert code == 2  # bases of the migration fixture are not in the chain


def test_infer_emit_forest(tmp_path, capsys):
    out = tmp_path / "T.json"
    assert main(["infer", f"{C}/server_client.pi", "--emit-forest", str(out)]) == 0
    data = json.loads(out.read_text())
    assert set(data["nodes"]) == {"t_s", "t_c", "t_m", "t_d"}


def test_infer_checks_given_forest(capsys):
    code, doc = _json(capsys, ["infer", f"{C}/server_client_annotated.pi",
                               "--forest", f"{C}/scmd.json"])
    assert code == 0 and doc["verdict"] == "ok"


def test_run_returns_report():
    code, report, as_json = run(["compat", f"{C}/tied_to.pi", "--forest", f"{C}/tied_ab.json"])
    assert code == 0 and not as_json and report.verdict == "ok"
    assert report.timings and all(v >= 0 for v in report.timings.values())


def test_console_script():
    res = subprocess.run([sys.executable, "-m", "hierpi.cli", "infer", f"{C}/stack.pi"],
                         capture_output=True, text=True)
    assert res.returncode == 1
