from __future__ import annotations

import json

import pytest

from bcplus.cli import FAIL, OK, USAGE, main
from bcplus.config import ClientConfig
from bcplus.encode import parse_var_map
from bcplus.pipeline import ClientError, LiveClient, MockScriptMissing, ScriptedClient

from conftest import FIXTURES, MOCK_MCP

MCP = str(FIXTURES / "mcp" / "mcp.bc")
E03 = str(FIXTURES / "elaborations" / "e03_four_each.bc")


def run(capsys, *argv):
    code = main(list(argv))
    out = capsys.readouterr()
    return code, out.out, out.err


def test_empty_file(capsys, tmp_path):
    f = tmp_path / "empty.bc"
    f.write_text("% nothing here\n")
    code, out, _ = run(capsys, "parse", str(f))
    assert code == OK and "empty program" in out


def test_parse_summary(capsys):
    code, out, _ = run(capsys, "parse", MCP)
    assert code == OK and "queries" in out


def test_syntax_error_is_usage(capsys, tmp_path):
    f = tmp_path / "bad.bc"
    f.write_text(":- sorts\n  s\n")
    assert run(capsys, "parse", str(f))[0] == USAGE
    assert run(capsys, "check-sat", str(f))[0] == USAGE
    assert run(capsys, "solve", str(f))[0] == USAGE


def test_missing_file_and_bad_flag(capsys):
    assert run(capsys, "solve", "/no/such.bc")[0] == USAGE
    with pytest.raises(SystemExit) as e:
        main(["solve", MCP, "--no-such-flag"])
    assert e.value.code == USAGE


def test_check_sat(capsys):
    assert run(capsys, "check-sat", str(FIXTURES / "mcp" / "mcp_initial.bc"))[0] == FAIL
    code, out, _ = run(capsys, "check-sat", str(FIXTURES / "mcp" / "mcp_revised.bc"), "--stats")
    assert code == OK and "\nSATISFIABLE\n" in out and "Calls" in out


def test_solve_and_expect(capsys):
    code, out, _ = run(capsys, "solve", MCP)
    assert code == OK and "SATISFIABLE" in out
    assert run(capsys, "solve", E03)[0] == FAIL
    code, out, _ = run(capsys, "solve", E03, "--expect", "unsat")
    assert code == OK and "UNSATISFIABLE up to horizon 30" in out
    assert run(capsys, "solve", MCP, "--expect", "unsat")[0] == FAIL


def test_solve_unknown_query_label(capsys):
    assert run(capsys, "solve", MCP, "--query", "nope")[0] == USAGE


def test_export_cnf(capsys, tmp_path):
    cnf = tmp_path / "out.cnf"
    assert run(capsys, "solve", MCP, "--export-cnf", str(cnf))[0] == OK
    text = cnf.read_text()
    assert "p cnf" in text and parse_var_map(text)


def test_oracle(capsys):
    code, out, _ = run(capsys, "oracle", MCP)
    assert code == OK and "11 steps" in out
    code, out, _ = run(capsys, "oracle", MCP, "--bound", "5", "--expect", "unsat")
    assert code == OK and "no plan within 5" in out


def test_validate_text_json_and_tampered(capsys, tmp_path):
    _, text, _ = run(capsys, "solve", MCP)
    _, js, _ = run(capsys, "solve", MCP, "--json")
    plan_txt, plan_json = tmp_path / "p.txt", tmp_path / "p.json"
    plan_txt.write_text(text)
    plan_json.write_text(js)
    assert run(capsys, "validate", MCP, str(plan_txt))[0] == OK
    assert run(capsys, "validate", MCP, str(plan_json))[0] == OK
    rec = json.loads(js)
    rec["steps"][1], rec["steps"][2] = rec["steps"][2], rec["steps"][1]
    plan_json.write_text(json.dumps(rec))
    code, out, _ = run(capsys, "validate", MCP, str(plan_json))
    assert code == FAIL and ("invalid plan" in out or "does not match" in out)


def test_pipeline_mock(capsys, tmp_path):
    code, out, _ = run(capsys, "pipeline", str(MOCK_MCP / "problem.txt"), "--mock", str(MOCK_MCP),
                       "--transcript", str(tmp_path / "t"))
    assert code == OK
    summary = json.loads(out.splitlines()[0])
    assert summary["status"] == "ok"
    assert (tmp_path / "t" / "final_program.bc").is_file()


def test_pipeline_missing_mock_dir(capsys, tmp_path):
    assert run(capsys, "pipeline", str(MOCK_MCP / "problem.txt"), "--mock", str(tmp_path))[0] == USAGE


def test_bench_only(capsys, tmp_path):
    rep = tmp_path / "r.jsonl"
    code, out, _ = run(capsys, "bench", "--only", "river-basic", "--report", str(rep))
    assert code == OK and "1/1" in out
    assert json.loads(rep.read_text())["name"] == "river-basic"
    assert run(capsys, "bench", "--only", "nope")[0] == USAGE
    assert run(capsys, "bench", "--suite", "nope")[0] == USAGE


def test_bad_config(capsys, tmp_path):
    ini = tmp_path / "c.ini"
    ini.write_text("[nosuch]\nx = 1\n")
    assert run(capsys, "--config", str(ini), "parse", MCP)[0] == USAGE


# ------------------------------------------------------------------ clients


def test_scripted_client_falls_back_to_earlier_attempt():
    c = ScriptedClient({("rules", 1): "one"})
    assert c.complete("p", {"stage": "rules", "attempt": 3}) == "one"
    with pytest.raises(MockScriptMissing):
        c.complete("p", {"stage": "other", "attempt": 1})
    assert c.calls == [("rules", 3), ("other", 1)]


def test_scripted_client_from_dir(tmp_path):
    assert ScriptedClient.from_dir(MOCK_MCP).scripts[("signature", 1)]
    with pytest.raises(MockScriptMissing):
        ScriptedClient.from_dir(tmp_path)


def test_live_client_needs_a_key(monkeypatch):
    monkeypatch.delenv("BCPLUS_TEST_NO_KEY", raising=False)
    c = LiveClient(ClientConfig(api_key_env="BCPLUS_TEST_NO_KEY", base_url="http://127.0.0.1:9/"))
    with pytest.raises(ClientError):
        c.complete("hi", {"stage": "signature", "attempt": 1})
