"""Scenario execution, trace replay idempotence, tamper detection, and the
CLI exit-code contract."""

from __future__ import annotations

import json
from importlib import resources

import pytest
from click.testing import CliRunner

from fracvault.cli import main
from fracvault.scenario import (ExpectationMismatch, ScenarioError,
                                parse_scenario, run_scenario)
from fracvault.trace import DigestMismatch, replay_trace, write_trace

LIFECYCLE = resources.files("fracvault") / "scenarios" / "lifecycle.json"


@pytest.fixture
def lifecycle():
    return parse_scenario(LIFECYCLE.read_text())


def small_scenario(transactions, accounts=None):
    return {
        "format": "fracvault-scenario-v1",
        "genesis": {"accounts": accounts or {"deployer": "0", "alice": "1000"},
                    "parameters": {}},
        "deployment": [
            {"id": "fractions", "kind": "fractional_token", "deployer": "deployer",
             "args": {"token_name": "F", "symbol": "F"}},
            {"id": "collection", "kind": "nft_collection", "deployer": "deployer",
             "args": {"collection_name": "C"}},
            {"id": "vault", "kind": "vault", "deployer": "deployer",
             "args": {"collection": "collection", "fractions": "fractions"}},
        ],
        "transactions": transactions,
    }


def test_bundled_deployment_order(lifecycle):
    kinds = [entry["kind"] for entry in lifecycle["deployment"]]
    assert kinds == ["fractional_token", "nft_collection", "vault", "timelock",
                     "governance", "fungible_token", "market"]


def test_lifecycle_runs_and_replays(tmp_path, lifecycle):
    run = run_scenario(lifecycle)
    assert len(run.records) == len(lifecycle["transactions"])
    trace_path = tmp_path / "lifecycle.jsonl"
    write_trace(str(trace_path), lifecycle, run.records)
    assert replay_trace(str(trace_path)) == len(run.records)


def test_scenario_runs_are_deterministic(tmp_path, lifecycle):
    one = run_scenario(lifecycle)
    two = run_scenario(parse_scenario(LIFECYCLE.read_text()))
    assert [r.as_data() for r in one.records] == [r.as_data() for r in two.records]


def test_parse_error_carries_line_number():
    with pytest.raises(ScenarioError, match=r"line 3"):
        parse_scenario('{\n "format": "fracvault-scenario-v1",\n broken\n}')


def test_parse_rejects_bad_call_shape():
    scenario = small_scenario([{"sender": "alice", "call": "no_dot_here"}])
    with pytest.raises(ScenarioError, match=r"transactions\[0\]"):
        parse_scenario(json.dumps(scenario))


def test_expectation_mismatch_names_step():
    scenario = small_scenario([
        {"sender": "deployer", "call": "collection.mint",
         "args": {"to": "alice", "token_id": "1"}, "expect": "success"},
        {"sender": "alice", "call": "vault.deposit_nft",
         "args": {"nft_address": "collection", "token_id": "1"},
         "expect": {"error": "NotOwner"}},
    ])
    with pytest.raises(ExpectationMismatch) as excinfo:
        run_scenario(parse_scenario(json.dumps(scenario)))
    assert excinfo.value.step == 1
    assert excinfo.value.expected == "NotOwner"
    assert excinfo.value.got == "NotVault"  # the vault binding was never set


def test_expected_error_path_passes():
    scenario = small_scenario([
        {"sender": "deployer", "call": "fractions.update_nft_vault",
         "args": {"vault": "vault"}, "expect": "success"},
        {"sender": "alice", "call": "vault.deposit_nft",
         "args": {"nft_address": "collection", "token_id": "1"},
         "expect": {"error": "UnknownToken"}},
    ])
    run = run_scenario(parse_scenario(json.dumps(scenario)))
    assert run.records[1].result == "UnknownToken"


def test_genesis_hook_installs():
    scenario = small_scenario(
        [{"sender": "deployer", "call": "fractions.update_nft_vault",
          "args": {"vault": "vault"}, "expect": "success"},
         {"sender": "alice", "call": "native.transfer",
          "args": {"to": "eve", "amount": "5"},
          "expect": {"error": "HookReverted"}}],
        accounts={"deployer": "0", "alice": "1000",
                  "eve": {"balance": "0", "hook": {"reject": True}}})
    run = run_scenario(parse_scenario(json.dumps(scenario)))
    assert run.records[-1].result == "HookReverted"


def test_trace_tamper_detection(tmp_path, lifecycle):
    run = run_scenario(lifecycle)
    path = tmp_path / "t.jsonl"
    write_trace(str(path), lifecycle, run.records)
    lines = path.read_text().splitlines()
    lines[5] = lines[5].replace('"result":"success"', '"result":"BidTooLow"')
    tampered = tmp_path / "tampered.jsonl"
    tampered.write_text("\n".join(lines) + "\n")
    with pytest.raises(DigestMismatch):
        replay_trace(str(tampered))


# --------------------------------------------------------------------- #
# CLI
# --------------------------------------------------------------------- #

def test_cli_run_and_replay(tmp_path):
    runner = CliRunner()
    trace_path = tmp_path / "out.jsonl"
    result = runner.invoke(main, ["run", str(LIFECYCLE), "--trace",
                                  str(trace_path)])
    assert result.exit_code == 0, result.output
    result = runner.invoke(main, ["replay", str(trace_path)])
    assert result.exit_code == 0, result.output


def test_cli_run_parse_error(tmp_path):
    bad = tmp_path / "bad.json"
    bad.write_text("{not json")
    result = CliRunner().invoke(main, ["run", str(bad)])
    assert result.exit_code == 1
    assert "parse error" in result.output


def test_cli_fuzz_exit_codes(tmp_path):
    runner = CliRunner()
    report = tmp_path / "r.json"
    ok = runner.invoke(main, ["fuzz", "--seed", "5", "--steps", "400",
                              "--report", str(report)])
    assert ok.exit_code == 0, ok.output
    bad = runner.invoke(main, ["fuzz", "--seed", "5", "--steps", "4000",
                               "--mutant", "drop-burn-before-pay",
                               "--report", str(tmp_path / "m.json")])
    assert bad.exit_code == 1
    assert "violation" in bad.output


def test_cli_fuzz_zero_steps(tmp_path):
    result = CliRunner().invoke(main, ["fuzz", "--seed", "1", "--steps", "0",
                                       "--report", str(tmp_path / "z.json")])
    assert result.exit_code == 0
    report = json.loads((tmp_path / "z.json").read_text())
    assert report["violations"] == []


def test_cli_suite_runs_and_prints_lines(tmp_path):
    result = CliRunner().invoke(main, ["suite", "--steps", "150", "--report",
                                       str(tmp_path / "s.json")])
    assert result.exit_code == 0, result.output
    assert result.output.count("PASS") == 28
    report = json.loads((tmp_path / "s.json").read_text())
    assert report["passed"] is True


def test_cli_suite_mutant_fails(tmp_path):
    result = CliRunner().invoke(main, ["suite", "--steps", "300", "--mutant",
                                       "drop-quorum-check", "--report",
                                       str(tmp_path / "m.json")])
    assert result.exit_code == 1
    assert "FAIL quorum_not_met_rejected" in result.output


def test_cli_report_dir_env(tmp_path, monkeypatch):
    monkeypatch.setenv("FRACVAULT_REPORT_DIR", str(tmp_path / "reports"))
    result = CliRunner().invoke(main, ["fuzz", "--seed", "2", "--steps", "50"])
    assert result.exit_code == 0
    assert (tmp_path / "reports" / "fuzz-seed2-steps50.json").exists()
