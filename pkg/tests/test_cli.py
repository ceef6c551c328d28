"""Tests for the command-line interface."""
import json

import pytest
from click.testing import CliRunner

from conftest import protocol_path, read_fixture
from crmpst.cli import EXIT_FAILED, EXIT_INCONCLUSIVE, EXIT_IO, EXIT_OK, cli

LOGGING = protocol_path("logging.crmpst")
LOGGING_PROC = protocol_path("logging.crproc")
NBAC = protocol_path("nbac.crmpst")
NBAC_PROC = protocol_path("nbac.crproc")
LOGGING_PROC_TEXT = read_fixture("logging.crproc")
UNPROJECTABLE = (
    "global protocol Bad(reliable role A, reliable role B, reliable role C) {\n"
    "    choice at A { x from A to B; y from C to B; } or { z from A to B; w from C to B; }\n"
    "}\n"
)


@pytest.fixture
def runner():
    return CliRunner()


def invoke(runner, *args):
    return runner.invoke(cli, list(args), env={"CRMPST_COLOR": "0"})


class TestCheck:
    def test_logging(self, runner):
        result = invoke(runner, "check", LOGGING)
        assert result.exit_code == EXIT_OK
        assert "I ⊕ read. I & report(Str). end" in result.output

    def test_missing_crash_branch(self, runner):
        result = invoke(runner, "check", protocol_path("broken.crmpst"))
        assert result.exit_code == EXIT_FAILED
        assert "error [MissingCrashBranch]" in result.output
        assert "broken.crmpst:4:" in result.output

    def test_empty_protocol(self, runner):
        result = invoke(runner, "check", protocol_path("empty.crmpst"))
        assert result.exit_code == EXIT_OK
        assert "end" in result.output

    def test_unreadable_file(self, runner, tmp_path):
        result = invoke(runner, "check", str(tmp_path / "missing.crmpst"))
        assert result.exit_code == EXIT_IO
        assert "cannot read" in result.output

    def test_unprojectable(self, runner, tmp_path):
        path = tmp_path / "bad.crmpst"
        path.write_text(UNPROJECTABLE, encoding="utf-8")
        result = invoke(runner, "check", str(path))
        assert result.exit_code == EXIT_FAILED
        assert "error [Projection]" in result.output


class TestVerify:
    def test_nbac(self, runner):
        result = invoke(runner, "verify", NBAC)
        assert result.exit_code == EXIT_OK
        for check in ("safety", "deadlock_freedom", "liveness", "correspondence"):
            assert check in result.output

    def test_json_report(self, runner):
        result = invoke(runner, "verify", LOGGING, "--json")
        assert result.exit_code == EXIT_OK
        report = json.loads(result.output)
        assert report["protocol"] == "Logging"
        assert report["reliable"] == ["I", "L"]
        assert report["checks"]["safety"] == {"status": "holds", "witness": None, "reason": ""}
        assert report["projections"]["C"] == "I ⊕ read. I & report(Str). end"
        assert report["bounds"]["queue_bound"] == 8

    def test_unbounded_producer_is_inconclusive(self, runner):
        result = invoke(runner, "verify", protocol_path("producer.crmpst"), "--bound", "2")
        assert result.exit_code == EXIT_INCONCLUSIVE
        assert "inconclusive" in result.output

    def test_bound_must_be_positive(self, runner):
        result = invoke(runner, "verify", LOGGING, "--bound", "0")
        assert result.exit_code == 2


class TestSimulate:
    def test_global(self, runner):
        result = invoke(runner, "simulate", LOGGING, "--depth", "1")
        assert result.exit_code == EXIT_OK
        for label in ("Send(L,I,trigger)", "Send(C,I,read)", "Crash(C)"):
            assert label in result.output

    def test_config(self, runner):
        result = invoke(runner, "simulate", LOGGING, "--config", "--depth", "2")
        assert result.exit_code == EXIT_OK
        assert "Recv(I,L,trigger)" in result.output
        assert "C: stop" in result.output

    def test_config_of_unprojectable_protocol(self, runner, tmp_path):
        path = tmp_path / "bad.crmpst"
        path.write_text(UNPROJECTABLE, encoding="utf-8")
        result = invoke(runner, "simulate", str(path), "--config")
        assert result.exit_code == EXIT_FAILED
        assert "error [Projection]" in result.output
        assert result.exception is None or isinstance(result.exception, SystemExit)


class TestTypecheck:
    def test_logging(self, runner):
        result = invoke(runner, "typecheck", LOGGING, LOGGING_PROC)
        assert result.exit_code == EXIT_OK
        assert "Logging: session is well typed" in result.output

    def test_ill_typed(self, runner, tmp_path):
        path = tmp_path / "bad.crproc"
        path.write_text(LOGGING_PROC_TEXT.replace("recv I { report(x) -> end }", "end"), encoding="utf-8")
        result = invoke(runner, "typecheck", LOGGING, str(path))
        assert result.exit_code == EXIT_FAILED
        assert "[Inaction] C:" in result.output

    def test_lax(self, runner, tmp_path):
        path = tmp_path / "lax.crproc"
        path.write_text(LOGGING_PROC_TEXT.replace("report(x) -> end }", "report(x) -> end, retry -> end }"),
                        encoding="utf-8")
        assert invoke(runner, "typecheck", LOGGING, str(path)).exit_code == EXIT_FAILED
        result = invoke(runner, "typecheck", "--lax", LOGGING, str(path))
        assert result.exit_code == EXIT_OK
        assert "warning [ExtraBranch]" in result.output

    def test_missing_process(self, runner, tmp_path):
        path = tmp_path / "short.crproc"
        path.write_text("role C = end; role L = end", encoding="utf-8")
        result = invoke(runner, "typecheck", LOGGING, str(path))
        assert result.exit_code == EXIT_FAILED
        assert "MissingProcess" in result.output


class TestRun:
    def test_logging(self, runner):
        result = invoke(runner, "run", LOGGING, LOGGING_PROC)
        assert result.exit_code == EXIT_OK
        lines = result.output.splitlines()
        assert len(lines) == 10
        assert lines[0].split()[:2] == ["1", "Send(C,I,read)"]

    def test_scheduled_crash(self, runner):
        result = invoke(runner, "run", LOGGING, LOGGING_PROC, "--crash", "C@0", "--check")
        assert result.exit_code == EXIT_OK
        assert "CrashDetect(I,C)" in result.output

    def test_reliable_role_cannot_crash(self, runner):
        result = invoke(runner, "run", LOGGING, LOGGING_PROC, "--crash", "L@0")
        assert result.exit_code == 2
        assert "not an unreliable role" in result.output

    @pytest.mark.parametrize("value", ["C", "C@", "@3", "C@x"])
    def test_malformed_crash(self, runner, value):
        assert invoke(runner, "run", LOGGING, LOGGING_PROC, "--crash", value).exit_code == 2

    def test_nbac_seeded(self, runner):
        result = invoke(runner, "run", NBAC, NBAC_PROC, "--seed", "42", "--check")
        assert result.exit_code == EXIT_OK
        assert "Crash(L)" in result.output

    def test_step_budget(self, runner):
        result = invoke(runner, "run", NBAC, NBAC_PROC, "--max-steps", "20")
        assert result.exit_code == EXIT_INCONCLUSIVE
        assert "step budget of 20 exhausted" in result.output

    def test_json_is_stable(self, runner):
        first = invoke(runner, "run", NBAC, NBAC_PROC, "--seed", "42", "--json")
        second = invoke(runner, "run", NBAC, NBAC_PROC, "--seed", "42", "--json")
        assert first.exit_code == EXIT_OK
        assert first.output == second.output
        steps = json.loads(first.output)
        assert [step["step"] for step in steps] == list(range(1, len(steps) + 1))

    def test_trace_file(self, runner, tmp_path):
        path = tmp_path / "trace.json"
        result = invoke(runner, "run", LOGGING, LOGGING_PROC, "--crash", "C@0", "--trace", str(path))
        assert result.exit_code == EXIT_OK
        steps = json.loads(path.read_text(encoding="utf-8"))
        assert [step["label"] for step in steps][:2] == ["Crash(C)", "Send(L,I,trigger)"]
        assert all(len(step["digest"]) == 12 for step in steps)

    def test_stuck_session(self, runner, tmp_path):
        path = tmp_path / "stuck.crproc"
        path.write_text(LOGGING_PROC_TEXT.replace('send I report("log line"). end', "end"), encoding="utf-8")
        result = invoke(runner, "run", LOGGING, str(path))
        assert result.exit_code == EXIT_FAILED
        assert "session is stuck" in result.output


class TestSemantics:
    def test_lists_registered_systems(self, runner):
        result = invoke(runner, "semantics")
        assert result.exit_code == EXIT_OK
        for name, cls in (("global", "GlobalSemantics"), ("config", "ConfigSemantics"),
                          ("session", "SessionSemantics")):
            assert name in result.output and cls in result.output
