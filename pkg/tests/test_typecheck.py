"""Tests for typing processes, queues and sessions."""
import pytest

from crmpst.core_model import L_END, STOP, Arm, LBranch, LSelect, Sort
from crmpst.diagnostics import Severity
from crmpst.parsing import parse_process_script
from crmpst.process import CRASHED, UNAVAILABLE, Lit, Message, Output, ProcVar, Session, Var
from crmpst.projection import project
from crmpst.semantics.global_lts import AnnotatedGlobal
from crmpst.typecheck import session_diagnostics, typecheck_process, typecheck_queue, typecheck_session
from crmpst.verifier import HOLDS, Status


def proc(source):
    return parse_process_script(f"role p = {source}").processes["p"]


def sel(peer, *arms):
    return LSelect(peer, tuple(Arm(label, sort, cont) for label, sort, cont in arms))


def bra(peer, *arms):
    return LBranch(peer, tuple(Arm(label, sort, cont) for label, sort, cont in arms))


UNIT, INT = Sort.UNIT, Sort.INT


def rules(report):
    return [d.rule for d in report.diagnostics]


class TestProcess:
    def test_nbac_coordinator(self, nbac_decl, nbac_session):
        t = project(nbac_decl.body, "C", nbac_decl.reliable)
        report = typecheck_process({}, nbac_session.process("C"), t)
        assert report.ok and report.diagnostics == []

    def test_payload_binders(self):
        t = bra("q", ("n", INT, sel("q", ("m", INT, L_END))))
        assert typecheck_process({}, proc("recv q { n(x) -> send q m(x + 1). end }"), t)

    def test_theta_supplies_sorts(self):
        t = sel("q", ("n", INT, L_END))
        assert typecheck_process({"y": INT}, Output("q", "n", Var("y"), proc("end")), t)

    def test_selecting_fewer_is_fine(self):
        t = sel("q", ("a", UNIT, L_END), ("b", UNIT, L_END))
        assert typecheck_process({}, proc("send q a. end"), t)

    def test_crashed_process_needs_stop(self):
        assert typecheck_process({}, CRASHED, STOP)
        assert rules(typecheck_process({}, CRASHED, L_END)) == ["Crashed"]

    @pytest.mark.parametrize("source, t, rule", [
        ("send q b. end", sel("q", ("a", UNIT, L_END)), "Output"),
        ("send r a. end", sel("q", ("a", UNIT, L_END)), "Output"),
        ('send q n("x"). end', sel("q", ("n", INT, L_END)), "PayloadSort"),
        ("send q n(y). end", sel("q", ("n", INT, L_END)), "PayloadSort"),
        ("end", sel("q", ("a", UNIT, L_END)), "Inaction"),
        ("send q a. end", bra("q", ("a", UNIT, L_END)), "Output"),
        ("recv q { a -> end }", bra("q", ("a", UNIT, L_END), ("b", UNIT, L_END)), "MissingBranch"),
        ("recv r { a -> end }", bra("q", ("a", UNIT, L_END)), "Input"),
        ("recv q { a -> end, b -> end }", bra("q", ("a", UNIT, L_END)), "ExtraBranch"),
        ("if 1 then end else end", L_END, "Condition"),
        ("recv q { a -> send q a. end }", bra("q", ("a", UNIT, L_END)), "Output"),
    ])
    def test_errors(self, source, t, rule):
        report = typecheck_process({}, proc(source), t)
        assert not report.ok
        assert rule in rules(report)

    def test_unbound_process_variable(self):
        p = Output("q", "a", Lit(None, UNIT), ProcVar("X"))
        report = typecheck_process({}, p, sel("q", ("a", UNIT, L_END)))
        assert rules(report) == ["ProcessVariable"]

    def test_lax_mode_accepts_untaken_branches(self):
        report = typecheck_process({}, proc("recv q { a -> end, b -> end }"), bra("q", ("a", UNIT, L_END)),
                                   strict=False)
        assert report.ok
        assert [(d.severity, d.rule) for d in report.diagnostics] == [(Severity.WARNING, "ExtraBranch")]

    def test_lax_mode_still_rejects_untyped_crash_handler(self):
        report = typecheck_process({}, proc("recv q { a -> end, crash -> end }"), bra("q", ("a", UNIT, L_END)),
                                   strict=False)
        assert rules(report) == ["ExtraBranch"]
        assert not report.ok


class TestQueue:
    def test_per_origin_order(self):
        queue = (Message("q", "a"), Message("r", "n", Lit(1, INT)), Message("q", "b"))
        expected = {"q": [("a", UNIT), ("b", UNIT)], "r": [("n", INT)]}
        assert typecheck_queue(queue, expected)

    def test_wrong_message(self):
        report = typecheck_queue((Message("q", "b"),), {"q": [("a", UNIT)]})
        assert rules(report) == ["QueueMessage"]

    def test_missing_message(self):
        assert rules(typecheck_queue((), {"q": [("a", UNIT)]})) == ["QueueMessage"]

    def test_availability(self):
        assert typecheck_queue(UNAVAILABLE, UNAVAILABLE)
        assert rules(typecheck_queue((), UNAVAILABLE)) == ["QueueAvailability"]


class TestSession:
    @pytest.mark.parametrize("fixture", ["logging", "nbac"])
    def test_fixtures_are_well_typed(self, request, fixture):
        decl = request.getfixturevalue(f"{fixture}_decl")
        session = request.getfixturevalue(f"{fixture}_session")
        assert typecheck_session(session, AnnotatedGlobal.initial(decl.body), decl.reliable) == HOLDS

    def test_ill_typed_process(self, logging_decl, logging_session):
        session = logging_session.update("C", process=proc("send I read. end"))
        verdict = typecheck_session(session, AnnotatedGlobal.initial(logging_decl.body), logging_decl.reliable)
        assert verdict.status is Status.VIOLATED
        assert "[Inaction] C:" in verdict.reason

    def test_missing_role(self, logging_decl, logging_session):
        processes = logging_session.processes()
        del processes["I"]
        session = Session.of(processes)
        diagnostics = session_diagnostics(session, AnnotatedGlobal.initial(logging_decl.body), logging_decl.reliable)
        assert [d.rule for d in diagnostics] == ["MissingRole"]

    def test_unexpected_queue_content(self, logging_decl, logging_session):
        session = logging_session.update("I", queue=(Message("C", "read"),))
        diagnostics = session_diagnostics(session, AnnotatedGlobal.initial(logging_decl.body), logging_decl.reliable)
        assert [d.rule for d in diagnostics] == ["QueueMessage"]
        assert diagnostics[0].message.startswith("queue of I:")

    def test_lax_session(self, logging_decl, logging_session):
        loose = proc("send I read. recv I { report(x) -> end, retry -> end }")
        session = logging_session.update("C", process=loose)
        ann = AnnotatedGlobal.initial(logging_decl.body)
        assert typecheck_session(session, ann, logging_decl.reliable).status is Status.VIOLATED
        assert typecheck_session(session, ann, logging_decl.reliable, strict=False) == HOLDS
