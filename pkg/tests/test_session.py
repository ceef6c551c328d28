"""Tests for session reduction, scheduled runs and session exploration."""
import pytest

from crmpst.core_model import Sort
from crmpst.interface import Crash, CrashDetect, Recv, Send
from crmpst.parsing import parse_process_script
from crmpst.process import CRASHED, INACT, UNAVAILABLE, Lit, Message
from crmpst.semantics.global_lts import AnnotatedGlobal
from crmpst.semantics.session import (Exact, Seeded, SessionSemantics, TraceStep, check_session_deadlock_freedom,
                                      check_session_fidelity, check_session_liveness, crash, explore_session,
                                      is_quiescent_conforming, run_session, session_transitions)
from crmpst.verifier import HOLDS, Status

STR = Sort.STR

PING = """
role p = send q l. recv q { m -> end };
role q = recv p { l -> send p m. end, crash -> end }
"""


def session(source):
    return parse_process_script(source).session()


@pytest.fixture
def ping():
    return session(PING)


class TestTransitions:
    def test_only_the_sender_moves_first(self, ping):
        assert [label for label, _ in session_transitions(ping, {"q"})] == [Send("p", "q", "l"), Crash("p")]

    def test_crash_makes_the_queue_unavailable(self, ping):
        crashed = crash(ping, "p")
        assert crashed.process("p") == CRASHED
        assert crashed.queue("p") is UNAVAILABLE

    def test_send_to_crashed_role_is_dropped(self, ping):
        m = session("role p = recv q { m -> end }; role q = send p m. end")
        m = crash(m, "p")
        (label, succ), = [move for move in session_transitions(m, {"q"}) if isinstance(move[0], Send)]
        assert label == Send("q", "p", "m")
        assert succ.queue("p") is UNAVAILABLE
        assert is_quiescent_conforming(succ)

    def test_receive_by_origin(self):
        source = "role p = end; role q = end; role r = recv p { a -> recv q { b -> end } }"
        base = session(source)
        one = base.update("r", queue=(Message("q", "b"), Message("p", "a")))
        other = base.update("r", queue=(Message("p", "a"), Message("q", "b")))
        moves_one = session_transitions(one, {"p", "q", "r"})
        moves_other = session_transitions(other, {"p", "q", "r"})
        assert [label for label, _ in moves_one] == [label for label, _ in moves_other] == [Recv("r", "p", "a")]
        assert moves_one[0][1].queue("r") == moves_other[0][1].queue("r") == (Message("q", "b"),)

    def test_payload_is_substituted(self):
        m = session("role p = send q n(1 + 2). end; role q = recv p { n(x) -> send p m(x). end }")
        for label in [Send("p", "q", "n", Sort.INT), Recv("q", "p", "n", Sort.INT)]:
            m = dict(session_transitions(m, {"p", "q"}))[label]
        assert dict(session_transitions(m, {"p", "q"}))[Send("q", "p", "m", Sort.INT)].queue("p") == (
            Message("q", "m", Lit(3, Sort.INT)),)

    def test_crash_detection(self, ping):
        m = crash(ping, "p")
        assert session_transitions(m, {"q"}) == [(CrashDetect("q", "p"), m.update("q", process=INACT))]

    def test_finished_roles_do_not_crash(self):
        m = session("role p = end; role q = end")
        assert session_transitions(m, set()) == []
        assert is_quiescent_conforming(m)


class TestRun:
    def test_ping_without_crashes(self, ping):
        trace = run_session(ping, {"q"})
        assert trace.labels == [Send("p", "q", "l"), Recv("q", "p", "l"), Send("q", "p", "m"), Recv("p", "q", "m")]
        assert trace.conforming and not trace.exhausted

    def test_ping_with_early_crash(self, ping):
        trace = run_session(ping, {"q"}, Exact(((0, "p"),)))
        assert trace.labels == [Crash("p"), CrashDetect("q", "p")]
        assert trace.conforming

    def test_orphaned_reply(self, ping):
        trace = run_session(ping, {"q"}, Exact(((1, "p"),)))
        assert trace.labels == [Send("p", "q", "l"), Crash("p"), Recv("q", "p", "l"), Send("q", "p", "m")]
        assert trace.conforming

    def test_logging_without_crashes(self, logging_session, logging_decl):
        trace = run_session(logging_session, logging_decl.reliable)
        assert len(trace.labels) == 10
        assert trace.labels[0] == Send("C", "I", "read")
        assert trace.labels[-1] == Recv("C", "I", "report", STR)
        assert all(p == INACT for p in trace.final.processes().values())

    def test_logging_with_client_crash(self, logging_session, logging_decl):
        ann = AnnotatedGlobal.initial(logging_decl.body)
        trace = run_session(logging_session, logging_decl.reliable, Exact(((0, "C"),)), governing=ann)
        assert [str(label) for label in trace.labels] == [
            "Crash(C)", "Send(L,I,trigger)", "Recv(I,L,trigger)", "CrashDetect(I,C)",
            "Send(I,L,fatal)", "Recv(L,I,fatal)",
        ]
        assert trace.conforming and trace.untyped_at is None
        assert trace.governing.crashed == {"C"}

    def test_exact_schedule_rejects_reliable_roles(self, logging_session, logging_decl):
        with pytest.raises(ValueError, match="L"):
            run_session(logging_session, logging_decl.reliable, Exact(((0, "L"),)))

    def test_nbac_seeded(self, nbac_session, nbac_decl):
        ann = AnnotatedGlobal.initial(nbac_decl.body)
        trace = run_session(nbac_session, nbac_decl.reliable, Seeded(42), governing=ann)
        assert Crash("L") in trace.labels
        assert trace.conforming and trace.untyped_at is None

    def test_same_seed_same_trace(self, nbac_session, nbac_decl):
        one = run_session(nbac_session, nbac_decl.reliable, Seeded(7, crash_probability=0.05))
        other = run_session(nbac_session, nbac_decl.reliable, Seeded(7, crash_probability=0.05))
        assert [s.to_dict() for s in one.steps] == [s.to_dict() for s in other.steps]

    def test_nbac_without_crashes_runs_forever(self, nbac_session, nbac_decl):
        trace = run_session(nbac_session, nbac_decl.reliable, max_steps=50)
        assert trace.exhausted and not trace.conforming
        assert len(trace.steps) == 50

    def test_untyped_initial_session(self, logging_session, logging_decl):
        m = logging_session.update("C", process=parse_process_script("role C = send I read. end").processes["C"])
        trace = run_session(m, logging_decl.reliable, governing=AnnotatedGlobal.initial(logging_decl.body))
        assert trace.untyped_at == 0
        assert "Inaction" in trace.untyped_reason

    def test_exact_schedule_crashes_each_role_once(self):
        with pytest.raises(ValueError):
            Exact(((0, "p"), (3, "p")))

    def test_trace_step_to_dict(self):
        step = TraceStep(3, Send("L", "I", "report", STR), "0123456789ab")
        assert step.to_dict() == {"step": 3, "label": "Send(L,I,report,Str)", "digest": "0123456789ab"}


class TestRequestReply:
    def test_values_travel_through_the_queues(self, request_session):
        m = request_session
        m = dict(session_transitions(m))[Send("p", "q", "l", STR)]
        assert m.queue("q") == (Message("p", "l", Lit("abc", STR)),)
        m = dict(session_transitions(m))[Recv("q", "p", "l", STR)]
        assert m.queue("q") == ()
        m = dict(session_transitions(m))[Send("q", "p", "l2", Sort.INT)]
        assert m.queue("p") == (Message("q", "l2", Lit(42, Sort.INT)),)
        assert m.process("q") == INACT

    def test_without_crashes(self, request_session, request_decl):
        ann = AnnotatedGlobal.initial(request_decl.body)
        trace = run_session(request_session, request_decl.reliable, governing=ann)
        assert trace.labels == [Send("p", "q", "l", STR), Recv("q", "p", "l", STR),
                                Send("q", "p", "l2", Sort.INT), Recv("p", "q", "l2", Sort.INT)]
        assert [str(label) for label in trace.labels][:2] == ["Send(p,q,l,Str)", "Recv(q,p,l,Str)"]
        assert trace.conforming and trace.untyped_at is None

    def test_sender_crashes_before_sending(self, request_session, request_decl):
        ann = AnnotatedGlobal.initial(request_decl.body)
        trace = run_session(request_session, request_decl.reliable, Exact(((0, "p"),)), governing=ann)
        assert trace.labels == [Crash("p"), CrashDetect("q", "p")]
        assert trace.final.process("p") == CRASHED and trace.final.queue("p") is UNAVAILABLE
        assert trace.final.process("q") == INACT and trace.final.queue("q") == ()
        assert trace.conforming and trace.untyped_at is None

    def test_sender_crashes_after_sending(self, request_session, request_decl):
        ann = AnnotatedGlobal.initial(request_decl.body)
        trace = run_session(request_session, request_decl.reliable, Exact(((1, "p"),)), governing=ann)
        assert trace.labels == [Send("p", "q", "l", STR), Crash("p"), Recv("q", "p", "l", STR),
                                Send("q", "p", "l2", Sort.INT)]
        assert trace.conforming and trace.untyped_at is None


class TestExploration:
    def test_session_semantics(self, ping):
        system = SessionSemantics(ping, {"q"}, max_crashes=0)
        assert system.enabled(ping) == [Send("p", "q", "l")]
        assert not system.conforms(ping)

    def test_explore(self, ping):
        graph = explore_session(ping, {"q"})
        assert graph.graph["initial"] == ping
        assert any(is_quiescent_conforming(state) for state in graph.nodes)

    @pytest.mark.parametrize("check", [check_session_deadlock_freedom, check_session_liveness])
    def test_logging_session(self, check, logging_session, logging_decl):
        assert check(logging_session, logging_decl.reliable) == HOLDS

    def test_logging_fidelity(self, logging_session, logging_decl):
        ann = AnnotatedGlobal.initial(logging_decl.body)
        assert check_session_fidelity(logging_session, ann, logging_decl.reliable) == HOLDS

    def test_nbac_fidelity(self, nbac_session, nbac_decl):
        ann = AnnotatedGlobal.initial(nbac_decl.body)
        assert check_session_fidelity(nbac_session, ann, nbac_decl.reliable) == HOLDS

    def test_stuck_session(self):
        m = session("role p = recv q { a -> end }; role q = end")
        verdict = check_session_deadlock_freedom(m, {"p", "q"})
        assert verdict.status is Status.VIOLATED
        assert verdict.reason == "reduct is stuck"

    def test_unread_message(self):
        m = session("role p = send q a. end; role q = end")
        verdict = check_session_liveness(m, {"p", "q"})
        assert verdict.status is Status.VIOLATED
        assert verdict.reason == "('queue', 'q', 'p') is never served"
        assert verdict.witness[-1].label is None

    def test_state_bound(self, nbac_session, nbac_decl):
        verdict = check_session_liveness(nbac_session, nbac_decl.reliable, state_bound=3)
        assert verdict.status is Status.INCONCLUSIVE

    def test_fidelity_catches_untyped_step(self, logging_session, logging_decl):
        m = logging_session.update("L", process=parse_process_script(
            "role L = send I fatal. end").processes["L"])
        ann = AnnotatedGlobal.initial(logging_decl.body)
        assert check_session_fidelity(m, ann, logging_decl.reliable).status is Status.VIOLATED
