"""
Reduction of sessions with crash injection, scheduled runs and bounded session exploration.

Conditionals and recursion reduce silently while a process is brought to its next action, so
every labelled transition is a send, a receive, a crash or a crash detection.
"""
import logging
from collections import deque
from dataclasses import dataclass, field
from typing import Dict, FrozenSet, Iterable, List, Optional, Tuple, Union

import networkx as nx
import numpy as np

from ..DEFAULTS import CRASH_LABEL, CRASH_PROBABILITY, MAX_CRASHES, MAX_STEPS, SESSION_STATE_BOUND
from ..core_model import Role
from ..interface import Crash, CrashDetect, Recv, Send, TransitionLabel, TransitionSystem
from ..process import (CRASHED, Crashed, Inact, InputSum, Output, Session, Unavailable,
                       UNAVAILABLE, Message, eval_expr, resolve_head, substitute_value)
from ..registry import SemanticsRegistry
from ..rendering import render_session
from ..typecheck import typecheck_session
from ..verifier import (HOLDS, StateBoundExceeded, Verdict, WitnessStep, explore_system,
                        out_labels, path_to, witness_path)
from .global_lts import AnnotatedGlobal, global_transitions

logger = logging.getLogger(__name__)


def crashable(m: Session, role: Role, reliable: FrozenSet[Role]) -> bool:
    return role not in reliable and not isinstance(m.process(role), (Inact, Crashed))


def crash(m: Session, role: Role) -> Session:
    return m.update(role, process=CRASHED, queue=UNAVAILABLE)


def session_transitions(m: Session, reliable: Iterable[Role] = (),
                        allow_crash: bool = True) -> List[Tuple[TransitionLabel, Session]]:
    """Labelled reductions of ``m``, role by role in name order.

    Raises:
        EvaluationError: if a payload or condition cannot be evaluated.
    """
    reliable = frozenset(reliable)
    out: List[Tuple[TransitionLabel, Session]] = []
    for entry in m.entries:
        role = entry.role
        p = resolve_head(entry.process)
        if isinstance(p, Output):
            value = eval_expr(p.payload)
            succ = m.update(role, process=p.cont)
            target = succ.queue(p.receiver)
            if not isinstance(target, Unavailable):
                succ = succ.update(p.receiver, queue=target + (Message(role, p.label, value),))
            out.append((Send(role, p.receiver, p.label, value.sort), succ))
        elif isinstance(p, InputSum):
            queue = entry.queue
            position = next((i for i, msg in enumerate(queue) if msg.origin == p.sender), None)
            if position is not None:
                msg = queue[position]
                arm = p.arm(msg.label)
                if arm is None:
                    logger.warning(f"StuckBranch: {role} has no branch for {msg.label} from {p.sender}")
                else:
                    cont = substitute_value(arm.cont, arm.binder, msg.value) if arm.binder else arm.cont
                    rest = queue[:position] + queue[position + 1:]
                    out.append((Recv(role, p.sender, msg.label, msg.value.sort),
                                m.update(role, process=cont, queue=rest)))
            else:
                crash_arm = p.arm(CRASH_LABEL)
                if crash_arm is not None and isinstance(m.process(p.sender), Crashed):
                    out.append((CrashDetect(role, p.sender), m.update(role, process=crash_arm.cont)))
        if allow_crash and crashable(m, role, reliable):
            out.append((Crash(role), crash(m, role)))
    return out


def is_quiescent_conforming(m: Session) -> bool:
    """Every entry is ended with an empty queue or crashed with an unavailable one."""
    for entry in m.entries:
        if isinstance(entry.process, Inact) and entry.queue == ():
            continue
        if isinstance(entry.process, Crashed) and isinstance(entry.queue, Unavailable):
            continue
        return False
    return True


## SCHEDULED RUNS

@dataclass(frozen=True)
class Seeded:
    seed: int
    crash_probability: float = CRASH_PROBABILITY
    max_crashes: int = MAX_CRASHES


@dataclass(frozen=True)
class Exact:
    crashes: Tuple[Tuple[int, Role], ...] = ()

    def __post_init__(self):
        roles = [role for _, role in self.crashes]
        if len(roles) != len(set(roles)):
            raise ValueError("A role can crash at most once")


CrashSchedule = Union[Seeded, Exact]


@dataclass(frozen=True)
class TraceStep:
    index: int
    label: TransitionLabel
    digest: str

    def to_dict(self) -> dict:
        return {"step": self.index, "label": str(self.label), "digest": self.digest}


@dataclass
class Trace:
    initial: Session
    steps: List[TraceStep] = field(default_factory=list)
    final: Optional[Session] = None
    exhausted: bool = False
    governing: Optional[AnnotatedGlobal] = None
    untyped_at: Optional[int] = None
    untyped_reason: str = ""

    @property
    def labels(self) -> List[TransitionLabel]:
        return [step.label for step in self.steps]

    @property
    def conforming(self) -> bool:
        return self.final is not None and is_quiescent_conforming(self.final)


class _Crasher:
    """Decides which roles crash before a given step."""

    def __init__(self, schedule: Optional[CrashSchedule]):
        self.schedule = schedule
        self.crashes = 0
        self.rng = np.random.default_rng(schedule.seed) if isinstance(schedule, Seeded) else None

    def due(self, m: Session, step: int, reliable: FrozenSet[Role]) -> List[Role]:
        if isinstance(self.schedule, Exact):
            return [role for at, role in self.schedule.crashes if at == step and crashable(m, role, reliable)]
        if self.rng is None or self.crashes >= self.schedule.max_crashes:
            return []
        if self.rng.random() >= self.schedule.crash_probability:
            return []
        candidates = [role for role in m.roles if crashable(m, role, reliable)]
        if not candidates:
            return []
        self.crashes += 1
        return [candidates[int(self.rng.integers(len(candidates)))]]


def run_session(m0: Session, reliable: Iterable[Role] = (), schedule: Optional[CrashSchedule] = None,
                max_steps: int = MAX_STEPS, governing: Optional[AnnotatedGlobal] = None,
                strict: bool = True) -> Trace:
    """Run ``m0`` deterministically: scheduled crashes first, then the least enabled transition.

    Args:
        m0: Initial session.
        reliable: Roles that never crash.
        schedule: Seeded or exact crash schedule; no crashes if None.
        max_steps: Step budget; the trace is flagged ``exhausted`` when it runs out.
        governing: Annotated global type to track along the run, re-typing every reduct.
        strict: Typing mode used when ``governing`` is given.

    Returns:
        The trace of labels with state digests.

    Raises:
        ValueError: if an exact schedule crashes a reliable role.
    """
    reliable = frozenset(reliable)
    if isinstance(schedule, Exact):
        forbidden = sorted({role for _, role in schedule.crashes} & reliable)
        if forbidden:
            raise ValueError(f"Reliable roles cannot crash: {', '.join(forbidden)}")
    system = SessionSemantics(m0, reliable)
    crasher = _Crasher(schedule)
    trace = Trace(initial=m0, governing=governing)
    m = m0
    count = 0

    def record(label: TransitionLabel, succ: Session) -> Session:
        nonlocal count
        count += 1
        trace.steps.append(TraceStep(count, label, system.digest(succ)))
        if trace.governing is not None and trace.untyped_at is None:
            _track(trace, label, succ, reliable, strict, count)
        return succ

    if governing is not None:
        verdict = typecheck_session(m0, governing, reliable, strict)
        if not verdict.holds:
            trace.untyped_at, trace.untyped_reason = 0, verdict.reason

    for step in range(max_steps):
        for role in crasher.due(m, step, reliable):
            m = record(Crash(role), crash(m, role))
        moves = session_transitions(m, reliable, allow_crash=False)
        if not moves:
            break
        label, succ = min(moves, key=lambda move: str(move[0]))
        m = record(label, succ)
    else:
        if session_transitions(m, reliable, allow_crash=False):
            trace.exhausted = True
            logger.warning(f"Step budget of {max_steps} exhausted")
    trace.final = m
    return trace


def _track(trace: Trace, label: TransitionLabel, m: Session, reliable: FrozenSet[Role],
           strict: bool, index: int) -> None:
    candidates = [g for l, g in global_transitions(trace.governing, reliable) if l == label]
    for candidate in candidates:
        if typecheck_session(m, candidate, reliable, strict).holds:
            trace.governing = candidate
            return
    trace.untyped_at = index
    if candidates:
        trace.untyped_reason = typecheck_session(m, candidates[0], reliable, strict).reason
    else:
        trace.untyped_reason = f"global type cannot match {label}"
    logger.error(f"Reduct {index} is not typed: {trace.untyped_reason}")


## EXPLORATION

@SemanticsRegistry.register("session")
class SessionSemantics(TransitionSystem[Session]):
    """Sessions as a transition system, with at most ``max_crashes`` crashed roles."""

    def __init__(self, start: Session, reliable: Iterable[Role] = (), max_crashes: int = MAX_CRASHES):
        super().__init__(reliable)
        self.start = start
        self.max_crashes = max_crashes

    def initial_state(self) -> Session:
        return self.start

    def transitions(self, state: Session) -> List[Tuple[TransitionLabel, Session]]:
        crashed = sum(isinstance(e.process, Crashed) for e in state.entries)
        return session_transitions(state, self.reliable, allow_crash=crashed < self.max_crashes)

    def render_state(self, state: Session) -> str:
        return render_session(state)

    def conforms(self, state: Session) -> bool:
        return is_quiescent_conforming(state)


def explore_session(m0: Session, reliable: Iterable[Role] = (), max_crashes: int = 1,
                    state_bound: int = SESSION_STATE_BOUND) -> nx.DiGraph:
    """All reducts of ``m0`` with at most ``max_crashes`` crashes.

    Raises:
        StateBoundExceeded: if more than ``state_bound`` reducts exist.
    """
    return explore_system(SessionSemantics(m0, reliable, max_crashes), state_bound)


def _explored(m0, reliable, max_crashes, state_bound):
    try:
        return explore_session(m0, reliable, max_crashes, state_bound), None
    except StateBoundExceeded:
        return None, Verdict.inconclusive(f"session state bound {state_bound} exceeded")


def check_session_deadlock_freedom(m0: Session, reliable: Iterable[Role] = (), max_crashes: int = 1,
                                   state_bound: int = SESSION_STATE_BOUND) -> Verdict:
    graph, verdict = _explored(m0, reliable, max_crashes, state_bound)
    if graph is None:
        return verdict
    for state in graph.nodes:
        quiescent = all(isinstance(label, Crash) for label in out_labels(graph, state))
        if quiescent and not is_quiescent_conforming(state):
            return Verdict.violated(witness_path(graph, path_to(graph, state), render_session),
                                    "reduct is stuck")
    return HOLDS


def _session_duties(m: Session) -> List[Tuple[str, Role, Role]]:
    duties = set()
    for entry in m.entries:
        if isinstance(entry.queue, Unavailable):
            continue
        for msg in entry.queue:
            duties.add(("queue", entry.role, msg.origin))
        head = resolve_head(entry.process)
        if isinstance(head, InputSum):
            duties.add(("input", entry.role, head.sender))
    return sorted(duties)


def _fulfils(label: TransitionLabel, duty: Tuple[str, Role, Role]) -> bool:
    kind, role, peer = duty
    if isinstance(label, Crash):
        return label.role == role
    if isinstance(label, Recv):
        return label.receiver == role and label.sender == peer
    return kind == "input" and isinstance(label, CrashDetect) and label == CrashDetect(role, peer)


def check_session_liveness(m0: Session, reliable: Iterable[Role] = (), max_crashes: int = 1,
                           state_bound: int = SESSION_STATE_BOUND) -> Verdict:
    """Every queued message and every waiting input is served on some continuation of every reduct."""
    graph, verdict = _explored(m0, reliable, max_crashes, state_bound)
    if graph is None:
        return verdict
    duties = {state: _session_duties(state) for state in graph.nodes}
    for duty in sorted({d for ds in duties.values() for d in ds}):
        served = {u for u, _, labels in graph.edges(data="labels") if any(_fulfils(l, duty) for l in labels)}
        frontier = deque(served)
        while frontier:
            for pred in graph.predecessors(frontier.popleft()):
                if pred not in served:
                    served.add(pred)
                    frontier.append(pred)
        for state, pending in duties.items():
            if duty in pending and state not in served:
                return Verdict.violated(witness_path(graph, path_to(graph, state), render_session),
                                        f"{duty} is never served")
    return HOLDS


def check_session_fidelity(m0: Session, ann0: AnnotatedGlobal, reliable: Iterable[Role] = (),
                           max_crashes: int = 1, state_bound: int = SESSION_STATE_BOUND) -> Verdict:
    """Whenever the tracked global type can communicate, the session can take a step the global
    type accepts, and every session step keeps the session typed."""
    reliable = frozenset(reliable)
    system = SessionSemantics(m0, reliable, max_crashes)
    start = (m0, ann0)
    parents: Dict[Tuple[Session, AnnotatedGlobal], Optional[tuple]] = {start: None}
    frontier = deque([start])

    def witness(pair) -> Tuple[WitnessStep, ...]:
        steps = [WitnessStep(render_session(pair[0]), None)]
        while parents[pair] is not None:
            pair, label = parents[pair]
            steps.append(WitnessStep(render_session(pair[0]), str(label)))
        return tuple(reversed(steps))

    while frontier:
        pair = frontier.popleft()
        m, ann = pair
        g_moves = global_transitions(ann, reliable)
        accepted = False
        for label, succ in system.transitions(m):
            candidates = [g for l, g in g_moves if l == label]
            match = next((g for g in candidates if typecheck_session(succ, g, reliable).holds), None)
            if match is None:
                return Verdict.violated(witness(pair), f"{label} leaves the session untyped")
            accepted = accepted or not isinstance(label, Crash)
            nxt = (succ, match)
            if nxt not in parents:
                if len(parents) >= state_bound:
                    return Verdict.inconclusive(f"session state bound {state_bound} exceeded")
                parents[nxt] = (pair, label)
                frontier.append(nxt)
        if not accepted and any(not isinstance(l, Crash) for l, _ in g_moves):
            return Verdict.violated(witness(pair), "global type can communicate but the session cannot")
    return HOLDS
