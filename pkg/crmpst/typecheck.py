"""
Algorithmic typing of processes against local types, of queues against message types and of
whole sessions against an annotated global type.
"""
import logging
from dataclasses import dataclass, field
from functools import lru_cache
from typing import Dict, FrozenSet, Iterable, List, Mapping, Sequence, Tuple, Union

from .core_model import (LBranch, LEnd, Label, LocalType, LSelect, LStop, Role, Sort, is_crash,
                         mentioned_roles, unfold)
from .diagnostics import Diagnostic, errors_in
from .process import (Cond, Crashed, Inact, InputSum, Output, Process, ProcRec, ProcVar, Queue,
                      Session, SortError, Unavailable, expr_sort)
from .projection import ProjectionError
from .rendering import render_local, render_session
from .semantics.config_lts import Configuration, QueueMsg
from .semantics.global_lts import AnnotatedGlobal
from .subtyping import subtype
from .verifier import (InconsistentQueuesError, Verdict, WitnessStep, association_failure,
                       derive_canonical_config, HOLDS)

logger = logging.getLogger(__name__)

Theta = Mapping[str, Union[Sort, LocalType]]
MessageTypes = Mapping[Role, Sequence[Tuple[Label, Sort]]]


@dataclass
class TypingReport:
    diagnostics: List[Diagnostic] = field(default_factory=list)

    @property
    def ok(self) -> bool:
        return not errors_in(self.diagnostics)

    def __bool__(self) -> bool:
        return self.ok

    def error(self, rule: str, message: str, span=None) -> None:
        self.diagnostics.append(Diagnostic.error(rule, message, span))

    def warning(self, rule: str, message: str, span=None) -> None:
        self.diagnostics.append(Diagnostic.warning(rule, message, span))


def typecheck_process(theta: Theta, p: Process, t: LocalType, strict: bool = True) -> TypingReport:
    """Check ``p`` against the closed local type ``t``.

    Args:
        theta: Sorts of free expression variables and types of free process variables.
        p: Process to check.
        t: Expected local type.
        strict: Reject receive branches the type does not offer; otherwise only warn.

    Returns:
        A report whose diagnostics name the failing rule and where it failed.
    """
    checker = _ProcessChecker(strict)
    sorts = {name: v for name, v in theta.items() if isinstance(v, Sort)}
    procs = {name: v for name, v in theta.items() if isinstance(v, LocalType)}
    checker.check(p, t, sorts, procs, "")
    return checker.report


class _ProcessChecker:

    def __init__(self, strict: bool):
        self.strict = strict
        self.report = TypingReport()

    def check(self, p: Process, t: LocalType, sorts: Dict[str, Sort], procs: Dict[str, LocalType], path: str) -> None:
        u = unfold(t)
        where = path or "top"
        if isinstance(p, Inact):
            if not isinstance(u, LEnd):
                self.report.error("Inaction", f"end at {where} but the type is {render_local(t)}")
        elif isinstance(p, Crashed):
            if not isinstance(t, LStop):
                self.report.error("Crashed", f"crashed process at {where} needs stop")
        elif isinstance(p, Cond):
            try:
                if expr_sort(p.cond, sorts) is not Sort.BOOL:
                    self.report.error("Condition", f"condition at {where} is not Bool", p.span)
            except SortError as e:
                self.report.error("Condition", f"{e} at {where}", p.span)
            self.check(p.then, t, sorts, procs, path + "/then")
            self.check(p.orelse, t, sorts, procs, path + "/else")
        elif isinstance(p, ProcRec):
            self.check(p.body, t, sorts, {**procs, p.name: t}, path + f"/mu {p.name}")
        elif isinstance(p, ProcVar):
            bound = procs.get(p.name)
            if bound is None:
                self.report.error("ProcessVariable", f"{p.name} is unbound at {where}", p.span)
            elif not (subtype(bound, t) and subtype(t, bound)):
                self.report.error("ProcessVariable",
                                  f"{p.name} has type {render_local(bound)}, expected {render_local(t)}", p.span)
        elif isinstance(p, Output):
            self._output(p, u, sorts, procs, path)
        elif isinstance(p, InputSum):
            self._input(p, u, sorts, procs, path)
        else:
            self.report.error("Unknown", f"cannot type {p!r}")

    def _output(self, p: Output, u: LocalType, sorts, procs, path: str) -> None:
        here = f"{path}/send {p.receiver} {p.label}"
        if not isinstance(u, LSelect) or u.peer != p.receiver:
            self.report.error("Output", f"send to {p.receiver} at {here} but the type is {render_local(u)}", p.span)
            return
        arm = next((a for a in u.arms if a.label == p.label), None)
        if arm is None:
            self.report.error("Output", f"label {p.label} not among {list(u.labels)}", p.span)
            return
        try:
            sort = expr_sort(p.payload, sorts)
        except SortError as e:
            self.report.error("PayloadSort", f"{e} at {here}", p.span)
            return
        if sort is not arm.sort:
            self.report.error("PayloadSort", f"{p.label} carries {arm.sort}, got {sort}", p.span)
            return
        self.check(p.cont, arm.cont, sorts, procs, here)

    def _input(self, p: InputSum, u: LocalType, sorts, procs, path: str) -> None:
        here = f"{path}/recv {p.sender}"
        if not isinstance(u, LBranch) or u.peer != p.sender:
            self.report.error("Input", f"receive from {p.sender} at {here} but the type is {render_local(u)}", p.span)
            return
        offered = {a.label: a for a in u.arms}
        for label in u.labels:
            if p.arm(label) is None:
                self.report.error("MissingBranch", f"no branch for {label} at {here}", p.span)
        for arm in p.arms:
            expected = offered.get(arm.label)
            if expected is None:
                if is_crash(arm.label) or self.strict:
                    self.report.error("ExtraBranch", f"branch {arm.label} at {here} is not in the type", arm.span)
                else:
                    logger.warning(f"Accepting untyped branch {arm.label} at {here}")
                    self.report.warning("ExtraBranch", f"branch {arm.label} at {here} is never taken", arm.span)
                continue
            inner = dict(sorts)
            if arm.binder:
                inner[arm.binder] = expected.sort
            self.check(arm.cont, expected.cont, inner, procs, f"{here}/{arm.label}")


def typecheck_queue(queue: Queue, expected: Union[MessageTypes, Unavailable]) -> TypingReport:
    """Check an incoming queue message by message against per-origin message types."""
    report = TypingReport()
    if isinstance(queue, Unavailable) or isinstance(expected, Unavailable):
        if isinstance(queue, Unavailable) != isinstance(expected, Unavailable):
            report.error("QueueAvailability", "queue availability does not match its type")
        return report
    origins = sorted(set(expected) | {m.origin for m in queue})
    for origin in origins:
        actual = [(m.label, m.value.sort) for m in queue if m.origin == origin]
        wanted = list(expected.get(origin, ()))
        for i in range(max(len(actual), len(wanted))):
            got = actual[i] if i < len(actual) else None
            want = wanted[i] if i < len(wanted) else None
            if got != want:
                report.error("QueueMessage", f"message {i} from {origin}: expected {want}, got {got}")
    return report


def queue_types(c: Configuration, receiver: Role) -> Union[MessageTypes, Unavailable]:
    types: Dict[Role, List[Tuple[Label, Sort]]] = {}
    for (src, dst), content in c.delta:
        if dst != receiver:
            continue
        if isinstance(content, Unavailable):
            return content
        types[src] = [(m.label, m.sort) for m in content]
    return types


def session_delta(m: Session) -> Dict[Tuple[Role, Role], object]:
    """Queue environment of a session: per ordered pair, the message types in the receiver's queue."""
    delta = {}
    for entry in m.entries:
        for src in m.roles:
            if src == entry.role:
                continue
            if isinstance(entry.queue, Unavailable):
                delta[(src, entry.role)] = entry.queue
            else:
                delta[(src, entry.role)] = tuple(QueueMsg(msg.label, msg.value.sort)
                                                 for msg in entry.queue if msg.origin == src)
    return delta


def typecheck_session(m: Session, ann: AnnotatedGlobal, reliable: Iterable[Role], strict: bool = True) -> Verdict:
    """Check that ``m`` is governed by ``ann``: processes typed by the projections, queues by the
    en-route messages, and the resulting configuration associated with ``ann``."""
    return _typecheck_session(m, ann, frozenset(reliable), strict)


@lru_cache(maxsize=8192)
def _typecheck_session(m: Session, ann: AnnotatedGlobal, reliable: FrozenSet[Role], strict: bool) -> Verdict:
    diagnostics = session_diagnostics(m, ann, reliable, strict)
    errors = errors_in(diagnostics)
    if not errors:
        return HOLDS
    return Verdict.violated((WitnessStep(render_session(m), None),), "; ".join(str(d) for d in errors))


def session_diagnostics(m: Session, ann: AnnotatedGlobal, reliable: FrozenSet[Role], strict: bool = True) -> List[Diagnostic]:
    report = TypingReport()
    missing = (mentioned_roles(ann.g) | set(ann.crashed)) - set(m.roles)
    for role in sorted(missing):
        report.error("MissingRole", f"no process for role {role}")
    if missing:
        return report.diagnostics
    try:
        canonical = derive_canonical_config(ann, reliable, m.roles)
    except (ProjectionError, InconsistentQueuesError) as e:
        report.error("Projection", str(e))
        return report.diagnostics

    gamma = canonical.gamma_map()
    for entry in m.entries:
        sub = typecheck_process({}, entry.process, gamma[entry.role], strict)
        for d in sub.diagnostics:
            report.diagnostics.append(Diagnostic(d.severity, d.rule, f"{entry.role}: {d.message}", d.span))
        queue = typecheck_queue(entry.queue, queue_types(canonical, entry.role))
        for d in queue.diagnostics:
            report.diagnostics.append(Diagnostic(d.severity, d.rule, f"queue of {entry.role}: {d.message}", d.span))
    if report.ok:
        failure = association_failure(ann, Configuration.of(gamma, session_delta(m)), reliable)
        if failure:
            report.error("Association", failure)
    return report.diagnostics
