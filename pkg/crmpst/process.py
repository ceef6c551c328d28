"""
Processes, queues and sessions of the crash-stop session calculus, and expression evaluation.

A session maps each role to its process and its incoming queue. The incoming queue of a
crashed role is unavailable: messages sent to it are dropped.
"""
import logging
from dataclasses import dataclass, field, replace
from typing import Any, Dict, Iterable, Mapping, Optional, Tuple, Union

from .core_model import Label, Role, Sort
from .diagnostics import Span

logger = logging.getLogger(__name__)


## EXPRESSIONS

class Expr:
    pass


@dataclass(frozen=True)
class Lit(Expr):
    value: Any
    sort: Sort


@dataclass(frozen=True)
class Var(Expr):
    name: str


@dataclass(frozen=True)
class BinOp(Expr):
    op: str
    left: Expr
    right: Expr


@dataclass(frozen=True)
class Not(Expr):
    operand: Expr


UNIT = Lit(None, Sort.UNIT)


def literal(value: Any) -> Lit:
    """Wrap a Python value as a literal of the matching sort."""
    if value is None:
        return UNIT
    if isinstance(value, bool):
        return Lit(value, Sort.BOOL)
    if isinstance(value, int):
        return Lit(value, Sort.INT)
    if isinstance(value, str):
        return Lit(value, Sort.STR)
    raise SortError(f"No sort for value {value!r}")


class SortError(Exception):
    pass


class EvaluationError(Exception):
    pass


_OPERATORS = {
    "+": ((Sort.INT, Sort.INT), Sort.INT),
    "-": ((Sort.INT, Sort.INT), Sort.INT),
    "<": ((Sort.INT, Sort.INT), Sort.BOOL),
}


def expr_sort(e: Expr, env: Optional[Mapping[str, Sort]] = None) -> Sort:
    """Infer the sort of an expression under sorts for its variables.

    Raises:
        SortError: if an operator is applied to operands of the wrong sort.
    """
    env = env or {}
    if isinstance(e, Lit):
        return e.sort
    if isinstance(e, Var):
        if e.name not in env:
            raise SortError(f"Variable {e.name} is unbound")
        return env[e.name]
    if isinstance(e, Not):
        if expr_sort(e.operand, env) is not Sort.BOOL:
            raise SortError("not expects Bool")
        return Sort.BOOL
    if isinstance(e, BinOp):
        left, right = expr_sort(e.left, env), expr_sort(e.right, env)
        if e.op == "==":
            if left is not right:
                raise SortError(f"== compares {left} with {right}")
            return Sort.BOOL
        operands, result = _OPERATORS[e.op]
        if (left, right) != operands:
            raise SortError(f"{e.op} expects Int operands, got {left} and {right}")
        return result
    raise SortError(f"Unknown expression {e!r}")


def eval_expr(e: Expr, env: Optional[Mapping[str, Lit]] = None) -> Lit:
    """Evaluate an expression to a literal.

    Raises:
        SortError: on operator and operand mismatch.
        EvaluationError: on unbound variables.
    """
    env = env or {}
    if isinstance(e, Lit):
        return e
    if isinstance(e, Var):
        if e.name not in env:
            raise EvaluationError(f"Variable {e.name} is unbound")
        return env[e.name]
    if isinstance(e, Not):
        v = eval_expr(e.operand, env)
        if v.sort is not Sort.BOOL:
            raise SortError("not expects Bool")
        return Lit(not v.value, Sort.BOOL)
    if isinstance(e, BinOp):
        left, right = eval_expr(e.left, env), eval_expr(e.right, env)
        if e.op == "==":
            if left.sort is not right.sort:
                raise SortError(f"== compares {left.sort} with {right.sort}")
            return Lit(left.value == right.value, Sort.BOOL)
        operands, result = _OPERATORS[e.op]
        if (left.sort, right.sort) != operands:
            raise SortError(f"{e.op} expects Int operands, got {left.sort} and {right.sort}")
        if e.op == "+":
            return Lit(left.value + right.value, result)
        if e.op == "-":
            return Lit(left.value - right.value, result)
        return Lit(left.value < right.value, result)
    raise EvaluationError(f"Unknown expression {e!r}")


def substitute_expr(e: Expr, name: str, value: Lit) -> Expr:
    if isinstance(e, Var):
        return value if e.name == name else e
    if isinstance(e, Not):
        return Not(substitute_expr(e.operand, name, value))
    if isinstance(e, BinOp):
        return BinOp(e.op, substitute_expr(e.left, name, value), substitute_expr(e.right, name, value))
    return e


## PROCESSES

class Process:
    pass


@dataclass(frozen=True)
class Inact(Process):
    pass


@dataclass(frozen=True)
class Crashed(Process):
    pass


@dataclass(frozen=True)
class Output(Process):
    receiver: Role
    label: Label
    payload: Expr
    cont: Process
    span: Optional[Span] = field(default=None, compare=False, repr=False)


@dataclass(frozen=True)
class InputArm:
    label: Label
    binder: Optional[str]
    cont: Process
    span: Optional[Span] = field(default=None, compare=False, repr=False)


@dataclass(frozen=True)
class InputSum(Process):
    sender: Role
    arms: Tuple[InputArm, ...]
    span: Optional[Span] = field(default=None, compare=False, repr=False)

    @property
    def labels(self) -> Tuple[Label, ...]:
        return tuple(arm.label for arm in self.arms)

    def arm(self, label: Label) -> Optional[InputArm]:
        for arm in self.arms:
            if arm.label == label:
                return arm
        return None


@dataclass(frozen=True)
class Cond(Process):
    cond: Expr
    then: Process
    orelse: Process
    span: Optional[Span] = field(default=None, compare=False, repr=False)


@dataclass(frozen=True)
class ProcRec(Process):
    name: str
    body: Process
    span: Optional[Span] = field(default=None, compare=False, repr=False)


@dataclass(frozen=True)
class ProcVar(Process):
    name: str
    span: Optional[Span] = field(default=None, compare=False, repr=False)


INACT = Inact()
CRASHED = Crashed()


def substitute_value(p: Process, name: str, value: Lit) -> Process:
    """Replace the free expression variable ``name`` by ``value`` throughout ``p``."""
    if isinstance(p, Output):
        return replace(p, payload=substitute_expr(p.payload, name, value),
                       cont=substitute_value(p.cont, name, value))
    if isinstance(p, InputSum):
        arms = tuple(arm if arm.binder == name else replace(arm, cont=substitute_value(arm.cont, name, value))
                     for arm in p.arms)
        return replace(p, arms=arms)
    if isinstance(p, Cond):
        return replace(p, cond=substitute_expr(p.cond, name, value),
                       then=substitute_value(p.then, name, value),
                       orelse=substitute_value(p.orelse, name, value))
    if isinstance(p, ProcRec):
        return replace(p, body=substitute_value(p.body, name, value))
    return p


def substitute_process(p: Process, name: str, replacement: Process) -> Process:
    """Replace the free process variable ``name`` by ``replacement``."""
    if isinstance(p, ProcVar):
        return replacement if p.name == name else p
    if isinstance(p, ProcRec):
        if p.name == name:
            return p
        return replace(p, body=substitute_process(p.body, name, replacement))
    if isinstance(p, Output):
        return replace(p, cont=substitute_process(p.cont, name, replacement))
    if isinstance(p, InputSum):
        return replace(p, arms=tuple(replace(a, cont=substitute_process(a.cont, name, replacement))
                                     for a in p.arms))
    if isinstance(p, Cond):
        return replace(p, then=substitute_process(p.then, name, replacement),
                       orelse=substitute_process(p.orelse, name, replacement))
    return p


def resolve_head(p: Process) -> Process:
    """Unfold recursion and decide conditionals until an action, 0 or the crashed process."""
    for _ in range(10_000):
        if isinstance(p, ProcRec):
            p = substitute_process(p.body, p.name, p)
        elif isinstance(p, Cond):
            test = eval_expr(p.cond)
            if test.sort is not Sort.BOOL:
                raise SortError("Condition must be Bool")
            p = p.then if test.value else p.orelse
        else:
            return p
    raise EvaluationError("Process does not reach an action")


def is_guarded(p: Process, bound: Tuple[str, ...] = ()) -> bool:
    """True iff every recursion variable occurs under a send or a receive."""
    if isinstance(p, ProcVar):
        return p.name not in bound
    if isinstance(p, ProcRec):
        return is_guarded(p.body, bound + (p.name,))
    if isinstance(p, Cond):
        return is_guarded(p.then, bound) and is_guarded(p.orelse, bound)
    if isinstance(p, Output):
        return is_guarded(p.cont)
    if isinstance(p, InputSum):
        return all(is_guarded(arm.cont) for arm in p.arms)
    return True


## QUEUES AND SESSIONS

@dataclass(frozen=True)
class Message:
    origin: Role
    label: Label
    value: Lit = UNIT


class Unavailable:
    """Incoming queue of a crashed role."""

    def __repr__(self) -> str:
        return "UNAVAILABLE"

    def __eq__(self, other) -> bool:
        return isinstance(other, Unavailable)

    def __hash__(self) -> int:
        return hash("UNAVAILABLE")


UNAVAILABLE = Unavailable()

Queue = Union[Tuple[Message, ...], Unavailable]


@dataclass(frozen=True)
class Entry:
    role: Role
    process: Process
    queue: Queue = ()


@dataclass(frozen=True)
class Session:
    """Role-indexed processes with their incoming queues, sorted by role."""
    entries: Tuple[Entry, ...]

    @classmethod
    def of(cls, processes: Mapping[Role, Process],
           queues: Optional[Mapping[Role, Iterable[Message]]] = None) -> "Session":
        queues = queues or {}
        entries = []
        for role in sorted(processes):
            process = processes[role]
            if isinstance(process, Crashed):
                queue: Queue = UNAVAILABLE
            else:
                queue = tuple(queues.get(role, ()))
            entries.append(Entry(role, process, queue))
        return cls(tuple(entries))

    @property
    def roles(self) -> Tuple[Role, ...]:
        return tuple(e.role for e in self.entries)

    def entry(self, role: Role) -> Entry:
        for e in self.entries:
            if e.role == role:
                return e
        raise KeyError(role)

    def process(self, role: Role) -> Process:
        return self.entry(role).process

    def queue(self, role: Role) -> Queue:
        return self.entry(role).queue

    def update(self, role: Role, **changes: Any) -> "Session":
        return Session(tuple(replace(e, **changes) if e.role == role else e for e in self.entries))

    def processes(self) -> Dict[Role, Process]:
        return {e.role: e.process for e in self.entries}
