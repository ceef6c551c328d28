"""
Deterministic printers for types, protocols, processes and sessions.

Global and local types print in a compact term notation; ``render_protocol`` prints the
statement syntax accepted by ``parsing.parse_protocol``.
"""
from typing import List, Tuple

from .core_model import (Arm, GComm, GEnd, GlobalType, GRec, GVar, LEnd, LocalType,
                         LRec, LSelect, LStop, LVar, Sort)
from .process import (BinOp, Cond, Crashed, Expr, Inact, InputSum, Lit, Not, Output, Process,
                      ProcRec, ProcVar, Queue, Session, Unavailable, Var)

CRASH_MARK = "⚡"


def _message(arm: Arm) -> str:
    return arm.label if arm.sort is Sort.UNIT else f"{arm.label}({arm.sort})"


def render_global(g: GlobalType) -> str:
    if isinstance(g, GEnd):
        return "end"
    if isinstance(g, GVar):
        return g.name
    if isinstance(g, GRec):
        return f"rec {g.name}. {render_global(g.body)}"
    sender = g.sender + (CRASH_MARK if g.sender_crashed else "")
    receiver = g.receiver + (CRASH_MARK if g.receiver_crashed else "")
    arrow = "~>" if g.en_route else "->"
    head = f"{sender} {arrow} {receiver}"
    if g.en_route:
        committed = g.arms[g.committed]
        if len(g.arms) == 1:
            return f"{head}: {_message(committed)}. {render_global(committed.cont)}"
        return f"{head}: {committed.label}{_global_arms(g.arms)}"
    if len(g.arms) == 1:
        arm = g.arms[0]
        return f"{head}: {_message(arm)}. {render_global(arm.cont)}"
    return f"{head}{_global_arms(g.arms)}"


def _global_arms(arms: Tuple[Arm, ...]) -> str:
    inner = ", ".join(f"{_message(a)}. {render_global(a.cont)}" for a in arms)
    return f"{{ {inner} }}"


def render_local(t: LocalType) -> str:
    if isinstance(t, LEnd):
        return "end"
    if isinstance(t, LStop):
        return "stop"
    if isinstance(t, LVar):
        return t.name
    if isinstance(t, LRec):
        return f"rec {t.name}. {render_local(t.body)}"
    op = "⊕" if isinstance(t, LSelect) else "&"
    if len(t.arms) == 1:
        arm = t.arms[0]
        return f"{t.peer} {op} {_message(arm)}. {render_local(arm.cont)}"
    inner = ", ".join(f"{_message(a)}. {render_local(a.cont)}" for a in t.arms)
    return f"{t.peer} {op}{{ {inner} }}"


## STATEMENT SYNTAX

def render_protocol(decl) -> str:
    """Print a ProtocolDecl in the statement syntax.

    Raises:
        ValueError: if the body carries runtime constructs.
    """
    roles = ", ".join(("reliable role " if reliable else "role ") + role
                      for role, reliable in decl.roles)
    body = _statements(decl.body)
    inner = f" {body} " if body else " "
    return f"global protocol {decl.name}({roles}) {{{inner}}}"


def _statements(g: GlobalType) -> str:
    if isinstance(g, GEnd):
        return ""
    if isinstance(g, GVar):
        return f"continue {g.name};"
    if isinstance(g, GRec):
        return f"rec {g.name} {_block(g.body)}"
    if g.en_route or g.sender_crashed or g.receiver_crashed:
        raise ValueError("Runtime constructs have no statement syntax")
    if len(g.arms) == 1:
        return _join(_interaction(g, g.arms[0]), _statements(g.arms[0].cont))
    blocks = " or ".join(_block_of(_join(_interaction(g, a), _statements(a.cont))) for a in g.arms)
    return f"choice at {g.sender} {blocks}"


def _interaction(g: GComm, arm: Arm) -> str:
    return f"{_message(arm)} from {g.sender} to {g.receiver};"


def _block(g: GlobalType) -> str:
    return _block_of(_statements(g))


def _block_of(text: str) -> str:
    return f"{{ {text} }}" if text else "{ }"


def _join(*parts: str) -> str:
    return " ".join(p for p in parts if p)


## PROCESSES

_PRECEDENCE = {"==": 1, "<": 1, "+": 2, "-": 2}
_ESCAPES = {"\\": "\\\\", "\"": "\\\"", "\n": "\\n", "\t": "\\t", "\r": "\\r", "\f": "\\f"}


def render_expr(e: Expr) -> str:
    if isinstance(e, Lit):
        if e.sort is Sort.BOOL:
            return "true" if e.value else "false"
        if e.sort is Sort.STR:
            return _quote(e.value)
        if e.sort is Sort.UNIT:
            return "()"
        return str(e.value)
    if isinstance(e, Var):
        return e.name
    if isinstance(e, Not):
        return f"not {_operand(e.operand)}"
    if isinstance(e, BinOp):
        return f"{_operand(e.left)} {e.op} {_operand(e.right)}"
    return repr(e)


def _quote(text: str) -> str:
    return "\"" + "".join(_ESCAPES.get(ch, ch) for ch in text) + "\""


def _operand(e: Expr) -> str:
    text = render_expr(e)
    return f"({text})" if isinstance(e, (BinOp, Not)) else text


def render_process(p: Process) -> str:
    if isinstance(p, Inact):
        return "end"
    if isinstance(p, Crashed):
        return CRASH_MARK
    if isinstance(p, ProcVar):
        return p.name
    if isinstance(p, ProcRec):
        return f"mu {p.name}. {render_process(p.body)}"
    if isinstance(p, Cond):
        return (f"if {render_expr(p.cond)} then {render_process(p.then)} "
                f"else {render_process(p.orelse)}")
    if isinstance(p, Output):
        payload = "" if p.payload == Lit(None, Sort.UNIT) else f"({render_expr(p.payload)})"
        return f"send {p.receiver} {p.label}{payload}. {render_process(p.cont)}"
    if isinstance(p, InputSum):
        arms = []
        for arm in p.arms:
            binder = f"({arm.binder})" if arm.binder else ""
            arms.append(f"{arm.label}{binder} -> {render_process(arm.cont)}")
        return f"recv {p.sender} {{ {', '.join(arms)} }}"
    return repr(p)


def render_queue(queue: Queue) -> str:
    if isinstance(queue, Unavailable):
        return "⊘"
    items: List[str] = []
    for msg in queue:
        payload = "" if msg.value.sort is Sort.UNIT else f"({render_expr(msg.value)})"
        items.append(f"{msg.origin}: {msg.label}{payload}")
    return f"[{', '.join(items)}]"


def render_session(m: Session) -> str:
    return " | ".join(f"{e.role} = {render_process(e.process)} {render_queue(e.queue)}"
                      for e in m.entries)
