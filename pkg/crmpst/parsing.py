"""
Parsers for protocol files (.crmpst) and process scripts (.crproc).

Protocols use a Scribble-style statement syntax with ``reliable`` role declarations and the
reserved ``crash`` label marking crash-handling branches::

    global protocol SimpleLogger(role U, reliable role L) {
        rec t0 {
            choice at U { write(Str) from U to L; continue t0; }
            or { crash from U to L; }
        }
    }

Process scripts define one process per role, and optionally the initial incoming queues::

    role I = recv L { trigger -> send L fatal. end }
    queue I = [L: trigger]
"""
import logging
from dataclasses import dataclass, field
from typing import Dict, Iterable, List, Optional, Set, Tuple

import pyparsing as pp

from .DEFAULTS import CRASH_LABEL, SORT_NAMES
from .core_model import (END, Arm, GComm, GlobalType, GRec, GVar, Role, Sort, is_crash,
                         mentioned_roles, well_formed)
from .diagnostics import Diagnostic, Span, errors_in
from .process import (BinOp, Cond, InputArm, InputSum, Lit, Message, Not, Output, Process,
                      ProcRec, ProcVar, Session, UNIT, INACT, Var, is_guarded)

logger = logging.getLogger(__name__)

pp.ParserElement.enable_packrat()

IDENT = pp.Word(pp.alphas + "_", pp.alphanums + "_")


def _identifier(keywords: Iterable[str]) -> pp.ParserElement:
    reserved = frozenset(keywords)
    return IDENT.copy().add_condition(lambda t: t[0] not in reserved, message="reserved word")


class ProtocolError(Exception):
    """Raised when a source text has errors; carries every Diagnostic collected."""

    def __init__(self, diagnostics: List[Diagnostic]):
        self.diagnostics = diagnostics
        summary = "; ".join(str(d) for d in diagnostics[:3])
        super().__init__(summary or "invalid source")


@dataclass(frozen=True)
class ProtocolDecl:
    name: str
    roles: Tuple[Tuple[Role, bool], ...]
    body: GlobalType
    warnings: Tuple[Diagnostic, ...] = field(default=(), compare=False)

    @property
    def role_names(self) -> Tuple[Role, ...]:
        return tuple(role for role, _ in self.roles)

    @property
    def reliable(self) -> frozenset:
        return frozenset(role for role, reliable in self.roles if reliable)


def _span(source: str, loc: int, length: int = 1) -> Span:
    return Span(pp.lineno(loc, source), pp.col(loc, source), length)


def _syntax_error(source: str, error: pp.ParseBaseException) -> Diagnostic:
    return Diagnostic.error("SyntaxError", error.msg, Span(error.lineno, error.col, 1))


## PROTOCOLS

PROTOCOL_KEYWORDS = ("global", "protocol", "role", "reliable", "from", "to", "choice", "at",
                     "or", "rec", "continue", "end")


@dataclass
class _Message:
    label: str
    sort: Sort
    sender: Role
    receiver: Role
    span: Span


@dataclass
class _Choice:
    at: Role
    blocks: List[list]
    span: Span


@dataclass
class _Rec:
    name: str
    block: list
    span: Span


@dataclass
class _Continue:
    name: str
    span: Span


@dataclass
class _End:
    span: Span


@dataclass
class _RoleDecl:
    name: Role
    reliable: bool
    span: Span


def _protocol_grammar() -> pp.ParserElement:
    LPAR, RPAR, LBRACE, RBRACE, SEMI = map(pp.Suppress, "(){};")
    kw = {k: pp.Keyword(k) for k in PROTOCOL_KEYWORDS}
    ident = _identifier(PROTOCOL_KEYWORDS)
    sort = pp.one_of(SORT_NAMES, as_keyword=True)

    block = pp.Forward()
    message = (ident("label") + pp.Optional(LPAR + sort("sort") + RPAR)
               + kw["from"].suppress() + ident("sender") + kw["to"].suppress() + ident("receiver") + SEMI)
    message.set_parse_action(lambda s, l, t: _Message(
        t.label, Sort(t.sort or "Unit"), t.sender, t.receiver, _span(s, l, len(t.label))))
    choice = (kw["choice"].suppress() + kw["at"].suppress() + ident
              + block + pp.OneOrMore(kw["or"].suppress() + block))
    choice.set_parse_action(lambda s, l, t: _Choice(t[0], [list(b) for b in t[1:]], _span(s, l, 6)))
    rec = kw["rec"].suppress() + ident + block
    rec.set_parse_action(lambda s, l, t: _Rec(t[0], list(t[1]), _span(s, l, 3)))
    cont = kw["continue"].suppress() + ident + SEMI
    cont.set_parse_action(lambda s, l, t: _Continue(t[0], _span(s, l, 8)))
    end = kw["end"].suppress() + pp.Optional(SEMI)
    end.set_parse_action(lambda s, l, t: _End(_span(s, l, 3)))

    statement = message | choice | rec | cont | end
    block <<= LBRACE + pp.Group(pp.ZeroOrMore(statement)) + RBRACE

    role_decl = pp.Optional(kw["reliable"])("reliable") + kw["role"].suppress() + ident("name")
    role_decl.set_parse_action(lambda s, l, t: _RoleDecl(t.name, bool(t.reliable), _span(s, l, len(t.name))))

    protocol = (kw["global"].suppress() + kw["protocol"].suppress() + ident("name")
                + LPAR + pp.Group(pp.DelimitedList(role_decl))("roles") + RPAR + block)
    protocol.ignore(pp.dbl_slash_comment)
    return protocol


_PROTOCOL = _protocol_grammar()


class _BodyBuilder:
    """Folds statement lists into a global type; statements after a block continue it."""

    def __init__(self, declared: Dict[Role, _RoleDecl]):
        self.declared = declared
        self.diagnostics: List[Diagnostic] = []

    def _role(self, role: Role, span: Span) -> None:
        if role not in self.declared:
            self.diagnostics.append(Diagnostic.error("UndeclaredRole", f"role {role} is not declared", span))

    def block(self, statements: list, cont: GlobalType) -> GlobalType:
        if not statements:
            return cont
        head, rest = statements[0], statements[1:]
        if isinstance(head, (_End, _Continue)):
            if rest:
                rule = "EndNotInTail" if isinstance(head, _End) else "ContinueNotInTail"
                self.diagnostics.append(Diagnostic.error(rule, "statements follow a block terminator", head.span))
            return END if isinstance(head, _End) else GVar(head.name, head.span)
        if isinstance(head, _Message):
            self._role(head.sender, head.span)
            self._role(head.receiver, head.span)
            arm = Arm(head.label, head.sort, self.block(rest, cont), head.span)
            return GComm(head.sender, head.receiver, (arm,), span=head.span)
        after = self.block(rest, cont)
        if isinstance(head, _Rec):
            return GRec(head.name, self.block(head.block, after), head.span)
        return self._choice(head, after)

    def _choice(self, choice: _Choice, after: GlobalType) -> GlobalType:
        self._role(choice.at, choice.span)
        receiver: Optional[Role] = None
        arms: List[Arm] = []
        for statements in choice.blocks:
            if not statements or not isinstance(statements[0], _Message):
                self.diagnostics.append(Diagnostic.error(
                    "ChoiceArmShape", f"every arm must begin with a message from {choice.at}", choice.span))
                continue
            first = statements[0]
            if first.sender != choice.at:
                self.diagnostics.append(Diagnostic.error(
                    "MismatchedSender", f"arm sends from {first.sender}, choice is at {choice.at}", first.span))
            if receiver is None:
                receiver = first.receiver
            elif first.receiver != receiver:
                self.diagnostics.append(Diagnostic.error(
                    "MismatchedReceiver", f"arm sends to {first.receiver}, other arms to {receiver}", first.span))
            self._role(first.receiver, first.span)
            arms.append(Arm(first.label, first.sort, self.block(statements[1:], after), first.span))
        if receiver is None:
            return END
        return GComm(choice.at, receiver, tuple(arms), span=choice.span)


def parse_protocol(source: str) -> ProtocolDecl:
    """Parse a protocol declaration.

    Args:
        source: Text of a .crmpst file.

    Returns:
        The ProtocolDecl; warnings (e.g. unused roles) are attached to it.

    Raises:
        ProtocolError: carrying the syntax, structure and well-formedness diagnostics.
    """
    try:
        parsed = _PROTOCOL.parse_string(source, parse_all=True)
    except pp.ParseBaseException as e:
        raise ProtocolError([_syntax_error(source, e)])

    diagnostics: List[Diagnostic] = []
    declared: Dict[Role, _RoleDecl] = {}
    for decl in parsed.roles:
        if decl.name in declared:
            diagnostics.append(Diagnostic.error("DuplicateRole", f"role {decl.name} declared twice", decl.span))
        declared[decl.name] = decl

    builder = _BodyBuilder(declared)
    body = builder.block(list(parsed[-1]), END)
    diagnostics.extend(builder.diagnostics)
    reliable = {name for name, d in declared.items() if d.reliable}
    if not errors_in(diagnostics):
        diagnostics.extend(well_formed(body, reliable))

    used = mentioned_roles(body)
    for name, decl in declared.items():
        if name not in used:
            diagnostics.append(Diagnostic.warning("UnusedRole", f"role {name} takes no part", decl.span))

    if errors_in(diagnostics):
        logger.debug(f"Protocol {parsed.name} rejected with {len(errors_in(diagnostics))} errors")
        raise ProtocolError(errors_in(diagnostics))
    roles = tuple((name, d.reliable) for name, d in declared.items())
    return ProtocolDecl(parsed.name, roles, body, tuple(diagnostics))


## PROCESS SCRIPTS

PROCESS_KEYWORDS = ("send", "recv", "if", "then", "else", "mu", "end", "true", "false", "not",
                    "role", "queue")


@dataclass(frozen=True)
class ProcessScript:
    processes: Dict[Role, Process]
    queues: Dict[Role, Tuple[Message, ...]]

    def session(self) -> Session:
        return Session.of(self.processes, self.queues)


@dataclass
class _RoleDef:
    role: Role
    process: Process
    span: Span


@dataclass
class _QueueDef:
    role: Role
    messages: List[Message]
    span: Span


def _fold_binary(s, l, t):
    items = t[0]
    expr = items[0]
    for i in range(1, len(items), 2):
        expr = BinOp(items[i], expr, items[i + 1])
    return expr


def _fold_not(s, l, t):
    items = t[0]
    expr = items[-1]
    for _ in items[:-1]:
        expr = Not(expr)
    return expr


def _broadcast(s, l, t):
    cont = t.cont[0]
    payload = t.payload[0] if t.payload else UNIT
    span = _span(s, l, 4)
    for receiver in reversed(list(t.receivers)):
        cont = Output(receiver, t.label, payload, cont, span)
    return cont


def _process_grammar() -> pp.ParserElement:
    LPAR, RPAR, LBRACE, RBRACE, LBRACK, RBRACK = map(pp.Suppress, "(){}[]")
    DOT, COMMA, COLON, SEMI, EQ = map(pp.Suppress, ".,:;=")
    ARROW = pp.Suppress("->")
    kw = {k: pp.Keyword(k) for k in PROCESS_KEYWORDS}
    ident = _identifier(PROCESS_KEYWORDS)

    integer = pp.Word(pp.nums).set_parse_action(lambda t: Lit(int(t[0]), Sort.INT))
    boolean = (kw["true"] | kw["false"]).set_parse_action(lambda t: Lit(t[0] == "true", Sort.BOOL))
    string = pp.QuotedString('"', esc_char="\\").set_parse_action(lambda t: Lit(t[0], Sort.STR))
    constant = integer | boolean | string
    variable = ident.copy().add_parse_action(lambda t: Var(t[0]))
    expr = pp.infix_notation(constant | variable, [
        (kw["not"], 1, pp.OpAssoc.RIGHT, _fold_not),
        (pp.one_of("+ -"), 2, pp.OpAssoc.LEFT, _fold_binary),
        (pp.one_of("< =="), 2, pp.OpAssoc.LEFT, _fold_binary),
    ])

    proc = pp.Forward()
    receivers = pp.Group(ident | (LBRACK + pp.DelimitedList(ident) + RBRACK))
    send = (kw["send"].suppress() + receivers("receivers") + ident("label")
            + pp.Optional(LPAR + pp.Group(expr)("payload") + RPAR) + DOT + pp.Group(proc)("cont"))
    send.set_parse_action(_broadcast)

    branch = (ident("label") + pp.Optional(LPAR + ident("binder") + RPAR)
              + ARROW + pp.Group(proc)("cont"))
    branch.set_parse_action(lambda s, l, t: InputArm(t.label, t.binder or None, t.cont[0],
                                                     _span(s, l, len(t.label))))
    recv = kw["recv"].suppress() + ident + LBRACE + pp.DelimitedList(branch) + RBRACE
    recv.set_parse_action(lambda s, l, t: InputSum(t[0], tuple(t[1:]), _span(s, l, 4)))

    cond = (kw["if"].suppress() + expr + kw["then"].suppress() + proc
            + kw["else"].suppress() + proc)
    cond.set_parse_action(lambda s, l, t: Cond(t[0], t[1], t[2], _span(s, l, 2)))
    mu = kw["mu"].suppress() + ident + DOT + proc
    mu.set_parse_action(lambda s, l, t: ProcRec(t[0], t[1], _span(s, l, 2)))
    end = kw["end"].copy().set_parse_action(lambda: INACT)
    call = ident.copy().add_parse_action(lambda s, l, t: ProcVar(t[0], _span(s, l, len(t[0]))))
    proc <<= send | recv | cond | mu | end | call

    role_def = kw["role"].suppress() + ident + EQ + proc + pp.Optional(SEMI)
    role_def.set_parse_action(lambda s, l, t: _RoleDef(t[0], t[1], _span(s, l, 4)))
    message = ident("origin") + COLON + ident("label") + pp.Optional(LPAR + constant("value") + RPAR)
    message.set_parse_action(lambda t: Message(t.origin, t.label, t.value if t.value else UNIT))
    queue_def = (kw["queue"].suppress() + ident + EQ + LBRACK
                 + pp.Group(pp.Optional(pp.DelimitedList(message))) + RBRACK + pp.Optional(SEMI))
    queue_def.set_parse_action(lambda s, l, t: _QueueDef(t[0], list(t[1]), _span(s, l, 5)))

    script = pp.ZeroOrMore(role_def | queue_def)
    script.ignore(pp.dbl_slash_comment)
    return script


_SCRIPT = _process_grammar()


def _check_process(role: Role, p: Process, bound: Tuple[str, ...], roles: Optional[Set[Role]],
                   out: List[Diagnostic]) -> None:
    if isinstance(p, Output):
        if is_crash(p.label):
            out.append(Diagnostic.error("CrashLabelSent", f"{role} sends the reserved label {CRASH_LABEL}", p.span))
        _check_peer(role, p.receiver, roles, p.span, out)
        _check_process(role, p.cont, bound, roles, out)
    elif isinstance(p, InputSum):
        _check_peer(role, p.sender, roles, p.span, out)
        seen: Set[str] = set()
        for arm in p.arms:
            if arm.label in seen:
                out.append(Diagnostic.error("DuplicateLabel", f"label {arm.label} repeated", arm.span))
            seen.add(arm.label)
            if is_crash(arm.label) and arm.binder:
                out.append(Diagnostic.error("CrashBinder", "the crash branch binds no value", arm.span))
            _check_process(role, arm.cont, bound, roles, out)
    elif isinstance(p, Cond):
        _check_process(role, p.then, bound, roles, out)
        _check_process(role, p.orelse, bound, roles, out)
    elif isinstance(p, ProcRec):
        if not is_guarded(p):
            out.append(Diagnostic.error("UnguardedRecursion", f"mu {p.name} is not guarded", p.span))
        _check_process(role, p.body, bound + (p.name,), roles, out)
    elif isinstance(p, ProcVar) and p.name not in bound:
        out.append(Diagnostic.error("FreeProcessVariable", f"{p.name} is not bound", p.span))


def _check_peer(role: Role, peer: Role, roles: Optional[Set[Role]], span: Optional[Span],
                out: List[Diagnostic]) -> None:
    if peer == role:
        out.append(Diagnostic.error("SelfCommunication", f"{role} communicates with itself", span))
    elif roles is not None and peer not in roles:
        out.append(Diagnostic.error("UndeclaredRole", f"role {peer} is not declared", span))


def parse_process_script(source: str, decl: Optional[ProtocolDecl] = None) -> ProcessScript:
    """Parse a process script, checking its roles against ``decl`` when given.

    Raises:
        ProtocolError: carrying the diagnostics.
    """
    try:
        parsed = _SCRIPT.parse_string(source, parse_all=True)
    except pp.ParseBaseException as e:
        raise ProtocolError([_syntax_error(source, e)])

    roles = set(decl.role_names) if decl else None
    diagnostics: List[Diagnostic] = []
    processes: Dict[Role, Process] = {}
    queues: Dict[Role, Tuple[Message, ...]] = {}
    for definition in parsed:
        if roles is not None and definition.role not in roles:
            diagnostics.append(Diagnostic.error("UndeclaredRole", f"role {definition.role} is not declared",
                                                definition.span))
        target = processes if isinstance(definition, _RoleDef) else queues
        if definition.role in target:
            diagnostics.append(Diagnostic.error("DuplicateDefinition", f"{definition.role} defined twice",
                                                definition.span))
        if isinstance(definition, _RoleDef):
            processes[definition.role] = definition.process
            _check_process(definition.role, definition.process, (), roles, diagnostics)
        else:
            queues[definition.role] = tuple(definition.messages)
            for msg in definition.messages:
                _check_peer(definition.role, msg.origin, roles, definition.span, diagnostics)
    for role in (decl.role_names if decl else ()):
        if role not in processes:
            diagnostics.append(Diagnostic.error("MissingProcess", f"no process for role {role}"))
    for role in queues:
        if role not in processes:
            diagnostics.append(Diagnostic.error("MissingProcess", f"queue given for role {role} without a process"))

    if errors_in(diagnostics):
        raise ProtocolError(errors_in(diagnostics))
    return ProcessScript(processes, queues)
