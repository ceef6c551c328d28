"""
Term language of global and local types with crash-stop annotations.

Global types describe a protocol from a bird's-eye view. At runtime they also carry crash
annotations on roles and en-route transmissions (a message sent but not yet received).
Local types describe the behaviour of a single role; ``stop`` is the type of a crashed endpoint.

All terms are immutable and hashable. Recursion uses named binders and is unfolded on demand.
"""
import logging
from dataclasses import dataclass, field, replace
from enum import Enum
from functools import lru_cache
from typing import FrozenSet, Iterable, List, Optional, Set, Tuple, Union

from .DEFAULTS import CRASH_LABEL
from .diagnostics import Diagnostic, Span

logger = logging.getLogger(__name__)

Role = str
Label = str


def is_crash(label: Label) -> bool:
    return label == CRASH_LABEL


class Sort(Enum):
    UNIT = "Unit"
    INT = "Int"
    BOOL = "Bool"
    STR = "Str"

    def __str__(self) -> str:
        return self.value


@dataclass(frozen=True)
class Arm:
    """One branch of a choice: label, payload sort and continuation."""
    label: Label
    sort: Sort
    cont: "Term"
    span: Optional[Span] = field(default=None, compare=False, repr=False)

    @property
    def is_crash(self) -> bool:
        return is_crash(self.label)


def crash_index(arms: Tuple[Arm, ...]) -> Optional[int]:
    for i, arm in enumerate(arms):
        if arm.is_crash:
            return i
    return None


## GLOBAL TYPES

class GlobalType:
    pass


@dataclass(frozen=True)
class GEnd(GlobalType):
    pass


@dataclass(frozen=True)
class GVar(GlobalType):
    name: str
    span: Optional[Span] = field(default=None, compare=False, repr=False)


@dataclass(frozen=True)
class GRec(GlobalType):
    name: str
    body: GlobalType
    span: Optional[Span] = field(default=None, compare=False, repr=False)


@dataclass(frozen=True)
class GComm(GlobalType):
    """A transmission from sender to receiver.

    ``committed is None`` is a pending transmission p→q; ``committed == j`` is the en-route
    transmission p⇝q:j whose j-th message sits in the queue (or is the crash pseudo-message
    when the sender has crashed).
    """
    sender: Role
    receiver: Role
    arms: Tuple[Arm, ...]
    sender_crashed: bool = False
    receiver_crashed: bool = False
    committed: Optional[int] = None
    span: Optional[Span] = field(default=None, compare=False, repr=False)

    @property
    def en_route(self) -> bool:
        return self.committed is not None

    @property
    def labels(self) -> Tuple[Label, ...]:
        return tuple(arm.label for arm in self.arms)

    @property
    def crash_index(self) -> Optional[int]:
        return crash_index(self.arms)

    def with_conts(self, conts: Iterable[GlobalType]) -> "GComm":
        arms = tuple(replace(arm, cont=cont) for arm, cont in zip(self.arms, conts))
        return replace(self, arms=arms)


## LOCAL TYPES

class LocalType:
    pass


@dataclass(frozen=True)
class LEnd(LocalType):
    pass


@dataclass(frozen=True)
class LStop(LocalType):
    pass


@dataclass(frozen=True)
class LVar(LocalType):
    name: str


@dataclass(frozen=True)
class LRec(LocalType):
    name: str
    body: LocalType


@dataclass(frozen=True)
class LSelect(LocalType):
    peer: Role
    arms: Tuple[Arm, ...]

    @property
    def labels(self) -> Tuple[Label, ...]:
        return tuple(arm.label for arm in self.arms)


@dataclass(frozen=True)
class LBranch(LocalType):
    peer: Role
    arms: Tuple[Arm, ...]

    @property
    def labels(self) -> Tuple[Label, ...]:
        return tuple(arm.label for arm in self.arms)

    @property
    def crash_arm(self) -> Optional[Arm]:
        k = crash_index(self.arms)
        return None if k is None else self.arms[k]


Term = Union[GlobalType, LocalType]

END = GEnd()
L_END = LEnd()
STOP = LStop()


## RECURSION

def substitute(term: Term, name: str, replacement: Term) -> Term:
    """Replace free occurrences of the recursion variable ``name``."""
    if isinstance(term, (GVar, LVar)):
        return replacement if term.name == name else term
    if isinstance(term, (GRec, LRec)):
        if term.name == name:
            return term
        return replace(term, body=substitute(term.body, name, replacement))
    if isinstance(term, (GComm, LSelect, LBranch)):
        arms = tuple(replace(a, cont=substitute(a.cont, name, replacement)) for a in term.arms)
        return replace(term, arms=arms)
    return term


def unfold_once(term: Term) -> Term:
    if isinstance(term, (GRec, LRec)):
        return substitute(term.body, term.name, term)
    return term


def unfold(term: Term) -> Term:
    """Unfold until the head is not a binder. Terminates on contractive terms."""
    while isinstance(term, (GRec, LRec)):
        term = unfold_once(term)
    return term


def free_vars(term: Term) -> FrozenSet[str]:
    if isinstance(term, (GVar, LVar)):
        return frozenset({term.name})
    if isinstance(term, (GRec, LRec)):
        return free_vars(term.body) - {term.name}
    if isinstance(term, (GComm, LSelect, LBranch)):
        return frozenset().union(*(free_vars(a.cont) for a in term.arms))
    return frozenset()


def is_contractive(term: Union[GRec, LRec]) -> bool:
    body = term.body
    while isinstance(body, (GRec, LRec)):
        body = body.body
    return not isinstance(body, (GVar, LVar))


## ROLE ANALYSES

@lru_cache(maxsize=16384)
def active_roles(g: GlobalType) -> FrozenSet[Role]:
    """Roles that still have to act: live endpoints of pending transmissions and receivers
    of en-route ones. An en-route sender only counts if it occurs in a continuation."""
    if isinstance(g, GRec):
        return active_roles(g.body)
    if not isinstance(g, GComm):
        return frozenset()
    inner = frozenset().union(*(active_roles(a.cont) for a in g.arms))
    if g.en_route:
        return inner | {g.receiver}
    own = {g.sender} if g.receiver_crashed else {g.sender, g.receiver}
    return inner | own


@lru_cache(maxsize=16384)
def crashed_roles(g: GlobalType) -> FrozenSet[Role]:
    if isinstance(g, GRec):
        return crashed_roles(g.body)
    if not isinstance(g, GComm):
        return frozenset()
    inner = frozenset().union(*(crashed_roles(a.cont) for a in g.arms))
    if not g.en_route and g.receiver_crashed:
        return inner | {g.receiver}
    return inner


def mentioned_roles(g: GlobalType) -> Set[Role]:
    if isinstance(g, GRec):
        return mentioned_roles(g.body)
    if not isinstance(g, GComm):
        return set()
    roles = {g.sender, g.receiver}
    for arm in g.arms:
        roles |= mentioned_roles(arm.cont)
    return roles


class RoleNotActiveError(Exception):
    pass


class NoCrashBranchError(Exception):
    pass


def remove_role(g: GlobalType, r: Role) -> GlobalType:
    """Remove every interaction of the crashed role ``r`` from ``g``.

    Raises:
        RoleNotActiveError: if ``r`` is not active in ``g``.
        NoCrashBranchError: if a transmission from ``r`` offers no crash branch.
    """
    if r not in active_roles(g):
        raise RoleNotActiveError(f"Role {r} is not active")
    return _remove(g, r)


def _remove(g: GlobalType, r: Role) -> GlobalType:
    if isinstance(g, GRec):
        return replace(g, body=_remove(g.body, r))
    if not isinstance(g, GComm):
        return g
    if g.en_route:
        if g.receiver == r:
            return _remove(g.arms[g.committed].cont, r)
        cleansed = g.with_conts(_remove(a.cont, r) for a in g.arms)
        if g.sender == r:
            return replace(cleansed, sender_crashed=True)
        return cleansed
    if g.sender == r:
        k = g.crash_index
        if k is None:
            raise NoCrashBranchError(f"{g.sender}->{g.receiver} has no crash branch")
        if g.receiver_crashed:
            return _remove(g.arms[k].cont, r)
        cleansed = g.with_conts(_remove(a.cont, r) for a in g.arms)
        return replace(cleansed, sender_crashed=True, committed=k)
    cleansed = g.with_conts(_remove(a.cont, r) for a in g.arms)
    if g.receiver == r:
        return replace(cleansed, receiver_crashed=True)
    return cleansed


def well_annotated(crashed: Iterable[Role], g: GlobalType, reliable: Iterable[Role]) -> bool:
    annotated = crashed_roles(g)
    if annotated & frozenset(reliable):
        return False
    if not annotated <= frozenset(crashed):
        return False
    return not (active_roles(g) & annotated)


## WELL-FORMEDNESS

def well_formed(g: GlobalType, reliable: Iterable[Role]) -> List[Diagnostic]:
    """Check the syntactic side conditions of a design-time global type.

    Returns:
        One Diagnostic per violation, empty if the type is well formed.
    """
    diagnostics: List[Diagnostic] = []
    _check(g, frozenset(reliable), (), diagnostics)
    return diagnostics


def _check(g: GlobalType, reliable: FrozenSet[Role], bound: Tuple[str, ...],
           out: List[Diagnostic]) -> None:
    if isinstance(g, GVar):
        if g.name not in bound:
            out.append(Diagnostic.error("FreeRecursionVariable",
                                        f"recursion variable {g.name} is not bound", g.span))
        return
    if isinstance(g, GRec):
        if g.name in bound:
            out.append(Diagnostic.error("ShadowedBinder",
                                        f"recursion variable {g.name} is already bound", g.span))
        if not is_contractive(g):
            out.append(Diagnostic.error("NonContractiveRecursion",
                                        f"rec {g.name} does not guard its variable", g.span))
        _check(g.body, reliable, bound + (g.name,), out)
        return
    if not isinstance(g, GComm):
        return

    where = f"{g.sender}->{g.receiver}"
    if g.en_route or g.sender_crashed or g.receiver_crashed:
        out.append(Diagnostic.error("RuntimeConstruct",
                                    f"{where} carries runtime annotations", g.span))
    if not g.arms:
        out.append(Diagnostic.error("EmptyBranches", f"{where} has no branches", g.span))
        return
    if g.sender == g.receiver:
        out.append(Diagnostic.error("SelfCommunication", f"{where} sends to itself", g.span))
    seen: Set[Label] = set()
    for arm in g.arms:
        if arm.label in seen:
            out.append(Diagnostic.error("DuplicateLabel",
                                        f"label {arm.label} repeated at {where}", arm.span or g.span))
        seen.add(arm.label)
        if arm.is_crash and arm.sort is not Sort.UNIT:
            out.append(Diagnostic.error("CrashPayload",
                                        f"crash at {where} must carry Unit", arm.span or g.span))
    has_crash = g.crash_index is not None
    if has_crash and len(seen) == 1:
        out.append(Diagnostic.error("SingletonCrashBranch",
                                    f"crash is the only label at {where}", g.span))
    if g.sender in reliable and has_crash:
        out.append(Diagnostic.error("CrashBranchForReliableSender",
                                    f"{where} has a crash branch but {g.sender} is reliable", g.span))
    if g.sender not in reliable and not has_crash:
        out.append(Diagnostic.error("MissingCrashBranch",
                                    f"{where} needs a crash branch since {g.sender} may crash", g.span))
    for arm in g.arms:
        _check(arm.cont, reliable, bound, out)
