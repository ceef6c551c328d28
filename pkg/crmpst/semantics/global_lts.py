"""
Reductions of annotated global types (crashed set, global type) under a reliability set.
"""
from dataclasses import dataclass, replace
from typing import Dict, FrozenSet, Iterable, List, Optional, Tuple, Union

from ..core_model import (GComm, GEnd, GlobalType, GRec, Role, active_roles, remove_role,
                          unfold, unfold_once)
from ..interface import (AmbiguousLabelError, Crash, CrashDetect, Recv, Send, TransitionLabel,
                         TransitionSystem)
from ..registry import SemanticsRegistry
from ..rendering import render_global

Move = Tuple[TransitionLabel, GlobalType]


@dataclass(frozen=True)
class AnnotatedGlobal:
    crashed: FrozenSet[Role]
    g: GlobalType

    @classmethod
    def initial(cls, g: GlobalType) -> "AnnotatedGlobal":
        return cls(frozenset(), g)

    def __str__(self) -> str:
        crashed = ",".join(sorted(self.crashed))
        return f"{{{crashed}}} · {render_global(self.g)}"


def global_transitions(st: AnnotatedGlobal, reliable: Iterable[Role]) -> List[Tuple[TransitionLabel, AnnotatedGlobal]]:
    """All labelled successors of ``st``: communication moves first, then crashes by role."""
    reliable = frozenset(reliable)
    out = [(label, AnnotatedGlobal(st.crashed, g)) for label, g in _moves(st.g, frozenset(), frozenset())]
    for p in sorted(active_roles(st.g) - reliable):
        out.append((Crash(p), AnnotatedGlobal(st.crashed | {p}, remove_role(st.g, p))))
    return out


def global_step(st: AnnotatedGlobal, reliable: Iterable[Role], label: TransitionLabel) -> Optional[AnnotatedGlobal]:
    return GlobalSemantics(st, reliable).step(st, label)


def _moves(g: GlobalType, blocked: FrozenSet[Role], visiting: FrozenSet) -> List[Move]:
    """Communication moves of ``g`` whose subject is not blocked by an enclosing prefix.

    ``visiting`` holds the binders unfolded on the current descent; a binder met again under
    the same blocked set contributes no moves, as no finite derivation goes through it.
    """
    if isinstance(g, GRec):
        key = (g, blocked)
        if key in visiting:
            return []
        return _moves(unfold_once(g), blocked, visiting | {key})
    if not isinstance(g, GComm) or active_roles(g) <= blocked:
        return []

    moves: List[Move] = []
    if not g.en_route:
        if g.sender not in blocked:
            for i, arm in enumerate(g.arms):
                if arm.is_crash:
                    continue
                label = Send(g.sender, g.receiver, arm.label, arm.sort)
                # a message to a crashed receiver is orphaned
                moves.append((label, arm.cont if g.receiver_crashed else replace(g, committed=i)))
        inner = blocked | {g.sender, g.receiver}
    else:
        if g.receiver not in blocked:
            arm = g.arms[g.committed]
            if arm.is_crash:
                moves.append((CrashDetect(g.receiver, g.sender), arm.cont))
            else:
                moves.append((Recv(g.receiver, g.sender, arm.label, arm.sort), arm.cont))
        inner = blocked | {g.receiver}

    tables: List[Dict[TransitionLabel, GlobalType]] = []
    for arm in g.arms:
        table: Dict[TransitionLabel, GlobalType] = {}
        for label, succ in _moves(arm.cont, inner, visiting):
            if label in table and table[label] != succ:
                raise AmbiguousLabelError(f"{label} leads to distinct continuations")
            table[label] = succ
        tables.append(table)
    for label in tables[0]:
        if all(label in table for table in tables[1:]):
            moves.append((label, g.with_conts(table[label] for table in tables)))
    return moves


@SemanticsRegistry.register("global")
class GlobalSemantics(TransitionSystem[AnnotatedGlobal]):
    """Annotated global types as a transition system."""

    def __init__(self, start: Union[AnnotatedGlobal, GlobalType], reliable: Iterable[Role] = ()):
        super().__init__(reliable)
        self.start = start if isinstance(start, AnnotatedGlobal) else AnnotatedGlobal.initial(start)

    def initial_state(self) -> AnnotatedGlobal:
        return self.start

    def transitions(self, state: AnnotatedGlobal) -> List[Tuple[TransitionLabel, AnnotatedGlobal]]:
        return global_transitions(state, self.reliable)

    def render_state(self, state: AnnotatedGlobal) -> str:
        return str(state)

    def conforms(self, state: AnnotatedGlobal) -> bool:
        return isinstance(unfold(state.g), GEnd)
