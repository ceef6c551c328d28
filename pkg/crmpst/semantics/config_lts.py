"""
Configurations: local types of every role plus one FIFO queue per ordered pair of roles.

The queue towards a crashed role is unavailable and silently absorbs whatever is sent to it.
"""
from dataclasses import dataclass
from enum import Enum
from typing import Callable, Dict, FrozenSet, Iterable, List, Mapping, Optional, Tuple, Union

from ..core_model import (STOP, Label, LBranch, LEnd, LocalType, LSelect, LStop, Role,
                          Sort, unfold)
from ..interface import Crash, CrashDetect, Recv, Send, TransitionLabel, TransitionSystem
from ..process import UNAVAILABLE, Unavailable
from ..registry import SemanticsRegistry
from ..rendering import render_local

Channel = Tuple[Role, Role]


@dataclass(frozen=True)
class QueueMsg:
    label: Label
    sort: Sort = Sort.UNIT

    def __str__(self) -> str:
        return self.label if self.sort is Sort.UNIT else f"{self.label}({self.sort})"


QueueContent = Union[Tuple[QueueMsg, ...], Unavailable]


@dataclass(frozen=True)
class Configuration:
    """Typing context and queue environment, both kept sorted for stable hashing."""
    gamma: Tuple[Tuple[Role, LocalType], ...]
    delta: Tuple[Tuple[Channel, QueueContent], ...]

    @classmethod
    def of(cls, gamma: Mapping[Role, LocalType],
           delta: Optional[Mapping[Channel, Iterable[QueueMsg]]] = None) -> "Configuration":
        """Build a configuration; channels absent from ``delta`` start empty, channels into a
        stopped role start unavailable."""
        delta = delta or {}
        roles = sorted(gamma)
        queues = []
        for src in roles:
            for dst in roles:
                if src == dst:
                    continue
                if (src, dst) in delta:
                    content = delta[(src, dst)]
                    content = content if isinstance(content, Unavailable) else tuple(content)
                elif isinstance(gamma[dst], LStop):
                    content = UNAVAILABLE
                else:
                    content = ()
                queues.append(((src, dst), content))
        return cls(tuple((r, gamma[r]) for r in roles), tuple(queues))

    @property
    def roles(self) -> Tuple[Role, ...]:
        return tuple(role for role, _ in self.gamma)

    def local(self, p: Role) -> LocalType:
        for role, t in self.gamma:
            if role == p:
                return t
        raise KeyError(p)

    def queue(self, src: Role, dst: Role) -> QueueContent:
        for channel, content in self.delta:
            if channel == (src, dst):
                return content
        raise KeyError((src, dst))

    def gamma_map(self) -> Dict[Role, LocalType]:
        return dict(self.gamma)

    def delta_map(self) -> Dict[Channel, QueueContent]:
        return dict(self.delta)

    def with_local(self, p: Role, t: LocalType) -> "Configuration":
        return Configuration(tuple((r, t if r == p else u) for r, u in self.gamma), self.delta)

    def with_queue(self, channel: Channel, content: QueueContent) -> "Configuration":
        return Configuration(self.gamma, tuple((c, content if c == channel else q) for c, q in self.delta))

    def __str__(self) -> str:
        gamma = ", ".join(f"{r}: {render_local(t)}" for r, t in self.gamma)
        queues = [f"{s}→{d}: {render_content(q)}" for (s, d), q in self.delta
                  if isinstance(q, Unavailable) or q]
        return gamma + (" ; " + ", ".join(queues) if queues else "")


def render_content(content: QueueContent) -> str:
    if isinstance(content, Unavailable):
        return "⊘"
    return "[" + ", ".join(str(m) for m in content) + "]"


def _enqueue(content: QueueContent, msg: QueueMsg) -> QueueContent:
    if isinstance(content, Unavailable):
        return content
    return content + (msg,)


def config_transitions(c: Configuration, reliable: Iterable[Role] = ()) -> List[Tuple[TransitionLabel, Configuration]]:
    """Successors under the reliability-aware reduction: every rule, with crashes of
    unreliable roles only. Ordered by role, then by branch."""
    reliable = frozenset(reliable)
    out: List[Tuple[TransitionLabel, Configuration]] = []
    for p, t in c.gamma:
        u = unfold(t)
        if isinstance(u, LSelect):
            channel = (p, u.peer)
            for arm in u.arms:
                succ = c.with_local(p, arm.cont).with_queue(channel, _enqueue(c.queue(*channel), QueueMsg(arm.label, arm.sort)))
                out.append((Send(p, u.peer, arm.label, arm.sort), succ))
        elif isinstance(u, LBranch):
            content = c.queue(u.peer, p)
            if not isinstance(content, Unavailable):
                if content:
                    head = content[0]
                    for arm in u.arms:
                        if arm.label == head.label and arm.sort is head.sort and not arm.is_crash:
                            succ = c.with_local(p, arm.cont).with_queue((u.peer, p), content[1:])
                            out.append((Recv(p, u.peer, head.label, head.sort), succ))
                elif u.crash_arm is not None and isinstance(c.local(u.peer), LStop):
                    out.append((CrashDetect(p, u.peer), c.with_local(p, u.crash_arm.cont)))
        if p not in reliable and not isinstance(t, (LEnd, LStop)):
            crashed = c.with_local(p, STOP)
            for src in c.roles:
                if src != p:
                    crashed = crashed.with_queue((src, p), UNAVAILABLE)
            out.append((Crash(p), crashed))
    return out


class Arrow(Enum):
    PLAIN = "plain"
    RELIABILITY_AWARE = "reliability-aware"


def filter_arrow(kind: Arrow, reliable: Iterable[Role] = ()) -> Callable[[TransitionLabel], bool]:
    """Predicate selecting the labels of one reduction relation.

    The plain relation never crashes; the reliability-aware one crashes unreliable roles only.
    """
    reliable = frozenset(reliable)
    if kind is Arrow.PLAIN:
        return lambda label: not isinstance(label, Crash)
    return lambda label: not (isinstance(label, Crash) and label.role in reliable)


def is_conforming_terminal(c: Configuration) -> bool:
    """All roles ended or stopped, queues empty except unavailable ones into stopped roles."""
    stopped = {r for r, t in c.gamma if isinstance(t, LStop)}
    if any(not isinstance(t, (LEnd, LStop)) for _, t in c.gamma):
        return False
    for (_, dst), content in c.delta:
        if isinstance(content, Unavailable):
            if dst not in stopped:
                return False
        elif content:
            return False
    return True


@SemanticsRegistry.register("config")
class ConfigSemantics(TransitionSystem[Configuration]):
    """Configurations as a transition system, under either reduction relation."""

    def __init__(self, start: Configuration, reliable: Iterable[Role] = (),
                 arrow: Arrow = Arrow.RELIABILITY_AWARE):
        super().__init__(reliable)
        self.start = start
        self.arrow = arrow
        self.allowed = filter_arrow(arrow, self.reliable)

    def initial_state(self) -> Configuration:
        return self.start

    def transitions(self, state: Configuration) -> List[Tuple[TransitionLabel, Configuration]]:
        return [(label, succ) for label, succ in config_transitions(state, self.reliable)
                if self.allowed(label)]

    def render_state(self, state: Configuration) -> str:
        return str(state)

    def conforms(self, state: Configuration) -> bool:
        return is_conforming_terminal(state)


def stopped_roles(c: Configuration) -> FrozenSet[Role]:
    return frozenset(r for r, t in c.gamma if isinstance(t, LStop))

