from abc import ABC, abstractmethod
from collections import deque
from dataclasses import dataclass
from typing import Generic, Hashable, Iterable, Iterator, List, Optional, Tuple, TypeVar, Union
import hashlib
import logging

from .core_model import Label, Role, Sort


@dataclass(frozen=True)
class Send:
    sender: Role
    receiver: Role
    label: Label
    sort: Sort = Sort.UNIT

    @property
    def subject(self) -> Role:
        return self.sender

    def __str__(self) -> str:
        payload = "" if self.sort is Sort.UNIT else f",{self.sort}"
        return f"Send({self.sender},{self.receiver},{self.label}{payload})"


@dataclass(frozen=True)
class Recv:
    receiver: Role
    sender: Role
    label: Label
    sort: Sort = Sort.UNIT

    @property
    def subject(self) -> Role:
        return self.receiver

    def __str__(self) -> str:
        payload = "" if self.sort is Sort.UNIT else f",{self.sort}"
        return f"Recv({self.receiver},{self.sender},{self.label}{payload})"


@dataclass(frozen=True)
class Crash:
    role: Role

    @property
    def subject(self) -> Role:
        return self.role

    def __str__(self) -> str:
        return f"Crash({self.role})"


@dataclass(frozen=True)
class CrashDetect:
    detector: Role
    crashed: Role

    @property
    def subject(self) -> Role:
        return self.detector

    def __str__(self) -> str:
        return f"CrashDetect({self.detector},{self.crashed})"


TransitionLabel = Union[Send, Recv, Crash, CrashDetect]

State = TypeVar("State", bound=Hashable)


class AmbiguousLabelError(Exception):
    pass


class TransitionSystem(ABC, Generic[State]):
    """Abstract base class for labelled transition systems.

    Global types, configurations and sessions all reduce with the same labels.
    Two methods required at minimum:
        initial_state
        transitions

    To print states and classify terminal states, implement:
        render_state
        conforms
    """
    def __init__(self, reliable: Iterable[Role] = ()):
        """Initialize the transition system.

        Args:
            reliable: Roles assumed never to crash.
        """
        self.reliable = frozenset(reliable)
        self.logger = logging.getLogger(__name__)

    @abstractmethod
    def initial_state(self) -> State:
        pass

    @abstractmethod
    def transitions(self, state: State) -> List[Tuple[TransitionLabel, State]]:
        """Enumerate the labelled successors of a state, in a fixed order."""
        pass

    def step(self, state: State, label: TransitionLabel) -> Optional[State]:
        """Return the unique successor of ``state`` by ``label``, None if not enabled.

        Raises:
            AmbiguousLabelError: if two distinct successors share the label.
        """
        found = [succ for lbl, succ in self.transitions(state) if lbl == label]
        if not found:
            return None
        if any(succ != found[0] for succ in found[1:]):
            raise AmbiguousLabelError(f"{label} leads to {len(found)} distinct states")
        return found[0]

    def enabled(self, state: State) -> List[TransitionLabel]:
        labels = {lbl for lbl, _ in self.transitions(state)}
        return sorted(labels, key=str)

    def render_state(self, state: State) -> str:
        raise NotImplementedError("State rendering is not supported for this transition system")

    def conforms(self, state: State) -> bool:
        """Check whether a state is an acceptable final state."""
        raise NotImplementedError("Terminal classification is not supported for this transition system")

    def digest(self, state: State) -> str:
        try:
            text = self.render_state(state)
        except NotImplementedError:
            text = repr(state)
        return hashlib.sha1(text.encode("utf-8")).hexdigest()[:12]

    def layers(self, depth: int) -> Iterator[Tuple[int, State, TransitionLabel, State]]:
        """Breadth-first walk from the initial state, each state expanded once.

        Yields:
            (level, source, label, target) for every edge up to ``depth`` levels.
        """
        start = self.initial_state()
        seen = {start}
        frontier = deque([(0, start)])
        while frontier:
            level, state = frontier.popleft()
            if level >= depth:
                continue
            for label, succ in self.transitions(state):
                yield level, state, label, succ
                if succ not in seen:
                    seen.add(succ)
                    frontier.append((level + 1, succ))
