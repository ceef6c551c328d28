"""
Association of annotated global types with configurations, and bounded verification of
configurations: safety, deadlock-freedom, liveness and the correspondence between global and
configuration reductions.

Explored state spaces are networkx DiGraphs whose nodes are states and whose edges carry the
list of transition labels between two states under ``labels``.
"""
import logging
from collections import deque
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from enum import Enum
from functools import lru_cache
from typing import Callable, Dict, FrozenSet, Hashable, Iterable, List, Optional, Tuple

import networkx as nx

from .DEFAULTS import CYCLE_LEN_BOUND, QUEUE_BOUND, STATE_BOUND
from .core_model import (STOP, GComm, GlobalType, L_END, LBranch, LEnd, LocalType, LStop, Role,
                         active_roles, mentioned_roles, unfold)
from .interface import CrashDetect, Recv, Send, TransitionLabel, TransitionSystem
from .process import Unavailable
from .projection import ProjectionError, project
from .semantics.config_lts import (Arrow, Configuration, ConfigSemantics, QueueMsg,
                                   config_transitions, filter_arrow, is_conforming_terminal)
from .semantics.global_lts import AnnotatedGlobal, global_transitions
from .subtyping import subtype

logger = logging.getLogger(__name__)


class StateBoundExceeded(Exception):
    pass


class InconsistentQueuesError(Exception):
    pass


@dataclass(frozen=True)
class ExplorationBounds:
    queue_bound: int = QUEUE_BOUND
    state_bound: int = STATE_BOUND
    cycle_len_bound: int = CYCLE_LEN_BOUND
    threads: int = 1

    def __post_init__(self):
        for name in ("queue_bound", "state_bound", "cycle_len_bound", "threads"):
            if getattr(self, name) < 1:
                raise ValueError(f"{name} must be positive")


class Status(Enum):
    HOLDS = "holds"
    VIOLATED = "violated"
    INCONCLUSIVE = "inconclusive"


@dataclass(frozen=True)
class WitnessStep:
    state: str
    label: Optional[str]


@dataclass(frozen=True)
class Verdict:
    status: Status
    witness: Optional[Tuple[WitnessStep, ...]] = None
    reason: str = ""

    @property
    def holds(self) -> bool:
        return self.status is Status.HOLDS

    @classmethod
    def violated(cls, witness: Tuple[WitnessStep, ...], reason: str) -> "Verdict":
        return cls(Status.VIOLATED, witness, reason)

    @classmethod
    def inconclusive(cls, reason: str) -> "Verdict":
        return cls(Status.INCONCLUSIVE, None, reason)

    def to_dict(self) -> dict:
        witness = None
        if self.witness is not None:
            witness = [{"label": step.label} for step in self.witness if step.label is not None]
        return {"status": self.status.value, "witness": witness, "reason": self.reason}


HOLDS = Verdict(Status.HOLDS)


## ASSOCIATION

@lru_cache(maxsize=65536)
def _projection(g: GlobalType, p: Role, reliable: FrozenSet[Role]) -> LocalType:
    return project(g, p, reliable)


def associated(ann: AnnotatedGlobal, c: Configuration, reliable: Iterable[Role]) -> bool:
    return association_failure(ann, c, reliable) is None


def association_failure(ann: AnnotatedGlobal, c: Configuration, reliable: Iterable[Role]) -> Optional[str]:
    """Name the first association clause that fails, None if ``c`` is associated with ``ann``."""
    reliable = frozenset(reliable)
    gamma = c.gamma_map()
    active = active_roles(ann.g)
    missing = (mentioned_roles(ann.g) | set(ann.crashed)) - set(gamma)
    if missing:
        return f"roles {sorted(missing)} have no entry"
    for p in sorted(active):
        try:
            expected = _projection(ann.g, p, reliable)
        except ProjectionError as e:
            return f"projection: {e}"
        if not subtype(gamma[p], expected):
            return f"local type of {p} is not a subtype of its projection"
    for p in sorted(ann.crashed):
        if not isinstance(gamma[p], LStop):
            return f"crashed role {p} is not stopped"
    for p in sorted(set(gamma) - active - set(ann.crashed)):
        if not isinstance(gamma[p], LEnd):
            return f"inactive role {p} has not ended"

    queues: Dict[Tuple[Role, Role], Tuple[QueueMsg, ...]] = {}
    for (src, dst), content in c.delta:
        if isinstance(content, Unavailable) != (dst in ann.crashed):
            return f"queue {src}→{dst} availability does not match crashes"
        if not isinstance(content, Unavailable):
            queues[(src, dst)] = content
    return _queue_failure(ann.g, queues)


def _queue_failure(g: GlobalType, queues: Dict[Tuple[Role, Role], Tuple[QueueMsg, ...]]) -> Optional[str]:
    if not isinstance(g, GComm):
        busy = sorted(ch for ch, content in queues.items() if content)
        return f"queues {busy} hold undelivered messages" if busy else None
    channel = (g.sender, g.receiver)
    if not g.en_route or g.arms[g.committed].is_crash:
        if not g.receiver_crashed and queues.get(channel):
            return f"queue {g.sender}→{g.receiver} must be empty"
        remaining = queues
    else:
        arm = g.arms[g.committed]
        content = queues.get(channel, ())
        if not content or content[0] != QueueMsg(arm.label, arm.sort):
            return f"queue {g.sender}→{g.receiver} must start with {arm.label}"
        remaining = dict(queues)
        remaining[channel] = content[1:]
    for arm in g.arms:
        failure = _queue_failure(arm.cont, remaining)
        if failure:
            return failure
    return None


def derive_canonical_config(ann: AnnotatedGlobal, reliable: Iterable[Role],
                            roles: Optional[Iterable[Role]] = None) -> Configuration:
    """Build the configuration whose local types are the projections of ``ann`` and whose
    queues hold exactly its en-route messages.

    Args:
        ann: Annotated global type.
        reliable: Roles assumed never to crash.
        roles: Every role of the session; defaults to the roles mentioned in ``ann``.

    Raises:
        ProjectionError: if some role has no projection.
        InconsistentQueuesError: if branches disagree on the queue contents.
    """
    reliable = frozenset(reliable)
    roles = set(roles or ()) | mentioned_roles(ann.g) | set(ann.crashed)
    gamma = {}
    for p in roles:
        if p in ann.crashed:
            gamma[p] = STOP
        elif p in active_roles(ann.g):
            gamma[p] = project(ann.g, p, reliable)
        else:
            gamma[p] = L_END
    demanded = _en_route_messages(ann.g, {})
    first = demanded[0]
    for other in demanded[1:]:
        if other != first:
            raise InconsistentQueuesError(f"branches demand {first} and {other}")
    return Configuration.of(gamma, first)


def _en_route_messages(g: GlobalType, acc: Dict[Tuple[Role, Role], Tuple[QueueMsg, ...]]) -> List[Dict]:
    if not isinstance(g, GComm):
        return [acc]
    if g.en_route and not g.arms[g.committed].is_crash:
        arm = g.arms[g.committed]
        channel = (g.sender, g.receiver)
        acc = dict(acc)
        acc[channel] = acc.get(channel, ()) + (QueueMsg(arm.label, arm.sort),)
    out: List[Dict] = []
    for arm in g.arms:
        out.extend(_en_route_messages(arm.cont, acc))
    return out


## EXPLORATION

def explore_system(system: TransitionSystem, state_bound: int, threads: int = 1,
                   truncate: Callable[[Hashable], bool] = lambda state: False) -> nx.DiGraph:
    """Breadth-first exploration of a transition system into a DiGraph.

    States for which ``truncate`` holds are kept but not expanded; the graph attribute
    ``truncated`` records whether that happened.

    Raises:
        StateBoundExceeded: if more than ``state_bound`` states are reachable.
    """
    initial = system.initial_state()
    graph = nx.DiGraph(initial=initial, truncated=False)
    graph.add_node(initial, truncated=truncate(initial))
    frontier = [] if graph.nodes[initial]["truncated"] else [initial]
    graph.graph["truncated"] = not frontier
    pool = ThreadPoolExecutor(max_workers=threads) if threads > 1 else None
    try:
        while frontier:
            expanded = list(pool.map(system.transitions, frontier)) if pool else [system.transitions(s) for s in frontier]
            upcoming = []
            for state, successors in zip(frontier, expanded):
                for label, succ in successors:
                    if succ not in graph:
                        if graph.number_of_nodes() >= state_bound:
                            raise StateBoundExceeded(f"more than {state_bound} states")
                        cut = truncate(succ)
                        graph.add_node(succ, truncated=cut)
                        if cut:
                            graph.graph["truncated"] = True
                        else:
                            upcoming.append(succ)
                    if graph.has_edge(state, succ):
                        graph.edges[state, succ]["labels"].append(label)
                    else:
                        graph.add_edge(state, succ, labels=[label])
            frontier = upcoming
    finally:
        if pool:
            pool.shutdown()
    logger.info(f"Explored {graph.number_of_nodes()} states and {graph.number_of_edges()} edges")
    return graph


def exceeds_queue_bound(c: Configuration, queue_bound: int) -> bool:
    return any(not isinstance(content, Unavailable) and len(content) > queue_bound
               for _, content in c.delta)


def explore(c0: Configuration, reliable: Iterable[Role], bounds: ExplorationBounds = ExplorationBounds()) -> nx.DiGraph:
    """Reachable configurations under the reliability-aware reduction.

    Raises:
        StateBoundExceeded: if the state bound is hit.
    """
    system = ConfigSemantics(c0, reliable, Arrow.RELIABILITY_AWARE)
    graph = explore_system(system, bounds.state_bound, bounds.threads,
                           lambda c: exceeds_queue_bound(c, bounds.queue_bound))
    if graph.graph["truncated"]:
        logger.warning(f"Exploration truncated at queue bound {bounds.queue_bound}")
    return graph


def out_labels(graph: nx.DiGraph, state) -> List[TransitionLabel]:
    return [label for _, _, labels in graph.out_edges(state, data="labels") for label in labels]


def witness_path(graph: nx.DiGraph, nodes: List, render: Callable = str) -> Tuple[WitnessStep, ...]:
    steps = [WitnessStep(render(u), str(graph.edges[u, v]["labels"][0])) for u, v in zip(nodes, nodes[1:])]
    steps.append(WitnessStep(render(nodes[-1]), None))
    return tuple(steps)


def path_to(graph: nx.DiGraph, target) -> List:
    return nx.shortest_path(graph, graph.graph["initial"], target)


## CONFIGURATION PROPERTIES

def _plain_subgraph(graph: nx.DiGraph) -> nx.DiGraph:
    plain = nx.DiGraph()
    plain.add_nodes_from(graph.nodes(data=True))
    keep = filter_arrow(Arrow.PLAIN)
    for u, v, labels in graph.edges(data="labels"):
        kept = [label for label in labels if keep(label)]
        if kept:
            plain.add_edge(u, v, labels=kept)
    return plain


Obligation = Tuple[str, Role, Role]


def obligations(c: Configuration) -> FrozenSet[Obligation]:
    """Pending duties of a configuration: undelivered queue heads and waiting branchings."""
    duties = set()
    for (src, dst), content in c.delta:
        if not isinstance(content, Unavailable) and content:
            duties.add(("queue", src, dst))
    for q, t in c.gamma:
        u = unfold(t)
        if isinstance(u, LBranch):
            duties.add(("branch", q, u.peer))
    return frozenset(duties)


def discharges(label: TransitionLabel, duty: Obligation) -> bool:
    kind, a, b = duty
    if kind == "queue":
        return isinstance(label, Recv) and label.sender == a and label.receiver == b
    if isinstance(label, CrashDetect):
        return label.detector == a and label.crashed == b
    return isinstance(label, Recv) and label.receiver == a and label.sender == b


def fair(enabled: Iterable[TransitionLabel], fired: Iterable[TransitionLabel]) -> bool:
    """Every action enabled on a cycle is matched on it: sends by channel, others exactly."""
    fired = set(fired)
    channels = {(l.sender, l.receiver) for l in fired if isinstance(l, Send)}
    for label in enabled:
        if isinstance(label, Send):
            if (label.sender, label.receiver) not in channels:
                return False
        elif label not in fired:
            return False
    return True


class ConfigurationChecker:
    """Bounded checks over one explored configuration graph.

    The graph is built on first use and shared by all checks.
    """

    def __init__(self, c0: Configuration, reliable: Iterable[Role],
                 bounds: ExplorationBounds = ExplorationBounds()):
        self.c0 = c0
        self.reliable = frozenset(reliable)
        self.bounds = bounds
        self.logger = logging.getLogger(__name__)
        self._graph: Optional[nx.DiGraph] = None
        self._overflow: Optional[str] = None

    @property
    def graph(self) -> Optional[nx.DiGraph]:
        if self._graph is None and self._overflow is None:
            try:
                self._graph = explore(self.c0, self.reliable, self.bounds)
            except StateBoundExceeded as e:
                self.logger.warning(f"State bound {self.bounds.state_bound} exceeded")
                self._overflow = f"state bound {self.bounds.state_bound} exceeded: {e}"
        return self._graph

    def _expanded(self):
        return [s for s, cut in self.graph.nodes(data="truncated") if not cut]

    def _finish(self) -> Verdict:
        if self.graph.graph["truncated"]:
            return Verdict.inconclusive(f"queue bound {self.bounds.queue_bound} reached")
        return HOLDS

    def safety(self) -> Verdict:
        if self.graph is None:
            return Verdict.inconclusive(self._overflow)
        for state in self._expanded():
            labels = out_labels(self.graph, state)
            for q, t in state.gamma:
                u = unfold(t)
                if not isinstance(u, LBranch):
                    continue
                content = state.queue(u.peer, q)
                if isinstance(content, Unavailable):
                    continue
                if content and not any(isinstance(l, Recv) and l.receiver == q and l.sender == u.peer
                                       for l in labels):
                    return Verdict.violated(witness_path(self.graph, path_to(self.graph, state)),
                                            f"{q} cannot receive {content[0]} from {u.peer}")
                if not content and isinstance(state.local(u.peer), LStop) and CrashDetect(q, u.peer) not in labels:
                    return Verdict.violated(witness_path(self.graph, path_to(self.graph, state)),
                                            f"{q} cannot detect the crash of {u.peer}")
        return self._finish()

    def deadlock_freedom(self) -> Verdict:
        verdict = self.safety()
        if verdict.status is Status.VIOLATED:
            return verdict
        if self.graph is None:
            return verdict
        for state in self._expanded():
            if self.graph.out_degree(state) == 0 and not is_conforming_terminal(state):
                return Verdict.violated(witness_path(self.graph, path_to(self.graph, state)),
                                        "stuck in a non-final configuration")
        return self._finish()

    def liveness(self) -> Verdict:
        verdict = self.safety()
        if verdict.status is Status.VIOLATED:
            return verdict
        if self.graph is None:
            return verdict
        plain = _plain_subgraph(self.graph)
        for state in self._expanded():
            if plain.out_degree(state) == 0 and obligations(state):
                duty = min(obligations(state))
                return Verdict.violated(witness_path(self.graph, path_to(self.graph, state)),
                                        f"obligation {duty} is never discharged")
        lasso = self._fair_lasso(plain)
        if lasso is not None:
            cycle, duty = lasso
            nodes = path_to(self.graph, cycle[0]) + cycle[1:] + [cycle[0]]
            return Verdict.violated(witness_path(self.graph, nodes),
                                    f"fair cycle never discharges {duty}")
        return self._finish()

    def _fair_lasso(self, plain: nx.DiGraph) -> Optional[Tuple[List, Obligation]]:
        expanded = set(self._expanded())
        duties = set()
        for state in expanded:
            duties |= obligations(state)
        for duty in sorted(duties):
            # cycles along which the duty stays pending and undischarged
            pending = nx.DiGraph()
            for u, v, labels in plain.edges(data="labels"):
                if u in expanded and v in expanded and duty in obligations(u) and duty in obligations(v):
                    kept = [l for l in labels if not discharges(l, duty)]
                    if kept:
                        pending.add_edge(u, v, labels=kept)
            for component in nx.strongly_connected_components(pending):
                sub = pending.subgraph(component)
                if sub.number_of_edges() == 0:
                    continue
                for cycle in nx.simple_cycles(sub, length_bound=self.bounds.cycle_len_bound):
                    edges = zip(cycle, cycle[1:] + cycle[:1])
                    fired = [l for u, v in edges for l in sub.edges[u, v]["labels"]]
                    enabled = [l for s in cycle for l in out_labels(plain, s)]
                    if fair(enabled, fired):
                        return cycle, duty
        return None


def check_safety(c0: Configuration, reliable: Iterable[Role], bounds: ExplorationBounds = ExplorationBounds()) -> Verdict:
    return ConfigurationChecker(c0, reliable, bounds).safety()


def check_deadlock_freedom(c0: Configuration, reliable: Iterable[Role],
                           bounds: ExplorationBounds = ExplorationBounds()) -> Verdict:
    return ConfigurationChecker(c0, reliable, bounds).deadlock_freedom()


def check_liveness(c0: Configuration, reliable: Iterable[Role], bounds: ExplorationBounds = ExplorationBounds()) -> Verdict:
    return ConfigurationChecker(c0, reliable, bounds).liveness()


## CORRESPONDENCE

Pair = Tuple[AnnotatedGlobal, Configuration]


def check_correspondence(ann0: AnnotatedGlobal, c0: Configuration, reliable: Iterable[Role],
                         bounds: ExplorationBounds = ExplorationBounds()) -> Verdict:
    """Walk global and configuration reductions in lockstep.

    Every configuration step must be matched by a global step with the same label whose
    successor is associated again; a global state that can step needs a configuration that
    can step.
    """
    reliable = frozenset(reliable)
    start: Pair = (ann0, c0)
    parents: Dict[Pair, Optional[Tuple[Pair, TransitionLabel]]] = {start: None}
    frontier = deque([start])
    truncated = False

    def witness(pair: Pair, label: Optional[TransitionLabel]) -> Tuple[WitnessStep, ...]:
        steps = [WitnessStep(str(pair[1]), None if label is None else str(label))]
        while parents[pair] is not None:
            pair, via = parents[pair]
            steps.append(WitnessStep(str(pair[1]), str(via)))
        return tuple(reversed(steps))

    while frontier:
        pair = frontier.popleft()
        ann, c = pair
        c_moves = config_transitions(c, reliable)
        g_moves = global_transitions(ann, reliable)
        for label, c_succ in c_moves:
            if exceeds_queue_bound(c_succ, bounds.queue_bound):
                truncated = True
                continue
            candidates = [g_succ for l, g_succ in g_moves if l == label]
            if not candidates:
                return Verdict.violated(witness(pair, label), f"global type cannot match {label}")
            match = next((g for g in candidates if associated(g, c_succ, reliable)), None)
            if match is None:
                failure = association_failure(candidates[0], c_succ, reliable)
                return Verdict.violated(witness(pair, label), f"after {label}: {failure}")
            succ = (match, c_succ)
            if succ not in parents:
                if len(parents) >= bounds.state_bound:
                    return Verdict.inconclusive(f"state bound {bounds.state_bound} exceeded")
                parents[succ] = (pair, label)
                frontier.append(succ)
        if g_moves and not c_moves:
            return Verdict.violated(witness(pair, None), "global type can step but the configuration cannot")
        if pair is start:
            failure = association_failure(ann0, c0, reliable)
            if failure:
                return Verdict.violated(witness(pair, None), f"initial pair not associated: {failure}")

    logger.info(f"Correspondence checked over {len(parents)} pairs")
    if truncated:
        return Verdict.inconclusive(f"queue bound {bounds.queue_bound} reached")
    return HOLDS


def verify_all(ann0: AnnotatedGlobal, c0: Configuration, reliable: Iterable[Role],
               bounds: ExplorationBounds = ExplorationBounds()) -> Dict[str, Verdict]:
    checker = ConfigurationChecker(c0, reliable, bounds)
    return {
        "safety": checker.safety(),
        "deadlock_freedom": checker.deadlock_freedom(),
        "liveness": checker.liveness(),
        "correspondence": check_correspondence(ann0, c0, reliable, bounds),
    }
