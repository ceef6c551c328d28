"""Seeded random terms for the property suites."""
from dataclasses import replace
from typing import List, Sequence, Tuple

import numpy as np

from crmpst.core_model import (END, L_END, Arm, GComm, GlobalType, GRec, GVar, LBranch, LocalType,
                               LRec, LSelect, LVar, Sort)
from crmpst.semantics.config_lts import Configuration, QueueMsg

ROLES = ("p", "q", "r", "s")
LABELS = ("a", "b", "c")
SORTS = (Sort.UNIT, Sort.INT)


def _pick(rng: np.random.Generator, items: Sequence):
    return items[int(rng.integers(len(items)))]


class GlobalGenerator:
    """Well-formed design-time global types; every label is fresh so no two prefixes collide."""

    def __init__(self, rng: np.random.Generator, roles: Sequence[str] = ROLES[:3],
                 reliable: Sequence[str] = ("q",)):
        self.rng = rng
        self.roles = tuple(roles)
        self.reliable = frozenset(reliable)
        self.labels = 0
        self.binders = 0

    def _label(self) -> str:
        self.labels += 1
        return f"l{self.labels}"

    def generate(self, depth: int = 4) -> GlobalType:
        return self._term(depth, (), guarded=True)

    def _term(self, depth: int, bound: Tuple[str, ...], guarded: bool) -> GlobalType:
        roll = self.rng.random()
        if depth <= 0 or roll < 0.15:
            if bound and guarded and self.rng.random() < 0.6:
                return GVar(_pick(self.rng, bound))
            return END
        if roll < 0.3 and depth > 1:
            self.binders += 1
            name = f"t{self.binders}"
            return GRec(name, self._comm(depth - 1, bound + (name,)))
        return self._comm(depth, bound)

    def _comm(self, depth: int, bound: Tuple[str, ...]) -> GComm:
        sender = _pick(self.rng, self.roles)
        receiver = _pick(self.rng, [r for r in self.roles if r != sender])
        count = 1 + int(self.rng.integers(2))
        arms = [Arm(self._label(), _pick(self.rng, SORTS), self._term(depth - 1, bound, True))
                for _ in range(count)]
        if sender not in self.reliable:
            arms.append(Arm("crash", Sort.UNIT, self._term(depth - 1, bound, True)))
        return GComm(sender, receiver, tuple(arms))


class LocalGenerator:
    """Closed, contractive local types over a small label pool."""

    def __init__(self, rng: np.random.Generator, peers: Sequence[str] = ("q", "r")):
        self.rng = rng
        self.peers = tuple(peers)
        self.binders = 0

    def generate(self, depth: int = 4) -> LocalType:
        return self._term(depth, (), guarded=True)

    def _term(self, depth: int, bound: Tuple[str, ...], guarded: bool) -> LocalType:
        roll = self.rng.random()
        if depth <= 0 or roll < 0.15:
            if bound and guarded and self.rng.random() < 0.6:
                return LVar(_pick(self.rng, bound))
            return L_END
        if roll < 0.3 and depth > 1:
            self.binders += 1
            name = f"t{self.binders}"
            return LRec(name, self._action(depth - 1, bound + (name,)))
        return self._action(depth, bound)

    def _action(self, depth: int, bound: Tuple[str, ...]) -> LocalType:
        peer = _pick(self.rng, self.peers)
        count = 1 + int(self.rng.integers(len(LABELS)))
        labels = list(self.rng.permutation(LABELS)[:count])
        arms = [Arm(str(label), _pick(self.rng, SORTS), self._term(depth - 1, bound, True)) for label in labels]
        if self.rng.random() < 0.5:
            return LSelect(peer, tuple(arms))
        if self.rng.random() < 0.3:
            arms.append(Arm("crash", Sort.UNIT, self._term(depth - 1, bound, True)))
        return LBranch(peer, tuple(arms))


def narrow(t: LocalType, rng: np.random.Generator) -> LocalType:
    """A subtype of ``t``: selections drop some choices, branchings handle an extra label."""
    if isinstance(t, LRec):
        return LRec(t.name, narrow(t.body, rng))
    if isinstance(t, LSelect):
        keep = max(1, int(rng.integers(1, len(t.arms) + 1)))
        return LSelect(t.peer, tuple(replace(a, cont=narrow(a.cont, rng)) for a in t.arms[:keep]))
    if isinstance(t, LBranch):
        arms = [replace(a, cont=narrow(a.cont, rng)) for a in t.arms]
        if rng.random() < 0.5 and "extra" not in t.labels:
            arms.append(Arm("extra", Sort.UNIT, L_END))
        return LBranch(t.peer, tuple(arms))
    return t


def add_branches(t: LocalType, rng: np.random.Generator) -> LocalType:
    """Same selections as ``t``, some branchings extended with one of a few fixed labels."""
    if isinstance(t, LRec):
        return LRec(t.name, add_branches(t.body, rng))
    if isinstance(t, (LSelect, LBranch)):
        arms = [replace(a, cont=add_branches(a.cont, rng)) for a in t.arms]
        if isinstance(t, LBranch) and rng.random() < 0.5:
            label = str(_pick(rng, ("x", "y")))
            if label not in t.labels:
                arms.append(Arm(label, Sort.UNIT, L_END))
        return replace(t, arms=tuple(arms))
    return t


def random_configuration(rng: np.random.Generator, roles: Sequence[str] = ROLES[:3]) -> Configuration:
    gamma = {}
    for role in roles:
        peers = [r for r in roles if r != role]
        gamma[role] = LocalGenerator(rng, peers).generate(3)
    delta = {}
    for src in roles:
        for dst in roles:
            if src != dst and rng.random() < 0.3:
                delta[(src, dst)] = tuple(QueueMsg(str(_pick(rng, LABELS)), _pick(rng, SORTS))
                                          for _ in range(1 + int(rng.integers(2))))
    return Configuration.of(gamma, delta)


def seeds(count: int, base: int = 0) -> List[int]:
    return list(range(base, base + count))
