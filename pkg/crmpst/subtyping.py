"""
Coinductive session subtyping on closed local types.

A subtype may select fewer outputs and handle more inputs than its supertype. Crash handling
never disappears going up: if the subtype handles crash, so does the supertype, and the
supertype is never a bare crash handler.
"""
from functools import lru_cache
from typing import Set, Tuple

from .core_model import LBranch, LEnd, LocalType, LSelect, LStop, unfold


@lru_cache(maxsize=65536)
def subtype(s: LocalType, t: LocalType) -> bool:
    return _related(s, t, set())


def _related(s: LocalType, t: LocalType, assumed: Set[Tuple[LocalType, LocalType]]) -> bool:
    if (s, t) in assumed:
        return True
    assumed.add((s, t))
    s, t = unfold(s), unfold(t)

    if isinstance(t, LBranch) and t.crash_arm is not None and len(t.arms) == 1:
        return False
    if s == t:
        return True
    if isinstance(s, LEnd):
        return isinstance(t, LEnd)
    if isinstance(s, LStop):
        return isinstance(t, LStop)
    if isinstance(s, LSelect):
        if not isinstance(t, LSelect) or s.peer != t.peer:
            return False
        offered = {arm.label: arm for arm in t.arms}
        for arm in s.arms:
            sup = offered.get(arm.label)
            if sup is None or sup.sort is not arm.sort:
                return False
            if not _related(arm.cont, sup.cont, assumed):
                return False
        return True
    if isinstance(s, LBranch):
        if not isinstance(t, LBranch) or s.peer != t.peer:
            return False
        if s.crash_arm is not None and t.crash_arm is None:
            return False
        handled = {arm.label: arm for arm in s.arms}
        for arm in t.arms:
            sub = handled.get(arm.label)
            if sub is None or sub.sort is not arm.sort:
                return False
            if not _related(sub.cont, arm.cont, assumed):
                return False
        return True
    # free recursion variables relate only to themselves
    return False
