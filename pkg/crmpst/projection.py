"""
Projection of (runtime) global types onto roles, with the full merge operator.
"""
import logging
from typing import Dict, FrozenSet, Iterable, Tuple

from .core_model import (L_END, Arm, GEnd, GlobalType, GRec, GVar, LBranch, LEnd,
                         LocalType, LRec, LSelect, LVar, Role, active_roles, crashed_roles,
                         free_vars)

logger = logging.getLogger(__name__)

Path = Tuple[str, ...]


class MergeError(Exception):
    def __init__(self, left: LocalType, right: LocalType, path: Path = ()):
        self.left = left
        self.right = right
        self.path = path
        where = "/".join(path) or "top"
        super().__init__(f"cannot merge {type(left).__name__} with {type(right).__name__} at {where}")


class ProjectionError(Exception):
    def __init__(self, role: Role, reason: str, path: Path = ()):
        self.role = role
        self.reason = reason
        self.path = path
        where = "/".join(path) or "top"
        super().__init__(f"projection onto {role} undefined at {where}: {reason}")


def merge(a: LocalType, b: LocalType, path: Path = ()) -> LocalType:
    """Full merge: selections must offer the same choices, branchings are unioned.

    Raises:
        MergeError: if the two views cannot be reconciled.
    """
    if a == b:
        return a
    if isinstance(a, LRec) and isinstance(b, LRec) and a.name == b.name:
        return LRec(a.name, merge(a.body, b.body, path + (f"rec {a.name}",)))
    if isinstance(a, LSelect) and isinstance(b, LSelect) and a.peer == b.peer:
        if set(a.labels) != set(b.labels):
            raise MergeError(a, b, path)
        others = {arm.label: arm for arm in b.arms}
        return LSelect(a.peer, tuple(_merge_arm(arm, others[arm.label], path) for arm in a.arms))
    if isinstance(a, LBranch) and isinstance(b, LBranch) and a.peer == b.peer:
        others = {arm.label: arm for arm in b.arms}
        arms = [_merge_arm(arm, others[arm.label], path) if arm.label in others else arm
                for arm in a.arms]
        arms.extend(arm for arm in b.arms if arm.label not in a.labels)
        return LBranch(a.peer, tuple(arms))
    raise MergeError(a, b, path)


def _merge_arm(left: Arm, right: Arm, path: Path) -> Arm:
    if left.sort is not right.sort:
        raise MergeError(left.cont, right.cont, path + (left.label,))
    return Arm(left.label, left.sort, merge(left.cont, right.cont, path + (left.label,)))


def project(g: GlobalType, p: Role, reliable: Iterable[Role]) -> LocalType:
    """Project ``g`` onto role ``p``.

    Raises:
        ProjectionError: on a merge failure, a crashed ``p``, or a transmission from an
            unreliable sender that offers no crash branch.
    """
    return _Projector(p, frozenset(reliable)).project(g, ())


class _Projector:

    def __init__(self, role: Role, reliable: FrozenSet[Role]):
        self.role = role
        self.reliable = reliable
        self.memo: Dict[int, LocalType] = {}

    def project(self, g: GlobalType, path: Path) -> LocalType:
        key = id(g)
        if key not in self.memo:
            self.memo[key] = self._project(g, path)
        return self.memo[key]

    def _project(self, g: GlobalType, path: Path) -> LocalType:
        p = self.role
        if isinstance(g, GEnd):
            return L_END
        if isinstance(g, GVar):
            return LVar(g.name)
        if isinstance(g, GRec):
            if p not in active_roles(g.body) | crashed_roles(g.body) and not free_vars(g):
                return L_END
            body = self.project(g.body, path + (f"rec {g.name}",))
            if isinstance(body, LEnd) or body == LVar(g.name):
                return L_END
            if g.name not in free_vars(body):
                return body
            return LRec(g.name, body)

        if (p == g.sender and g.sender_crashed) or (p == g.receiver and g.receiver_crashed):
            raise ProjectionError(p, "role has crashed", path)
        here = path + (f"{g.sender}->{g.receiver}",)
        if p == g.sender:
            if g.en_route:
                return self.project(g.arms[g.committed].cont, here)
            arms = tuple(Arm(a.label, a.sort, self.project(a.cont, here + (a.label,)))
                         for a in g.arms if not a.is_crash)
            return LSelect(g.receiver, arms)
        if p == g.receiver:
            if g.sender not in self.reliable and g.crash_index is None:
                raise ProjectionError(p, f"no crash branch for unreliable sender {g.sender}", here)
            arms = tuple(Arm(a.label, a.sort, self.project(a.cont, here + (a.label,))) for a in g.arms)
            return LBranch(g.sender, arms)
        views = [self.project(a.cont, here + (a.label,)) for a in g.arms]
        merged = views[0]
        try:
            for view in views[1:]:
                merged = merge(merged, view, here)
        except MergeError as e:
            raise ProjectionError(p, str(e), e.path) from e
        return merged


def project_roles(g: GlobalType, roles: Iterable[Role], reliable: Iterable[Role]) -> Dict[Role, LocalType]:
    reliable = frozenset(reliable)
    return {role: project(g, role, reliable) for role in roles}


def project_all(decl) -> Dict[Role, LocalType]:
    """Project a ProtocolDecl onto every declared role, in declaration order.

    Raises:
        ProjectionError: for the first role whose projection is undefined.
    """
    try:
        return project_roles(decl.body, decl.role_names, decl.reliable)
    except ProjectionError as e:
        logger.error(f"Projection of {decl.name} failed: {e}")
        raise
