"""Seeded property suites over generated types, configurations and runs."""
from collections import defaultdict

import numpy as np
import pytest

from generators import GlobalGenerator, LocalGenerator, add_branches, narrow, random_configuration, seeds
from crmpst.DEFAULTS import MAX_CRASHES
from crmpst.core_model import LRec, unfold_once, well_annotated, well_formed
from crmpst.interface import Crash
from crmpst.parsing import ProtocolDecl, parse_protocol
from crmpst.projection import merge
from crmpst.rendering import render_protocol
from crmpst.semantics.config_lts import config_transitions
from crmpst.semantics.global_lts import AnnotatedGlobal, global_transitions
from crmpst.semantics.session import Seeded, run_session
from crmpst.subtyping import subtype

CASES = 500
RUNS = 1000
RELIABLE = ("q",)
ROLES = ("p", "q", "r")


def generated(seed):
    return GlobalGenerator(np.random.default_rng(seed), ROLES, RELIABLE).generate(4)


@pytest.mark.parametrize("seed", seeds(CASES))
def test_generated_types_are_well_formed(seed):
    assert well_formed(generated(seed), RELIABLE) == []


@pytest.mark.parametrize("seed", seeds(CASES))
def test_reductions_preserve_annotations(seed):
    rng = np.random.default_rng(seed + 10_000)
    st = AnnotatedGlobal.initial(generated(seed))
    for _ in range(30):
        assert well_annotated(st.crashed, st.g, RELIABLE)
        moves = global_transitions(st, RELIABLE)
        if not moves:
            break
        _, st = moves[int(rng.integers(len(moves)))]


@pytest.mark.parametrize("seed", seeds(CASES))
def test_configuration_steps_are_determined_by_label(seed):
    c = random_configuration(np.random.default_rng(seed))
    successors = defaultdict(set)
    for label, succ in config_transitions(c, RELIABLE):
        successors[label].add(succ)
    assert all(len(found) == 1 for found in successors.values())


@pytest.mark.parametrize("seed", seeds(CASES))
def test_subtyping_is_reflexive_and_transitive(seed):
    rng = np.random.default_rng(seed)
    t = LocalGenerator(rng).generate(4)
    once = narrow(t, rng)
    twice = narrow(once, rng)
    assert subtype(t, t)
    assert subtype(once, t) and subtype(twice, once)
    assert subtype(twice, t)


@pytest.mark.parametrize("seed", seeds(CASES))
def test_subtyping_ignores_unfolding(seed):
    t = LocalGenerator(np.random.default_rng(seed)).generate(4)
    if isinstance(t, LRec):
        assert subtype(t, unfold_once(t)) and subtype(unfold_once(t), t)
    assert subtype(narrow(t, np.random.default_rng(seed)), t)


@pytest.mark.parametrize("seed", seeds(CASES))
def test_merge_is_idempotent_and_commutes_up_to_subtyping(seed):
    rng = np.random.default_rng(seed)
    t = LocalGenerator(rng).generate(4)
    assert merge(t, t) == t
    left, right = add_branches(t, rng), add_branches(t, rng)
    one, other = merge(left, right), merge(right, left)
    assert subtype(one, other) and subtype(other, one)
    assert subtype(one, left) and subtype(one, right)


@pytest.mark.parametrize("seed", seeds(CASES))
def test_printed_protocols_parse_back(seed):
    decl = ProtocolDecl("Generated", tuple((role, role in RELIABLE) for role in ROLES), generated(seed))
    assert parse_protocol(render_protocol(decl)) == decl


@pytest.mark.parametrize("seed", seeds(RUNS, base=42))
def test_runs_stay_typed(seed, nbac_session, nbac_decl):
    ann = AnnotatedGlobal.initial(nbac_decl.body)
    trace = run_session(nbac_session, nbac_decl.reliable, Seeded(seed), max_steps=200, governing=ann)
    assert trace.untyped_at is None, trace.untyped_reason
    assert trace.conforming or trace.exhausted
    crashes = [label for label in trace.labels if isinstance(label, Crash)]
    assert 1 <= len(crashes) <= MAX_CRASHES
