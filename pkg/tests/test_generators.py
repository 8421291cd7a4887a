from __future__ import annotations

import random

from hypothesis import given, strategies as st

from hierpi.generators import (
    random_annotated, random_congruent, random_forest, random_process, random_typable,
)
from hierpi.normal_form import congruent
from hierpi.syntax import free_names, restricted_names, satisfies_name_uniq
from hierpi.typesys import typably_hierarchical


def test_seeded_generators_repeat():
    a = random_annotated(random.Random(5), random_forest(random.Random(5), 3))
    b = random_annotated(random.Random(5), random_forest(random.Random(5), 3))
    assert congruent(a, b)


@given(st.integers(0, 10**6))
def test_annotated_terms_are_closed_and_use_the_forest(seed):
    rng = random.Random(seed)
    T = random_forest(rng, 4)
    t = random_annotated(rng, T, max_restrictions=6)
    assert not free_names(t) and satisfies_name_uniq(t)
    names = restricted_names(t)
    assert 1 <= len(names) <= 6
    assert all(ty.base in T.nodes for ty in names.values())


@given(st.integers(0, 10**6))
def test_processes_are_closed(seed):
    assert not free_names(random_process(random.Random(seed)))


@given(st.integers(0, 10**6))
def test_random_congruent_is_congruent(seed):
    rng = random.Random(seed)
    t = random_annotated(rng, random_forest(rng, 3))
    assert congruent(t, random_congruent(rng, t))


def test_random_typable():
    p, T = random_typable(random.Random(9))
    assert typably_hierarchical(p, T)
