from __future__ import annotations

import random

from hypothesis import given, strategies as st

from hierpi.generators import random_annotated, random_forest
from hierpi.normal_form import (
    NF, canonical, congruent, is_normal, nf_name_uniq, normalize, to_term,
)
from hierpi.syntax import freshen_binders, parse_term, print_term

from conftest import load


def test_normalize_garbage():
    assert normalize(parse_term("(0 | new x.0)")) == NF()


def test_normalize_extrusion():
    p = normalize(parse_term("new a.(new b.(a<b>.0) | a(x).0)"))
    assert [x.ident for x, _ in p.restrictions] == ["a", "b"]
    assert print_term(to_term(p)) == "new a.new b.(a<b>.0 | a(x).0)"


def test_replicated_nil_collapses():
    assert normalize(parse_term("!tau.0 | 0")).actives[0].replicated
    assert normalize(parse_term("(0 | 0)")) == NF()


def test_canonical_commutativity_and_swap():
    assert canonical(parse_term("a<b>.0 | c(x).0")) == canonical(parse_term("c(x).0 | a<b>.0"))
    assert (canonical(parse_term("new x.new y.(x<y>.0)"))
            == canonical(parse_term("new y.new x.(x<y>.0)")))


def test_congruent_laws():
    assert congruent(parse_term("new x.0"), parse_term("0"))
    assert congruent(parse_term("!a(x).0"), parse_term("a(x).0 | !a(x).0"))
    assert not congruent(parse_term("a<b>.0"), parse_term("b<a>.0"))


def test_replication_copies_absorbed():
    # deliberate: keys coincide, not only congruent()
    assert canonical(parse_term("!a(x).0")) == canonical(parse_term("a(x).0 | !a(x).0"))


def test_distinguishes_sharing():
    assert not congruent(parse_term("new x.(x<a>.0 | x(y).0)"),
                         parse_term("new x.x<a>.0 | new x.x(y).0"))


def test_server_client_nf():
    p = normalize(load("server_client"))
    assert len(p.restrictions) == 2 and len(p.actives) == 3
    assert all(a.replicated for a in p.actives)


@given(st.integers(0, 10**6))
def test_normalize_idempotent_and_congruent(seed):
    rng = random.Random(seed)
    t = random_annotated(rng, random_forest(rng, 3))
    p = normalize(t)
    assert is_normal(to_term(p))
    assert normalize(to_term(p)) == p or congruent(to_term(p), normalize(to_term(p)))
    assert congruent(t, to_term(p))
    assert nf_name_uniq(p)


@given(st.integers(0, 10**6))
def test_canonical_alpha_invariant(seed):
    rng = random.Random(seed)
    t = random_annotated(rng, random_forest(rng, 3))
    assert canonical(freshen_binders(t)) == canonical(t)
