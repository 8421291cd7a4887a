from __future__ import annotations

import random

import pytest
from hypothesis import given, strategies as st

from hierpi.basetypes import BaseForest
from hierpi.forest import EMPTY, describe, enumerate_forests, forest_of
from hierpi.generators import random_annotated, random_forest
from hierpi.hierarchy import (
    depth_bound, migratable, phi, t_compatible_forest, t_compatible_oracle, t_compatible_term,
    t_shaped, t_shaped_failures, tied_analysis,
)
from hierpi.normal_form import NF, normalize
from hierpi.semantics import redexes, reduce, successors
from hierpi.syntax import freshen_binders, parse_term

from conftest import SCMD, forest, load


def _run(p, picks):
    for k in picks:
        p = successors(p)[k][1]
    return p


def test_tied_analysis_fixture():
    p = normalize(load("tied_to"))
    rel = tied_analysis(p)
    assert {(0, 3), (1, 3)} <= set(rel.linked)
    assert {(0, 1), (1, 3), (0, 3)} <= set(rel.tied)
    a = p.restrictions[0][0]
    assert rel.tied_to(a, 1)
    assert (2, 0) not in rel.tied


def test_tied_analysis_empty():
    rel = tied_analysis(normalize(parse_term("a<b>.0 | b(x).0")))
    assert not rel.linked
    assert rel.tied == {(0, 0), (1, 1)}


def test_client_continuations_migratable():
    p = normalize(load("server_client"))
    C = [a for a in p.actives if any(pi.chan.ident == "c" for pi, _ in a.branches
                                     if hasattr(pi, "binder"))][0]
    pi, cont = C.branches[0]
    assert migratable(cont, pi.binder) == [0, 1]


def test_t_compatible_forest():
    assert t_compatible_forest(EMPTY, SCMD)
    assert t_compatible_forest(forest_of(load("server_client_annotated")), SCMD)
    t = parse_term("new b:A. new c:A. b<c>.0")
    assert not t_compatible_forest(forest_of(t), BaseForest.of(["A"]))


def test_phi_empty():
    assert phi(NF(), SCMD) == EMPTY


def test_phi_server_client_state():
    q = _run(normalize(load("server_client_annotated")), [0, 1, 1])
    assert describe(phi(q, SCMD)) == (
        "(s,S)[!s(x).(new d:D.x<d>.0)[], (c,C)[!c(m).(s<m>.0 | m(y).c<m>.0)[], "
        "!tau.(new m:M[D].c<m>.0)[], (m,M)[(d,D)[m<d>.0[]], m(y).c<m>.0[]]]]")


def test_phi_tied_to_both_orders():
    p = normalize(load("tied_to"))
    ab = describe(phi(p, forest("tied_ab")))
    ba = describe(phi(p, BaseForest.of(["A", "B", "C", "T", "U"], [("B", "A")])))
    assert ab == "(a,A)[(b,B)[a<b>.0[], b(x).0[]], a(x).0[]], (c,C)[c(x).0[]]"
    assert ba == "(b,B)[(a,A)[a(x).0[], a<b>.0[]], b(x).0[]], (c,C)[c(x).0[]]"


def test_migration_walkthrough():
    T = forest("migration")
    p = normalize(load("migration"))
    assert t_compatible_term(p, T)
    (r, q), = successors(p)
    assert describe(phi(q, T)) == (
        "(e,E)[(a,A)[(b,B)[(c,C)[b<c>.0[], c(z).a<e>.0[]], b(y).0[]], (d,D)[a<d>.0[]]]]")
    assert t_compatible_term(q, T)


def test_t_compatible_term_examples():
    assert t_compatible_term(load("server_client_annotated"), SCMD)
    assert t_compatible_term(parse_term("0"), SCMD)


def test_stack_two_pushes_not_compatible():
    T = BaseForest.chain("NVSA")
    st_ = parse_term("new s:S[A]. new n:N[A]. new v:V[A]. new a:A. "
                     "(!s(x). new b:A. ((v<b>. n<x>.0) | s<b>.0) | s<a>.0)")
    p = normalize(st_)
    assert t_compatible_term(p, T)
    q = _run(p, [0, 0])
    assert not t_compatible_term(q, T)
    assert not t_compatible_oracle(q, T)


def test_t_shaped_examples():
    assert t_shaped(load("server_client_annotated"), SCMD)
    assert t_shaped(parse_term("0"), SCMD)
    bad = parse_term("new a:A. a(x). new b:A. new c:A. (b<c>.0 | c<a>.0 | b(y).c(z).0)")
    T = BaseForest.of(["A"])
    assert not t_shaped(bad, T)
    assert t_shaped_failures(bad, T)


def test_depth_bound():
    assert depth_bound(SCMD) == 4
    assert depth_bound(BaseForest.of([])) == 0
    assert depth_bound(BaseForest.of(list("abcde"), [("a", "b"), ("c", "d"), ("d", "e")])) == 3


@given(st.integers(0, 10**6))
def test_phi_always_compatible_and_agrees_with_oracle(seed):
    rng = random.Random(seed)
    T = random_forest(rng, rng.randint(1, 4))
    t = random_annotated(rng, T, max_restrictions=5)
    p = normalize(t)
    assert t_compatible_forest(phi(p, T), T)
    assert t_compatible_term(p, T) == t_compatible_oracle(p, T)


@given(st.integers(0, 10**6))
def test_alpha_invariance(seed):
    rng = random.Random(seed)
    T = random_forest(rng, 3)
    t = random_annotated(rng, T, max_restrictions=5)
    assert t_compatible_term(t, T) == t_compatible_term(freshen_binders(t), T)


@given(st.integers(0, 10**6))
def test_take_out_closure(seed):
    rng = random.Random(seed)
    T = random_forest(rng, 3)
    p = normalize(random_annotated(rng, T, max_restrictions=5))
    if not t_compatible_term(p, T):
        return
    xs = [x for x in p.restrictions if rng.random() < 0.6]
    acts = [a for a in p.actives if rng.random() < 0.6]
    from hierpi.normal_form import seq_fn
    used = set().union(*(seq_fn(a) for a in acts)) if acts else set()
    bound = {x for x, _ in p.restrictions}
    keep = {x for x, _ in xs}
    if (used & bound) - keep:
        return  # would free a name: not a sub-normal-form
    assert t_compatible_term(NF(tuple(xs), tuple(acts)), T)
