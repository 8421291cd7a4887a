from __future__ import annotations

import random

import pytest
from hypothesis import given, strategies as st

from hierpi.generators import random_annotated, random_forest
from hierpi.syntax import (
    NIL, ChanType, Par, ParseError, Restrict, alpha_eq, ensure_name_uniq, global_name,
    name_sets, parse_term, print_term, satisfies_name_uniq, substitute,
)

from conftest import load


def test_nil_roundtrip():
    assert parse_term("0") == NIL
    assert print_term(NIL) == "0"
    assert print_term(Par(NIL, NIL)) == "(0 | 0)"


def test_parse_server_client_annotations():
    t = load("server_client_annotated")
    assert isinstance(t, Restrict) and t.name.ident == "s"
    assert t.type == ChanType("S", ChanType("M", ChanType("D")))
    assert t.body.type == ChanType("C", ChanType("M", ChanType("D")))


@pytest.mark.parametrize("text", ["new a. a<a", "a(x", "new . 0", "a<b>.0 |", "!0 +"])
def test_parse_errors(text):
    with pytest.raises(ParseError):
        parse_term(text)


def test_parse_error_position():
    with pytest.raises(ParseError) as e:
        parse_term("a<b>.0 |\n  )")
    assert e.value.line == 2


def test_name_sets():
    free, bound, active = name_sets(parse_term("a<b>.0"))
    assert {x.ident for x in free} == {"a", "b"} and not bound and not active
    free, bound, active = name_sets(parse_term("new x.(x<y>.0)"))
    assert {x.ident for x in free} == {"y"}
    assert {x.ident for x in bound} == {"x"} == {x.ident for x in active}


def test_name_sets_server_client():
    free, _, active = name_sets(load("server_client"))
    assert not free
    assert {x.ident for x in active} == {"s", "c"}


def test_substitute():
    x, b, m = global_name("x"), global_name("b"), global_name("m")
    assert print_term(substitute(parse_term("x<c>.0"), x, b)) == "b<c>.0"
    assert print_term(substitute(parse_term("new d. x<d>.0"), x, m)) == "new d.m<d>.0"
    t = parse_term("a<c>.0")
    assert substitute(t, global_name("z"), global_name("w")) == t


def test_ensure_name_uniq():
    t = parse_term("new x.0 | new x.0")
    u = ensure_name_uniq(t)
    assert satisfies_name_uniq(u) and alpha_eq(t, u)
    v = ensure_name_uniq(parse_term("x(x).0"))
    assert satisfies_name_uniq(v)


def test_server_client_roundtrip():
    t = load("server_client_annotated")
    assert alpha_eq(parse_term(print_term(t)), t)


@given(st.integers(0, 10**6))
def test_print_parse_roundtrip(seed):
    rng = random.Random(seed)
    T = random_forest(rng, 3)
    t = random_annotated(rng, T)
    assert alpha_eq(parse_term(print_term(t)), t)


@given(st.integers(0, 10**6))
def test_ensure_name_uniq_idempotent(seed):
    rng = random.Random(seed)
    t = random_annotated(rng, random_forest(rng, 2))
    u = ensure_name_uniq(t)
    assert satisfies_name_uniq(u)
    assert alpha_eq(ensure_name_uniq(u), u)
