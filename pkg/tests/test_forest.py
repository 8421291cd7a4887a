from __future__ import annotations

import random

import networkx as nx
import pytest
from hypothesis import given, strategies as st

from hierpi.forest import (
    _oracle_parts,
    EMPTY, BoundExceeded, LabelledForest, NameLabel, ReconstructError, SeqLabel, _treedepth,
    depth_exact, describe, enumerate_forests, forest_of, height, height_nu, insert_forest,
    leaf, node, reconstruct, reconstruct_nf, to_dot, to_json, traces, union,
)
from hierpi.generators import random_annotated, random_forest
from hierpi.hierarchy import tied_analysis
from hierpi.normal_form import congruent, normalize
from hierpi.semantics import reduce, redexes
from hierpi.syntax import ChanType, Name, nest_nu, parse_term

from conftest import load


def _seq(text):
    return normalize(parse_term(text)).actives[0]


def test_forest_of_empty():
    assert forest_of(parse_term("0")) == EMPTY
    assert height(EMPTY) == 0 and height_nu(EMPTY) == 0


def test_forest_of_server_client():
    f = forest_of(load("server_client_annotated"))
    assert describe(f).startswith("(s,S)[(c,C)[")
    assert len(f.leaves()) == 3
    assert height_nu(f) == 2 and height(f) == 3


def test_forest_of_par_is_union():
    f = forest_of(parse_term("(new a:A.a<a>.0) | (new b:B.b(x).0)"))
    assert len(f.roots()) == 2


def test_forest_of_requires_annotations():
    from hierpi.forest import ForestError
    with pytest.raises(ForestError):
        forest_of(parse_term("new a.a<a>.0"))


def test_traces_and_heights():
    s, c = Name("s"), Name("c")
    a = _seq("s<c>.0")
    f = node(NameLabel(s, ChanType("S")), [node(NameLabel(c, ChanType("C")), [leaf(a)])])
    tr = traces(f)
    assert len(tr) == 1 and len(next(iter(tr))) == 3
    assert height(f) == 3 and height_nu(f) == 2


def test_reconstruct():
    assert congruent(reconstruct(EMPTY), parse_term("0"))
    t = parse_term("new a:A. new b:B. a<b>.0")
    p = normalize(t)
    (a, ta), (b, tb) = p.restrictions
    f = node(NameLabel(a, ta), [node(NameLabel(b, tb), [leaf(p.actives[0])])])
    assert congruent(reconstruct(f), t)


def test_reconstruct_condition_errors():
    p = normalize(parse_term("new a:A. new b:B. a<b>.0"))
    (a, ta), (b, tb) = p.restrictions
    bad3 = union(node(NameLabel(a, ta)), node(NameLabel(b, tb)), leaf(p.actives[0]))
    with pytest.raises(ReconstructError) as e:
        reconstruct_nf(bad3)
    assert e.value.condition == 3
    bad2 = union(node(NameLabel(a, ta)), node(NameLabel(a, ta)))
    with pytest.raises(ReconstructError) as e:
        reconstruct_nf(bad2)
    assert e.value.condition == 2
    bad1 = LabelledForest((None, 0), (SeqLabel(p.actives[0]), SeqLabel(p.actives[0])))
    with pytest.raises(ReconstructError) as e:
        reconstruct_nf(bad1)
    assert e.value.condition == 1


def test_insert_empty_path():
    a = Name("a")
    add = node(NameLabel(a, ChanType("A")), [leaf(_seq("a<a>.0"))])
    out = insert_forest(EMPTY, [], add, lambda x, y: True)
    assert len(out.roots()) == 1


def test_insert_attaches_under_deepest_smaller():
    from hierpi.basetypes import BaseForest
    T = BaseForest.chain(["ta", "tb", "tc"])
    a, b, c = Name("a"), Name("b"), Name("c")
    host = node(NameLabel(a, ChanType("ta")), [node(NameLabel(b, ChanType("tb")), [])])
    path = [0, 1]
    add = node(NameLabel(c, ChanType("tc")))
    out = insert_forest(host, path, add, lambda x, y: T.lt(x, y))
    cnode = [i for i in out.nodes if isinstance(out.labels[i], NameLabel)
             and out.labels[i].name == c][0]
    assert out.labels[out.parent[cnode]].name == b


def test_enumerate_zero():
    assert list(enumerate_forests(parse_term("0"))) == [EMPTY]


def test_enumerate_tied_to_fixture():
    t = load("tied_to")
    fs = list(enumerate_forests(t))
    assert len(fs) == 58  # frozen from the oracle
    for f in fs:
        assert congruent(reconstruct(f), t)
    # forest_of: a broom with all names on one spine
    assert any(height_nu(f) == 3 and len(f.roots()) == 1 for f in fs)


def test_enumerate_bound():
    with pytest.raises(BoundExceeded):
        list(enumerate_forests(parse_term("new a:A.new b:B.a<b>.0"), bound=1))


def test_depth_exact_examples():
    assert depth_exact(parse_term("new x. 0")) == 0
    st = normalize(load("stack"))
    q1 = reduce(st, redexes(st)[0])
    q2 = reduce(q1, redexes(q1)[0])
    assert depth_exact(q1) == 4 and depth_exact(q2) == 5


def test_depth_exact_qijk_one_each():
    t = parse_term("""new s:S[M[D]]. new c:C[M[D]]. (
        !s(x). new d:D. x<d>.0 | !c(m).(s<m>.0 | m(y).c<m>.0) | !tau.new m:M[D].c<m>.0
        | (new m1:M[D]. c<m1>.0)
        | (new m2:M[D]. (s<m2>.0 | m2(y).c<m2>.0))
        | (new m3:M[D]. ((new d:D. m3<d>.0) | m3(y).c<m3>.0)))""")
    assert depth_exact(t) <= 4
    assert nest_nu(t) == 4


def _brute_td(G, nodes):
    nodes = frozenset(nodes)
    if not nodes:
        return 0
    cs = list(nx.connected_components(G.subgraph(nodes)))
    if len(cs) > 1:
        return max(_brute_td(G, c) for c in cs)
    return 1 + min(_brute_td(G, nodes - {v}) for v in nodes)


@given(st.integers(1, 7), st.floats(0, 1), st.integers(0, 10**6))
def test_treedepth_matches_brute_force(n, p, seed):
    G = nx.gnp_random_graph(n, p, seed=seed)
    adj = [0] * n
    for i, j in G.edges():
        adj[i] |= 1 << j
        adj[j] |= 1 << i
    assert _treedepth((1 << n) - 1, tuple(adj)) == _brute_td(G, G.nodes())


@given(st.integers(0, 10**6))
def test_depth_exact_is_min_height(seed):
    rng = random.Random(seed)
    t = random_annotated(rng, random_forest(rng, 3), max_restrictions=4)
    fs = list(enumerate_forests(t))
    assert depth_exact(t) == min(height_nu(f) for f in fs)
    assert nest_nu(t) >= depth_exact(t)


@given(st.integers(0, 10**6))
def test_reconstruct_forest_of(seed):
    rng = random.Random(seed)
    t = random_annotated(rng, random_forest(rng, 3))
    assert congruent(reconstruct(forest_of(normalize(t))), t)


def tied_leaves_share_tree(t) -> bool:
    """Every oracle forest puts the leaves of tied actives in one tree."""
    p = normalize(t)
    rel = tied_analysis(p)
    k = len(_oracle_parts(p)[0])
    for f in enumerate_forests(p):
        for i, j in rel.tied:
            if f.path(k + i)[0] != f.path(k + j)[0]:
                return False
    return True


def test_tied_leaves_fixture():
    assert tied_leaves_share_tree(load("tied_to"))


@given(st.integers(0, 10**6))
def test_tied_leaves_share_a_tree(seed):
    rng = random.Random(seed)
    t = random_annotated(rng, random_forest(rng, 3), max_restrictions=4)
    assert tied_leaves_share_tree(t)


def test_emitters():
    f = forest_of(load("server_client_annotated"))
    doc = to_json(f)
    assert len(doc["nodes"]) == 5
    assert to_dot(f).startswith("digraph")
