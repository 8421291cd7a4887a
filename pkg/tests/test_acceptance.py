"""End-to-end acceptance checks, one per criterion, each with its time limit.

Run with ``pytest -v tests/test_acceptance.py``; the terminal summary lists one
PASS/FAIL line per criterion.  ``python tests/test_acceptance.py`` prints the
same lines without pytest.
"""

from __future__ import annotations

import random
import re
import sys
import time
from pathlib import Path

import pytest

sys.path.insert(0, str(Path(__file__).resolve().parent))

from hierpi.basetypes import BaseForest
from hierpi.forest import depth_exact, height_nu
from hierpi.generators import random_annotated, random_forest, random_typable
from hierpi.hierarchy import phi, t_compatible_forest, t_compatible_oracle, t_compatible_term, t_shaped
from hierpi.ndcma import (
    check_nda_encoding, check_pi_encoding, encode_nda, max_outputs_per_channel,
    random_automaton, z_successors,
)
from hierpi.normal_form import normalize
from hierpi.semantics import reach
from hierpi.syntax import parse_term
from hierpi.typesys import generate_constraints, infer, typecheck

from conftest import CORPUS, SCMD, forest, load
from lemmas import congruence_instance, substitution_instance, weakening_instance
from test_forest import tied_leaves_share_tree

pytestmark = pytest.mark.acceptance

RESULTS: dict = {}


def record(n: int, ok: bool, detail: str, elapsed: float, limit: float = None):
    within = limit is None or elapsed < limit
    status = "PASS" if ok and within else "FAIL"
    bound = f" (limit {limit:g}s)" if limit else ""
    RESULTS[n] = f"{status} criterion {n:>2}: {detail} [{elapsed:.2f}s{bound}]"
    assert ok, RESULTS[n]
    assert within, RESULTS[n]


def test_criterion_01_infer_server_client():
    t0 = time.perf_counter()
    r = infer(load("server_client"))
    chain = str(r.forest) if r.forest else ""
    ok = r.typable and chain.count("◃") == 3 and "," not in chain
    rename = dict(zip(chain.split("◃"), "SCMD"))
    ann = {x.ident: str(ty) for x, ty in r.annotations.items()}
    expected = {x.ident: str(ty) for x, ty in
                normalize(load("server_client_annotated")).restrictions}
    for k, v in ann.items():
        for old, new in rename.items():
            v = re.sub(rf"\b{old}\b", new, v)
        ok = ok and expected.get(k, v) == v
    ok = ok and bool(typecheck(load("server_client_annotated"), SCMD))
    record(1, ok, f"typable with chain {chain}; annotated term typechecks under S◃C◃M◃D",
           time.perf_counter() - t0)


def test_criterion_02_stack_untypable():
    t0 = time.perf_counter()
    r = infer(load("stack"))
    m = re.search(r"inconsistent with s : t_s\[(\w+)\], b : (\w+)", r.message)
    ok = r.verdict == "untypable" and m is not None and m.group(1) == m.group(2)
    record(2, ok, f"verdict {r.verdict}; {r.message.splitlines()[-1] if r.message else ''}",
           time.perf_counter() - t0)


def test_criterion_03_server_client_bounded_depth():
    t0 = time.perf_counter()
    g = reach(load("server_client_annotated"), max_states=200)
    states = list(g.states.values())
    shaped = all(t_shaped(q, SCMD) for q in states)
    depths = [depth_exact(q, bound=30) for q in states]
    heights = [height_nu(phi(q, SCMD)) for q in states]
    ok = len(states) >= 200 and shaped and max(depths) <= 4 and max(heights) <= 4
    record(3, ok, f"{len(states)} states, all T-shaped={shaped}, max depth_exact {max(depths)}, "
                  f"max phi restriction nesting {max(heights)}", time.perf_counter() - t0, 60)


def _typable_corpus(n: int):
    out = [(normalize(load("server_client_annotated")), SCMD),
           (normalize(load("server_client_2clients")), SCMD)]
    rng = random.Random(2024)
    while len(out) < n:
        out.append(random_typable(rng, tau=rng.random() < 0.5))
    return out


def test_criterion_04_subject_reduction_and_shape():
    t0 = time.perf_counter()
    terms = _typable_corpus(12)
    checked = 0
    ok = True
    for p, T in terms:
        g = reach(p, max_states=500)
        for q in g.states.values():
            checked += 1
            ok = ok and bool(typecheck(q, T)) and t_shaped(q, T)
    record(4, ok, f"{len(terms)} typable terms, {checked} reachable states typecheck and are "
                  "T-shaped", time.perf_counter() - t0, 300)


def test_criterion_05_phi_compatible_and_oracle():
    t0 = time.perf_counter()
    rng = random.Random(55)
    n, agree, compat, positive = 200, 0, 0, 0
    for _ in range(n):
        T = random_forest(rng, rng.randint(1, 4))
        p = normalize(random_annotated(rng, T, max_restrictions=6))
        compat += t_compatible_forest(phi(p, T), T)
        fast = t_compatible_term(p, T)
        positive += fast
        agree += fast == t_compatible_oracle(p, T)
    ok = agree == compat == n
    record(5, ok, f"{n} terms: phi T-compatible {compat}/{n}, oracle agreement {agree}/{n} "
                  f"({positive} compatible)", time.perf_counter() - t0, 120)


def test_criterion_06_tied_leaves():
    t0 = time.perf_counter()
    rng = random.Random(66)
    ok = tied_leaves_share_tree(load("tied_to"))
    n = 100
    good = sum(tied_leaves_share_tree(random_annotated(rng, random_forest(rng, 3),
                                                       max_restrictions=4)) for _ in range(n))
    ok = ok and good == n
    record(6, ok, f"fixture and {good}/{n} random terms", time.perf_counter() - t0)


@pytest.mark.parametrize("case", ["self_send", "two_clients", "random"])
def test_criterion_07_pi_to_ndcma_bisimulation(case):
    t0 = time.perf_counter()
    if case == "self_send":
        t, T = load("self_send"), forest("self_send")
    elif case == "two_clients":
        t, T = load("server_client_2clients"), SCMD
    else:
        t, T = random_typable(random.Random(80), min_redexes=3)
    res = check_pi_encoding(t, T, 6)
    elapsed = time.perf_counter() - t0
    line = f"{case}: {'bisimilar' if res else 'clause ' + res.clause} over 6 rounds ({res.pairs} pairs, {elapsed:.2f}s)"
    prev = RESULTS.pop(7, None)
    parts = (prev.split(": ", 1)[1].rsplit(" [", 1)[0] + "; ") if prev and prev.startswith("PASS") else ""
    record(7, bool(res), parts + line, elapsed, 120)


def test_criterion_08_ndcma_to_pi():
    t0 = time.perf_counter()
    rng = random.Random(88)
    n, typed, bisim, senders = 20, 0, 0, 0
    for _ in range(n):
        a = random_automaton(rng, max_states=3, max_level=2, max_transitions=4)
        term, T, env = encode_nda(a)
        typed += bool(typecheck(term, T, env))
        bisim += bool(check_nda_encoding(a, 6))
        p = normalize(term)
        frontier = [p]
        single = max_outputs_per_channel(p) <= 1
        for _ in range(3):
            frontier = [q for r in frontier for q in z_successors(r)][:8]
            single = single and all(max_outputs_per_channel(q) <= 1 for q in frontier)
        senders += single
    ok = typed == bisim == senders == n
    record(8, ok, f"{n} automata: typecheck {typed}/{n}, 6-round bisimulation {bisim}/{n}, "
                  f"one sender per channel {senders}/{n}", time.perf_counter() - t0, 300)


def test_criterion_09_order_atoms():
    t0 = time.perf_counter()
    ok, worst = True, ""
    files = sorted(CORPUS.glob("*.pi"))
    for f in files:
        cs = generate_constraints(parse_term(f.read_text()))  # asserts the bound itself
        n = len(cs.base_vars)
        pairs = cs.distinct_pairs()
        k = len(pairs[True] | pairs[False])
        ok = ok and k <= n * (n - 1) // 2
        worst += f"{f.stem} {k}<={n * (n - 1) // 2} "
    record(9, ok, f"{len(files)} corpus terms: {worst.strip()}", time.perf_counter() - t0)


def test_criterion_10_lemmas():
    t0 = time.perf_counter()
    rng = random.Random(1010)
    n = 500
    counts = {name: sum(fn(rng) for _ in range(n)) for name, fn in
              [("substitution", substitution_instance), ("weakening", weakening_instance),
               ("congruence", congruence_instance)]}
    ok = all(v == n for v in counts.values())
    record(10, ok, ", ".join(f"{k} {v}/{n}" for k, v in counts.items()),
           time.perf_counter() - t0, 60)


def summary_lines() -> list:
    return [RESULTS[k] for k in sorted(RESULTS)]


if __name__ == "__main__":
    import inspect
    for name, fn in sorted(inspect.getmembers(sys.modules[__name__], inspect.isfunction)):
        if not name.startswith("test_criterion"):
            continue
        cases = ["self_send", "two_clients", "random"] if "case" in inspect.signature(fn).parameters else [None]
        for c in cases:
            try:
                fn(c) if c else fn()
            except AssertionError:
                pass
    print("\n".join(summary_lines()))
