"""Seeded random generators for base forests, annotated terms and typable terms."""

from __future__ import annotations

import random
from typing import Optional

from .basetypes import BaseForest
from .syntax import (
    ChanType, Choice, Input, Name, NIL, Nil, Output, Par, Repl, Restrict, Tau, Term,
    free_names, freshen_binders, par, parallel_components,
)

BASES = "ABCDEFGH"


def random_forest(rng: random.Random, n: int) -> BaseForest:
    names = list(BASES[:n])
    edges = []
    for i, b in enumerate(names):
        if i and rng.random() < 0.7:
            edges.append((rng.choice(names[:i]), b))
    return BaseForest.of(names, edges)


class _Gen:
    def __init__(self, rng, max_restrictions, bases, annotate, tau, repl):
        self.rng = rng
        self.left = max_restrictions
        self.bases = bases
        self.annotate = annotate
        self.tau = tau
        self.repl = repl
        self.count = 0

    def name(self, stem: str) -> Name:
        self.count += 1
        return Name(f"{stem}{self.count}")

    def ann(self):
        if not self.annotate:
            return None
        return ChanType(self.rng.choice(self.bases))

    def proc(self, scope: list, depth: int) -> Term:
        r = self.rng.random()
        if depth <= 0 or not scope:
            return NIL
        if r < 0.25 and self.left > 0:
            self.left -= 1
            x = self.name("n")
            return Restrict(x, self.ann(), self.proc(scope + [x], depth))
        if r < 0.5:
            return par(self.proc(scope, depth - 1), self.proc(scope, depth - 1))
        if r < 0.6:
            return NIL
        s = self.seq(scope, depth)
        if self.repl and self.rng.random() < 0.15:
            return Repl(s)
        return s

    def seq(self, scope: list, depth: int) -> Choice:
        rng = self.rng
        k = 2 if rng.random() < 0.1 else 1
        branches = []
        for _ in range(k):
            r = rng.random()
            if self.tau and r < 0.1:
                branches.append((Tau(), self.proc(scope, depth - 1)))
            elif r < 0.55:
                x = self.name("x")
                branches.append((Input(rng.choice(scope), x), self.proc(scope + [x], depth - 1)))
            else:
                branches.append((Output(rng.choice(scope), rng.choice(scope)),
                                 self.proc(scope, depth - 1)))
        return Choice(tuple(branches))


def random_annotated(rng: random.Random, T: BaseForest, max_restrictions: int = 6,
                     depth: int = 3, tau: bool = True, repl: bool = True) -> Term:
    """A closed term whose restrictions carry base types drawn from T."""
    g = _Gen(rng, max_restrictions, sorted(T.nodes), True, tau, repl)
    n_top = rng.randint(1, max(1, min(3, max_restrictions)))
    g.left -= n_top
    top = [g.name("a") for _ in range(n_top)]
    body = par(*(g.proc(top, depth) for _ in range(rng.randint(1, 3))))
    for x in reversed(top):
        body = Restrict(x, g.ann(), body)
    return body


def random_process(rng: random.Random, max_restrictions: int = 4, depth: int = 3,
                   tau: bool = False, repl: bool = True) -> Term:
    """A closed, unannotated term."""
    g = _Gen(rng, max_restrictions, [], False, tau, repl)
    n_top = rng.randint(1, 3)
    g.left -= n_top
    top = [g.name("a") for _ in range(n_top)]
    body = par(*(g.proc(top, depth) for _ in range(rng.randint(2, 3))))
    for x in reversed(top):
        body = Restrict(x, None, body)
    return body


def random_typable(rng: random.Random, tries: int = 500, tau: bool = False,
                   min_redexes: int = 1, **kw):
    """(annotated normal form, forest) of a random typably hierarchical term with some redex."""
    from .semantics import redexes
    from .typesys import infer

    for _ in range(tries):
        t = random_process(rng, tau=tau, **kw)
        res = infer(t)
        if res.typable and not res.env and len(redexes(res.term)) >= min_redexes:
            return res.term, res.forest
    raise RuntimeError("no typable term found within the budget")


def random_pair(rng: random.Random, n_bases: Optional[int] = None, **kw):
    T = random_forest(rng, n_bases or rng.randint(1, 4))
    return random_annotated(rng, T, **kw), T


def random_congruent(rng: random.Random, t: Term) -> Term:
    """A term structurally congruent to t, built from random congruence steps.

    Steps: alpha-renaming, reordering and rebracketing of parallel components,
    padding with 0, scope extrusion, swapping restrictions, permuting sum
    branches and unfolding replication once.
    """
    return _cong(rng, freshen_binders(t))


def _cong(rng: random.Random, t: Term) -> Term:
    if isinstance(t, Nil):
        return Par(NIL, NIL) if rng.random() < 0.2 else t
    if isinstance(t, Repl):
        body = Repl(_cong_choice(rng, t.choice))
        if rng.random() < 0.15:
            return Par(freshen_binders(Choice(body.choice.branches)), body)
        return body
    if isinstance(t, Choice):
        return _cong_choice(rng, t)
    if isinstance(t, Restrict):
        body = _cong(rng, t.body)
        if isinstance(body, Restrict) and rng.random() < 0.5:
            return Restrict(body.name, body.type, Restrict(t.name, t.type, body.body))
        if isinstance(body, Par) and rng.random() < 0.5:
            # push the restriction into the only component that uses the name
            comps = parallel_components(body)
            users = [i for i, c in enumerate(comps) if t.name in free_names(c)]
            if len(users) == 1:
                i = users[0]
                comps[i] = Restrict(t.name, t.type, comps[i])
                return _rebracket(rng, comps)
        return Restrict(t.name, t.type, body)
    comps = [_cong(rng, c) for c in parallel_components(t)]
    out = []
    pulled = []
    for c in comps:
        while isinstance(c, Restrict) and rng.random() < 0.4:
            pulled.append((c.name, c.type))  # names are unique after freshening
            c = c.body
        out.append(c)
    if rng.random() < 0.2:
        out.append(NIL)
    rng.shuffle(out)
    body = _rebracket(rng, out)
    for x, ty in reversed(pulled):
        body = Restrict(x, ty, body)
    return body


def _cong_choice(rng: random.Random, c: Choice) -> Choice:
    branches = [(pi, _cong(rng, k)) for pi, k in c.branches]
    rng.shuffle(branches)
    return Choice(tuple(branches))


def _rebracket(rng: random.Random, comps: list) -> Term:
    if len(comps) == 1:
        return comps[0]
    k = rng.randint(1, len(comps) - 1)
    return Par(_rebracket(rng, comps[:k]), _rebracket(rng, comps[k:]))
