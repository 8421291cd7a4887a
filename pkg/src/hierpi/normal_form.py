"""Normal forms, canonical keys and structural congruence at desk scale."""

from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache
from typing import Optional

from .syntax import (
    NIL, ChanType, Choice, Input, Name, Nil, Output, Par, Repl, Restrict, Tau, Term,
    fresh, prefix_names,
)

PERMUTATION_BOUND = 10_000


class SizeBoundExceeded(Exception):
    pass


@dataclass(frozen=True)
class Seq:
    replicated: bool
    branches: tuple  # tuple[tuple[Prefix, NF], ...], non-empty


@dataclass(frozen=True)
class NF:
    restrictions: tuple = ()  # tuple[tuple[Name, ChanType|None], ...]
    actives: tuple = ()  # tuple[Seq, ...]

    @property
    def names(self) -> tuple:
        return tuple(x for x, _ in self.restrictions)

    def type_of(self, x: Name) -> Optional[ChanType]:
        for y, ty in self.restrictions:
            if y == x:
                return ty
        raise KeyError(x)

    def is_zero(self) -> bool:
        return not self.restrictions and not self.actives


ZERO = NF()


# conversion

def normalize(t: Term) -> NF:
    if isinstance(t, Nil):
        return ZERO
    if isinstance(t, Restrict):
        body = normalize(t.body)
        if not any(t.name in seq_fn(a) for a in body.actives):
            return body  # new x.P == P when x is not free in P
        return NF(((t.name, t.type),) + body.restrictions, body.actives)
    if isinstance(t, Par):
        p, q = normalize(t.left), normalize(t.right)
        return NF(p.restrictions + q.restrictions, p.actives + q.actives)
    if isinstance(t, Repl):
        s = _norm_choice(t.choice)
        if s is None:
            return ZERO
        return NF((), (Seq(True, s.branches),))
    s = _norm_choice(t)
    return ZERO if s is None else NF((), (s,))


def _norm_choice(c: Choice) -> Optional[Seq]:
    if not c.branches:
        return None
    return Seq(False, tuple((pi, normalize(cont)) for pi, cont in c.branches))


def seq_to_term(s: Seq) -> Term:
    ch = Choice(tuple((pi, to_term(n)) for pi, n in s.branches))
    return Repl(ch) if s.replicated else ch


def to_term(n: NF) -> Term:
    body: Term = NIL
    for a in reversed(n.actives):
        t = seq_to_term(a)
        body = t if isinstance(body, Nil) else Par(t, body)
    for x, ty in reversed(n.restrictions):
        body = Restrict(x, ty, body)
    return body


def is_normal(t: Term) -> bool:
    """True when t has the shape new X.(A1|..|Am) with normal continuations."""
    u = t
    while isinstance(u, Restrict):
        u = u.body
    stack = [u]
    while stack:
        v = stack.pop()
        if isinstance(v, Par):
            stack += [v.left, v.right]
        elif isinstance(v, Nil):
            continue
        elif isinstance(v, Restrict):
            return False
        else:
            ch = v.choice if isinstance(v, Repl) else v
            if not ch.branches:
                return False
            if not all(is_normal(c) for _, c in ch.branches):
                return False
    return True


# name sets on normal forms

@lru_cache(maxsize=200_000)
def seq_fn(s: Seq) -> frozenset:
    out = set()
    for pi, cont in s.branches:
        out.update(prefix_names(pi))
        fc = nf_fn(cont)
        if isinstance(pi, Input):
            fc = fc - {pi.binder}
        out |= fc
    return frozenset(out)


@lru_cache(maxsize=200_000)
def nf_fn(n: NF) -> frozenset:
    out = set()
    for a in n.actives:
        out |= seq_fn(a)
    return frozenset(out - set(n.names))


def nf_bn(n: NF) -> frozenset:
    out = set(n.names)
    for a in n.actives:
        for pi, cont in a.branches:
            if isinstance(pi, Input):
                out.add(pi.binder)
            out |= nf_bn(cont)
    return frozenset(out)


def nf_restricted(n: NF) -> dict:
    """Every restriction binder, active or under a prefix, with its annotation."""
    out = dict(n.restrictions)
    for a in n.actives:
        for _, cont in a.branches:
            out.update(nf_restricted(cont))
    return out


# renaming on normal forms

def _rpi(pi, m):
    if isinstance(pi, Input):
        return Input(m.get(pi.chan, pi.chan), m.get(pi.binder, pi.binder))
    if isinstance(pi, Output):
        return Output(m.get(pi.chan, pi.chan), m.get(pi.payload, pi.payload))
    return pi


def nf_rename(n: NF, m: dict) -> NF:
    """Rename all occurrences (binding and free) following m."""
    if not m:
        return n
    return NF(tuple((m.get(x, x), ty) for x, ty in n.restrictions),
              tuple(seq_rename(a, m) for a in n.actives))


def seq_rename(s: Seq, m: dict) -> Seq:
    return Seq(s.replicated, tuple((_rpi(pi, m), nf_rename(c, m)) for pi, c in s.branches))


def nf_subst(n: NF, src: Name, dst: Name) -> NF:
    """Free-name substitution; relies on name uniqueness so binders never clash."""
    if src == dst or src in n.names:
        return n
    return NF(n.restrictions, tuple(seq_subst(a, src, dst) for a in n.actives))


def seq_subst(s: Seq, src: Name, dst: Name) -> Seq:
    branches = []
    for pi, cont in s.branches:
        if isinstance(pi, Input):
            npi = Input(dst if pi.chan == src else pi.chan, pi.binder)
            branches.append((npi, cont if pi.binder == src else nf_subst(cont, src, dst)))
        else:
            branches.append((_rpi(pi, {src: dst}), nf_subst(cont, src, dst)))
    return Seq(s.replicated, tuple(branches))


def _collect_binders(n: NF, out: list):
    out.extend(n.names)
    for a in n.actives:
        _collect_seq_binders(a, out)


def _collect_seq_binders(s: Seq, out: list):
    for pi, cont in s.branches:
        if isinstance(pi, Input):
            out.append(pi.binder)
        _collect_binders(cont, out)


def seq_freshen(s: Seq) -> Seq:
    """Copy of s whose binders all get fresh unique-ids."""
    bs: list = []
    _collect_seq_binders(s, bs)
    return seq_rename(s, {b: fresh(b) for b in bs}) if bs else s


def nf_freshen(n: NF) -> NF:
    bs: list = []
    _collect_binders(n, bs)
    return nf_rename(n, {b: fresh(b) for b in bs}) if bs else n


def nf_name_uniq(n: NF) -> bool:
    bs: list = []
    _collect_binders(n, bs)
    return len(bs) == len(set(bs)) and not (set(bs) & nf_fn(n))


# replication-normal presentation

def _rebuild(n: NF, actives) -> NF:
    used = set()
    for a in actives:
        used |= seq_fn(a)
    return NF(tuple((x, ty) for x, ty in n.restrictions if x in used), tuple(actives))


def absorb(n: NF) -> NF:
    """Drop unguarded copies of replicated bodies and unused restrictions, recursively."""
    acts = []
    for a in n.actives:
        acts.append(Seq(a.replicated, tuple((pi, absorb(c)) for pi, c in a.branches)))
    bodies = {}
    for a in acts:
        if a.replicated:
            bodies.setdefault(exact_key(Seq(False, a.branches)), a)
    kept = [a for a in acts if a.replicated or exact_key(a) not in bodies]
    return _rebuild(n, kept)


def exact_key(s: Seq):
    """alpha-invariant key with every free name kept by identity."""
    return _seq_key(s, _Env({}, 0))


# canonical keys

class _Env:
    __slots__ = ("labels", "depth")

    def __init__(self, labels: dict, depth: int):
        self.labels = labels
        self.depth = depth

    def label(self, x: Name):
        lab = self.labels.get(x)
        if lab is None:
            return ("free", x.ident, x.uid)
        return lab

    def extend(self, extra: dict) -> "_Env":
        return _Env({**self.labels, **extra}, self.depth + 1)


class _Budget:
    def __init__(self, limit=PERMUTATION_BOUND):
        self.left = limit

    def spend(self, k=1):
        self.left -= k
        if self.left < 0:
            raise SizeBoundExceeded("canonicalisation exceeded the permutation bound")


_budget = [None]


def _type_key(ty):
    return "" if ty is None else str(ty)


def _prefix_key(pi, env: _Env):
    if isinstance(pi, Output):
        return ("out", env.label(pi.chan), env.label(pi.payload))
    if isinstance(pi, Input):
        return ("in", env.label(pi.chan))
    return ("tau",)


def _seq_key(s: Seq, env: _Env):
    keys = []
    for pi, cont in s.branches:
        if isinstance(pi, Input):
            inner = env.extend({pi.binder: ("bound", env.depth)})
        else:
            inner = env.extend({})
        keys.append((_prefix_key(pi, env), _nf_key(cont, inner)))
    keys.sort()
    return ("!" if s.replicated else "s", tuple(keys))


def _nf_key(n: NF, env: _Env):
    if not n.restrictions:
        return ("nf", "flat", tuple(sorted(_seq_key(a, env) for a in n.actives)))
    types = dict(n.restrictions)
    return ("nf",) + _component_key(set(n.names), list(n.actives), types, env, 0)


def _refine(xs, actives, types, env: _Env, fixed: dict):
    """Colour refinement of the restricted names xs by their incidence in actives."""
    # colours are always int tuples so that nested refinements compare cleanly
    tkeys = {k: i for i, k in enumerate(sorted({_type_key(types[x]) for x in xs}))}
    colour = {x: (tkeys[_type_key(types[x])],) for x in xs}
    occurs = {x: [a for a in actives if x in seq_fn(a)] for x in xs}
    nclasses = len(set(colour.values()))
    while True:
        new = {}
        for x in xs:
            sig = []
            for a in occurs[x]:
                labels = dict(fixed)
                for y in seq_fn(a):
                    if y in colour:
                        labels[y] = ("col", colour[y])
                labels[x] = ("self",)
                sig.append(_seq_key(a, _Env({**env.labels, **labels}, env.depth)))
            new[x] = (colour[x], tuple(sorted(sig)))
        # compress
        table = {c: i for i, c in enumerate(sorted(set(new.values())))}
        new = {x: (table[new[x]],) for x in xs}
        k = len(table)
        colour = new
        if k == nclasses:
            return colour
        nclasses = k


def _components(xs, actives):
    """Split actives into groups linked by the restricted names xs."""
    parent = list(range(len(actives)))

    def find(i):
        while parent[i] != i:
            parent[i] = parent[parent[i]]
            i = parent[i]
        return i

    owner = {}
    lonely = []
    for i, a in enumerate(actives):
        for y in seq_fn(a) & xs:
            if y in owner:
                parent[find(i)] = find(owner[y])
            else:
                owner[y] = i
    groups: dict = {}
    for i in range(len(actives)):
        groups.setdefault(find(i), []).append(i)
    out = []
    for idxs in groups.values():
        acts = [actives[i] for i in idxs]
        names = set()
        for a in acts:
            names |= seq_fn(a) & xs
        out.append((names, acts))
    return out


def _component_key(xs: set, actives: list, types: dict, env: _Env, level: int):
    """Canonical key of new xs.(actives); xs unused by actives are garbage and ignored."""
    used = set()
    for a in actives:
        used |= seq_fn(a)
    xs = xs & used
    if not xs:
        return ("flat", tuple(sorted(_seq_key(a, env) for a in actives)))
    comps = _components(xs, actives)
    if len(comps) > 1:
        keys = sorted(_single_key(names, acts, types, env, level) for names, acts in comps)
        return ("split", tuple(keys))
    names, acts = comps[0]
    return _single_key(names, acts, types, env, level)


def _single_key(xs: set, actives: list, types: dict, env: _Env, level: int):
    if not xs:
        return ("flat", tuple(sorted(_seq_key(a, env) for a in actives)))
    budget = _budget[0]
    colour = _refine(xs, actives, types, env, {})
    classes: dict = {}
    for x in xs:
        classes.setdefault(colour[x], []).append(x)
    order = sorted(classes)
    singles = [classes[c][0] for c in order if len(classes[c]) == 1]
    if singles:
        choices = [singles]
    else:
        smallest = min(order, key=lambda c: (len(classes[c]), c))
        choices = [[x] for x in classes[smallest]]
    best = None
    for fixed in choices:
        if budget is not None:
            budget.spend()
        labels = {x: ("r", env.depth, level, i) for i, x in enumerate(fixed)}
        head = tuple((_type_key(types[x]), colour[x]) for x in fixed)
        sub = _component_key(xs - set(fixed), actives, types,
                             _Env({**env.labels, **labels}, env.depth), level + 1)
        key = ("fix", head, sub)
        if best is None or key < best:
            best = key
    return best


def canonical_nf(n: NF, limit: int = PERMUTATION_BOUND, absorb_copies: bool = True):
    """With absorb_copies=False, M | !M and !M get different keys."""
    prev = _budget[0]
    _budget[0] = _Budget(limit)
    try:
        return _nf_key(absorb(n) if absorb_copies else n, _Env({}, 0))
    finally:
        _budget[0] = prev


def canonical(t, limit: int = PERMUTATION_BOUND):
    """Key equal for congruent terms (replication copies absorbed), within the bound."""
    n = t if isinstance(t, NF) else normalize(t)
    return canonical_nf(n, limit)


def congruent(p, q, limit: int = PERMUTATION_BOUND) -> bool:
    return canonical(p, limit) == canonical(q, limit)
