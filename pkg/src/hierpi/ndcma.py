"""Nested data class memory automata, the two encodings, and bounded bisimulation."""

from __future__ import annotations

import json
import logging
import random
from collections import Counter
from dataclasses import dataclass, field
from typing import Callable, Hashable, Iterable, Optional, Union

from .basetypes import BaseForest
from .forest import NameLabel, SeqLabel
from .hierarchy import phi, t_shaped
from .normal_form import (
    NF, Seq, canonical_nf, exact_key, normalize, nf_fn, seq_fn, seq_subst, seq_to_term,
)
from .semantics import chi, chi_template, deriv_closure, name_types, reduce, redexes
from .syntax import (
    ChanType, Choice, Input, Name, Output, Tau, Term, print_term, global_name, NIL, par,
)

log = logging.getLogger(__name__)

GARBAGE = "q†"
READY = "ready"
SEND = "send"
REC = "rec"
SPAWN = "spawn"


class EncodingError(Exception):
    pass


class InteriorBudgetExceeded(Exception):
    pass


# automata

@dataclass(frozen=True)
class Concrete:
    """(q, q1..qi, q', q'1..q'i) on a level-i value; None in path stands for the fresh label."""
    level: int
    source: str
    path: tuple
    target: str
    new_path: tuple

    def __post_init__(self):
        if len(self.path) != self.level or len(self.new_path) != self.level:
            raise ValueError("concrete transition paths must have the stated level")
        if any(q is None for q in self.new_path):
            raise ValueError("a transition cannot write the fresh label")

    def states(self) -> set:
        return {self.source, self.target, *self.new_path} | {q for q in self.path if q is not None}


@dataclass(frozen=True)
class Pattern:
    """<q, l1..ln | q', l'1..l'n> and, with alloc, <q, l1..ln | q', l'1..l'n (+) l>."""
    source: str
    labels: tuple
    target: str
    new_labels: tuple
    alloc: Optional[str] = None

    def __post_init__(self):
        if len(self.labels) != len(self.new_labels):
            raise ValueError("pattern sides must have equal length")

    def states(self) -> set:
        out = {self.source, self.target, *self.labels, *self.new_labels}
        if self.alloc is not None:
            out.add(self.alloc)
        return out

    def __str__(self):
        tail = f" ⊕ {self.alloc}" if self.alloc else ""
        return (f"<{self.source}, {' '.join(self.labels)} | {self.target}, "
                f"{' '.join(self.new_labels)}{tail}>")


Transition = Union[Concrete, Pattern]


@dataclass(frozen=True)
class DataStore:
    """Allocated part of the nested dataset: parent of each value (None on level 1)."""
    parent: tuple = ()

    @property
    def next_id(self) -> int:
        return len(self.parent)

    def level(self, v: int) -> int:
        n = 1
        while self.parent[v] is not None:
            v = self.parent[v]
            n += 1
        return n

    def path(self, v: int) -> list:
        out = []
        while v is not None:
            out.append(v)
            v = self.parent[v]
        return out[::-1]


@dataclass(frozen=True)
class ClassMemoryFn:
    """Labels of allocated values, aligned with the store; unallocated values are fresh."""
    labels: tuple = ()

    def get(self, v: int) -> Optional[str]:
        return self.labels[v] if v < len(self.labels) else None

    def support(self) -> list:
        return [v for v, q in enumerate(self.labels) if q is not None]


@dataclass(frozen=True)
class Config:
    state: str
    memory: ClassMemoryFn = ClassMemoryFn()
    store: DataStore = DataStore()

    def children(self) -> dict:
        kids: dict = {}
        for v, p in enumerate(self.store.parent):
            kids.setdefault(p, []).append(v)
        return kids

    def describe(self, live: Optional[set] = None) -> str:
        kids = self.children()

        def show(v):
            cs = [show(c) for c in kids.get(v, []) if live is None or c in live]
            lab = self.memory.labels[v]
            return lab + (f"[{', '.join(cs)}]" if cs else "")

        roots = [show(r) for r in kids.get(None, []) if live is None or r in live]
        return f"({self.state}, {{{', '.join(roots)}}})"


@dataclass
class Automaton:
    states: frozenset
    level: int
    transitions: tuple
    initial: str
    initial_config: Config = None
    garbage: Optional[str] = None
    scopes: frozenset = frozenset()  # labels inert once nothing live sits below them
    ready: Optional[str] = None
    meta: dict = field(default_factory=dict)

    def __post_init__(self):
        if self.initial_config is None:
            self.initial_config = Config(self.initial)
        used = {self.initial}
        for tr in self.transitions:
            used |= tr.states()
        for q in self.initial_config.memory.labels:
            if q is not None:
                used.add(q)
        missing = used - set(self.states)
        if missing:
            raise ValueError("transitions use undeclared states: " + ", ".join(sorted(missing)))


def _apply(c: Config, target: str, updates: dict, new_values: list) -> Config:
    labels = list(c.memory.labels)
    parents = list(c.store.parent)
    for v, q in updates.items():
        labels[v] = q
    for p, q in new_values:
        parents.append(p)
        labels.append(q)
    return Config(target, ClassMemoryFn(tuple(labels)), DataStore(tuple(parents)))


def _subsequences(path_labels: list, want: tuple, upto: int):
    """Index tuples i1<..<in < upto with path_labels[i_j] == want[j]."""
    def go(j, start, acc):
        if j == len(want):
            yield tuple(acc)
            return
        for i in range(start, upto):
            if path_labels[i] == want[j]:
                yield from go(j + 1, i + 1, acc + [i])

    yield from go(0, 0, [])


def _fire(a: Automaton, c: Config, tr: Transition) -> list:
    out = []
    labels = c.memory.labels
    if isinstance(tr, Concrete):
        j = 0
        while j < tr.level and tr.path[j] is not None:
            j += 1
        if any(q is not None for q in tr.path[j:]):
            return []  # a labelled value never sits below a fresh one
        if j == 0:
            new = []
            chain_parent = None
            base = c.store.next_id
            for k in range(tr.level):
                new.append((chain_parent, tr.new_path[k]))
                chain_parent = base + k
            out.append(_apply(c, tr.target, {}, new))
            return out
        for v in range(len(labels)):
            if labels[v] != tr.path[j - 1]:
                continue
            path = c.store.path(v)
            if len(path) != j or any(labels[u] != q for u, q in zip(path, tr.path)):
                continue
            upd = {u: q for u, q in zip(path, tr.new_path)}
            new = []
            chain_parent = v
            base = c.store.next_id
            for k in range(j, tr.level):
                new.append((chain_parent, tr.new_path[k]))
                chain_parent = base + (k - j)
            out.append(_apply(c, tr.target, upd, new))
        return out
    n = len(tr.labels)
    if n == 0:
        if tr.alloc is not None:
            return [_apply(c, tr.target, {}, [(None, tr.alloc)])]
        # literal expansion needs some labelled value to carry the tuple
        return [_apply(c, tr.target, {}, [])] if c.memory.support() else []
    for v in range(len(labels)):
        if labels[v] != tr.labels[-1]:
            continue
        path = c.store.path(v)
        if tr.alloc is not None and len(path) >= a.level:
            continue
        plabels = [labels[u] for u in path]
        for idx in _subsequences(plabels, tr.labels[:-1], len(path) - 1):
            chosen = [path[i] for i in idx] + [v]
            upd = dict(zip(chosen, tr.new_labels))
            new = [(v, tr.alloc)] if tr.alloc is not None else []
            out.append(_apply(c, tr.target, upd, new))
    return out


def live_values(a: Automaton, c: Config) -> set:
    """Values that are neither garbage nor scopes with nothing live below."""
    labels = c.memory.labels
    kids = c.children()
    live = set()

    def visit(v) -> bool:
        alive_kids = [visit(k) for k in kids.get(v, [])]
        lab = labels[v]
        if lab is None or lab == a.garbage:
            ok = False
        elif lab in a.scopes:
            ok = any(alive_kids)
        else:
            ok = True
        if ok:
            live.add(v)
        return ok

    for r in kids.get(None, []):
        visit(r)
    return live


def config_key(a: Automaton, c: Config):
    """Isomorphism-invariant key of a configuration, modulo garbage."""
    live = live_values(a, c)
    kids = c.children()
    labels = c.memory.labels

    def k(v):
        return (labels[v], tuple(sorted(k(u) for u in kids.get(v, []) if u in live)))

    return (c.state, tuple(sorted(k(r) for r in kids.get(None, []) if r in live)))


def step(a: Automaton, c: Config) -> list:
    """All successors over every transition and witness; fresh values are allocated in order,
    so successors differing only in the choice of fresh value coincide."""
    seen = {}
    for tr in a.transitions:
        if tr.source != c.state:
            continue
        for c2 in _fire(a, c, tr):
            seen.setdefault(c2, None)
    return list(seen)


def _ready_state(a: Automaton) -> str:
    return a.ready or a.initial


def ready_rounds(a: Automaton, c: Config, budget: int = 100_000) -> list:
    """(f', interior control states) for every ready-free run from c back to ready."""
    ready = _ready_state(a)
    out = []
    seen_end = set()
    stack = [(c, ())]
    visited = set()
    spent = 0
    first = True
    while stack:
        cur, trail = stack.pop()
        for nxt in _step_classes(a, cur):
            spent += 1
            if spent > budget:
                raise InteriorBudgetExceeded(f"more than {budget} interior steps")
            if nxt.state == ready:
                k = config_key(a, nxt)
                if k not in seen_end:
                    seen_end.add(k)
                    out.append((nxt, trail))
                continue
            k = (config_key(a, nxt), trail if a.meta.get("track_interiors") else ())
            if k in visited:
                continue
            visited.add(k)
            stack.append((nxt, trail + (nxt.state,)))
    return out


def ready_step(a: Automaton, c: Config, budget: int = 100_000) -> list:
    return [f for f, _ in ready_rounds(a, c, budget)]


# pi -> NDCMA

def _chi_label(base: str, mark: str = "") -> str:
    return f"χ_{base}" + (f"^{mark}" if mark else "")


class _Encoder:
    def __init__(self, T: BaseForest, types: dict):
        self.T = T
        self.types = types
        self.trans: list = []
        self.states = {READY, SEND, REC, SPAWN, GARBAGE}
        self.deriv: dict = {}  # exact key -> state name
        self.templates: dict = {}  # state name -> Seq
        self.todo: list = []
        self.counter = 0

    def emit(self, tr: Transition):
        self.trans.append(tr)
        self.states |= tr.states()

    def fresh_state(self, site: str) -> str:
        self.counter += 1
        return f"{site}#{self.counter}"

    def dstate(self, s: Seq) -> str:
        k = exact_key(s)
        name = self.deriv.get(k)
        if name is None:
            name = f"D{len(self.deriv)}"
            self.deriv[k] = name
            self.templates[name] = s
            self.states.add(name)
            self.todo.append(name)
        return name

    def base_of(self, x: Name) -> str:
        if x.ident.startswith("χ_") and chi(x.ident[2:]) == x:
            return x.ident[2:]
        ty = self.types.get(x)
        if ty is None:
            raise EncodingError(f"no type for {x.ident}")
        return ty.base

    # label trees: ("name", base, children) or ("leaf", state)

    def label_trees(self, cont: NF, subst: Optional[tuple] = None) -> list:
        """Trees of Phi'(cont) with their context chi bases; subst = (x, chi name)."""
        f = phi(cont, self.T)
        kids = {}
        for i, p in enumerate(f.parent):
            kids.setdefault(p, []).append(i)
        out = []

        def build(i, bound: set):
            lab = f.labels[i]
            if isinstance(lab, NameLabel):
                inner = bound | {lab.name}
                children, ctx, has_x = [], set(), False
                for c in kids.get(i, []):
                    t, cx, hx = build(c, inner)
                    children.append(t)
                    ctx |= cx
                    has_x |= hx
                return ("name", lab.type.base, tuple(children)), ctx, has_x
            seq = lab.seq
            has_x = False
            if subst is not None and subst[0] in seq_fn(seq):
                has_x = True
                seq = seq_subst(seq, subst[0], subst[1])
            ctx = {self.base_of(y) for y in seq_fn(seq) if y not in bound}
            tmpl = chi_template(seq, self.types)
            return ("leaf", self.dstate(tmpl)), ctx, has_x

        for r in kids.get(None, []):
            out.append(build(r, set()))
        return out

    def deepest(self, bases: set) -> Optional[str]:
        if not bases:
            return None
        order = sorted(bases, key=lambda b: len(self.T.ancestors(b)))
        for lo, hi in zip(order, order[1:]):
            if not self.T.lt(lo, hi):
                raise EncodingError(f"context names {lo} and {hi} are not nested")
        return order[-1]

    def setup(self, s: str, anchor: Optional[str], final: Optional[str], trees, site: str) -> str:
        for tree in trees:
            if tree[0] == "leaf":
                s2 = self.fresh_state(site)
                lab = (anchor,) if anchor else ()
                self.emit(Pattern(s, lab, s2, lab, tree[1]))
                s = s2
            else:
                _, base, children = tree
                mark = _chi_label(base, "set")
                s2 = self.fresh_state(site)
                lab = (anchor,) if anchor else ()
                self.emit(Pattern(s, lab, s2, lab, mark))
                s = self.setup(s2, mark, _chi_label(base), children, site)
        if anchor is not None:
            s2 = self.fresh_state(site)
            self.emit(Pattern(s, (anchor,), s2, (final,)))
            s = s2
        return s

    def spawn(self, s: str, anchor: str, trees, site: str) -> str:
        for tree, ctx, _ in trees:
            r = self.deepest(ctx)
            if r is None:
                s = self.setup(s, None, None, [tree], site)
                continue
            s2 = self.fresh_state(site)
            sp = _chi_label(r, "sp")
            self.emit(Pattern(s, (_chi_label(r), anchor), s2, (sp, anchor)))
            s = self.setup(s2, sp, _chi_label(r), [tree], site)
        return s

    def react(self, name: str):
        d = self.templates[name]
        after = name if d.replicated else GARBAGE
        for k, (pi, cont) in enumerate(d.branches):
            site = f"{name}.{k}"
            if isinstance(pi, Tau):
                raise EncodingError("tau prefixes are not supported by the encoding")
            ta = self.base_of(pi.chan)
            if isinstance(pi, Output):
                tb = self.base_of(pi.payload)
                wait = f"{name}^wait{k}"
                if ta == tb:
                    # only a name sent over itself: two names of one base never share a path
                    pre = (_chi_label(ta), name)
                    post = (_chi_label(ta, "syn"), wait)
                elif self.T.lt(ta, tb):
                    pre = (_chi_label(ta), _chi_label(tb), name)
                    post = (_chi_label(ta, "syn"), _chi_label(tb, "msg"), wait)
                elif self.T.lt(tb, ta):
                    pre = (_chi_label(tb), _chi_label(ta), name)
                    post = (_chi_label(tb, "msg"), _chi_label(ta, "syn"), wait)
                else:
                    continue  # channel and message can never share a path
                self.emit(Pattern(READY, pre, SEND, post))
                s = self.fresh_state("Spawn:" + site)
                self.emit(Pattern(SPAWN, (wait,), s, (wait,)))
                s = self.spawn(s, wait, self.label_trees(cont), "Spawn:" + site)
                self.emit(Pattern(s, (wait,), READY, (after,)))
            else:
                # a replicated copy may receive from another copy of the same sum,
                # which is marked as the waiting sender: it then returns to that mark
                roles = [(name, f"{name}^rec{k}", after)]
                if d.replicated:
                    roles += [(f"{name}^wait{j}", f"{name}^wait{j}rec{k}", f"{name}^wait{j}")
                              for j, (pj, _) in enumerate(d.branches) if isinstance(pj, Output)]
                for src, recm, final in roles:
                    self.receive(pi, cont, site, src, recm, final)

    def receive(self, pi, cont: NF, site: str, name: str, recm: str, after: str):
        ta = self.base_of(pi.chan)
        x = pi.binder
        if x not in self.types:
            if x in nf_fn(cont):
                raise EncodingError(f"no type for binder {x.ident}")
            # the message is ignored: only the channel takes part
            self.emit(Pattern(SEND, (_chi_label(ta, "syn"), name),
                              REC, (_chi_label(ta), recm)))
            s = self.fresh_state("Spawn:" + site)
            self.emit(Pattern(REC, (recm,), s, (recm,)))
            s = self.spawn(s, recm, self.label_trees(cont), "Spawn:" + site)
            self.emit(Pattern(s, (recm,), SPAWN, (after,)))
            return
        tx = self.types[x].base
        trees = self.label_trees(cont, (x, chi(tx)))
        if self.T.lt(tx, ta):
            self.emit(Pattern(SEND, (_chi_label(tx, "msg"), _chi_label(ta, "syn"), name),
                              REC, (_chi_label(tx), _chi_label(ta), recm)))
            s = self.fresh_state("Spawn:" + site)
            self.emit(Pattern(REC, (recm,), s, (recm,)))
            s = self.spawn(s, recm, trees, "Spawn:" + site)
        elif self.T.lt(ta, tx):
            self.emit(Pattern(SEND, (_chi_label(ta, "syn"), name),
                              REC, (_chi_label(ta), recm)))
            s = self.fresh_state("Setup:" + site)
            self.emit(Pattern(REC, (recm,), s, (recm,)))
            mig = [t for t, _, hx in trees if hx]
            nmig = [tr for tr in trees if not tr[2]]
            s = self.setup(s, _chi_label(tx, "msg"), _chi_label(tx), mig, "Setup:" + site)
            s = self.spawn(s, recm, nmig, "Spawn:" + site)
        else:
            return
        self.emit(Pattern(s, (recm,), SPAWN, (after,)))


def _shape_certified(p: NF, T: BaseForest, max_states: int) -> bool:
    """Finite reachable set, every member T-shaped."""
    from .semantics import reach

    g = reach(p, max_states)
    if g.truncated:
        return False
    try:
        return all(t_shaped(q, T) for q in g.states.values())
    except ValueError:
        return False


def encode_pi(t, T: BaseForest, check: bool = True, shape_budget: int = 2000) -> Automaton:
    """Automaton whose ready rounds simulate the reductions of a closed typably hierarchical term.

    Terms the type system rejects are still accepted when their reachable set is
    finite and T-shaped throughout, which is all the encoding relies on.
    """
    from .typesys import typably_hierarchical

    p = t if isinstance(t, NF) else normalize(t)
    if nf_fn(p):
        raise EncodingError("the term is not closed")
    if _has_tau(p):
        raise EncodingError("tau prefixes are not supported by the encoding")
    if check and not typably_hierarchical(p, T, {}):
        if not _shape_certified(p, T, shape_budget):
            raise EncodingError("the term is not typably hierarchical over the given forest")
        log.info("untypable term accepted: finite reachable set, all T-shaped")
    types = name_types(p)
    enc = _Encoder(T, types)
    for d in sorted(deriv_closure(p, T), key=lambda s: print_term(seq_to_term(s))):
        enc.dstate(d)
    done = set()
    while enc.todo:
        name = enc.todo.pop(0)
        if name not in done:
            done.add(name)
            enc.react(name)
    scopes = set()
    for b in T.nodes:
        enc.states.add(_chi_label(b))
        scopes.add(_chi_label(b))
    level = T.depth_bound() + 1
    labels, parents = [], []
    f = phi(p, T)
    index = {}
    for i in _topo_order(f):
        lab = f.labels[i]
        parents.append(None if f.parent[i] is None else index[f.parent[i]])
        index[i] = len(labels)
        if isinstance(lab, NameLabel):
            labels.append(_chi_label(lab.type.base))
        else:
            labels.append(enc.dstate(chi_template(lab.seq, types)))
    while enc.todo:  # leaves of the initial forest are in the closure already
        name = enc.todo.pop(0)
        if name not in done:
            done.add(name)
            enc.react(name)
    f0 = Config(READY, ClassMemoryFn(tuple(labels)), DataStore(tuple(parents)))
    meta = {"templates": dict(enc.templates), "deriv": dict(enc.deriv), "forest": T, "types": types}
    return Automaton(frozenset(enc.states), level, tuple(enc.trans), READY, f0,
                     GARBAGE, frozenset(scopes), READY, meta)


def _topo_order(f) -> list:
    order, stack = [], [(None, r) for r in reversed(f.roots())]
    kids = {}
    for i, p in enumerate(f.parent):
        kids.setdefault(p, []).append(i)
    stack = list(reversed(kids.get(None, [])))
    while stack:
        i = stack.pop()
        order.append(i)
        stack.extend(reversed(kids.get(i, [])))
    return order


def _has_tau(p: NF) -> bool:
    for a in p.actives:
        for pi, c in a.branches:
            if isinstance(pi, Tau) or _has_tau(c):
                return True
    return False


def sim_check(t, c: Config, T: BaseForest, a: Automaton) -> bool:
    """Whether t ~ c: an injective embedding of Phi'(t) into the memory of c."""
    p = t if isinstance(t, NF) else normalize(t)
    types = dict(p.restrictions)
    f = phi(p, T)
    want = []
    for lab in f.labels:
        if isinstance(lab, NameLabel):
            want.append(_chi_label(lab.type.base))
        else:
            try:
                k = exact_key(chi_template(lab.seq, types))
            except Exception:
                return False
            name = a.meta.get("deriv", {}).get(k)
            if name is None:
                return False
            want.append(name)
    labels = c.memory.labels
    kids_m = c.children()
    scopes = a.scopes
    values = [v for v, q in enumerate(labels) if q is not None and q != a.garbage]
    # clause iv, relaxed for scopes: every other value must be garbage or a scope label
    leafy = [v for v in values if labels[v] not in scopes]
    leaves_f = [i for i, q in enumerate(want) if q not in scopes]
    if Counter(labels[v] for v in leafy) != Counter(want[i] for i in leaves_f):
        return False
    kids_f: dict = {}
    for i, par_ in enumerate(f.parent):
        kids_f.setdefault(par_, []).append(i)
    roots = kids_f.get(None, [])
    name_roots = [r for r in roots if want[r] in scopes]
    by_label: dict = {}
    for v in values:
        by_label.setdefault(labels[v], []).append(v)

    def below(v):
        # dead scopes may sit between a value and the image of a child
        out, stack = [], list(kids_m.get(v, []))
        while stack:
            u = stack.pop()
            out.append(u)
            if labels[u] in scopes:
                stack.extend(kids_m.get(u, []))
        return out

    def embed(n, v, used):
        if v in used or labels[v] != want[n]:
            return
        used = used | {v}
        yield from match_children(kids_f.get(n, []), below(v), used)

    def match_children(ns, vs, used):
        if not ns:
            yield used
            return
        n, rest = ns[0], ns[1:]
        for v in vs:
            for u in embed(n, v, used):
                yield from match_children(rest, vs, u)

    def place(rs, used):
        if not rs:
            yield used
            return
        r, rest = rs[0], rs[1:]
        for v in by_label.get(want[r], []):
            for u in embed(r, v, used):
                yield from place(rest, u)

    # leaf roots can go to any unused value with their label; the counts already agree
    for used in place(name_roots, frozenset()):
        free = Counter(labels[v] for v in leafy if v not in used)
        need = Counter(want[r] for r in roots if want[r] not in scopes)
        if free == need:
            return True
    return False


# NDCMA -> pi

R_NAME = "r"


def _chan_base(level: int, q: str) -> str:
    return f"c{level}_{q}"


class _NdaBuilder:
    def __init__(self, a: Automaton):
        self.a = a
        self.r = global_name(R_NAME)
        self.theta: dict = {j: [] for j in range(a.level + 1)}
        for tr in a.transitions:
            j = 0
            while j < tr.level and tr.path[j] is not None:
                j += 1
            if any(q is not None for q in tr.path[j:]):
                continue  # never enabled
            self.theta[j].append(tr)
        self.states = sorted(a.states)

    def scope(self, level: int) -> dict:
        return {q: Name(f"c{level}_{q}") for q in self.states}

    def ann(self, level: int, q: str) -> ChanType:
        return ChanType(_chan_base(level, q), ChanType(R_NAME))

    def restrict(self, scope: dict, level: int, body: Term) -> Term:
        from .syntax import Restrict
        for q in reversed(self.states):
            body = Restrict(scope[q], self.ann(level, q), body)
        return body

    def out(self, ch: Name) -> Term:
        return Choice(((Output(ch, self.r), NIL),))

    def p_theta(self, j: int, scopes: dict) -> Term:
        from .syntax import Repl
        parts = [Repl(self.a_tr(tr, j, scopes)) for tr in self.theta.get(j, [])]
        return par(*parts)

    def a_tr(self, tr: Concrete, j: int, scopes: dict) -> Choice:
        scopes = dict(scopes)
        for k in range(j + 1, tr.level + 1):
            scopes[k] = self.scope(k)
        outs = [self.out(scopes[0][tr.target])]
        outs += [self.out(scopes[k][tr.new_path[k - 1]]) for k in range(1, tr.level + 1)]
        subs = [self.p_theta(k, scopes) for k in range(j + 1, tr.level + 1)]
        body = par(*outs, *subs)
        for k in range(tr.level, j, -1):
            body = self.restrict(scopes[k], k, body)
        reads = [scopes[0][tr.source]] + [scopes[k][tr.path[k - 1]] for k in range(1, j + 1)]
        for ch in reversed(reads):
            body = Choice(((Input(ch, Name("x")), body),))
        return body

    def forest(self) -> BaseForest:
        chain = [R_NAME] + [_chan_base(i, q) for i in range(self.a.level + 1) for q in self.states]
        return BaseForest.chain(chain)

    def config_term(self, c: Config) -> Term:
        s0 = self.scope(0)
        scopes = {0: s0}
        kids = c.children()
        labels = c.memory.labels

        def value(v, level, scopes):
            sc = dict(scopes)
            sc[level] = self.scope(level)
            body = par(self.p_theta(level, sc), self.out(sc[level][labels[v]]),
                       *[value(u, level + 1, sc) for u in kids.get(v, [])])
            return self.restrict(sc[level], level, body)

        body = par(self.p_theta(0, scopes), self.out(s0[c.state]),
                   *[value(r, 1, scopes) for r in kids.get(None, [])])
        return self.restrict(s0, 0, body)


def encode_nda(a: Automaton) -> tuple:
    """(term, forest, environment) encoding an automaton with concrete transitions."""
    if any(isinstance(tr, Pattern) for tr in a.transitions):
        raise EncodingError("only concrete transitions can be encoded")
    if a.initial_config.memory.support():
        raise EncodingError("only automata with an all-fresh initial memory are supported")
    b = _NdaBuilder(a)
    term = b.config_term(a.initial_config)
    return term, b.forest(), {b.r: ChanType(R_NAME)}


def nda_config_term(a: Automaton, c: Config) -> Term:
    return _NdaBuilder(a).config_term(c)


def observable(p: NF) -> bool:
    """Some active output on a level-0 channel restricted at top level."""
    top = {x for x, ty in p.restrictions if ty is not None and ty.base.startswith("c0_")}
    for s in p.actives:
        for pi, _ in s.branches:
            if isinstance(pi, Output) and pi.chan in top:
                return True
    return False


def z_successors(p: NF, budget: int = 20_000) -> list:
    """Targets of the derived relation: runs to the next observable term."""
    out, seen_end = [], set()
    stack = [p]
    visited = set()
    spent = 0
    while stack:
        cur = stack.pop()
        for r in redexes(cur):
            nxt = reduce(cur, r)
            spent += 1
            if spent > budget:
                raise InteriorBudgetExceeded(f"more than {budget} interior reductions")
            k = canonical_nf(nxt)
            if observable(nxt):
                if k not in seen_end:
                    seen_end.add(k)
                    out.append(nxt)
                continue
            if k not in visited:
                visited.add(k)
                stack.append(nxt)
    return out


def max_outputs_per_channel(p: NF) -> int:
    """Largest number of active components outputting on one bound name."""
    bound = set(p.names)
    counts: Counter = Counter()
    for s in p.actives:
        chans = {pi.chan for pi, _ in s.branches if isinstance(pi, Output)}
        for ch in chans & bound:
            counts[ch] += 1
    return max(counts.values(), default=0)


# bounded bisimulation

@dataclass
class TransitionSystem:
    initial: object
    successors: Callable
    key: Callable
    describe: Callable = str


@dataclass
class BisimResult:
    ok: bool
    rounds: int
    pairs: int = 0
    clause: str = ""
    trace: list = field(default_factory=list)

    def __bool__(self):
        return self.ok


class BisimBudgetExceeded(Exception):
    pass


def _deeper(subs) -> list:
    """Trace of the first answering move that was related but failed later."""
    for r in subs:
        if r is not None and r[0] != "relation":
            return r[1]
    return []


def bounded_bisim(lhs: TransitionSystem, rhs: TransitionSystem, rounds: int,
                  related: Callable, max_pairs: int = 200_000) -> BisimResult:
    """Check the two bisimulation clauses for `rounds` alternations from the initial pair."""
    succ_cache: dict = {}
    rel_cache: dict = {}
    memo: dict = {}
    count = [0]

    def succ(ts, side, s):
        k = (side, ts.key(s))
        if k not in succ_cache:
            succ_cache[k] = ts.successors(s)
        return succ_cache[k]

    def rel(s, t):
        k = (lhs.key(s), rhs.key(t))
        if k not in rel_cache:
            rel_cache[k] = bool(related(s, t))
        return rel_cache[k]

    def check(s, t, k):
        """None on success, else (clause, trace)."""
        mk = (lhs.key(s), rhs.key(t), k)
        if mk in memo:
            return memo[mk]
        count[0] += 1
        if count[0] > max_pairs:
            raise BisimBudgetExceeded(f"more than {max_pairs} pairs")
        res = None
        if not rel(s, t):
            res = ("relation", [("pair", lhs.describe(s), rhs.describe(t))])
        elif k > 0:
            ts_ = succ(rhs, "r", t)
            for s2 in succ(lhs, "l", s):
                subs = [check(s2, t2, k - 1) for t2 in ts_]
                if not any(r is None for r in subs):
                    res = ("A", [("pair", lhs.describe(s), rhs.describe(t)),
                                 ("left move", lhs.describe(s2))] + _deeper(subs))
                    break
            if res is None:
                ss_ = succ(lhs, "l", s)
                for t2 in ts_:
                    subs = [check(s2, t2, k - 1) for s2 in ss_]
                    if not any(r is None for r in subs):
                        res = ("B", [("pair", lhs.describe(s), rhs.describe(t)),
                                     ("right move", rhs.describe(t2))] + _deeper(subs))
                        break
        memo[mk] = res
        return res

    res = check(lhs.initial, rhs.initial, rounds)
    if res is None:
        return BisimResult(True, rounds, count[0])
    return BisimResult(False, rounds, count[0], res[0], res[1])


def pi_system(t) -> TransitionSystem:
    from .semantics import successors
    p = t if isinstance(t, NF) else normalize(t)
    # the relation counts leaves, so copies of replicated bodies must stay distinct
    key = lambda q: canonical_nf(q, absorb_copies=False)
    return TransitionSystem(p, lambda q: [q2 for _, q2 in successors(q)], key,
                            lambda q: print_term(_to_term(q)))


def ready_system(a: Automaton, budget: int = 100_000) -> TransitionSystem:
    return TransitionSystem(a.initial_config, lambda c: ready_step(a, c, budget),
                            lambda c: config_key(a, c),
                            lambda c: c.describe(live_values(a, c)))


def _step_classes(a: Automaton, c: Config) -> list:
    out = {}
    for c2 in step(a, c):
        out.setdefault(config_key(a, c2), c2)
    return list(out.values())


def nda_system(a: Automaton) -> TransitionSystem:
    return TransitionSystem(a.initial_config, lambda c: _step_classes(a, c),
                            lambda c: config_key(a, c), lambda c: c.describe())


def z_system(t) -> TransitionSystem:
    p = t if isinstance(t, NF) else normalize(t)
    return TransitionSystem(p, z_successors, canonical_nf, lambda q: print_term(_to_term(q)))


def _to_term(q: NF) -> Term:
    from .normal_form import to_term
    return to_term(q)


def check_pi_encoding(t, T: BaseForest, rounds: int = 6) -> BisimResult:
    a = encode_pi(t, T)
    return bounded_bisim(pi_system(t), ready_system(a), rounds,
                         lambda q, c: sim_check(q, c, T, a))


def check_nda_encoding(a: Automaton, rounds: int = 6) -> BisimResult:
    term, _, _ = encode_nda(a)
    b = _NdaBuilder(a)
    return bounded_bisim(nda_system(a), z_system(term), rounds,
                         lambda c, q: canonical_nf(normalize(b.config_term(c))) == canonical_nf(q))


# random automata and JSON

def random_automaton(rng: random.Random, max_states: int = 3, max_level: int = 2,
                     max_transitions: int = 4) -> Automaton:
    n = rng.randint(1, max_states)
    states = [f"q{i}" for i in range(n)]
    level = rng.randint(1, max_level)
    trans = []
    for k in range(rng.randint(1, max_transitions)):
        i = rng.randint(1, level)
        j = 0 if k == 0 else rng.randint(0, i)  # the first one is enabled initially
        path = tuple(rng.choice(states) for _ in range(j)) + (None,) * (i - j)
        new_path = tuple(rng.choice(states) for _ in range(i))
        src = states[0] if k == 0 else rng.choice(states)
        trans.append(Concrete(i, src, path, rng.choice(states), new_path))
    return Automaton(frozenset(states), level, tuple(trans), states[0])


def _tr_json(tr: Transition) -> dict:
    if isinstance(tr, Concrete):
        return {"kind": "concrete", "level": tr.level, "source": tr.source, "path": list(tr.path),
                "target": tr.target, "new_path": list(tr.new_path)}
    return {"kind": "pattern", "source": tr.source, "labels": list(tr.labels),
            "target": tr.target, "new_labels": list(tr.new_labels), "alloc": tr.alloc}


def automaton_to_json(a: Automaton) -> dict:
    c = a.initial_config
    mem = [{"value": v, "parent": p, "label": c.memory.labels[v]}
           for v, p in enumerate(c.store.parent)]
    out = {"level": a.level, "states": sorted(a.states), "initial": a.initial,
           "transitions": [_tr_json(t) for t in a.transitions], "memory": mem}
    if a.garbage:
        out["garbage"] = a.garbage
    if a.scopes:
        out["scopes"] = sorted(a.scopes)
    if a.ready:
        out["ready"] = a.ready
    return out


def automaton_from_json(data) -> Automaton:
    if isinstance(data, str):
        data = json.loads(data)
    trans = []
    for t in data.get("transitions", []):
        if t["kind"] == "concrete":
            trans.append(Concrete(t["level"], t["source"], tuple(t["path"]), t["target"],
                                  tuple(t["new_path"])))
        elif t["kind"] == "pattern":
            trans.append(Pattern(t["source"], tuple(t["labels"]), t["target"],
                                 tuple(t["new_labels"]), t.get("alloc")))
        else:
            raise ValueError(f"unknown transition kind {t['kind']!r}")
    mem = sorted(data.get("memory", []), key=lambda m: m["value"])
    if [m["value"] for m in mem] != list(range(len(mem))):
        raise ValueError("memory values must be numbered 0..n-1")
    for m in mem:
        if m["parent"] is not None and m["parent"] >= m["value"]:
            raise ValueError("parents must be allocated before their children")
    cfg = Config(data.get("ready") or data["initial"],
                 ClassMemoryFn(tuple(m["label"] for m in mem)),
                 DataStore(tuple(m["parent"] for m in mem)))
    cfg = Config(data["initial"], cfg.memory, cfg.store)
    return Automaton(frozenset(data["states"]), data["level"], tuple(trans), data["initial"], cfg,
                     data.get("garbage"), frozenset(data.get("scopes", [])), data.get("ready"))
