"""Reduction semantics, reachability, derivatives and chi-renaming."""

from __future__ import annotations

from collections import deque
from dataclasses import dataclass, field
from typing import Optional

from .basetypes import BaseForest
from .normal_form import (
    NF, Seq, SizeBoundExceeded, canonical_nf, exact_key, nf_fn, nf_name_uniq, nf_subst,
    normalize, seq_freshen, seq_fn, seq_rename,
)
from .syntax import (
    ChanType, Choice, Input, Name, Nil, Output, Par, Repl, Restrict, Tau, Term,
    global_name, rename,
)


class StaleRedex(Exception):
    pass


class ChiRenameError(Exception):
    pass


@dataclass(frozen=True)
class Redex:
    kind: str  # "sync" or "tau"
    sender: tuple = ()  # (index, branch); for tau the stepping component
    receiver: tuple = ()
    channel: Optional[Name] = None
    unfolded: frozenset = frozenset()

    def describe(self) -> str:
        if self.kind == "tau":
            return f"tau@{self.sender[0]}.{self.sender[1]}"
        return (f"sync {self.channel.ident}: {self.sender[0]}.{self.sender[1]}"
                f" -> {self.receiver[0]}.{self.receiver[1]}")


def redexes(p: NF) -> list:
    out = []
    senders, receivers = [], []
    for i, a in enumerate(p.actives):
        for k, (pi, _) in enumerate(a.branches):
            if isinstance(pi, Tau):
                unf = frozenset({i}) if a.replicated else frozenset()
                out.append(Redex("tau", (i, k), unfolded=unf))
            elif isinstance(pi, Output):
                senders.append((i, k, pi.chan))
            else:
                receivers.append((i, k, pi.chan))
    for i, k, a in senders:
        for j, l, b in receivers:
            if a != b:
                continue
            if i == j and not p.actives[i].replicated:
                continue  # the two branches of one sum exclude each other
            unf = frozenset(x for x in (i, j) if p.actives[x].replicated)
            out.append(Redex("sync", (i, k), (j, l), a, unf))
    return out


def _take(p: NF, i: int, k: int, copies: dict):
    a = p.actives[i]
    if a.replicated:
        a = seq_freshen(a)  # a fresh copy reacts, !M stays
    copies.setdefault(i, []).append(a)
    return a.branches[k]


def _prune(n: NF) -> NF:
    used = nf_fn(NF((), n.actives))
    return NF(tuple((x, ty) for x, ty in n.restrictions if x in used), n.actives)


def reduce(p: NF, r: Redex) -> NF:
    copies: dict = {}
    try:
        if r.kind == "tau":
            pi, cont = _take(p, *r.sender, copies)
            if not isinstance(pi, Tau):
                raise StaleRedex(r.describe())
            consumed = {r.sender[0]}
            new_x, new_a = cont.restrictions, cont.actives
        else:
            spi, scont = _take(p, *r.sender, copies)
            rpi, rcont = _take(p, *r.receiver, copies)
            if not (isinstance(spi, Output) and isinstance(rpi, Input)
                    and spi.chan == rpi.chan == r.channel):
                raise StaleRedex(r.describe())
            consumed = {r.sender[0], r.receiver[0]}
            rcont = nf_subst(rcont, rpi.binder, spi.payload)
            new_x = scont.restrictions + rcont.restrictions
            new_a = scont.actives + rcont.actives
    except IndexError:
        raise StaleRedex(r.describe()) from None
    others = tuple(a for i, a in enumerate(p.actives)
                   if i not in consumed or a.replicated)
    q = _prune(NF(p.restrictions + new_x, others + new_a))
    assert nf_name_uniq(q), "reduction broke name uniqueness"
    return q


def successors(p: NF) -> list:
    return [(r, reduce(p, r)) for r in redexes(p)]


def nf_size(n: NF) -> int:
    return len(n.restrictions) + len(n.actives)


@dataclass
class ReachGraph:
    initial: object
    states: dict = field(default_factory=dict)  # key -> NF
    edges: list = field(default_factory=list)  # (key, Redex, key)
    truncated: bool = False
    order: list = field(default_factory=list)  # keys in discovery order

    def successors_of(self, key) -> list:
        return [d for s, _, d in self.edges if s == key]


def reach(t, max_states: int = 1000, max_size: Optional[int] = None) -> ReachGraph:
    """Breadth-first exploration deduplicated by canonical keys."""
    p = t if isinstance(t, NF) else normalize(t)
    k0 = canonical_nf(p)
    g = ReachGraph(k0, {k0: p}, [], False, [k0])
    queue = deque([k0])
    while queue:
        k = queue.popleft()
        q = g.states[k]
        if max_size is not None and nf_size(q) > max_size:
            g.truncated = True
            continue
        for r, q2 in successors(q):
            k2 = canonical_nf(q2)
            if k2 not in g.states:
                if len(g.states) >= max_states:
                    g.truncated = True
                    continue
                g.states[k2] = q2
                g.order.append(k2)
                queue.append(k2)
            g.edges.append((k, r, k2))
    return g


# derivatives

def _as_nf(t) -> NF:
    return t if isinstance(t, NF) else normalize(t)


def derivatives(t) -> list:
    """Sequential subterms, active or guarded; sums contribute themselves and each branch."""
    out: dict = {}

    def add(s: Seq):
        out.setdefault(exact_key(s), s)

    def go_nf(n: NF):
        for a in n.actives:
            go_seq(a)

    def go_seq(s: Seq):
        add(s)
        if s.replicated:
            go_seq(Seq(False, s.branches))
        if len(s.branches) > 1:
            for b in s.branches:
                add(Seq(False, (b,)))
        for _, cont in s.branches:
            go_nf(cont)

    go_nf(_as_nf(t))
    return list(out.values())


def chi(base: str) -> Name:
    return global_name("χ_" + base)


def is_chi(x: Name) -> bool:
    return x.ident.startswith("χ_") and chi(x.ident[2:]) == x


def name_types(t, env: Optional[dict] = None) -> dict:
    """Types of every binder: annotations for restrictions, channel payloads for inputs."""
    out = dict(env or {})

    def go_nf(n: NF):
        for x, ty in n.restrictions:
            out[x] = ty
        for a in n.actives:
            for pi, cont in a.branches:
                if isinstance(pi, Input):
                    cty = out.get(pi.chan)
                    if cty is not None and cty.payload is not None:
                        out[pi.binder] = cty.payload
                go_nf(cont)

    go_nf(_as_nf(t))
    return out


def chi_template(s: Seq, types: dict) -> Seq:
    """Rename the free names of s to chi names of their base types."""
    m = {}
    for x in seq_fn(s):
        if is_chi(x):
            continue
        ty = types.get(x)
        if ty is None:
            raise ChiRenameError(f"no type known for {x.ident}")
        m[x] = chi(ty.base)
    return seq_rename(s, m) if m else s


def deriv_closure(t, T: BaseForest, env: Optional[dict] = None) -> list:
    """Instances of derivatives over the chi alphabet, filtered by types."""
    n = _as_nf(t)
    types = name_types(n, env)
    for ty in types.values():
        if ty is not None:
            T.require(ty.base)
    fn_p = nf_fn(n)
    out: dict = {}
    for d in derivatives(n):
        m = {}
        for x in seq_fn(d):
            if x in fn_p and x not in types:
                continue  # free names of the whole term stay
            ty = types.get(x)
            if ty is None:
                raise ChiRenameError(f"no type known for {x.ident}")
            m[x] = chi(ty.base)
        inst = seq_rename(d, m) if m else d
        out.setdefault(exact_key(inst), inst)
    return list(out.values())


def chi_rename(t: Term, T: BaseForest) -> Term:
    """Rename restriction binders to chi_t identifiers, keeping distinct unique ids."""
    from .forest import forest_of
    from .hierarchy import t_compatible_forest

    if not t_compatible_forest(forest_of(t), T):
        raise ChiRenameError("term is not T-compatible")

    def go(u: Term) -> Term:
        if isinstance(u, Nil):
            return u
        if isinstance(u, Restrict):
            if u.type is None:
                raise ChiRenameError(f"restriction {u.name.ident} is not annotated")
            T.require(u.type.base)
            y = Name("χ_" + u.type.base)
            return Restrict(y, u.type, go(rename(u.body, {u.name: y})))
        if isinstance(u, Par):
            return Par(go(u.left), go(u.right))
        if isinstance(u, Repl):
            return Repl(go(u.choice))
        return Choice(tuple((pi, go(c)) for pi, c in u.branches))

    return go(t)

