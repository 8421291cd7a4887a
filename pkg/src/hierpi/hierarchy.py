"""T-compatibility, the canonical forest Phi_T, tied-to and migratable relations."""

from __future__ import annotations

import logging
from dataclasses import dataclass

from .basetypes import BaseForest
from .forest import (
    LabelledForest, NameLabel, SeqLabel, check_conditions, enumerate_forests, leaf, node,
    reconstruct_nf, union, EMPTY,
)
from .normal_form import NF, Seq, congruent, normalize, seq_fn

log = logging.getLogger(__name__)


@dataclass(frozen=True)
class TiedRelation:
    linked: frozenset  # pairs (i, j), symmetric, i may equal j
    tied: frozenset  # pairs (i, j)
    name_tied: frozenset  # pairs (name, i)
    # indices tied to themselves only through the reflexive reading
    reflexive_only: frozenset = frozenset()

    def tied_to(self, y, i) -> bool:
        return (y, i) in self.name_tied


def tied_analysis(p: NF) -> TiedRelation:
    xs = set(p.names)
    fns = [seq_fn(a) for a in p.actives]
    n = len(fns)
    linked = set()
    for i in range(n):
        for j in range(n):
            if fns[i] & fns[j] & xs:
                linked.add((i, j))
    # union-find over linked gives the transitive closure; every index is tied to itself
    root = list(range(n))

    def find(i):
        while root[i] != i:
            root[i] = root[root[i]]
            i = root[i]
        return i

    for i, j in linked:
        root[find(i)] = find(j)
    groups: dict = {}
    for i in range(n):
        groups.setdefault(find(i), []).append(i)
    tied = set()
    for g in groups.values():
        for i in g:
            for j in g:
                tied.add((i, j))
    name_tied = set()
    for (j, i) in tied:
        for y in fns[j]:
            name_tied.add((y, i))
    reflexive_only = frozenset(i for i in range(n) if (i, i) not in linked)
    return TiedRelation(frozenset(linked), frozenset(tied), frozenset(name_tied), reflexive_only)


def migratable(cont: NF, y, tied: TiedRelation = None) -> list:
    """Indices of active terms of cont that are migratable in a(y).cont."""
    tied = tied or tied_analysis(cont)
    out = []
    for i in range(len(cont.actives)):
        if tied.tied_to(y, i):
            out.append(i)
            if i in tied.reflexive_only:
                log.info("migratability of %s relies on the reflexive reading of tied-to", i)
    return out


# T-compatibility

def t_compatible_forest(f: LabelledForest, T: BaseForest) -> bool:
    for i in f.nodes:
        lab = f.labels[i]
        if not isinstance(lab, NameLabel):
            continue
        if lab.base is None:
            raise ValueError(f"name {lab.name.ident} carries no type")
        T.require(lab.base)
        p = f.parent[i]
        while p is not None and not isinstance(f.labels[p], NameLabel):
            p = f.parent[p]
        if p is not None and not T.lt(f.labels[p].base, lab.base):
            return False
    return True


def _base(ty, x):
    if ty is None:
        raise ValueError(f"restriction {x.ident} is not annotated")
    return ty.base


def phi(p: NF, T: BaseForest) -> LabelledForest:
    """Canonical T-compatible forest of a normal form."""
    xs = list(p.restrictions)
    if not xs:
        return union(*(leaf(a) for a in p.actives))
    bases = {x: _base(ty, x) for x, ty in xs}
    for b in bases.values():
        T.require(b)
    tied = tied_analysis(p)
    mins = [x for x, _ in xs if not any(T.lt(bases[y], bases[x]) for y, _ in xs if y != x)]
    minset = set(mins)
    parts = []
    covered = set()
    placed = set(mins)
    for x in mins:
        ix = [i for i in range(len(p.actives)) if tied.tied_to(x, i)]
        covered.update(ix)
        used = set()
        for i in ix:
            used |= seq_fn(p.actives[i])
        # names that cannot sit below x are left to the remainder; this only
        # happens when p is not T-compatible, and keeps the result T-compatible
        yx = [(y, ty) for y, ty in xs
              if y in used and y not in minset and T.lt(bases[x], bases[y])]
        placed.update(y for y, _ in yx)
        sub = NF(tuple(yx), tuple(p.actives[i] for i in ix))
        parts.append(node(NameLabel(x, dict(xs)[x]), [phi(sub, T)]))
    rest = [i for i in range(len(p.actives)) if i not in covered]
    z = tuple((y, ty) for y, ty in xs if y not in placed)
    parts.append(phi(NF(z, tuple(p.actives[i] for i in rest)), T))
    return union(*parts)


def phi_in_class(p: NF, T: BaseForest, f: LabelledForest = None) -> bool:
    """Whether phi(p) belongs to F[[p]]; raises SizeBoundExceeded when undecidable here."""
    f = f if f is not None else phi(p, T)
    if check_conditions(f):
        return False
    return congruent(reconstruct_nf(f), p)


def t_compatible_term(t, T: BaseForest) -> bool:
    p = t if isinstance(t, NF) else normalize(t)
    return phi_in_class(p, T)


def t_compatible_oracle(t, T: BaseForest, bound: int = 6) -> bool:
    """Brute force: some forest of F[[t]] is T-compatible."""
    def edge_ok(parent, child):
        return T.lt(parent.base, child.base)

    for f in enumerate_forests(t, bound, edge_ok):
        if t_compatible_forest(f, T):
            return True
    return False


def continuation_nfs(p: NF):
    """p and every normal form occurring as a prefix continuation inside it."""
    yield p
    for a in p.actives:
        for _, cont in a.branches:
            yield from continuation_nfs(cont)


def t_shaped(t, T: BaseForest) -> bool:
    p = t if isinstance(t, NF) else normalize(t)
    return all(t_compatible_term(q, T) for q in continuation_nfs(p))


def t_shaped_failures(t, T: BaseForest) -> list:
    p = t if isinstance(t, NF) else normalize(t)
    return [q for q in continuation_nfs(p) if not t_compatible_term(q, T)]


def depth_bound(T: BaseForest) -> int:
    return T.depth_bound()
