"""Labelled forests: forest(Q), reconstruction, ins, traces and the exact-depth oracle."""

from __future__ import annotations

import itertools
import json
from dataclasses import dataclass
from functools import lru_cache
from typing import Callable, Iterable, Iterator, Optional, Union

from .normal_form import NF, Seq, exact_key, nf_fn, normalize, seq_fn, seq_to_term, to_term
from .syntax import ChanType, Name, Nil, Par, Repl, Restrict, Term, print_term


class ForestError(Exception):
    pass


class ReconstructError(ForestError):
    def __init__(self, condition: int, msg: str):
        super().__init__(f"condition {condition}: {msg}")
        self.condition = condition


class BoundExceeded(ForestError):
    pass


@dataclass(frozen=True)
class NameLabel:
    name: Name
    type: Optional[ChanType]

    @property
    def base(self) -> Optional[str]:
        return None if self.type is None else self.type.base


@dataclass(frozen=True)
class SeqLabel:
    seq: Seq


Label = Union[NameLabel, SeqLabel]


@dataclass(frozen=True)
class LabelledForest:
    parent: tuple  # parent[i] is a node index or None
    labels: tuple

    def __len__(self):
        return len(self.labels)

    @property
    def nodes(self) -> range:
        return range(len(self.labels))

    def children(self, n: Optional[int]) -> list:
        return [i for i, p in enumerate(self.parent) if p == n]

    def roots(self) -> list:
        return self.children(None)

    def path(self, n: int) -> list:
        """Nodes from the root down to n (inclusive)."""
        out = []
        while n is not None:
            out.append(n)
            n = self.parent[n]
        return out[::-1]

    def ancestors(self, n: int) -> list:
        return self.path(n)[:-1]

    def leaves(self) -> list:
        has_child = {p for p in self.parent if p is not None}
        return [i for i in self.nodes if i not in has_child]

    def key(self):
        """Isomorphism-invariant key (names compared by identity)."""
        memo = {}
        kids: dict = {}
        for i, p in enumerate(self.parent):
            kids.setdefault(p, []).append(i)

        def k(i):
            if i not in memo:
                memo[i] = (_label_key(self.labels[i]), tuple(sorted(k(c) for c in kids.get(i, []))))
            return memo[i]

        return tuple(sorted(k(r) for r in kids.get(None, [])))

    def __eq__(self, other):
        return isinstance(other, LabelledForest) and self.key() == other.key()

    def __hash__(self):
        return hash(self.key())


def _label_key(lab: Label):
    if isinstance(lab, NameLabel):
        return ("n", lab.name.uid, str(lab.type))
    return ("s", exact_key(lab.seq))


EMPTY = LabelledForest((), ())


class _Builder:
    def __init__(self):
        self.parent: list = []
        self.labels: list = []

    def add(self, label, parent=None) -> int:
        self.parent.append(parent)
        self.labels.append(label)
        return len(self.labels) - 1

    def graft(self, f: LabelledForest, under: Optional[int] = None) -> dict:
        m = {}
        for i in _topo(f):
            p = f.parent[i]
            m[i] = self.add(f.labels[i], under if p is None else m[p])
        return m

    def build(self) -> LabelledForest:
        return LabelledForest(tuple(self.parent), tuple(self.labels))


def _topo(f: LabelledForest) -> list:
    out, seen = [], set()

    def visit(i):
        if i in seen:
            return
        p = f.parent[i]
        if p is not None:
            visit(p)
        seen.add(i)
        out.append(i)

    for i in f.nodes:
        visit(i)
    return out


def node(label: Label, children: Iterable[LabelledForest] = ()) -> LabelledForest:
    b = _Builder()
    r = b.add(label)
    for c in children:
        b.graft(c, r)
    return b.build()


def union(*forests: LabelledForest) -> LabelledForest:
    b = _Builder()
    for f in forests:
        b.graft(f)
    return b.build()


def leaf(seq: Seq) -> LabelledForest:
    return node(SeqLabel(seq))


# forest(Q)

def forest_of(t: Union[Term, NF], require_annotations: bool = True) -> LabelledForest:
    if isinstance(t, NF):
        t = to_term(t)
    b = _Builder()

    def go(u, parent):
        if isinstance(u, Nil):
            return
        if isinstance(u, Restrict):
            if u.type is None and require_annotations:
                raise ForestError(f"unannotated active restriction {u.name.ident}")
            n = b.add(NameLabel(u.name, u.type), parent)
            go(u.body, n)
        elif isinstance(u, Par):
            go(u.left, parent)
            go(u.right, parent)
        else:
            for s in normalize(u).actives:
                b.add(SeqLabel(s), parent)

    go(t, None)
    return b.build()


# traces and heights

def traces(f: LabelledForest) -> set:
    """Label sequences of all root-to-leaf paths."""
    return {tuple(f.labels[i] for i in f.path(l)) for l in f.leaves()}


def height(f: LabelledForest) -> int:
    return max((len(f.path(l)) for l in f.leaves()), default=0)


def height_nu(f: LabelledForest) -> int:
    best = 0
    for l in f.leaves():
        best = max(best, sum(isinstance(f.labels[i], NameLabel) for i in f.path(l)))
    return best


# reconstruction (Q_phi)

def check_conditions(f: LabelledForest) -> list:
    errors = []
    for i in f.nodes:
        if isinstance(f.labels[i], SeqLabel) and f.children(i):
            errors.append(ReconstructError(1, f"sequential node {i} has children"))
    names = [f.labels[i].name for i in f.nodes if isinstance(f.labels[i], NameLabel)]
    if len(names) != len(set(names)):
        dup = sorted({n.ident for n in names if names.count(n) > 1})
        errors.append(ReconstructError(2, f"name labels not unique: {', '.join(dup)}"))
    xs = set(names)
    for i in f.nodes:
        lab = f.labels[i]
        if isinstance(lab, SeqLabel):
            above = {f.labels[a].name for a in f.ancestors(i) if isinstance(f.labels[a], NameLabel)}
            missing = (seq_fn(lab.seq) & xs) - above
            if missing:
                ms = ", ".join(sorted(n.ident for n in missing))
                errors.append(ReconstructError(3, f"leaf {i} uses {ms} outside its scope"))
    return errors


def reconstruct_nf(f: LabelledForest) -> NF:
    errors = check_conditions(f)
    if errors:
        raise errors[0]
    restr, acts = [], []
    for i in _topo(f):
        lab = f.labels[i]
        if isinstance(lab, NameLabel):
            restr.append((lab.name, lab.type))
        else:
            acts.append(lab.seq)
    return NF(tuple(restr), tuple(acts))


def reconstruct(f: LabelledForest) -> Term:
    return to_term(reconstruct_nf(f))


def as_term(f: LabelledForest) -> Term:
    """The term whose syntax tree is f (forest(as_term(f)) == f)."""
    def go(i):
        lab = f.labels[i]
        if isinstance(lab, SeqLabel):
            return seq_to_term(lab.seq)
        kids = [go(c) for c in f.children(i)]
        return Restrict(lab.name, lab.type, _par(kids))

    return _par([go(r) for r in f.roots()])


def _par(ts):
    if not ts:
        return Nil()
    out = ts[-1]
    for t in reversed(ts[:-1]):
        out = Par(t, out)
    return out


# ins(phi, p, rho)

def insert_forest(host: LabelledForest, path: list, addition: LabelledForest,
                  lt: Callable[[str, str], bool]) -> LabelledForest:
    """Attach each root (y, t_y) of addition under the deepest path node (x, t_x) with t_x < t_y."""
    b = _Builder()
    m = b.graft(host)
    for r in addition.roots():
        lab = addition.labels[r]
        target = None
        if isinstance(lab, NameLabel):
            for n in path:
                hl = host.labels[n]
                if isinstance(hl, NameLabel) and lt(hl.base, lab.base):
                    target = m[n]
        sub = _subtree(addition, r)
        b.graft(sub, target)
    return b.build()


def _subtree(f: LabelledForest, r: int) -> LabelledForest:
    keep = [i for i in _topo(f) if r in f.path(i)]
    idx = {i: k for k, i in enumerate(keep)}
    return LabelledForest(tuple(None if i == r else idx[f.parent[i]] for i in keep),
                          tuple(f.labels[i] for i in keep))


def tree_of(f: LabelledForest, n: int) -> int:
    return f.path(n)[0]


# exhaustive enumeration of F[[P]] (oracle)

def _oracle_parts(t):
    n = t if isinstance(t, NF) else normalize(t)
    used = set()
    for a in n.actives:
        used |= seq_fn(a)
    xs = [(x, ty) for x, ty in n.restrictions if x in used]
    return xs, list(n.actives)


def enumerate_forests(t, bound: int = 6,
                      edge_ok: Optional[Callable[[NameLabel, NameLabel], bool]] = None
                      ) -> Iterator[LabelledForest]:
    """Yield every forest of F[[t]] (garbage restrictions dropped, no replication unfolding).

    edge_ok(parent_label, child_label) can prune name-tree edges; the default keeps all.
    """
    xs, actives = _oracle_parts(t)
    if len(xs) > bound:
        raise BoundExceeded(f"{len(xs)} restrictions exceed oracle bound {bound}")
    labels = [NameLabel(x, ty) for x, ty in xs]
    names = [x for x, _ in xs]
    idx = {x: i for i, x in enumerate(names)}
    needs = [frozenset(idx[y] for y in seq_fn(a) if y in idx) for a in actives]
    seen = set()
    for parents in _name_forests(len(names), labels, edge_ok):
        anc = [_anc(parents, i) for i in range(len(names))]
        # placements: any name node (or root) whose path covers the used names
        options = []
        ok = True
        for need in needs:
            opts = [None] if not need else []
            for j in range(len(names)):
                if need <= anc[j] | {j}:
                    opts.append(j)
            if not opts:
                ok = False
                break
            options.append(opts)
        if not ok:
            continue
        for place in itertools.product(*options):
            f = LabelledForest(tuple(parents) + tuple(place), tuple(labels) + tuple(SeqLabel(a) for a in actives))
            k = f.key()
            if k not in seen:
                seen.add(k)
                yield f


def _anc(parents, i):
    out = set()
    p = parents[i]
    while p is not None:
        out.add(p)
        p = parents[p]
    return out


def _name_forests(n, labels, edge_ok):
    """All rooted forests on n labelled nodes, as parent vectors."""
    choices = []
    for i in range(n):
        opts = [None]
        for j in range(n):
            if j != i and (edge_ok is None or edge_ok(labels[j], labels[i])):
                opts.append(j)
        choices.append(opts)
    for combo in itertools.product(*choices):
        if _acyclic(combo):
            yield list(combo)


def _acyclic(parents) -> bool:
    state = [0] * len(parents)
    for i in range(len(parents)):
        j = i
        trail = []
        while j is not None and state[j] == 0:
            state[j] = 1
            trail.append(j)
            j = parents[j]
        if j is not None and state[j] == 1:
            return False
        for k in trail:
            state[k] = 2
    return True


# exact depth

def depth_exact(t, bound: int = 8) -> int:
    """min height_nu over F[[t]], computed as the treedepth of the name/leaf hypergraph."""
    xs, actives = _oracle_parts(t)
    if len(xs) > bound:
        raise BoundExceeded(f"{len(xs)} restrictions exceed oracle bound {bound}")
    idx = {x: i for i, (x, _) in enumerate(xs)}
    adj = [0] * len(xs)
    for a in actives:
        used = [idx[y] for y in seq_fn(a) if y in idx]
        for i in used:
            for j in used:
                if i != j:
                    adj[i] |= 1 << j
    return _treedepth((1 << len(xs)) - 1, tuple(adj))


@lru_cache(maxsize=100_000)
def _treedepth(mask: int, adj: tuple) -> int:
    if mask == 0:
        return 0
    comps = _mask_components(mask, adj)
    if len(comps) > 1:
        return max(_treedepth(c, adj) for c in comps)
    size = bin(mask).count("1")
    if size == 1:
        return 1
    # a vertex adjacent to all others can always be taken as the root
    m = mask
    while m:
        v = m & -m
        m ^= v
        if bin(adj[v.bit_length() - 1] & mask).count("1") == size - 1:
            return 1 + _treedepth(mask ^ v, adj)
    lower = 2  # connected with an edge
    best = None
    m = mask
    while m:
        v = m & -m
        m ^= v
        d = 1 + _treedepth(mask ^ v, adj)
        if best is None or d < best:
            best = d
            if best <= lower:
                break
    return best


def _mask_components(mask, adj):
    comps = []
    left = mask
    while left:
        v = left & -left
        comp = v
        frontier = v
        while frontier:
            u = frontier & -frontier
            frontier ^= u
            nb = adj[u.bit_length() - 1] & mask & ~comp
            comp |= nb
            frontier |= nb
        comps.append(comp)
        left &= ~comp
    return comps


# emitters

def _label_json(lab: Label):
    if isinstance(lab, NameLabel):
        return {"name": lab.name.ident, "uid": lab.name.uid, "type": None if lab.type is None else str(lab.type),
                "base": lab.base}
    return {"term": print_term(seq_to_term(lab.seq))}


def to_json(f: LabelledForest) -> dict:
    return {"nodes": [{"id": i, "parent": f.parent[i], "label": _label_json(f.labels[i])} for i in f.nodes]}


def to_dot(f: LabelledForest) -> str:
    lines = ["digraph forest {"]
    for i in f.nodes:
        lab = f.labels[i]
        if isinstance(lab, NameLabel):
            text = f"({lab.name.ident}, {lab.base})"
            shape = "ellipse"
        else:
            text = print_term(seq_to_term(lab.seq))
            shape = "box"
        lines.append(f"  n{i} [label={json.dumps(text)}, shape={shape}];")
        if f.parent[i] is not None:
            lines.append(f"  n{f.parent[i]} -> n{i};")
    lines.append("}")
    return "\n".join(lines)


def describe(f: LabelledForest) -> str:
    """Compact bracket notation, e.g. (s,S)[(c,C)[!s(x)...[]]]."""
    def go(i):
        lab = f.labels[i]
        if isinstance(lab, NameLabel):
            head = f"({lab.name.ident},{lab.base})"
        else:
            head = print_term(seq_to_term(lab.seq))
        kids = sorted(go(c) for c in f.children(i))
        return f"{head}[{', '.join(kids)}]"

    return ", ".join(sorted(go(r) for r in f.roots()))
