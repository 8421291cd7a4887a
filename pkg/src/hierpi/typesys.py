"""Type checking against a base-type forest, P-safety, and type inference."""

from __future__ import annotations

import time
from dataclasses import dataclass, field
from typing import Optional

import networkx as nx

from .basetypes import BaseForest, TypeEnv
from .hierarchy import t_shaped, tied_analysis
from .normal_form import NF, Seq, SizeBoundExceeded, nf_fn, nf_restricted, normalize, seq_fn
from .syntax import ChanType, Input, Name, Output, Tau

RULES = ("Par", "Choice", "Repl", "Tau", "Out", "In")


class TypingError(Exception):
    """The judgement cannot even be stated (missing name, unannotated binder)."""


@dataclass(frozen=True)
class Violation:
    rule: str
    location: str
    message: str
    comparisons: tuple = ()  # (lhs, op, rhs) strings that failed

    def __str__(self):
        return f"[{self.rule}] at {self.location}: {self.message}"


@dataclass
class Derivation:
    rule: str
    subject: object  # NF or Seq
    children: list = field(default_factory=list)
    side: list = field(default_factory=list)  # discharged side conditions, as text

    def size(self) -> int:
        return 1 + sum(c.size() for c in self.children)

    def render(self, indent: int = 0) -> str:
        from .normal_form import seq_to_term, to_term
        from .syntax import print_term
        t = to_term(self.subject) if isinstance(self.subject, NF) else seq_to_term(self.subject)
        line = "  " * indent + f"{self.rule}: {print_term(t)}"
        if self.side:
            line += "   {" + "; ".join(self.side) + "}"
        return "\n".join([line] + [c.render(indent + 1) for c in self.children])


@dataclass
class CheckResult:
    ok: bool
    derivation: Optional[Derivation]
    violations: list

    def __bool__(self):
        return self.ok


def _env_dict(env) -> dict:
    if env is None:
        return {}
    if isinstance(env, TypeEnv):
        return env.as_dict()
    return dict(env)


def _lookup(gamma: dict, x: Name, where: str) -> ChanType:
    ty = gamma.get(x)
    if ty is None:
        raise TypingError(f"{where}: name {x.ident} is not in the environment")
    return ty


class _Checker:
    def __init__(self, T: BaseForest):
        self.T = T
        self.violations: list = []

    def lt(self, a: str, b: str) -> bool:
        return self.T.lt(a, b)

    def nf(self, gamma: dict, p: NF, loc: str) -> Derivation:
        d = Derivation("Par", p)
        for x, ty in p.restrictions:
            if ty is None:
                raise TypingError(f"{loc}: restriction {x.ident} is not annotated")
            self.T.require(ty.base)
        inner = dict(gamma)
        inner.update(dict(p.restrictions))
        tied = tied_analysis(p)
        for i, a in enumerate(p.actives):
            ctx = sorted(seq_fn(a) & gamma.keys())
            for x, tx in p.restrictions:
                if not tied.tied_to(x, i):
                    continue
                for y in ctx:
                    by = gamma[y].base
                    if self.lt(by, tx.base):
                        d.side.append(f"{by} < {tx.base}")
                    else:
                        self.violations.append(Violation(
                            "Par", f"{loc}/{i}",
                            f"{x.ident} is tied to component {i} which uses {y.ident}"
                            f"{_in_context(loc)}: "
                            f"base({y.ident}) = {by} must be < base({x.ident}) = {tx.base}",
                            ((by, "<", tx.base),)))
        for i, a in enumerate(p.actives):
            d.children.append(self.seq(inner, a, f"{loc}/{i}"))
        return d

    def seq(self, gamma: dict, s: Seq, loc: str) -> Derivation:
        if s.replicated:
            d = Derivation("Repl", s)
            d.children.append(self.seq(gamma, Seq(False, s.branches), loc + "/!"))
            return d
        if len(s.branches) > 1:
            d = Derivation("Choice", s)
            for k, b in enumerate(s.branches):
                d.children.append(self.seq(gamma, Seq(False, (b,)), f"{loc}/+{k}"))
            return d
        pi, cont = s.branches[0]
        if isinstance(pi, Tau):
            d = Derivation("Tau", s)
            d.children.append(self.nf(gamma, cont, loc + "/tau"))
            return d
        if isinstance(pi, Output):
            return self.out(gamma, s, pi, cont, loc)
        return self.inp(gamma, s, pi, cont, loc)

    def out(self, gamma, s, pi: Output, cont, loc) -> Derivation:
        d = Derivation("Out", s)
        here = f"{loc}/{pi.chan.ident}<{pi.payload.ident}>"
        ta = _lookup(gamma, pi.chan, here)
        tb = _lookup(gamma, pi.payload, here)
        if ta.payload is None:
            self.violations.append(Violation(
                "Out", here, f"{pi.chan.ident} : {ta} carries no messages", ((str(ta), "=", "t[τ]"),)))
        elif ta.payload != tb:
            self.violations.append(Violation(
                "Out", here,
                f"{pi.chan.ident} : {ta} cannot carry {pi.payload.ident} : {tb}",
                ((str(ta.payload), "=", str(tb)),)))
        d.children.append(self.nf(gamma, cont, here))
        return d

    def inp(self, gamma, s, pi: Input, cont: NF, loc) -> Derivation:
        d = Derivation("In", s)
        a, x = pi.chan, pi.binder
        here = f"{loc}/{a.ident}({x.ident})"
        ta = _lookup(gamma, a, here)
        if ta.payload is None:
            self.violations.append(Violation(
                "In", here, f"{a.ident} : {ta} carries no messages", ((str(ta), "=", "t[τ]"),)))
            return d
        tx = ta.payload
        self.T.require(tx.base)
        inner = dict(gamma)
        inner[x] = tx
        d.children.append(self.nf(inner, cont, here))
        if self.T.le(tx.base, ta.base):
            d.side.append(f"{tx.base} ≤ {ta.base}")
            return d
        tied = tied_analysis(cont)
        failed = []
        for i, ai in enumerate(cont.actives):
            if not tied.tied_to(x, i):
                continue
            for y in sorted((seq_fn(ai) - {a}) & gamma.keys()):
                by = gamma[y].base
                if not self.lt(by, ta.base):
                    failed.append((i, y, by))
        if not failed:
            d.side.append(f"migratable context < {ta.base}")
            return d
        comps = [(tx.base, "≤", ta.base)] + [(by, "<", ta.base) for _, _, by in failed]
        detail = ", ".join(f"{y.ident} ({by}) in migratable component {i}" for i, y, by in failed)
        self.violations.append(Violation(
            "In", here,
            f"base({x.ident}) = {tx.base} is not ≤ {ta.base} and the migratable continuation "
            f"uses context names not below {ta.base}: {detail}",
            tuple(comps)))
        return d


def typecheck(t, T: BaseForest, env=None) -> CheckResult:
    """Check env ⊢ nf(t) over T; returns the derivation and every violated premise."""
    p = t if isinstance(t, NF) else normalize(t)
    gamma = _env_dict(env)
    for ty in gamma.values():
        T.require(ty.base)
    missing = nf_fn(p) - gamma.keys()
    if missing:
        raise TypingError("free names without a type: " + ", ".join(sorted(x.ident for x in missing)))
    ch = _Checker(T)
    der = ch.nf(gamma, p, "")
    return CheckResult(not ch.violations, der, ch.violations)


def p_safe(env, t, T: BaseForest) -> bool:
    p = t if isinstance(t, NF) else normalize(t)
    gamma = _env_dict(env)
    binders = nf_restricted(p)
    for x in nf_fn(p):
        bx = _lookup(gamma, x, "P-safety").base
        for y, ty in binders.items():
            if ty is None:
                raise TypingError(f"restriction {y.ident} is not annotated")
            if not T.lt(bx, ty.base):
                return False
    return True


def typably_hierarchical(t, T: BaseForest, env=None) -> bool:
    """Raises SizeBoundExceeded when T-shapedness cannot be decided."""
    p = t if isinstance(t, NF) else normalize(t)
    return bool(typecheck(p, T, env)) and p_safe(env, p, T) and t_shaped(p, T)


def annotate(p: NF, ann: dict) -> NF:
    """Replace restriction annotations (recursively) following ann."""
    return NF(tuple((x, ann.get(x, ty)) for x, ty in p.restrictions),
              tuple(Seq(a.replicated, tuple((pi, annotate(c, ann)) for pi, c in a.branches))
                    for a in p.actives))


# inference

@dataclass(frozen=True)
class Atom:
    strict: bool
    lo: object  # base variable: str constant or int class id
    hi: object
    rule: str = ""
    location: str = ""
    names: tuple = ()  # (lower name, upper name) identifiers

    @property
    def pair(self):
        return (self.strict, self.lo, self.hi)


@dataclass(frozen=True)
class Disjunction:
    left: Atom  # NonStrict(base x, base a)
    right: tuple  # conjunction of strict atoms
    location: str = ""


@dataclass
class ConstraintSet:
    equations: list = field(default_factory=list)  # (lhs text, rhs text)
    atoms: list = field(default_factory=list)
    disjunctions: list = field(default_factory=list)
    base_vars: list = field(default_factory=list)
    unification_error: Optional[str] = None
    names: dict = field(default_factory=dict)  # Name -> class id
    classes: object = None

    def distinct_pairs(self) -> dict:
        pairs = {True: set(), False: set()}
        for a in self.all_atoms():
            if a.lo != a.hi:
                pairs[a.strict].add(frozenset((a.lo, a.hi)))
        return pairs

    def all_atoms(self) -> list:
        out = list(self.atoms)
        for d in self.disjunctions:
            out.append(d.left)
            out.extend(d.right)
        return out


class UnificationError(Exception):
    pass


class _Classes:
    """Union-find over type nodes; each class has an optional payload class and constant base."""

    def __init__(self):
        self.parent: list = []
        self.payload: list = []
        self.const: list = []
        self.bare: list = []  # annotated as a base type without payload
        self.members: dict = {}

    def new(self) -> int:
        self.parent.append(len(self.parent))
        self.payload.append(None)
        self.const.append(None)
        self.bare.append(False)
        return len(self.parent) - 1

    def find(self, i: int) -> int:
        while self.parent[i] != i:
            self.parent[i] = self.parent[self.parent[i]]
            i = self.parent[i]
        return i

    def of_type(self, ty: ChanType) -> int:
        c = self.new()
        self.const[c] = ty.base
        if ty.payload is None:
            self.bare[c] = True
        else:
            self.payload[c] = self.of_type(ty.payload)
        return c

    def payload_of(self, i: int, why: str) -> int:
        i = self.find(i)
        if self.bare[i]:
            raise UnificationError(f"{why}: a base type without payload cannot carry messages")
        if self.payload[i] is None:
            self.payload[i] = self.new()
        return self.find(self.payload[i])

    def union(self, i: int, j: int, why: str):
        todo = [(i, j)]
        while todo:
            a, b = todo.pop()
            a, b = self.find(a), self.find(b)
            if a == b:
                continue
            ca, cb = self.const[a], self.const[b]
            if ca is not None and cb is not None and ca != cb:
                raise UnificationError(f"{why}: base types {ca} and {cb} clash")
            pa, pb = self.payload[a], self.payload[b]
            if (self.bare[a] and pb is not None) or (self.bare[b] and pa is not None):
                raise UnificationError(f"{why}: a base type without payload cannot carry messages")
            self.parent[b] = a
            self.const[a] = ca if ca is not None else cb
            self.bare[a] = self.bare[a] or self.bare[b]
            if pa is None:
                self.payload[a] = pb
            elif pb is not None:
                todo.append((pa, pb))

    def occurs_check(self):
        """The payload graph must be acyclic (types are finite)."""
        state: dict = {}
        roots = {self.find(i) for i in range(len(self.parent))}
        for r in roots:
            path = []
            c = r
            while c is not None:
                c = self.find(c)
                if state.get(c) == "done":
                    break
                if c in path:
                    raise UnificationError("occurs check: a channel type would contain itself")
                path.append(c)
                p = self.payload[c]
                c = None if p is None else p
            for c in path:
                state[c] = "done"


class _Gen:
    def __init__(self):
        self.cls = _Classes()
        self.var: dict = {}  # Name -> class id
        self.cs = ConstraintSet()
        self.pending: list = []  # atoms and disjunctions built on class ids

    def v(self, x: Name) -> int:
        if x not in self.var:
            self.var[x] = self.cls.new()
            self.cls.members.setdefault(self.var[x], []).append(x)
        return self.var[x]

    def bind(self, x: Name, ty: Optional[ChanType]):
        c = self.v(x)
        if ty is not None:
            self.cs.equations.append((f"α_{x.ident}", str(ty)))
            self.cls.union(c, self.cls.of_type(ty), f"annotation of {x.ident}")

    def nf(self, gamma: set, p: NF, loc: str):
        for x, ty in p.restrictions:
            self.bind(x, ty)
        tied = tied_analysis(p)
        inner = gamma | set(p.names)
        for i, a in enumerate(p.actives):
            ctx = sorted(seq_fn(a) & gamma)
            for x in p.names:
                if tied.tied_to(x, i):
                    for y in ctx:
                        self.pending.append(("atom", True, y, x, "Par", f"{loc}/{i}"))
        for i, a in enumerate(p.actives):
            self.seq(inner, a, f"{loc}/{i}")

    def seq(self, gamma: set, s: Seq, loc: str):
        for k, (pi, cont) in enumerate(s.branches):
            here = loc if len(s.branches) == 1 else f"{loc}/+{k}"
            if isinstance(pi, Tau):
                self.nf(gamma, cont, here + "/tau")
            elif isinstance(pi, Output):
                a, b = pi.chan, pi.payload
                here = f"{here}/{a.ident}<{b.ident}>"
                self.cs.equations.append((f"α_{a.ident}", f"β[α_{b.ident}]"))
                self.cls.union(self.cls.payload_of(self.v(a), here), self.v(b), here)
                self.nf(gamma, cont, here)
            else:
                a, x = pi.chan, pi.binder
                here = f"{here}/{a.ident}({x.ident})"
                self.cs.equations.append((f"α_{a.ident}", f"β[α_{x.ident}]"))
                self.cls.union(self.cls.payload_of(self.v(a), here), self.v(x), here)
                self.nf(gamma | {x}, cont, here)
                tied = tied_analysis(cont)
                conj = []
                for i, ai in enumerate(cont.actives):
                    if tied.tied_to(x, i):
                        for y in sorted((seq_fn(ai) - {a}) & gamma):
                            conj.append((y, a))
                if conj:
                    self.pending.append(("disj", x, a, tuple(conj), f"In {a.ident}({x.ident})", here))


def _base(cls: _Classes, c: int):
    r = cls.find(c)
    return cls.const[r] if cls.const[r] is not None else r


def generate_constraints(t, env=None) -> ConstraintSet:
    p = t if isinstance(t, NF) else normalize(t)
    gen = _Gen()
    gamma = _env_dict(env)
    free = set(nf_fn(p))
    for x in free:
        gen.bind(x, gamma.get(x))
    cs = gen.cs
    try:
        gen.nf(free, p, "")
        gen.cls.occurs_check()
    except UnificationError as e:
        cs.unification_error = str(e)
        cs.classes = gen.cls
        cs.names = dict(gen.var)
        return cs
    cls = gen.cls
    b = lambda x: _base(cls, gen.var[x])
    for item in gen.pending:
        if item[0] == "atom":
            _, strict, y, x, rule, loc = item
            cs.atoms.append(Atom(strict, b(y), b(x), rule, loc, (y.ident, x.ident)))
        else:
            _, x, a, conj, rule, loc = item
            left = Atom(False, b(x), b(a), "In", loc, (x.ident, a.ident))
            right = tuple(Atom(True, b(y), b(a2), "In", loc, (y.ident, a2.ident)) for y, a2 in conj)
            cs.disjunctions.append(Disjunction(left, right, loc))
    # P-safety: free names sit below every restriction
    binders = nf_restricted(p)
    for x in sorted(free):
        for y in binders:
            cs.atoms.append(Atom(True, b(x), b(y), "P-safe", "", (x.ident, y.ident)))
    cs.base_vars = sorted({_base(cls, c) for c in gen.var.values()}, key=str)
    cs.names = dict(gen.var)
    cs.classes = cls
    n = len(cs.base_vars)
    for strict, pairs in cs.distinct_pairs().items():
        assert len(pairs) <= n * (n - 1) // 2, "order atoms exceed the pair bound"
    return cs


def _order_graph(atoms) -> nx.DiGraph:
    g = nx.DiGraph()
    for a in atoms:
        if g.has_edge(a.lo, a.hi):
            g[a.lo][a.hi]["strict"] |= a.strict
        else:
            g.add_edge(a.lo, a.hi, strict=a.strict)
    return g


def _consistent(atoms) -> bool:
    g = _order_graph(atoms)
    for comp in nx.strongly_connected_components(g):
        consts = [v for v in comp if isinstance(v, str)]
        if len(consts) > 1:
            return False
        for u in comp:
            for w in g.successors(u):
                if w in comp and g[u][w]["strict"]:
                    return False
    return True


def _branches(cs: ConstraintSet, atoms=None, disjunctions=None):
    """Atom sets of every satisfiable choice of disjuncts, depth first."""
    atoms = list(cs.atoms if atoms is None else atoms)
    disj = list(cs.disjunctions if disjunctions is None else disjunctions)

    def go(i, acc):
        if not _consistent(acc):
            return
        if i == len(disj):
            yield acc
            return
        d = disj[i]
        yield from go(i + 1, acc + [d.left])
        yield from go(i + 1, acc + list(d.right))

    yield from go(0, atoms)


def _satisfiable(cs, atoms, disj) -> bool:
    return next(_branches(cs, atoms, disj), None) is not None


@dataclass
class SolveResult:
    sat: bool
    order: Optional[nx.DiGraph] = None  # condensation-free order graph on base vars
    conflict: list = field(default_factory=list)
    message: str = ""


def _describe_var(cs: ConstraintSet, v) -> str:
    if isinstance(v, str):
        return v
    return "t_" + _class_ident(cs, v)


def _class_ident(cs: ConstraintSet, root: int) -> str:
    names = sorted(x.ident for x, c in cs.names.items() if cs.classes.find(c) == root)
    return names[0] if names else str(root)


def _conflict_core(cs: ConstraintSet) -> list:
    """Deletion-minimal unsatisfiable subset of atoms and disjunctions."""
    items = [("a", a) for a in cs.atoms] + [("d", d) for d in cs.disjunctions]
    core = list(items)
    for it in list(items):
        trial = [x for x in core if x is not it]
        atoms = [x[1] for x in trial if x[0] == "a"]
        disj = [x[1] for x in trial if x[0] == "d"]
        if not _satisfiable(cs, atoms, disj):
            core = trial
    return core


def _atom_text(cs: ConstraintSet, a: Atom) -> str:
    lo, hi = _describe_var(cs, a.lo), _describe_var(cs, a.hi)
    rel = "<" if a.strict else "≤"
    word = "exceed" if a.strict else "be at least"
    return f"base({a.names[1]}) must {word} base({a.names[0]}) ({lo} {rel} {hi})"


def _explain(cs: ConstraintSet, core: list) -> str:
    lines = []
    typed = set()
    for kind, it in core:
        if kind == "a":
            ctx = it.location.rsplit("/", 1)[0] if it.rule == "Par" else it.location
            lines.append(f"{it.rule}{_in_context(ctx)}: {_atom_text(cs, it)}")
            typed.update(it.names)
        else:
            alts = [_atom_text(cs, it.left)] + [_atom_text(cs, a) for a in it.right]
            lines.append(f"In at {it.location}: either " + " or all of ".join(
                [alts[0], "; ".join(alts[1:])]))
            for a in (it.left, *it.right):
                typed.update(a.names)
    # the channel an input binder came from fixes its type, so it is part of the story
    sources = []
    for kind, it in core:
        for a in ([it] if kind == "a" else [it.left, *it.right]):
            for seg in a.location.split("/"):
                chan, _, rest = seg.partition("(")
                if rest[:-1] in typed and chan not in typed and chan not in sources:
                    sources.append(chan)
    order = {n: i for i, n in enumerate(sources)}
    shown = [f"{x.ident} : {_show_type(cs, c)}"
             for x, c in sorted(cs.names.items(),
                                key=lambda kv: (order.get(kv[0].ident, len(order)), kv[0].ident))
             if x.ident in typed or x.ident in order]
    if shown:
        lines.append("inconsistent with " + ", ".join(shown))
    return "\n".join(lines)


def _in_context(loc: str) -> str:
    ins = [seg for seg in loc.split("/") if "(" in seg]
    return f" in the continuation of In {ins[-1]}" if ins else ""


def _show_type(cs: ConstraintSet, c: int, depth: int = 0) -> str:
    cls = cs.classes
    r = cls.find(c)
    base = _describe_var(cs, _base(cls, r))
    p = cls.payload[r]
    if p is None or depth > 8:
        return base
    return f"{base}[{_show_type(cs, p, depth + 1)}]"


def solve(cs: ConstraintSet) -> SolveResult:
    if cs.unification_error:
        return SolveResult(False, conflict=[("unify", cs.unification_error)],
                           message="not simply typable: " + cs.unification_error)
    for atoms in _branches(cs):
        g = _order_graph(atoms)
        g.add_nodes_from(cs.base_vars)
        return SolveResult(True, g)
    core = _conflict_core(cs)
    return SolveResult(False, conflict=core, message=_explain(cs, core))


@dataclass
class InferenceResult:
    verdict: str  # "typable", "untypable", "typable-not-shaped"
    forest: Optional[BaseForest] = None
    annotations: dict = field(default_factory=dict)  # Name -> ChanType for restrictions
    env: dict = field(default_factory=dict)
    term: Optional[NF] = None
    conflict: list = field(default_factory=list)
    message: str = ""
    explored: int = 0
    timings: dict = field(default_factory=dict)

    @property
    def typable(self) -> bool:
        return self.verdict == "typable"


def _chains(g: nx.DiGraph, cs: ConstraintSet, limit: int):
    cond = nx.condensation(g)
    members = cond.graph["mapping"]
    names = {}
    used = set()
    for node in cond.nodes:
        vs = [v for v, n in members.items() if n == node]
        consts = sorted(v for v in vs if isinstance(v, str))
        if consts:
            nm = consts[0]
        else:
            nm = "t_" + min(_class_ident(cs, v) for v in vs)
        while nm in used:
            nm += "'"
        used.add(nm)
        names[node] = nm
    key = lambda n: names[n]
    first = list(nx.lexicographical_topological_sort(cond, key=key))
    yield [names[n] for n in first], {v: names[n] for v, n in members.items()}
    count = 1
    for order in nx.all_topological_sorts(cond):
        if count >= limit:
            return
        if list(order) == first:
            continue
        count += 1
        yield [names[n] for n in order], {v: names[n] for v, n in members.items()}


def _type_from(cs: ConstraintSet, c: int, naming: dict, depth=0) -> ChanType:
    cls = cs.classes
    r = cls.find(c)
    base = naming[_base(cls, r)]
    p = cls.payload[r]
    if p is None:
        return ChanType(base)
    if depth > 64:
        raise UnificationError("type too deep")
    return ChanType(base, _type_from(cs, p, naming, depth + 1))


def infer(t, env=None, budget: int = 50) -> InferenceResult:
    """Search for T, annotations and a P-safe environment making t typably hierarchical."""
    t0 = time.perf_counter()
    p = t if isinstance(t, NF) else normalize(t)
    cs = generate_constraints(p, env)
    t1 = time.perf_counter()
    timings = {"constraints": 1000 * (t1 - t0)}
    if cs.unification_error:
        return InferenceResult("untypable", conflict=[cs.unification_error],
                               message="not simply typable: " + cs.unification_error,
                               timings=timings)
    explored = 0
    unknown = False
    any_branch = False
    for atoms in _branches(cs):
        any_branch = True
        g = _order_graph(atoms)
        g.add_nodes_from(cs.base_vars)
        for chain, naming in _chains(g, cs, budget):
            explored += 1
            T = BaseForest.chain(chain)
            try:
                ann = {x: _type_from(cs, c, naming) for x, c in cs.names.items()}
            except UnificationError:
                continue
            restricted = nf_restricted(p)
            ann_r = {x: ann[x] for x in restricted}
            q = annotate(p, ann_r)
            gamma = {x: ann[x] for x in nf_fn(p)}
            try:
                ok = typably_hierarchical(q, T, gamma)
            except SizeBoundExceeded:
                unknown = True
                continue
            if ok:
                timings["search"] = 1000 * (time.perf_counter() - t1)
                return InferenceResult("typable", T, ann_r, gamma, q, explored=explored,
                                       timings=timings)
            if explored >= budget:
                break
        if explored >= budget:
            break
    timings["search"] = 1000 * (time.perf_counter() - t1)
    if not any_branch:
        core = _conflict_core(cs)
        return InferenceResult("untypable", conflict=core, message=_explain(cs, core),
                               timings=timings)
    msg = f"no T-shaped witness among {explored} linear extensions"
    if unknown:
        msg += " (some checks exceeded the size bound)"
    return InferenceResult("typable-not-shaped", explored=explored, message=msg, timings=timings)
