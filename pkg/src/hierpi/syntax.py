"""Abstract syntax of annotated pi-terms, parser, printer and name bookkeeping."""

from __future__ import annotations

import itertools
import re
from dataclasses import dataclass, field
from typing import Iterator, Optional, Union

_uids = itertools.count(1)


@dataclass(frozen=True)
class Name:
    ident: str
    uid: int = field(default_factory=lambda: next(_uids))

    def __eq__(self, other):
        return isinstance(other, Name) and self.uid == other.uid

    def __hash__(self):
        return hash(self.uid)

    def __lt__(self, other):
        return (self.ident, self.uid) < (other.ident, other.uid)

    def __repr__(self):
        return f"{self.ident}#{self.uid}"


def fresh(base: Union[str, Name]) -> Name:
    return Name(base.ident if isinstance(base, Name) else base)


_globals: dict[str, Name] = {}


def global_name(ident: str) -> Name:
    """Free names are interned per identifier so repeated parses agree."""
    n = _globals.get(ident)
    if n is None:
        n = _globals[ident] = Name(ident)
    return n


@dataclass(frozen=True)
class ChanType:
    base: str
    payload: Optional["ChanType"] = None

    def __str__(self):
        if self.payload is None:
            return self.base
        return f"{self.base}[{self.payload}]"

    def depth(self) -> int:
        return 1 if self.payload is None else 1 + self.payload.depth()


# prefixes

@dataclass(frozen=True)
class Input:
    chan: Name
    binder: Name


@dataclass(frozen=True)
class Output:
    chan: Name
    payload: Name


@dataclass(frozen=True)
class Tau:
    pass


Prefix = Union[Input, Output, Tau]


# terms

@dataclass(frozen=True)
class Nil:
    pass


@dataclass(frozen=True)
class Restrict:
    name: Name
    type: Optional[ChanType]
    body: "Term"


@dataclass(frozen=True)
class Par:
    left: "Term"
    right: "Term"


@dataclass(frozen=True)
class Choice:
    branches: tuple  # tuple[tuple[Prefix, Term], ...]


@dataclass(frozen=True)
class Repl:
    choice: Choice

    def __post_init__(self):
        if not isinstance(self.choice, Choice):
            raise TypeError("replication wraps only sums")


Term = Union[Nil, Restrict, Par, Choice, Repl]

NIL = Nil()


def par(*ts: Term) -> Term:
    ts = [t for t in ts if not isinstance(t, Nil)]
    if not ts:
        return NIL
    out = ts[-1]
    for t in reversed(ts[:-1]):
        out = Par(t, out)
    return out


def restrict(names, body: Term) -> Term:
    """names: iterable of Name or (Name, ChanType|None)."""
    for item in reversed(list(names)):
        if isinstance(item, Name):
            body = Restrict(item, None, body)
        else:
            body = Restrict(item[0], item[1], body)
    return body


def prefix(pi: Prefix, cont: Term = NIL) -> Choice:
    return Choice(((pi, cont),))


def is_sequential(t: Term) -> bool:
    return isinstance(t, (Choice, Repl))


def parallel_components(t: Term) -> list:
    if isinstance(t, Par):
        return parallel_components(t.left) + parallel_components(t.right)
    if isinstance(t, Nil):
        return []
    return [t]


# name sets

def prefix_names(pi: Prefix) -> tuple:
    if isinstance(pi, Input):
        return (pi.chan,)
    if isinstance(pi, Output):
        return (pi.chan, pi.payload)
    return ()


def free_names(t: Term) -> frozenset:
    if isinstance(t, Nil):
        return frozenset()
    if isinstance(t, Restrict):
        return free_names(t.body) - {t.name}
    if isinstance(t, Par):
        return free_names(t.left) | free_names(t.right)
    if isinstance(t, Repl):
        return free_names(t.choice)
    out = set()
    for pi, cont in t.branches:
        fc = free_names(cont)
        if isinstance(pi, Input):
            fc = fc - {pi.binder}
        out |= fc
        out.update(prefix_names(pi))
    return frozenset(out)


def _binders(t: Term) -> Iterator[Name]:
    if isinstance(t, Restrict):
        yield t.name
        yield from _binders(t.body)
    elif isinstance(t, Par):
        yield from _binders(t.left)
        yield from _binders(t.right)
    elif isinstance(t, Repl):
        yield from _binders(t.choice)
    elif isinstance(t, Choice):
        for pi, cont in t.branches:
            if isinstance(pi, Input):
                yield pi.binder
            yield from _binders(cont)


def bound_names(t: Term) -> frozenset:
    return frozenset(_binders(t))


def restricted_names(t: Term) -> dict:
    """All restriction binders (active or not) with their annotations."""
    out = {}

    def walk(u):
        if isinstance(u, Restrict):
            out[u.name] = u.type
            walk(u.body)
        elif isinstance(u, Par):
            walk(u.left)
            walk(u.right)
        elif isinstance(u, Repl):
            walk(u.choice)
        elif isinstance(u, Choice):
            for _, cont in u.branches:
                walk(cont)

    walk(t)
    return out


def active_restrictions(t: Term) -> frozenset:
    if isinstance(t, Restrict):
        return active_restrictions(t.body) | {t.name}
    if isinstance(t, Par):
        return active_restrictions(t.left) | active_restrictions(t.right)
    return frozenset()


def name_sets(t: Term):
    return free_names(t), bound_names(t), active_restrictions(t)


def all_names(t: Term) -> frozenset:
    return free_names(t) | bound_names(t)


# substitution and renaming

class CaptureError(Exception):
    pass


def _rn(n: Name, m: dict) -> Name:
    return m.get(n, n)


def _rename_prefix(pi: Prefix, m: dict) -> Prefix:
    if isinstance(pi, Input):
        return Input(_rn(pi.chan, m), _rn(pi.binder, m))
    if isinstance(pi, Output):
        return Output(_rn(pi.chan, m), _rn(pi.payload, m))
    return pi


def rename(t: Term, m: dict) -> Term:
    """Rename every occurrence (free or binding) according to m; no capture check."""
    if not m or isinstance(t, Nil):
        return t
    if isinstance(t, Restrict):
        return Restrict(_rn(t.name, m), t.type, rename(t.body, m))
    if isinstance(t, Par):
        return Par(rename(t.left, m), rename(t.right, m))
    if isinstance(t, Repl):
        return Repl(rename(t.choice, m))
    return Choice(tuple((_rename_prefix(pi, m), rename(c, m)) for pi, c in t.branches))


def substitute(t: Term, src: Name, dst: Name) -> Term:
    """Replace free occurrences of src by dst."""
    if src == dst:
        return t
    if isinstance(t, Nil):
        return t
    if isinstance(t, Restrict):
        if t.name == src:
            return t
        if t.name == dst and src in free_names(t.body):
            raise CaptureError(f"{dst} captured by restriction")
        return Restrict(t.name, t.type, substitute(t.body, src, dst))
    if isinstance(t, Par):
        return Par(substitute(t.left, src, dst), substitute(t.right, src, dst))
    if isinstance(t, Repl):
        return Repl(substitute(t.choice, src, dst))
    branches = []
    for pi, cont in t.branches:
        m = {src: dst}
        if isinstance(pi, Input):
            npi = Input(_rn(pi.chan, m), pi.binder)
            if pi.binder == src:
                branches.append((npi, cont))
                continue
            if pi.binder == dst and src in free_names(cont):
                raise CaptureError(f"{dst} captured by input binder")
            branches.append((npi, substitute(cont, src, dst)))
        else:
            branches.append((_rename_prefix(pi, m), substitute(cont, src, dst)))
    return Choice(tuple(branches))


def freshen_binders(t: Term) -> Term:
    """Give every binder of t a fresh unique-id (same identifier)."""
    if isinstance(t, Nil):
        return t
    if isinstance(t, Restrict):
        n = fresh(t.name)
        return Restrict(n, t.type, freshen_binders(rename_free(t.body, {t.name: n})))
    if isinstance(t, Par):
        return Par(freshen_binders(t.left), freshen_binders(t.right))
    if isinstance(t, Repl):
        return Repl(freshen_binders(t.choice))
    branches = []
    for pi, cont in t.branches:
        if isinstance(pi, Input):
            n = fresh(pi.binder)
            branches.append((Input(pi.chan, n), freshen_binders(rename_free(cont, {pi.binder: n}))))
        else:
            branches.append((pi, freshen_binders(cont)))
    return Choice(tuple(branches))


def rename_free(t: Term, m: dict) -> Term:
    """Simultaneous substitution of free names; targets must be fresh for t."""
    if not m:
        return t
    if isinstance(t, Nil):
        return t
    if isinstance(t, Restrict):
        inner = {k: v for k, v in m.items() if k != t.name}
        return Restrict(t.name, t.type, rename_free(t.body, inner))
    if isinstance(t, Par):
        return Par(rename_free(t.left, m), rename_free(t.right, m))
    if isinstance(t, Repl):
        return Repl(rename_free(t.choice, m))
    branches = []
    for pi, cont in t.branches:
        if isinstance(pi, Input):
            inner = {k: v for k, v in m.items() if k != pi.binder}
            branches.append((Input(_rn(pi.chan, m), pi.binder), rename_free(cont, inner)))
        else:
            branches.append((_rename_prefix(pi, m), rename_free(cont, m)))
    return Choice(tuple(branches))


def satisfies_name_uniq(t: Term) -> bool:
    seen = list(_binders(t))
    return len(seen) == len(set(seen)) and not (set(seen) & free_names(t))


def ensure_name_uniq(t: Term) -> Term:
    """Rename binders apart so each is bound once and none is also free."""
    if satisfies_name_uniq(t):
        return t
    used = set(free_names(t))

    def go(u, m):
        if isinstance(u, Nil):
            return u
        if isinstance(u, Restrict):
            n = u.name
            if n in used:
                n = fresh(n)
            used.add(n)
            return Restrict(n, u.type, go(u.body, {**m, u.name: n}))
        if isinstance(u, Par):
            return Par(go(u.left, m), go(u.right, m))
        if isinstance(u, Repl):
            return Repl(go(u.choice, m))
        branches = []
        for pi, cont in u.branches:
            if isinstance(pi, Input):
                n = pi.binder
                if n in used:
                    n = fresh(n)
                used.add(n)
                branches.append((Input(_rn(pi.chan, m), n), go(cont, {**m, pi.binder: n})))
            else:
                branches.append((_rename_prefix(pi, m), go(cont, m)))
        return Choice(tuple(branches))

    return go(t, {})


def alpha_eq(p: Term, q: Term) -> bool:
    def eq(a, b, ma, mb, depth):
        if type(a) is not type(b):
            return False
        if isinstance(a, Nil):
            return True
        if isinstance(a, Restrict):
            if a.type != b.type:
                return False
            return eq(a.body, b.body, {**ma, a.name: depth}, {**mb, b.name: depth}, depth + 1)
        if isinstance(a, Par):
            return eq(a.left, b.left, ma, mb, depth) and eq(a.right, b.right, ma, mb, depth)
        if isinstance(a, Repl):
            return eq(a.choice, b.choice, ma, mb, depth)
        if len(a.branches) != len(b.branches):
            return False
        for (pa, ca), (pb, cb) in zip(a.branches, b.branches):
            if type(pa) is not type(pb):
                return False
            if isinstance(pa, Output):
                if not (same(pa.chan, pb.chan, ma, mb) and same(pa.payload, pb.payload, ma, mb)):
                    return False
                if not eq(ca, cb, ma, mb, depth):
                    return False
            elif isinstance(pa, Input):
                if not same(pa.chan, pb.chan, ma, mb):
                    return False
                if not eq(ca, cb, {**ma, pa.binder: depth}, {**mb, pb.binder: depth}, depth + 1):
                    return False
            elif not eq(ca, cb, ma, mb, depth):
                return False
        return True

    def same(x, y, ma, mb):
        if x in ma or y in mb:
            return ma.get(x) == mb.get(y) and x in ma and y in mb
        return x == y

    return eq(p, q, {}, {}, 0)


def nest_nu(t: Term) -> int:
    if isinstance(t, Restrict):
        return 1 + nest_nu(t.body)
    if isinstance(t, Par):
        return max(nest_nu(t.left), nest_nu(t.right))
    return 0


def subterms(t: Term) -> Iterator[Term]:
    yield t
    if isinstance(t, Restrict):
        yield from subterms(t.body)
    elif isinstance(t, Par):
        yield from subterms(t.left)
        yield from subterms(t.right)
    elif isinstance(t, Repl):
        yield from subterms(t.choice)
    elif isinstance(t, Choice):
        for _, c in t.branches:
            yield from subterms(c)


# parser

class ParseError(Exception):
    def __init__(self, msg, line=0, col=0):
        super().__init__(f"{msg} at line {line}, column {col}")
        self.line = line
        self.col = col


_TOKEN = re.compile(
    r"(?P<ws>\s+|#[^\n]*)|(?P<id>[A-Za-z_][A-Za-z0-9_']*)|(?P<num>0)|(?P<sym>[().|+!<>:\[\],])"
)
_KEYWORDS = {"new", "tau"}


def _tokenize(text: str):
    pos, line, lstart = 0, 1, 0
    out = []
    while pos < len(text):
        m = _TOKEN.match(text, pos)
        if not m:
            raise ParseError(f"unexpected character {text[pos]!r}", line, pos - lstart + 1)
        kind = m.lastgroup
        val = m.group()
        if kind != "ws":
            out.append((kind, val, line, pos - lstart + 1))
        for i, ch in enumerate(val):
            if ch == "\n":
                line += 1
                lstart = pos + i + 1
        pos = m.end()
    out.append(("eof", "", line, pos - lstart + 1))
    return out


class _Parser:
    def __init__(self, text):
        self.toks = _tokenize(text)
        self.i = 0

    def peek(self):
        return self.toks[self.i]

    def next(self):
        t = self.toks[self.i]
        self.i += 1
        return t

    def fail(self, msg, tok=None):
        tok = tok or self.peek()
        raise ParseError(msg, tok[2], tok[3])

    def expect(self, val):
        tok = self.next()
        if tok[1] != val:
            self.fail(f"expected {val!r}, found {tok[1] or 'end of input'!r}", tok)
        return tok

    def ident(self):
        tok = self.next()
        if tok[0] != "id" or tok[1] in _KEYWORDS:
            self.fail(f"expected a name, found {tok[1] or 'end of input'!r}", tok)
        return tok[1]

    def lookup(self, ident, scope):
        return scope.get(ident) or global_name(ident)

    def parse(self):
        t = self.par({})
        if self.peek()[0] != "eof":
            self.fail(f"unexpected {self.peek()[1]!r}")
        return t

    def par(self, scope):
        items = [self.sum(scope)]
        while self.peek()[1] == "|":
            self.next()
            items.append(self.sum(scope))
        out = items[-1]
        for t in reversed(items[:-1]):
            out = Par(t, out)
        return out

    def sum(self, scope):
        start = self.peek()
        items = [self.unit(scope)]
        while self.peek()[1] == "+":
            self.next()
            items.append(self.unit(scope))
        if len(items) == 1:
            return items[0]
        branches = []
        for t in items:
            if isinstance(t, Nil):
                continue
            if isinstance(t, Repl) and not t.choice.branches:
                continue
            if not isinstance(t, Choice):
                self.fail("only prefixed terms may appear in a sum", start)
            branches.extend(t.branches)
        return Choice(tuple(branches)) if branches else NIL

    def ty(self):
        base = self.ident()
        if self.peek()[1] == "[":
            self.next()
            inner = self.ty()
            self.expect("]")
            return ChanType(base, inner)
        return ChanType(base)

    def unit(self, scope, tight=False):
        tok = self.peek()
        kind, val = tok[0], tok[1]
        if kind == "num":
            self.next()
            return NIL
        if val == "(":
            self.next()
            t = self.par(scope)
            self.expect(")")
            return t
        if val == "!":
            self.next()
            body = self.unit(scope, tight=True)
            if isinstance(body, Nil):
                return NIL
            if not isinstance(body, Choice):
                self.fail("replication must guard a sum of prefixed terms", tok)
            return Repl(body) if body.branches else NIL
        if val == "new":
            self.next()
            binders = []
            while True:
                ident = self.ident()
                ty = None
                if self.peek()[1] == ":":
                    self.next()
                    ty = self.ty()
                    if self.peek()[1] == ":":
                        self.fail(f"duplicate annotation on {ident}")
                binders.append((ident, ty))
                if self.peek()[1] == ",":
                    self.next()
                    continue
                if self.peek()[0] == "id" and self.peek()[1] not in _KEYWORDS:
                    continue
                break
            self.expect(".")
            inner = dict(scope)
            names = []
            for ident, ty in binders:
                n = Name(ident)
                inner[ident] = n
                names.append((n, ty))
            # after a prefix (or '!') the scope covers only the next unit
            return restrict(names, self.unit(inner, True) if tight else self.par(inner))
        if val == "tau":
            self.next()
            return prefix(Tau(), self.cont(scope))
        if kind == "id":
            chan = self.lookup(self.ident(), scope)
            nxt = self.peek()[1]
            if nxt == "(":
                self.next()
                bident = self.ident()
                self.expect(")")
                b = Name(bident)
                return prefix(Input(chan, b), self.cont({**scope, bident: b}))
            if nxt == "<":
                self.next()
                payload = self.lookup(self.ident(), scope)
                self.expect(">")
                return prefix(Output(chan, payload), self.cont(scope))
            self.fail("expected '(' or '<' after channel name")
        self.fail(f"unexpected {val or 'end of input'!r}")

    def cont(self, scope):
        if self.peek()[1] == ".":
            self.next()
            return self.unit(scope, tight=True)
        return NIL


def parse_term(text: str) -> Term:
    return _Parser(text).parse()


def parse_type(text: str) -> ChanType:
    p = _Parser(text)
    t = p.ty()
    if p.peek()[0] != "eof":
        p.fail("trailing input after type")
    return t


# printer

def _display_names(t: Term) -> dict:
    names = sorted(all_names(t), key=lambda n: n.uid)
    by_ident: dict[str, list] = {}
    for n in names:
        by_ident.setdefault(n.ident, []).append(n)
    taken = set(by_ident)
    out = {}
    for ident, group in by_ident.items():
        if len(group) == 1:
            out[group[0]] = ident
            continue
        # free occurrence keeps the bare identifier
        free = free_names(t)
        k = 0
        for n in group:
            if n in free and ident not in out.values():
                out[n] = ident
                continue
            while True:
                k += 1
                cand = f"{ident}_{k}"
                if cand not in taken:
                    break
            taken.add(cand)
            out[n] = cand
    return out


def print_term(t: Term, names: Optional[dict] = None) -> str:
    names = names if names is not None else _display_names(t)

    def nm(n):
        return names.get(n, n.ident)

    def pi_str(pi):
        if isinstance(pi, Input):
            return f"{nm(pi.chan)}({nm(pi.binder)})"
        if isinstance(pi, Output):
            return f"{nm(pi.chan)}<{nm(pi.payload)}>"
        return "tau"

    def go(u, ctx="top"):
        if isinstance(u, Nil):
            return "0"
        if isinstance(u, Restrict):
            ann = f":{u.type}" if u.type is not None else ""
            s = f"new {nm(u.name)}{ann}.{go(u.body)}"
            return s if ctx == "top" else f"({s})"
        if isinstance(u, Par):
            return f"({go(u.left, 'par')} | {go(u.right, 'par')})"
        if isinstance(u, Repl):
            return "!" + go(u.choice, "unit")
        if not u.branches:
            return "0"
        s = " + ".join(f"{pi_str(pi)}.{go(c, 'unit')}" for pi, c in u.branches)
        return f"({s})" if ctx == "unit" and len(u.branches) > 1 else s

    return go(t)
