"""Forests of base types and type environments."""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from typing import Iterable, Optional

from .syntax import ChanType, Name


class BaseForestError(Exception):
    pass


@dataclass(frozen=True)
class BaseForest:
    nodes: frozenset
    parent: tuple = ()  # sorted (child, parent) pairs

    def __post_init__(self):
        pm = dict(self.parent)
        for c, p in pm.items():
            if c not in self.nodes or p not in self.nodes:
                raise BaseForestError(f"edge {p} -> {c} mentions an unknown base type")
        for n in self.nodes:
            seen = set()
            while n is not None:
                if n in seen:
                    raise BaseForestError("base type forest has a cycle")
                seen.add(n)
                n = pm.get(n)
        anc = {}
        for n in self.nodes:
            chain, p = [], pm.get(n)
            while p is not None:
                chain.append(p)
                p = pm.get(p)
            anc[n] = chain
        object.__setattr__(self, "_anc", anc)

    @staticmethod
    def of(nodes: Iterable[str], edges: Iterable[tuple] = ()) -> "BaseForest":
        """edges are (parent, child) pairs, i.e. parent ◃ child."""
        pm = {}
        for p, c in edges:
            if c in pm and pm[c] != p:
                raise BaseForestError(f"base type {c} has two parents")
            pm[c] = p
        return BaseForest(frozenset(nodes), tuple(sorted(pm.items())))

    @staticmethod
    def chain(names: Iterable[str]) -> "BaseForest":
        names = list(names)
        return BaseForest.of(names, zip(names, names[1:]))

    @property
    def parent_map(self) -> dict:
        return dict(self.parent)

    def ancestors(self, t: str) -> list:
        """Strict ancestors of t, nearest first."""
        self.require(t)
        return list(self._anc[t])

    def require(self, t: str):
        if t not in self.nodes:
            raise BaseForestError(f"base type {t} is not in the forest")

    def lt(self, a: str, b: str) -> bool:
        self.require(a)
        self.require(b)
        return a in self._anc[b]

    def le(self, a: str, b: str) -> bool:
        return a == b or self.lt(a, b)

    def roots(self) -> list:
        pm = self.parent_map
        return sorted(n for n in self.nodes if n not in pm)

    def depth_bound(self) -> int:
        return max((1 + len(self.ancestors(n)) for n in self.nodes), default=0)

    def to_json(self) -> dict:
        return {"nodes": sorted(self.nodes), "edges": [[p, c] for c, p in self.parent]}

    @staticmethod
    def from_json(data) -> "BaseForest":
        if isinstance(data, str):
            data = json.loads(data)
        return BaseForest.of(data.get("nodes", []), [tuple(e) for e in data.get("edges", [])])

    def __str__(self):
        # one maximal path per line of descent, e.g. "A◃B◃C, A◃D, E"
        kids: dict = {}
        for c, p in self.parent:
            kids.setdefault(p, []).append(c)
        out = []

        def walk(n, prefix):
            path = prefix + [n]
            cs = sorted(kids.get(n, []))
            if not cs:
                out.append("◃".join(path))
                return
            walk(cs[0], path)
            for c in cs[1:]:
                walk(c, [n])

        for r in self.roots():
            walk(r, [])
        return ", ".join(out) or "∅"


def depth_bound(T: BaseForest) -> int:
    return T.depth_bound()


@dataclass(frozen=True)
class TypeEnv:
    assignments: tuple = ()  # (Name, ChanType) pairs

    @staticmethod
    def of(mapping: Optional[dict] = None) -> "TypeEnv":
        mapping = mapping or {}
        return TypeEnv(tuple(sorted(mapping.items(), key=lambda kv: kv[0].uid)))

    def as_dict(self) -> dict:
        return dict(self.assignments)

    def __contains__(self, x: Name) -> bool:
        return x in self.as_dict()

    def get(self, x: Name) -> Optional[ChanType]:
        return self.as_dict().get(x)

    def domain(self) -> frozenset:
        return frozenset(x for x, _ in self.assignments)

    def union(self, other: "TypeEnv") -> "TypeEnv":
        if self.domain() & other.domain():
            raise ValueError("environments have overlapping domains")
        return TypeEnv.of({**self.as_dict(), **other.as_dict()})

    def extend(self, x: Name, ty: ChanType) -> "TypeEnv":
        return self.union(TypeEnv.of({x: ty}))

    def bases(self, xs) -> set:
        d = self.as_dict()
        return {d[x].base for x in xs if x in d}


def min_T(env: dict, T: BaseForest) -> list:
    """Entries of env whose base type has no strictly smaller base in env."""
    out = []
    for x, ty in env.items():
        if not any(T.lt(other.base, ty.base) for y, other in env.items() if y != x):
            out.append(x)
    return out
