"""Random instances of the substitution, weakening and congruence lemmas."""

from __future__ import annotations

import random

from hierpi.basetypes import BaseForest
from hierpi.generators import random_congruent, random_typable
from hierpi.normal_form import NF, nf_freshen, nf_subst, normalize, to_term
from hierpi.syntax import ChanType, fresh, global_name
from hierpi.typesys import typecheck


def opened(p: NF, env: dict):
    """Move the top restrictions of p into the environment."""
    gamma = dict(env)
    gamma.update(dict(p.restrictions))
    return NF((), p.actives), gamma


def random_type(rng: random.Random, T: BaseForest, depth: int = 2) -> ChanType:
    base = rng.choice(sorted(T.nodes))
    if depth and rng.random() < 0.5:
        return ChanType(base, random_type(rng, T, depth - 1))
    return ChanType(base)


def substitution_instance(rng: random.Random) -> bool:
    """Gamma, x:t |- P and Gamma(y) = t imply Gamma |- P[y/x]."""
    p, T = random_typable(rng)
    body, gamma = opened(p, {})
    if not gamma or not typecheck(body, T, gamma):
        return True  # premise fails: vacuous
    x = rng.choice(sorted(gamma, key=lambda n: n.ident))
    same = [y for y in gamma if y != x and gamma[y] == gamma[x]]
    if same and rng.random() < 0.8:
        y = rng.choice(sorted(same, key=lambda n: n.ident))
        rest = {k: v for k, v in gamma.items() if k != x}
    else:
        # run a renamed copy next to P so that x and y both occur, then merge them
        y = fresh(x)
        copy = nf_freshen(nf_subst(body, x, y))
        body = NF((), body.actives + copy.actives)
        rest = {k: v for k, v in gamma.items() if k != x}
        rest[y] = gamma[x]
        if not typecheck(body, T, {**rest, x: gamma[x]}):
            return True
    return bool(typecheck(nf_subst(body, x, y), T, rest))


def weakening_instance(rng: random.Random) -> bool:
    """Gamma |- P and z not in fn(P) imply Gamma, z:t |- P."""
    p, T = random_typable(rng)
    body, gamma = opened(p, {}) if rng.random() < 0.5 else (p, {})
    if not typecheck(body, T, gamma):
        return True
    wider = dict(gamma)
    wider[global_name(f"z{rng.randrange(10**6)}")] = random_type(rng, T)
    return bool(typecheck(body, T, wider))


def congruence_instance(rng: random.Random) -> bool:
    """P == Q implies that Gamma |- P iff Gamma |- Q, under any forest."""
    p, T = random_typable(rng)
    if rng.random() < 0.5:
        T = BaseForest.chain(rng.sample(sorted(T.nodes), len(T.nodes)))
    q = normalize(random_congruent(rng, to_term(p)))
    return bool(typecheck(p, T)) == bool(typecheck(q, T))
