"""Command-line front end: every subcommand is a thin wrapper producing a Report."""

from __future__ import annotations

import argparse
import json
import random
import sys
import time
from dataclasses import dataclass, field
from pathlib import Path
from typing import Optional

import jsonschema

from . import forest as fr
from .basetypes import BaseForest, BaseForestError
from .hierarchy import phi, t_compatible_term, t_shaped, t_shaped_failures
from .ndcma import (
    EncodingError, automaton_from_json, automaton_to_json, check_nda_encoding,
    check_pi_encoding, config_key, encode_nda, encode_pi, live_values, ready_step, step,
)
from .normal_form import NF, SizeBoundExceeded, normalize, to_term
from .semantics import reach
from .syntax import ParseError, free_names, nest_nu, parse_term, print_term
from .typesys import infer, typably_hierarchical, typecheck

SCHEMA_VERSION = "1"

REPORT_SCHEMA = {
    "$schema": "https://json-schema.org/draft/2020-12/schema",
    "$id": f"hierpi-report/{SCHEMA_VERSION}",
    "type": "object",
    "required": ["schema", "command", "verdict", "details", "timings"],
    "additionalProperties": False,
    "properties": {
        "schema": {"const": f"hierpi-report/{SCHEMA_VERSION}"},
        "command": {"type": "string"},
        "verdict": {"enum": ["ok", "negative", "unknown", "error"]},
        "details": {"type": "object"},
        "timings": {"type": "object", "additionalProperties": {"type": "number", "minimum": 0}},
    },
}

EXIT = {"ok": 0, "unknown": 0, "negative": 1, "error": 2}


class UsageError(Exception):
    pass


@dataclass
class Report:
    command: str
    verdict: str = "ok"
    details: dict = field(default_factory=dict)
    timings: dict = field(default_factory=dict)
    text: str = ""

    def timer(self, stage: str) -> "_Stage":
        return _Stage(self, stage)

    def to_json(self) -> dict:
        return {"schema": f"hierpi-report/{SCHEMA_VERSION}", "command": self.command,
                "verdict": self.verdict, "details": self.details, "timings": self.timings}


def validate_report(doc: dict):
    jsonschema.validate(doc, REPORT_SCHEMA)


class _Stage:
    def __init__(self, report, stage):
        self.report, self.stage = report, stage

    def __enter__(self):
        self.t0 = time.perf_counter()

    def __exit__(self, *exc):
        self.report.timings[self.stage] = round(1000 * (time.perf_counter() - self.t0), 3)


# helpers

def _read_term(path: str):
    try:
        text = Path(path).read_text()
    except OSError as e:
        raise UsageError(f"cannot read {path}: {e.strerror}") from None
    return parse_term(text)


def _read_forest(path: Optional[str], required: bool = True) -> Optional[BaseForest]:
    if path is None:
        if required:
            raise UsageError("this command needs --forest")
        return None
    try:
        return BaseForest.from_json(Path(path).read_text())
    except OSError as e:
        raise UsageError(f"cannot read {path}: {e.strerror}") from None
    except (json.JSONDecodeError, BaseForestError, TypeError, ValueError) as e:
        raise UsageError(f"bad forest file {path}: {e}") from None


def _read_automaton(path: str):
    try:
        return automaton_from_json(Path(path).read_text())
    except OSError as e:
        raise UsageError(f"cannot read {path}: {e.strerror}") from None
    except (json.JSONDecodeError, KeyError, TypeError, ValueError) as e:
        raise UsageError(f"bad automaton file {path}: {e}") from None


def _show(p) -> str:
    return print_term(to_term(p) if isinstance(p, NF) else p)


def _write(path: Optional[str], text: str):
    if path:
        Path(path).write_text(text)


def _forest_report(r: Report, f, dot: Optional[str]):
    r.details["forest"] = fr.to_json(f)
    r.details["height_nu"] = fr.height_nu(f)
    r.text = fr.describe(f)
    _write(dot, fr.to_dot(f))


# subcommands

def cmd_parse(a, r: Report):
    t = _read_term(a.term)
    r.details = {"term": print_term(t), "free_names": sorted(x.ident for x in free_names(t)),
                 "nest_nu": nest_nu(t)}
    r.text = print_term(t)


def cmd_nf(a, r: Report):
    t = _read_term(a.term)
    with r.timer("normalize"):
        p = normalize(t)
    r.details = {"nf": _show(p), "restrictions": len(p.restrictions), "actives": len(p.actives)}
    r.text = _show(p)


def cmd_forest(a, r: Report):
    t = _read_term(a.term)
    _forest_report(r, fr.forest_of(t, require_annotations=False), a.dot)


def cmd_phi(a, r: Report):
    t, T = _read_term(a.term), _read_forest(a.forest)
    with r.timer("phi"):
        f = phi(normalize(t), T)
    _forest_report(r, f, a.dot)


def cmd_compat(a, r: Report):
    t, T = _read_term(a.term), _read_forest(a.forest)
    with r.timer("compat"):
        ok = t_compatible_term(t, T)
    r.verdict = "ok" if ok else "negative"
    r.details = {"t_compatible": ok}
    r.text = "T-compatible" if ok else "not T-compatible"


def cmd_shaped(a, r: Report):
    t, T = _read_term(a.term), _read_forest(a.forest)
    with r.timer("shaped"):
        bad = t_shaped_failures(t, T)
    r.verdict = "negative" if bad else "ok"
    r.details = {"t_shaped": not bad, "failures": [_show(q) for q in bad]}
    r.text = "T-shaped" if not bad else "not T-shaped; failing:\n" + "\n".join(
        "  " + s for s in r.details["failures"])


def cmd_typecheck(a, r: Report):
    t, T = _read_term(a.term), _read_forest(a.forest)
    with r.timer("typecheck"):
        res = typecheck(t, T)
        hier = res.ok and typably_hierarchical(t, T, {})
    r.verdict = "ok" if hier else "negative"
    r.details = {"typable": res.ok, "typably_hierarchical": hier,
                 "violations": [str(v) for v in res.violations]}
    if res.derivation is not None:
        r.details["derivation_size"] = res.derivation.size()
    if res.ok:
        r.text = res.derivation.render() + ("" if hier else "\nnot P-safe under this forest")
    else:
        r.text = "\n".join(str(v) for v in res.violations)


def cmd_infer(a, r: Report):
    t = _read_term(a.term)
    if a.forest:
        # a user forest is only checked, never modified
        T = _read_forest(a.forest)
        with r.timer("check"):
            try:
                ok = typably_hierarchical(t, T, {})
            except (KeyError, ValueError) as e:
                raise UsageError(f"a user forest needs a fully annotated term ({e})") from None
        r.verdict = "ok" if ok else "negative"
        r.details = {"verdict": "typable" if ok else "untypable", "forest": T.to_json(),
                     "checked_only": True}
        r.text = f"{'typable' if ok else 'not typable'} under {T}"
        return
    res = infer(t, budget=a.budget)
    r.timings.update({k: round(v, 3) for k, v in res.timings.items()})
    r.details = {"verdict": res.verdict, "explored": res.explored, "total_order": True}
    if res.typable:
        r.details["forest"] = res.forest.to_json()
        r.details["annotations"] = {x.ident: str(ty) for x, ty in
                                    sorted(res.annotations.items(), key=lambda kv: kv[0])}
        r.details["term"] = _show(res.term)
        _write(a.emit_forest, json.dumps(res.forest.to_json(), indent=2) + "\n")
        ann = "\n".join(f"  {k} : {v}" for k, v in r.details["annotations"].items())
        r.text = f"typable\nforest: {res.forest}\nannotations:\n{ann}\n{r.details['term']}"
        return
    r.verdict = "negative"
    r.details["message"] = res.message
    r.details["conflict"] = res.message.splitlines()
    r.text = f"{res.verdict}\n{res.message}"


def cmd_explore(a, r: Report):
    t = _read_term(a.term)
    T = _read_forest(a.forest, required=False)
    with r.timer("reach"):
        g = reach(t, a.max_states)
    r.details = {"states": len(g.states), "edges": len(g.edges), "truncated": g.truncated}
    lines = [f"{len(g.states)} states, {len(g.edges)} edges"
             + (" (truncated)" if g.truncated else "")]
    if T is not None:
        with r.timer("shaped"):
            bad = [k for k in g.order if not t_shaped(g.states[k], T)]
        r.details["not_shaped"] = [_show(g.states[k]) for k in bad[:20]]
        r.details["all_shaped"] = not bad
        r.verdict = "negative" if bad else ("unknown" if g.truncated else "ok")
        lines.append("every state T-shaped" if not bad else f"{len(bad)} states not T-shaped")
    else:
        r.verdict = "unknown" if g.truncated else "ok"
    if a.show:
        lines += [_show(g.states[k]) for k in g.order[:a.show]]
    r.text = "\n".join(lines)


def cmd_depth(a, r: Report):
    t = _read_term(a.term)
    with r.timer("reach"):
        g = reach(t, a.max_states)
    T = _read_forest(a.forest, required=False)
    exact, nest, skipped, upper = 0, 0, 0, 0
    with r.timer("depth"):
        for p in g.states.values():
            nest = max(nest, nest_nu(to_term(p)))
            try:
                exact = max(exact, fr.depth_exact(p, a.bound))
            except fr.BoundExceeded:
                skipped += 1
            if T is not None:
                upper = max(upper, fr.height_nu(phi(p, T)))
    r.details = {"states": len(g.states), "truncated": g.truncated, "max_depth_exact": exact,
                 "max_nest_nu": nest, "skipped_over_bound": skipped}
    text = (f"{len(g.states)} states{' (truncated)' if g.truncated else ''}: "
            f"max exact depth {exact}, max nest {nest}")
    if skipped:
        text += f", {skipped} states over the oracle bound"
    if T is not None:
        r.details["max_phi_height"] = upper
        text += f", max height of phi {upper}"
    r.verdict = "unknown" if (g.truncated or skipped) else "ok"
    r.text = text


def cmd_nda_simulate(a, r: Report):
    aut = _read_automaton(a.automaton)
    frontier = [aut.initial_config]
    trace = []
    mover = (lambda c: ready_step(aut, c)) if aut.ready else (lambda c: step(aut, c))
    with r.timer("simulate"):
        for k in range(a.rounds):
            nxt, seen = [], set()
            for c in frontier:
                for c2 in mover(c):
                    key = config_key(aut, c2)
                    if key not in seen:
                        seen.add(key)
                        nxt.append(c2)
            frontier = nxt[:a.max_states]
            trace.append([c.describe(live_values(aut, c)) for c in frontier])
            if not frontier:
                break
    r.details = {"rounds": [{"round": i + 1, "configs": cs} for i, cs in enumerate(trace)]}
    r.text = "\n".join(f"round {i + 1}: " + "; ".join(cs) for i, cs in enumerate(trace))


def cmd_nda_from_pi(a, r: Report):
    t, T = _read_term(a.term), _read_forest(a.forest)
    with r.timer("encode"):
        aut = encode_pi(t, T)
    doc = automaton_to_json(aut)
    _write(a.out, json.dumps(doc, indent=2, ensure_ascii=False) + "\n")
    r.details = {"level": aut.level, "states": len(aut.states),
                 "transitions": len(aut.transitions),
                 "initial_memory": aut.initial_config.describe()}
    if not a.out:
        r.details["automaton"] = doc
    r.text = (f"level {aut.level}, {len(aut.states)} states, {len(aut.transitions)} transitions\n"
              f"initial {aut.initial_config.describe()}")


def cmd_nda_to_pi(a, r: Report):
    aut = _read_automaton(a.automaton)
    with r.timer("encode"):
        term, T, env = encode_nda(aut)
    with r.timer("typecheck"):
        ok = typecheck(term, T, env).ok
    _write(a.emit_forest, json.dumps(T.to_json(), indent=2) + "\n")
    r.verdict = "ok" if ok else "negative"
    r.details = {"term": print_term(term), "forest": T.to_json(), "typable": ok}
    r.text = print_term(term)


def cmd_bisim(a, r: Report):
    if a.input.endswith(".json"):
        aut = _read_automaton(a.input)
        with r.timer("bisim"):
            res = check_nda_encoding(aut, a.rounds)
        r.details = {"direction": "nda-to-pi"}
    else:
        t, T = _read_term(a.input), _read_forest(a.forest)
        with r.timer("bisim"):
            res = check_pi_encoding(t, T, a.rounds)
        r.details = {"direction": "pi-to-nda"}
    r.details.update({"rounds": res.rounds, "pairs": res.pairs, "clause": res.clause,
                      "trace": [list(step_) for step_ in res.trace]})
    r.verdict = "ok" if res.ok else "negative"
    if res.ok:
        r.text = f"bisimilar up to {res.rounds} rounds ({res.pairs} pairs)"
    else:
        r.text = f"clause {res.clause} fails:\n" + "\n".join(
            "  " + ": ".join(s) for s in r.details["trace"])


def cmd_random(a, r: Report):
    from .generators import random_typable
    rng = random.Random(a.seed)
    p, T = random_typable(rng)
    r.details = {"term": _show(p), "forest": T.to_json()}
    r.text = f"{_show(p)}\nforest: {T}"


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="hierpi", description=__doc__)
    ap.add_argument("--json", action="store_true", help="emit a JSON report")
    sub = ap.add_subparsers(dest="command", required=True)

    def cmd(name, fn, forest=False, **kw):
        p = sub.add_parser(name, **kw)
        p.set_defaults(fn=fn)
        p.add_argument("--json", action="store_true", default=argparse.SUPPRESS)
        if forest:
            p.add_argument("--forest", help="base type forest (JSON)")
        return p

    cmd("parse", cmd_parse).add_argument("term")
    cmd("nf", cmd_nf).add_argument("term")
    p = cmd("forest", cmd_forest)
    p.add_argument("term")
    p.add_argument("--dot")
    p = cmd("phi", cmd_phi, forest=True)
    p.add_argument("term")
    p.add_argument("--dot")
    cmd("compat", cmd_compat, forest=True).add_argument("term")
    cmd("shaped", cmd_shaped, forest=True).add_argument("term")
    cmd("typecheck", cmd_typecheck, forest=True).add_argument("term")
    p = cmd("infer", cmd_infer, forest=True)
    p.add_argument("term")
    p.add_argument("--emit-forest")
    p.add_argument("--total-order", action="store_true",
                   help="synthesise a chain (always the case for synthesised forests)")
    p.add_argument("--budget", type=int, default=50)
    p = cmd("explore", cmd_explore, forest=True)
    p.add_argument("term")
    p.add_argument("--max-states", type=int, default=1000)
    p.add_argument("--show", type=int, default=0, help="print the first N states")
    p = cmd("depth", cmd_depth, forest=True)
    p.add_argument("term")
    p.add_argument("--max-states", type=int, default=200)
    p.add_argument("--bound", type=int, default=8)

    nda = sub.add_parser("nda").add_subparsers(dest="nda_command", required=True)
    p = nda.add_parser("simulate")
    p.set_defaults(fn=cmd_nda_simulate, command="nda simulate")
    p.add_argument("automaton")
    p.add_argument("--rounds", type=int, default=3)
    p.add_argument("--max-states", type=int, default=100)
    p.add_argument("--json", action="store_true", default=argparse.SUPPRESS)
    p = nda.add_parser("encode-from-pi")
    p.set_defaults(fn=cmd_nda_from_pi, command="nda encode-from-pi")
    p.add_argument("term")
    p.add_argument("--forest")
    p.add_argument("--out")
    p.add_argument("--json", action="store_true", default=argparse.SUPPRESS)
    p = nda.add_parser("encode-to-pi")
    p.set_defaults(fn=cmd_nda_to_pi, command="nda encode-to-pi")
    p.add_argument("automaton")
    p.add_argument("--emit-forest")
    p.add_argument("--json", action="store_true", default=argparse.SUPPRESS)

    p = cmd("bisim", cmd_bisim, forest=True)
    p.add_argument("input", help="a .pi term (with --forest) or an automaton .json")
    p.add_argument("--rounds", type=int, default=6)
    p = cmd("random", cmd_random)
    p.add_argument("--seed", type=int, default=0)
    return ap


def run(argv=None) -> tuple:
    """(exit code, Report or None); argparse usage errors still exit through SystemExit."""
    ap = build_parser()
    a = ap.parse_args(argv)
    r = Report(a.command)
    try:
        a.fn(a, r)
    except (ParseError, UsageError) as e:
        r.verdict, r.details, r.text = "error", {"error": str(e)}, f"error: {e}"
    except (EncodingError, SizeBoundExceeded, fr.ForestError, BaseForestError) as e:
        r.verdict, r.details, r.text = "error", {"error": str(e)}, f"error: {e}"
    return EXIT[r.verdict], r, a.json


def main(argv=None) -> int:
    code, r, as_json = run(argv)
    if as_json:
        doc = r.to_json()
        validate_report(doc)
        print(json.dumps(doc, indent=2, ensure_ascii=False))
    else:
        out = sys.stderr if r.verdict == "error" else sys.stdout
        print(r.text, file=out)
    return code


if __name__ == "__main__":
    sys.exit(main())
