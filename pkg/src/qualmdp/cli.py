"""Command-line interface: ``qualmdp {check,equiv,star,alternate,oracle}``.

Results go to stdout, diagnostics to stderr.  Exit codes: 0 success, 1 input
error, 2 formula outside QRCTL, 3 EU splitter budget exceeded, 4 automaton not
deterministic.
"""
from __future__ import annotations

import argparse
import json
import sys
import warnings
from pathlib import Path
from typing import Any, Sequence

import numpy as np

from . import formula as fm
from .checker import NotQrctl, check
from .equivalence import DEFAULT_BUDGET, BudgetExceeded, RELATIONS, certify, quotient
from .mdp import Mdp, ModelError, alternate, check_alternating, dumps, load
from .oracle import BoundExceeded, chain_reach_prob, induced_chain, qualitative_verdict, strategies
from .rabin import MissingComplement, NotDeterministic, check_star, load_automaton

EXIT_INPUT, EXIT_NOT_QRCTL, EXIT_BUDGET, EXIT_NOT_DETERMINISTIC = 1, 2, 3, 4


def _emit(obj: Any) -> None:
    print(json.dumps(obj, indent=2, sort_keys=True))


def _lines(names: Sequence[str]) -> None:
    for n in names:
        print(n)


def _formula_text(args) -> str:
    if args.file:
        return Path(args.formula).read_text(encoding="utf-8").strip()
    return args.formula


def cmd_check(args) -> int:
    m = load(args.model)
    f = fm.parse(_formula_text(args))
    trace: list | None = [] if args.trace else None
    sat = m.names_of(check(m, f, trace=trace))
    if args.json:
        report = {"formula": fm.show(f), "fragment": sorted(fm.classify(f)), "satisfying": sat}
        if trace is not None:
            report["trace"] = [{"subformula": sub, "states": m.names_of(s)} for sub, s in trace]
        _emit(report)
        return 0
    if trace is not None:
        for sub, s in trace:
            print(f"# {sub}: {' '.join(m.names_of(s))}")
    _lines(sat)
    return 0


def cmd_equiv(args) -> int:
    m = load(args.model)
    r = certify(m, args.relation, args.budget)
    log = []
    for sp, before in zip(r.log, r.history):
        entry = sp.to_dict()
        entry["certificate"] = sp.describe(m, before)
        entry["split_blocks"] = [sorted(m.names[s] for s in before.members()[b]) for b in sp.split]
        log.append(entry)
    _emit({"relation": args.relation, "blocks": r.partition.named(m), "certificates": log})
    if args.quotient:
        Path(args.quotient).write_text(dumps(quotient(m, r.partition)) + "\n", encoding="utf-8")
    return 0


def cmd_star(args) -> int:
    m = load(args.model)
    q = fm.QUANTIFIERS.get(args.quantifier) or fm.ATL_ALIASES.get(args.quantifier)
    if q is None:
        raise fm.UnknownQuantifier(f"unknown quantifier {args.quantifier!r}", 0)
    a = load_automaton(args.dra)
    comp = load_automaton(args.complement) if args.complement else None
    sat = m.names_of(check_star(m, q, a, comp))
    if args.json:
        _emit({"quantifier": q.token, "satisfying": sat})
    else:
        _lines(sat)
    return 0


def cmd_alternate(args) -> int:
    m = load(args.model)
    if check_alternating(m):
        print("warning: input is already alternating; transforming anyway", file=sys.stderr)
    out, part = alternate(m)
    print(f"synthesized {out.n - m.n} states", file=sys.stderr)
    text = dumps(out)
    if args.output:
        Path(args.output).write_text(text + "\n", encoding="utf-8")
    else:
        print(text)
    return 0


def _operand(m: Mdp, text: str) -> np.ndarray:
    return check(m, fm.parse(text))


def cmd_oracle(args) -> int:
    m = load(args.model)
    if args.op != "X" and args.right is None:
        raise ValueError(f"operator {args.op} needs two operands")
    Q = _operand(m, args.left)
    R = _operand(m, args.right) if args.op != "X" else None
    v = qualitative_verdict(m, args.op, Q, R)
    verdicts = {tok: m.names_of(v.holds(q)) for tok, q in sorted(fm.QUANTIFIERS.items())}
    report: dict[str, Any] = {"op": args.op, "strategies": v.strategies, "verdicts": verdicts}
    if args.op == "U":
        probs = np.stack([chain_reach_prob(induced_chain(m, sigma), R, ~Q & ~R, tolerance=args.tolerance)
                          for sigma in strategies(m)])
        report["max_probability"] = {m.names[s]: float(probs[:, s].max()) for s in range(m.n)}
        report["min_probability"] = {m.names[s]: float(probs[:, s].min()) for s in range(m.n)}
    if args.json:
        _emit(report)
    else:
        for tok, names in verdicts.items():
            print(f"{tok}: {' '.join(names)}")
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="qualmdp", description="Qualitative model checking of MDPs.")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("check", help="states satisfying a QRCTL formula")
    p.add_argument("model")
    p.add_argument("formula", help="formula text, or a path with --file")
    p.add_argument("--file", action="store_true", help="read the formula from the given path")
    p.add_argument("--trace", action="store_true", help="also print every subformula's set")
    p.add_argument("--json", action="store_true")
    p.set_defaults(run=cmd_check)

    p = sub.add_parser("equiv", help="qualitative equivalence classes with certificates")
    p.add_argument("model")
    p.add_argument("relation", choices=sorted(RELATIONS))
    p.add_argument("--budget", type=int, default=DEFAULT_BUDGET, help="block limit for the EU splitter search")
    p.add_argument("--quotient", metavar="PATH", help="write the quotient model here")
    p.set_defaults(run=cmd_equiv)

    p = sub.add_parser("star", help="qualitative Rabin objective given by an automaton")
    p.add_argument("model")
    p.add_argument("quantifier", help="e.g. Eas, Epos, Esure, Eex")
    p.add_argument("dra")
    p.add_argument("--complement", metavar="DRA", help="automaton for the complement language (universal modes)")
    p.add_argument("--json", action="store_true")
    p.set_defaults(run=cmd_star)

    p = sub.add_parser("alternate", help="split state-action pairs into an alternating MDP")
    p.add_argument("model")
    p.add_argument("-o", "--output", metavar="PATH")
    p.set_defaults(run=cmd_alternate)

    p = sub.add_parser("oracle", help="strategy-enumeration verdicts for one path operator")
    p.add_argument("model")
    p.add_argument("op", choices=["X", "U", "W"])
    p.add_argument("left", help="state formula for the (first) operand")
    p.add_argument("right", nargs="?", help="state formula for the second operand of U and W")
    p.add_argument("--tolerance", type=float, default=1e-12, help="probability iteration tolerance")
    p.add_argument("--json", action="store_true")
    p.set_defaults(run=cmd_oracle)
    return parser


def main(argv: Sequence[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        with warnings.catch_warnings(record=True) as caught:
            warnings.simplefilter("always")
            code = args.run(args)
        for w in caught:
            print(f"warning: {w.message}", file=sys.stderr)
        return code
    except fm.FormulaSyntaxError as err:
        print(f"error: {err}", file=sys.stderr)
        return EXIT_INPUT
    except NotQrctl as err:
        print(f"error: {err} (use the star command for path properties)", file=sys.stderr)
        return EXIT_NOT_QRCTL
    except BudgetExceeded as err:
        print(f"error: {err}; blocks reached: {err.blocks}", file=sys.stderr)
        return EXIT_BUDGET
    except NotDeterministic as err:
        for v in err.violations:
            print(f"error: determinism clause {v.clause}: {v.detail}", file=sys.stderr)
        return EXIT_NOT_DETERMINISTIC
    except (ModelError, MissingComplement, BoundExceeded, OSError, ValueError, KeyError) as err:
        print(f"error: {err}", file=sys.stderr)
        return EXIT_INPUT


if __name__ == "__main__":
    sys.exit(main())
