"""Command line front end.

Two subcommands.  ``analyze`` loads a rule file, searches every clause for
derivation-neutral filters and looping queries, and prints a per-clause
report (text by default, machine-readable with --json).  ``check`` asks
whether one user-supplied query is provably looping: it reuses the analysis
and answers LOOPS (proved) when the query is more general than a verified
looping query, or filter-more-general than a proven looping head query under
one of the found filters.

Exit codes: 0 analysis completed (whatever the findings), 2 parse or
validation error, 3 a resource limit was hit somewhere (the partial report is
still printed).
"""

from __future__ import annotations

import argparse
import json
import sys
from typing import Optional

from . import __version__, linarith
from .analyzer import AnalyzeOptions, ClauseReport, ProgramReport, analyze_program
from .engine import format_trace, run
from .filters import delta_more_general, more_general
from .linarith import ResourceLimitError
from .syntax import (
    ParseError,
    Program,
    Query,
    parse_program,
    parse_query,
    to_source,
)


def _positions_str(positions: frozenset[int]) -> str:
    return "{" + ",".join(str(i) for i in sorted(positions)) + "}"


def _sorted_classes(classes) -> list[frozenset[int]]:
    return sorted(classes, key=lambda m: (len(m), tuple(sorted(m))))


def _clause_source(report: ClauseReport) -> str:
    return report.clause.text or to_source(report.clause)


def _print_text_report(report: ProgramReport, out) -> None:
    looping = sum(1 for r in report.reports if r.results)
    for r in report.reports:
        print(f"clause {r.index + 1}: {_clause_source(r)}", file=out)
        if r.results:
            for res in r.results:
                verified = (f"verified {res.verified_steps} steps"
                            if res.verified_steps else "not run")
                print(f"  tau: {_positions_str(res.positions)}", file=out)
                print(f"    delta: {res.delta}", file=out)
                print(f"    witness: {res.witness}  ({verified})", file=out)
            rendered = ", ".join(_positions_str(m)
                                 for m in _sorted_classes(r.classes))
            print(f"  classes: {rendered}", file=out)
        else:
            print("  none found", file=out)
        for check in r.checks:
            if check.error:
                print(f"  resource limit at tau "
                      f"{_positions_str(check.positions)}: {check.error}",
                      file=out)
    if report.propagated:
        print("propagated:", file=out)
        for p in report.propagated:
            print(f"  clause {p.index + 1}: {p.head_query}  via {p.via}",
                  file=out)
    total = len(report.reports)
    print(f"{total} clause{'s' if total != 1 else ''}: "
          f"{looping} looping, {total - looping} none found", file=out)


def report_to_json(report: ProgramReport) -> dict:
    clauses = []
    for r in report.reports:
        clauses.append({
            "source": _clause_source(r),
            "status": r.status,
            "results": [
                {
                    "tau": sorted(res.positions),
                    "delta": str(res.delta),
                    "witness": str(res.witness),
                    "verified_steps": res.verified_steps,
                }
                for res in r.results
            ],
            "classes": [sorted(m) for m in _sorted_classes(r.classes)],
            "errors": [
                {"tau": sorted(c.positions), "message": c.error}
                for c in r.checks if c.error
            ],
        })
    return {
        "version": __version__,
        "clauses": clauses,
        "propagated": [
            {
                "clause": p.index + 1,
                "head_query": str(p.head_query),
                "via": str(p.via),
            }
            for p in report.propagated
        ],
    }


def _load_program(path: str) -> Program:
    try:
        with open(path, encoding="utf-8") as fh:
            text = fh.read()
    except OSError as err:
        raise ParseError(str(err))
    return parse_program(text)


def _options_from(args) -> AnalyzeOptions:
    return AnalyzeOptions(
        first_only=getattr(args, "first_only", False),
        verify_steps=args.verify_steps,
        max_dnf=args.max_dnf,
        propagate=not getattr(args, "no_propagate", False),
    )


def cmd_analyze(args) -> int:
    try:
        program = _load_program(args.file)
    except ParseError as err:
        print(f"error: {err}", file=sys.stderr)
        return 2
    report = analyze_program(program, _options_from(args))
    if args.json:
        json.dump(report_to_json(report), sys.stdout, indent=2)
        print()
    else:
        _print_text_report(report, sys.stdout)
    if args.trace and not args.json:
        for r in report.reports:
            for res in r.results:
                if res.verified_steps <= 0:
                    continue
                state = run(res.witness, Program((r.clause,)),
                            res.verified_steps, project_stores=True,
                            keep_trace=True)
                print(f"trace for {res.witness} "
                      f"(clause {r.index + 1}, tau {_positions_str(res.positions)}):")
                for line in format_trace(state):
                    print(f"  {line}")
    return 3 if report.had_resource_error else 0


def _proof_for(query: Query, report: ProgramReport) -> Optional[tuple[str, str]]:
    """A (kind, fact) pair proving the query loops, or None.

    kind 'more general than' cites a verified looping query; kind
    'filter-more-general than' cites a looping head query whose clause has a
    passing filter.
    """
    facts: list[Query] = []
    for r in report.reports:
        if r.results:
            facts.append(r.clause.head_query)
            facts.extend(res.witness for res in r.results)
    facts.extend(p.head_query for p in report.propagated)
    for fact in facts:
        if fact.pred == query.pred and more_general(query, fact):
            return ("more general than", str(fact))
    for r in report.reports:
        for res in r.results:
            head = r.clause.head_query
            if head.pred != query.pred:
                continue
            if delta_more_general(query, head, res.filter):
                return ("filter-more-general than",
                        f"{head} under tau {_positions_str(res.positions)}")
    return None


def cmd_check(args) -> int:
    try:
        program = _load_program(args.file)
        query = parse_query(args.query, program)
    except ParseError as err:
        print(f"error: {err}", file=sys.stderr)
        return 2
    report = analyze_program(program, _options_from(args))
    try:
        proof = _proof_for(query, report)
    except ResourceLimitError as err:
        print(f"error: {err}", file=sys.stderr)
        return 3
    verdict = "LOOPS (proved)" if proof else "UNKNOWN"
    empirical: Optional[int] = None
    state = None
    if args.run > 0:
        state = run(query, program, args.run, project_stores=True,
                    keep_trace=args.trace)
        empirical = state.steps
    if args.json:
        payload = {
            "query": str(query),
            "verdict": verdict,
            "via": f"{proof[0]} {proof[1]}" if proof else None,
            "empirical_steps": empirical,
        }
        json.dump(payload, sys.stdout, indent=2)
        print()
    else:
        print(f"{query}: {verdict}")
        if proof:
            print(f"  {proof[0]} {proof[1]}")
        if empirical is not None:
            note = ("limit reached" if empirical >= args.run
                    else "derivation ended")
            print(f"  empirical: {empirical} steps ({note})")
        if args.trace and state is not None:
            for line in format_trace(state):
                print(f"  {line}")
    return 3 if report.had_resource_error else 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="clploop",
        description="Prove non-termination of queries to binary rules over "
                    "linear rational constraints.",
    )
    parser.add_argument("--version", action="version",
                        version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    pa = sub.add_parser("analyze", help="find looping queries for every clause")
    pa.add_argument("file", help="rule file")
    pa.add_argument("--json", action="store_true", help="machine readable report")
    pa.add_argument("--first-only", action="store_true",
                    help="stop at the first passing position set per clause")
    pa.add_argument("--verify-steps", type=int, default=100, metavar="K",
                    help="derivation steps each witness must survive "
                         "(0 disables the runtime check; default 100)")
    pa.add_argument("--trace", action="store_true",
                    help="print the verification derivation of each witness")
    pa.add_argument("--max-dnf", type=int,
                    default=linarith.DEFAULT_DNF_LIMIT, metavar="N",
                    help="disjunct ceiling for the elimination backend")
    pa.add_argument("--no-propagate", action="store_true",
                    help="skip the cross-clause propagation pass")
    pa.set_defaults(func=cmd_analyze)

    pc = sub.add_parser("check", help="decide whether one query provably loops")
    pc.add_argument("file", help="rule file")
    pc.add_argument("--query", required=True, metavar="Q",
                    help='query text, e.g. "p(0, X) : X >= 1"')
    pc.add_argument("--run", type=int, default=0, metavar="K",
                    help="also run the query for up to K derivation steps")
    pc.add_argument("--json", action="store_true", help="machine readable verdict")
    pc.add_argument("--trace", action="store_true",
                    help="with --run, print the derivation steps")
    pc.add_argument("--verify-steps", type=int, default=100, metavar="K",
                    help="witness verification steps for the underlying analysis")
    pc.add_argument("--max-dnf", type=int,
                    default=linarith.DEFAULT_DNF_LIMIT, metavar="N",
                    help="disjunct ceiling for the elimination backend")
    pc.set_defaults(func=cmd_check)
    return parser


def main(argv: Optional[list[str]] = None) -> int:
    args = build_parser().parse_args(argv)
    return args.func(args)


if __name__ == "__main__":
    sys.exit(main())
