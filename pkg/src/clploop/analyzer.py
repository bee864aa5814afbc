"""Search for looping queries of binary recursive rules.

For each subset m of a recursive rule's head positions, the analyzer builds
the candidate filter whose positions are m and whose condition query is the
rule constraint existentially projected onto the m-selected head variables.
If the filter is derivation neutral for the rule and the rule's body query is
filter-more-general than its head query, then the head query loops; a ground
witness is built by sampling the condition constraint at the filtered
positions, and every reported query is validated by actually running the
derivation engine for a configurable number of steps.  No unverified looping
claim ever reaches a report.

The set of passing position subsets is closed downward under inclusion (a
neutral filter stays neutral when positions are dropped), which the reports
expose as "non-terminating classes".  A separate propagation pass extends
looping facts through non-recursive rules: if a rule's body query is more
general than a known looping query, its head query loops as well.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field
from typing import Optional

from . import linarith
from .engine import run
from .filters import (
    Filter,
    PositionSet,
    delta_more_general,
    more_general,
    select_positions,
)
from .linarith import ResourceLimitError
from .neutral import neutrality_body_formula, neutrality_head_formula
from .syntax import Atom, Clause, LinTerm, Program, Query


@dataclass(frozen=True)
class AnalyzeOptions:
    first_only: bool = False
    verify_steps: int = 100
    max_dnf: int = linarith.DEFAULT_DNF_LIMIT
    propagate: bool = True


@dataclass(frozen=True)
class SubsetCheck:
    """Diagnostics for one position subset: which side of the neutrality
    criterion held, and whether the body query subsumed the head query.
    Unevaluated checks are None; ``error`` carries a resource-limit message."""

    positions: frozenset[int]
    head_ok: Optional[bool] = None
    body_ok: Optional[bool] = None
    subsumes: Optional[bool] = None
    error: Optional[str] = None

    @property
    def passed(self) -> bool:
        return bool(self.head_ok and self.body_ok and self.subsumes)

    @property
    def failed_condition(self) -> Optional[str]:
        """Name of the first failing check: 'head', 'body', 'subsumes'."""
        if self.head_ok is False:
            return "head"
        if self.body_ok is False:
            return "body"
        if self.subsumes is False:
            return "subsumes"
        return None


@dataclass(frozen=True)
class FilterResult:
    """One passing position subset with its condition query and a verified
    looping witness."""

    positions: frozenset[int]
    filter: Filter
    delta: Query
    witness: Query
    verified_steps: int


@dataclass(frozen=True)
class ClauseReport:
    index: int
    clause: Clause
    results: tuple[FilterResult, ...] = ()
    checks: tuple[SubsetCheck, ...] = ()
    classes: frozenset[frozenset[int]] = frozenset()

    @property
    def status(self) -> str:
        return "looping" if self.results else "none found"

    @property
    def errors(self) -> tuple[str, ...]:
        return tuple(c.error for c in self.checks if c.error)


@dataclass(frozen=True)
class PropagatedLoop:
    index: int
    head_query: Query
    via: Query


@dataclass(frozen=True)
class ProgramReport:
    reports: tuple[ClauseReport, ...]
    propagated: tuple[PropagatedLoop, ...] = ()

    @property
    def had_resource_error(self) -> bool:
        return any(r.errors for r in self.reports)


def candidate_filter(rule: Clause, positions: frozenset[int],
                     limit: int = linarith.DEFAULT_DNF_LIMIT) -> Filter:
    """The projection filter for a recursive rule and a head position subset:
    the condition query keeps the selected head variables and projects the
    rule constraint onto them."""
    if not rule.is_recursive():
        raise ValueError("candidate filters are defined for recursive rules only")
    pred = rule.head_pred
    selected = select_positions(rule.head_vars, positions)
    tau = PositionSet.of({pred: positions})
    condition = Query(
        Atom(
            _projected(pred, positions),
            tuple(LinTerm.of_var(v) for v in selected),
        ),
        linarith.project(rule.constraint, selected, limit),
    )
    return Filter.make(tau, {pred: condition})


def _projected(pred, positions):
    from .filters import projected_pred

    return projected_pred(pred, positions)


def make_witness(filt: Filter, rule: Clause,
                 limit: int = linarith.DEFAULT_DNF_LIMIT) -> Query:
    """A concrete looping query for a passing filter: constants sampled from
    the condition constraint at the filtered positions, head variables kept
    elsewhere, the rule constraint projected onto the kept variables.  Falls
    back to the rule's head query (itself proved looping) if the generality
    check for the constructed candidate does not go through."""
    pred = rule.head_pred
    tau = filt.positions.get(pred)
    condition = filt.condition(pred)
    selected = select_positions(rule.head_vars, tau)
    values = linarith.sample_solution(
        condition.constraint, variables=condition.atom.variables, limit=limit
    )
    if values is None:
        raise AssertionError("filter condition constraints are satisfiable by construction")
    by_position = dict(zip(sorted(tau), condition.atom.args))
    kept = filt.positions.complement_for(pred)
    args: list[LinTerm] = []
    for i, v in enumerate(rule.head_vars, start=1):
        if i in tau:
            args.append(LinTerm.of_const(by_position[i].eval(values)))
        else:
            args.append(LinTerm.of_var(v))
    candidate = Query(
        Atom(pred, tuple(args)),
        linarith.project(rule.constraint, select_positions(rule.head_vars, kept), limit),
    )
    if delta_more_general(candidate, rule.head_query, filt, limit):
        return candidate
    return rule.head_query


def class_closure(passing: set[frozenset[int]]) -> frozenset[frozenset[int]]:
    """Downward closure under inclusion of the passing position subsets."""
    out: set[frozenset[int]] = set()
    for m in passing:
        for size in range(len(m) + 1):
            out.update(frozenset(sub) for sub in itertools.combinations(sorted(m), size))
    return frozenset(out)


def find_looping_queries(rule: Clause, index: int = 0,
                         opts: AnalyzeOptions = AnalyzeOptions()) -> ClauseReport:
    """Scan position subsets in decreasing cardinality (lexicographic within a
    cardinality) and collect every passing filter with a verified witness.
    Non-recursive rules yield an empty report; resource-limit errors are
    recorded per subset and the scan continues."""
    if not rule.is_recursive():
        return ClauseReport(index=index, clause=rule)
    arity = rule.head_pred.arity
    checks: list[SubsetCheck] = []
    results: list[FilterResult] = []
    done = False
    for size in range(arity, -1, -1):
        if done:
            break
        for combo in itertools.combinations(range(1, arity + 1), size):
            m = frozenset(combo)
            try:
                filt = candidate_filter(rule, m, opts.max_dnf)
                head_ok = linarith.decide(
                    neutrality_head_formula(filt, rule), opts.max_dnf)
                body_ok = linarith.decide(
                    neutrality_body_formula(filt, rule), opts.max_dnf)
                subsumes = None
                if head_ok and body_ok:
                    subsumes = delta_more_general(
                        rule.body_query, rule.head_query, filt, opts.max_dnf)
                check = SubsetCheck(m, head_ok, body_ok, subsumes)
            except ResourceLimitError as err:
                checks.append(SubsetCheck(m, error=str(err)))
                continue
            checks.append(check)
            if not check.passed:
                continue
            witness = make_witness(filt, rule, opts.max_dnf)
            verified = 0
            if opts.verify_steps > 0:
                state = run(
                    witness,
                    Program((rule,)),
                    opts.verify_steps,
                    project_stores=True,
                )
                verified = state.steps
                if verified < opts.verify_steps:
                    raise AssertionError(
                        f"witness {witness} failed engine validation after "
                        f"{verified} steps; the neutrality criterion is sound, "
                        f"so this indicates an implementation bug")
            results.append(FilterResult(m, filt, filt.condition(rule.head_pred),
                                        witness, verified))
            if opts.first_only:
                done = True
                break
    classes = class_closure({r.positions for r in results})
    return ClauseReport(index=index, clause=rule, results=tuple(results),
                        checks=tuple(checks), classes=classes)


def propagate(program: Program,
              reports: tuple[ClauseReport, ...]) -> tuple[PropagatedLoop, ...]:
    """Close looping facts under the rules: whenever a rule's body query is
    more general than a known looping query, its head query loops too.  Known
    facts start from the verified witnesses and head queries of directly
    looping rules; the pass iterates to a fixpoint (at most one new head query
    per rule)."""
    known: list[Query] = []
    have_head: set[int] = set()
    for r in reports:
        if r.results:
            have_head.add(r.index)
            known.append(r.clause.head_query)
            for res in r.results:
                if res.witness not in known:
                    known.append(res.witness)
    out: list[PropagatedLoop] = []
    changed = True
    while changed:
        changed = False
        for index, rule in enumerate(program.clauses):
            if index in have_head:
                continue
            body_q = rule.body_query
            for fact in known:
                if fact.pred != rule.body_pred:
                    continue
                if more_general(body_q, fact):
                    head_q = rule.head_query
                    known.append(head_q)
                    have_head.add(index)
                    out.append(PropagatedLoop(index, head_q, via=fact))
                    changed = True
                    break
    return tuple(out)


def analyze_program(program: Program,
                    opts: AnalyzeOptions = AnalyzeOptions()) -> ProgramReport:
    reports = tuple(
        find_looping_queries(rule, index, opts)
        for index, rule in enumerate(program.clauses)
    )
    propagated: tuple[PropagatedLoop, ...] = ()
    if opts.propagate:
        propagated = propagate(program, reports)
    return ProgramReport(reports=reports, propagated=propagated)
