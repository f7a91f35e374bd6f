"""Most-probable consistent truth assignment for a deduction graph.

The assignment probability is the product over statements of the truth prior
(if assigned true) or its complement (if false); an assignment is consistent
when every seed->implication and seed->contradiction constraint is respected.
A star graph makes the argmax linear-time: with the seed true the children
are forced, with the seed false each child is free and argmaxed on its own.

``brute_force_best`` is the enumeration oracle; ``closed_form_best`` is the
linear-time solve; ``best_assignment`` is the validated front door (it
dispatches to the closed form). All three agree exactly, including the
tie-break: prefer seed true, then prefer true per child in list order.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from itertools import product
from typing import Mapping

from .statements import DeductionGraph, TruthAssignment, validate_graph

#: Priors are clamped into [EPS, 1-EPS] inside the solvers so a hard 0/1
#: prior cannot annihilate log-space comparisons. assignment_probability
#: deliberately does not clamp.
EPS = 1e-9

BRUTE_FORCE_LIMIT = 20


class SolverContractError(ValueError):
    """A precondition violation: invalid graph or prior coverage mismatch."""


@dataclass(frozen=True)
class ScoredGraph:
    """A deduction graph plus a truth prior for every statement in it."""

    graph: DeductionGraph
    priors: Mapping[str, float]


@dataclass(frozen=True)
class SolveResult:
    assignment: TruthAssignment
    score: float
    log_score: float
    consistent: bool
    n_candidates: int


def _check_coverage(graph: DeductionGraph, values: Mapping[str, object], what: str) -> None:
    ids = set(graph.ids())
    got = set(values)
    if got != ids:
        missing = sorted(ids - got)
        extra = sorted(got - ids)
        raise SolverContractError(
            f"{what} do not cover the graph exactly (missing={missing}, extra={extra})"
        )


def _check_scored_graph(sg: ScoredGraph) -> None:
    violations = validate_graph(sg.graph)
    if violations:
        raise SolverContractError(f"invalid graph: {violations}")
    _check_coverage(sg.graph, sg.priors, "priors")
    for sid, p in sg.priors.items():
        if not (0.0 <= p <= 1.0):
            raise SolverContractError(f"prior for {sid!r} outside [0, 1]: {p}")


def consistency(graph: DeductionGraph, assignment: TruthAssignment) -> int:
    """1 iff every implication and contradiction constraint is respected.

    For an implication child c: seed true forces c true. For a contradiction
    child c: seed true forces c false. A false seed constrains nothing.
    """
    _check_coverage(graph, assignment.values, "assignment values")
    t_seed = assignment[graph.seed.id]
    for child in graph.implications:
        if t_seed and not assignment[child.id]:
            return 0
    for child in graph.contradictions:
        if t_seed and assignment[child.id]:
            return 0
    return 1


def _log_term(p: float, value: bool) -> float:
    q = p if value else 1.0 - p
    return math.log(q) if q > 0.0 else float("-inf")


def assignment_probability(sg: ScoredGraph, assignment: TruthAssignment) -> float:
    """Probability of one truth assignment: product over all statements
    (seed included) of prior if true, 1-prior if false. Computed in log
    space; a statement assigned true with prior 0 annihilates to 0.
    """
    _check_scored_graph(sg)
    _check_coverage(sg.graph, assignment.values, "assignment values")
    total = 0.0
    for stmt in sg.graph.statements():
        total += _log_term(sg.priors[stmt.id], assignment[stmt.id])
    return math.exp(total)


def _clamped_logs(sg: ScoredGraph) -> dict[str, tuple[float, float]]:
    """id -> (log p_true, log p_false) with priors clamped away from 0/1."""
    out = {}
    for sid, p in sg.priors.items():
        pc = min(max(p, EPS), 1.0 - EPS)
        out[sid] = (math.log(pc), math.log(1.0 - pc))
    return out


def _branch_scores(sg: ScoredGraph):
    """(seed-true branch, seed-false branch) as (values, log score) pairs.

    Seed true forces implications true and contradictions false; seed false
    leaves each child free, so each picks its own argmax (ties prefer true).
    """
    graph = sg.graph
    logs = _clamped_logs(sg)

    true_values = {graph.seed.id: True}
    true_log = logs[graph.seed.id][0]
    for child in graph.implications:
        true_values[child.id] = True
        true_log += logs[child.id][0]
    for child in graph.contradictions:
        true_values[child.id] = False
        true_log += logs[child.id][1]

    false_values = {graph.seed.id: False}
    false_log = logs[graph.seed.id][1]
    for child in graph.children():
        lt, lf = logs[child.id]
        pick_true = lt >= lf
        false_values[child.id] = pick_true
        false_log += lt if pick_true else lf
    return (true_values, true_log), (false_values, false_log)


def closed_form_best(sg: ScoredGraph) -> SolveResult:
    """Linear-time argmax over consistent assignments of a star graph."""
    _check_scored_graph(sg)
    (true_values, true_log), (false_values, false_log) = _branch_scores(sg)
    n_children = len(sg.graph.implications) + len(sg.graph.contradictions)
    if sg.graph.seed_fixed_true:
        values, best_log = true_values, true_log
        n_candidates = 1
    else:
        # tie prefers the seed-true branch
        if true_log >= false_log:
            values, best_log = true_values, true_log
        else:
            values, best_log = false_values, false_log
        n_candidates = 2 ** n_children + 1
    return SolveResult(
        assignment=TruthAssignment(values=values),
        score=math.exp(best_log),
        log_score=best_log,
        consistent=True,
        n_candidates=n_candidates,
    )


def best_assignment(sg: ScoredGraph) -> SolveResult:
    """The most probable consistent assignment (argmax of score * consistency).

    With ``seed_fixed_true`` only seed-true assignments are candidates, which
    forces every implication true and every contradiction false.
    """
    return closed_form_best(sg)


def brute_force_best(sg: ScoredGraph) -> SolveResult:
    """Enumeration oracle: all 2^n assignments, filtered by consistency.

    Assignments are visited in tie-break preference order (seed true first,
    then each child true-first in list order), keeping strict improvements
    only, so ties resolve identically to the closed form. Refuses graphs
    beyond 20 statements.
    """
    _check_scored_graph(sg)
    graph = sg.graph
    n = graph.size()
    if n > BRUTE_FORCE_LIMIT:
        raise SolverContractError(
            f"brute force refuses graphs over {BRUTE_FORCE_LIMIT} statements (got {n})"
        )
    logs = _clamped_logs(sg)
    order = list(graph.statements())
    # statement order is seed, implications, contradictions
    log_pairs = [logs[stmt.id] for stmt in order]
    first_contr = 1 + len(graph.implications)

    best_combo = None
    best_log = float("-inf")
    n_candidates = 0
    # product((True, False), ...) runs preference-first: all-true comes first
    for combo in product((True, False), repeat=n):
        if combo[0]:
            # seed true: every implication must be true, every contradiction false
            if not all(combo[1:first_contr]) or any(combo[first_contr:]):
                continue
        elif graph.seed_fixed_true:
            continue
        n_candidates += 1
        total = 0.0
        for pair, value in zip(log_pairs, combo):
            total += pair[0] if value else pair[1]
        if total > best_log:
            best_log = total
            best_combo = combo
    assert best_combo is not None, "a star graph always has a consistent assignment"
    best_values = {stmt.id: value for stmt, value in zip(order, best_combo)}
    return SolveResult(
        assignment=TruthAssignment(values=best_values),
        score=math.exp(best_log),
        log_score=best_log,
        consistent=True,
        n_candidates=n_candidates,
    )
