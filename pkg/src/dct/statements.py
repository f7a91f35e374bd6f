"""Core data model: statements, typed relations, and per-seed deduction graphs.

A deduction graph is a star: one seed statement plus the implication and
contradiction children generated from it. All values are immutable after
construction and safe to share across workers.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Any, Iterator, Mapping, Optional

KINDS = ("seed", "implication", "contradiction", "related", "qa-pair")
ORIGINS = ("lm-sampled", "external", "derived")

#: Kinds that live inside a graph as children of the seed.
CHILD_KINDS = ("implication", "contradiction")


@dataclass(frozen=True)
class Statement:
    """One unit of text with an identity, a kind, and provenance.

    ``parent`` holds the id of the seed this statement was generated from;
    implication/contradiction children must have it, other kinds must not.
    ``truth_prior`` is an optional externally supplied probability that the
    text is true (model-estimated priors are attached later, at solve time).
    """

    id: str
    text: str
    kind: str
    parent: Optional[str] = None
    origin: str = "lm-sampled"
    truth_prior: Optional[float] = None


@dataclass(frozen=True)
class DeductionGraph:
    """One seed plus its generated children and their typed relations.

    ``seed_fixed_true`` pins the seed's truth value to true during solving,
    which is how supervised and editing seeds are handled.
    """

    seed: Statement
    implications: tuple[Statement, ...] = ()
    contradictions: tuple[Statement, ...] = ()
    seed_fixed_true: bool = False

    def statements(self) -> Iterator[Statement]:
        """Seed first, then implications, then contradictions (list order)."""
        yield self.seed
        yield from self.implications
        yield from self.contradictions

    def children(self) -> Iterator[Statement]:
        yield from self.implications
        yield from self.contradictions

    def ids(self) -> list[str]:
        return [s.id for s in self.statements()]

    def size(self) -> int:
        return 1 + len(self.implications) + len(self.contradictions)


@dataclass(frozen=True)
class TruthAssignment:
    """A truth value for every statement in one graph, keyed by statement id."""

    values: Mapping[str, bool]

    def __getitem__(self, statement_id: str) -> bool:
        return self.values[statement_id]

    def covers(self, graph: DeductionGraph) -> bool:
        return set(self.values) == set(graph.ids())


def _statement_violations(stmt: Statement, role: str) -> list[str]:
    out = []
    if not stmt.text.strip():
        out.append(f"{role} {stmt.id!r}: text is empty after trimming")
    if stmt.kind not in KINDS:
        out.append(f"{role} {stmt.id!r}: unknown kind {stmt.kind!r}")
    if stmt.origin not in ORIGINS:
        out.append(f"{role} {stmt.id!r}: unknown origin {stmt.origin!r}")
    if stmt.kind in CHILD_KINDS and stmt.parent is None:
        out.append(f"{role} {stmt.id!r}: kind {stmt.kind!r} requires a parent id")
    if stmt.kind not in CHILD_KINDS and stmt.parent is not None:
        out.append(f"{role} {stmt.id!r}: kind {stmt.kind!r} must not have a parent id")
    if stmt.truth_prior is not None and not (0.0 <= stmt.truth_prior <= 1.0):
        out.append(f"{role} {stmt.id!r}: truth_prior {stmt.truth_prior!r} outside [0, 1]")
    return out


def validate_graph(graph: DeductionGraph) -> list[str]:
    """Return every violated invariant as a human-readable description.

    An empty list certifies the graph is well-formed and solvable.
    Violations are data, not failures: nothing is raised.
    """
    violations = []

    if graph.seed.kind != "seed":
        violations.append(f"seed {graph.seed.id!r}: kind is {graph.seed.kind!r}, expected 'seed'")
    violations.extend(_statement_violations(graph.seed, "seed"))

    for expected_kind, group in (("implication", graph.implications),
                                 ("contradiction", graph.contradictions)):
        for child in group:
            if child.kind != expected_kind:
                violations.append(
                    f"child {child.id!r}: kind is {child.kind!r}, expected {expected_kind!r}"
                )
            violations.extend(_statement_violations(child, "child"))
            if child.parent is not None and child.parent != graph.seed.id:
                violations.append(
                    f"child {child.id!r}: parent {child.parent!r} does not match seed {graph.seed.id!r}"
                )

    seen: set[str] = set()
    for stmt in graph.statements():
        if stmt.id in seen:
            violations.append(f"duplicate statement id {stmt.id!r}")
        seen.add(stmt.id)

    return violations


# --- serialization ----------------------------------------------------------
# The persistence format is plain dicts/JSON; field order is pinned by
# sort_keys at dump time so round-trips are byte-identical.

def statement_to_dict(stmt: Statement) -> dict[str, Any]:
    return {
        "id": stmt.id,
        "text": stmt.text,
        "kind": stmt.kind,
        "parent": stmt.parent,
        "origin": stmt.origin,
        "truth_prior": stmt.truth_prior,
    }


def statement_from_dict(data: Mapping[str, Any]) -> Statement:
    return Statement(
        id=data["id"],
        text=data["text"],
        kind=data["kind"],
        parent=data.get("parent"),
        origin=data.get("origin", "lm-sampled"),
        truth_prior=data.get("truth_prior"),
    )


def graph_to_dict(graph: DeductionGraph) -> dict[str, Any]:
    return {
        "seed": statement_to_dict(graph.seed),
        "implications": [statement_to_dict(s) for s in graph.implications],
        "contradictions": [statement_to_dict(s) for s in graph.contradictions],
        "seed_fixed_true": graph.seed_fixed_true,
    }


def graph_from_dict(data: Mapping[str, Any]) -> DeductionGraph:
    return DeductionGraph(
        seed=statement_from_dict(data["seed"]),
        implications=tuple(statement_from_dict(d) for d in data.get("implications", [])),
        contradictions=tuple(statement_from_dict(d) for d in data.get("contradictions", [])),
        seed_fixed_true=bool(data.get("seed_fixed_true", False)),
    )
