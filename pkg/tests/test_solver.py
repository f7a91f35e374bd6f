import math

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from conftest import star_graph
from dct.solver import (
    ScoredGraph,
    SolverContractError,
    assignment_probability,
    best_assignment,
    brute_force_best,
    closed_form_best,
    consistency,
)
from dct.statements import TruthAssignment

# The 8-row truth table for one seed, one implication, one contradiction:
# (seed, implication, contradiction) -> consistency indicator.
CONSISTENCY_TABLE = [
    ((True, True, True), 0),
    ((True, True, False), 1),
    ((True, False, True), 0),
    ((True, False, False), 0),
    ((False, True, True), 1),
    ((False, True, False), 1),
    ((False, False, True), 1),
    ((False, False, False), 1),
]


def assignment_for(sg, triple):
    ids = sg.graph.ids()
    return TruthAssignment(values=dict(zip(ids, triple)))


@pytest.mark.parametrize("triple,expected", CONSISTENCY_TABLE)
def test_consistency_truth_table(three_node_graph, triple, expected):
    assert consistency(three_node_graph.graph, assignment_for(three_node_graph, triple)) == expected


def test_consistency_coverage_error(three_node_graph):
    with pytest.raises(SolverContractError):
        consistency(three_node_graph.graph, TruthAssignment(values={"0": True}))


def test_assignment_probability_direct_product():
    sg = star_graph(0.9, (0.8,), (0.3,))
    p = assignment_probability(sg, assignment_for(sg, (True, True, False)))
    assert p == pytest.approx(0.9 * 0.8 * 0.7, abs=1e-15)


def test_assignment_probability_zero_prior_annihilates():
    sg = star_graph(0.9, (0.0,), ())
    assert assignment_probability(sg, assignment_for(sg, (True, True))) == 0.0


def test_assignment_probability_single_seed():
    sg = star_graph(0.6)
    assert assignment_probability(sg, assignment_for(sg, (True,))) == pytest.approx(0.6)


def test_assignment_probability_coverage_error():
    sg = star_graph(0.6, (0.5,))
    with pytest.raises(SolverContractError):
        assignment_probability(sg, TruthAssignment(values={"0": True}))


# -- the worked argmax examples ------------------------------------------------

def test_seed_relabeling_example(three_node_graph):
    # priors 0.2 / 0.9 / 0.9: the seed-false branch wins and the seed is
    # re-labeled false while both children stay true
    for solve in (best_assignment, brute_force_best, closed_form_best):
        result = solve(three_node_graph)
        assert [result.assignment[i] for i in three_node_graph.graph.ids()] == [False, True, True]
        assert result.score == pytest.approx(0.8 * 0.9 * 0.9, abs=1e-12)
        assert result.consistent


def test_seed_fixed_true_forces_structure():
    sg = star_graph(0.2, (0.9,), (0.9,), fixed=True)
    for solve in (best_assignment, brute_force_best, closed_form_best):
        result = solve(sg)
        assert [result.assignment[i] for i in sg.graph.ids()] == [True, True, False]
        assert result.score == pytest.approx(0.2 * 0.9 * 0.1, abs=1e-12)


def test_confident_seed_keeps_seed_true():
    sg = star_graph(0.99, (0.6,), (0.1,))
    result = closed_form_best(sg)
    assert [result.assignment[i] for i in sg.graph.ids()] == [True, True, False]
    assert result.score == pytest.approx(0.99 * 0.6 * 0.9, abs=1e-12)


def test_single_seed_tie_prefers_true():
    result = best_assignment(star_graph(0.5))
    assert result.assignment["0"] is True


def test_child_tie_prefers_true():
    sg = star_graph(0.01, (0.5,), (0.5,))
    result = closed_form_best(sg)
    assert result.assignment["0.1"] is True
    assert result.assignment["0.2"] is True
    assert result.assignment["0"] is False
    assert brute_force_best(sg).assignment == result.assignment


def test_zero_children_argmax_over_seed():
    assert best_assignment(star_graph(0.1)).assignment["0"] is False
    assert best_assignment(star_graph(0.9)).assignment["0"] is True


def test_n_candidates():
    sg = star_graph(0.2, (0.9,), (0.9,))
    assert brute_force_best(sg).n_candidates == 5  # the 5 consistent rows of the table
    assert closed_form_best(sg).n_candidates == 5  # 2^2 + 1
    fixed = star_graph(0.2, (0.9,), (0.9,), fixed=True)
    assert brute_force_best(fixed).n_candidates == 1
    assert closed_form_best(fixed).n_candidates == 1


def test_brute_force_size_refusal():
    sg = star_graph(0.5, tuple([0.5] * 12), tuple([0.5] * 9))  # 22 statements
    with pytest.raises(SolverContractError):
        brute_force_best(sg)


def test_invalid_prior_rejected():
    sg = star_graph(1.5)
    with pytest.raises(SolverContractError):
        best_assignment(sg)


def test_priors_must_cover_graph():
    sg = star_graph(0.5, (0.5,))
    broken = ScoredGraph(graph=sg.graph, priors={"0": 0.5})
    with pytest.raises(SolverContractError):
        best_assignment(broken)


# -- properties ----------------------------------------------------------------

@st.composite
def scored_graphs(draw):
    n_impl = draw(st.integers(min_value=0, max_value=4))
    n_contr = draw(st.integers(min_value=0, max_value=4))
    unit = st.floats(min_value=0.001, max_value=0.999)
    return star_graph(
        draw(unit),
        tuple(draw(st.lists(unit, min_size=n_impl, max_size=n_impl))),
        tuple(draw(st.lists(unit, min_size=n_contr, max_size=n_contr))),
        fixed=draw(st.booleans()),
    )


@settings(max_examples=200, deadline=None)
@given(scored_graphs())
def test_oracle_equivalence_property(sg):
    oracle = brute_force_best(sg)
    closed = closed_form_best(sg)
    assert oracle.assignment == closed.assignment
    assert abs(oracle.log_score - closed.log_score) <= 1e-12
    assert oracle.n_candidates == closed.n_candidates


@settings(max_examples=200, deadline=None)
@given(scored_graphs())
def test_solution_is_consistent_and_fixed_seed_forced(sg):
    result = best_assignment(sg)
    assert consistency(sg.graph, result.assignment) == 1
    if sg.graph.seed_fixed_true:
        assert result.assignment[sg.graph.seed.id] is True
        for child in sg.graph.implications:
            assert result.assignment[child.id] is True
        for child in sg.graph.contradictions:
            assert result.assignment[child.id] is False


@settings(max_examples=100, deadline=None)
@given(scored_graphs())
def test_monotone_pruning(sg):
    # removing any child never decreases the optimal score
    base = best_assignment(sg).log_score
    graph = sg.graph
    for drop in graph.children():
        impls = tuple(c for c in graph.implications if c.id != drop.id)
        contrs = tuple(c for c in graph.contradictions if c.id != drop.id)
        pruned = ScoredGraph(
            graph=type(graph)(seed=graph.seed, implications=impls, contradictions=contrs,
                              seed_fixed_true=graph.seed_fixed_true),
            priors={k: v for k, v in sg.priors.items() if k != drop.id},
        )
        assert best_assignment(pruned).log_score >= base - 1e-12


def test_reparameterization_preserves_seed_false_choices():
    # a strictly monotone map that keeps each child's (p, 1-p) ordering must
    # keep the seed-false branch's per-child argmax choices
    import dct.solver as solver

    priors = (0.2, 0.9, 0.4, 0.5, 0.7)
    gamma = 3.0

    def reparam(p):
        return p ** gamma / (p ** gamma + (1 - p) ** gamma)

    sg = star_graph(0.3, priors[:3], priors[3:])
    sg2 = star_graph(reparam(0.3), tuple(reparam(p) for p in priors[:3]),
                     tuple(reparam(p) for p in priors[3:]))
    (_, _), (false_values, _) = solver._branch_scores(sg)
    (_, _), (false_values2, _) = solver._branch_scores(sg2)
    assert false_values == false_values2


def test_log_score_matches_score():
    sg = star_graph(0.2, (0.9,), (0.9,))
    result = best_assignment(sg)
    assert result.score == pytest.approx(math.exp(result.log_score), rel=1e-15)
