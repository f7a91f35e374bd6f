import math

import pytest

from dct.solver import ScoredGraph
from dct.statements import DeductionGraph, Statement
from dct.templates import load_templates

TEMPLATES = load_templates()


def numbered(items):
    return "\n".join(f"{i + 1}. {text}" for i, text in enumerate(items))


def seed_claims_completion(items):
    # the seed-claims prompt already ends with "1.", so the completion
    # starts mid-item
    lines = [f" {items[0]}"] + [f"{i + 2}. {text}" for i, text in enumerate(items[1:])]
    return "\n".join(lines)


def add_truth(mock, text, p_true):
    """Script a truth-value scoring response whose two-way softmax is p_true."""
    prompt = TEMPLATES["truth-value"].render(claim=text)
    mock.add(prompt, " true", top_logprobs={
        " true": math.log(max(p_true, 1e-9)),
        " false": math.log(max(1.0 - p_true, 1e-9)),
    })


def add_children(mock, claim, items, template):
    mock.add(TEMPLATES[template].render(claim=claim), numbered(items))


def add_double_check(mock, seed_text, child_text, kind, verdict):
    template = ("double-check-implication" if kind == "implication"
                else "double-check-contradiction")
    prompt = TEMPLATES[template].render(claim1=seed_text, claim2=child_text)
    mock.add(prompt, f" Considering the pair.\nFinal Verdict: {verdict}.")


def add_question(mock, sentence, question):
    mock.add(TEMPLATES["qa-conversion"].render(sentence=sentence), f" {question}")


def star_graph(seed_prior, impl_priors=(), contr_priors=(), *, fixed=False, seed_id="0"):
    """A scored star graph with the given priors, ids seed_id / seed_id.k."""
    seed = Statement(id=seed_id, text="seed statement", kind="seed", origin="lm-sampled")
    impls = tuple(
        Statement(id=f"{seed_id}.{k + 1}", text=f"implication {k + 1}", kind="implication",
                  parent=seed_id)
        for k in range(len(impl_priors))
    )
    contrs = tuple(
        Statement(id=f"{seed_id}.{len(impl_priors) + k + 1}", text=f"contradiction {k + 1}",
                  kind="contradiction", parent=seed_id)
        for k in range(len(contr_priors))
    )
    graph = DeductionGraph(seed=seed, implications=impls, contradictions=contrs,
                           seed_fixed_true=fixed)
    priors = {seed_id: seed_prior}
    for stmt, p in zip(impls, impl_priors):
        priors[stmt.id] = p
    for stmt, p in zip(contrs, contr_priors):
        priors[stmt.id] = p
    return ScoredGraph(graph=graph, priors=priors)


@pytest.fixture
def three_node_graph():
    """One seed, one implication, one contradiction; the worked solver example."""
    return star_graph(0.2, (0.9,), (0.9,))
