"""Scoring for the three evaluation families: fact-verification accuracy,
contrast-pair coherence, and normalized exact-match QA, plus the
inference-time graph labeler that solves a deduction graph per test claim
instead of fine-tuning anything.
"""

from __future__ import annotations

import string
from dataclasses import dataclass
from typing import Iterable, Mapping, Optional

from .generation import GenerationConfig, generate_children
from .lm import CompletionClient, truth_probability
from .solver import ScoredGraph, best_assignment
from .statements import DeductionGraph, Statement
from .templates import PromptTemplate, load_templates


class EvalContractError(ValueError):
    pass


@dataclass(frozen=True)
class LabeledClaim:
    text: str
    gold: bool
    pair_id: Optional[str] = None


@dataclass(frozen=True)
class QAItem:
    question: str
    gold_answers: tuple[str, ...]
    direction: str = "same"  # or "reverse", for reversal evaluations

    def __post_init__(self):
        if not self.gold_answers:
            raise ValueError("gold_answers must be non-empty")


def verification_accuracy(
    predictions: Mapping[str, bool], golds: Iterable[LabeledClaim]
) -> float:
    """Fraction of claims labeled correctly. Predictions must cover all golds."""
    golds = list(golds)
    correct = 0
    for claim in golds:
        if claim.text not in predictions:
            raise EvalContractError(f"missing prediction for claim {claim.text!r}")
        correct += predictions[claim.text] == claim.gold
    return correct / len(golds)


def contrast_metrics(
    predictions: Mapping[str, bool], golds: Iterable[LabeledClaim]
) -> dict[str, float]:
    """Coherence metrics over contrast pairs.

    both_true: fraction of pairs with both claims predicted true (incoherence,
    since paired golds are opposite by construction). both_correct: fraction
    with both predictions matching gold. accuracy: per-claim mean.
    """
    golds = list(golds)
    pairs: dict[str, list[LabeledClaim]] = {}
    for claim in golds:
        if claim.pair_id is None:
            raise EvalContractError(f"claim {claim.text!r} has no pair_id")
        pairs.setdefault(claim.pair_id, []).append(claim)
    for pair_id, members in pairs.items():
        if len(members) != 2:
            raise EvalContractError(f"pair {pair_id!r} has {len(members)} claims, expected 2")
        if members[0].gold == members[1].gold:
            raise EvalContractError(f"pair {pair_id!r} does not have opposite gold labels")

    both_true = 0
    both_correct = 0
    correct = 0
    for claim in golds:
        if claim.text not in predictions:
            raise EvalContractError(f"missing prediction for claim {claim.text!r}")
        correct += predictions[claim.text] == claim.gold
    for members in pairs.values():
        preds = [predictions[c.text] for c in members]
        both_true += all(preds)
        both_correct += all(predictions[c.text] == c.gold for c in members)
    n_pairs = len(pairs)
    return {
        "both_true": both_true / n_pairs,
        "both_correct": both_correct / n_pairs,
        "accuracy": correct / len(golds),
    }


_PUNCT_TABLE = str.maketrans("", "", string.punctuation)


def normalize_answer(text: str) -> str:
    """Lowercase, strip ASCII punctuation, collapse whitespace."""
    return " ".join(text.lower().translate(_PUNCT_TABLE).split())


def exact_match(candidate: str, golds: Iterable[str]) -> bool:
    """Normalized exact match against any gold answer."""
    normalized = normalize_answer(candidate)
    return any(normalized == normalize_answer(gold) for gold in golds)


def truth_label(
    lm: CompletionClient,
    text: str,
    *,
    templates: dict[str, PromptTemplate] | None = None,
    threshold: float = 0.5,
) -> bool:
    """Label one claim: truth probability from label logits, thresholded."""
    templates = templates or load_templates()
    prompt = templates["truth-value"].render(claim=text)
    return truth_probability(lm, text, prompt).p_true >= threshold


def graph_inference_label(
    lm: CompletionClient,
    claim: str,
    *,
    cfg: GenerationConfig = GenerationConfig(),
    templates: dict[str, PromptTemplate] | None = None,
) -> bool:
    """Inference-time labeling: build the claim's deduction graph, score every
    statement's truth prior, solve, and return the seed's assigned value.
    No training artifacts are produced.
    """
    templates = templates or load_templates()
    seed = Statement(id="0", text=claim, kind="seed", origin="external")
    implications = generate_children(lm, seed, "implies", cfg=cfg, templates=templates)
    contradictions = generate_children(
        lm, seed, "contradicts", cfg=cfg, templates=templates,
        start_index=len(implications) + 1,
    )
    graph = DeductionGraph(
        seed=seed,
        implications=tuple(implications),
        contradictions=tuple(contradictions),
        seed_fixed_true=False,
    )
    truth_template = templates["truth-value"]
    priors = {
        stmt.id: truth_probability(
            lm, stmt.text, truth_template.render(claim=stmt.text)
        ).p_true
        for stmt in graph.statements()
    }
    result = best_assignment(ScoredGraph(graph=graph, priors=priors))
    return result.assignment[seed.id]
