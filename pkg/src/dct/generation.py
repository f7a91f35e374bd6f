"""Turning seed statements into deduction graphs by prompting.

Generators render a template, sample one completion, parse the numbered
list, and mint child statements. Sampling defaults to temperature 0.6 /
top-p 0.9. Within one seed the calls are sequential so ids and order stay
deterministic; distinct seeds may be generated concurrently.
"""

from __future__ import annotations

import logging
import re
from dataclasses import dataclass
from typing import Optional

from .lm import (
    CompletionClient,
    SamplingParams,
    UnparseableVerdictError,
    verdict_probability,
)
from .statements import Statement
from .templates import EXPECTED_ITEMS, PromptTemplate, load_templates

log = logging.getLogger(__name__)

RELATION_KINDS = {"implies": "implication", "contradicts": "contradiction"}
RELATION_TEMPLATES = {"implies": "implication", "contradicts": "contradiction"}

#: Per child kind: double-check template and its (positive, negative) markers.
DOUBLE_CHECK_MARKERS = {
    "implication": ("double-check-implication", "Implies", "Does not imply"),
    "contradiction": ("double-check-contradiction", "Contradictory", "Not contradictory"),
}

_ITEM_RE = re.compile(r"^\s*\d+\s*[.)]\s*(.*)$")

_default_templates: dict[str, PromptTemplate] | None = None


def default_templates() -> dict[str, PromptTemplate]:
    global _default_templates
    if _default_templates is None:
        _default_templates = load_templates()
    return _default_templates


class ConversionError(Exception):
    """Statement-to-question conversion produced nothing usable."""


@dataclass(frozen=True)
class GenerationConfig:
    sampling: SamplingParams = SamplingParams()
    n_expected: Optional[int] = None
    dedupe: bool = True

    def __post_init__(self):
        if self.n_expected is not None and self.n_expected < 1:
            raise ValueError(f"n_expected must be >= 1, got {self.n_expected}")


def parse_numbered_list(text: str) -> list[str]:
    """Items of a "1. ..." / "2) ..." list, stopping at the next section.

    A blank line followed by a non-numbered line ends the list (that is where
    the model starts hallucinating the next prompt section). Unnumbered lines
    and empty items are dropped.
    """
    items: list[str] = []
    lines = text.splitlines()
    i = 0
    while i < len(lines):
        line = lines[i]
        if not line.strip():
            j = i + 1
            while j < len(lines) and not lines[j].strip():
                j += 1
            if j >= len(lines) or not _ITEM_RE.match(lines[j]):
                break
            i = j
            continue
        match = _ITEM_RE.match(line)
        if match:
            item = match.group(1).strip()
            if item:
                items.append(item)
        i += 1
    return items


def _dedupe(items: list[str]) -> list[str]:
    seen: set[str] = set()
    out = []
    for item in items:
        if item not in seen:
            seen.add(item)
            out.append(item)
    return out


def _cap(items: list[str], n_expected: Optional[int], context: str) -> list[str]:
    if n_expected is not None and len(items) > n_expected:
        log.warning("%s returned %d items, keeping the first %d", context, len(items), n_expected)
        return items[:n_expected]
    return items


def generate_children(
    lm: CompletionClient,
    seed: Statement,
    relation: str,
    template: PromptTemplate | None = None,
    cfg: GenerationConfig = GenerationConfig(),
    *,
    templates: dict[str, PromptTemplate] | None = None,
    start_index: int = 1,
) -> list[Statement]:
    """Sample implication or contradiction children for one seed.

    Children get kind matching ``relation``, parent = seed.id, and ids
    ``{seed.id}.{k}`` counting from ``start_index``.
    """
    if relation not in RELATION_KINDS:
        raise ValueError(f"relation must be one of {tuple(RELATION_KINDS)}, got {relation!r}")
    templates = templates or default_templates()
    if template is None:
        template = templates[RELATION_TEMPLATES[relation]]
    prompt = template.render(claim=seed.text)
    completion = lm.complete(prompt, cfg.sampling)
    items = parse_numbered_list(completion.text)
    if cfg.dedupe:
        items = _dedupe(items)
    n_expected = cfg.n_expected if cfg.n_expected is not None else EXPECTED_ITEMS.get(template.name)
    items = _cap(items, n_expected, f"{template.name} for seed {seed.id}")
    if not items:
        log.warning("empty generation: %s for seed %s yielded no parseable items",
                    template.name, seed.id)
    kind = RELATION_KINDS[relation]
    return [
        Statement(id=f"{seed.id}.{start_index + i}", text=item, kind=kind,
                  parent=seed.id, origin="lm-sampled")
        for i, item in enumerate(items)
    ]


def generate_correlative(
    lm: CompletionClient,
    seed: Statement,
    cfg: GenerationConfig = GenerationConfig(),
    *,
    templates: dict[str, PromptTemplate] | None = None,
    start_index: int = 1,
    meta: dict | None = None,
) -> list[Statement]:
    """Implications that combine the seed with model-supplied background facts.

    Only the "Implications:" section becomes children; the related-facts
    section is stored in ``meta['related_facts']`` (when a dict is passed)
    and never emitted as statements.
    """
    templates = templates or default_templates()
    template = templates["correlative-implication"]
    prompt = template.render(claim=seed.text)
    completion = lm.complete(prompt, cfg.sampling)
    facts_text, header, implications_text = completion.text.partition("Implications:")
    if not header:
        log.warning("empty generation: no 'Implications:' header for seed %s", seed.id)
        return []
    facts = parse_numbered_list(facts_text)
    if meta is not None:
        meta.setdefault("related_facts", []).extend(facts)
    items = parse_numbered_list(implications_text)
    if cfg.dedupe:
        items = _dedupe(items)
    n_expected = cfg.n_expected if cfg.n_expected is not None else EXPECTED_ITEMS[template.name]
    items = _cap(items, n_expected, f"correlative implications for seed {seed.id}")
    if not items:
        log.warning("empty generation: correlative implications for seed %s", seed.id)
    return [
        Statement(id=f"{seed.id}.{start_index + i}", text=item, kind="implication",
                  parent=seed.id, origin="lm-sampled")
        for i, item in enumerate(items)
    ]


def generate_related(
    lm: CompletionClient,
    seed: Statement,
    cfg: GenerationConfig = GenerationConfig(),
    *,
    templates: dict[str, PromptTemplate] | None = None,
) -> list[Statement]:
    """Related claims around an (unlabeled) input claim.

    Children carry kind=related and the source claim's id as parent; the
    pipeline promotes each one to the seed of its own graph. A related claim
    that repeats the input text verbatim is kept (it gets a distinct id).
    """
    templates = templates or default_templates()
    template = templates["related-claims"]
    prompt = template.render(claim=seed.text)
    completion = lm.complete(prompt, cfg.sampling)
    items = parse_numbered_list(completion.text)
    if cfg.dedupe:
        items = _dedupe(items)
    n_expected = cfg.n_expected if cfg.n_expected is not None else EXPECTED_ITEMS[template.name]
    items = _cap(items, n_expected, f"related claims for {seed.id}")
    if not items:
        log.warning("empty generation: related claims for %s", seed.id)
    return [
        Statement(id=f"{seed.id}.r{i + 1}", text=item, kind="related",
                  parent=seed.id, origin="lm-sampled")
        for i, item in enumerate(items)
    ]


def generate_seed_claims(
    lm: CompletionClient,
    n_queries: int,
    per_query: int,
    cfg: GenerationConfig = GenerationConfig(),
    *,
    templates: dict[str, PromptTemplate] | None = None,
) -> list[Statement]:
    """Sample seed claims from the model itself (unsupervised seeding).

    Queries the model ``n_queries`` times for up to ``per_query`` claims each
    and filters exact duplicates across the whole batch.
    """
    if n_queries < 1 or per_query < 1:
        raise ValueError("n_queries and per_query must be >= 1")
    templates = templates or default_templates()
    prompt = templates["seed-claims"].body  # no placeholder
    collected: list[str] = []
    for q in range(n_queries):
        completion = lm.complete(prompt, cfg.sampling)
        # the prompt already contains the "1." prefix for the first item
        items = parse_numbered_list("1." + completion.text)
        items = _cap(items, per_query, f"seed-claims query {q + 1}")
        if not items:
            log.warning("empty generation: seed-claims query %d yielded nothing", q + 1)
        collected.extend(items)
    deduped = _dedupe(collected)
    if len(deduped) < len(collected):
        log.info("seed claims: filtered %d duplicate(s)", len(collected) - len(deduped))
    return [
        Statement(id=str(i), text=item, kind="seed", origin="lm-sampled")
        for i, item in enumerate(deduped)
    ]


def double_check(
    lm: CompletionClient,
    seed: Statement,
    child: Statement,
    threshold: float = 0.5,
    *,
    templates: dict[str, PromptTemplate] | None = None,
) -> bool:
    """Second-pass verification of one generated relation: keep or discard.

    Keeps the child iff the model's verdict probability for the
    relation-appropriate positive marker reaches ``threshold``. An
    unparseable verdict discards the child (conservative: the double-check
    exists to trade recall for precision).
    """
    if child.kind not in DOUBLE_CHECK_MARKERS:
        raise ValueError(f"double_check applies to implication/contradiction children, "
                         f"got kind {child.kind!r}")
    templates = templates or default_templates()
    template_name, positive, negative = DOUBLE_CHECK_MARKERS[child.kind]
    prompt = templates[template_name].render(claim1=seed.text, claim2=child.text)
    try:
        p = verdict_probability(lm, prompt, positive, negative)
    except UnparseableVerdictError as exc:
        log.warning("double-check verdict unparseable for child %s (%s); discarding",
                    child.id, exc)
        return False
    return p >= threshold


def to_question(
    lm: CompletionClient,
    statement: Statement,
    cfg: GenerationConfig = GenerationConfig(),
    *,
    templates: dict[str, PromptTemplate] | None = None,
) -> tuple[str, str]:
    """Convert a statement into a (question, answer) pair.

    The question is the model's completion under the conversion template; the
    answer re-uses the original statement text.
    """
    if not statement.text.strip():
        raise ConversionError(f"statement {statement.id!r} has no text to convert")
    templates = templates or default_templates()
    prompt = templates["qa-conversion"].render(sentence=statement.text)
    completion = lm.complete(prompt, cfg.sampling)
    question = completion.text.strip().splitlines()[0].strip() if completion.text.strip() else ""
    if not question:
        raise ConversionError(f"empty question completion for statement {statement.id!r}: "
                              f"{statement.text!r}")
    return question, statement.text
