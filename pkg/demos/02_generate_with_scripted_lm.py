"""Generation against a scripted model: expansion, double-check, scoring.

Every generator talks to the model through one interface, so a fingerprint-
keyed mock makes the whole stage deterministic. The script below answers
each prompt with the template's own worked exemplar.
"""

import math

from dct import (
    GenerationConfig,
    ScriptedLM,
    Statement,
    double_check,
    generate_children,
    load_templates,
    truth_probability,
    verdict_probability,
)
from dct.templates import exemplar_completion

templates = load_templates()
claim = "Cleopatra was the last active ruler of the Ptolemaic Kingdom of Egypt between 51 to 30 BC."
seed = Statement(id="0", text=claim, kind="seed")

# ---------------------------------------------------------------------------
# Script the mock: exemplar completions for the two expansion prompts, a
# double-check verdict, and label logits for truth scoring.

mock = ScriptedLM()
mock.add(templates["implication"].render(claim=claim),
         exemplar_completion("implication"))
mock.add(templates["contradiction"].render(claim=claim),
         exemplar_completion("contradiction"))

implications = generate_children(mock, seed, "implies")
contradictions = generate_children(mock, seed, "contradicts",
                                   start_index=len(implications) + 1)
print("implications:")
for child in implications:
    print(f"  {child.id}  {child.text}")
print("contradictions:")
for child in contradictions:
    print(f"  {child.id}  {child.text}")

# ---------------------------------------------------------------------------
# Double-check one implication: a second pass asks the model whether the
# relation actually holds, and low-confidence children are discarded.

check_prompt = templates["double-check-implication"].render(
    claim1=claim, claim2=implications[0].text)
mock.add(check_prompt, " The claim names her as a ruler.\nFinal Verdict: Implies.")
print("\nverdict p =", verdict_probability(mock, check_prompt, "Implies", "Does not imply"))
print("keep child:", double_check(mock, seed, implications[0]))

# ---------------------------------------------------------------------------
# Truth scoring reads the label-token logits behind "Label:"; the scripted
# entry supplies them the way a live endpoint would.

truth_prompt = templates["truth-value"].render(claim=claim)
mock.add(truth_prompt, " true",
         top_logprobs={" true": math.log(0.82), " false": math.log(0.18)})
score = truth_probability(mock, claim, truth_prompt)
print(f"\np_true({claim[:40]}...) = {score.p_true:.3f}")

# The same script replayed gives byte-identical results.
replay = generate_children(mock, seed, "implies", cfg=GenerationConfig())
print("replay deterministic:", [c.text for c in replay] == [c.text for c in implications])
