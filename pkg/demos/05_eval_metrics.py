"""Evaluation metrics and the inference-time graph labeler.

Three scoring families: plain verification accuracy, contrast-pair coherence
(are two lexically similar opposite-truth claims ever both called true?),
and punctuation/case-insensitive exact match for QA. The graph-inference
labeler classifies a claim by building and solving its deduction graph at
inference time, with no training at all.
"""

import math

from dct import ScriptedLM, load_templates
from dct.evalharness import (
    LabeledClaim,
    contrast_metrics,
    exact_match,
    graph_inference_label,
    verification_accuracy,
)

templates = load_templates()

# ---------------------------------------------------------------------------
# Verification accuracy over labeled claims.

golds = [
    LabeledClaim("Zendaya was raised in the US.", True, pair_id="zendaya"),
    LabeledClaim("Zendaya was raised in Scotland.", False, pair_id="zendaya"),
    LabeledClaim("Budapest is the capital of Hungary.", True, pair_id="budapest"),
    LabeledClaim("Budapest is the capital of Austria.", False, pair_id="budapest"),
]
predictions = {
    "Zendaya was raised in the US.": True,
    "Zendaya was raised in Scotland.": True,   # incoherent: both sides true
    "Budapest is the capital of Hungary.": True,
    "Budapest is the capital of Austria.": False,
}
print("accuracy:", verification_accuracy(predictions, golds))
print("contrast:", contrast_metrics(predictions, golds))

# ---------------------------------------------------------------------------
# Exact match normalizes case, punctuation, and whitespace on both sides.

for candidate in ("Jennifer Lawrence.", "jennifer  LAWRENCE", "Karen Lawrence"):
    print(f"exact_match({candidate!r}) =", exact_match(candidate, ["jennifer lawrence"]))

# ---------------------------------------------------------------------------
# Graph-inference labeling: expand the claim, score priors, solve, read off
# the seed's assigned value. Here the scripted model believes the
# contradiction far more than the claim, so the claim comes out false.

claim = "The Great Wall of China is visible from the Moon."
mock = ScriptedLM()
mock.add(templates["implication"].render(claim=claim),
         "1. The Great Wall is visible across 380,000 km of space.")
mock.add(templates["contradiction"].render(claim=claim),
         "1. No unaided human eye can resolve the Great Wall from the Moon.")


def script_truth(text, p_true):
    mock.add(templates["truth-value"].render(claim=text), " true",
             top_logprobs={" true": math.log(p_true), " false": math.log(1 - p_true)})


script_truth(claim, 0.25)
script_truth("The Great Wall is visible across 380,000 km of space.", 0.1)
script_truth("No unaided human eye can resolve the Great Wall from the Moon.", 0.9)

print(f"\ngraph-inference label for {claim!r}:",
      graph_inference_label(mock, claim))
