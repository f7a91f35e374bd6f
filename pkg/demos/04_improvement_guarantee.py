"""The improvement guarantee on exact toy worlds.

A toy world pins down every kernel of the seed -> derived-question -> answer
process over finite sets, so the post-training correct-answer probability is
a closed-form double sum. The guarantee: if seeds answer correctly with
probability at least p* (hypothesis 1) and prompting with a correct pair
lifts the expected correct-answer probability past p_base/p* (hypothesis 2),
training strictly improves the model at that question.
"""

import numpy as np

from dct.toyworld import (
    helpful_world,
    mc_p_dct,
    misleading_world,
    p_dct,
    p_lm,
    posterior_seed,
    prompt_ignoring_world,
    random_world,
    verify_improvement,
)

rng = np.random.default_rng(0)


def show(world, label):
    print(f"\n{label}")
    for q in world.questions:
        report = verify_improvement(world, q)
        gap = report.p_dct - report.p_lm
        print(f"  {q}: p*={report.p_star:.2f} "
              f"hyp1={report.assumption1_holds!s:5} hyp2={report.assumption2_holds!s:5} "
              f"p_base={report.p_lm:.4f} p_after={report.p_dct:.4f} "
              f"gap={gap:+.4f} strict={report.conclusion_holds} boundary={report.boundary}")


# Prompting helps: both hypotheses hold strictly, improvement is strict.
show(helpful_world(rng), "helpful world (prompting boosts the correct answer)")

# Prompting is ignored: the hypotheses hold with equality and the guarantee
# degrades to exact equality - flagged as a boundary, not an improvement.
show(prompt_ignoring_world(rng), "prompt-ignoring world (boundary)")

# Prompting misleads: hypothesis 2 fails and no conclusion is claimed.
show(misleading_world(rng), "misleading world (hypothesis 2 violated)")

# ---------------------------------------------------------------------------
# The closed form against a forward-sampling Monte-Carlo oracle.

world = random_world(rng, 4, 4)
q = world.questions[0]
post = posterior_seed(world, q)
print(f"\nrandom world, question {q}: posterior over seed questions = {np.round(post, 3)}")
exact = p_dct(world, q)
estimate, stderr, n_acc = mc_p_dct(world, q, 500_000, rng)
print(f"closed form {exact:.5f} vs MC {estimate:.5f} +/- {stderr:.5f} "
      f"({n_acc} accepted samples) -> |diff| = {abs(exact - estimate):.5f}")

# ---------------------------------------------------------------------------
# Sweep random worlds: wherever the hypotheses hold with a strict margin, the
# improvement is strict. The bound chain is monotone everywhere.

strict = boundary = checked = 0
for _ in range(200):
    world = random_world(rng, int(rng.integers(2, 6)), int(rng.integers(2, 6)))
    for q in world.questions:
        report = verify_improvement(world, q)
        checked += 1
        assert report.chain_monotone
        if (report.assumption1_holds and report.p_star > 1e-6
                and report.assumption2_margin > 1e-9):
            assert report.p_dct > report.p_lm
            strict += 1
        boundary += report.boundary
print(f"\nswept {checked} (world, question) pairs: "
      f"{strict} strict improvements under strict hypotheses, {boundary} boundary cases")
