"""Solving a deduction graph: consistency, assignment probability, argmax.

A deduction graph is one seed claim plus generated implication and
contradiction children. Solving picks the most probable truth assignment
that respects every seed->child constraint.
"""

from dct import (
    DeductionGraph,
    ScoredGraph,
    Statement,
    TruthAssignment,
    assignment_probability,
    best_assignment,
    brute_force_best,
    consistency,
    validate_graph,
)

# ---------------------------------------------------------------------------
# Build a three-statement graph by hand.

seed = Statement(id="0", text="Emperor Meiji was the first emperor of modern Japan.",
                 kind="seed")
implication = Statement(id="0.1", text="Japan had an emperor during the Meiji era.",
                        kind="implication", parent="0")
contradiction = Statement(id="0.2", text="Emperor Meiji was the last Japanese emperor.",
                          kind="contradiction", parent="0")
graph = DeductionGraph(seed=seed, implications=(implication,),
                       contradictions=(contradiction,))

print("graph violations:", validate_graph(graph) or "none")

# ---------------------------------------------------------------------------
# The consistency indicator over all eight candidate assignments. A true seed
# forces the implication true and the contradiction false; a false seed
# constrains nothing.

print("\nseed  impl  contr  consistent")
for t_seed in (True, False):
    for t_impl in (True, False):
        for t_contr in (True, False):
            assignment = TruthAssignment(values={"0": t_seed, "0.1": t_impl, "0.2": t_contr})
            c = consistency(graph, assignment)
            print(f"{t_seed!s:5} {t_impl!s:5} {t_contr!s:6} {c}")

# ---------------------------------------------------------------------------
# Attach truth priors (here: made up; the pipeline estimates them from label
# logits) and solve. With a weak seed prior the solver re-labels the seed
# false rather than sacrificing two strong children.

scored = ScoredGraph(graph=graph, priors={"0": 0.2, "0.1": 0.9, "0.2": 0.9})
result = best_assignment(scored)
print("\nfree seed  ->", {k: v for k, v in sorted(result.assignment.values.items())},
      f"score={result.score:.4f}")
print("oracle agrees:", brute_force_best(scored).assignment == result.assignment)

probe = TruthAssignment(values={"0": True, "0.1": True, "0.2": False})
print("p(seed-true candidate) =", round(assignment_probability(scored, probe), 4))

# Pinning the seed true (supervised / editing seeds) forces the structure.
fixed = ScoredGraph(graph=DeductionGraph(seed=seed, implications=(implication,),
                                         contradictions=(contradiction,),
                                         seed_fixed_true=True),
                    priors=scored.priors)
result = best_assignment(fixed)
print("fixed seed ->", {k: v for k, v in sorted(result.assignment.values.items())},
      f"score={result.score:.4f}")
