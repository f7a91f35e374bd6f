"""Exact, enumerable model of self-training on (question, answer) seeds.

A :class:`ToyWorld` fixes five dense kernels over finite question/answer
sets: the seed-question prior, the derived-question kernel p(q | q0), the
seed-answering kernel p(a0 | q0), the prompted-answering kernel
p(a | q, q0, a0), and the base answering kernel p(a | q). Training to
convergence on the generated pairs makes the updated model's correct-answer
probability the marginal

    p_after(a* | q) = sum_{q0, a0} p(a* | q, q0, a0) p(a0 | q0) p(q0 | q),

where p(q0 | q) is the exact Bayes posterior over which seed question
produced q. (The derived question depends on the seed question only, so
p(a0 | q0, q) reduces to the seed-answering kernel.)

The guarantee verified here: if (1) the seed answer is correct with
probability at least p* for every posterior-supported seed question, and
(2) prompting with a correct seed pair lifts the expected correct-answer
probability to at least p(a*|q)/p*, then the updated model strictly improves
on the base model at q. ``verify_improvement`` evaluates both hypotheses,
every intermediate bound of the argument, and the conclusion, numerically.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Any, Mapping

import numpy as np

#: |p_after - p_base| at or below this counts as an equality boundary, not a
#: strict improvement; float posterior normalization rules out bitwise equality.
EQ_TOL = 1e-12

_SUM_TOL = 1e-12


class UndefinedPosteriorError(ValueError):
    """The question is unreachable from every seed question."""


@dataclass(frozen=True)
class ToyWorld:
    """Finite world with exactly enumerable kernels.

    Array layout (Q questions, A answers):
      correct          (Q,)  index of the correct answer per question
      seed_prior       (Q,)  p(q0)
      question_kernel  (Q, Q) [q0, q]      p(q | q0)
      answer_kernel    (Q, A) [q0, a0]     p(a0 | q0)
      prompted_kernel  (Q, A, Q, A) [q0, a0, q, a]  p(a | q, q0, a0)
      base_kernel      (Q, A) [q, a]       p(a | q)
    """

    questions: tuple[str, ...]
    answers: tuple[str, ...]
    correct: np.ndarray
    seed_prior: np.ndarray
    question_kernel: np.ndarray
    answer_kernel: np.ndarray
    prompted_kernel: np.ndarray
    base_kernel: np.ndarray

    def __post_init__(self):
        nq, na = len(self.questions), len(self.answers)
        shapes = {
            "correct": (self.correct, (nq,)),
            "seed_prior": (self.seed_prior, (nq,)),
            "question_kernel": (self.question_kernel, (nq, nq)),
            "answer_kernel": (self.answer_kernel, (nq, na)),
            "prompted_kernel": (self.prompted_kernel, (nq, na, nq, na)),
            "base_kernel": (self.base_kernel, (nq, na)),
        }
        for name, (arr, shape) in shapes.items():
            if arr.shape != shape:
                raise ValueError(f"{name} has shape {arr.shape}, expected {shape}")
        if self.correct.min() < 0 or self.correct.max() >= na:
            raise ValueError("correct must map every question into the answer set")
        for name, arr in (("seed_prior", self.seed_prior[None, :]),
                          ("question_kernel", self.question_kernel),
                          ("answer_kernel", self.answer_kernel),
                          ("base_kernel", self.base_kernel),
                          ("prompted_kernel", self.prompted_kernel.reshape(-1, na))):
            if arr.min() < 0:
                raise ValueError(f"{name} has negative entries")
            sums = arr.sum(axis=-1)
            if np.abs(sums - 1.0).max() > _SUM_TOL:
                raise ValueError(f"{name} rows must sum to 1 within {_SUM_TOL}")

    def question_index(self, q: str | int) -> int:
        if isinstance(q, int):
            return q
        return self.questions.index(q)


@dataclass(frozen=True)
class ImprovementReport:
    """Numeric verdict on the improvement guarantee at one question.

    ``conclusion_holds`` asserts a strict gap (beyond ``EQ_TOL``);
    ``boundary`` flags exact equality, which the argument's chain of bounds
    permits when a hypothesis holds with equality rather than strictly.
    """

    q: str
    p_star: float
    assumption1_holds: bool
    assumption2_holds: bool
    assumption2_margin: float
    p_lm: float
    p_dct: float
    conclusion_holds: bool
    boundary: bool
    chain: tuple[float, float, float, float]
    chain_monotone: bool

    def to_dict(self) -> dict[str, Any]:
        return {
            "q": self.q,
            "p_star": self.p_star,
            "assumption1_holds": self.assumption1_holds,
            "assumption2_holds": self.assumption2_holds,
            "assumption2_margin": self.assumption2_margin,
            "p_lm": self.p_lm,
            "p_dct": self.p_dct,
            "conclusion_holds": self.conclusion_holds,
            "boundary": self.boundary,
            "chain": list(self.chain),
            "chain_monotone": self.chain_monotone,
        }


def posterior_seed(world: ToyWorld, q: str | int) -> np.ndarray:
    """Exact Bayes posterior over the seed question, given the derived one."""
    qi = world.question_index(q)
    weights = world.seed_prior * world.question_kernel[:, qi]
    z = weights.sum()
    if z <= 0.0:
        raise UndefinedPosteriorError(
            f"question {world.questions[qi]!r} is unreachable from every seed question"
        )
    return weights / z


def p_lm(world: ToyWorld, q: str | int) -> float:
    """Base model's probability of the correct answer."""
    qi = world.question_index(q)
    return float(world.base_kernel[qi, world.correct[qi]])


def p_dct(world: ToyWorld, q: str | int) -> float:
    """Correct-answer probability after training to convergence.

    Exact double sum over seed questions and seed answers.
    """
    qi = world.question_index(q)
    post = posterior_seed(world, qi)
    a_star = world.correct[qi]
    # sum_{q0} p(q0|q) sum_{a0} p(a0|q0) p(a*|q, q0, a0)
    return float(np.einsum("i,ij,ij->", post, world.answer_kernel,
                           world.prompted_kernel[:, :, qi, a_star]))


def check_assumptions(world: ToyWorld, q: str | int) -> tuple[float, bool, bool]:
    """(p_star, hypothesis 1 holds, hypothesis 2 holds) at one question.

    p_star is the infimum, over posterior-supported seed questions, of the
    probability that the seed answer is correct; hypothesis 1 asks for it to
    be positive. Hypothesis 2 compares the posterior expectation of the
    prompted correct-answer probability (under correct seed answers) against
    p_lm / p_star. Both inequalities are evaluated exactly.
    """
    qi = world.question_index(q)
    post = posterior_seed(world, qi)
    support = post > 0.0
    seed_correct = world.answer_kernel[np.arange(len(world.questions)), world.correct]
    p_star = float(seed_correct[support].min())
    assumption1 = p_star > 0.0

    a_star = world.correct[qi]
    prompted_correct = world.prompted_kernel[np.arange(len(world.questions)),
                                             world.correct, qi, a_star]
    expectation = float(post @ prompted_correct)
    # equality within EQ_TOL counts as holding: it is the boundary case, and
    # posterior normalization alone perturbs the comparison by ~1 ulp
    assumption2 = assumption1 and expectation >= p_lm(world, qi) / p_star - EQ_TOL
    return p_star, assumption1, assumption2


def verify_improvement(world: ToyWorld, q: str | int) -> ImprovementReport:
    """Evaluate both hypotheses, the bound chain, and the conclusion at q.

    The chain records (exact value, drop-wrong-answer-terms bound,
    hypothesis-1 bound, base probability); each step must not exceed the
    previous one, up to 1e-12 of float slack. Violations are reported, not
    raised.
    """
    qi = world.question_index(q)
    post = posterior_seed(world, qi)
    a_star = world.correct[qi]
    q_range = np.arange(len(world.questions))

    p_star, assumption1, assumption2 = check_assumptions(world, qi)
    base = p_lm(world, qi)
    after = p_dct(world, qi)

    prompted_correct = world.prompted_kernel[q_range, world.correct, qi, a_star]
    seed_correct = world.answer_kernel[q_range, world.correct]
    # keep only the terms where the seed answer was the correct one
    drop_wrong = float(post @ (seed_correct * prompted_correct))
    expectation = float(post @ prompted_correct)
    hyp1_bound = p_star * expectation

    assumption2_margin = expectation - base / p_star if p_star > 0 else float("-inf")
    chain = (after, drop_wrong, hyp1_bound, base)
    chain_monotone = (
        after >= drop_wrong - EQ_TOL
        and drop_wrong >= hyp1_bound - EQ_TOL
        and (not assumption2 or hyp1_bound >= base - EQ_TOL)
    )
    boundary = abs(after - base) <= EQ_TOL
    return ImprovementReport(
        q=world.questions[qi],
        p_star=p_star,
        assumption1_holds=assumption1,
        assumption2_holds=assumption2,
        assumption2_margin=assumption2_margin,
        p_lm=base,
        p_dct=after,
        conclusion_holds=after > base + EQ_TOL,
        boundary=boundary,
        chain=chain,
        chain_monotone=chain_monotone,
    )


# --- Monte-Carlo oracle ------------------------------------------------------

def _sample_rows(rng: np.random.Generator, rows: np.ndarray) -> np.ndarray:
    """One categorical draw per row of a (N, K) probability matrix."""
    cumulative = np.cumsum(rows, axis=1)
    u = rng.random((rows.shape[0], 1))
    idx = (u > cumulative).sum(axis=1)
    return np.minimum(idx, rows.shape[1] - 1)


def mc_p_dct(
    world: ToyWorld,
    q: str | int,
    n_samples: int,
    rng: np.random.Generator,
) -> tuple[float, float, int]:
    """Monte-Carlo estimate of the post-training correct-answer probability.

    Simulates the generative chain (seed question, seed answer, derived
    question) and keeps the draws whose derived question matches ``q``; the
    estimate is the fraction of prompted answers that are correct. Returns
    (estimate, standard error, accepted sample count). Independent of the
    closed form: no Bayes arithmetic, only forward sampling.
    """
    qi = world.question_index(q)
    a_star = world.correct[qi]
    q0 = rng.choice(len(world.questions), size=n_samples, p=world.seed_prior)
    derived = _sample_rows(rng, world.question_kernel[q0])
    keep = derived == qi
    q0 = q0[keep]
    n_accepted = int(keep.sum())
    if n_accepted == 0:
        raise UndefinedPosteriorError(
            f"no sample reached question {world.questions[qi]!r}; cannot estimate"
        )
    a0 = _sample_rows(rng, world.answer_kernel[q0])
    answers = _sample_rows(rng, world.prompted_kernel[q0, a0, qi])
    hits = answers == a_star
    estimate = float(hits.mean())
    stderr = math.sqrt(max(estimate * (1.0 - estimate), 1e-12) / n_accepted)
    return estimate, stderr, n_accepted


# --- world construction ------------------------------------------------------

def random_world(rng: np.random.Generator, n_questions: int, n_answers: int) -> ToyWorld:
    """A fully random world with Dirichlet(1) rows for every kernel."""
    questions = tuple(f"q{i}" for i in range(n_questions))
    answers = tuple(f"a{i}" for i in range(n_answers))
    return ToyWorld(
        questions=questions,
        answers=answers,
        correct=rng.integers(0, n_answers, size=n_questions),
        seed_prior=rng.dirichlet(np.ones(n_questions)),
        question_kernel=rng.dirichlet(np.ones(n_questions), size=n_questions),
        answer_kernel=rng.dirichlet(np.ones(n_answers), size=n_questions),
        prompted_kernel=rng.dirichlet(np.ones(n_answers),
                                      size=(n_questions, n_answers, n_questions)),
        base_kernel=rng.dirichlet(np.ones(n_answers), size=n_questions),
    )


def _deterministic_correct(n_questions: int, n_answers: int, correct: np.ndarray) -> np.ndarray:
    kernel = np.zeros((n_questions, n_answers))
    kernel[np.arange(n_questions), correct] = 1.0
    return kernel


def prompt_ignoring_world(rng: np.random.Generator, n_questions: int = 3,
                          n_answers: int = 3) -> ToyWorld:
    """Boundary world: prompting changes nothing and seeds are always correct.

    Both hypotheses hold with equality, so the guarantee degrades to
    p_after = p_base exactly.
    """
    base = random_world(rng, n_questions, n_answers)
    prompted = np.broadcast_to(
        base.base_kernel[None, None, :, :],
        (n_questions, n_answers, n_questions, n_answers),
    ).copy()
    return ToyWorld(
        questions=base.questions,
        answers=base.answers,
        correct=base.correct,
        seed_prior=base.seed_prior,
        question_kernel=base.question_kernel,
        answer_kernel=_deterministic_correct(n_questions, n_answers, base.correct),
        prompted_kernel=prompted,
        base_kernel=base.base_kernel,
    )


def helpful_world(rng: np.random.Generator, n_questions: int = 3, n_answers: int = 3,
                  boost: float = 0.5) -> ToyWorld:
    """World where both hypotheses hold strictly.

    Seeds answer correctly with certainty; prompting with a correct pair
    mixes the base answer distribution with a point mass on the correct
    answer (weight ``boost``), so the expected lift is strict whenever the
    base model is imperfect.
    """
    base = random_world(rng, n_questions, n_answers)
    prompted = np.broadcast_to(
        base.base_kernel[None, None, :, :],
        (n_questions, n_answers, n_questions, n_answers),
    ).copy()
    # boost the correct answer in every correct-seed-answer context
    for q0 in range(n_questions):
        a0 = base.correct[q0]
        for q in range(n_questions):
            row = prompted[q0, a0, q] * (1.0 - boost)
            row[base.correct[q]] += boost
            prompted[q0, a0, q] = row
    return ToyWorld(
        questions=base.questions,
        answers=base.answers,
        correct=base.correct,
        seed_prior=base.seed_prior,
        question_kernel=base.question_kernel,
        answer_kernel=_deterministic_correct(n_questions, n_answers, base.correct),
        prompted_kernel=prompted,
        base_kernel=base.base_kernel,
    )


def misleading_world(rng: np.random.Generator, n_questions: int = 3,
                     n_answers: int = 3, damp: float = 0.1) -> ToyWorld:
    """Adversarial world violating hypothesis 2: prompts suppress the truth.

    Conditioning on a correct seed pair multiplies the correct answer's
    probability by ``damp`` < 1 and renormalizes.
    """
    world = helpful_world(rng, n_questions, n_answers, boost=0.0)
    prompted = world.prompted_kernel.copy()
    for q0 in range(n_questions):
        a0 = world.correct[q0]
        for q in range(n_questions):
            row = prompted[q0, a0, q].copy()
            row[world.correct[q]] *= damp
            prompted[q0, a0, q] = row / row.sum()
    return ToyWorld(
        questions=world.questions,
        answers=world.answers,
        correct=world.correct,
        seed_prior=world.seed_prior,
        question_kernel=world.question_kernel,
        answer_kernel=world.answer_kernel,
        prompted_kernel=prompted,
        base_kernel=world.base_kernel,
    )


# --- JSON world files --------------------------------------------------------

def world_to_dict(world: ToyWorld) -> dict[str, Any]:
    qs, ans = world.questions, world.answers
    return {
        "questions": list(qs),
        "answers": list(ans),
        "correct": {q: ans[world.correct[i]] for i, q in enumerate(qs)},
        "seed_prior": {q: float(world.seed_prior[i]) for i, q in enumerate(qs)},
        "question_kernel": {
            q0: {q: float(world.question_kernel[i, j]) for j, q in enumerate(qs)}
            for i, q0 in enumerate(qs)
        },
        "answer_kernel": {
            q0: {a: float(world.answer_kernel[i, j]) for j, a in enumerate(ans)}
            for i, q0 in enumerate(qs)
        },
        "prompted_kernel": {
            q0: {
                a0: {
                    q: {a: float(world.prompted_kernel[i, j, k, m])
                        for m, a in enumerate(ans)}
                    for k, q in enumerate(qs)
                }
                for j, a0 in enumerate(ans)
            }
            for i, q0 in enumerate(qs)
        },
        "base_kernel": {
            q: {a: float(world.base_kernel[i, j]) for j, a in enumerate(ans)}
            for i, q in enumerate(qs)
        },
    }


def world_from_dict(data: Mapping[str, Any]) -> ToyWorld:
    qs = tuple(data["questions"])
    ans = tuple(data["answers"])
    a_index = {a: i for i, a in enumerate(ans)}

    def table(mapping, keys):
        return np.array([mapping[k] for k in keys])

    return ToyWorld(
        questions=qs,
        answers=ans,
        correct=np.array([a_index[data["correct"][q]] for q in qs]),
        seed_prior=np.array([data["seed_prior"][q] for q in qs]),
        question_kernel=np.array(
            [[data["question_kernel"][q0][q] for q in qs] for q0 in qs]
        ),
        answer_kernel=np.array(
            [[data["answer_kernel"][q0][a] for a in ans] for q0 in qs]
        ),
        prompted_kernel=np.array(
            [[[[data["prompted_kernel"][q0][a0][q][a] for a in ans]
               for q in qs] for a0 in ans] for q0 in qs]
        ),
        base_kernel=np.array(
            [[data["base_kernel"][q][a] for a in ans] for q in qs]
        ),
    )
