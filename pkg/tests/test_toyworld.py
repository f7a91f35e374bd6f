import json

import numpy as np
import pytest

from dct.toyworld import (
    ToyWorld,
    UndefinedPosteriorError,
    check_assumptions,
    helpful_world,
    mc_p_dct,
    misleading_world,
    p_dct,
    p_lm,
    posterior_seed,
    prompt_ignoring_world,
    random_world,
    verify_improvement,
    world_from_dict,
    world_to_dict,
)


def tiny_world(**overrides):
    """Two questions, two answers, hand-specified kernels."""
    fields = dict(
        questions=("q0", "q1"),
        answers=("a0", "a1"),
        correct=np.array([0, 1]),
        seed_prior=np.array([0.5, 0.5]),
        question_kernel=np.array([[0.5, 0.5], [0.5, 0.5]]),
        answer_kernel=np.array([[1.0, 0.0], [0.0, 1.0]]),
        prompted_kernel=np.full((2, 2, 2, 2), 0.5),
        base_kernel=np.array([[0.5, 0.5], [0.5, 0.5]]),
    )
    fields.update(overrides)
    return ToyWorld(**fields)


def test_validation_rejects_bad_distribution():
    with pytest.raises(ValueError, match="sum to 1"):
        tiny_world(seed_prior=np.array([0.5, 0.6]))
    with pytest.raises(ValueError, match="negative"):
        tiny_world(base_kernel=np.array([[1.5, -0.5], [0.5, 0.5]]))
    with pytest.raises(ValueError, match="answer set"):
        tiny_world(correct=np.array([0, 5]))
    with pytest.raises(ValueError, match="shape"):
        tiny_world(base_kernel=np.array([0.5, 0.5]))


def test_posterior_concentrated_kernel():
    # q1 reachable only from q0's seed question
    world = tiny_world(question_kernel=np.array([[0.0, 1.0], [1.0, 0.0]]))
    post = posterior_seed(world, "q1")
    assert post == pytest.approx([1.0, 0.0])


def test_posterior_symmetric_world_is_uniform():
    post = posterior_seed(tiny_world(), "q0")
    assert post == pytest.approx([0.5, 0.5])


def test_posterior_hand_computed_bayes():
    # prior (0.5, 0.25, 0.25), p(q2 | .) = (0.2, 0.4, 0.8)
    # weights (0.1, 0.1, 0.2), Z = 0.4 -> posterior (0.25, 0.25, 0.5)
    world = ToyWorld(
        questions=("q0", "q1", "q2"),
        answers=("a0", "a1"),
        correct=np.array([0, 1, 0]),
        seed_prior=np.array([0.5, 0.25, 0.25]),
        question_kernel=np.array([
            [0.8, 0.0, 0.2],
            [0.3, 0.3, 0.4],
            [0.1, 0.1, 0.8],
        ]),
        answer_kernel=np.array([[1.0, 0.0], [0.0, 1.0], [1.0, 0.0]]),
        prompted_kernel=np.full((3, 2, 3, 2), 0.5),
        base_kernel=np.full((3, 2), 0.5),
    )
    post = posterior_seed(world, "q2")
    assert post == pytest.approx([0.25, 0.25, 0.5], abs=1e-15)


def test_posterior_unreachable_question():
    world = tiny_world(question_kernel=np.array([[1.0, 0.0], [1.0, 0.0]]))
    with pytest.raises(UndefinedPosteriorError):
        posterior_seed(world, "q1")


def test_prompt_ignoring_world_matches_base_exactly():
    world = prompt_ignoring_world(np.random.default_rng(0))
    for q in world.questions:
        assert abs(p_dct(world, q) - p_lm(world, q)) <= 1e-12


def test_doubling_world():
    # seeds always answer correctly; prompting with a correct pair doubles the
    # correct-answer probability -> p after training is exactly 2x the base
    correct = np.array([0, 1])
    base = np.array([[0.25, 0.375, 0.375],
                     [0.5, 0.25, 0.25]])
    answer_kernel = np.zeros((2, 3))
    answer_kernel[np.arange(2), correct] = 1.0
    prompted = np.broadcast_to(base[None, None, :, :], (2, 3, 2, 3)).copy()
    for q0 in range(2):
        a0 = correct[q0]
        for q in range(2):
            row = base[q].copy()
            a_star = correct[q]
            row *= (1.0 - 2 * row[a_star]) / (1.0 - row[a_star])
            row[a_star] = 2 * base[q, a_star]
            prompted[q0, a0, q] = row
    world = ToyWorld(
        questions=("q0", "q1"),
        answers=("a0", "a1", "a2"),
        correct=correct,
        seed_prior=np.array([0.5, 0.5]),
        question_kernel=np.array([[0.5, 0.5], [0.5, 0.5]]),
        answer_kernel=answer_kernel,
        prompted_kernel=prompted,
        base_kernel=base,
    )
    for q in world.questions:
        assert p_dct(world, q) == pytest.approx(2 * p_lm(world, q), abs=1e-12)


def test_check_assumptions_deterministic_correct_seeds():
    world = prompt_ignoring_world(np.random.default_rng(1))
    p_star, a1, a2 = check_assumptions(world, "q0")
    assert p_star == 1.0
    assert a1 is True
    assert a2 is True  # equality boundary still counts as holding


def test_check_assumptions_fail_when_seed_never_correct():
    world = tiny_world(answer_kernel=np.array([[0.0, 1.0], [1.0, 0.0]]))  # always wrong
    p_star, a1, a2 = check_assumptions(world, "q0")
    assert p_star == 0.0
    assert a1 is False
    assert a2 is False


def test_helpful_world_improves_strictly():
    rng = np.random.default_rng(2)
    world = helpful_world(rng)
    for q in world.questions:
        report = verify_improvement(world, q)
        assert report.assumption1_holds
        assert report.assumption2_holds
        if report.p_lm < 1.0 - 1e-9:
            assert report.conclusion_holds
            assert report.p_dct > report.p_lm
        assert report.chain_monotone


def test_boundary_world_reports_equality_not_conclusion():
    world = prompt_ignoring_world(np.random.default_rng(3))
    for q in world.questions:
        report = verify_improvement(world, q)
        assert report.boundary
        assert not report.conclusion_holds
        assert report.assumption1_holds and report.assumption2_holds
        assert report.chain_monotone


def test_misleading_world_violates_assumption_two():
    world = misleading_world(np.random.default_rng(4))
    violated = [q for q in world.questions
                if not verify_improvement(world, q).assumption2_holds]
    assert violated  # prompts that suppress the truth break hypothesis 2


def test_chain_is_monotone_on_random_worlds():
    rng = np.random.default_rng(5)
    strict_hits = 0
    for _ in range(100):
        world = random_world(rng, int(rng.integers(2, 6)), int(rng.integers(2, 6)))
        for q in world.questions:
            report = verify_improvement(world, q)
            assert report.chain_monotone
            full, drop_wrong, hyp1_bound, base = report.chain
            assert full >= drop_wrong - 1e-12
            assert drop_wrong >= hyp1_bound - 1e-12
            if (report.assumption1_holds and report.p_star > 1e-6
                    and report.assumption2_margin > 1e-9):
                assert report.p_dct > report.p_lm
                strict_hits += 1
    assert strict_hits > 0


def test_mc_oracle_cross_check():
    rng = np.random.default_rng(6)
    world = random_world(rng, 4, 4)
    q = world.questions[0]
    exact = p_dct(world, q)
    estimate, stderr, n_accepted = mc_p_dct(world, q, 200_000, rng)
    assert n_accepted > 1000
    assert abs(estimate - exact) <= 3 * stderr


def test_world_json_round_trip(tmp_path):
    world = helpful_world(np.random.default_rng(7))
    payload = json.dumps(world_to_dict(world), sort_keys=True)
    restored = world_from_dict(json.loads(payload))
    assert restored.questions == world.questions
    np.testing.assert_allclose(restored.prompted_kernel, world.prompted_kernel)
    np.testing.assert_array_equal(restored.correct, world.correct)
    for q in world.questions:
        assert p_dct(restored, q) == pytest.approx(p_dct(world, q), abs=1e-15)


def test_report_to_dict_is_json_serializable():
    world = helpful_world(np.random.default_rng(8))
    report = verify_improvement(world, "q0")
    encoded = json.dumps(report.to_dict())
    decoded = json.loads(encoded)
    assert decoded["q"] == "q0"
    assert isinstance(decoded["p_dct"], float)
