"""Smoke tests for the python bindings."""

import os

import pytest

import stepverify as sv


def test_token_length():
    assert sv.token_length("x = 2") == 3
    assert sv.token_length("") == 0


def test_decompose_round_trips():
    text = "first paragraph with plenty of words to stay above the merge threshold easily\n\nsecond paragraph with plenty of words to stay above the merge threshold easily"
    seq = sv.decompose(text, theta=12)
    assert len(seq) == 2
    assert seq.reconstruct() == text


def test_short_steps_merge():
    text = "tiny start\n\n" + " ".join(f"w{i}" for i in range(30))
    seq = sv.decompose(text, theta=12)
    assert len(seq) == 1


def test_build_context_partition():
    ctx = sv.build_context(["a", "b", "c"], "problem", 2)
    assert ctx.history == ["a"]
    assert ctx.current == "b"
    assert ctx.future == ["c"]


def test_parse_verdict():
    parsed = sv.parse_verdict("fine\nVERDICT: CORRECT", "step-ec")
    assert parsed["is_correct"] is True

    parsed = sv.parse_verdict(
        "VERDICT: INCORRECT\nERRORS: CircularReasoning", "step-ec"
    )
    assert parsed["errors"] == ["CircularReasoning"]

    with pytest.raises(ValueError):
        sv.parse_verdict("maybe fine", "step-ec")


def test_solution_outcome():
    assert sv.solution_outcome([True, True]) == "correct"
    assert sv.solution_outcome([True, False]) == "incorrect"
    assert sv.solution_outcome([True, None]) == "indeterminate"


def test_confusion_and_prf1():
    counts = sv.confusion(
        {"a": "correct", "b": "incorrect", "c": "incorrect", "d": "incorrect"},
        {"a": False, "b": False, "c": False, "d": True},
    )
    assert (counts["tp"], counts["fp"], counts["fn"], counts["tn"]) == (2, 1, 1, 0)
    precision, recall, f1 = sv.prf1(2, 1, 1)
    assert abs(f1 - 2 / 3) < 1e-12


def test_relative_improvement():
    assert abs(sv.relative_improvement(84.85, 72.22) - 17.49) < 0.01


def test_estimate_cost():
    assert sv.estimate_cost([(1_000_000, 0)], 0.10, 0.40) == pytest.approx(0.10)


def test_verify_with_mock_end_to_end():
    solution = "\n\n".join(
        " ".join(f"s{p}w{i}" for i in range(20)) for p in range(3)
    )
    templates_dir = os.environ.get("STEPVERIFY_TEMPLATES")
    verdict = sv.verify_with_mock(
        "a problem", solution, strategy="step-ec", templates_dir=templates_dir
    )
    assert verdict["predicted_correct"] == "correct"
    assert verdict["num_steps"] == 3
    assert verdict["calls"] == 3
    assert [s["index"] for s in verdict["steps"]] == [1, 2, 3]

    flawed = sv.verify_with_mock(
        "a problem",
        solution,
        strategy="step-ec",
        default_response="VERDICT: INCORRECT\nERRORS: SolutionByGuess",
        templates_dir=templates_dir,
    )
    assert flawed["predicted_correct"] == "incorrect"
    assert flawed["steps"][0]["errors"] == ["SolutionByGuess"]
