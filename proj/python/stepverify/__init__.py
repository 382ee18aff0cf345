"""Step-by-step verification of model-generated math solutions."""

from ._core import (
    AnalysisContext,
    StepSequence,
    build_context,
    confusion,
    decompose,
    estimate_cost,
    parse_verdict,
    prf1,
    relative_improvement,
    render_judge_prompt,
    render_step_prompt,
    solution_outcome,
    token_length,
    verify_with_mock,
)

__all__ = [
    "AnalysisContext",
    "StepSequence",
    "build_context",
    "confusion",
    "decompose",
    "estimate_cost",
    "parse_verdict",
    "prf1",
    "relative_improvement",
    "render_judge_prompt",
    "render_step_prompt",
    "solution_outcome",
    "token_length",
    "verify_with_mock",
]
