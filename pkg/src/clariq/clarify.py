"""Choice derivation, clarification question generation, feedback-driven
query refinement, and the final answer call.
"""

from __future__ import annotations

import re
from typing import List, Optional

from .decision import format_evidence_block, load_default_template, PromptAssemblyError
from .framework import DispatchReport
from .gateway import ChatMessage, CompletionRequest, GatewayError, Role
from .model import (
    Choice,
    ClarificationQuestion,
    Feedback,
    UserQuery,
    ValidationError,
)

DEFAULT_CHOICE_CAP = 2
FALLBACK_QUESTION = "Which of the following do you mean?"
FREE_TEXT_CHOICE = Choice(id="rephrase", label="Let me rephrase", payload="rephrase")

QUESTION_SYSTEM_PROMPT = (
    "You help an enterprise AI assistant ask good clarification questions. "
    "Given the user's query, the ambiguity evidence, and the available "
    "choices, write one short clarification question."
)

ANSWER_SYSTEM_PROMPT = (
    "You are an enterprise AI assistant. Answer the user's question directly "
    "and concisely."
)

_SENTENCE_END = re.compile(r"([.?!])\s")


class InvalidFeedbackError(ValueError):
    pass


class FinalizeError(RuntimeError):
    """The downstream answer call failed; recorded as a turn-level failure."""


def derive_choices(report: DispatchReport, choice_cap: int = DEFAULT_CHOICE_CAP) -> List[Choice]:
    """Pool candidates from detecting agents in registration order, dedup by
    id, truncate to the cap. Candidate-free detections fall back to a single
    free-text choice."""
    detecting = report.detecting()
    if not detecting:
        raise PromptAssemblyError("derive_choices requires at least one detection")
    choices: List[Choice] = []
    seen = set()
    for outcome in detecting:
        for candidate in outcome.verdict.evidence.candidates:
            if candidate.id in seen:
                continue
            seen.add(candidate.id)
            choices.append(
                Choice(id=candidate.id, label=candidate.label, payload=candidate.id)
            )
    if not choices:
        return [FREE_TEXT_CHOICE]
    return choices[:choice_cap]


def _first_sentence(text: str) -> str:
    text = text.strip()
    match = _SENTENCE_END.search(text)
    if match:
        return text[: match.end(1)]
    return text


def generate_question(
    query: UserQuery,
    report: DispatchReport,
    choices: List[Choice],
    gateway,
    model: str = "default",
    timeout_ms: int = 30_000,
    template: Optional[str] = None,
) -> ClarificationQuestion:
    if not choices:
        raise ValidationError("generate_question requires a non-empty choice list")
    if template is None:
        template = load_default_template("question_prompt.txt")
    evidence_blocks = "\n\n".join(
        format_evidence_block(o.verdict.evidence) for o in report.detecting()
    )
    body = template.format(
        query=query.text,
        evidence_blocks=evidence_blocks,
        choice_labels="\n".join(f"- {c.label}" for c in choices),
    )
    request = CompletionRequest(
        messages=(
            ChatMessage(role=Role.SYSTEM, content=QUESTION_SYSTEM_PROMPT),
            ChatMessage(role=Role.USER, content=body),
        ),
        model=model,
        temperature=0.0,
        timeout_ms=timeout_ms,
    )
    try:
        reply = gateway.complete(request).text
    except GatewayError:
        reply = ""
    text = _first_sentence(reply) or FALLBACK_QUESTION
    return ClarificationQuestion(text=text, choices=tuple(choices))


def refine_query(
    query: UserQuery, feedback: Feedback, question: ClarificationQuestion
) -> str:
    if feedback.selected_choice_id is not None:
        match = next(
            (c for c in question.choices if c.id == feedback.selected_choice_id), None
        )
        if match is None:
            raise InvalidFeedbackError(
                f"choice id {feedback.selected_choice_id!r} is not one of the "
                f"offered choices"
            )
        return f"{query.text} (referring to: {match.label})"
    return f"{query.text} (clarification: {feedback.free_text})"


def finalize(
    refined_query: str, gateway, model: str = "default", timeout_ms: int = 30_000
) -> str:
    request = CompletionRequest(
        messages=(
            ChatMessage(role=Role.SYSTEM, content=ANSWER_SYSTEM_PROMPT),
            ChatMessage(role=Role.USER, content=refined_query),
        ),
        model=model,
        temperature=0.0,
        timeout_ms=timeout_ms,
    )
    try:
        reply = gateway.complete(request).text
    except GatewayError as exc:
        raise FinalizeError(f"answer call failed: {exc}") from exc
    if not reply.strip():
        raise FinalizeError("answer call returned an empty reply")
    return reply
