"""Evidence aggregation and the needed/not-needed decision.

When no agent detects anything the decision short-circuits to not_needed
without touching the LLM; otherwise the detecting agents' evidence is
rendered into a prompt and the LLM's NEEDED/NOT_NEEDED verdict is parsed.
"""

from __future__ import annotations

from importlib import resources
from pathlib import Path
from typing import List, Optional

from .framework import DispatchReport
from .gateway import ChatMessage, CompletionRequest, GatewayError, Role
from .model import Decision, DecisionLabel, Evidence, UserQuery

DECISION_SYSTEM_PROMPT = (
    "You are the clarification referee for an enterprise AI assistant. "
    "Detector agents have flagged possible ambiguities in the user's query. "
    "Decide whether asking a clarification question is worth the interruption. "
    "Only ask when genuinely necessary."
)

SHORT_CIRCUIT_RATIONALE = "no agent detected ambiguity"


class PromptAssemblyError(ValueError):
    pass


def load_default_template(name: str) -> str:
    return (
        resources.files("clariq.data.templates").joinpath(name).read_text("utf-8")
    )


def load_template(path: Optional[str], default_name: str) -> str:
    if path:
        return Path(path).read_text(encoding="utf-8")
    return load_default_template(default_name)


def format_evidence_block(evidence: Evidence) -> str:
    lines = [f"[agent: {evidence.agent_id}]"]
    if evidence.category is not None:
        lines.append(f"category: {evidence.category.value}")
    if evidence.spans:
        lines.append(
            "spans: "
            + "; ".join(
                f"{s.start_token}-{s.end_token} \"{s.surface}\"" for s in evidence.spans
            )
        )
    if evidence.candidates:
        lines.append("candidates: " + "; ".join(c.label for c in evidence.candidates))
    if evidence.rationale:
        lines.append(f"rationale: {evidence.rationale}")
    return "\n".join(lines)


def assemble_evidence_prompt(
    query: UserQuery, report: DispatchReport, template: Optional[str] = None
) -> List[ChatMessage]:
    detecting = report.detecting()
    if not detecting:
        raise PromptAssemblyError(
            "assemble_evidence_prompt requires at least one detection; "
            "callers must short-circuit first"
        )
    if template is None:
        template = load_default_template("decision_prompt.txt")
    evidence_blocks = "\n\n".join(
        format_evidence_block(o.verdict.evidence) for o in detecting
    )
    grounding_blocks = "\n\n".join(
        format_evidence_block(o.verdict.evidence)
        for o in report.grounding()
        if o.verdict.evidence.candidates
    )
    body = template.format(
        query=query.text,
        evidence_blocks=evidence_blocks,
        grounding_blocks=grounding_blocks or "(none)",
    )
    return [
        ChatMessage(role=Role.SYSTEM, content=DECISION_SYSTEM_PROMPT),
        ChatMessage(role=Role.USER, content=body),
    ]


def parse_decision_reply(reply: str):
    """Parse the leading NEEDED/NOT_NEEDED token; None when unparseable."""
    stripped = reply.lstrip()
    head, _, rest = stripped.partition(":")
    label = head.strip().lower()
    if label == "needed":
        return DecisionLabel.NEEDED, rest.strip()
    if label == "not_needed":
        return DecisionLabel.NOT_NEEDED, rest.strip()
    return None


def decide(
    query: UserQuery,
    report: DispatchReport,
    gateway,
    model: str = "default",
    timeout_ms: int = 30_000,
    template: Optional[str] = None,
) -> Decision:
    if not report.detecting():
        return Decision(
            label=DecisionLabel.NOT_NEEDED,
            rationale=SHORT_CIRCUIT_RATIONALE,
            llm_consulted=False,
        )
    messages = assemble_evidence_prompt(query, report, template=template)
    request = CompletionRequest(
        messages=tuple(messages), model=model, temperature=0.0, timeout_ms=timeout_ms
    )
    try:
        reply = gateway.complete(request).text
    except GatewayError as exc:
        return Decision(
            label=DecisionLabel.NOT_NEEDED,
            rationale=f"gateway failure, defaulting to no clarification: {exc}",
            llm_consulted=False,
        )
    parsed = parse_decision_reply(reply)
    if parsed is None:
        return Decision(
            label=DecisionLabel.NOT_NEEDED,
            rationale=f"unparseable decision reply: {reply[:120]!r}",
            llm_consulted=True,
        )
    label, rationale = parsed
    return Decision(label=label, rationale=rationale, llm_consulted=True)
