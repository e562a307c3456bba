"""Shared builders for fixture dispatch reports."""

from clariq.framework import AgentOutcome, DispatchReport, OutcomeStatus
from clariq.model import AgentVerdict, Candidate, Evidence, EvidenceKind


def detecting_outcome(agent_id, kind, candidates=(), category=None, rationale="hit"):
    evidence = Evidence(
        agent_id=agent_id,
        kind=kind,
        category=category,
        candidates=tuple(Candidate(*c) for c in candidates),
        rationale=rationale,
    )
    verdict = AgentVerdict(agent_id=agent_id, detected=True, evidence=evidence)
    return AgentOutcome(agent_id=agent_id, status=OutcomeStatus.COMPLETED, verdict=verdict)


def quiet_outcome(agent_id):
    verdict = AgentVerdict(agent_id=agent_id, detected=False)
    return AgentOutcome(agent_id=agent_id, status=OutcomeStatus.COMPLETED, verdict=verdict)


def grounding_outcome(agent_id, candidates=(), rationale="context"):
    evidence = Evidence(
        agent_id=agent_id,
        kind=EvidenceKind.GROUNDING,
        candidates=tuple(Candidate(*c) for c in candidates),
        rationale=rationale,
    )
    verdict = AgentVerdict(agent_id=agent_id, detected=False, evidence=evidence)
    return AgentOutcome(agent_id=agent_id, status=OutcomeStatus.COMPLETED, verdict=verdict)


def report_of(*outcomes):
    return DispatchReport(outcomes=tuple(outcomes))
