"""clariq: multi-agent clarification pipeline for ambiguous user queries.

Detector agents analyze a query concurrently, an LLM-backed decision
stage judges whether clarification is needed, choices are derived from
agent evidence, and user feedback refines the final answer. Ships with an
evaluation harness comparing the multi-agent pipeline against a few-shot
baseline.
"""

from .config import AppConfig, load_config
from .engine import ClarificationEngine
from .model import (
    AgentVerdict,
    AmbiguityCategory,
    Candidate,
    Choice,
    ClarificationQuestion,
    Decision,
    DecisionLabel,
    Evidence,
    EvidenceKind,
    Feedback,
    Span,
    UserQuery,
    ValidationError,
    tokenize,
    validate_query,
)

__version__ = "0.1.0"

__all__ = [
    "AppConfig",
    "load_config",
    "ClarificationEngine",
    "AgentVerdict",
    "AmbiguityCategory",
    "Candidate",
    "Choice",
    "ClarificationQuestion",
    "Decision",
    "DecisionLabel",
    "Evidence",
    "EvidenceKind",
    "Feedback",
    "Span",
    "UserQuery",
    "ValidationError",
    "tokenize",
    "validate_query",
]
