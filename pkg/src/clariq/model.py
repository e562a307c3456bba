"""Shared immutable domain types for the clarification pipeline.

Everything here is frozen after construction and safe to share across
threads. Validation happens in ``__post_init__`` so an invalid object
can never exist.
"""

from __future__ import annotations

import re
from dataclasses import dataclass, field
from enum import Enum
from typing import Optional, Tuple

MAX_QUERY_CHARS = 4096

_TOKEN_RE = re.compile(r"[^\W_]+", re.UNICODE)


class ValidationError(ValueError):
    """A domain object or input violated one of its invariants."""


def tokenize(text: str) -> list:
    """Lowercase, split on whitespace/punctuation, drop punctuation-only tokens.

    Deterministic: same input always yields the same token list.
    """
    return _TOKEN_RE.findall(text.lower())


class AmbiguityCategory(str, Enum):
    CONTEXTUAL = "contextual"
    SYNTACTIC = "syntactic"
    ALEATORIC = "aleatoric"


class EvidenceKind(str, Enum):
    GENERIC = "generic"
    PRODUCT = "product"
    ENTITY = "entity"
    GROUNDING = "grounding"


class DecisionLabel(str, Enum):
    NEEDED = "needed"
    NOT_NEEDED = "not_needed"


@dataclass(frozen=True)
class UserQuery:
    text: str
    normalized_tokens: Tuple[str, ...]
    turn_id: str = "t0"

    def __post_init__(self):
        if not self.text.strip():
            raise ValidationError("query text is empty after trimming")
        if len(self.text) > MAX_QUERY_CHARS:
            raise ValidationError(
                f"query text exceeds {MAX_QUERY_CHARS} characters "
                f"(got {len(self.text)})"
            )
        expected = tuple(tokenize(self.text))
        if tuple(self.normalized_tokens) != expected:
            raise ValidationError("normalized_tokens do not match tokenize(text)")
        object.__setattr__(self, "normalized_tokens", expected)


def validate_query(text: str, turn_id: str = "t0") -> UserQuery:
    """Build a UserQuery, raising ValidationError naming the violated bound."""
    if not text.strip():
        raise ValidationError("query text is empty after trimming")
    if len(text) > MAX_QUERY_CHARS:
        raise ValidationError(
            f"query text exceeds {MAX_QUERY_CHARS} characters (got {len(text)})"
        )
    return UserQuery(text=text, normalized_tokens=tuple(tokenize(text)), turn_id=turn_id)


@dataclass(frozen=True)
class Span:
    start_token: int
    end_token: int  # exclusive
    surface: str

    def __post_init__(self):
        if self.start_token < 0:
            raise ValidationError("span start_token must be >= 0")
        if self.end_token <= self.start_token:
            raise ValidationError("span end_token must exceed start_token")


@dataclass(frozen=True)
class Candidate:
    id: str
    label: str


@dataclass(frozen=True)
class Evidence:
    agent_id: str
    kind: EvidenceKind
    category: Optional[AmbiguityCategory] = None
    spans: Tuple[Span, ...] = ()
    candidates: Tuple[Candidate, ...] = ()
    rationale: str = ""

    def __post_init__(self):
        object.__setattr__(self, "spans", tuple(self.spans))
        object.__setattr__(self, "candidates", tuple(self.candidates))
        prev_end = -1
        prev_start = -1
        for span in self.spans:
            if span.start_token < prev_start:
                raise ValidationError("evidence spans must be sorted by start_token")
            if span.start_token < prev_end:
                raise ValidationError("evidence spans must not overlap")
            prev_start = span.start_token
            prev_end = span.end_token
        ids = [c.id for c in self.candidates]
        if len(ids) != len(set(ids)):
            raise ValidationError("evidence candidates contain duplicate ids")

    def check_token_bounds(self, token_count: int) -> None:
        """Verify all spans fit within the originating query's token count."""
        for span in self.spans:
            if span.end_token > token_count:
                raise ValidationError(
                    f"span {span.start_token}:{span.end_token} exceeds "
                    f"query token count {token_count}"
                )


@dataclass(frozen=True)
class AgentVerdict:
    agent_id: str
    detected: bool
    evidence: Optional[Evidence] = None

    def __post_init__(self):
        if self.detected and self.evidence is None:
            raise ValidationError("a detecting verdict must carry evidence")
        if (
            self.evidence is not None
            and self.evidence.kind is EvidenceKind.GROUNDING
            and self.detected
        ):
            raise ValidationError("grounding evidence cannot mark detected=true")


@dataclass(frozen=True)
class Decision:
    label: DecisionLabel
    rationale: str
    llm_consulted: bool

    def __post_init__(self):
        if not self.llm_consulted and self.label is not DecisionLabel.NOT_NEEDED:
            raise ValidationError("only the short-circuit path may skip the LLM")


@dataclass(frozen=True)
class Choice:
    id: str
    label: str
    payload: str


@dataclass(frozen=True)
class ClarificationQuestion:
    text: str
    choices: Tuple[Choice, ...]

    def __post_init__(self):
        object.__setattr__(self, "choices", tuple(self.choices))
        if not self.choices:
            raise ValidationError("a clarification question needs at least one choice")
        ids = [c.id for c in self.choices]
        if len(ids) != len(set(ids)):
            raise ValidationError("choice ids must be unique")


@dataclass(frozen=True)
class Feedback:
    selected_choice_id: Optional[str] = None
    free_text: Optional[str] = None

    def __post_init__(self):
        populated = sum(x is not None for x in (self.selected_choice_id, self.free_text))
        if populated != 1:
            raise ValidationError(
                "feedback must populate exactly one of selected_choice_id / free_text"
            )
