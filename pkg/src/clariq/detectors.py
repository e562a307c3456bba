"""Built-in agents: generic LLM detector, product detector, entity-linking
detector, and the concept-graph grounding module, plus the knowledge
stores they consult.

Entity and concept matching both use greedy leftmost-longest alias
matching over the query's normalized tokens.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path
from typing import Dict, List, Optional, Tuple

from .gateway import ChatMessage, CompletionRequest, Role
from .model import (
    AgentVerdict,
    AmbiguityCategory,
    Candidate,
    Evidence,
    EvidenceKind,
    Span,
    UserQuery,
    ValidationError,
    tokenize,
)

DEFINITION_SNIPPET_CHARS = 200


@dataclass(frozen=True)
class Entity:
    id: str
    display_name: str
    entity_type: str
    description: str


@dataclass(frozen=True)
class EntityKB:
    entries: Dict[Tuple[str, ...], Tuple[Entity, ...]]
    max_alias_len: int

    @classmethod
    def build(cls, entries: Dict[Tuple[str, ...], Tuple[Entity, ...]]) -> "EntityKB":
        for alias, entities in entries.items():
            if not alias:
                raise ValidationError("entity alias token sequence must be non-empty")
            if not entities:
                raise ValidationError(f"alias {alias} maps to no entities")
        # an entity may appear under several aliases; ids must be globally consistent
        by_id = {}
        for ents in entries.values():
            for e in ents:
                if e.id in by_id and by_id[e.id] != e:
                    raise ValidationError(f"entity id {e.id} maps to conflicting records")
                by_id[e.id] = e
        max_len = max((len(a) for a in entries), default=0)
        return cls(entries=dict(entries), max_alias_len=max_len)

    @classmethod
    def from_json(cls, path) -> "EntityKB":
        raw = json.loads(Path(path).read_text(encoding="utf-8"))
        entries: Dict[Tuple[str, ...], List[Entity]] = {}
        for item in raw:
            entity = Entity(
                id=item["id"],
                display_name=item["name"],
                entity_type=item.get("type", ""),
                description=item.get("description", ""),
            )
            for alias in item["aliases"]:
                key = tuple(tokenize(alias))
                if not key:
                    raise ValidationError(f"alias {alias!r} tokenizes to nothing")
                entries.setdefault(key, []).append(entity)
        return cls.build({k: tuple(v) for k, v in entries.items()})


@dataclass(frozen=True)
class Product:
    id: str
    name: str
    keywords: frozenset

    def __post_init__(self):
        if not self.keywords:
            raise ValidationError(f"product {self.id} has an empty keyword set")


@dataclass(frozen=True)
class ProductCatalog:
    products: Tuple[Product, ...]

    def __post_init__(self):
        ids = [p.id for p in self.products]
        if len(ids) != len(set(ids)):
            raise ValidationError("product ids must be unique")

    @classmethod
    def from_json(cls, path) -> "ProductCatalog":
        raw = json.loads(Path(path).read_text(encoding="utf-8"))
        products = tuple(
            Product(
                id=item["id"],
                name=item["name"],
                keywords=frozenset(k.lower() for k in item["keywords"]),
            )
            for item in raw
        )
        return cls(products=products)


@dataclass(frozen=True)
class ConceptNode:
    term: str
    definition: str
    related: Tuple[str, ...] = ()


@dataclass(frozen=True)
class ConceptLexicon:
    terms: Dict[Tuple[str, ...], ConceptNode]
    max_term_len: int

    @classmethod
    def build(cls, terms: Dict[Tuple[str, ...], ConceptNode]) -> "ConceptLexicon":
        known = {node.term for node in terms.values()}
        for node in terms.values():
            for ref in node.related:
                if ref not in known:
                    raise ValidationError(
                        f"concept {node.term!r} references unknown term {ref!r}"
                    )
        max_len = max((len(t) for t in terms), default=0)
        return cls(terms=dict(terms), max_term_len=max_len)

    @classmethod
    def from_json(cls, path) -> "ConceptLexicon":
        raw = json.loads(Path(path).read_text(encoding="utf-8"))
        terms = {}
        for item in raw:
            key = tuple(tokenize(item["term"]))
            if not key:
                raise ValidationError(f"concept term {item['term']!r} tokenizes to nothing")
            terms[key] = ConceptNode(
                term=item["term"].lower(),
                definition=item["definition"],
                related=tuple(item.get("related", ())),
            )
        return cls.build(terms)


@dataclass(frozen=True)
class SpanMatch:
    start_token: int
    end_token: int  # exclusive
    surface: str
    candidates: Tuple[Entity, ...]

    def __post_init__(self):
        if self.end_token <= self.start_token:
            raise ValidationError("span end_token must exceed start_token")
        if not self.candidates:
            raise ValidationError("span match must carry at least one candidate")


def _longest_matches(tokens, table, max_len):
    """Greedy leftmost-longest scan; yields (start, end, key) without overlaps."""
    i = 0
    n = len(tokens)
    while i < n:
        hit = None
        for length in range(min(max_len, n - i), 0, -1):
            key = tuple(tokens[i : i + length])
            if key in table:
                hit = (i, i + length, key)
                break
        if hit is None:
            i += 1
        else:
            yield hit
            i = hit[1]


def link_entities(query: UserQuery, kb: EntityKB) -> List[SpanMatch]:
    tokens = list(query.normalized_tokens)
    matches = []
    for start, end, key in _longest_matches(tokens, kb.entries, kb.max_alias_len):
        matches.append(
            SpanMatch(
                start_token=start,
                end_token=end,
                surface=" ".join(tokens[start:end]),
                candidates=kb.entries[key],
            )
        )
    return matches


def detect_entity_ambiguity(
    spans: List[SpanMatch], agent_id: str = "entity_linker"
) -> AgentVerdict:
    ambiguous = [s for s in spans if len(s.candidates) >= 2]
    if not ambiguous:
        return AgentVerdict(agent_id=agent_id, detected=False)
    seen = set()
    candidates = []
    for span in ambiguous:
        for entity in span.candidates:
            if entity.id not in seen:
                seen.add(entity.id)
                candidates.append(Candidate(id=entity.id, label=entity.display_name))
    evidence = Evidence(
        agent_id=agent_id,
        kind=EvidenceKind.ENTITY,
        category=AmbiguityCategory.ALEATORIC,
        spans=tuple(
            Span(start_token=s.start_token, end_token=s.end_token, surface=s.surface)
            for s in ambiguous
        ),
        candidates=tuple(candidates),
        rationale="; ".join(
            f"'{s.surface}' links to {len(s.candidates)} entities" for s in ambiguous
        ),
    )
    return AgentVerdict(agent_id=agent_id, detected=True, evidence=evidence)


def detect_product(
    query: UserQuery,
    catalog: ProductCatalog,
    threshold: int = 1,
    margin: int = 0,
    agent_id: str = "product_detector",
) -> AgentVerdict:
    """Keyword-overlap scoring; ambiguous when >=2 products clear the
    threshold and the top two scores are within the margin."""
    if threshold < 1:
        raise ValidationError("product threshold must be >= 1")
    if margin < 0:
        raise ValidationError("product margin must be >= 0")
    tokens = set(query.normalized_tokens)
    scores = {p.id: len(p.keywords & tokens) for p in catalog.products}
    qualified = [p for p in catalog.products if scores[p.id] >= threshold]
    if not qualified:
        return AgentVerdict(agent_id=agent_id, detected=False)
    ranked = sorted(qualified, key=lambda p: (-scores[p.id], p.id))
    top1 = scores[ranked[0].id]
    top2 = scores[ranked[1].id] if len(ranked) >= 2 else None
    detected = len(ranked) >= 2 and (top1 - top2) <= margin
    if not detected:
        evidence = Evidence(
            agent_id=agent_id,
            kind=EvidenceKind.PRODUCT,
            rationale=(
                f"single dominant product {ranked[0].name} "
                f"(score {top1}, runner-up {top2 if top2 is not None else 'none'})"
            ),
        )
        return AgentVerdict(agent_id=agent_id, detected=False, evidence=evidence)
    contenders = [p for p in ranked if scores[p.id] >= top1 - margin]
    evidence = Evidence(
        agent_id=agent_id,
        kind=EvidenceKind.PRODUCT,
        category=AmbiguityCategory.CONTEXTUAL,
        candidates=tuple(Candidate(id=p.id, label=p.name) for p in contenders),
        rationale="; ".join(f"{p.name} scored {scores[p.id]}" for p in contenders),
    )
    return AgentVerdict(agent_id=agent_id, detected=True, evidence=evidence)


GENERIC_SYSTEM_PROMPT = (
    "You review a single user question for ambiguity. Reply with exactly one "
    "line: CONTEXTUAL, SYNTACTIC, ALEATORIC, or NONE, followed by a colon and "
    "a one-line rationale. Use CONTEXTUAL when a reference is underspecified, "
    "SYNTACTIC when the sentence is malformed or incomplete, ALEATORIC when a "
    "token has multiple possible meanings, and NONE when the question is clear."
)

_GENERIC_LABELS = {
    "contextual": AmbiguityCategory.CONTEXTUAL,
    "syntactic": AmbiguityCategory.SYNTACTIC,
    "aleatoric": AmbiguityCategory.ALEATORIC,
}


def detect_generic(
    query: UserQuery,
    gateway,
    model: str = "default",
    timeout_ms: int = 30_000,
    agent_id: str = "generic_detector",
) -> AgentVerdict:
    request = CompletionRequest(
        messages=(
            ChatMessage(role=Role.SYSTEM, content=GENERIC_SYSTEM_PROMPT),
            ChatMessage(role=Role.USER, content=f"Question: {query.text}"),
        ),
        model=model,
        temperature=0.0,
        timeout_ms=timeout_ms,
    )
    reply = gateway.complete(request).text.strip()
    head, _, rationale = reply.partition(":")
    label = head.strip().lower()
    if label == "none":
        return AgentVerdict(
            agent_id=agent_id,
            detected=False,
            evidence=Evidence(
                agent_id=agent_id,
                kind=EvidenceKind.GENERIC,
                rationale=rationale.strip(),
            ),
        )
    if label in _GENERIC_LABELS:
        evidence = Evidence(
            agent_id=agent_id,
            kind=EvidenceKind.GENERIC,
            category=_GENERIC_LABELS[label],
            rationale=rationale.strip(),
        )
        return AgentVerdict(agent_id=agent_id, detected=True, evidence=evidence)
    return AgentVerdict(
        agent_id=agent_id,
        detected=False,
        evidence=Evidence(
            agent_id=agent_id,
            kind=EvidenceKind.GENERIC,
            rationale=f"unparseable detector reply: {reply[:120]!r}",
        ),
    )


def ground_concepts(
    query: UserQuery, lexicon: ConceptLexicon, agent_id: str = "concept_grounder"
) -> AgentVerdict:
    tokens = list(query.normalized_tokens)
    spans = []
    candidates = []
    notes = []
    seen = set()
    for start, end, key in _longest_matches(tokens, lexicon.terms, lexicon.max_term_len):
        node = lexicon.terms[key]
        spans.append(
            Span(start_token=start, end_token=end, surface=" ".join(tokens[start:end]))
        )
        if node.term not in seen:
            seen.add(node.term)
            candidates.append(Candidate(id=node.term, label=node.term))
            note = f"{node.term}: {node.definition[:DEFINITION_SNIPPET_CHARS]}"
            if node.related:
                note += f" (related: {', '.join(node.related)})"
            notes.append(note)
    evidence = Evidence(
        agent_id=agent_id,
        kind=EvidenceKind.GROUNDING,
        spans=tuple(spans),
        candidates=tuple(candidates),
        rationale=" | ".join(notes),
    )
    return AgentVerdict(agent_id=agent_id, detected=False, evidence=evidence)
