"""Pipeline assembly: builds the gateway, knowledge stores, and agent
registry from an AppConfig and exposes the query -> clarify -> answer
steps used by the service, CLI, and evaluation harness.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import List, Optional

from . import clarify as clarify_ops
from . import decision as decision_ops
from .config import AppConfig, ConfigError, DEFAULT_AGENT_ORDER
from .detectors import (
    ConceptLexicon,
    EntityKB,
    ProductCatalog,
    detect_entity_ambiguity,
    detect_generic,
    detect_product,
    ground_concepts,
    link_entities,
)
from .framework import AgentDescriptor, AgentKind, AgentRegistry, DispatchReport
from .gateway import (
    GatewayConfigError,
    HttpGateway,
    ScriptedGateway,
    record_replay,
)
from .model import (
    Choice,
    ClarificationQuestion,
    Decision,
    DecisionLabel,
    Feedback,
    UserQuery,
    validate_query,
)


@dataclass
class AnalysisResult:
    query: UserQuery
    report: DispatchReport
    decision: Decision
    question: Optional[ClarificationQuestion] = None


def build_gateway(config: AppConfig):
    llm = config.llm
    if llm.backend == "scripted":
        if not llm.script_path:
            return ScriptedGateway()
        return ScriptedGateway.from_file(llm.script_path)
    if llm.backend == "replay":
        if not llm.transcript_path:
            raise GatewayConfigError("replay backend requires transcript_path")
        return record_replay("replay", llm.transcript_path)
    if not llm.base_url:
        raise ConfigError("http backend requires llm.base_url")
    gateway = HttpGateway(base_url=llm.base_url, auth_env=llm.auth_env)
    if llm.record:
        if not llm.transcript_path:
            raise GatewayConfigError("record mode requires transcript_path")
        return record_replay("record", llm.transcript_path, inner=gateway)
    return gateway


def load_stores(config: AppConfig):
    kb = (
        EntityKB.from_json(config.knowledge.entities_path)
        if config.knowledge.entities_path
        else EntityKB.build({})
    )
    catalog = (
        ProductCatalog.from_json(config.knowledge.products_path)
        if config.knowledge.products_path
        else ProductCatalog(products=())
    )
    lexicon = (
        ConceptLexicon.from_json(config.knowledge.concepts_path)
        if config.knowledge.concepts_path
        else ConceptLexicon.build({})
    )
    return kb, catalog, lexicon


class ClarificationEngine:
    """Owns the registry, stores, gateway, and prompt templates."""

    def __init__(self, config: AppConfig, gateway=None):
        self.config = config
        self.gateway = gateway if gateway is not None else build_gateway(config)
        self.entity_kb, self.product_catalog, self.concept_lexicon = load_stores(config)
        self.decision_template = decision_ops.load_template(
            config.templates.decision_prompt_path, "decision_prompt.txt"
        )
        self.question_template = decision_ops.load_template(
            config.templates.question_prompt_path, "question_prompt.txt"
        )
        self.registry = self._build_registry()

    def _build_registry(self) -> AgentRegistry:
        cfg = self.config
        enabled = set(cfg.agents.enabled)
        timeout = cfg.agents.default_timeout_ms
        registry = AgentRegistry()

        def generic(query, _ctx):
            return detect_generic(
                query,
                self.gateway,
                model=cfg.llm.model,
                timeout_ms=cfg.llm.timeout_ms,
            )

        def product(query, _ctx):
            return detect_product(
                query,
                self.product_catalog,
                threshold=cfg.agents.product_threshold,
                margin=cfg.agents.product_margin,
            )

        def entity(query, _ctx):
            return detect_entity_ambiguity(link_entities(query, self.entity_kb))

        def concepts(query, _ctx):
            return ground_concepts(query, self.concept_lexicon)

        builtin = {
            "generic_detector": (AgentKind.DETECTOR, generic),
            "product_detector": (AgentKind.DETECTOR, product),
            "entity_linker": (AgentKind.DETECTOR, entity),
            "concept_grounder": (AgentKind.GROUNDING, concepts),
        }
        for agent_id in DEFAULT_AGENT_ORDER:
            kind, fn = builtin[agent_id]
            registry.register(
                AgentDescriptor(
                    agent_id=agent_id,
                    kind=kind,
                    timeout_ms=timeout,
                    enabled=agent_id in enabled,
                ),
                fn,
            )
        return registry

    # -- pipeline steps -------------------------------------------------

    def analyze(
        self, text: str, turn_id: str = "t0", generate_question: bool = True
    ) -> AnalysisResult:
        """Validate, dispatch all agents, decide, and (when needed) build
        the clarification question. Evaluation runs skip question
        generation: only the needed/not-needed decision is scored."""
        query = validate_query(text, turn_id=turn_id)
        report = self.registry.dispatch_all(query)
        decision = decision_ops.decide(
            query,
            report,
            self.gateway,
            model=self.config.llm.model,
            timeout_ms=self.config.llm.timeout_ms,
            template=self.decision_template,
        )
        question = None
        if generate_question and decision.label is DecisionLabel.NEEDED:
            choices = clarify_ops.derive_choices(report, self.config.choice_cap)
            question = clarify_ops.generate_question(
                query,
                report,
                choices,
                self.gateway,
                model=self.config.llm.model,
                timeout_ms=self.config.llm.timeout_ms,
                template=self.question_template,
            )
        return AnalysisResult(query=query, report=report, decision=decision, question=question)

    def refine(self, query: UserQuery, feedback: Feedback, question: ClarificationQuestion) -> str:
        return clarify_ops.refine_query(query, feedback, question)

    def answer(self, refined_query: str) -> str:
        return clarify_ops.finalize(
            refined_query,
            self.gateway,
            model=self.config.llm.model,
            timeout_ms=self.config.llm.timeout_ms,
        )
