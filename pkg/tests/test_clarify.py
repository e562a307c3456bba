import pytest
from hypothesis import given, strategies as st

from clariq.clarify import (
    FALLBACK_QUESTION,
    FinalizeError,
    InvalidFeedbackError,
    derive_choices,
    finalize,
    generate_question,
    refine_query,
)
from clariq.decision import PromptAssemblyError
from clariq.gateway import ScriptRule, ScriptedGateway
from clariq.model import (
    ClarificationQuestion,
    Choice,
    EvidenceKind,
    Feedback,
    validate_query,
)

from helpers import detecting_outcome, quiet_outcome, report_of

QUERY = validate_query("what is a schema")

ENTITY_HIT = detecting_outcome(
    "entity_linker",
    EvidenceKind.ENTITY,
    [("E1", "XDM Individual Profile Schema"), ("E2", "Query Service ad hoc schema")],
)
THREE_ENTITY_HIT = detecting_outcome(
    "entity_linker",
    EvidenceKind.ENTITY,
    [("E1", "Schema A"), ("E2", "Schema B"), ("E3", "Schema C")],
)
PRODUCT_HIT = detecting_outcome(
    "product_detector", EvidenceKind.PRODUCT, [("P1", "CDP"), ("P2", "Analytics")]
)


class TestDeriveChoices:
    def test_entity_candidates_in_order(self):
        choices = derive_choices(report_of(ENTITY_HIT), choice_cap=2)
        assert [(c.id, c.label) for c in choices] == [
            ("E1", "XDM Individual Profile Schema"),
            ("E2", "Query Service ad hoc schema"),
        ]

    def test_earlier_registered_agent_wins_the_cap(self):
        choices = derive_choices(report_of(PRODUCT_HIT, THREE_ENTITY_HIT), choice_cap=2)
        assert [c.id for c in choices] == ["P1", "P2"]

    def test_generic_only_falls_back_to_free_text(self):
        generic = detecting_outcome("generic_detector", EvidenceKind.GENERIC)
        choices = derive_choices(report_of(generic), choice_cap=2)
        assert len(choices) == 1
        assert choices[0].label == "Let me rephrase"

    def test_zero_detections_precondition(self):
        with pytest.raises(PromptAssemblyError):
            derive_choices(report_of(quiet_outcome("a")), choice_cap=2)

    def test_duplicate_candidate_ids_deduped(self):
        a = detecting_outcome("x", EvidenceKind.PRODUCT, [("P1", "CDP")])
        b = detecting_outcome("y", EvidenceKind.ENTITY, [("P1", "CDP"), ("E1", "S")])
        choices = derive_choices(report_of(a, b), choice_cap=5)
        assert [c.id for c in choices] == ["P1", "E1"]

    @given(st.integers(min_value=1, max_value=6))
    def test_cap_always_respected(self, cap):
        choices = derive_choices(report_of(PRODUCT_HIT, THREE_ENTITY_HIT), choice_cap=cap)
        assert 1 <= len(choices) <= cap
        ids = [c.id for c in choices]
        assert len(ids) == len(set(ids))

    def test_deterministic(self):
        report = report_of(PRODUCT_HIT, THREE_ENTITY_HIT)
        assert derive_choices(report, 3) == derive_choices(report, 3)


class TestGenerateQuestion:
    CHOICES = [Choice("E1", "Schema A", "E1"), Choice("E2", "Schema B", "E2")]

    def test_scripted_reply_used(self):
        gateway = ScriptedGateway(
            [
                ScriptRule(
                    "Write one short clarification question",
                    "Do you mean the XDM schema or the ad hoc schema?",
                )
            ]
        )
        q = generate_question(QUERY, report_of(ENTITY_HIT), self.CHOICES, gateway)
        assert q.text == "Do you mean the XDM schema or the ad hoc schema?"
        assert list(q.choices) == self.CHOICES

    def test_gateway_failure_falls_back_to_template(self):
        q = generate_question(QUERY, report_of(ENTITY_HIT), self.CHOICES, ScriptedGateway())
        assert q.text == FALLBACK_QUESTION
        assert list(q.choices) == self.CHOICES

    def test_multi_sentence_reply_trimmed(self):
        gateway = ScriptedGateway(
            [
                ScriptRule(
                    "Write one short clarification question",
                    "Which one? There are two. Pick carefully.",
                )
            ]
        )
        q = generate_question(QUERY, report_of(ENTITY_HIT), self.CHOICES, gateway)
        assert q.text == "Which one?"


class TestRefineQuery:
    QUESTION = ClarificationQuestion(
        text="Which schema?",
        choices=(
            Choice("E1", "XDM Individual Profile Schema", "E1"),
            Choice("E2", "Query Service ad hoc schema", "E2"),
        ),
    )

    def test_selected_choice(self):
        refined = refine_query(QUERY, Feedback(selected_choice_id="E1"), self.QUESTION)
        assert refined == "what is a schema (referring to: XDM Individual Profile Schema)"

    def test_free_text(self):
        refined = refine_query(
            QUERY, Feedback(free_text="the query service one"), self.QUESTION
        )
        assert refined == "what is a schema (clarification: the query service one)"

    def test_unknown_choice_rejected(self):
        with pytest.raises(InvalidFeedbackError):
            refine_query(QUERY, Feedback(selected_choice_id="E9"), self.QUESTION)

    def test_original_text_is_prefix(self):
        for feedback in (Feedback(selected_choice_id="E2"), Feedback(free_text="x")):
            assert refine_query(QUERY, feedback, self.QUESTION).startswith(QUERY.text)


class TestFinalize:
    def test_scripted_answer_returned(self):
        gateway = ScriptedGateway(
            [ScriptRule("Answer the user's question", "An XDM schema defines fields.")]
        )
        assert finalize("what is a schema (referring to: XDM)", gateway) == (
            "An XDM schema defines fields."
        )

    def test_gateway_error_is_turn_failure(self):
        with pytest.raises(FinalizeError):
            finalize("anything", ScriptedGateway())

    def test_empty_reply_rejected(self):
        gateway = ScriptedGateway([ScriptRule("Answer the user's question", "   ")])
        with pytest.raises(FinalizeError, match="empty"):
            finalize("anything", gateway)
