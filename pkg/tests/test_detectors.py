import pytest
from hypothesis import given, settings, strategies as st

from clariq.detectors import (
    ConceptLexicon,
    ConceptNode,
    Entity,
    EntityKB,
    Product,
    ProductCatalog,
    detect_entity_ambiguity,
    detect_generic,
    detect_product,
    ground_concepts,
    link_entities,
)
from clariq.gateway import ScriptRule, ScriptedGateway
from clariq.model import AmbiguityCategory, ValidationError, validate_query

from oracles import oracle_leftmost_longest

E1 = Entity("E1", "XDM Individual Profile Schema", "schema", "profile schema")
E2 = Entity("E2", "Query Service ad hoc schema", "schema", "ad hoc schema")
E4 = Entity("E4", "Customer Profile", "profile", "merged profile view")
E5 = Entity("E5", "Profile dataset", "dataset", "profile-enabled dataset")

KB = EntityKB.build(
    {
        ("schema",): (E1, E2),
        ("customer", "profile"): (E4,),
        ("profile",): (E4, E5),
    }
)

CATALOG = ProductCatalog(
    products=(
        Product("P1", "Real-Time CDP", frozenset({"segment", "audience", "profile"})),
        Product("P2", "Journey Analytics", frozenset({"segment", "report", "metric"})),
        Product("P3", "Journey Optimizer", frozenset({"journey", "campaign"})),
    )
)


class TestLinkEntities:
    def test_single_alias_match(self):
        spans = link_entities(validate_query("what is a schema"), KB)
        assert len(spans) == 1
        assert (spans[0].start_token, spans[0].end_token) == (3, 4)
        assert spans[0].surface == "schema"
        assert spans[0].candidates == (E1, E2)

    def test_no_alias_present(self):
        assert link_entities(validate_query("hello world"), KB) == []

    def test_longer_alias_wins(self):
        spans = link_entities(validate_query("update customer profile"), KB)
        assert len(spans) == 1
        assert (spans[0].start_token, spans[0].end_token) == (1, 3)
        assert spans[0].surface == "customer profile"
        assert spans[0].candidates == (E4,)

    def test_spans_sorted_and_disjoint(self):
        spans = link_entities(validate_query("schema for a profile schema"), KB)
        for a, b in zip(spans, spans[1:]):
            assert a.end_token <= b.start_token

    @settings(max_examples=200, deadline=None)
    @given(data=st.data())
    def test_matches_exhaustive_oracle(self, data):
        vocab = ["alpha", "beta", "gamma", "delta", "eps"]
        alias_strategy = st.lists(st.sampled_from(vocab), min_size=1, max_size=3).map(tuple)
        aliases = data.draw(
            st.dictionaries(alias_strategy, st.just(None), min_size=1, max_size=20)
        )
        entries = {
            alias: (Entity(f"E{i}", " ".join(alias), "t", ""),)
            for i, alias in enumerate(aliases)
        }
        kb = EntityKB.build(entries)
        tokens = data.draw(st.lists(st.sampled_from(vocab), min_size=1, max_size=12))
        query = validate_query(" ".join(tokens))
        got = [(s.start_token, s.end_token) for s in link_entities(query, kb)]
        expected = [(s, e) for s, e, _ in oracle_leftmost_longest(tokens, entries)]
        assert got == expected


class TestEntityAmbiguity:
    def test_multiple_candidates_detected(self):
        spans = link_entities(validate_query("what is a schema"), KB)
        verdict = detect_entity_ambiguity(spans)
        assert verdict.detected
        assert verdict.evidence.category is AmbiguityCategory.ALEATORIC
        assert [c.id for c in verdict.evidence.candidates] == ["E1", "E2"]

    def test_single_candidate_not_detected(self):
        spans = link_entities(validate_query("update customer profile"), KB)
        assert not detect_entity_ambiguity(spans).detected

    def test_no_spans_not_detected(self):
        assert not detect_entity_ambiguity([]).detected


class TestProductDetector:
    def test_tied_products_detected(self):
        verdict = detect_product(
            validate_query("how do i create a segment"), CATALOG, threshold=1, margin=0
        )
        assert verdict.detected
        assert [c.id for c in verdict.evidence.candidates] == ["P1", "P2"]

    def test_single_dominant_product(self):
        verdict = detect_product(
            validate_query("how do i build a journey campaign"), CATALOG
        )
        assert not verdict.detected
        assert "Journey Optimizer" in verdict.evidence.rationale

    def test_no_keyword_overlap(self):
        verdict = detect_product(validate_query("hello"), CATALOG)
        assert not verdict.detected

    def test_margin_widens_candidates(self):
        verdict = detect_product(
            validate_query("segment report metric journey campaign"),
            CATALOG,
            threshold=1,
            margin=2,
        )
        assert verdict.detected
        # P2 scores 3, P3 scores 2, P1 scores 1; margin 2 keeps all three
        assert [c.id for c in verdict.evidence.candidates] == ["P2", "P3", "P1"]

    def test_invalid_threshold(self):
        with pytest.raises(ValidationError):
            detect_product(validate_query("x"), CATALOG, threshold=0)

    @given(st.permutations([0, 1, 2]))
    def test_invariant_under_catalog_reordering(self, order):
        products = tuple(CATALOG.products[i] for i in order)
        shuffled = ProductCatalog(products=products)
        query = validate_query("how do i create a segment")
        a = detect_product(query, CATALOG)
        b = detect_product(query, shuffled)
        assert a.detected == b.detected
        assert [c.id for c in a.evidence.candidates] == [
            c.id for c in b.evidence.candidates
        ]


class TestGenericDetector:
    def make_gateway(self, reply):
        return ScriptedGateway([ScriptRule(matcher="Question:", response=reply)])

    def test_contextual_detection(self):
        verdict = detect_generic(
            validate_query("how do i delete it"),
            self.make_gateway("CONTEXTUAL: referent of 'it' unclear"),
        )
        assert verdict.detected
        assert verdict.evidence.category is AmbiguityCategory.CONTEXTUAL
        assert "referent" in verdict.evidence.rationale

    def test_none_branch(self):
        verdict = detect_generic(
            validate_query("what is the capital of france"),
            self.make_gateway("NONE: query fully specified"),
        )
        assert not verdict.detected

    def test_unparseable_reply_falls_back(self):
        verdict = detect_generic(validate_query("hello"), self.make_gateway("banana"))
        assert not verdict.detected
        assert "unparseable" in verdict.evidence.rationale


class TestConceptGrounding:
    LEXICON = ConceptLexicon.build(
        {
            ("xdm",): ConceptNode("xdm", "Experience Data Model " * 30, ("profile",)),
            ("profile",): ConceptNode("profile", "merged customer view"),
        }
    )

    def test_grounding_never_detects(self):
        verdict = ground_concepts(validate_query("export the xdm schema"), self.LEXICON)
        assert not verdict.detected
        assert [c.id for c in verdict.evidence.candidates] == ["xdm"]
        assert "Experience Data Model" in verdict.evidence.rationale

    def test_definition_truncated_to_200_chars(self):
        verdict = ground_concepts(validate_query("what is xdm"), self.LEXICON)
        # "xdm: " prefix + 200-char snippet + related suffix
        body = verdict.evidence.rationale.split("(related")[0]
        assert len(body) <= len("xdm: ") + 200 + 1

    def test_related_terms_included(self):
        verdict = ground_concepts(validate_query("what is xdm"), self.LEXICON)
        assert "profile" in verdict.evidence.rationale

    def test_no_terms_empty_candidates(self):
        verdict = ground_concepts(validate_query("hello world"), self.LEXICON)
        assert not verdict.detected
        assert verdict.evidence.candidates == ()

    def test_lexicon_rejects_dangling_reference(self):
        with pytest.raises(ValidationError):
            ConceptLexicon.build(
                {("a",): ConceptNode("a", "def", ("missing",))}
            )
