import time

import pytest
from hypothesis import given, settings, strategies as st

from clariq.framework import (
    AgentDescriptor,
    AgentKind,
    AgentOutcome,
    AgentRegistry,
    DispatchConfigError,
    OutcomeStatus,
    RegistrationError,
)
from clariq.model import AgentVerdict, ValidationError, validate_query

QUERY = validate_query("what is a schema")


def verdict_fn(agent_id, detected=False, delay=0.0):
    def analyze(query, _ctx):
        if delay:
            time.sleep(delay)
        if detected:
            from clariq.model import Evidence, EvidenceKind

            ev = Evidence(agent_id=agent_id, kind=EvidenceKind.GENERIC, rationale="hit")
            return AgentVerdict(agent_id=agent_id, detected=True, evidence=ev)
        return AgentVerdict(agent_id=agent_id, detected=False)

    return analyze


def descriptor(agent_id, timeout_ms=5000, enabled=True, kind=AgentKind.DETECTOR):
    return AgentDescriptor(agent_id=agent_id, kind=kind, timeout_ms=timeout_ms, enabled=enabled)


class TestRegistry:
    def test_registration_order_listing(self):
        reg = AgentRegistry()
        for name in ["a", "b", "c", "d"]:
            reg.register(descriptor(name), verdict_fn(name))
        assert [d.agent_id for d in reg.descriptors()] == ["a", "b", "c", "d"]

    def test_duplicate_id_rejected(self):
        reg = AgentRegistry()
        reg.register(descriptor("a"), verdict_fn("a"))
        with pytest.raises(RegistrationError):
            reg.register(descriptor("a"), verdict_fn("a"))

    def test_disabled_agent_reports_disabled(self):
        reg = AgentRegistry()
        reg.register(descriptor("a", enabled=False), verdict_fn("a"))
        reg.register(descriptor("b"), verdict_fn("b"))
        report = reg.dispatch_all(QUERY)
        assert report.outcomes[0].status is OutcomeStatus.DISABLED
        assert report.outcomes[1].status is OutcomeStatus.COMPLETED

    def test_empty_registry_is_config_error(self):
        with pytest.raises(DispatchConfigError):
            AgentRegistry().dispatch_all(QUERY)


class TestDispatch:
    def test_one_detection_among_four(self):
        reg = AgentRegistry()
        reg.register(descriptor("a"), verdict_fn("a"))
        reg.register(descriptor("b"), verdict_fn("b", detected=True))
        reg.register(descriptor("c"), verdict_fn("c"))
        reg.register(descriptor("d"), verdict_fn("d"))
        report = reg.dispatch_all(QUERY)
        assert all(o.status is OutcomeStatus.COMPLETED for o in report.outcomes)
        assert [o.agent_id for o in report.detecting()] == ["b"]

    def test_timeout_isolated(self):
        reg = AgentRegistry()
        reg.register(descriptor("slow", timeout_ms=50), verdict_fn("slow", delay=1.0))
        reg.register(descriptor("fast"), verdict_fn("fast"))
        report = reg.dispatch_all(QUERY)
        assert report.outcomes[0].status is OutcomeStatus.TIMED_OUT
        assert "50 ms" in report.outcomes[0].error_detail
        assert report.outcomes[1].status is OutcomeStatus.COMPLETED

    def test_exception_isolated(self):
        def boom(query, _ctx):
            raise RuntimeError("kaput")

        reg = AgentRegistry()
        reg.register(descriptor("boom"), boom)
        reg.register(descriptor("ok"), verdict_fn("ok"))
        report = reg.dispatch_all(QUERY)
        assert report.outcomes[0].status is OutcomeStatus.FAILED
        assert "kaput" in report.outcomes[0].error_detail
        assert report.outcomes[1].status is OutcomeStatus.COMPLETED

    def test_out_of_bounds_evidence_fails_agent(self):
        def bad(query, _ctx):
            from clariq.model import Evidence, EvidenceKind, Span

            ev = Evidence(
                agent_id="bad",
                kind=EvidenceKind.ENTITY,
                spans=(Span(0, 99, "x"),),
            )
            return AgentVerdict(agent_id="bad", detected=False, evidence=ev)

        reg = AgentRegistry()
        reg.register(descriptor("bad"), bad)
        report = reg.dispatch_all(QUERY)
        assert report.outcomes[0].status is OutcomeStatus.FAILED

    def test_agents_run_concurrently(self):
        reg = AgentRegistry()
        for name in ["a", "b", "c", "d"]:
            reg.register(descriptor(name), verdict_fn(name, delay=0.2))
        start = time.perf_counter()
        reg.dispatch_all(QUERY)
        elapsed = time.perf_counter() - start
        # four 200 ms agents sequentially would take 800 ms
        assert elapsed < 0.6

    @settings(max_examples=15, deadline=None)
    @given(st.permutations([0.0, 0.01, 0.02, 0.03]))
    def test_order_invariant_under_completion_times(self, delays):
        reg = AgentRegistry()
        names = ["a", "b", "c", "d"]
        for name, delay in zip(names, delays):
            reg.register(descriptor(name), verdict_fn(name, delay=delay))
        report = reg.dispatch_all(QUERY)
        assert [o.agent_id for o in report.outcomes] == names

    def test_failure_subset_leaves_others_identical(self):
        def build(fail: set):
            reg = AgentRegistry()
            for name in ["a", "b", "c", "d"]:
                if name in fail:
                    def boom(query, _ctx, n=name):
                        raise RuntimeError(n)

                    reg.register(descriptor(name), boom)
                else:
                    reg.register(descriptor(name), verdict_fn(name, detected=name == "b"))
            return reg.dispatch_all(QUERY)

        baseline = build(set())
        for fail in [{"a"}, {"c", "d"}, {"a", "c"}]:
            report = build(fail)
            for base_o, o in zip(baseline.outcomes, report.outcomes):
                if base_o.agent_id not in fail:
                    assert o.status is base_o.status
                    assert o.verdict == base_o.verdict


class TestOutcomeInvariants:
    def test_completed_requires_verdict(self):
        with pytest.raises(ValidationError):
            AgentOutcome(agent_id="a", status=OutcomeStatus.COMPLETED)

    def test_failed_requires_detail(self):
        with pytest.raises(ValidationError):
            AgentOutcome(agent_id="a", status=OutcomeStatus.FAILED)
