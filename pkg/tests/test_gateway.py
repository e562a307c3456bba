import json

import pytest

from clariq.gateway import (
    ChatMessage,
    CompletionRequest,
    CompletionResult,
    GatewayConfigError,
    HttpGateway,
    RecordingGateway,
    ReplayMissError,
    ReplayGateway,
    Role,
    ScriptMissError,
    ScriptRule,
    ScriptedGateway,
    record_replay,
    request_digest,
)
from clariq.model import ValidationError


def make_request(content, model="m"):
    return CompletionRequest(
        messages=(ChatMessage(role=Role.USER, content=content),), model=model
    )


class TestRequestValidation:
    def test_needs_messages(self):
        with pytest.raises(ValidationError):
            CompletionRequest(messages=(), model="m")

    def test_rejects_negative_temperature(self):
        with pytest.raises(ValidationError):
            CompletionRequest(
                messages=(ChatMessage(Role.USER, "x"),), model="m", temperature=-1
            )

    def test_rejects_empty_content(self):
        with pytest.raises(ValidationError):
            ChatMessage(role=Role.USER, content="")


class TestScriptedGateway:
    def test_matching_rule_fires(self):
        gw = ScriptedGateway(
            [ScriptRule(matcher="AMBIGUITY EVIDENCE", response="NEEDED: product unclear")]
        )
        result = gw.complete(make_request("... AMBIGUITY EVIDENCE ..."))
        assert result.text == "NEEDED: product unclear"

    def test_no_match_raises(self):
        gw = ScriptedGateway([ScriptRule(matcher="xyz", response="r")])
        with pytest.raises(ScriptMissError):
            gw.complete(make_request("nothing relevant"))

    def test_higher_priority_wins(self):
        gw = ScriptedGateway(
            [
                ScriptRule(matcher="hello", response="low", priority=5),
                ScriptRule(matcher="hello", response="high", priority=10),
            ]
        )
        assert gw.complete(make_request("hello")).text == "high"

    def test_equal_priority_uses_registration_order(self):
        gw = ScriptedGateway(
            [
                ScriptRule(matcher="hello", response="first", priority=3),
                ScriptRule(matcher="hello", response="second", priority=3),
            ]
        )
        assert gw.complete(make_request("hello")).text == "first"

    def test_regex_matcher(self):
        gw = ScriptedGateway([ScriptRule(matcher=r"case \d+", response="r", regex=True)])
        assert gw.complete(make_request("this is case 42")).text == "r"

    def test_matches_across_all_messages(self):
        gw = ScriptedGateway([ScriptRule(matcher="sysmark", response="r")])
        req = CompletionRequest(
            messages=(
                ChatMessage(Role.SYSTEM, "sysmark instructions"),
                ChatMessage(Role.USER, "query"),
            ),
            model="m",
        )
        assert gw.complete(req).text == "r"

    def test_call_count(self):
        gw = ScriptedGateway([ScriptRule(matcher="q", response="r")])
        gw.complete(make_request("q1"))
        gw.complete(make_request("q2"))
        assert gw.call_count == 2

    def test_from_file(self, tmp_path):
        path = tmp_path / "rules.json"
        path.write_text(json.dumps([{"matcher": "m", "response": "r", "priority": 1}]))
        gw = ScriptedGateway.from_file(path)
        assert gw.complete(make_request("has m inside")).text == "r"


class TestDigest:
    def test_digest_stable(self):
        assert request_digest(make_request("hello")) == request_digest(
            make_request("hello")
        )

    def test_digest_covers_content(self):
        assert request_digest(make_request("a")) != request_digest(make_request("b"))

    def test_digest_covers_model(self):
        assert request_digest(make_request("a", model="m1")) != request_digest(
            make_request("a", model="m2")
        )


class FakeHttpGateway(HttpGateway):
    """HttpGateway stand-in that answers deterministically without network."""

    def __init__(self):
        super().__init__(base_url="http://unused")
        self.calls = 0

    def complete(self, request):
        self.calls += 1
        return CompletionResult(text=f"reply to {request.messages[-1].content}")


class TestRecordReplay:
    def test_record_then_replay_identical(self, tmp_path):
        transcript = tmp_path / "t.jsonl"
        fake = FakeHttpGateway()
        recorder = record_replay("record", transcript, inner=fake)
        prompts = ["alpha", "beta", "gamma"]
        recorded = [recorder.complete(make_request(p)).text for p in prompts]

        replayer = record_replay("replay", transcript)
        replayed = [replayer.complete(make_request(p)).text for p in prompts]
        assert replayed == recorded
        assert fake.calls == 3  # no network activity during replay

    def test_replay_miss(self, tmp_path):
        transcript = tmp_path / "t.jsonl"
        recorder = record_replay("record", transcript, inner=FakeHttpGateway())
        recorder.complete(make_request("known"))
        replayer = record_replay("replay", transcript)
        with pytest.raises(ReplayMissError):
            replayer.complete(make_request("novel"))

    def test_record_requires_http_backend(self, tmp_path):
        scripted = ScriptedGateway([ScriptRule(matcher="x", response="y")])
        with pytest.raises(GatewayConfigError):
            record_replay("record", tmp_path / "t.jsonl", inner=scripted)

    def test_replay_requires_existing_transcript(self, tmp_path):
        with pytest.raises(GatewayConfigError):
            ReplayGateway(tmp_path / "missing.jsonl")

    def test_unknown_mode(self, tmp_path):
        with pytest.raises(GatewayConfigError):
            record_replay("stream", tmp_path / "t.jsonl")
