"""LLM completion gateway: HTTP chat-completions backend, a deterministic
scripted backend for offline tests, and a record/replay wrapper.
"""

from __future__ import annotations

import hashlib
import json
import os
import re
import threading
from dataclasses import dataclass, field
from enum import Enum
from pathlib import Path
from typing import List, Optional, Tuple

import requests

from .model import ValidationError


class Role(str, Enum):
    SYSTEM = "system"
    USER = "user"
    ASSISTANT = "assistant"


@dataclass(frozen=True)
class ChatMessage:
    role: Role
    content: str

    def __post_init__(self):
        if not self.content:
            raise ValidationError("chat message content must be non-empty")


@dataclass(frozen=True)
class CompletionRequest:
    messages: Tuple[ChatMessage, ...]
    model: str
    temperature: float = 0.0
    max_tokens: int = 512
    timeout_ms: int = 30_000

    def __post_init__(self):
        object.__setattr__(self, "messages", tuple(self.messages))
        if not self.messages:
            raise ValidationError("a completion request needs at least one message")
        if self.temperature < 0:
            raise ValidationError("temperature must be >= 0")
        if self.max_tokens <= 0:
            raise ValidationError("max_tokens must be positive")
        if self.timeout_ms <= 0:
            raise ValidationError("timeout_ms must be positive")


@dataclass(frozen=True)
class CompletionResult:
    text: str
    prompt_tokens: int = 0
    completion_tokens: int = 0


class GatewayError(Exception):
    """Base class for all gateway failures."""


class GatewayConfigError(GatewayError):
    pass


class TransportError(GatewayError):
    pass


class HttpStatusError(GatewayError):
    def __init__(self, status_code: int, body: str):
        super().__init__(f"provider returned HTTP {status_code}: {body[:200]}")
        self.status_code = status_code


class DeadlineExceededError(GatewayError):
    pass


class ScriptMissError(GatewayError):
    """No scripted rule matched the prompt (an unanticipated prompt in tests)."""


class ReplayMissError(GatewayError):
    def __init__(self, digest: str):
        super().__init__(f"no recorded response for request digest {digest}")
        self.digest = digest


def request_digest(request: CompletionRequest) -> str:
    """Stable hash over (model, temperature, full message contents)."""
    payload = {
        "model": request.model,
        "temperature": request.temperature,
        "messages": [
            {"role": m.role.value, "content": m.content} for m in request.messages
        ],
    }
    blob = json.dumps(payload, sort_keys=True, ensure_ascii=False).encode("utf-8")
    return hashlib.sha256(blob).hexdigest()


def _approx_tokens(text: str) -> int:
    return len(text.split())


@dataclass(frozen=True)
class ScriptRule:
    matcher: str
    response: str
    priority: int = 0
    regex: bool = False

    def matches(self, prompt: str) -> bool:
        if self.regex:
            return re.search(self.matcher, prompt) is not None
        return self.matcher in prompt


class ScriptedGateway:
    """Deterministic rule-based backend.

    Rules are matched against the concatenation of all message contents;
    the highest-priority matching rule wins, with registration order
    breaking priority ties. All rules are registered before dispatch.
    """

    def __init__(self, rules: Optional[List[ScriptRule]] = None):
        self._rules: List[ScriptRule] = []
        self._lock = threading.Lock()
        self.call_count = 0
        for rule in rules or []:
            self.add_rule(rule)

    def add_rule(self, rule: ScriptRule) -> None:
        self._rules.append(rule)

    @classmethod
    def from_file(cls, path) -> "ScriptedGateway":
        raw = json.loads(Path(path).read_text(encoding="utf-8"))
        rules = [
            ScriptRule(
                matcher=r["matcher"],
                response=r["response"],
                priority=int(r.get("priority", 0)),
                regex=bool(r.get("regex", False)),
            )
            for r in raw
        ]
        return cls(rules)

    def complete(self, request: CompletionRequest) -> CompletionResult:
        with self._lock:
            self.call_count += 1
        prompt = "\n".join(m.content for m in request.messages)
        # stable sort keeps registration order within equal priority
        best = None
        best_priority = None
        for rule in self._rules:
            if rule.matches(prompt) and (best is None or rule.priority > best_priority):
                best = rule
                best_priority = rule.priority
        if best is None:
            raise ScriptMissError(
                f"no scripted rule matches prompt beginning {prompt[:120]!r}"
            )
        return CompletionResult(
            text=best.response,
            prompt_tokens=_approx_tokens(prompt),
            completion_tokens=_approx_tokens(best.response),
        )


class HttpGateway:
    """Chat-completions client over the common messages/choices JSON shape."""

    def __init__(
        self,
        base_url: str,
        auth_env: str = "LLM_API_KEY",
        completions_path: str = "/v1/chat/completions",
        session: Optional[requests.Session] = None,
    ):
        self.base_url = base_url.rstrip("/")
        self.auth_env = auth_env
        self.completions_path = completions_path
        self._session = session or requests.Session()
        self.call_count = 0
        self._lock = threading.Lock()

    def complete(self, request: CompletionRequest) -> CompletionResult:
        with self._lock:
            self.call_count += 1
        headers = {"Content-Type": "application/json"}
        token = os.environ.get(self.auth_env, "")
        if token:
            headers["Authorization"] = f"Bearer {token}"
        body = {
            "model": request.model,
            "temperature": request.temperature,
            "max_tokens": request.max_tokens,
            "messages": [
                {"role": m.role.value, "content": m.content} for m in request.messages
            ],
        }
        try:
            resp = self._session.post(
                self.base_url + self.completions_path,
                json=body,
                headers=headers,
                timeout=request.timeout_ms / 1000.0,
            )
        except requests.Timeout as exc:
            raise DeadlineExceededError(
                f"completion exceeded {request.timeout_ms} ms"
            ) from exc
        except requests.RequestException as exc:
            raise TransportError(str(exc)) from exc
        if not 200 <= resp.status_code < 300:
            raise HttpStatusError(resp.status_code, resp.text)
        try:
            data = resp.json()
            text = data["choices"][0]["message"]["content"]
            usage = data.get("usage", {})
        except (ValueError, KeyError, IndexError, TypeError) as exc:
            raise TransportError(f"malformed provider response: {exc}") from exc
        return CompletionResult(
            text=text,
            prompt_tokens=int(usage.get("prompt_tokens", 0)),
            completion_tokens=int(usage.get("completion_tokens", 0)),
        )


class RecordingGateway:
    """Wraps the HTTP backend, appending (digest, response) pairs as JSONL."""

    def __init__(self, inner, transcript_path):
        if not isinstance(inner, HttpGateway):
            raise GatewayConfigError("record mode requires the http backend")
        self._inner = inner
        self._path = Path(transcript_path)
        self._lock = threading.Lock()

    def complete(self, request: CompletionRequest) -> CompletionResult:
        result = self._inner.complete(request)
        record = {"digest": request_digest(request), "response": result.text}
        with self._lock:
            with self._path.open("a", encoding="utf-8") as fh:
                fh.write(json.dumps(record, ensure_ascii=False) + "\n")
        return result


class ReplayGateway:
    """Serves recorded responses by request digest; never touches the network."""

    def __init__(self, transcript_path):
        path = Path(transcript_path)
        if not path.exists():
            raise GatewayConfigError(f"replay transcript not found: {path}")
        self._responses = {}
        self.call_count = 0
        self._lock = threading.Lock()
        with path.open(encoding="utf-8") as fh:
            for line in fh:
                line = line.strip()
                if not line:
                    continue
                record = json.loads(line)
                self._responses[record["digest"]] = record["response"]

    def complete(self, request: CompletionRequest) -> CompletionResult:
        with self._lock:
            self.call_count += 1
        digest = request_digest(request)
        if digest not in self._responses:
            raise ReplayMissError(digest)
        text = self._responses[digest]
        return CompletionResult(text=text, completion_tokens=_approx_tokens(text))


def record_replay(mode: str, transcript_path, inner=None):
    """Build a record or replay wrapper around the HTTP backend."""
    if mode == "record":
        return RecordingGateway(inner, transcript_path)
    if mode == "replay":
        return ReplayGateway(transcript_path)
    raise GatewayConfigError(f"unknown record/replay mode: {mode!r}")
