"""Agent registry and concurrent dispatcher.

Agents run in parallel with independent deadlines; a slow or crashing
agent degrades to a timed_out/failed outcome without disturbing the
others. Report order always equals registration order.
"""

from __future__ import annotations

import concurrent.futures
import time
from dataclasses import dataclass, field
from enum import Enum
from typing import Callable, Dict, List, Optional, Tuple

from .model import AgentVerdict, UserQuery, ValidationError

DEFAULT_AGENT_TIMEOUT_MS = 5000


class AgentKind(str, Enum):
    DETECTOR = "detector"
    GROUNDING = "grounding"


class OutcomeStatus(str, Enum):
    COMPLETED = "completed"
    FAILED = "failed"
    TIMED_OUT = "timed_out"
    DISABLED = "disabled"


class RegistrationError(ValueError):
    pass


class DispatchConfigError(ValueError):
    pass


@dataclass(frozen=True)
class AgentDescriptor:
    agent_id: str
    kind: AgentKind
    timeout_ms: int = DEFAULT_AGENT_TIMEOUT_MS
    enabled: bool = True

    def __post_init__(self):
        if self.timeout_ms <= 0:
            raise ValidationError("agent timeout_ms must be positive")


@dataclass(frozen=True)
class AgentOutcome:
    agent_id: str
    status: OutcomeStatus
    verdict: Optional[AgentVerdict] = None
    error_detail: Optional[str] = None
    wall_time_ms: float = 0.0

    def __post_init__(self):
        if (self.status is OutcomeStatus.COMPLETED) != (self.verdict is not None):
            raise ValidationError("status=completed iff a verdict is present")
        if self.status in (OutcomeStatus.FAILED, OutcomeStatus.TIMED_OUT):
            if not self.error_detail:
                raise ValidationError("failed/timed_out outcomes need error_detail")

    @property
    def detected(self) -> bool:
        # failed/timed-out/disabled agents count as not detecting
        return self.verdict is not None and self.verdict.detected


@dataclass(frozen=True)
class DispatchReport:
    outcomes: Tuple[AgentOutcome, ...]

    def detecting(self) -> List[AgentOutcome]:
        return [o for o in self.outcomes if o.detected]

    def grounding(self) -> List[AgentOutcome]:
        return [
            o
            for o in self.outcomes
            if o.verdict is not None
            and o.verdict.evidence is not None
            and o.verdict.evidence.kind.value == "grounding"
        ]


AnalyzeFn = Callable[[UserQuery, object], AgentVerdict]


class AgentRegistry:
    """Holds (descriptor, analyze) pairs in registration order."""

    def __init__(self):
        self._agents: List[Tuple[AgentDescriptor, AnalyzeFn]] = []
        self._ids: set = set()

    def register(self, descriptor: AgentDescriptor, analyze: AnalyzeFn) -> "AgentRegistry":
        if descriptor.agent_id in self._ids:
            raise RegistrationError(f"agent id already registered: {descriptor.agent_id}")
        self._ids.add(descriptor.agent_id)
        self._agents.append((descriptor, analyze))
        return self

    def descriptors(self) -> List[AgentDescriptor]:
        return [d for d, _ in self._agents]

    def __len__(self) -> int:
        return len(self._agents)

    def dispatch_all(self, query: UserQuery, context=None) -> DispatchReport:
        """Run every enabled agent concurrently, each under its own deadline."""
        if not self._agents:
            raise DispatchConfigError("cannot dispatch with an empty registry")

        active = [(d, fn) for d, fn in self._agents if d.enabled]
        results: Dict[str, AgentOutcome] = {}

        def run_timed(descriptor: AgentDescriptor, fn: AnalyzeFn):
            start = time.perf_counter()
            verdict = fn(query, context)
            elapsed = (time.perf_counter() - start) * 1000.0
            if not isinstance(verdict, AgentVerdict):
                raise TypeError(f"agent {descriptor.agent_id} returned {type(verdict)!r}")
            if verdict.evidence is not None:
                verdict.evidence.check_token_bounds(len(query.normalized_tokens))
            return verdict, elapsed

        if active:
            executor = concurrent.futures.ThreadPoolExecutor(max_workers=len(active))
            dispatch_start = time.perf_counter()
            futures = {
                d.agent_id: executor.submit(run_timed, d, fn) for d, fn in active
            }
            for descriptor, _ in active:
                future = futures[descriptor.agent_id]
                deadline = dispatch_start + descriptor.timeout_ms / 1000.0
                remaining = max(0.0, deadline - time.perf_counter())
                try:
                    verdict, elapsed = future.result(timeout=remaining)
                    outcome = AgentOutcome(
                        agent_id=descriptor.agent_id,
                        status=OutcomeStatus.COMPLETED,
                        verdict=verdict,
                        wall_time_ms=elapsed,
                    )
                except concurrent.futures.TimeoutError:
                    future.cancel()
                    outcome = AgentOutcome(
                        agent_id=descriptor.agent_id,
                        status=OutcomeStatus.TIMED_OUT,
                        error_detail=f"exceeded {descriptor.timeout_ms} ms budget",
                        wall_time_ms=float(descriptor.timeout_ms),
                    )
                except Exception as exc:  # agent bodies may raise anything
                    outcome = AgentOutcome(
                        agent_id=descriptor.agent_id,
                        status=OutcomeStatus.FAILED,
                        error_detail=f"{type(exc).__name__}: {exc}",
                        wall_time_ms=(time.perf_counter() - dispatch_start) * 1000.0,
                    )
                results[descriptor.agent_id] = outcome
            # overrunning workers are abandoned, not awaited
            executor.shutdown(wait=False)

        outcomes = []
        for descriptor, _ in self._agents:
            if not descriptor.enabled:
                outcomes.append(
                    AgentOutcome(
                        agent_id=descriptor.agent_id, status=OutcomeStatus.DISABLED
                    )
                )
            else:
                outcomes.append(results[descriptor.agent_id])
        return DispatchReport(outcomes=tuple(outcomes))
