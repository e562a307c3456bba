"""HTTP service: sessions, the query -> clarify -> feedback loop, agent
listing, and evaluation runs.

Sessions live in memory behind per-session locks; an optional JSON
snapshot persists them across restarts.
"""

from __future__ import annotations

import json
import secrets
import threading
from contextlib import asynccontextmanager
from dataclasses import dataclass, field
from pathlib import Path
from typing import Dict, List, Optional

from fastapi import FastAPI, HTTPException
from fastapi.middleware.cors import CORSMiddleware
from pydantic import BaseModel

from .clarify import FinalizeError, InvalidFeedbackError
from .engine import ClarificationEngine
from .evalharness import DatasetError, compute_metrics, load_dataset, run_pipeline
from .framework import AgentOutcome
from .model import (
    ClarificationQuestion,
    Decision,
    DecisionLabel,
    Feedback,
    UserQuery,
    ValidationError,
)

TURN_CLARIFICATION = "clarification"
TURN_ANSWERED = "answered"
TURN_ABANDONED = "abandoned"
TURN_FAILED = "failed"


@dataclass
class TurnRecord:
    turn_id: int
    query: UserQuery
    outcomes: tuple
    decision: Decision
    question: Optional[ClarificationQuestion] = None
    feedback: Optional[Feedback] = None
    refined_query: Optional[str] = None
    final_response: Optional[str] = None
    status: str = TURN_CLARIFICATION


@dataclass
class Session:
    session_id: str
    turns: List[TurnRecord] = field(default_factory=list)
    lock: threading.Lock = field(default_factory=threading.Lock, repr=False)

    def next_turn_id(self) -> int:
        return self.turns[-1].turn_id + 1 if self.turns else 1

    def pending_turn(self) -> Optional[TurnRecord]:
        for turn in reversed(self.turns):
            if turn.status == TURN_CLARIFICATION and turn.feedback is None:
                return turn
        return None


class SessionStore:
    def __init__(self, snapshot_path: Optional[str] = None):
        self._sessions: Dict[str, Session] = {}
        self._lock = threading.Lock()
        self.snapshot_path = snapshot_path

    def create(self) -> Session:
        session = Session(session_id=secrets.token_urlsafe(16))
        with self._lock:
            self._sessions[session.session_id] = session
        return session

    def get(self, session_id: str) -> Session:
        with self._lock:
            session = self._sessions.get(session_id)
        if session is None:
            raise KeyError(session_id)
        return session

    def list_ids(self) -> List[str]:
        with self._lock:
            return list(self._sessions)

    def snapshot(self, path: Optional[str] = None) -> None:
        path = path or self.snapshot_path
        if not path:
            return
        with self._lock:
            sessions = list(self._sessions.values())
        payload = [serialize_session(s) for s in sessions]
        Path(path).write_text(
            json.dumps(payload, indent=2, ensure_ascii=False), encoding="utf-8"
        )


def outcome_to_dict(outcome: AgentOutcome) -> dict:
    data = {
        "agent_id": outcome.agent_id,
        "status": outcome.status.value,
        "detected": outcome.detected,
        "wall_time_ms": round(outcome.wall_time_ms, 3),
    }
    if outcome.error_detail:
        data["error_detail"] = outcome.error_detail
    if outcome.verdict is not None and outcome.verdict.evidence is not None:
        ev = outcome.verdict.evidence
        data["evidence"] = {
            "kind": ev.kind.value,
            "category": ev.category.value if ev.category else None,
            "spans": [
                {"start": s.start_token, "end": s.end_token, "surface": s.surface}
                for s in ev.spans
            ],
            "candidates": [{"id": c.id, "label": c.label} for c in ev.candidates],
            "rationale": ev.rationale,
        }
    return data


def turn_to_dict(turn: TurnRecord) -> dict:
    data = {
        "turn_id": turn.turn_id,
        "query": turn.query.text,
        "status": turn.status,
        "decision": {
            "label": turn.decision.label.value,
            "rationale": turn.decision.rationale,
            "llm_consulted": turn.decision.llm_consulted,
        },
        "agents": [outcome_to_dict(o) for o in turn.outcomes],
    }
    if turn.question is not None:
        data["question"] = {
            "text": turn.question.text,
            "choices": [
                {"id": c.id, "label": c.label, "payload": c.payload}
                for c in turn.question.choices
            ],
        }
    if turn.feedback is not None:
        data["feedback"] = (
            {"choice_id": turn.feedback.selected_choice_id}
            if turn.feedback.selected_choice_id is not None
            else {"free_text": turn.feedback.free_text}
        )
    if turn.refined_query is not None:
        data["refined_query"] = turn.refined_query
    if turn.final_response is not None:
        data["answer"] = turn.final_response
    return data


def serialize_session(session: Session) -> dict:
    return {
        "session_id": session.session_id,
        "turns": [turn_to_dict(t) for t in session.turns],
    }


class QueryBody(BaseModel):
    text: str


class FeedbackBody(BaseModel):
    choice_id: Optional[str] = None
    free_text: Optional[str] = None


class EvalBody(BaseModel):
    dataset_path: str
    pipeline: str = "multi_agent"


def create_app(engine: ClarificationEngine, store: Optional[SessionStore] = None) -> FastAPI:
    store = store or SessionStore(engine.config.server.snapshot_path)

    @asynccontextmanager
    async def lifespan(_app: FastAPI):
        yield
        store.snapshot()

    app = FastAPI(title="clariq", lifespan=lifespan)
    app.add_middleware(
        CORSMiddleware,
        allow_origins=["*"],
        allow_methods=["*"],
        allow_headers=["*"],
    )
    app.state.engine = engine
    app.state.store = store

    def get_session(session_id: str) -> Session:
        try:
            return store.get(session_id)
        except KeyError:
            raise HTTPException(status_code=404, detail=f"unknown session {session_id}")

    @app.post("/v1/sessions")
    def create_session():
        session = store.create()
        return {"session_id": session.session_id}

    @app.get("/v1/sessions/{session_id}")
    def get_session_state(session_id: str):
        session = get_session(session_id)
        with session.lock:
            return serialize_session(session)

    @app.post("/v1/sessions/{session_id}/query")
    def post_query(session_id: str, body: QueryBody):
        session = get_session(session_id)
        with session.lock:
            # a new query supersedes any pending clarification
            pending = session.pending_turn()
            if pending is not None:
                pending.status = TURN_ABANDONED
            turn_id = session.next_turn_id()
            try:
                result = engine.analyze(body.text, turn_id=str(turn_id))
            except ValidationError as exc:
                raise HTTPException(status_code=400, detail=str(exc))
            turn = TurnRecord(
                turn_id=turn_id,
                query=result.query,
                outcomes=result.report.outcomes,
                decision=result.decision,
                question=result.question,
            )
            if result.decision.label is DecisionLabel.NEEDED and result.question:
                turn.status = TURN_CLARIFICATION
                session.turns.append(turn)
                return {
                    "status": "clarification",
                    "turn_id": turn_id,
                    "question": result.question.text,
                    "choices": [
                        {"id": c.id, "label": c.label, "payload": c.payload}
                        for c in result.question.choices
                    ],
                    "evidence": [outcome_to_dict(o) for o in result.report.outcomes],
                }
            try:
                answer = engine.answer(result.query.text)
            except FinalizeError as exc:
                turn.status = TURN_FAILED
                session.turns.append(turn)
                raise HTTPException(status_code=502, detail=str(exc))
            turn.status = TURN_ANSWERED
            turn.final_response = answer
            session.turns.append(turn)
            return {
                "status": "answer",
                "turn_id": turn_id,
                "answer": answer,
                "evidence": [outcome_to_dict(o) for o in result.report.outcomes],
            }

    @app.post("/v1/sessions/{session_id}/turns/{turn_id}/feedback")
    def post_feedback(session_id: str, turn_id: int, body: FeedbackBody):
        session = get_session(session_id)
        with session.lock:
            turn = next((t for t in session.turns if t.turn_id == turn_id), None)
            if turn is None:
                raise HTTPException(status_code=404, detail=f"unknown turn {turn_id}")
            if turn.status != TURN_CLARIFICATION or turn.feedback is not None:
                raise HTTPException(
                    status_code=409,
                    detail="turn has no pending clarification awaiting feedback",
                )
            try:
                feedback = Feedback(
                    selected_choice_id=body.choice_id, free_text=body.free_text
                )
            except ValidationError as exc:
                raise HTTPException(status_code=400, detail=str(exc))
            try:
                refined = engine.refine(turn.query, feedback, turn.question)
            except InvalidFeedbackError as exc:
                raise HTTPException(status_code=400, detail=str(exc))
            try:
                answer = engine.answer(refined)
            except FinalizeError as exc:
                turn.status = TURN_FAILED
                turn.feedback = feedback
                turn.refined_query = refined
                raise HTTPException(status_code=502, detail=str(exc))
            turn.feedback = feedback
            turn.refined_query = refined
            turn.final_response = answer
            turn.status = TURN_ANSWERED
            return {"refined_query": refined, "answer": answer}

    @app.get("/v1/agents")
    def list_agents():
        return {
            "agents": [
                {
                    "agent_id": d.agent_id,
                    "kind": d.kind.value,
                    "timeout_ms": d.timeout_ms,
                    "enabled": d.enabled,
                }
                for d in engine.registry.descriptors()
            ]
        }

    @app.post("/v1/eval/run")
    def run_eval(body: EvalBody):
        try:
            records = load_dataset(body.dataset_path)
            run = run_pipeline(
                records, body.pipeline, engine, parallelism=engine.config.eval.parallelism
            )
            report = compute_metrics(run.predictions, records)
        except (DatasetError, ValueError) as exc:
            raise HTTPException(status_code=400, detail=str(exc))
        result = report.to_dict()
        result["run"] = run.to_dict()
        return result

    return app
