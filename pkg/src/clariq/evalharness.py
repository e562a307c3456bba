"""Evaluation harness: JSONL dataset loading, multi-agent vs few-shot
baseline runs, and precision/recall/F1 reporting with macro averages.

Positive class is "needed". Zero denominators yield 0 by convention.
Reported values are rounded to 3 decimals; the macro average is computed
before rounding.
"""

from __future__ import annotations

import concurrent.futures
import json
import time
from dataclasses import dataclass, field
from importlib import resources
from pathlib import Path
from typing import Dict, List, Optional, Tuple

from .config import ConfigError
from .decision import parse_decision_reply
from .gateway import ChatMessage, CompletionRequest, GatewayError, Role
from .model import AmbiguityCategory, DecisionLabel, ValidationError, validate_query

FEW_SHOT_COUNT = 10

BASELINE_SYSTEM_PROMPT = (
    "You are an enterprise AI assistant. For each user query, decide whether "
    "a clarification question is needed before answering. Reply with exactly "
    "one line: \"NEEDED: <clarification question>\" or \"NOT_NEEDED: <reason>\". "
    "Follow the labeled examples."
)


class DatasetError(ValueError):
    pass


@dataclass(frozen=True)
class EvalRecord:
    id: str
    query: str
    gold_label: DecisionLabel
    categories: Tuple[AmbiguityCategory, ...] = ()

    def __post_init__(self):
        if self.gold_label is DecisionLabel.NOT_NEEDED and self.categories:
            raise ValidationError(
                f"record {self.id}: not_needed records cannot carry categories"
            )


@dataclass(frozen=True)
class ConfusionMatrix:
    tp: int
    fp: int
    fn: int
    tn: int

    def __post_init__(self):
        if min(self.tp, self.fp, self.fn, self.tn) < 0:
            raise ValidationError("confusion counts must be non-negative")

    @property
    def total(self) -> int:
        return self.tp + self.fp + self.fn + self.tn


@dataclass(frozen=True)
class ClassMetrics:
    precision: float
    recall: float
    f1: float


@dataclass(frozen=True)
class MetricsReport:
    needed: ClassMetrics
    not_needed: ClassMetrics
    macro_avg: ClassMetrics
    matrix: ConfusionMatrix

    def to_dict(self) -> dict:
        def cm(m: ClassMetrics) -> dict:
            return {"precision": m.precision, "recall": m.recall, "f1": m.f1}

        return {
            "matrix": {
                "tp": self.matrix.tp,
                "fp": self.matrix.fp,
                "fn": self.matrix.fn,
                "tn": self.matrix.tn,
            },
            "needed": cm(self.needed),
            "not_needed": cm(self.not_needed),
            "macro_avg": cm(self.macro_avg),
        }


@dataclass(frozen=True)
class FewShotExample:
    query: str
    label: DecisionLabel
    clarification: Optional[str] = None

    def __post_init__(self):
        if self.label is DecisionLabel.NEEDED and not self.clarification:
            raise ValidationError("needed examples must carry a clarification")


def load_dataset(path) -> List[EvalRecord]:
    path = Path(path)
    if not path.exists():
        raise DatasetError(f"dataset file not found: {path}")
    records: List[EvalRecord] = []
    errors: List[str] = []
    seen_ids = set()
    with path.open(encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            line = line.strip()
            if not line:
                continue
            try:
                raw = json.loads(line)
            except json.JSONDecodeError as exc:
                errors.append(f"line {lineno}: invalid JSON ({exc})")
                continue
            try:
                record = EvalRecord(
                    id=str(raw["id"]),
                    query=raw["query"],
                    gold_label=DecisionLabel(raw["label"]),
                    categories=tuple(
                        AmbiguityCategory(c) for c in raw.get("categories", ())
                    ),
                )
            except (KeyError, ValueError) as exc:
                errors.append(f"line {lineno}: {exc}")
                continue
            if record.id in seen_ids:
                errors.append(f"line {lineno}: duplicate id {record.id!r}")
                continue
            seen_ids.add(record.id)
            records.append(record)
    if errors:
        raise DatasetError("dataset load failed:\n" + "\n".join(errors))
    return records


def _prf(tp: int, fp: int, fn: int) -> Tuple[float, float, float]:
    precision = tp / (tp + fp) if (tp + fp) else 0.0
    recall = tp / (tp + fn) if (tp + fn) else 0.0
    f1 = 2 * precision * recall / (precision + recall) if (precision + recall) else 0.0
    return precision, recall, f1


def metrics_from_matrix(matrix: ConfusionMatrix) -> MetricsReport:
    needed_raw = _prf(matrix.tp, matrix.fp, matrix.fn)
    # for the negative class, tn plays the true-positive role
    not_needed_raw = _prf(matrix.tn, matrix.fn, matrix.fp)
    macro_raw = tuple((a + b) / 2 for a, b in zip(needed_raw, not_needed_raw))

    def rounded(values) -> ClassMetrics:
        return ClassMetrics(*(round(v, 3) for v in values))

    return MetricsReport(
        needed=rounded(needed_raw),
        not_needed=rounded(not_needed_raw),
        macro_avg=rounded(macro_raw),
        matrix=matrix,
    )


def compute_metrics(predictions: Dict[str, DecisionLabel], golds: List[EvalRecord]) -> MetricsReport:
    gold_ids = {g.id for g in golds}
    pred_ids = set(predictions)
    if gold_ids != pred_ids:
        missing = sorted(gold_ids - pred_ids)
        extra = sorted(pred_ids - gold_ids)
        raise DatasetError(
            f"prediction ids do not match gold ids (missing={missing}, extra={extra})"
        )
    tp = fp = fn = tn = 0
    for record in golds:
        pred = DecisionLabel(predictions[record.id])
        if record.gold_label is DecisionLabel.NEEDED:
            if pred is DecisionLabel.NEEDED:
                tp += 1
            else:
                fn += 1
        else:
            if pred is DecisionLabel.NEEDED:
                fp += 1
            else:
                tn += 1
    return metrics_from_matrix(ConfusionMatrix(tp=tp, fp=fp, fn=fn, tn=tn))


def load_few_shot(path: Optional[str] = None) -> List[FewShotExample]:
    if path:
        raw = json.loads(Path(path).read_text(encoding="utf-8"))
    else:
        raw = json.loads(
            resources.files("clariq.data")
            .joinpath("few_shot_examples.json")
            .read_text("utf-8")
        )
    return [
        FewShotExample(
            query=item["query"],
            label=DecisionLabel(item["label"]),
            clarification=item.get("clarification"),
        )
        for item in raw
    ]


def build_baseline_prompt(query: str, examples: List[FewShotExample]) -> List[ChatMessage]:
    if len(examples) != FEW_SHOT_COUNT:
        raise ConfigError(
            f"baseline prompt requires exactly {FEW_SHOT_COUNT} examples "
            f"(got {len(examples)})"
        )
    blocks = []
    for i, ex in enumerate(examples, start=1):
        if ex.label is DecisionLabel.NEEDED:
            reply = f"NEEDED: {ex.clarification}"
        else:
            reply = "NOT_NEEDED: the query is clear"
        blocks.append(f"Example {i}:\nQuery: {ex.query}\nReply: {reply}")
    body = (
        "\n\n".join(blocks)
        + f"\n\nNow the target query.\nQuery: {query}\nReply:"
    )
    return [
        ChatMessage(role=Role.SYSTEM, content=BASELINE_SYSTEM_PROMPT),
        ChatMessage(role=Role.USER, content=body),
    ]


@dataclass
class PipelineRun:
    pipeline: str
    predictions: Dict[str, DecisionLabel] = field(default_factory=dict)
    questions: Dict[str, str] = field(default_factory=dict)
    latencies_ms: Dict[str, float] = field(default_factory=dict)
    flagged: List[str] = field(default_factory=list)

    def to_dict(self) -> dict:
        return {
            "pipeline": self.pipeline,
            "predictions": {k: v.value for k, v in sorted(self.predictions.items())},
            "questions": dict(sorted(self.questions.items())),
            "flagged": sorted(self.flagged),
        }


def run_pipeline(
    records: List[EvalRecord],
    pipeline: str,
    engine,
    parallelism: int = 4,
) -> PipelineRun:
    """Evaluate every record; per-record failures degrade to not_needed and
    are flagged, never aborting the run."""
    if pipeline not in ("multi_agent", "baseline"):
        raise ConfigError(f"unknown pipeline {pipeline!r}")
    run = PipelineRun(pipeline=pipeline)
    if pipeline == "baseline":
        examples = load_few_shot(engine.config.eval.few_shot_path)
    else:
        examples = None

    def evaluate(record: EvalRecord):
        start = time.perf_counter()
        question = None
        flagged = False
        try:
            if pipeline == "multi_agent":
                result = engine.analyze(
                    record.query, turn_id=record.id, generate_question=False
                )
                label = result.decision.label
            else:
                messages = build_baseline_prompt(record.query, examples)
                request = CompletionRequest(
                    messages=tuple(messages),
                    model=engine.config.llm.model,
                    temperature=0.0,
                    timeout_ms=engine.config.llm.timeout_ms,
                )
                reply = engine.gateway.complete(request).text
                parsed = parse_decision_reply(reply)
                if parsed is None:
                    label = DecisionLabel.NOT_NEEDED
                else:
                    label = parsed[0]
                    if label is DecisionLabel.NEEDED and parsed[1]:
                        question = parsed[1]
        except (GatewayError, ValidationError) as exc:
            label = DecisionLabel.NOT_NEEDED
            flagged = True
        elapsed = (time.perf_counter() - start) * 1000.0
        return record.id, label, question, elapsed, flagged

    workers = max(1, int(parallelism))
    with concurrent.futures.ThreadPoolExecutor(max_workers=workers) as executor:
        for rid, label, question, elapsed, flagged in executor.map(evaluate, records):
            run.predictions[rid] = label
            run.latencies_ms[rid] = elapsed
            if question is not None:
                run.questions[rid] = question
            if flagged:
                run.flagged.append(rid)
    return run


def compare(report_a: MetricsReport, report_b: MetricsReport) -> dict:
    """Signed per-cell deltas (a minus b), including the macro-F1 delta."""
    if report_a.matrix.total != report_b.matrix.total:
        raise DatasetError(
            "cannot compare reports over datasets of different sizes "
            f"({report_a.matrix.total} vs {report_b.matrix.total})"
        )

    def delta(a: ClassMetrics, b: ClassMetrics) -> dict:
        return {
            "precision": round(a.precision - b.precision, 3),
            "recall": round(a.recall - b.recall, 3),
            "f1": round(a.f1 - b.f1, 3),
        }

    result = {
        "needed": delta(report_a.needed, report_b.needed),
        "not_needed": delta(report_a.not_needed, report_b.not_needed),
        "macro_avg": delta(report_a.macro_avg, report_b.macro_avg),
    }
    result["macro_f1_delta"] = result["macro_avg"]["f1"]
    return result
