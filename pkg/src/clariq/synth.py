"""Synthetic evaluation fixtures.

Builds planted datasets whose pipeline predictions reproduce a chosen
confusion matrix: queries carrying a known ambiguous alias plus a marker
token are answered NEEDED by the scripted backend, while queries with no
alias short-circuit to not_needed without any LLM call.
"""

from __future__ import annotations

import json
from pathlib import Path
from typing import List, Tuple

from .evalharness import ConfusionMatrix, EvalRecord
from .gateway import ScriptRule
from .model import AmbiguityCategory, DecisionLabel

# matrices reproducing the reference comparison at 3-decimal rounding
MULTI_AGENT_MATRIX = ConfusionMatrix(tp=47, fp=5, fn=27, tn=21)
BASELINE_MATRIX = ConfusionMatrix(tp=60, fp=22, fn=12, tn=6)

AMBIGUOUS_STEM = "what is a schema"  # fires the entity linker on the fixture KB
PLAIN_STEM = "where is the dashboard"  # matches nothing

BASELINE_POS_MARKER = "bpos"
BASELINE_NEG_MARKER = "bneg"


def build_planted_records(matrix: ConfusionMatrix, pipeline: str) -> List[EvalRecord]:
    """One record per confusion cell occupant.

    multi_agent: predicted-needed records embed the ambiguous alias (the
    decision rule replies NEEDED); predicted-not-needed records contain no
    alias and short-circuit.
    baseline: every record goes to the LLM; marker tokens select the
    scripted NEEDED/NOT_NEEDED reply.
    """
    records = []
    cells = [
        ("tp", matrix.tp, DecisionLabel.NEEDED, True),
        ("fp", matrix.fp, DecisionLabel.NOT_NEEDED, True),
        ("fn", matrix.fn, DecisionLabel.NEEDED, False),
        ("tn", matrix.tn, DecisionLabel.NOT_NEEDED, False),
    ]
    index = 0
    for cell, count, gold, predicted_needed in cells:
        for _ in range(count):
            if pipeline == "multi_agent":
                stem = AMBIGUOUS_STEM if predicted_needed else PLAIN_STEM
                query = f"{stem} case {index}"
            else:
                marker = BASELINE_POS_MARKER if predicted_needed else BASELINE_NEG_MARKER
                query = f"{PLAIN_STEM} {marker} case {index}"
            records.append(
                EvalRecord(
                    id=f"r{index:03d}",
                    query=query,
                    gold_label=gold,
                    categories=(AmbiguityCategory.ALEATORIC,)
                    if gold is DecisionLabel.NEEDED
                    else (),
                )
            )
            index += 1
    return records


def planted_script_rules() -> List[ScriptRule]:
    """Rules covering both planted pipelines plus question generation."""
    return [
        ScriptRule(matcher="AMBIGUITY EVIDENCE", response="NEEDED: term is ambiguous"),
        ScriptRule(
            matcher=BASELINE_POS_MARKER,
            response="NEEDED: which schema do you mean?",
            priority=10,
        ),
        ScriptRule(
            matcher=BASELINE_NEG_MARKER,
            response="NOT_NEEDED: the query is clear",
            priority=10,
        ),
        ScriptRule(
            matcher="Write one short clarification question",
            response="Which schema do you mean?",
            priority=5,
        ),
    ]


def write_dataset(records: List[EvalRecord], path) -> None:
    lines = []
    for r in records:
        lines.append(
            json.dumps(
                {
                    "id": r.id,
                    "query": r.query,
                    "label": r.gold_label.value,
                    "categories": [c.value for c in r.categories],
                },
                ensure_ascii=False,
            )
        )
    Path(path).write_text("\n".join(lines) + "\n", encoding="utf-8")
