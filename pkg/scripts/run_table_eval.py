#!/usr/bin/env python3
"""Reproduce the multi-agent vs few-shot baseline comparison on planted
synthetic fixtures and print both metric tables plus the macro-F1 delta.

Usage: python scripts/run_table_eval.py [--out-dir DIR]
"""

import argparse
import json
import sys
from pathlib import Path

ROOT = Path(__file__).resolve().parent.parent
sys.path.insert(0, str(ROOT / "src"))

from clariq.cli import format_metrics_table
from clariq.config import AppConfig
from clariq.engine import ClarificationEngine
from clariq.evalharness import compare, compute_metrics, run_pipeline
from clariq.gateway import ScriptedGateway
from clariq.synth import (
    BASELINE_MATRIX,
    MULTI_AGENT_MATRIX,
    build_planted_records,
    planted_script_rules,
    write_dataset,
)

FIXTURES = ROOT / "fixtures"


def make_engine():
    config = AppConfig()
    config.knowledge.entities_path = str(FIXTURES / "entities.json")
    config.knowledge.products_path = str(FIXTURES / "products.json")
    config.knowledge.concepts_path = str(FIXTURES / "concepts.json")
    # keep the eval fully deterministic: no per-record LLM detector
    config.agents.enabled = ["product_detector", "entity_linker", "concept_grounder"]
    return ClarificationEngine(config, gateway=ScriptedGateway(planted_script_rules()))


def main():
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--out-dir", type=Path, help="write datasets and reports here")
    args = parser.parse_args()

    reports = {}
    for pipeline, matrix in (
        ("multi_agent", MULTI_AGENT_MATRIX),
        ("baseline", BASELINE_MATRIX),
    ):
        records = build_planted_records(matrix, pipeline)
        engine = make_engine()
        run = run_pipeline(records, pipeline, engine)
        report = compute_metrics(run.predictions, records)
        reports[pipeline] = report
        print(format_metrics_table(pipeline, report))
        print()
        if args.out_dir:
            args.out_dir.mkdir(parents=True, exist_ok=True)
            write_dataset(records, args.out_dir / f"{pipeline}_dataset.jsonl")
            (args.out_dir / f"{pipeline}_report.json").write_text(
                json.dumps(report.to_dict(), indent=2)
            )

    delta = compare(reports["multi_agent"], reports["baseline"])
    print(f"macro-F1 delta (multi_agent - baseline): {delta['macro_f1_delta']:+.3f}")


if __name__ == "__main__":
    main()
