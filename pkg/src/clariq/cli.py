"""Command-line entry points: serve, ask, eval, agents.

Exit codes: 0 success, 1 usage/config error, 2 runtime failure.
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

from .clarify import FinalizeError
from .config import AppConfig, ConfigError, load_config
from .engine import ClarificationEngine
from .evalharness import (
    DatasetError,
    MetricsReport,
    compute_metrics,
    load_dataset,
    run_pipeline,
)
from .gateway import GatewayError
from .model import DecisionLabel, ValidationError

EXIT_OK = 0
EXIT_USAGE = 1
EXIT_RUNTIME = 2


def _build_engine(args) -> ClarificationEngine:
    if args.config:
        config = load_config(args.config)
    else:
        config = AppConfig()
    if getattr(args, "backend", None):
        config.llm.backend = args.backend
    if getattr(args, "script", None):
        config.llm.script_path = str(Path(args.script).resolve())
    return ClarificationEngine(config)


def format_metrics_table(model: str, report: MetricsReport) -> str:
    rows = [
        ("Clar. Needed", report.needed),
        ("Clar. Not Needed", report.not_needed),
        ("Avg", report.macro_avg),
    ]
    lines = [f"{'Model':<14}{'Category':<18}{'P':>7}{'R':>7}{'F1':>7}"]
    for i, (category, metrics) in enumerate(rows):
        label = model if i == 0 else ""
        lines.append(
            f"{label:<14}{category:<18}"
            f"{metrics.precision:>7.3f}{metrics.recall:>7.3f}{metrics.f1:>7.3f}"
        )
    return "\n".join(lines)


def cmd_serve(args) -> int:
    import uvicorn

    from .service import create_app

    engine = _build_engine(args)
    app = create_app(engine)
    uvicorn.run(app, host=engine.config.server.host, port=engine.config.server.port)
    return EXIT_OK


def cmd_ask(args) -> int:
    engine = _build_engine(args)
    try:
        result = engine.analyze(args.text)
    except ValidationError as exc:
        print(f"invalid query: {exc}", file=sys.stderr)
        return EXIT_USAGE
    print(f"decision: {result.decision.label.value} ({result.decision.rationale})")
    for outcome in result.report.outcomes:
        marker = "detected" if outcome.detected else outcome.status.value
        print(f"  agent {outcome.agent_id}: {marker}")
    if result.question is not None:
        print(f"question: {result.question.text}")
        for choice in result.question.choices:
            print(f"  [{choice.id}] {choice.label}")
        return EXIT_OK
    try:
        answer = engine.answer(result.query.text)
    except (FinalizeError, GatewayError) as exc:
        print(f"answer failed: {exc}", file=sys.stderr)
        return EXIT_RUNTIME
    print(f"answer: {answer}")
    return EXIT_OK


def cmd_eval(args) -> int:
    engine = _build_engine(args)
    try:
        records = load_dataset(args.dataset)
    except DatasetError as exc:
        print(f"dataset error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    try:
        run = run_pipeline(
            records, args.pipeline, engine, parallelism=engine.config.eval.parallelism
        )
        report = compute_metrics(run.predictions, records)
    except (DatasetError, ConfigError) as exc:
        print(f"evaluation failed: {exc}", file=sys.stderr)
        return EXIT_RUNTIME
    print(format_metrics_table(args.pipeline, report))
    if args.report:
        payload = report.to_dict()
        payload["run"] = run.to_dict()
        Path(args.report).write_text(
            json.dumps(payload, indent=2, ensure_ascii=False), encoding="utf-8"
        )
        print(f"report written to {args.report}")
    return EXIT_OK


def cmd_agents(args) -> int:
    engine = _build_engine(args)
    for descriptor in engine.registry.descriptors():
        state = "enabled" if descriptor.enabled else "disabled"
        print(
            f"{descriptor.agent_id}  kind={descriptor.kind.value}  "
            f"timeout_ms={descriptor.timeout_ms}  {state}"
        )
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="clariq",
        description="Multi-agent clarification pipeline for ambiguous queries",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    def add_common(p):
        p.add_argument("--config", help="path to TOML config file")
        p.add_argument("--backend", choices=["http", "scripted", "replay"])
        p.add_argument("--script", help="scripted-backend rules JSON file")

    p_serve = sub.add_parser("serve", help="run the HTTP service")
    add_common(p_serve)
    p_serve.set_defaults(func=cmd_serve)

    p_ask = sub.add_parser("ask", help="run one query through the pipeline")
    add_common(p_ask)
    p_ask.add_argument("text")
    p_ask.set_defaults(func=cmd_ask)

    p_eval = sub.add_parser("eval", help="evaluate a pipeline on a JSONL dataset")
    add_common(p_eval)
    p_eval.add_argument("--dataset", required=True)
    p_eval.add_argument(
        "--pipeline", choices=["multi_agent", "baseline"], default="multi_agent"
    )
    p_eval.add_argument("--report", help="write the JSON report here")
    p_eval.set_defaults(func=cmd_eval)

    p_agents = sub.add_parser("agents", help="list registered agents")
    add_common(p_agents)
    p_agents.set_defaults(func=cmd_agents)

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except (ConfigError, GatewayError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
