"""Application configuration: dataclasses loaded from a TOML file.

Relative paths inside a config file resolve against the file's directory,
so fixture configs stay relocatable.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from pathlib import Path
from typing import List, Optional

import tomli

DEFAULT_AGENT_ORDER = [
    "generic_detector",
    "product_detector",
    "entity_linker",
    "concept_grounder",
]


class ConfigError(ValueError):
    pass


@dataclass
class LlmConfig:
    backend: str = "scripted"  # http | scripted | replay
    base_url: str = ""
    model: str = "default"
    auth_env: str = "LLM_API_KEY"
    timeout_ms: int = 30_000
    script_path: Optional[str] = None
    transcript_path: Optional[str] = None
    record: bool = False


@dataclass
class AgentsConfig:
    default_timeout_ms: int = 5000
    enabled: List[str] = field(default_factory=lambda: list(DEFAULT_AGENT_ORDER))
    product_threshold: int = 1
    product_margin: int = 0


@dataclass
class KnowledgeConfig:
    entities_path: Optional[str] = None
    products_path: Optional[str] = None
    concepts_path: Optional[str] = None


@dataclass
class TemplatesConfig:
    decision_prompt_path: Optional[str] = None
    question_prompt_path: Optional[str] = None


@dataclass
class EvalConfig:
    few_shot_path: Optional[str] = None
    parallelism: int = 4


@dataclass
class ServerConfig:
    host: str = "127.0.0.1"
    port: int = 8080
    snapshot_path: Optional[str] = None


@dataclass
class AppConfig:
    llm: LlmConfig = field(default_factory=LlmConfig)
    agents: AgentsConfig = field(default_factory=AgentsConfig)
    knowledge: KnowledgeConfig = field(default_factory=KnowledgeConfig)
    templates: TemplatesConfig = field(default_factory=TemplatesConfig)
    eval: EvalConfig = field(default_factory=EvalConfig)
    server: ServerConfig = field(default_factory=ServerConfig)
    choice_cap: int = 2


def _resolve(base: Path, value: Optional[str]) -> Optional[str]:
    if not value:
        return None
    path = Path(value)
    if not path.is_absolute():
        path = base / path
    return str(path)


def _apply(target, data: dict, label: str):
    for key, value in data.items():
        if not hasattr(target, key):
            raise ConfigError(f"unknown config key [{label}] {key}")
        setattr(target, key, value)


def load_config(path) -> AppConfig:
    path = Path(path)
    if not path.exists():
        raise ConfigError(f"config file not found: {path}")
    try:
        data = tomli.loads(path.read_text(encoding="utf-8"))
    except tomli.TOMLDecodeError as exc:
        raise ConfigError(f"invalid TOML in {path}: {exc}") from exc
    cfg = AppConfig()
    base = path.parent

    _apply(cfg.llm, data.get("llm", {}), "llm")
    _apply(cfg.agents, data.get("agents", {}), "agents")
    _apply(cfg.knowledge, data.get("knowledge", {}), "knowledge")
    _apply(cfg.templates, data.get("templates", {}), "templates")
    _apply(cfg.eval, data.get("eval", {}), "eval")
    _apply(cfg.server, data.get("server", {}), "server")
    if "clarification" in data:
        cap = data["clarification"].get("choice_cap")
        if cap is not None:
            cfg.choice_cap = int(cap)

    for attr in ("script_path", "transcript_path"):
        setattr(cfg.llm, attr, _resolve(base, getattr(cfg.llm, attr)))
    for attr in ("entities_path", "products_path", "concepts_path"):
        setattr(cfg.knowledge, attr, _resolve(base, getattr(cfg.knowledge, attr)))
    for attr in ("decision_prompt_path", "question_prompt_path"):
        setattr(cfg.templates, attr, _resolve(base, getattr(cfg.templates, attr)))
    cfg.eval.few_shot_path = _resolve(base, cfg.eval.few_shot_path)
    cfg.server.snapshot_path = _resolve(base, cfg.server.snapshot_path)

    if cfg.choice_cap < 1:
        raise ConfigError("choice_cap must be >= 1")
    if cfg.llm.backend not in ("http", "scripted", "replay"):
        raise ConfigError(f"unknown llm backend {cfg.llm.backend!r}")
    return cfg
