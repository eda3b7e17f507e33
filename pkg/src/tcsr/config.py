"""Run configuration: defaults, YAML config files, and flag overrides.

Precedence is flags > config file > built-in defaults. Secrets (the API key)
are only read from the environment, never from config files.
"""

from __future__ import annotations

import os
from dataclasses import dataclass, field, fields
from pathlib import Path
from typing import Any, Optional

import yaml

from .errors import ConfigError

API_KEY_ENV = "TCSR_API_KEY"


@dataclass
class LlmConfig:
    endpoint: str = ""
    model: str = "gpt-3.5-turbo-0125"
    temperature: float = 0.0
    max_tokens: int = 1024
    retries: int = 3
    mock_script: str = ""          # path to a scripted-mock JSON file; wins over endpoint


@dataclass
class EmbedderConfig:
    endpoint: str = ""
    model: str = ""
    mock: bool = True              # deterministic trigram embedder
    mock_dimension: int = 64


@dataclass
class RelationMapping:
    """Where relationship-matching knowledge lives in a source database."""

    table: str = ""
    keyword_column: str = ""
    target_table: str = ""
    # Either a column of the mapping table holding per-row column names, or a
    # literal column name of the target table.
    target_column_name_or_column: str = ""
    target_value_column: str = ""

    def is_set(self) -> bool:
        return bool(self.table)


@dataclass
class RunConfig:
    llm: LlmConfig = field(default_factory=LlmConfig)
    embedder: EmbedderConfig = field(default_factory=EmbedderConfig)
    content_samples: int = 6
    max_synonyms: int = 5
    row_limit: int = 20
    max_revisions: int = 3
    max_rows: int = 500
    statement_timeout: float = 2.0
    workers: int = 1
    seed: int = 0
    knowledge_path: str = ""
    accept_empty: bool = False
    min_similarity: Optional[float] = None
    relation_mapping: RelationMapping = field(default_factory=RelationMapping)

    def validate(self) -> None:
        if not 0.0 <= self.llm.temperature <= 1.0:
            raise ConfigError(f"temperature must be in [0,1], got {self.llm.temperature}")
        for name in ("content_samples", "max_synonyms", "row_limit", "max_rows", "workers"):
            if getattr(self, name) <= 0:
                raise ConfigError(f"{name} must be positive")
        if self.max_revisions < 0:
            raise ConfigError("max_revisions must be >= 0")
        if self.llm.max_tokens <= 0:
            raise ConfigError("max_tokens must be positive")

    @staticmethod
    def api_key() -> str:
        return os.environ.get(API_KEY_ENV, "")


def _apply_section(obj: Any, section: dict) -> None:
    known = {f.name for f in fields(obj)}
    for key, value in section.items():
        if key not in known:
            raise ConfigError(f"unknown config key: {key}")
        setattr(obj, key, value)


def load_config(path: Optional[str] = None, overrides: Optional[dict] = None) -> RunConfig:
    """Build a RunConfig from an optional YAML file plus flat overrides.

    Override keys use dotted paths for nested sections (e.g. ``llm.mock_script``).
    ``None``-valued overrides are ignored so CLI flags can default to None.
    """
    config = RunConfig()
    if path:
        try:
            raw = yaml.safe_load(Path(path).read_text(encoding="utf-8")) or {}
        except (OSError, yaml.YAMLError) as exc:
            raise ConfigError(f"cannot read config file {path}: {exc}") from exc
        if not isinstance(raw, dict):
            raise ConfigError("config file must contain a mapping of sections")
        for section_name, section in raw.items():
            if section_name in ("llm", "embedder", "relation_mapping"):
                if not isinstance(section, dict):
                    raise ConfigError(f"section {section_name} must be a mapping")
                _apply_section(getattr(config, section_name), section)
            else:
                _apply_section(config, {section_name: section})
    for dotted, value in (overrides or {}).items():
        if value is None:
            continue
        if "." in dotted:
            section_name, key = dotted.split(".", 1)
            _apply_section(getattr(config, section_name), {key: value})
        else:
            _apply_section(config, {dotted: value})
    config.validate()
    return config
