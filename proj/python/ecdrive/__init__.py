"""Python access to the ecdrive core.

Configs and scenarios are passed as JSON text or as plain dicts; traces come
back as JSON-Lines text or as parsed (header, records) pairs.
"""

from __future__ import annotations

import json
from typing import Any, Iterable

from . import _ecdrive
from ._ecdrive import (
    ConfigError,
    NoDecisionFound,
    ScenarioError,
    TraceError,
    ks_two_sample,
    mmd_permutation,
    parse_decision,
)

__all__ = [
    "ConfigError",
    "NoDecisionFound",
    "ScenarioError",
    "TraceError",
    "describe",
    "featurize",
    "ks_two_sample",
    "load_trace",
    "mmd_permutation",
    "parse_decision",
    "recompute_summary",
    "run_episode",
    "run_episode_text",
    "validate_config",
]

MODES = ("EdgeOnly", "CloudOnly", "Collaborative")


def _text(obj: str | dict[str, Any]) -> str:
    return obj if isinstance(obj, str) else json.dumps(obj)


def validate_config(config: str | dict[str, Any]) -> None:
    _ecdrive.validate_config(_text(config))


def run_episode_text(config: str | dict[str, Any], mode: str, seed: int) -> str:
    return _ecdrive.run_episode(_text(config), mode, seed)


def load_trace(text: str) -> tuple[dict[str, Any], list[dict[str, Any]]]:
    lines = [json.loads(line) for line in text.splitlines() if line.strip()]
    if not lines:
        raise TraceError("empty trace")
    return lines[0], lines[1:]


def run_episode(
    config: str | dict[str, Any], mode: str, seed: int
) -> tuple[dict[str, Any], list[dict[str, Any]]]:
    return load_trace(run_episode_text(config, mode, seed))


def recompute_summary(trace: str | Iterable[str]) -> tuple[dict, dict]:
    """(stored, recomputed) metrics for a trace."""
    text = trace if isinstance(trace, str) else "\n".join(trace)
    return _ecdrive.recompute_summary(text)


def describe(scenario: str | dict[str, Any], seed: int = 0) -> str:
    return _ecdrive.describe(_text(scenario), seed)


def featurize(scenario: str | dict[str, Any], seed: int = 0) -> list[float]:
    return _ecdrive.featurize(_text(scenario), seed)
