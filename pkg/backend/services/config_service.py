"""Pipeline configuration loading: defaults, ``SGLAYOUT_*`` environment, config file, flags."""

from __future__ import annotations

import json
import logging
import os
from pathlib import Path
from typing import Any, Dict, Mapping, Optional, Tuple

from dotenv import load_dotenv
from pydantic import ValidationError

from backend.errors import ConfigError
from backend.models.config import PipelineConfig

# Load environment variables
load_dotenv()

logger = logging.getLogger(__name__)

ENV_PREFIX = "SGLAYOUT_"

# flat key -> nested locations inside PipelineConfig
FLAT_KEYS: Dict[str, Tuple[Tuple[str, ...], ...]] = {
    "grid_max": (("encoding", "grid_max"),),
    "ar_interval": (("encoding", "quantizer", "interval"),),
    "ar_min": (("encoding", "quantizer", "minimum"),),
    "ar_bins": (("encoding", "quantizer", "bins"),),
    "mode": (("encoding", "mode"),),
    "include_imgar": (("encoding", "include_imgar"),),
    "min_object_class_count": (("filter", "min_object_class_count"),),
    "min_relationship_class_count": (("filter", "min_relationship_class_count"),),
    "min_box_side": (("filter", "min_box_side"),),
    "min_objects": (("filter", "min_objects"),),
    "max_objects": (("filter", "max_objects"),),
    "max_relationships": (("filter", "max_relationships"), ("augment", "max_relationships")),
    "max_variants": (("augment", "max_variants"),),
    "seed": (("augment", "seed"),),
    "jobs": (("jobs",),),
    "t_iou": (("thresholds",),),
    "max_order": (("max_order",),),
    "weights": (("weights",),),
}
LIST_KEYS = {"t_iou", "weights"}


def parse_config_text(text: str) -> Dict[str, Any]:
    """Read a JSON object or ``key=value`` lines (``#`` starts a comment)."""

    stripped = text.strip()
    if stripped.startswith("{"):
        try:
            data = json.loads(stripped)
        except json.JSONDecodeError as exc:
            raise ConfigError(f"config file is not valid JSON: {exc}") from exc
        if not isinstance(data, dict):
            raise ConfigError("JSON config must be an object")
        return data
    values: Dict[str, Any] = {}
    for number, line in enumerate(text.splitlines(), start=1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        key, sep, value = line.partition("=")
        if not sep:
            raise ConfigError(f"config line {number}: expected key=value, got {line!r}")
        values[key.strip()] = value.strip()
    return values


def _normalize_value(key: str, value: Any) -> Any:
    if key in LIST_KEYS:
        if isinstance(value, str):
            return [part.strip() for part in value.split(",") if part.strip()]
        if isinstance(value, (int, float)):
            return [value]
    return value


def _apply(tree: Dict[str, Any], values: Mapping[str, Any], source: str) -> None:
    for key, value in values.items():
        if value is None:
            continue
        if key not in FLAT_KEYS:
            raise ConfigError(f"unknown config key {key!r} in {source}")
        for path in FLAT_KEYS[key]:
            node = tree
            for part in path[:-1]:
                node = node.setdefault(part, {})
            node[path[-1]] = _normalize_value(key, value)


def environment_values(environ: Optional[Mapping[str, str]] = None) -> Dict[str, str]:
    environ = os.environ if environ is None else environ
    return {
        key: environ[ENV_PREFIX + key.upper()]
        for key in FLAT_KEYS
        if ENV_PREFIX + key.upper() in environ
    }


def load_pipeline_config(
    path: Optional[Path] = None,
    overrides: Optional[Mapping[str, Any]] = None,
    environ: Optional[Mapping[str, str]] = None,
) -> PipelineConfig:
    """Merge configuration sources, later ones winning."""

    tree: Dict[str, Any] = {}
    _apply(tree, environment_values(environ), "environment")
    if path is not None:
        _apply(tree, parse_config_text(Path(path).read_text(encoding="utf-8")), str(path))
    if overrides:
        _apply(tree, overrides, "command line")
    try:
        config = PipelineConfig.model_validate(tree)
    except ValidationError as exc:
        error = exc.errors()[0]
        where = ".".join(str(part) for part in error["loc"])
        raise ConfigError(f"invalid configuration at {where or 'root'}: {error['msg']}") from exc
    logger.debug("Configuration: %s", config.model_dump_json())
    return config
