# src/CLI/Config/parser.py
# `key = value` config files -> RunConfig.
#
# Lines are tokenised by python-dotenv's stream parser (it tracks line numbers and
# handles quoting and `#` comments); each flat key is routed to its section model
# and pydantic does the value checking. Every failure becomes a ConfigurationError
# naming the key and the line.

from __future__ import annotations

import io
import re
from pathlib import Path
from typing import Any

from dotenv.parser import parse_stream
from pydantic import BaseModel, ValidationError

from src.Core.Models.configs import (
    BranchConfig,
    DataConfig,
    EvalConfig,
    LossConfig,
    ModelDims,
    RunConfig,
    ScheduleConfig,
)
from src.Core.Models.errors import ConfigurationError
from src.Core.Tools.Tensor.optim import AdamHyper

SECTIONS: dict[str, type[BaseModel]] = {
    "model": ModelDims,
    "branch": BranchConfig,
    "loss": LossConfig,
    "optimizer": AdamHyper,
    "schedule": ScheduleConfig,
    "data": DataConfig,
    "eval": EvalConfig,
}

# flat config key -> (section, field); "branch" itself is the preset selector
KEYS: dict[str, tuple[str, str]] = {
    **{name: ("model", name) for name in ModelDims.model_fields},
    **{name: ("branch", name) for name in BranchConfig.model_fields},
    **{name: ("loss", name) for name in LossConfig.model_fields},
    **{name: ("optimizer", name) for name in AdamHyper.model_fields},
    **{name: ("schedule", name) for name in ScheduleConfig.model_fields},
    **{name: ("data", name) for name in DataConfig.model_fields},
    **{name: ("eval", name) for name in EvalConfig.model_fields},
    "seed": ("run", "seed"),
}
PRESET_KEY = "branch"


def _read_bindings(text: str) -> dict[str, tuple[str, int]]:
    values: dict[str, tuple[str, int]] = {}
    for binding in parse_stream(io.StringIO(text)):
        raw = binding.original.string
        # the original span starts at any blank lines preceding the binding
        line = binding.original.line + raw[: len(raw) - len(raw.lstrip())].count("\n")
        if binding.error:
            raise ConfigurationError(f"cannot parse {binding.original.string.strip()!r}", line=line)
        if binding.key is None:
            continue
        key = binding.key.strip().lower()
        if binding.value is None:
            raise ConfigurationError("expected `key = value`", key=key, line=line)
        if key != PRESET_KEY and key not in KEYS:
            raise ConfigurationError("unknown key", key=key, line=line)
        if key in values:
            raise ConfigurationError(f"duplicate key (first set on line {values[key][1]})", key=key, line=line)
        values[key] = (binding.value.strip(), line)
    return values


def _build(model: type[BaseModel], fields: dict[str, Any], lines: dict[str, int], fallback_key: str) -> BaseModel:
    try:
        return model(**fields)
    except ValidationError as exc:
        first = exc.errors()[0]
        loc = first.get("loc") or ()
        message = first.get("msg", "invalid value")
        key = str(loc[0]) if loc else fallback_key
        if key not in lines:
            # model-level validators carry no location; find the key the message names
            named = [k for k in lines if re.search(rf"\b{re.escape(k)}\b", message)]
            key = named[0] if named else next(iter(lines), fallback_key)
        raise ConfigurationError(message, key=key, line=lines.get(key)) from exc


def parse_config_text(text: str) -> RunConfig:
    """Parse config text; absent keys keep their documented defaults."""
    values = _read_bindings(text)
    sections: dict[str, dict[str, Any]] = {name: {} for name in SECTIONS}
    section_lines: dict[str, dict[str, int]] = {name: {} for name in SECTIONS}
    run_fields: dict[str, Any] = {}
    for key, (value, line) in values.items():
        if key == PRESET_KEY:
            continue
        section, field = KEYS[key]
        if section == "run":
            run_fields[field] = value
            continue
        sections[section][field] = value
        section_lines[section][key] = line

    branch_fields = sections["branch"]
    if PRESET_KEY in values:
        preset, line = values[PRESET_KEY]
        try:
            base = BranchConfig.from_variant(preset.strip().lower())
        except ConfigurationError as exc:
            raise ConfigurationError(f"unknown branch preset '{preset}'", key=PRESET_KEY, line=line) from exc
        branch_fields = {**base.model_dump(), **branch_fields}
        section_lines["branch"] = {PRESET_KEY: line, **section_lines["branch"]}

    built = {}
    for name, model in SECTIONS.items():
        fields = branch_fields if name == "branch" else sections[name]
        built[name] = _build(model, fields, section_lines[name], fallback_key=name)

    seed_line = values.get("seed", ("", None))[1]
    try:
        return RunConfig(**built, **run_fields)
    except ValidationError as exc:
        raise ConfigurationError(exc.errors()[0].get("msg", "invalid value"), key="seed", line=seed_line) from exc


def parse_config(path: str | Path) -> RunConfig:
    """Read and validate a config file (UTF-8, `key = value`, `#` comments)."""
    path = Path(path)
    try:
        text = path.read_text(encoding="utf-8")
    except FileNotFoundError as exc:
        raise ConfigurationError(f"config file {path} does not exist") from exc
    except UnicodeDecodeError as exc:
        raise ConfigurationError(f"config file {path} is not valid UTF-8") from exc
    return parse_config_text(text)


def config_lines(config: RunConfig) -> str:
    """Render a RunConfig back into the flat `key = value` format."""
    out = []
    for key, (section, field) in KEYS.items():
        source = config if section == "run" else getattr(config, section)
        value = getattr(source, field)
        if isinstance(value, bool):
            text = str(value).lower()
        elif isinstance(value, tuple):
            text = ",".join(repr(v) if isinstance(v, float) else str(v) for v in value)
        elif isinstance(value, float):
            text = repr(value)
        else:
            text = str(value)
        out.append(f"{key} = {text}")
    return "\n".join(out) + "\n"
