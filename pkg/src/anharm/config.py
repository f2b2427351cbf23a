"""Run configuration: one JSON document plus ``--key=value`` overrides."""

from __future__ import annotations

import json
from dataclasses import dataclass
from typing import Mapping

from anharm.errors import ConfigError, SpecError
from anharm.model import SPEC_KEYS, OscillatorSpec, build_spec

COMMANDS = ("solve", "levels", "sweep", "perturb", "oracle-check")
FORMATS = ("csv", "json")
BLOCKS = {"sweep": "sweep", "perturb": "perturb", "oracle-check": "oracle"}
TOP_KEYS = SPEC_KEYS | {"command", "output_format", "output_path", "sweep", "perturb", "oracle"}

SWEEP_REQUIRED = ("coeff_index", "lo", "hi", "steps")
SWEEP_OPTIONAL = ("amplification", "match_tol")
PERTURB_REQUIRED = ("delta",)
PERTURB_OPTIONAL = ("match_tol",)
ORACLE_OPTIONAL = ("dp_lo", "dp_hi", "step")


@dataclass(frozen=True)
class RunConfig:
    command: str
    spec: OscillatorSpec
    output_format: str = "csv"
    output_path: str | None = None
    sweep: dict | None = None
    perturb: dict | None = None
    oracle: dict | None = None


def _parse_value(text: str):
    try:
        return json.loads(text)
    except json.JSONDecodeError:
        return text


def apply_overrides(doc: dict, overrides) -> dict:
    """Set dotted key paths, e.g. ``sweep.steps=40`` or ``coeffs.3=-0.02``."""
    items = overrides.items() if isinstance(overrides, Mapping) else overrides
    for item in items:
        if isinstance(item, str):
            body = item[2:] if item.startswith("--") else item
            if "=" not in body:
                raise ConfigError(body, "override needs the form --key=value")
            key, raw = body.split("=", 1)
            value = _parse_value(raw)
        else:
            key, value = item
        parts = key.split(".")
        node = doc
        for depth, part in enumerate(parts[:-1]):
            child = node.setdefault(part, {})
            if not isinstance(child, dict):
                raise ConfigError(".".join(parts[: depth + 1]), "is not a mapping")
            node = child
        node[parts[-1]] = value
    return doc


def _block(doc: dict, name: str, required=(), optional=()) -> dict:
    block = doc.get(name)
    if block is None:
        if required:
            raise ConfigError(f"{name}.{required[0]}", "missing")
        return {}
    if not isinstance(block, dict):
        raise ConfigError(name, "must be a mapping")
    for key in block:
        if key not in required and key not in optional:
            raise ConfigError(f"{name}.{key}", "unknown key")
    for key in required:
        if key not in block:
            raise ConfigError(f"{name}.{key}", "missing")
    return dict(block)


def _number(block: dict, name: str, key: str, kind=float):
    value = block[key]
    if isinstance(value, bool) or not isinstance(value, (int, float)):
        raise ConfigError(f"{name}.{key}", "must be a number")
    if kind is int and int(value) != value:
        raise ConfigError(f"{name}.{key}", "must be an integer")
    return kind(value)


def parse_config(text: str | None, overrides=(), command: str | None = None) -> RunConfig:
    """Parse and validate a run configuration; every failure is a ConfigError naming its key path."""
    if text is None or not text.strip():
        doc = {}
    else:
        try:
            doc = json.loads(text)
        except json.JSONDecodeError as exc:
            raise ConfigError("", f"malformed document: {exc}") from None
    if not isinstance(doc, dict):
        raise ConfigError("", "document must be a JSON object")
    doc = apply_overrides(doc, overrides)

    for key in doc:
        if key not in TOP_KEYS:
            raise ConfigError(key, "unknown key")

    if command is not None:
        if "command" in doc and doc["command"] != command:
            raise ConfigError("command", f"document says {doc['command']!r} but {command!r} was requested")
        doc["command"] = command
    if "command" not in doc:
        raise ConfigError("command", "missing")
    command = doc["command"]
    if command not in COMMANDS:
        raise ConfigError("command", f"must be one of {', '.join(COMMANDS)}")
    for cmd, block in BLOCKS.items():
        if block in doc and cmd != command:
            raise ConfigError(block, f"block not used by command {command!r}")

    output_format = doc.get("output_format", "csv")
    if output_format not in FORMATS:
        raise ConfigError("output_format", "must be csv or json")
    output_path = doc.get("output_path")
    if output_path is not None and not isinstance(output_path, str):
        raise ConfigError("output_path", "must be a string")

    sweep = perturb = oracle = None
    if command == "sweep":
        block = _block(doc, "sweep", SWEEP_REQUIRED, SWEEP_OPTIONAL)
        sweep = {
            "i": _number(block, "sweep", "coeff_index", int),
            "lo": _number(block, "sweep", "lo"),
            "hi": _number(block, "sweep", "hi"),
            "steps": _number(block, "sweep", "steps", int),
        }
        for key in SWEEP_OPTIONAL:
            if key in block:
                sweep[key] = _number(block, "sweep", key)
        if sweep["steps"] < 2:
            raise ConfigError("sweep.steps", "must be >= 2")
    elif command == "perturb":
        block = _block(doc, "perturb", PERTURB_REQUIRED, PERTURB_OPTIONAL)
        if not isinstance(block["delta"], dict):
            raise ConfigError("perturb.delta", "must be a mapping")
        perturb = {"delta": block["delta"]}
        if "match_tol" in block:
            perturb["match_tol"] = _number(block, "perturb", "match_tol")
    elif command == "oracle-check":
        block = _block(doc, "oracle", (), ORACLE_OPTIONAL)
        oracle = {key: _number(block, "oracle", key) for key in ORACLE_OPTIONAL if key in block}

    try:
        spec = build_spec({k: v for k, v in doc.items() if k in SPEC_KEYS})
    except (SpecError, TypeError, ValueError) as exc:
        raise ConfigError("spec", str(exc)) from None
    if sweep is not None and not 2 <= sweep["i"] <= spec.order:
        raise ConfigError("sweep.coeff_index", f"outside 2..{spec.order}")
    if perturb is not None:
        try:
            spec.with_perturbation(perturb["delta"])
        except SpecError as exc:
            raise ConfigError("perturb.delta", str(exc)) from None

    return RunConfig(
        command=command,
        spec=spec,
        output_format=output_format,
        output_path=output_path,
        sweep=sweep,
        perturb=perturb,
        oracle=oracle,
    )
