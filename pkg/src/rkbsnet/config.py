"""Solver configuration files and dataset ingestion.

Configs are JSON (``.json``) or YAML (anything else) and are validated
against :data:`CONFIG_SCHEMA` before use.  Datasets are inline arrays or a
comma-separated file with header ``x1..xs,y1..yt``.
"""
from __future__ import annotations

import copy
import csv
import json
import re
from pathlib import Path

import jsonschema
import numpy as np
import yaml

CONFIG_SCHEMA_VERSION = 1

_MATRIX = {"type": "array", "items": {"type": "array", "items": {"type": "number"}}}

CONFIG_SCHEMA = {
    "$schema": "https://json-schema.org/draft/2020-12/schema",
    "type": "object",
    "additionalProperties": False,
    "required": ["architecture", "dataset"],
    "properties": {
        "schema_version": {"const": CONFIG_SCHEMA_VERSION},
        "architecture": {
            "type": "object",
            "additionalProperties": False,
            "required": ["layers"],
            "properties": {
                "layers": {"type": "array", "minItems": 2, "items": {"type": "integer", "minimum": 1}},
                "activation": {"enum": ["relu", "identity"]},
                "output_activation_applied": {"type": "boolean"},
            },
        },
        "decay_exponent": {"type": ["number", "null"], "exclusiveMinimum": 0},
        "search": {
            "type": "object",
            "additionalProperties": False,
            "properties": {
                "seed": {"type": "integer", "minimum": 0},
                "starts": {"type": "integer", "minimum": 1},
                "iters": {"type": "integer", "minimum": 1},
                "tol": {"type": "number", "exclusiveMinimum": 0},
            },
        },
        "regularization": {
            "type": "object",
            "additionalProperties": False,
            "properties": {
                "lambda0": {"type": ["number", "null"], "exclusiveMinimum": 0},
                "include_uncertified_signs": {"type": "boolean"},
            },
        },
        "solver": {
            "type": "object",
            "additionalProperties": False,
            "properties": {
                "scaled_witnesses": {"type": "boolean"},
                "anchor_fallback": {"type": "boolean"},
                "reanchor": {"type": "boolean"},
                "enumeration_cap": {"type": "integer", "minimum": 0},
            },
        },
        "dataset": {
            "oneOf": [
                {
                    "type": "object",
                    "additionalProperties": False,
                    "required": ["path"],
                    "properties": {"path": {"type": "string"}},
                },
                {
                    "type": "object",
                    "additionalProperties": False,
                    "required": ["x", "y"],
                    "properties": {
                        "x": _MATRIX,
                        "y": {"type": "array", "items": {"type": ["number", "array"], "items": {"type": "number"}}},
                    },
                },
            ]
        },
        "output": {"type": "string"},
    },
}

DEFAULTS = {
    "schema_version": CONFIG_SCHEMA_VERSION,
    "architecture": {"activation": "relu", "output_activation_applied": False},
    "decay_exponent": None,
    "search": {"seed": 0, "starts": 256, "iters": 400, "tol": 1e-9},
    "regularization": {"lambda0": None, "include_uncertified_signs": False},
    "solver": {"scaled_witnesses": True, "anchor_fallback": True, "reanchor": False,
               "enumeration_cap": 12},
}


class ConfigError(ValueError):
    """Invalid configuration or dataset (exit code 2)."""


def _merge(defaults, given):
    out = copy.deepcopy(defaults)
    for key, value in given.items():
        if isinstance(value, dict) and isinstance(out.get(key), dict):
            out[key] = _merge(out[key], value)
        else:
            out[key] = value
    return out


def load_config(path) -> dict:
    """Parse, validate and fill defaults.  The result carries ``_base_dir``
    for resolving relative dataset paths."""
    path = Path(path)
    try:
        text = path.read_text(encoding="utf-8")
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from exc
    try:
        raw = json.loads(text) if path.suffix.lower() == ".json" else yaml.safe_load(text)
    except (json.JSONDecodeError, yaml.YAMLError) as exc:
        raise ConfigError(f"cannot parse config {path}: {exc}") from exc
    return validate_config(raw, path.parent)


def validate_config(raw, base_dir=".") -> dict:
    if not isinstance(raw, dict):
        raise ConfigError("config must be a mapping")
    try:
        jsonschema.validate(raw, CONFIG_SCHEMA)
    except jsonschema.ValidationError as exc:
        where = "/".join(str(p) for p in exc.absolute_path) or "<root>"
        raise ConfigError(f"config invalid at {where}: {exc.message}") from exc
    cfg = _merge(DEFAULTS, raw)
    cfg["_base_dir"] = str(base_dir)
    return cfg


def _check_rows(rows, what):
    width = None
    for i, row in enumerate(rows):
        if width is None:
            width = len(row)
        elif len(row) != width:
            raise ConfigError(f"{what} row {i} has {len(row)} entries, expected {width}")
    return width


def read_csv_dataset(path):
    """Read ``x1..xs,y1..yt`` columns; errors name the offending line."""
    path = Path(path)
    try:
        fh = path.open(newline="", encoding="utf-8")
    except OSError as exc:
        raise ConfigError(f"cannot read dataset {path}: {exc}") from exc
    with fh:
        reader = csv.reader(fh)
        header = [h.strip() for h in next(reader, [])]
        xs = [h for h in header if re.fullmatch(r"x\d+", h)]
        ys = [h for h in header if re.fullmatch(r"y\d+", h)]
        expected = [f"x{i + 1}" for i in range(len(xs))] + [f"y{i + 1}" for i in range(len(ys))]
        if not xs or not ys or header != expected:
            raise ConfigError(f"{path}: header must be x1..xs,y1..yt, got {header}")
        X, Y = [], []
        for line_no, row in enumerate(reader, start=2):
            if not row or all(not c.strip() for c in row):
                continue
            if len(row) != len(header):
                raise ConfigError(f"{path}: row at line {line_no} has {len(row)} fields, expected {len(header)}")
            try:
                vals = [float(c) for c in row]
            except ValueError as exc:
                raise ConfigError(f"{path}: row at line {line_no}: {exc}") from exc
            X.append(vals[:len(xs)])
            Y.append(vals[len(xs):])
    if not X:
        raise ConfigError(f"{path}: dataset is empty")
    return np.array(X), np.array(Y)


def load_dataset(cfg):
    """``(X, Y)`` with ``Y`` two-dimensional, checked against the architecture."""
    ds = cfg["dataset"]
    if "path" in ds:
        p = Path(ds["path"])
        if not p.is_absolute():
            p = Path(cfg.get("_base_dir", ".")) / p
        X, Y = read_csv_dataset(p)
    else:
        _check_rows(ds["x"], "dataset x")
        y = [v if isinstance(v, list) else [v] for v in ds["y"]]
        _check_rows(y, "dataset y")
        if len(ds["x"]) != len(y):
            raise ConfigError(f"dataset has {len(ds['x'])} inputs but {len(y)} outputs")
        if not ds["x"]:
            raise ConfigError("dataset is empty")
        X, Y = np.array(ds["x"], dtype=float), np.array(y, dtype=float)
    layers = cfg["architecture"]["layers"]
    if X.shape[1] != layers[0]:
        raise ConfigError(f"inputs have dimension {X.shape[1]} but the architecture expects {layers[0]}")
    if Y.shape[1] != layers[-1]:
        raise ConfigError(f"outputs have dimension {Y.shape[1]} but the architecture has {layers[-1]} output unit(s)")
    return X, Y


def public_config(cfg) -> dict:
    """The resolved config without private keys, for echoing into reports."""
    return {k: copy.deepcopy(v) for k, v in cfg.items() if not k.startswith("_")}
