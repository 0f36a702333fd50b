"""File contract with the solver CLI: shared JSON config, result emission.

This package deliberately shares no code with the main solver; the config
schema and its hash are the whole interface. The hash is the first 16 hex
digits of SHA-256 over the canonical serialization of the parsed JSON object
(sorted keys, compact separators).
"""

from __future__ import annotations

import hashlib
import json
import math
import os

import numpy as np

from .errors import IoError, ParseError, ValidationError

SCHEMA_VERSION = 1


def canonical_dumps(obj) -> str:
    return json.dumps(obj, sort_keys=True, separators=(",", ":"), allow_nan=False)


def config_hash(raw: dict) -> str:
    return hashlib.sha256(canonical_dumps(raw).encode("utf-8")).hexdigest()[:16]


def load_config(path) -> dict:
    try:
        with open(path, "r", encoding="utf-8") as fh:
            raw = json.load(fh)
    except OSError as exc:
        raise ParseError(f"cannot read config: {exc}")
    except json.JSONDecodeError as exc:
        raise ParseError(f"config is not valid JSON: {exc}")
    if raw.get("schema_version") != SCHEMA_VERSION:
        raise ValidationError(f"unsupported schema_version {raw.get('schema_version')!r}")
    if "model" not in raw:
        raise ValidationError("config lacks a model block")
    return raw


def model_matrices(raw: dict):
    """(A, C, Sigma_w, Sigma_n, Sigma_x0) plus optional per-stage sequences."""
    block = raw["model"]
    try:
        mats = tuple(np.asarray(block[k], dtype=float)
                     for k in ("A", "C", "Sigma_w", "Sigma_n", "Sigma_x0"))
    except KeyError as exc:
        raise ValidationError(f"model block lacks {exc}")
    stages = None
    if "stages" in block:
        stages = [{k: np.asarray(s[k], dtype=float)
                   for k in ("A", "C", "Sigma_w", "Sigma_n")}
                  for s in block["stages"]]
    return mats, stages


def distortion_grid(raw: dict) -> np.ndarray:
    block = raw.get("distortion")
    if not isinstance(block, dict):
        raise ValidationError("config lacks a distortion block")
    if "D" in block:
        return np.array([float(block["D"])])
    try:
        start, stop, count = block["start"], block["stop"], block["count"]
    except KeyError as exc:
        raise ValidationError(f"distortion block lacks {exc}")
    if not isinstance(count, int) or count < 1:
        raise ValidationError("distortion.count must be an integer >= 1")
    if block.get("spacing", "linear") == "log":
        return np.logspace(math.log10(start), math.log10(stop), count)
    return np.linspace(start, stop, count)


def emit_result(result: dict, path, force: bool = False) -> None:
    """Write the result JSON; refuses to overwrite unless forced."""
    if not result.get("rows"):
        raise ValidationError("result has no rows to emit")
    if os.path.exists(path) and not force:
        raise IoError(f"{path} exists; pass force to overwrite")
    try:
        with open(path, "w", encoding="utf-8") as fh:
            json.dump(result, fh, indent=2, sort_keys=True)
            fh.write("\n")
    except OSError as exc:
        raise IoError(f"cannot write result: {exc}")


def read_result(path) -> dict:
    try:
        with open(path, "r", encoding="utf-8") as fh:
            return json.load(fh)
    except OSError as exc:
        raise IoError(f"cannot read result: {exc}")
    except json.JSONDecodeError as exc:
        raise ParseError(f"result is not valid JSON: {exc}")
