"""JSON run configuration: parsing, validation, canonical hashing.

Schema (version 1). Matrices are row-major nested arrays; every file needs a
``schema_version`` field and a ``model`` block.

    {
      "schema_version": 1,
      "model": {
        "A": [[...]], "C": [[...]], "Sigma_w": [[...]],
        "Sigma_n": [[...]], "Sigma_x0": [[...]],
        "stages": [{"A": ..., "C": ..., "Sigma_w": ..., "Sigma_n": ...}, ...]
      },
      "horizon": 10000,
      "distortion": {"D": 2.7532}
                    | {"start": 9.1, "stop": 29.0, "count": 30, "spacing": "log"},
      "solvers": ["waterfill", "closed-form", "kh"],
      "eps": 1e-9,
      "seed": 0,
      "log_base": 2,
      "sim": {"horizon": 1000000, "trials": 1, "burn_in": 0},
      "bench": {"reps": 5, "horizons": [100, 1000], "sizes": [10, 50, 100]}
    }

``model.stages`` (optional) overrides the per-stage matrices for time-varying
problems; ``Sigma_x0`` always comes from the model block. ``horizon`` expands
a time-invariant model for the finite-horizon commands.

The configuration hash is the first 16 hex digits of the SHA-256 of the
canonical serialization (the parsed JSON object re-dumped with sorted keys
and compact separators). All result files embed it so cross-checks can bind
to the exact inputs.
"""

from __future__ import annotations

import hashlib
import json
import math
from dataclasses import dataclass, field

import numpy as np

from .errors import ParseError, ValidationError
from .model import SystemModel, TimeVaryingSystemModel

SCHEMA_VERSION = 1
KNOWN_SOLVERS = ("waterfill", "closed-form", "kh", "finite")

_DEFAULTS = {"eps": 1e-9, "seed": 0, "log_base": 2, "solvers": ["waterfill"]}


def canonical_dumps(obj) -> str:
    return json.dumps(obj, sort_keys=True, separators=(",", ":"), allow_nan=False)


def config_hash(raw: dict) -> str:
    """64-bit stable hash (16 hex chars) of the canonical serialization."""
    digest = hashlib.sha256(canonical_dumps(raw).encode("utf-8")).hexdigest()
    return digest[:16]


@dataclass(frozen=True)
class RunConfig:
    model: SystemModel
    stages: TimeVaryingSystemModel | None
    horizon: int | None
    distortions: np.ndarray
    solvers: tuple
    eps: float
    seed: int
    log_base: float
    sim: dict
    bench: dict
    hash: str
    raw: dict = field(repr=False, compare=False, default=None)

    def __eq__(self, other):
        if not isinstance(other, RunConfig):
            return NotImplemented
        return self.hash == other.hash

    def finite_model(self) -> TimeVaryingSystemModel:
        """The time-varying model for finite-horizon commands."""
        if self.stages is not None:
            return self.stages
        if self.horizon is None:
            raise ValidationError("horizon", "finite-horizon commands need a horizon or stages")
        return TimeVaryingSystemModel.from_time_invariant(self.model, self.horizon)


def _get(raw: dict, key: str, default=None, required: bool = False):
    if key not in raw:
        if required:
            raise ValidationError(key, "missing required field")
        return default
    return raw[key]


def _positive_number(value, path: str, strict: bool = True) -> float:
    if not isinstance(value, (int, float)) or isinstance(value, bool):
        raise ValidationError(path, "must be a number")
    v = float(value)
    if not math.isfinite(v) or (strict and v <= 0) or (not strict and v < 0):
        raise ValidationError(path, "must be positive and finite")
    return v


def _distortion_grid(block, path: str = "distortion") -> np.ndarray:
    if not isinstance(block, dict):
        raise ValidationError(path, "must be an object")
    if "D" in block:
        return np.array([_positive_number(block["D"], f"{path}.D")])
    for key in ("start", "stop", "count"):
        if key not in block:
            raise ValidationError(f"{path}.{key}", "missing required field")
    start = _positive_number(block["start"], f"{path}.start")
    stop = _positive_number(block["stop"], f"{path}.stop")
    count = block["count"]
    if not isinstance(count, int) or isinstance(count, bool) or count < 1:
        raise ValidationError(f"{path}.count", "must be an integer >= 1")
    if stop < start:
        raise ValidationError(f"{path}.stop", "must be >= start")
    spacing = block.get("spacing", "linear")
    if spacing == "linear":
        return np.linspace(start, stop, count)
    if spacing == "log":
        return np.logspace(math.log10(start), math.log10(stop), count)
    raise ValidationError(f"{path}.spacing", "must be 'linear' or 'log'")


def _build_model(block) -> tuple[SystemModel, TimeVaryingSystemModel | None]:
    if not isinstance(block, dict):
        raise ValidationError("model", "must be an object")
    for key in ("A", "C", "Sigma_w", "Sigma_n", "Sigma_x0"):
        if key not in block:
            raise ValidationError(f"model.{key}", "missing required field")
    try:
        model = SystemModel(A=block["A"], C=block["C"], Sigma_w=block["Sigma_w"],
                            Sigma_n=block["Sigma_n"], Sigma_x0=block["Sigma_x0"])
    except ValidationError as exc:
        raise ValidationError(f"model.{exc.field}", str(exc).split(": ", 1)[-1])
    stages = None
    if "stages" in block:
        stage_list = block["stages"]
        if not isinstance(stage_list, list) or not stage_list:
            raise ValidationError("model.stages", "must be a nonempty list")
        try:
            stages = TimeVaryingSystemModel(
                A=np.stack([np.asarray(s["A"], dtype=float) for s in stage_list]),
                C=np.stack([np.asarray(s["C"], dtype=float) for s in stage_list]),
                Sigma_w=np.stack([np.asarray(s["Sigma_w"], dtype=float) for s in stage_list]),
                Sigma_n=np.stack([np.asarray(s["Sigma_n"], dtype=float) for s in stage_list]),
                Sigma_x0=model.Sigma_x0)
        except (KeyError, TypeError) as exc:
            raise ValidationError("model.stages", f"malformed stage entry ({exc})")
        except ValidationError as exc:
            raise ValidationError(f"model.{exc.field}", str(exc).split(": ", 1)[-1])
    return model, stages


def parse_config_dict(raw: dict) -> RunConfig:
    if not isinstance(raw, dict):
        raise ValidationError("config", "top level must be an object")
    version = _get(raw, "schema_version", required=True)
    if version != SCHEMA_VERSION:
        raise ValidationError("schema_version", f"unsupported version {version!r}")
    model, stages = _build_model(_get(raw, "model", required=True))

    horizon = _get(raw, "horizon")
    if horizon is not None:
        if not isinstance(horizon, int) or isinstance(horizon, bool) or horizon < 0:
            raise ValidationError("horizon", "must be a nonnegative integer")
    if stages is not None:
        horizon = stages.horizon

    distortions = _distortion_grid(_get(raw, "distortion", {"D": 1.0}))

    solvers = _get(raw, "solvers", list(_DEFAULTS["solvers"]))
    if not isinstance(solvers, list) or not solvers:
        raise ValidationError("solvers", "must be a nonempty list")
    for s in solvers:
        if s not in KNOWN_SOLVERS:
            raise ValidationError("solvers", f"unknown solver {s!r}; known: {KNOWN_SOLVERS}")

    eps = _positive_number(_get(raw, "eps", _DEFAULTS["eps"]), "eps")
    seed = _get(raw, "seed", _DEFAULTS["seed"])
    if not isinstance(seed, int) or isinstance(seed, bool) or seed < 0:
        raise ValidationError("seed", "must be a nonnegative integer")
    log_base = _get(raw, "log_base", _DEFAULTS["log_base"])
    if log_base == "e":
        log_base = math.e
    elif log_base != 2:
        raise ValidationError("log_base", "must be 2 or 'e'")

    sim = _get(raw, "sim", {})
    if not isinstance(sim, dict):
        raise ValidationError("sim", "must be an object")
    if sim:
        h = sim.get("horizon")
        if not isinstance(h, int) or isinstance(h, bool) or h < 1:
            raise ValidationError("sim.horizon", "must be a positive integer")
        for key, default in (("trials", 1), ("burn_in", 0)):
            v = sim.get(key, default)
            if not isinstance(v, int) or isinstance(v, bool) or v < 0 or (key == "trials" and v < 1):
                raise ValidationError(f"sim.{key}", "must be a valid nonnegative integer")

    bench = _get(raw, "bench", {})
    if not isinstance(bench, dict):
        raise ValidationError("bench", "must be an object")
    if bench:
        reps = bench.get("reps", 1)
        if not isinstance(reps, int) or isinstance(reps, bool) or reps < 1:
            raise ValidationError("bench.reps", "must be an integer >= 1")

    return RunConfig(model=model, stages=stages, horizon=horizon,
                     distortions=distortions, solvers=tuple(solvers), eps=eps,
                     seed=seed, log_base=float(log_base), sim=dict(sim),
                     bench=dict(bench), hash=config_hash(raw), raw=raw)


def parse_config(path) -> RunConfig:
    """Load and validate a configuration file."""
    try:
        with open(path, "r", encoding="utf-8") as fh:
            raw = json.load(fh)
    except OSError as exc:
        raise ParseError(f"cannot read config: {exc}")
    except json.JSONDecodeError as exc:
        raise ParseError(f"config is not valid JSON: {exc}")
    return parse_config_dict(raw)


def serialize_config(config: RunConfig) -> str:
    """Canonical JSON text; parsing it back yields an equal RunConfig."""
    return canonical_dumps(config.raw)
