"""Run configuration: one JSON document describing a simulated experiment.

Example::

    {
      "model": {"model": "timedelay-lhv", "pair_rate_hz": 1e5, "duration_ns": 4000000000,
                "settings": {"A1": 0.0, "A2": 0.785398163397, "B1": 0.392699081699,
                             "B2": -0.392699081699},
                "seed": 42, "delay_base_ns": 10, "delay_spread_ns": 300},
      "contexts": [{"id": "21", "a": "A2", "b": "B1"}, {"id": "11", "a": "A1", "b": "B1"},
                   {"id": "12", "a": "A1", "b": "B2"}, {"id": "22", "a": "A2", "b": "B2"}],
      "windows_ns": [10, 20, 40],
      "shifts_ns": [0],
      "alpha": 0.05,
      "variant": "s_cbd",
      "gamma": "max",
      "out_dir": "out"
    }

Contexts are listed in ring order. A context may carry its own ``seed``
(an independent run); without one it reuses the model seed.
"""

from __future__ import annotations

import dataclasses
import json
from dataclasses import dataclass
from pathlib import Path
from typing import Any

from .errors import ConfigError, InvalidSpecError
from .inequalities import VARIANTS
from .model import Context, CyclicSystemSpec
from .simulator import ModelConfig

_TOP_KEYS = {"model", "contexts", "windows_ns", "shifts_ns", "alpha", "variant", "gamma", "out_dir"}
_CONTEXT_KEYS = {"id", "a", "b", "seed"}
_MODEL_KEYS = {f.name for f in dataclasses.fields(ModelConfig)}


@dataclass(frozen=True)
class ContextRun:
    id: str
    a: str
    b: str
    seed: int


@dataclass(frozen=True)
class RunConfig:
    model: ModelConfig
    contexts: tuple[ContextRun, ...]
    windows_ns: tuple[int, ...] = ()
    shifts_ns: tuple[int, ...] = (0,)
    alpha: float = 0.05
    variant: str = "s_cbd"
    gamma: str = "max"
    out_dir: str = "out"

    @property
    def spec(self) -> CyclicSystemSpec:
        return CyclicSystemSpec(tuple(Context(c.id, (c.a, c.b)) for c in self.contexts))

    def model_for(self, context: ContextRun) -> ModelConfig:
        return dataclasses.replace(self.model, seed=context.seed)

    def context(self, context_id: str) -> ContextRun:
        for c in self.contexts:
            if c.id == context_id:
                return c
        raise ConfigError(f"unknown context {context_id!r}")


def _reject_unknown(d: dict, allowed: set, where: str) -> None:
    extra = sorted(set(d) - allowed)
    if extra:
        raise ConfigError(f"unknown keys in {where}: {', '.join(extra)}")


def _int_list(value: Any, key: str) -> tuple[int, ...]:
    if not isinstance(value, list) or not all(isinstance(v, int) and not isinstance(v, bool) for v in value):
        raise ConfigError(f"{key} must be a list of integers")
    return tuple(value)


def parse_run_config(data: Any) -> RunConfig:
    if not isinstance(data, dict):
        raise ConfigError("config must be a JSON object")
    _reject_unknown(data, _TOP_KEYS, "config")
    for key in ("model", "contexts"):
        if key not in data:
            raise ConfigError(f"config lacks {key!r}")

    model_d = data["model"]
    if not isinstance(model_d, dict):
        raise ConfigError("'model' must be an object")
    _reject_unknown(model_d, _MODEL_KEYS, "model")
    try:
        model = ModelConfig(**model_d)
    except TypeError as exc:
        raise ConfigError(f"model: {exc}") from exc

    contexts = []
    for raw in data["contexts"]:
        if not isinstance(raw, dict):
            raise ConfigError("each context must be an object")
        _reject_unknown(raw, _CONTEXT_KEYS, f"context {raw.get('id')!r}")
        try:
            cid, a, b = str(raw["id"]), str(raw["a"]), str(raw["b"])
        except KeyError as exc:
            raise ConfigError(f"context lacks {exc}") from None
        for label in (a, b):
            if label not in model.settings:
                raise ConfigError(f"context {cid}: setting label {label!r} not in model settings")
        seed = raw.get("seed", model.seed)
        if not isinstance(seed, int) or isinstance(seed, bool) or not 0 <= seed < 2**64:
            raise ConfigError(f"context {cid}: seed must be an unsigned 64-bit integer")
        contexts.append(ContextRun(cid, a, b, seed))
    a_labels = {c.a for c in contexts}
    b_labels = {c.b for c in contexts}
    if a_labels & b_labels:
        raise ConfigError(f"labels used on both sides: {sorted(a_labels & b_labels)}")

    windows = _int_list(data.get("windows_ns", []), "windows_ns")
    if any(w < 1 for w in windows):
        raise ConfigError("window widths must be >= 1 ns")
    shifts = _int_list(data.get("shifts_ns", [0]), "shifts_ns")
    alpha = data.get("alpha", 0.05)
    if not isinstance(alpha, (int, float)) or not 0 < alpha < 1:
        raise ConfigError(f"alpha must lie in (0, 1), got {alpha!r}")
    variant = data.get("variant", "s_cbd")
    if variant not in VARIANTS:
        raise ConfigError(f"variant must be one of {VARIANTS}")
    gamma = data.get("gamma", "max")
    if gamma not in ("max", "fixed"):
        raise ConfigError("gamma must be 'max' or 'fixed'")
    out_dir = data.get("out_dir", "out")
    if not isinstance(out_dir, str):
        raise ConfigError("out_dir must be a string")

    cfg = RunConfig(model, tuple(contexts), windows, shifts, float(alpha), variant, gamma, out_dir)
    try:
        cfg.spec
    except InvalidSpecError as exc:
        raise ConfigError(f"contexts do not form a cycle: {exc}") from exc
    return cfg


def load_run_config(path) -> RunConfig:
    try:
        text = Path(path).read_text(encoding="utf-8")
    except FileNotFoundError:
        raise ConfigError(f"config file {path} not found") from None
    try:
        data = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ConfigError(f"{path}: invalid JSON at line {exc.lineno}: {exc.msg}") from None
    return parse_run_config(data)


def demo_config_path(name: str = "timedelay_demo") -> Path:
    """Path of a configuration shipped with the package."""
    return Path(__file__).parent / "data" / f"{name}.json"
