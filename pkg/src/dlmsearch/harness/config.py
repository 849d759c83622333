"""Run configuration files.

A config file is plain ``key = value`` lines; ``#`` starts a comment. Grid
axes take comma-separated lists (``particles = 1, 2, 4``) and seeds take a
half-open range ``seeds = 0:20`` or a list. Unknown keys are an error.
"""

import math
from dataclasses import dataclass, field
from pathlib import Path

from ..core import ConfigError, Policy, Schedule
from ..model import EnumerableChain, PlantedSynthetic, load_model

SCALAR_KEYS = {
    "tau": float,
    "length": int,
    "steps": int,
    "policy": str,
    "seed": int,
    "model": str,
    "model_seed": int,
    "vocab_size": int,
    "verifier": str,
    "verifier_profile": str,
}
AXIS_KEYS = {
    "particles": int,
    "branching": int,
    "lambda": float,
    "block_length": int,
    "mode": str,
}
RANGE_KEYS = {"seeds"}
KNOWN = set(SCALAR_KEYS) | set(AXIS_KEYS) | RANGE_KEYS

DEFAULTS = {
    "particles": [4],
    "branching": [2],
    "lambda": [4.0],
    "block_length": [1],
    "mode": ["S3"],
    "tau": 1.0,
    "length": None,
    "steps": None,
    "policy": "LeftToRightBlocks",
    "seed": 0,
    "seeds": None,
    "model": "planted",
    "model_seed": 0,
    "vocab_size": None,
    "verifier": "default",
    "verifier_profile": None,
}


def _parse_seeds(text):
    text = text.strip()
    if ":" in text:
        lo, hi = text.split(":", 1)
        lo, hi = int(lo), int(hi)
        if hi <= lo:
            raise ConfigError(f"empty seed range {text!r}")
        return list(range(lo, hi))
    return [int(s) for s in text.split(",") if s.strip()]


def parse_value(key, raw):
    if key not in KNOWN:
        raise ConfigError(f"unknown config key {key!r}")
    raw = raw.strip()
    try:
        if key in RANGE_KEYS:
            return _parse_seeds(raw)
        if key in AXIS_KEYS:
            conv = AXIS_KEYS[key]
            vals = [conv(v.strip()) for v in raw.split(",") if v.strip()]
            if not vals:
                raise ConfigError(f"{key} needs at least one value")
            return vals
        return SCALAR_KEYS[key](raw)
    except ValueError as exc:
        raise ConfigError(f"bad value for {key}: {raw!r}") from exc


def parse_text(text):
    out = {}
    for n, line in enumerate(text.splitlines(), 1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"line {n}: expected key = value")
        key, raw = line.split("=", 1)
        key = key.strip().replace("-", "_")
        if key == "lam":
            key = "lambda"
        out[key] = parse_value(key, raw)
    return out


def load_config(path=None, overrides=()):
    """Resolved settings from an optional file plus ``key=value`` overrides."""
    settings = {k: (list(v) if isinstance(v, list) else v) for k, v in DEFAULTS.items()}
    if path is not None:
        settings.update(parse_text(Path(path).read_text()))
    for item in overrides:
        if "=" not in item:
            raise ConfigError(f"override {item!r} is not key=value")
        settings.update(parse_text(item))
    return Settings(settings)


@dataclass
class Settings:
    values: dict
    _model: object = field(default=None, repr=False)

    def __getitem__(self, key):
        return self.values[key]

    def with_(self, **kw):
        v = dict(self.values)
        for k, x in kw.items():
            if x is not None:
                v[k] = x
        return Settings(v, self._model if "model" not in kw else None)

    @property
    def seeds(self):
        return self.values["seeds"] if self.values["seeds"] else [self.values["seed"]]

    def model(self):
        if self._model is None:
            self._model = build_model(self.values)
        return self._model

    def schedule(self, block_length):
        model = self.model()
        sched = Schedule(model.length, int(block_length), Policy(self.values["policy"]))
        steps = self.values["steps"]
        if steps is not None and steps != sched.steps:
            raise ConfigError(
                f"steps = {steps} disagrees with ceil(length / block_length) = {math.ceil(model.length / block_length)}"
            )
        return sched

    def to_dict(self):
        return {k: self.values[k] for k in sorted(self.values)}


def build_model(values):
    kind = values["model"]
    if kind == "planted":
        kw = dict(seed=values["model_seed"])
        if values["vocab_size"]:
            kw["vocab_size"] = values["vocab_size"]
        if values["length"]:
            kw["length"] = values["length"]
        return PlantedSynthetic(**kw)
    if kind == "chain":
        kw = dict(seed=values["model_seed"])
        kw["vocab_size"] = values["vocab_size"] or 2
        kw["length"] = values["length"] or 3
        return EnumerableChain(**kw)
    path = Path(kind)
    if path.exists():
        return load_model(path)
    raise ConfigError(f"model must be 'planted', 'chain' or a model file, got {kind!r}")
