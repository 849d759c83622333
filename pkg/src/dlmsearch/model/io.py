"""Toy-model files: versioned JSON so a run is reconstructible from disk."""

import hashlib
import json

import numpy as np

from .base import ModelError
from .chain import EnumerableChain, PositionwiseModel
from .planted import PlantedSynthetic

FORMAT = "dlmsearch-model"
VERSION = 1


def model_to_dict(model):
    return {"format": FORMAT, "version": VERSION, **model.to_dict()}


def model_from_dict(data):
    if data.get("format") != FORMAT:
        raise ModelError(f"not a model file (format={data.get('format')!r})")
    if int(data.get("version", -1)) != VERSION:
        raise ModelError(f"unsupported model file version {data.get('version')!r}")
    kind = data.get("kind")
    if kind == "chain":
        return EnumerableChain(
            data["vocab_size"], data["length"], data["seed"], data.get("sharpness", 2.0), data.get("floor", 0.05)
        )
    if kind == "positionwise":
        return PositionwiseModel(np.asarray(data["probs"]))
    if kind == "planted":
        model = PlantedSynthetic(
            vocab_size=data["vocab_size"],
            length=data["length"],
            seed=data["seed"],
            n_patterns=data["n_patterns"],
            pattern_length=data["pattern_length"],
            trigger_prob=data["trigger_prob"],
            follow_prob=data["follow_prob"],
            base_scale=data["base_scale"],
        )
        if "patterns" in data and model.patterns.tolist() != data["patterns"]:
            raise ModelError("stored patterns do not match the ones regenerated from the seed")
        return model
    raise ModelError(f"unknown model kind {kind!r}")


def dumps(model):
    return json.dumps(model_to_dict(model), sort_keys=True, indent=2) + "\n"


def save_model(model, path):
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(dumps(model))


def load_model(path):
    with open(path, encoding="utf-8") as fh:
        return model_from_dict(json.load(fh))


def model_digest(model):
    canon = json.dumps(model_to_dict(model), sort_keys=True, separators=(",", ":"))
    return "sha256:" + hashlib.sha256(canon.encode()).hexdigest()
