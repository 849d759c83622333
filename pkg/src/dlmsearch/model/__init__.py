from .base import DenoisingModel, ModelError, NotEnumerableError
from .chain import EnumerableChain, PositionwiseModel
from .io import load_model, model_digest, model_from_dict, model_to_dict, save_model
from .planted import PlantedSynthetic

__all__ = [
    "DenoisingModel",
    "EnumerableChain",
    "ModelError",
    "NotEnumerableError",
    "PlantedSynthetic",
    "PositionwiseModel",
    "load_model",
    "model_digest",
    "model_from_dict",
    "model_to_dict",
    "save_model",
]
