from .adapters import (ActivationHandle, SpatialLayer, TorchClassifier,
                       available_models, gradient_of_scalar, register_model,
                       resolve_model)
from .training import TrainConfig, train
from .weights import load_weights, save_weights
from .zoo import build_toy_cnn, build_toy_vit

__all__ = [
    "ActivationHandle", "SpatialLayer", "TorchClassifier",
    "available_models", "gradient_of_scalar", "register_model", "resolve_model",
    "TrainConfig", "train", "load_weights", "save_weights",
    "build_toy_cnn", "build_toy_vit",
]
