from .layers import LayerSpec, affine, avgpool2d, conv2d, dropout, flatten, relu
from .losses import CrossEntropy, CwMargin, FeaturePushTerm, LossSpec
from .network import (
    ForwardTrace,
    Network,
    build_network,
    channel_mean_features,
    forward,
    grad_input,
    grad_penultimate,
)
from .serialize import load_network, save_network
from .train import TrainConfig, train_classifier

__all__ = [
    "LayerSpec",
    "affine",
    "conv2d",
    "relu",
    "avgpool2d",
    "flatten",
    "dropout",
    "Network",
    "ForwardTrace",
    "build_network",
    "forward",
    "grad_input",
    "grad_penultimate",
    "channel_mean_features",
    "LossSpec",
    "CrossEntropy",
    "CwMargin",
    "FeaturePushTerm",
    "TrainConfig",
    "train_classifier",
    "save_network",
    "load_network",
]
