"""Reverse-mode autodiff engine: tensors, tape, primitives, layers."""

from . import ops
from .checkpoint import load_checkpoint, save_checkpoint
from .nn import (
    BatchNorm2d,
    Conv2d,
    DepthwiseConv2d,
    Identity,
    Linear,
    Module,
    ModuleList,
    Parameter,
    ReLU,
    Sequential,
    count_params,
    fan_in_uniform,
)
from .optim import Adam, AdamState, cosine_lr
from .tensor import Tape, Tensor, backward, no_grad, record_op

__all__ = [
    "Adam",
    "AdamState",
    "BatchNorm2d",
    "Conv2d",
    "DepthwiseConv2d",
    "Identity",
    "Linear",
    "Module",
    "ModuleList",
    "Parameter",
    "ReLU",
    "Sequential",
    "Tape",
    "Tensor",
    "backward",
    "cosine_lr",
    "count_params",
    "fan_in_uniform",
    "load_checkpoint",
    "no_grad",
    "ops",
    "record_op",
    "save_checkpoint",
]
