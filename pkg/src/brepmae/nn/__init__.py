"""Reverse-mode autodiff, layers, optimizer and checkpoints on numpy."""

from . import functional
from .checkpoint import count_params, load_checkpoint, parse_checkpoint, save_checkpoint
from .gradcheck import grad_check, numeric_grad
from .layers import (
    BatchNorm,
    Conv1d,
    Conv2d,
    Dropout,
    LayerNorm,
    Linear,
    Module,
    Parameter,
    ReLU,
    Sequential,
    init_parameters,
)
from .optim import AdamW, LrSchedule, cosine_lr
from .tensor import Tensor, no_grad, tensor

__all__ = [
    "AdamW",
    "BatchNorm",
    "Conv1d",
    "Conv2d",
    "Dropout",
    "LayerNorm",
    "Linear",
    "LrSchedule",
    "Module",
    "Parameter",
    "ReLU",
    "Sequential",
    "Tensor",
    "count_params",
    "cosine_lr",
    "functional",
    "grad_check",
    "init_parameters",
    "load_checkpoint",
    "no_grad",
    "numeric_grad",
    "parse_checkpoint",
    "save_checkpoint",
    "tensor",
]
