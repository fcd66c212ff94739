from . import autograd
from .autograd import Tensor
from .checkpoint import CheckpointError, load_checkpoint, save_checkpoint
from .layers import (
    Attention,
    GruCell,
    Linear,
    Module,
    ParameterStore,
    ShapeError,
    StackedGru,
    attention,
    gru_step,
    softmax_xent,
)
from .optim import Adam, TrainingError, adam_step, clip_gradients, global_norm

__all__ = [
    "Adam",
    "Attention",
    "CheckpointError",
    "GruCell",
    "Linear",
    "Module",
    "ParameterStore",
    "ShapeError",
    "StackedGru",
    "Tensor",
    "TrainingError",
    "adam_step",
    "attention",
    "autograd",
    "clip_gradients",
    "global_norm",
    "gru_step",
    "load_checkpoint",
    "save_checkpoint",
    "softmax_xent",
]
