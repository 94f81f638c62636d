"""Minimal float64 reverse-mode autodiff, AdamW and checkpoint I/O."""
from . import tensor as ops
from .gradcheck import check_gradients
from .checkpoint import CheckpointError, load_checkpoint, save_checkpoint
from .optim import AdamW, NonFiniteGradientError, OptimizerState, clip_grad_norm, grad_norm, lr_schedule
from .tensor import ShapeError, Tensor, as_tensor, grad_enabled, no_grad, tensor
