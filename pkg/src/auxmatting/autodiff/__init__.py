"""Small reverse-mode autodiff engine over numpy arrays."""
from .checkpoint import load_checkpoint, save_checkpoint
from .gradcheck import finite_difference_check
from .losses import (bce_loss, edge_class_weights, l1_loss, laplacian_loss, laplacian_pyramid,
                     masked_l1_loss, weighted_ce_edge_loss)
from .ops import (absolute, add, concat_channels, conv2d, downsample_avg_2x, linear2d, mean, mul,
                  relu, resize_bilinear, sigmoid, sub, sum_all, upsample_bilinear_2x,
                  warp_with_offsets)
from .optim import adam_init, adam_step
from .tensor import Tensor, ancestors, as_tensor, parameter, topological_order

__all__ = [
    "Tensor", "ancestors", "as_tensor", "parameter", "topological_order",
    "absolute", "add", "concat_channels", "conv2d", "downsample_avg_2x", "linear2d", "mean",
    "mul", "relu", "resize_bilinear", "sigmoid", "sub", "sum_all", "upsample_bilinear_2x",
    "warp_with_offsets",
    "bce_loss", "edge_class_weights", "l1_loss", "laplacian_loss", "laplacian_pyramid",
    "masked_l1_loss", "weighted_ce_edge_loss",
    "adam_init", "adam_step", "finite_difference_check",
    "load_checkpoint", "save_checkpoint",
]
