"""Multi-head matting network with inconsistency-guided detail regularization."""
from .data import BGLINE, MATTING, SEG, TASKS, SampleBundle, sample_seed, synth_sample
from .losses import LossReport, task_loss
from .network import (Network, NetworkConfig, NetworkOutputs, build_network, igdr_forward,
                      param_checksum, parameter_count, route_heads)
from .train import TrainConfig, TrainResult, heldout_line_error, smoothed, train, train_step

__all__ = [
    "BGLINE", "MATTING", "SEG", "TASKS", "SampleBundle", "sample_seed", "synth_sample",
    "LossReport", "task_loss",
    "Network", "NetworkConfig", "NetworkOutputs", "build_network", "igdr_forward",
    "param_checksum", "parameter_count", "route_heads",
    "TrainConfig", "TrainResult", "heldout_line_error", "smoothed", "train", "train_step",
]
