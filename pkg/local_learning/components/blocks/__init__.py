"""Layers, partitioning, auxiliary heads and the coupling updates."""

from .coupling import ema_couple, local_forward, target_arrays, update_local
from .heads import AuxiliaryHead, build_aux_head
from .layers import Conv2d, Flatten, LayerSpec, Linear, MeanPool2d, ReLU, copy_layer, trace_shapes
from .model_file import ModelDescription, format_model, mlp_description, parse_model_text, read_model_file
from .network import LocalUnit, Network, build_network
from .partition import BlockPartition, parametric_count, partition, run_block, run_layers
